//! Command implementations for the `sumeter` binary.
//!
//! Each command writes its result to the supplied writer; diagnostics go to
//! stderr. Errors bubble up as `anyhow::Error` and become a non-zero exit.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sumeter_core::bench::{published_tables, reproduce_table, TableComparison};
use sumeter_core::energy::{sweep_csv, CrossoverAnalysis, DecisionPoint, DEFAULT_STEPS};
use sumeter_core::exact::{self, Rational};
use sumeter_core::format::{csv_real, grouped};
use sumeter_core::ingest::{aggregate, aggregate_csv, ingest_jobs_with_details, SystemConfig};
use sumeter_core::model::{ChargeReport, JobRequest, NodeUsage};
use sumeter_core::ModelId;

#[derive(Debug, Parser)]
#[command(
    name = "sumeter",
    version,
    about = "Service-unit accounting for CPU/GPU clusters"
)]
pub struct Cli {
    /// Output format for results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Charge one job under one model.
    Estimate(EstimateArgs),
    /// Charge one job under several models side by side.
    Compare(CompareArgs),
    /// Sweep GPU speedups and report which node each model favours.
    Crossover(CrossoverArgs),
    /// Regenerate the reference benchmark tables and diff them.
    Report(ReportArgs),
    /// Charge a job file and roll the charges up per project.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// System configuration file.
    #[arg(long, env = "SUMETER_CONFIG", default_value = "system.json")]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct JobArgs {
    #[arg(long)]
    pub partition: String,
    #[arg(long, default_value_t = 1)]
    pub nodes: u32,
    #[arg(long, default_value_t = 0)]
    pub cores_per_node: u32,
    #[arg(long, default_value_t = 0)]
    pub gpus_per_node: u32,
    #[arg(long, default_value_t = 0.0)]
    pub mem_gib_per_node: f64,
    /// Requested walltime.
    #[arg(long)]
    pub hours: f64,
    /// Extra resource use per node, as NAME=AMOUNT; repeatable.
    #[arg(long = "extra-per-node", value_parser = parse_extra)]
    pub extra_per_node: Vec<(String, f64)>,
}

fn parse_extra(s: &str) -> Result<(String, f64), String> {
    let (name, amount) = s.split_once('=').ok_or("expected NAME=AMOUNT")?;
    let amount = amount
        .parse()
        .map_err(|_| format!("bad amount {amount:?}"))?;
    Ok((name.to_string(), amount))
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub job: JobArgs,
    /// Charging model; defaults to the partition's configured model.
    #[arg(long)]
    pub model: Option<ModelId>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub job: JobArgs,
    #[arg(long, value_delimiter = ',', default_value = "energy,sm,peak-perf")]
    pub models: Vec<ModelId>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, value_delimiter = ',', default_value = "energy,sm,peak-perf")]
    pub models: Vec<ModelId>,
    #[arg(long, default_value_t = 1.0)]
    pub s_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = DEFAULT_STEPS)]
    pub steps: usize,
    /// CPU run time of the hypothetical application.
    #[arg(long, default_value_t = 1.0)]
    pub baseline_hours: f64,
    /// Defaults to the reference CPU partition.
    #[arg(long)]
    pub cpu_partition: Option<String>,
    /// Defaults to the first partition with GPUs.
    #[arg(long)]
    pub gpu_partition: Option<String>,
    /// Write the sweep as CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4), conflicts_with = "all", required_unless_present = "all")]
    pub table: Option<u8>,
    #[arg(long)]
    pub all: bool,
    /// Directory for one `table<N>.csv` per reproduced table.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub jobs: PathBuf,
    /// Optional per-node detail file.
    #[arg(long)]
    pub details: Option<PathBuf>,
    /// Charge every job under this model instead of its partition's.
    #[arg(long)]
    pub model: Option<ModelId>,
    /// Write the per-project CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Estimate(args) => estimate(args, cli.format, out),
        Command::Compare(args) => compare(args, cli.format, out),
        Command::Crossover(args) => crossover(args, cli.format, out),
        Command::Report(args) => report(args, cli.format, out),
        Command::Ingest(args) => ingest(args, cli.format, out),
    }
}

fn load(config: &ConfigArg) -> Result<SystemConfig> {
    SystemConfig::load(&config.config)
        .with_context(|| format!("loading {}", config.config.display()))
}

fn request<'c>(config: &'c SystemConfig, job: &JobArgs) -> Result<JobRequest<'c>> {
    let partition = config
        .partition(&job.partition)
        .ok_or_else(|| anyhow!("unknown partition {:?}", job.partition))?;
    let mut usage = NodeUsage::new(job.cores_per_node, job.gpus_per_node, job.mem_gib_per_node);
    for (name, amount) in &job.extra_per_node {
        usage = usage.with_extra(name.clone(), *amount);
    }
    Ok(JobRequest::uniform(partition, job.nodes, usage, job.hours)?)
}

/// SU amounts as tables print them: thousands separators, up to four decimals.
fn su(value: &Rational) -> String {
    let v = exact::to_f64(value);
    let text = grouped(v, 4);
    if v < 0.0 {
        format!("-{text}")
    } else {
        text
    }
}

fn num(value: &Rational) -> String {
    csv_real(exact::to_f64(value))
}

fn estimate(args: &EstimateArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let config = load(&args.config)?;
    let job = request(&config, &args.job)?;
    let report = config.charge(&job, args.model)?;
    match format {
        Format::Text => {
            writeln!(out, "{} SU", su(&report.total_su))?;
            writeln!(out, "  model:     {}", report.model_id)?;
            writeln!(out, "  partition: {}", args.job.partition)?;
            writeln!(
                out,
                "  weight:    {} SU per node-hour",
                su(&report.weight_used)
            )?;
            writeln!(out, "  walltime:  {} h", su(&report.walltime_hours))?;
            for (i, f) in report.per_node_fraction.iter().enumerate() {
                writeln!(out, "  node {i}:    fraction {f}")?;
            }
        }
        Format::Csv => {
            writeln!(
                out,
                "model,partition,nodes,weight,walltime_hours,fraction_sum,su"
            )?;
            writeln!(out, "{}", estimate_csv_row(&report, &args.job.partition))?;
        }
        Format::Json => {
            writeln!(out, "{}", serde_json::to_string_pretty(&report.summary())?)?;
        }
    }
    Ok(())
}

fn estimate_csv_row(report: &ChargeReport, partition: &str) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        report.model_id,
        partition,
        report.per_node_fraction.len(),
        num(&report.weight_used),
        num(&report.walltime_hours),
        num(&report.fraction_sum()),
        num(&report.total_su),
    )
}

fn compare(args: &CompareArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    if args.models.is_empty() {
        bail!("--models needs at least one model");
    }
    let config = load(&args.config)?;
    let job = request(&config, &args.job)?;
    let reports = args
        .models
        .iter()
        .map(|&id| {
            config
                .charge(&job, Some(id))
                .with_context(|| format!("model {id}"))
        })
        .collect::<Result<Vec<_>>>()?;
    match format {
        Format::Text => {
            writeln!(out, "{:<10} {:>14} {:>14}", "model", "weight", "SU")?;
            for r in &reports {
                writeln!(
                    out,
                    "{:<10} {:>14} {:>14}",
                    r.model_id.as_str(),
                    su(&r.weight_used),
                    su(&r.total_su)
                )?;
            }
        }
        Format::Csv => {
            writeln!(
                out,
                "model,partition,nodes,weight,walltime_hours,fraction_sum,su"
            )?;
            for r in &reports {
                writeln!(out, "{}", estimate_csv_row(r, &args.job.partition))?;
            }
        }
        Format::Json => {
            let summaries: Vec<_> = reports.iter().map(ChargeReport::summary).collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&summaries)?)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Threshold {
    model: ModelId,
    weight_cpu: f64,
    weight_gpu: f64,
    threshold: f64,
    exact: String,
}

#[derive(Serialize)]
struct CrossoverSummary {
    cpu_partition: String,
    gpu_partition: String,
    energy_break_even: f64,
    thresholds: Vec<Threshold>,
    /// `(lower, upper]`, absent when no band exists.
    efficiency_band: Option<(f64, f64)>,
}

fn crossover(args: &CrossoverArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    if args.models.is_empty() {
        bail!("--models needs at least one model");
    }
    let config = load(&args.config)?;
    let cpu = match &args.cpu_partition {
        Some(name) => config
            .partition(name)
            .ok_or_else(|| anyhow!("unknown partition {name:?}"))?,
        None => config
            .reference_cpu_partition()
            .ok_or_else(|| anyhow!("no CPU-only partition; pass --cpu-partition"))?,
    };
    let gpu = match &args.gpu_partition {
        Some(name) => config
            .partition(name)
            .ok_or_else(|| anyhow!("unknown partition {name:?}"))?,
        None => config
            .first_gpu_partition()
            .ok_or_else(|| anyhow!("no GPU partition; pass --gpu-partition"))?,
    };
    let analysis = CrossoverAnalysis::new(cpu.node_type(), gpu.node_type())?
        .with_baseline_hours(args.baseline_hours)?;
    let models = args
        .models
        .iter()
        .map(|&id| config.charge_model(id))
        .collect::<sumeter_core::Result<Vec<_>>>()?;

    let mut series: Vec<(ModelId, Vec<DecisionPoint>)> = Vec::new();
    let mut thresholds = Vec::new();
    for model in &models {
        series.push((
            model.id(),
            analysis.sweep(model, args.s_min, args.s_max, args.steps)?,
        ));
        let t = analysis.threshold(model)?;
        thresholds.push(Threshold {
            model: model.id(),
            weight_cpu: exact::to_f64(&model.node_hour_weight(cpu.node_type())?),
            weight_gpu: exact::to_f64(&model.node_hour_weight(gpu.node_type())?),
            threshold: exact::to_f64(&t),
            exact: t.to_string(),
        });
    }
    let csv = sweep_csv(&series)?;
    if let Some(path) = &args.out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    let band = if models.len() > 1 && args.models.contains(&ModelId::Energy) {
        analysis.efficiency_band(&models)?
    } else {
        None
    };
    let break_even = analysis.energy_break_even();
    let summary = CrossoverSummary {
        cpu_partition: cpu.name().to_string(),
        gpu_partition: gpu.name().to_string(),
        energy_break_even: exact::to_f64(&break_even),
        thresholds,
        efficiency_band: band
            .as_ref()
            .map(|b| (exact::to_f64(&b.lower), exact::to_f64(&b.upper))),
    };

    match format {
        Format::Csv => write!(out, "{csv}")?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?,
        Format::Text => {
            writeln!(
                out,
                "CPU partition {}, GPU partition {}",
                summary.cpu_partition, summary.gpu_partition
            )?;
            writeln!(
                out,
                "energy break-even speedup: {} ({break_even})",
                num(&break_even)
            )?;
            for t in &summary.thresholds {
                writeln!(
                    out,
                    "threshold {:<10} {} ({}), weights {} / {}",
                    t.model.as_str(),
                    csv_real(t.threshold),
                    t.exact,
                    grouped(t.weight_cpu, 4),
                    grouped(t.weight_gpu, 4),
                )?;
            }
            match &band {
                Some(b) => writeln!(
                    out,
                    "efficiency band: ({}, {}] - only the energy model picks the lower-energy GPU node",
                    num(&b.lower),
                    num(&b.upper)
                )?,
                None => writeln!(out, "efficiency band: none")?,
            }
            if let Some(path) = &args.out {
                writeln!(
                    out,
                    "sweep: {} rows written to {}",
                    args.steps,
                    path.display()
                )?;
            }
        }
    }
    Ok(())
}

fn report(args: &ReportArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let numbers: Vec<u8> = match args.table {
        Some(n) => vec![n],
        None => published_tables().iter().map(|t| t.number).collect(),
    };
    let tables = numbers
        .iter()
        .map(|&n| reproduce_table(n))
        .collect::<sumeter_core::Result<Vec<TableComparison>>>()?;

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for t in &tables {
            let path = dir.join(format!("table{}.csv", t.table));
            fs::write(&path, t.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    match format {
        Format::Text => {
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                write!(out, "{}", t.to_text())?;
                let ok = t.rows.iter().filter(|r| r.matches()).count();
                writeln!(out, "{ok}/{} rows match", t.rows.len())?;
            }
        }
        Format::Csv => {
            for (i, t) in tables.iter().enumerate() {
                for (j, line) in t.to_csv().lines().enumerate() {
                    match (i, j) {
                        (0, 0) => writeln!(out, "table,{line}")?,
                        (_, 0) => {}
                        _ => writeln!(out, "{},{line}", t.table)?,
                    }
                }
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&tables)?)?,
    }
    let failing: Vec<String> = tables
        .iter()
        .flat_map(|t| {
            t.rows
                .iter()
                .filter(|r| !r.matches())
                .map(move |r| format!("table {} {}", t.table, r.application))
        })
        .collect();
    if !failing.is_empty() {
        bail!(
            "rows differ from the published values: {}",
            failing.join(", ")
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct ProjectJson {
    project: String,
    jobs: usize,
    su: f64,
    partitions: Vec<PartitionJson>,
}

#[derive(Serialize)]
struct PartitionJson {
    partition: String,
    jobs: usize,
    su: f64,
}

fn ingest(args: &IngestArgs, format: Format, out: &mut dyn Write) -> Result<()> {
    let config = load(&args.config)?;
    let ingested = ingest_jobs_with_details(&args.jobs, args.details.as_ref(), &config)?;
    let totals = aggregate(&ingested.records, &config, args.model)?;

    let body = match format {
        Format::Text | Format::Csv => aggregate_csv(&totals),
        Format::Json => {
            let projects: Vec<ProjectJson> = totals
                .iter()
                .map(|(project, usage)| ProjectJson {
                    project: project.clone(),
                    jobs: usage.total.jobs,
                    su: exact::to_f64(&usage.total.su),
                    partitions: usage
                        .by_partition
                        .iter()
                        .map(|(p, t)| PartitionJson {
                            partition: p.clone(),
                            jobs: t.jobs,
                            su: exact::to_f64(&t.su),
                        })
                        .collect(),
                })
                .collect();
            serde_json::to_string_pretty(&projects)? + "\n"
        }
    };
    match &args.out {
        Some(path) => {
            fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?
        }
        None => write!(out, "{body}")?,
    }

    for e in ingested.rejected.iter().chain(&ingested.detail_errors) {
        eprintln!(
            "line {}{}: {}",
            e.line,
            e.job_id
                .as_deref()
                .map(|id| format!(" (job {id})"))
                .unwrap_or_default(),
            e.message
        );
    }
    eprintln!(
        "{} of {} rows charged, {} rejected",
        ingested.records.len(),
        ingested.total_rows,
        ingested.rejected.len()
    );
    if !ingested.is_clean() {
        bail!(
            "{} job rows and {} detail rows rejected",
            ingested.rejected.len(),
            ingested.detail_errors.len()
        );
    }
    Ok(())
}

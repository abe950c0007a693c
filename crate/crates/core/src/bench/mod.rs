//! One-hour benchmark charge tables for the reference test system.
//!
//! Each table charges `perf_ratio` CPU node-hours against one GPU node-hour
//! under a given model and reports the CPU/GPU cost ratio. Published values
//! are kept verbatim in [`published`] and compared row by row.

mod fixture;
pub mod published;

use serde::Serialize;

use crate::charge::{ChargeModel, ModelId};
use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};
use crate::format;
use crate::model::NodeType;

pub use crate::energy::ApplicationBenchmark;
pub use fixture::{embedded_fixture, test_system_config_json, test_system_nodes, Fixture};
pub use published::{published_table, published_tables, PublishedRow, PublishedTable};

/// Maximum distance between a computed cost ratio and the interval its
/// printed value stands for.
pub const COST_RATIO_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkTableRow {
    pub application: String,
    pub perf_ratio: u32,
    pub cpu_charge: Rational,
    pub gpu_charge: Rational,
    pub cost_ratio: Rational,
}

/// Charges for one hour of each application on `perf_ratio` CPU nodes and on
/// one GPU node.
pub fn build_table(
    model: &ChargeModel,
    apps: &[ApplicationBenchmark],
    cpu_node: &NodeType,
    gpu_node: &NodeType,
) -> Result<Vec<BenchmarkTableRow>> {
    if apps.is_empty() {
        return Err(ChargeError::invalid(
            "benchmark table needs at least one application",
        ));
    }
    if !gpu_node.has_gpus() {
        return Err(ChargeError::model(format!(
            "node type {} has no GPUs",
            gpu_node.name()
        )));
    }
    let cpu_weight = model.node_hour_weight(cpu_node)?;
    let gpu_charge = model.node_hour_weight(gpu_node)?;
    apps.iter()
        .map(|app| {
            if app.perf_ratio < 1 {
                return Err(ChargeError::invalid(format!(
                    "{}: perf_ratio must be >= 1",
                    app.name
                )));
            }
            let cpu_charge = &cpu_weight * exact::int(app.perf_ratio);
            Ok(BenchmarkTableRow {
                application: app.name.clone(),
                perf_ratio: app.perf_ratio,
                cost_ratio: &cpu_charge / &gpu_charge,
                cpu_charge,
                gpu_charge: gpu_charge.clone(),
            })
        })
        .collect()
}

/// Computed-versus-published values for one row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowComparison {
    pub application: String,
    pub perf_ratio: u32,
    pub cpu_charge: f64,
    pub published_cpu_charge: u64,
    pub gpu_charge: f64,
    /// GPU charge rounded to a whole unit, as tables show it.
    pub gpu_charge_display: u64,
    pub published_gpu_charge: u64,
    pub cost_ratio: f64,
    /// Cost ratio printed with the published value's number of decimals.
    pub cost_ratio_display: String,
    pub published_cost_ratio: String,
    /// Signed difference between the computed and published cost ratio.
    pub cost_ratio_delta: f64,
    /// Distance from the computed ratio to the interval covered by the
    /// published value at its printed precision (zero when inside).
    pub cost_ratio_excess: f64,
    pub cpu_charge_matches: bool,
    pub gpu_charge_matches: bool,
    pub cost_ratio_matches: bool,
}

impl RowComparison {
    pub fn matches(&self) -> bool {
        self.cpu_charge_matches && self.gpu_charge_matches && self.cost_ratio_matches
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableComparison {
    pub table: u8,
    pub model: ModelId,
    pub title: String,
    pub rows: Vec<RowComparison>,
}

impl TableComparison {
    pub fn matches(&self) -> bool {
        self.rows.iter().all(RowComparison::matches)
    }

    /// Aligned plain-text rendering with published values and deltas.
    pub fn to_text(&self) -> String {
        let mut out = format!("Table {} ({}): {}\n", self.table, self.model, self.title);
        out.push_str(&format!(
            "{:<18} {:>6} {:>10} {:>10} {:>8} {:>8} {:>9} {:>9} {:>5}\n",
            "Application", "Ratio", "CPU", "GPU", "Cost", "Printed", "Delta", "Excess", "OK"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<18} {:>6} {:>10} {:>10} {:>8} {:>8} {:>+9.4} {:>9.4} {:>5}\n",
                r.application,
                r.perf_ratio,
                format::grouped(r.cpu_charge, 2),
                format::grouped(r.gpu_charge_display as f64, 0),
                r.cost_ratio_display,
                r.published_cost_ratio,
                r.cost_ratio_delta,
                r.cost_ratio_excess,
                if r.matches() { "yes" } else { "NO" },
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "application,perf_ratio,cpu_charge,gpu_charge,cost_ratio,published_cpu_charge,\
             published_gpu_charge,published_cost_ratio,cost_ratio_delta,matches\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.application,
                r.perf_ratio,
                format::csv_real(r.cpu_charge),
                format::csv_real(r.gpu_charge),
                format::csv_real(r.cost_ratio),
                r.published_cpu_charge,
                r.published_gpu_charge,
                r.published_cost_ratio,
                format::csv_real(r.cost_ratio_delta),
                r.matches(),
            ));
        }
        out
    }
}

/// Compares computed rows against a published table, matching by application.
pub fn compare_with_published(
    table: &PublishedTable,
    rows: &[BenchmarkTableRow],
) -> Result<TableComparison> {
    let compared = table
        .rows
        .iter()
        .map(|golden| {
            let row = rows
                .iter()
                .find(|r| r.application == golden.application)
                .ok_or_else(|| {
                    ChargeError::invalid(format!("no computed row for {}", golden.application))
                })?;
            Ok(compare_row(golden, row))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableComparison {
        table: table.number,
        model: table.model,
        title: table.title.to_string(),
        rows: compared,
    })
}

fn compare_row(golden: &PublishedRow, row: &BenchmarkTableRow) -> RowComparison {
    let printed =
        exact::parse_decimal(golden.cost_ratio).expect("published ratios are decimal literals");
    let decimals = golden
        .cost_ratio
        .split_once('.')
        .map_or(0, |(_, f)| f.len());
    let half_unit =
        exact::ratio(1, 2) / exact::int(num_traits::pow(num_bigint::BigInt::from(10), decimals));
    let delta = &row.cost_ratio - &printed;
    let excess = {
        let distance = if exact::is_negative(&delta) {
            -delta.clone()
        } else {
            delta.clone()
        };
        let over = distance - half_unit;
        if exact::is_negative(&over) {
            exact::zero()
        } else {
            over
        }
    };
    let tolerance = exact::from_f64(COST_RATIO_TOLERANCE).expect("finite");
    let gpu_display = exact::round_integer(&row.gpu_charge);
    RowComparison {
        application: row.application.clone(),
        perf_ratio: row.perf_ratio,
        cpu_charge: exact::to_f64(&row.cpu_charge),
        published_cpu_charge: golden.cpu_charge,
        gpu_charge: exact::to_f64(&row.gpu_charge),
        gpu_charge_display: num_traits::ToPrimitive::to_u64(&gpu_display).unwrap_or(u64::MAX),
        published_gpu_charge: golden.gpu_charge,
        cost_ratio: exact::to_f64(&row.cost_ratio),
        cost_ratio_display: format!("{:.*}", decimals, exact::to_f64(&row.cost_ratio)),
        published_cost_ratio: golden.cost_ratio.to_string(),
        cost_ratio_delta: exact::to_f64(&delta),
        cost_ratio_excess: exact::to_f64(&excess),
        cpu_charge_matches: row.cpu_charge == exact::int(golden.cpu_charge),
        gpu_charge_matches: gpu_display == golden.gpu_charge.into(),
        cost_ratio_matches: excess <= tolerance,
    }
}

/// Builds and compares one published table on the embedded test system.
pub fn reproduce_table(number: u8) -> Result<TableComparison> {
    let table = published_table(number)
        .ok_or_else(|| ChargeError::invalid(format!("no table {number}; expected 2, 3 or 4")))?;
    let fixture = embedded_fixture();
    let (cpu_node, gpu_node) = test_system_nodes();
    let model = match table.model {
        ModelId::Energy => ChargeModel::EnergyBased,
        ModelId::Sm => ChargeModel::SmBased,
        ModelId::PeakPerf => ChargeModel::PeakPerfBased {
            reference_cpu_node: cpu_node.clone(),
        },
        other => {
            return Err(ChargeError::model(format!(
                "no published table for model {other}"
            )))
        }
    };
    let rows = build_table(&model, &fixture.apps, &cpu_node, &gpu_node)?;
    compare_with_published(table, &rows)
}

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::charge::ModelId;
use crate::error::Result as ChargeResult;
use crate::model::{ChargeReport, JobRequest, NodeUsage};

use super::{IngestError, SystemConfig};

/// Required header of the uniform-usage job file, in canonical order.
pub const JOB_COLUMNS: [&str; 8] = [
    "job_id",
    "project",
    "partition",
    "nodes",
    "cores_per_node",
    "gpus_per_node",
    "mem_gib_per_node",
    "elapsed_hours",
];

/// Required header of the optional per-node detail file. Any further column
/// names an extra resource.
pub const DETAIL_COLUMNS: [&str; 5] = ["job_id", "node", "cores", "gpus", "mem_gib"];

const EXTRA_SUFFIX: &str = "_per_node";

#[derive(Debug, Clone, PartialEq)]
pub struct JobRecord {
    pub job_id: String,
    pub project: String,
    pub partition: String,
    pub node_usage: Vec<NodeUsage>,
    pub elapsed_hours: f64,
    /// Line of the record in the job file.
    pub line: u64,
}

impl JobRecord {
    pub fn request<'c>(&self, config: &'c SystemConfig) -> ChargeResult<JobRequest<'c>> {
        let partition = config.partition(&self.partition).ok_or_else(|| {
            crate::error::ChargeError::invalid(format!("unknown partition {}", self.partition))
        })?;
        JobRequest::new(partition, self.node_usage.clone(), self.elapsed_hours)
    }

    /// Charge under `model`, or the partition's configured model.
    pub fn charge(
        &self,
        config: &SystemConfig,
        model: Option<ModelId>,
    ) -> ChargeResult<ChargeReport> {
        config.charge(&self.request(config)?, model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub job_id: Option<String>,
    pub message: String,
}

/// Outcome of reading a job file: every data row ends up either in
/// `records` or in `rejected`.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<JobRecord>,
    pub rejected: Vec<RowError>,
    pub total_rows: usize,
    /// Detail rows that could not be attached to any job.
    pub detail_errors: Vec<RowError>,
}

impl Ingested {
    pub fn is_clean(&self) -> bool {
        self.rejected.is_empty() && self.detail_errors.is_empty()
    }
}

pub fn ingest_jobs(path: impl AsRef<Path>, config: &SystemConfig) -> Result<Ingested, IngestError> {
    ingest_jobs_with_details(path, None::<&Path>, config)
}

pub fn ingest_jobs_with_details(
    path: impl AsRef<Path>,
    details: Option<impl AsRef<Path>>,
    config: &SystemConfig,
) -> Result<Ingested, IngestError> {
    let jobs = open(path.as_ref())?;
    match details {
        Some(d) => read_jobs(jobs, Some(open(d.as_ref())?), config),
        None => read_jobs(jobs, None::<File>, config),
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a job file and an optional per-node detail file, validating every
/// row against `config`.
pub fn read_jobs<R: Read, D: Read>(
    jobs: R,
    details: Option<D>,
    config: &SystemConfig,
) -> Result<Ingested, IngestError> {
    let mut out = Ingested::default();
    let mut detail_map = match details {
        Some(d) => read_details(d, &mut out.detail_errors)?,
        None => HashMap::new(),
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(jobs);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse(format!("jobs header: {e}")))?
        .clone();
    let columns = JobColumns::resolve(&headers)?;

    for result in reader.records() {
        out.total_rows += 1;
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                out.rejected.push(RowError {
                    line,
                    job_id: None,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let job_id = record.get(columns.job_id).unwrap_or_default().to_string();
        let detail = detail_map.remove(&job_id);
        match parse_job(&record, &columns, detail, config, line) {
            Ok(job) => out.records.push(job),
            Err(message) => out.rejected.push(RowError {
                line,
                job_id: (!job_id.is_empty()).then_some(job_id),
                message,
            }),
        }
    }

    let mut orphans: Vec<_> = detail_map.into_iter().collect();
    orphans.sort_by_key(|(_, rows)| rows.first().map_or(0, |r| r.line));
    for (job_id, rows) in orphans {
        out.detail_errors.push(RowError {
            line: rows.first().map_or(0, |r| r.line),
            job_id: Some(job_id),
            message: format!("{} detail row(s) for a job not in the job file", rows.len()),
        });
    }
    Ok(out)
}

struct JobColumns {
    job_id: usize,
    project: usize,
    partition: usize,
    nodes: usize,
    cores: usize,
    gpus: usize,
    mem: usize,
    elapsed: usize,
    extras: Vec<(String, usize)>,
}

impl JobColumns {
    fn resolve(headers: &csv::StringRecord) -> Result<Self, IngestError> {
        let find = |name: &str| headers.iter().position(|h| h == name);
        let missing: Vec<String> = JOB_COLUMNS
            .iter()
            .filter(|c| find(c).is_none())
            .map(|c| c.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(IngestError::MissingColumns(missing));
        }
        let mut extras = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if JOB_COLUMNS.contains(&h) {
                continue;
            }
            match h.strip_suffix(EXTRA_SUFFIX) {
                Some(resource) if !resource.is_empty() => extras.push((resource.to_string(), i)),
                _ => {
                    return Err(IngestError::Parse(format!(
                        "jobs header: unexpected column {h:?}"
                    )))
                }
            }
        }
        Ok(JobColumns {
            job_id: find("job_id").unwrap(),
            project: find("project").unwrap(),
            partition: find("partition").unwrap(),
            nodes: find("nodes").unwrap(),
            cores: find("cores_per_node").unwrap(),
            gpus: find("gpus_per_node").unwrap(),
            mem: find("mem_gib_per_node").unwrap(),
            elapsed: find("elapsed_hours").unwrap(),
            extras,
        })
    }
}

struct DetailRow {
    line: u64,
    node: u32,
    usage: NodeUsage,
}

fn read_details<D: Read>(
    details: D,
    errors: &mut Vec<RowError>,
) -> Result<HashMap<String, Vec<DetailRow>>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(details);
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse(format!("detail header: {e}")))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<String> = DETAIL_COLUMNS
        .iter()
        .filter(|c| find(c).is_none())
        .map(|c| format!("detail:{c}"))
        .collect();
    if !missing.is_empty() {
        return Err(IngestError::MissingColumns(missing));
    }
    let idx: Vec<usize> = DETAIL_COLUMNS.iter().map(|c| find(c).unwrap()).collect();
    let extras: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !DETAIL_COLUMNS.contains(h))
        .map(|(i, h)| (h.to_string(), i))
        .collect();

    let mut map: HashMap<String, Vec<DetailRow>> = HashMap::new();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError {
                    line: e.position().map_or(0, |p| p.line()),
                    job_id: None,
                    message: format!("detail: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let job_id = record.get(idx[0]).unwrap_or_default().to_string();
        let parsed = (|| -> Result<DetailRow, String> {
            let mut usage = NodeUsage::new(
                field(&record, idx[2], "cores")?,
                field(&record, idx[3], "gpus")?,
                field(&record, idx[4], "mem_gib")?,
            );
            for (name, i) in &extras {
                usage = usage.with_extra(name.clone(), field(&record, *i, name)?);
            }
            Ok(DetailRow {
                line,
                node: field(&record, idx[1], "node")?,
                usage,
            })
        })();
        match parsed {
            Ok(row) if !job_id.is_empty() => map.entry(job_id).or_default().push(row),
            Ok(_) => errors.push(RowError {
                line,
                job_id: None,
                message: "detail: empty job_id".into(),
            }),
            Err(message) => errors.push(RowError {
                line,
                job_id: Some(job_id),
                message: format!("detail: {message}"),
            }),
        }
    }
    Ok(map)
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    name: &str,
) -> Result<T, String> {
    let raw = record.get(index).unwrap_or_default();
    raw.parse()
        .map_err(|_| format!("{name}: cannot parse {raw:?}"))
}

fn parse_job(
    record: &csv::StringRecord,
    columns: &JobColumns,
    detail: Option<Vec<DetailRow>>,
    config: &SystemConfig,
    line: u64,
) -> Result<JobRecord, String> {
    let text = |i: usize| record.get(i).unwrap_or_default().to_string();
    let job_id = text(columns.job_id);
    if job_id.is_empty() {
        return Err("job_id is empty".into());
    }
    let project = text(columns.project);
    if project.is_empty() {
        return Err("project is empty".into());
    }
    let partition = text(columns.partition);
    if config.partition(&partition).is_none() {
        return Err(format!("unknown partition {partition:?}"));
    }
    let nodes: u32 = field(record, columns.nodes, "nodes")?;
    if nodes == 0 {
        return Err("nodes must be >= 1".into());
    }
    let elapsed_hours: f64 = field(record, columns.elapsed, "elapsed_hours")?;

    let node_usage = match detail {
        Some(mut rows) => {
            rows.sort_by_key(|r| r.node);
            let indices: Vec<u32> = rows.iter().map(|r| r.node).collect();
            if indices != (0..nodes).collect::<Vec<_>>() {
                return Err(format!(
                    "detail rows must cover nodes 0..{} exactly once, got {indices:?}",
                    nodes
                ));
            }
            rows.into_iter().map(|r| r.usage).collect()
        }
        None => {
            let mut usage = NodeUsage::new(
                field(record, columns.cores, "cores_per_node")?,
                field(record, columns.gpus, "gpus_per_node")?,
                field(record, columns.mem, "mem_gib_per_node")?,
            );
            for (name, i) in &columns.extras {
                let raw = record.get(*i).unwrap_or_default();
                if raw.is_empty() {
                    continue;
                }
                usage = usage.with_extra(name.clone(), field(record, *i, name)?);
            }
            vec![usage; nodes as usize]
        }
    };

    let job = JobRecord {
        job_id,
        project,
        partition,
        node_usage,
        elapsed_hours,
        line,
    };
    job.charge(config, None).map_err(|e| e.to_string())?;
    Ok(job)
}

/// Sum of charges over one project's jobs on one partition.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct UsageTotal {
    pub jobs: usize,
    pub su: crate::exact::Rational,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProjectUsage {
    pub total: UsageTotal,
    pub by_partition: BTreeMap<String, UsageTotal>,
}

/// Per-project charges, each job under its partition's configured model
/// (or `model` when given). Sums are exact, so the result does not depend
/// on record order.
pub fn aggregate(
    records: &[JobRecord],
    config: &SystemConfig,
    model: Option<ModelId>,
) -> ChargeResult<BTreeMap<String, ProjectUsage>> {
    let mut totals: BTreeMap<String, ProjectUsage> = BTreeMap::new();
    for record in records {
        let su = record.charge(config, model)?.total_su;
        let project = totals.entry(record.project.clone()).or_default();
        let part = project
            .by_partition
            .entry(record.partition.clone())
            .or_default();
        part.jobs += 1;
        part.su += &su;
        project.total.jobs += 1;
        project.total.su += su;
    }
    Ok(totals)
}

/// `project,partition,jobs,su` with one row per partition subtotal followed
/// by the project total (partition `*`).
pub fn aggregate_csv(totals: &BTreeMap<String, ProjectUsage>) -> String {
    use crate::exact::to_f64;
    use crate::format::csv_real;
    let mut out = String::from("project,partition,jobs,su\n");
    for (project, usage) in totals {
        for (partition, t) in &usage.by_partition {
            out.push_str(&format!(
                "{project},{partition},{},{}\n",
                t.jobs,
                csv_real(to_f64(&t.su))
            ));
        }
        out.push_str(&format!(
            "{project},*,{},{}\n",
            usage.total.jobs,
            csv_real(to_f64(&usage.total.su))
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::test_system_config_json;
    use crate::exact;

    fn config() -> SystemConfig {
        SystemConfig::from_json_str(test_system_config_json()).unwrap()
    }

    const HEADER: &str = "job_id,project,partition,nodes,cores_per_node,gpus_per_node,mem_gib_per_node,elapsed_hours\n";

    fn read(body: &str) -> Ingested {
        read_jobs(
            format!("{HEADER}{body}").as_bytes(),
            None::<&[u8]>,
            &config(),
        )
        .unwrap()
    }

    #[test]
    fn single_core_job_is_one_su() {
        let cfg = config();
        let got = read("j1,projA,cpu,1,1,0,2,1.0\n");
        assert!(got.is_clean());
        let totals = aggregate(&got.records, &cfg, None).unwrap();
        assert_eq!(totals["projA"].total.su, exact::one());
    }

    #[test]
    fn row_level_errors_are_collected() {
        let got = read(
            "j1,projA,cpu,1,40,0,2,1.0\n\
             j2,projA,cpu,1,1,0,2,0\n\
             j3,projA,nope,1,1,0,2,1\n\
             j4,projA,cpu,1,x,0,2,1\n\
             j5,projA,cpu,1,1,0\n\
             j6,projA,cpu,1,0,0,0,1\n",
        );
        assert_eq!(got.total_rows, 6);
        assert_eq!(got.records.len(), 1);
        assert_eq!(got.records[0].job_id, "j2");
        assert_eq!(got.rejected.len(), 5);
        assert!(got.rejected[0].message.contains("capacity"));
        assert_eq!(got.rejected[0].line, 2);
        assert_eq!(got.records.len() + got.rejected.len(), got.total_rows);
    }

    #[test]
    fn zero_elapsed_is_valid_and_free() {
        let cfg = config();
        let got = read("j1,projA,cpu,1,1,0,2,0\n");
        assert!(got.is_clean());
        assert_eq!(
            aggregate(&got.records, &cfg, None).unwrap()["projA"]
                .total
                .su,
            exact::zero()
        );
    }

    #[test]
    fn missing_columns_are_fatal() {
        let err = read_jobs(
            "job_id,project\nj1,p\n".as_bytes(),
            None::<&[u8]>,
            &config(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MissingColumns(ref c) if c.len() == 6));
    }

    #[test]
    fn unexpected_columns_are_fatal() {
        let text = format!("{},colour\n", HEADER.trim_end());
        assert!(read_jobs(text.as_bytes(), None::<&[u8]>, &config()).is_err());
    }

    #[test]
    fn crlf_accepted() {
        let text = HEADER.replace('\n', "\r\n") + "j1,projA,cpu,1,1,0,2,1.0\r\n";
        let got = read_jobs(text.as_bytes(), None::<&[u8]>, &config()).unwrap();
        assert!(got.is_clean());
        assert_eq!(got.records.len(), 1);
    }

    #[test]
    fn aggregation_examples() {
        let cfg = config();
        assert!(aggregate(&[], &cfg, None).unwrap().is_empty());
        let got = read(
            "a,projA,cpu,1,1,0,2,1\n\
             b,projA,cpu,1,1,0,2,1\n\
             c,projB,gpu,1,0,4,0,1\n\
             d,projB,cpu,2,36,0,0,0.5\n",
        );
        let totals = aggregate(&got.records, &cfg, None).unwrap();
        assert_eq!(totals["projA"].total.su, exact::int(2));
        let b = &totals["projB"];
        assert_eq!(b.by_partition["gpu"].su, exact::int(192));
        assert_eq!(b.by_partition["cpu"].su, exact::int(36));
        let subtotal: exact::Rational = b.by_partition.values().map(|t| t.su.clone()).sum();
        assert_eq!(subtotal, b.total.su);
        let csv = aggregate_csv(&totals);
        assert_eq!(
            csv,
            "project,partition,jobs,su\nprojA,cpu,2,2\nprojA,*,2,2\nprojB,cpu,1,36\nprojB,gpu,1,192\nprojB,*,2,228\n"
        );
    }

    #[test]
    fn detail_file_overrides_uniform_usage() {
        let cfg = config();
        let jobs = format!("{HEADER}h1,projA,cpu,2,,,,1\nu1,projA,cpu,1,1,0,1,1\n");
        let details = "job_id,node,cores,gpus,mem_gib\nh1,1,1,0,256\nh1,0,18,0,1\n";
        let got = read_jobs(jobs.as_bytes(), Some(details.as_bytes()), &cfg).unwrap();
        assert!(got.is_clean(), "{:?}", got.rejected);
        let h1 = &got.records[0];
        assert_eq!(h1.node_usage[0].cores_used, 18);
        // 1/2 + 1 node-shares at 36 SU/node-hour
        assert_eq!(h1.charge(&cfg, None).unwrap().total_su, exact::int(54));
    }

    #[test]
    fn detail_mismatches_reported() {
        let cfg = config();
        let jobs = format!("{HEADER}h1,projA,cpu,2,,,,1\n");
        let details = "job_id,node,cores,gpus,mem_gib\nh1,0,1,0,1\nzz,0,1,0,1\n";
        let got = read_jobs(jobs.as_bytes(), Some(details.as_bytes()), &cfg).unwrap();
        assert_eq!(got.rejected.len(), 1);
        assert!(got.rejected[0].message.contains("cover nodes"));
        assert_eq!(got.detail_errors.len(), 1);
        assert_eq!(got.detail_errors[0].job_id.as_deref(), Some("zz"));
    }

    #[test]
    fn extra_resource_columns() {
        let text = r#"{
            "processors": [
                {"name": "c", "kind": "cpu", "cores": 40, "tdp_watts": 250, "peak_flops": 1e12}
            ],
            "partitions": [
                {"name": "io", "node_count": 4, "cpus": ["c"], "memory_total_gib": 384,
                 "extra_resources": [{"name": "nvme", "capacity": 3600}]}
            ]
        }"#;
        let cfg = SystemConfig::from_json_str(text).unwrap();
        let jobs = format!(
            "{},nvme_per_node\nj,p,io,1,1,0,1,1,1800\n",
            HEADER.trim_end()
        );
        let got = read_jobs(jobs.as_bytes(), None::<&[u8]>, &cfg).unwrap();
        assert!(got.is_clean(), "{:?}", got.rejected);
        assert_eq!(
            got.records[0].charge(&cfg, None).unwrap().total_su,
            exact::int(20)
        );
    }
}

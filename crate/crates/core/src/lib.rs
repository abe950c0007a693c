//! Service-unit accounting for heterogeneous CPU/GPU supercomputers.
//!
//! Jobs are charged per node by the largest fraction of any resource they
//! reserve (cores, GPUs, memory in core-sized steps, extra resources), times
//! a node-hour weight and the elapsed time. CPU nodes are weighted by their
//! core count, so one core-hour costs one SU; GPU nodes are weighted by the
//! ratio of GPU to CPU thermal design power.
//!
//! Alongside that model the crate provides SM-based, peak-performance,
//! Titan-style and Puhti billing-unit models for comparison, a CPU-vs-GPU
//! crossover analysis, reproduction of the reference benchmark tables, and
//! job-file ingestion with per-project rollups.

pub mod bench;
pub mod charge;
pub mod energy;
mod error;
pub mod exact;
pub mod format;
pub mod ingest;
pub mod model;

pub use charge::{ChargeModel, ModelId};
pub use error::{ChargeError, Result};
pub use exact::Rational;
pub use model::{
    job_cost, ChargeReport, JobRequest, NodeType, NodeUsage, Partition, ProcessorSpec,
};

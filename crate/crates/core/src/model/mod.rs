//! Hardware inventory, job requests and the energy-based cost function.
//!
//! A job is charged `w * t * sum_i max(f_c, f_g, f_m, ...)` over the nodes it
//! occupies. Memory is discretised into core-sized steps and GPU partitions
//! are weighted by the ratio of GPU to CPU TDP.

mod cost;
mod hardware;
mod usage;

pub(crate) use cost::{assemble, charged_fractions};
pub use cost::{
    energy_node_weight, exclusive_node_charge, gpu_partition_weight, job_cost, shared_node_charge,
    watt_to_su_rate, ChargeReport, ChargeSummary,
};
pub use hardware::{ExtraResource, NodeType, Partition, ProcessorKind, ProcessorSpec};
pub use usage::{
    core_equivalent, core_fraction, extra_fractions, gpu_fraction, memory_fraction, node_fraction,
    JobRequest, NodeUsage,
};

use serde::Serialize;

use crate::charge::ModelId;
use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};

use super::hardware::{NodeType, ProcessorKind, ProcessorSpec};
use super::usage::{node_fraction, JobRequest, NodeUsage};

/// Result of charging one job under one model.
///
/// `total_su == weight_used * walltime_hours * sum(per_node_fraction)` holds
/// exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeReport {
    pub model_id: ModelId,
    pub total_su: Rational,
    pub per_node_fraction: Vec<Rational>,
    pub weight_used: Rational,
    pub walltime_hours: Rational,
}

impl ChargeReport {
    pub fn total_su_f64(&self) -> f64 {
        exact::to_f64(&self.total_su)
    }

    pub fn weight_f64(&self) -> f64 {
        exact::to_f64(&self.weight_used)
    }

    pub fn fraction_sum(&self) -> Rational {
        self.per_node_fraction.iter().sum()
    }

    /// Flattened view for JSON output.
    pub fn summary(&self) -> ChargeSummary {
        ChargeSummary {
            model: self.model_id.as_str().to_string(),
            total_su: self.total_su_f64(),
            weight_su_per_node_hour: self.weight_f64(),
            walltime_hours: exact::to_f64(&self.walltime_hours),
            per_node_fraction: self.per_node_fraction.iter().map(exact::to_f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargeSummary {
    pub model: String,
    pub total_su: f64,
    pub weight_su_per_node_hour: f64,
    pub walltime_hours: f64,
    pub per_node_fraction: Vec<f64>,
}

/// Charges a job with its partition's cached weight:
/// `w * t * sum_i max(f_c, f_g, f_m, f_extra...)`.
pub fn job_cost(job: &JobRequest<'_>) -> Result<ChargeReport> {
    let partition = job.partition();
    shared_node_charge(job, partition.model(), partition.weight().clone())
}

/// Per-node max-of-fractions charging at an arbitrary node-hour weight.
pub fn shared_node_charge(
    job: &JobRequest<'_>,
    model_id: ModelId,
    weight: Rational,
) -> Result<ChargeReport> {
    let node = job.partition().node_type();
    let fractions = charged_fractions(job.per_node_usage(), node, |_, share| Ok(share))?;
    Ok(assemble(job, model_id, weight, fractions))
}

/// Whole-node charging: every allocated node counts as fully used.
pub fn exclusive_node_charge(
    job: &JobRequest<'_>,
    model_id: ModelId,
    weight: Rational,
) -> Result<ChargeReport> {
    let node = job.partition().node_type();
    let fractions = charged_fractions(job.per_node_usage(), node, |_, _| Ok(exact::one()))?;
    Ok(assemble(job, model_id, weight, fractions))
}

pub(crate) fn charged_fractions(
    usages: &[NodeUsage],
    node: &NodeType,
    charge_share: impl Fn(&NodeUsage, Rational) -> Result<Rational>,
) -> Result<Vec<Rational>> {
    usages
        .iter()
        .enumerate()
        .map(|(i, usage)| {
            // Validates the usage against the node even when the share is unused.
            let share = node_fraction(usage, node)?;
            if share <= exact::zero() {
                return Err(ChargeError::invalid(format!(
                    "node {i} requests no resources"
                )));
            }
            charge_share(usage, share)
        })
        .collect()
}

pub(crate) fn assemble(
    job: &JobRequest<'_>,
    model_id: ModelId,
    weight: Rational,
    per_node_fraction: Vec<Rational>,
) -> ChargeReport {
    let sum: Rational = per_node_fraction.iter().sum();
    let total_su = &weight * job.walltime() * sum;
    ChargeReport {
        model_id,
        total_su,
        per_node_fraction,
        weight_used: weight,
        walltime_hours: job.walltime().clone(),
    }
}

/// SU charged per watt-hour: the CPU's core count over its TDP.
pub fn watt_to_su_rate(cpu: &ProcessorSpec) -> Result<Rational> {
    if cpu.kind() != ProcessorKind::Cpu {
        return Err(ChargeError::invalid(format!("{} is not a CPU", cpu.name())));
    }
    Ok(exact::int(cpu.cores()) / cpu.tdp()?)
}

/// Node-hour weight of a GPU node: `(sum GPU TDP / sum CPU TDP) * C`.
pub fn gpu_partition_weight(node: &NodeType) -> Result<Rational> {
    if !node.has_gpus() {
        return Err(ChargeError::model(format!(
            "node type {} has no GPUs; CPU partitions are weighted by core count",
            node.name()
        )));
    }
    Ok(node.cumulative_gpu_tdp() / node.cumulative_cpu_tdp() * exact::int(node.total_cores()))
}

/// Energy-model weight for any node: `C` without GPUs, the GPU weight with.
pub fn energy_node_weight(node: &NodeType) -> Result<Rational> {
    if node.has_gpus() {
        gpu_partition_weight(node)
    } else {
        Ok(exact::int(node.total_cores()))
    }
}

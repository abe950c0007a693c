//! Rival accounting models behind one interface.
//!
//! The SM-based and peak-performance models reuse the max-of-fractions cost
//! function with a different GPU node-hour weight. Titan charges whole nodes.
//! Puhti billing units add up per-resource rates.

mod puhti;
mod weights;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};
use crate::model::{
    assemble, charged_fractions, energy_node_weight, exclusive_node_charge, shared_node_charge,
    ChargeReport, JobRequest, NodeType,
};

pub use puhti::{puhti_bu, puhti_tdp_equivalence, tdp_ratio_per_core, PuhtiRates};
pub use weights::{peak_perf_weight, sm_based_weight, titan_node_charge};

/// Model identifiers as used in configuration files and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "energy")]
    Energy,
    #[serde(rename = "sm")]
    Sm,
    #[serde(rename = "peak-perf")]
    PeakPerf,
    #[serde(rename = "titan")]
    Titan,
    #[serde(rename = "puhti")]
    Puhti,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::Energy,
        ModelId::Sm,
        ModelId::PeakPerf,
        ModelId::Titan,
        ModelId::Puhti,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Energy => "energy",
            ModelId::Sm => "sm",
            ModelId::PeakPerf => "peak-perf",
            ModelId::Titan => "titan",
            ModelId::Puhti => "puhti",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = ChargeError;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim())
            .ok_or_else(|| {
                ChargeError::invalid(format!(
                    "unknown model id {s:?} (expected one of energy, sm, peak-perf, titan, puhti)"
                ))
            })
    }
}

/// A charging model with its parameters.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum ChargeModel {
    /// GPU weight from the GPU-to-CPU TDP ratio.
    EnergyBased,
    /// GPU weight equal to the node's SM count.
    SmBased,
    /// GPU weight from the peak-FLOPs ratio against a reference CPU node.
    PeakPerfBased { reference_cpu_node: NodeType },
    /// Exclusive nodes charged at cores plus SMs per node-hour.
    Titan,
    /// Per-resource billing units.
    PuhtiBu(PuhtiRates),
}

impl ChargeModel {
    pub fn id(&self) -> ModelId {
        match self {
            ChargeModel::EnergyBased => ModelId::Energy,
            ChargeModel::SmBased => ModelId::Sm,
            ChargeModel::PeakPerfBased { .. } => ModelId::PeakPerf,
            ChargeModel::Titan => ModelId::Titan,
            ChargeModel::PuhtiBu(_) => ModelId::Puhti,
        }
    }

    /// Units charged for one hour of one whole node.
    ///
    /// For the max-of-fractions models a CPU-only node is always worth its
    /// core count.
    pub fn node_hour_weight(&self, node: &NodeType) -> Result<Rational> {
        let cores = exact::int(node.total_cores());
        match self {
            ChargeModel::EnergyBased => energy_node_weight(node),
            ChargeModel::SmBased if node.has_gpus() => sm_based_weight(node),
            ChargeModel::PeakPerfBased { reference_cpu_node } if node.has_gpus() => {
                peak_perf_weight(node, reference_cpu_node)
            }
            ChargeModel::SmBased | ChargeModel::PeakPerfBased { .. } => Ok(cores),
            ChargeModel::Titan => {
                let sms = if node.has_gpus() {
                    node.total_streaming_multiprocessors().ok_or_else(|| {
                        ChargeError::invalid(format!(
                            "node type {}: a GPU has no SM count",
                            node.name()
                        ))
                    })?
                } else {
                    0
                };
                Ok(exact::int(titan_node_charge(
                    u64::from(node.total_cores()),
                    sms,
                )))
            }
            ChargeModel::PuhtiBu(rates) => rates.node_hour_rate(node),
        }
    }

    /// Charges a job under this model. The partition's cached weight is
    /// ignored; the weight comes from this model applied to the node type.
    pub fn charge(&self, job: &JobRequest<'_>) -> Result<ChargeReport> {
        let node = job.partition().node_type();
        let weight = self.node_hour_weight(node)?;
        match self {
            ChargeModel::Titan => exclusive_node_charge(job, self.id(), weight),
            ChargeModel::PuhtiBu(rates) => {
                let fractions = charged_fractions(job.per_node_usage(), node, |usage, _| {
                    Ok(rates.usage_rate(usage, node)? / &weight)
                })?;
                Ok(assemble(job, self.id(), weight, fractions))
            }
            _ => shared_node_charge(job, self.id(), weight),
        }
    }
}

use num_traits::Zero;

use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};

use super::hardware::{NodeType, Partition};

/// Resources a job requests on one node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeUsage {
    pub cores_used: u32,
    pub gpus_used: u32,
    pub memory_used_gib: f64,
    pub extra_used: Vec<(String, f64)>,
}

impl NodeUsage {
    pub fn new(cores_used: u32, gpus_used: u32, memory_used_gib: f64) -> Self {
        NodeUsage {
            cores_used,
            gpus_used,
            memory_used_gib,
            extra_used: Vec::new(),
        }
    }

    pub fn with_extra(mut self, name: impl Into<String>, amount: f64) -> Self {
        self.extra_used.push((name.into(), amount));
        self
    }

    pub fn extra_amount(&self, name: &str) -> f64 {
        self.extra_used
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, a)| *a)
            .sum()
    }
}

/// A job bound to a single partition, with one usage entry per allocated node.
#[derive(Debug, Clone)]
pub struct JobRequest<'a> {
    partition: &'a Partition,
    per_node_usage: Vec<NodeUsage>,
    walltime_hours: f64,
    walltime: Rational,
}

impl<'a> JobRequest<'a> {
    pub fn new(
        partition: &'a Partition,
        per_node_usage: Vec<NodeUsage>,
        walltime_hours: f64,
    ) -> Result<Self> {
        if per_node_usage.is_empty() {
            return Err(ChargeError::invalid("job requests no nodes"));
        }
        let available = partition.node_count();
        if per_node_usage.len() as u64 > u64::from(available) {
            return Err(ChargeError::capacity(
                "nodes",
                per_node_usage.len() as f64,
                f64::from(available),
            ));
        }
        let walltime = exact::from_f64(walltime_hours)
            .filter(|t| !exact::is_negative(t))
            .ok_or_else(|| {
                ChargeError::invalid(format!("walltime must be >= 0 hours, got {walltime_hours}"))
            })?;
        Ok(JobRequest {
            partition,
            per_node_usage,
            walltime_hours,
            walltime,
        })
    }

    /// The same usage on each of `nodes` nodes.
    pub fn uniform(
        partition: &'a Partition,
        nodes: u32,
        usage: NodeUsage,
        walltime_hours: f64,
    ) -> Result<Self> {
        JobRequest::new(partition, vec![usage; nodes as usize], walltime_hours)
    }

    pub fn partition(&self) -> &'a Partition {
        self.partition
    }

    pub fn per_node_usage(&self) -> &[NodeUsage] {
        &self.per_node_usage
    }

    pub fn node_count(&self) -> usize {
        self.per_node_usage.len()
    }

    pub fn walltime_hours(&self) -> f64 {
        self.walltime_hours
    }

    pub fn walltime(&self) -> &Rational {
        &self.walltime
    }
}

/// Fraction of the node's cores requested.
pub fn core_fraction(usage: &NodeUsage, node: &NodeType) -> Result<Rational> {
    let total = node.total_cores();
    if usage.cores_used > total {
        return Err(ChargeError::capacity(
            "cores",
            f64::from(usage.cores_used),
            f64::from(total),
        ));
    }
    Ok(exact::ratio(usage.cores_used, total))
}

/// Fraction of the node's GPUs requested; zero on GPU-less nodes.
pub fn gpu_fraction(usage: &NodeUsage, node: &NodeType) -> Result<Rational> {
    let total = node.gpu_count();
    if usage.gpus_used > total {
        return Err(ChargeError::capacity(
            "gpus",
            f64::from(usage.gpus_used),
            f64::from(total),
        ));
    }
    if total == 0 {
        return Ok(exact::zero());
    }
    Ok(exact::ratio(usage.gpus_used, total))
}

/// Memory expressed as a whole number of cores: `ceil(used / (total / C))`.
///
/// Zero when no memory is requested.
pub fn core_equivalent(usage: &NodeUsage, node: &NodeType) -> Result<u32> {
    let used = exact::from_f64(usage.memory_used_gib)
        .filter(|m| !exact::is_negative(m))
        .ok_or_else(|| {
            ChargeError::invalid(format!(
                "memory_used_gib must be a finite value >= 0, got {}",
                usage.memory_used_gib
            ))
        })?;
    if used.is_zero() {
        return Ok(0);
    }
    if &used > node.memory_total() {
        return Err(ChargeError::capacity(
            "memory_gib",
            usage.memory_used_gib,
            node.memory_total_gib(),
        ));
    }
    let cores = used * exact::int(node.total_cores()) / node.memory_total();
    // used <= total, so the ceiling is at most C.
    let steps = exact::ceil_u64(&cores).expect("bounded by core count");
    Ok(steps as u32)
}

/// Memory fraction discretised to multiples of `1/C`.
pub fn memory_fraction(usage: &NodeUsage, node: &NodeType) -> Result<Rational> {
    let steps = core_equivalent(usage, node)?;
    Ok(exact::ratio(steps, node.total_cores()))
}

/// `amount / capacity` for each extra resource the usage names, in request order.
pub fn extra_fractions(usage: &NodeUsage, node: &NodeType) -> Result<Vec<Rational>> {
    usage
        .extra_used
        .iter()
        .map(|(name, amount)| {
            let capacity = node.extra_capacity(name).ok_or_else(|| {
                ChargeError::invalid(format!(
                    "node type {} has no resource named {name}",
                    node.name()
                ))
            })?;
            let requested = exact::from_f64(*amount)
                .filter(|a| !exact::is_negative(a))
                .ok_or_else(|| {
                    ChargeError::invalid(format!("{name} amount must be >= 0, got {amount}"))
                })?;
            if &requested > capacity {
                return Err(ChargeError::capacity(
                    name.clone(),
                    *amount,
                    exact::to_f64(capacity),
                ));
            }
            Ok(requested / capacity)
        })
        .collect()
}

/// Share of the node the job occupies: the largest of its resource fractions.
pub fn node_fraction(usage: &NodeUsage, node: &NodeType) -> Result<Rational> {
    let mut largest = core_fraction(usage, node)?;
    let others = [gpu_fraction(usage, node)?, memory_fraction(usage, node)?];
    for f in others.into_iter().chain(extra_fractions(usage, node)?) {
        if f > largest {
            largest = f;
        }
    }
    Ok(largest)
}

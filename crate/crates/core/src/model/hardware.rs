use serde::{Deserialize, Serialize};

use crate::charge::ModelId;
use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessorKind {
    Cpu,
    Gpu,
}

/// A CPU or GPU model as listed in a processor summary table.
///
/// CPUs carry a core count. GPUs may carry a streaming-multiprocessor count;
/// only the SM-based and Titan-style models need it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessorSpec {
    name: String,
    kind: ProcessorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cores: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    streaming_multiprocessors: Option<u32>,
    tdp_watts: f64,
    peak_flops: f64,
}

impl ProcessorSpec {
    pub fn cpu(
        name: impl Into<String>,
        cores: u32,
        tdp_watts: f64,
        peak_flops: f64,
    ) -> Result<Self> {
        let spec = ProcessorSpec {
            name: name.into(),
            kind: ProcessorKind::Cpu,
            cores: Some(cores),
            streaming_multiprocessors: None,
            tdp_watts,
            peak_flops,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gpu(
        name: impl Into<String>,
        streaming_multiprocessors: Option<u32>,
        tdp_watts: f64,
        peak_flops: f64,
    ) -> Result<Self> {
        let spec = ProcessorSpec {
            name: name.into(),
            kind: ProcessorKind::Gpu,
            cores: None,
            streaming_multiprocessors,
            tdp_watts,
            peak_flops,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the invariants a deserialized spec may violate.
    pub fn validate(&self) -> Result<()> {
        let who = &self.name;
        positive(&format!("{who}: tdp_watts"), self.tdp_watts)?;
        positive(&format!("{who}: peak_flops"), self.peak_flops)?;
        match self.kind {
            ProcessorKind::Cpu => {
                if self.cores.unwrap_or(0) < 1 {
                    return Err(ChargeError::invalid(format!(
                        "{who}: a CPU needs cores >= 1"
                    )));
                }
                if self.streaming_multiprocessors.is_some() {
                    return Err(ChargeError::invalid(format!(
                        "{who}: streaming_multiprocessors given for a CPU"
                    )));
                }
            }
            ProcessorKind::Gpu => {
                if self.cores.is_some() {
                    return Err(ChargeError::invalid(format!(
                        "{who}: cores given for a GPU"
                    )));
                }
                if self.streaming_multiprocessors == Some(0) {
                    return Err(ChargeError::invalid(format!(
                        "{who}: streaming_multiprocessors must be >= 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ProcessorKind {
        self.kind
    }

    /// Core count; zero for GPUs.
    pub fn cores(&self) -> u32 {
        self.cores.unwrap_or(0)
    }

    pub fn streaming_multiprocessors(&self) -> Option<u32> {
        self.streaming_multiprocessors
    }

    pub fn tdp_watts(&self) -> f64 {
        self.tdp_watts
    }

    pub fn peak_flops(&self) -> f64 {
        self.peak_flops
    }

    pub fn tdp(&self) -> Result<Rational> {
        positive(&format!("{}: tdp_watts", self.name), self.tdp_watts)
    }

    pub fn flops(&self) -> Result<Rational> {
        positive(&format!("{}: peak_flops", self.name), self.peak_flops)
    }
}

/// A per-node consumable beyond cores, GPUs and memory (e.g. node-local NVMe).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraResource {
    pub name: String,
    pub capacity: f64,
}

/// One compute-node flavour.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeType {
    name: String,
    cpus: Vec<ProcessorSpec>,
    gpus: Vec<ProcessorSpec>,
    memory_total_gib: f64,
    extra_resources: Vec<ExtraResource>,

    total_cores: u32,
    memory_total: Rational,
    cpu_tdp: Rational,
    gpu_tdp: Rational,
    cpu_flops: Rational,
    gpu_flops: Rational,
    extra_capacity: Vec<Rational>,
}

impl NodeType {
    pub fn new(
        name: impl Into<String>,
        cpus: Vec<ProcessorSpec>,
        gpus: Vec<ProcessorSpec>,
        memory_total_gib: f64,
    ) -> Result<Self> {
        let name = name.into();
        if cpus.is_empty() {
            return Err(ChargeError::invalid(format!("node type {name}: no CPUs")));
        }
        for cpu in &cpus {
            cpu.validate()?;
            if cpu.kind() != ProcessorKind::Cpu {
                return Err(ChargeError::invalid(format!(
                    "node type {name}: {} listed as CPU is a GPU",
                    cpu.name()
                )));
            }
        }
        for gpu in &gpus {
            gpu.validate()?;
            if gpu.kind() != ProcessorKind::Gpu {
                return Err(ChargeError::invalid(format!(
                    "node type {name}: {} listed as GPU is a CPU",
                    gpu.name()
                )));
            }
        }
        let memory_total = positive(
            &format!("node type {name}: memory_total_gib"),
            memory_total_gib,
        )?;
        let total_cores = cpus
            .iter()
            .try_fold(0u32, |acc, c| acc.checked_add(c.cores()))
            .ok_or_else(|| {
                ChargeError::invalid(format!("node type {name}: core count overflow"))
            })?;

        let sum = |list: &[ProcessorSpec], f: fn(&ProcessorSpec) -> Result<Rational>| {
            list.iter()
                .try_fold(exact::zero(), |acc, p| Ok::<_, ChargeError>(acc + f(p)?))
        };
        let cpu_tdp = sum(&cpus, ProcessorSpec::tdp)?;
        let gpu_tdp = sum(&gpus, ProcessorSpec::tdp)?;
        let cpu_flops = sum(&cpus, ProcessorSpec::flops)?;
        let gpu_flops = sum(&gpus, ProcessorSpec::flops)?;

        Ok(NodeType {
            name,
            cpus,
            gpus,
            memory_total_gib,
            extra_resources: Vec::new(),
            total_cores,
            memory_total,
            cpu_tdp,
            gpu_tdp,
            cpu_flops,
            gpu_flops,
            extra_capacity: Vec::new(),
        })
    }

    /// Adds a named per-node resource that jobs may request.
    pub fn with_extra_resource(mut self, name: impl Into<String>, capacity: f64) -> Result<Self> {
        let name = name.into();
        if self.extra_resources.iter().any(|r| r.name == name) {
            return Err(ChargeError::invalid(format!(
                "node type {}: duplicate resource {name}",
                self.name
            )));
        }
        let exact_capacity = positive(
            &format!("node type {}: {name} capacity", self.name),
            capacity,
        )?;
        self.extra_resources.push(ExtraResource { name, capacity });
        self.extra_capacity.push(exact_capacity);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cpus(&self) -> &[ProcessorSpec] {
        &self.cpus
    }

    pub fn gpus(&self) -> &[ProcessorSpec] {
        &self.gpus
    }

    pub fn has_gpus(&self) -> bool {
        !self.gpus.is_empty()
    }

    pub fn gpu_count(&self) -> u32 {
        self.gpus.len() as u32
    }

    /// Total cores over all CPUs on the node.
    pub fn total_cores(&self) -> u32 {
        self.total_cores
    }

    pub fn memory_total_gib(&self) -> f64 {
        self.memory_total_gib
    }

    pub fn memory_total(&self) -> &Rational {
        &self.memory_total
    }

    /// Memory attributed to each core: total memory over total cores.
    pub fn memory_per_core(&self) -> Rational {
        &self.memory_total / exact::int(self.total_cores)
    }

    pub fn extra_resources(&self) -> &[ExtraResource] {
        &self.extra_resources
    }

    pub fn extra_capacity(&self, name: &str) -> Option<&Rational> {
        self.extra_resources
            .iter()
            .position(|r| r.name == name)
            .map(|i| &self.extra_capacity[i])
    }

    /// Sum of TDP over all CPUs, in watts.
    pub fn cumulative_cpu_tdp(&self) -> &Rational {
        &self.cpu_tdp
    }

    /// Sum of TDP over all GPUs, in watts. Zero on CPU-only nodes.
    pub fn cumulative_gpu_tdp(&self) -> &Rational {
        &self.gpu_tdp
    }

    pub fn cpu_peak_flops(&self) -> &Rational {
        &self.cpu_flops
    }

    pub fn gpu_peak_flops(&self) -> &Rational {
        &self.gpu_flops
    }

    /// Sum of SM counts over all GPUs; `None` if any GPU lacks one.
    pub fn total_streaming_multiprocessors(&self) -> Option<u64> {
        self.gpus
            .iter()
            .map(|g| g.streaming_multiprocessors().map(u64::from))
            .sum()
    }
}

/// A named set of identical nodes charged at one node-hour weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    name: String,
    node_type: NodeType,
    node_count: u32,
    model: ModelId,
    weight: Rational,
}

impl Partition {
    /// Partition charged under the energy-based model: `C` SU per node-hour
    /// on CPU nodes, the TDP-derived GPU weight on GPU nodes.
    pub fn new(name: impl Into<String>, node_type: NodeType, node_count: u32) -> Result<Self> {
        let weight = super::energy_node_weight(&node_type)?;
        Partition::with_weight(name, node_type, node_count, ModelId::Energy, weight)
    }

    pub fn with_weight(
        name: impl Into<String>,
        node_type: NodeType,
        node_count: u32,
        model: ModelId,
        weight: Rational,
    ) -> Result<Self> {
        let name = name.into();
        if weight <= exact::zero() {
            return Err(ChargeError::invalid(format!(
                "partition {name}: weight must be > 0"
            )));
        }
        if node_count == 0 {
            return Err(ChargeError::invalid(format!(
                "partition {name}: node_count must be >= 1"
            )));
        }
        Ok(Partition {
            name,
            node_type,
            node_count,
            model,
            weight,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_type(&self) -> &NodeType {
        &self.node_type
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn model(&self) -> ModelId {
        self.model
    }

    /// SU charged for one hour of one whole node.
    pub fn weight(&self) -> &Rational {
        &self.weight
    }
}

fn positive(what: &str, value: f64) -> Result<Rational> {
    match exact::from_f64(value) {
        Some(v) if v > exact::zero() => Ok(v),
        _ => Err(ChargeError::invalid(format!(
            "{what} must be a finite value > 0, got {value}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xeon() -> ProcessorSpec {
        ProcessorSpec::cpu("Xeon Gold 6240", 18, 150.0, 1.5e12).unwrap()
    }

    fn a100() -> ProcessorSpec {
        ProcessorSpec::gpu("A100 SMX", Some(108), 400.0, 9.7e12).unwrap()
    }

    #[test]
    fn processor_invariants() {
        assert!(ProcessorSpec::cpu("x", 0, 100.0, 1.0).is_err());
        assert!(ProcessorSpec::cpu("x", 4, 0.0, 1.0).is_err());
        assert!(ProcessorSpec::cpu("x", 4, -1.0, 1.0).is_err());
        assert!(ProcessorSpec::cpu("x", 4, 10.0, 0.0).is_err());
        assert!(ProcessorSpec::cpu("x", 4, f64::NAN, 1.0).is_err());
        assert!(ProcessorSpec::gpu("g", Some(0), 10.0, 1.0).is_err());
        assert!(ProcessorSpec::gpu("g", None, 10.0, 1.0).is_ok());
    }

    #[test]
    fn node_totals() {
        let node = NodeType::new("gpu", vec![xeon(), xeon()], vec![a100(); 4], 256.0).unwrap();
        assert_eq!(node.total_cores(), 36);
        assert_eq!(*node.cumulative_cpu_tdp(), exact::int(300));
        assert_eq!(*node.cumulative_gpu_tdp(), exact::int(1600));
        assert_eq!(node.total_streaming_multiprocessors(), Some(432));
        assert_eq!(node.memory_per_core(), exact::ratio(64, 9));
        assert_eq!(node.gpu_count(), 4);
    }

    #[test]
    fn node_rejects_bad_inventory() {
        assert!(NodeType::new("n", vec![], vec![], 10.0).is_err());
        assert!(NodeType::new("n", vec![xeon()], vec![], 0.0).is_err());
        assert!(NodeType::new("n", vec![a100()], vec![], 10.0).is_err());
        assert!(NodeType::new("n", vec![xeon()], vec![xeon()], 10.0).is_err());
        let node = NodeType::new("n", vec![xeon()], vec![], 10.0)
            .unwrap()
            .with_extra_resource("nvme", 1000.0)
            .unwrap();
        assert!(node.clone().with_extra_resource("nvme", 5.0).is_err());
        assert!(node.with_extra_resource("burst", 0.0).is_err());
    }

    #[test]
    fn sm_total_missing_when_any_gpu_lacks_count() {
        let bare = ProcessorSpec::gpu("g", None, 300.0, 1e12).unwrap();
        let node = NodeType::new("n", vec![xeon()], vec![a100(), bare], 64.0).unwrap();
        assert_eq!(node.total_streaming_multiprocessors(), None);
    }

    #[test]
    fn partition_weights_follow_node_kind() {
        let cpu = NodeType::new("cpu", vec![xeon(), xeon()], vec![], 256.0).unwrap();
        let gpu = NodeType::new("gpu", vec![xeon(), xeon()], vec![a100(); 4], 256.0).unwrap();
        assert_eq!(
            *Partition::new("cpu", cpu, 10).unwrap().weight(),
            exact::int(36)
        );
        assert_eq!(
            *Partition::new("gpu", gpu, 10).unwrap().weight(),
            exact::int(192)
        );
    }
}

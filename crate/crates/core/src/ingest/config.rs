use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::charge::{ChargeModel, ModelId, PuhtiRates};
use crate::error::{ChargeError, Result};
use crate::exact::Rational;
use crate::model::{ChargeReport, ExtraResource, JobRequest, NodeType, Partition, ProcessorSpec};

use super::IngestError;

/// On-disk system description. Units are part of the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfigFile {
    /// CPU partition that anchors peak-performance weights. Defaults to the
    /// first partition without GPUs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cpu_partition: Option<String>,
    pub processors: Vec<ProcessorSpec>,
    pub partitions: Vec<PartitionDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub puhti_rates: Option<PuhtiRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionDef {
    pub name: String,
    #[serde(default = "default_model")]
    pub model: ModelId,
    pub node_count: u32,
    /// Processor names, one entry per socket.
    pub cpus: Vec<String>,
    #[serde(default)]
    pub gpus: Vec<String>,
    pub memory_total_gib: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_resources: Vec<ExtraResource>,
}

fn default_model() -> ModelId {
    ModelId::Energy
}

/// A validated configuration with each partition's weight derived under
/// its configured model.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    file: SystemConfigFile,
    partitions: Vec<Partition>,
    reference_cpu: Option<usize>,
    puhti_rates: PuhtiRates,
}

impl SystemConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        SystemConfig::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, IngestError> {
        let file: SystemConfigFile =
            serde_json::from_str(text).map_err(|e| IngestError::Parse(format!("config: {e}")))?;
        SystemConfig::from_file(file)
    }

    pub fn from_file(file: SystemConfigFile) -> Result<Self, IngestError> {
        let mut problems = Vec::new();

        if file.partitions.is_empty() {
            problems.push("no partitions defined".to_string());
        }
        let mut seen = HashSet::new();
        for p in &file.processors {
            if !seen.insert(p.name()) {
                problems.push(format!("processor {} defined twice", p.name()));
            }
            if let Err(e) = p.validate() {
                problems.push(e.to_string());
            }
        }
        let mut seen = HashSet::new();
        for def in &file.partitions {
            if !seen.insert(def.name.as_str()) {
                problems.push(format!("partition {} defined twice", def.name));
            }
        }
        let puhti_rates = file.puhti_rates.clone().unwrap_or_default();
        if let Err(e) = puhti_rates.validate() {
            problems.push(format!("puhti_rates: {e}"));
        }

        // Node types first; weights may depend on the reference CPU node.
        let nodes: Vec<Option<NodeType>> = file
            .partitions
            .iter()
            .map(|def| match build_node(def, &file.processors) {
                Ok(node) => Some(node),
                Err(errs) => {
                    problems.extend(errs);
                    None
                }
            })
            .collect();

        let reference_cpu = match &file.reference_cpu_partition {
            Some(name) => match file.partitions.iter().position(|d| &d.name == name) {
                Some(i) => {
                    if nodes[i].as_ref().is_some_and(NodeType::has_gpus) {
                        problems.push(format!("reference CPU partition {name} has GPUs"));
                    }
                    Some(i)
                }
                None => {
                    problems.push(format!("reference CPU partition {name} is not defined"));
                    None
                }
            },
            None => nodes
                .iter()
                .position(|n| n.as_ref().is_some_and(|n| !n.has_gpus())),
        };
        let reference_node = reference_cpu.and_then(|i| nodes[i].clone());

        let mut partitions = Vec::new();
        for (def, node) in file.partitions.iter().zip(nodes) {
            let Some(node) = node else { continue };
            let model = match model_for(def.model, reference_node.as_ref(), &puhti_rates) {
                Ok(m) => m,
                Err(e) => {
                    problems.push(format!("partition {}: {e}", def.name));
                    continue;
                }
            };
            match model
                .node_hour_weight(&node)
                .and_then(|w| Partition::with_weight(&def.name, node, def.node_count, def.model, w))
            {
                Ok(p) => partitions.push(p),
                Err(e) => problems.push(format!("partition {}: {e}", def.name)),
            }
        }

        if !problems.is_empty() {
            return Err(IngestError::Invalid(problems));
        }
        Ok(SystemConfig {
            file,
            partitions,
            reference_cpu,
            puhti_rates,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("config serializes")
    }

    pub fn file(&self) -> &SystemConfigFile {
        &self.file
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn partition(&self, name: &str) -> Option<&Partition> {
        self.partitions.iter().find(|p| p.name() == name)
    }

    pub fn reference_cpu_partition(&self) -> Option<&Partition> {
        self.reference_cpu.map(|i| &self.partitions[i])
    }

    pub fn first_gpu_partition(&self) -> Option<&Partition> {
        self.partitions.iter().find(|p| p.node_type().has_gpus())
    }

    /// Cached node-hour weight of a partition under its configured model.
    pub fn weight(&self, partition: &str) -> Option<&Rational> {
        self.partition(partition).map(Partition::weight)
    }

    /// The model for `id`, parameterised from this configuration.
    pub fn charge_model(&self, id: ModelId) -> Result<ChargeModel> {
        let reference = self.reference_cpu_partition().map(Partition::node_type);
        model_for(id, reference, &self.puhti_rates)
    }

    /// Charges a job under `model`, or under its partition's configured model.
    pub fn charge(&self, job: &JobRequest<'_>, model: Option<ModelId>) -> Result<ChargeReport> {
        let id = model.unwrap_or(job.partition().model());
        self.charge_model(id)?.charge(job)
    }
}

fn model_for(id: ModelId, reference: Option<&NodeType>, puhti: &PuhtiRates) -> Result<ChargeModel> {
    Ok(match id {
        ModelId::Energy => ChargeModel::EnergyBased,
        ModelId::Sm => ChargeModel::SmBased,
        ModelId::PeakPerf => ChargeModel::PeakPerfBased {
            reference_cpu_node: reference.cloned().ok_or_else(|| {
                ChargeError::model("peak-perf model needs a CPU-only reference partition")
            })?,
        },
        ModelId::Titan => ChargeModel::Titan,
        ModelId::Puhti => ChargeModel::PuhtiBu(puhti.clone()),
    })
}

fn build_node(def: &PartitionDef, processors: &[ProcessorSpec]) -> Result<NodeType, Vec<String>> {
    let mut problems = Vec::new();
    let mut lookup = |names: &[String]| -> Vec<ProcessorSpec> {
        names
            .iter()
            .filter_map(|n| {
                let found = processors.iter().find(|p| p.name() == n).cloned();
                if found.is_none() {
                    problems.push(format!(
                        "partition {}: processor {n} is not defined",
                        def.name
                    ));
                }
                found
            })
            .collect()
    };
    let cpus = lookup(&def.cpus);
    let gpus = lookup(&def.gpus);
    if !problems.is_empty() {
        return Err(problems);
    }
    let mut node = NodeType::new(&def.name, cpus, gpus, def.memory_total_gib)
        .map_err(|e| vec![format!("partition {}: {e}", def.name)])?;
    for extra in &def.extra_resources {
        node = node
            .with_extra_resource(&extra.name, extra.capacity)
            .map_err(|e| vec![format!("partition {}: {e}", def.name)])?;
    }
    Ok(node)
}

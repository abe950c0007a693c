use crate::energy::ApplicationBenchmark;
use crate::model::{NodeType, ProcessorSpec};

/// Reference processors and application performance ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub cpu: ProcessorSpec,
    pub gpu: ProcessorSpec,
    pub apps: Vec<ApplicationBenchmark>,
}

const APPS: [(&str, u32); 13] = [
    ("FUN3D", 41),
    ("RTM", 32),
    ("SPECFEM3D", 105),
    ("AMBER", 153),
    ("GROMACS", 23),
    ("LAMMPS", 59),
    ("NAMD", 36),
    ("Relion", 12),
    ("GTC", 53),
    ("MILC", 108),
    ("Chroma", 99),
    ("Quantum Expresso", 13),
    ("ICON", 15),
];

pub fn embedded_fixture() -> Fixture {
    Fixture {
        cpu: ProcessorSpec::cpu("Xeon Gold 6240", 18, 150.0, 1.5e12).expect("valid CPU"),
        gpu: ProcessorSpec::gpu("A100 SMX", Some(108), 400.0, 9.7e12).expect("valid GPU"),
        apps: APPS
            .iter()
            .map(|&(name, ratio)| ApplicationBenchmark::new(name, ratio).expect("ratio >= 1"))
            .collect(),
    }
}

/// Dual-socket CPU node and the same node with four GPUs, 256 GiB each.
pub fn test_system_nodes() -> (NodeType, NodeType) {
    let Fixture { cpu, gpu, .. } = embedded_fixture();
    let cpu_node =
        NodeType::new("cpu", vec![cpu.clone(), cpu.clone()], vec![], 256.0).expect("valid node");
    let gpu_node =
        NodeType::new("gpu", vec![cpu.clone(), cpu], vec![gpu; 4], 256.0).expect("valid node");
    (cpu_node, gpu_node)
}

/// System configuration describing the same two partitions.
pub fn test_system_config_json() -> &'static str {
    include_str!("../../data/test-system.json")
}

use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};
use crate::model::NodeType;

/// GPU node-hour weight equal to the total SM count of its GPUs.
pub fn sm_based_weight(node: &NodeType) -> Result<Rational> {
    if !node.has_gpus() {
        return Err(ChargeError::model(format!(
            "node type {} has no GPUs",
            node.name()
        )));
    }
    let sms = node.total_streaming_multiprocessors().ok_or_else(|| {
        ChargeError::invalid(format!("node type {}: a GPU has no SM count", node.name()))
    })?;
    Ok(exact::int(sms))
}

/// GPU node-hour weight `(T_g / T_c) * C` where `T_g` is the GPU node's peak
/// FLOPs and `T_c`, `C` belong to the reference CPU node.
pub fn peak_perf_weight(node: &NodeType, reference_cpu_node: &NodeType) -> Result<Rational> {
    if !node.has_gpus() {
        return Err(ChargeError::model(format!(
            "node type {} has no GPUs",
            node.name()
        )));
    }
    let reference = reference_cpu_node.cpu_peak_flops();
    if *reference <= exact::zero() {
        return Err(ChargeError::invalid(
            "reference CPU node has no peak performance",
        ));
    }
    Ok(node.gpu_peak_flops() / reference * exact::int(reference_cpu_node.total_cores()))
}

/// Titan-style node-hour charge: one unit per core plus one per SM.
pub fn titan_node_charge(cpu_cores: u64, gpu_sms: u64) -> u64 {
    cpu_cores + gpu_sms
}

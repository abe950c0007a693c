use serde::{Deserialize, Serialize};

use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};
use crate::model::{NodeType, NodeUsage};

/// Billing-unit rates per hour of each reserved resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PuhtiRates {
    pub per_core: f64,
    pub per_memory_gib: f64,
    pub per_nvme_gib: f64,
    pub per_gpu: f64,
    /// Name of the extra node resource billed at the NVMe rate.
    pub nvme_resource: String,
}

impl Default for PuhtiRates {
    fn default() -> Self {
        PuhtiRates {
            per_core: 1.0,
            per_memory_gib: 0.1,
            per_nvme_gib: 0.006,
            per_gpu: 60.0,
            nvme_resource: "nvme".to_string(),
        }
    }
}

impl PuhtiRates {
    pub fn validate(&self) -> Result<()> {
        self.exact_rates().map(|_| ())
    }

    fn exact_rates(&self) -> Result<[Rational; 4]> {
        Ok([
            non_negative("per_core rate", self.per_core)?,
            non_negative("per_memory_gib rate", self.per_memory_gib)?,
            non_negative("per_nvme_gib rate", self.per_nvme_gib)?,
            non_negative("per_gpu rate", self.per_gpu)?,
        ])
    }

    /// `(cores*r_c + mem*r_m + nvme*r_n + gpus*r_g) * walltime`.
    pub fn bu(
        &self,
        cores: u32,
        mem_gib: f64,
        nvme_gib: f64,
        gpus: u32,
        walltime_hours: f64,
    ) -> Result<Rational> {
        let mem = non_negative("memory", mem_gib)?;
        let nvme = non_negative("NVMe", nvme_gib)?;
        let hours = non_negative("walltime", walltime_hours)?;
        Ok(self.hourly(cores, &mem, &nvme, gpus)? * hours)
    }

    fn hourly(&self, cores: u32, mem: &Rational, nvme: &Rational, gpus: u32) -> Result<Rational> {
        let [core_rate, mem_rate, nvme_rate, gpu_rate] = self.exact_rates()?;
        Ok(core_rate * exact::int(cores)
            + mem_rate * mem
            + nvme_rate * nvme
            + gpu_rate * exact::int(gpus))
    }

    /// Hourly BU for a whole node of this type.
    pub fn node_hour_rate(&self, node: &NodeType) -> Result<Rational> {
        let nvme = node
            .extra_capacity(&self.nvme_resource)
            .cloned()
            .unwrap_or_else(exact::zero);
        self.hourly(
            node.total_cores(),
            node.memory_total(),
            &nvme,
            node.gpu_count(),
        )
    }

    /// Hourly BU for what a job reserves on one node.
    pub(crate) fn usage_rate(&self, usage: &NodeUsage, node: &NodeType) -> Result<Rational> {
        let mem = non_negative("memory", usage.memory_used_gib)?;
        let nvme = if node.extra_capacity(&self.nvme_resource).is_some() {
            non_negative("NVMe", usage.extra_amount(&self.nvme_resource))?
        } else {
            exact::zero()
        };
        self.hourly(usage.cores_used, &mem, &nvme, usage.gpus_used)
    }
}

/// Billing units at the default rates (1 / 0.1 / 0.006 / 60 per hour).
pub fn puhti_bu(
    cores: u32,
    mem_gib: f64,
    nvme_gib: f64,
    gpus: u32,
    walltime_hours: f64,
) -> Result<Rational> {
    PuhtiRates::default().bu(cores, mem_gib, nvme_gib, gpus, walltime_hours)
}

/// Watt-hours per hour of one GPU plus its share of the node's CPU TDP.
pub fn puhti_tdp_equivalence(
    gpu_tdp_watts: f64,
    cpu_tdp_per_socket_watts: f64,
    sockets: u32,
    node_share: f64,
) -> Result<Rational> {
    let gpu = positive("GPU TDP", gpu_tdp_watts)?;
    let cpu = positive("CPU TDP", cpu_tdp_per_socket_watts)?;
    let share = non_negative("node share", node_share)?;
    if share > exact::one() {
        return Err(ChargeError::invalid(format!(
            "node share must be <= 1, got {node_share}"
        )));
    }
    Ok(gpu + share * exact::int(sockets) * cpu)
}

/// How many times a per-core TDP figure fits into `equivalent_wh`.
pub fn tdp_ratio_per_core(
    equivalent_wh: &Rational,
    cpu_tdp_per_socket_watts: f64,
    cores_per_socket: u32,
) -> Result<Rational> {
    if cores_per_socket == 0 {
        return Err(ChargeError::invalid("cores per socket must be >= 1"));
    }
    let per_core = positive("CPU TDP", cpu_tdp_per_socket_watts)? / exact::int(cores_per_socket);
    Ok(equivalent_wh / per_core)
}

fn non_negative(what: &str, value: f64) -> Result<Rational> {
    exact::from_f64(value)
        .filter(|v| !exact::is_negative(v))
        .ok_or_else(|| {
            ChargeError::invalid(format!("{what} must be a finite value >= 0, got {value}"))
        })
}

fn positive(what: &str, value: f64) -> Result<Rational> {
    exact::from_f64(value)
        .filter(|v| *v > exact::zero())
        .ok_or_else(|| {
            ChargeError::invalid(format!("{what} must be a finite value > 0, got {value}"))
        })
}

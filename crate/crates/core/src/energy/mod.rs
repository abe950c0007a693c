//! Node choice and energy under a charging model.
//!
//! A hypothetical application takes `baseline_hours` on one CPU node and
//! `baseline_hours / s` on one GPU node. The user picks whichever node costs
//! fewer units (ties go to the CPU node). The job's maximal energy is then
//! the TDP of the chosen node's processors times its run time.

use serde::Serialize;

use crate::charge::{ChargeModel, ModelId};
use crate::error::{ChargeError, Result};
use crate::exact::{self, Rational};
use crate::format;
use crate::model::NodeType;

/// Default speedup range and resolution for a crossover sweep.
pub const DEFAULT_S_MIN: f64 = 1.0;
pub const DEFAULT_S_MAX: f64 = 20.0;
pub const DEFAULT_STEPS: usize = 96;

/// An application with its CPU-nodes-per-GPU-node performance ratio.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApplicationBenchmark {
    pub name: String,
    pub perf_ratio: u32,
}

impl ApplicationBenchmark {
    pub fn new(name: impl Into<String>, perf_ratio: u32) -> Result<Self> {
        if perf_ratio < 1 {
            return Err(ChargeError::invalid("perf_ratio must be >= 1"));
        }
        Ok(ApplicationBenchmark {
            name: name.into(),
            perf_ratio,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeChoice {
    Cpu,
    Gpu,
}

impl NodeChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeChoice::Cpu => "cpu",
            NodeChoice::Gpu => "gpu",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPoint {
    pub speedup: Rational,
    pub su_cpu: Rational,
    pub su_gpu: Rational,
    pub chosen: NodeChoice,
    pub ec_total_wh: Rational,
}

/// `s = 1 / t` for a GPU run time `t` relative to a one-hour CPU run.
pub fn speedup_from_time(gpu_hours: &Rational) -> Result<Rational> {
    if *gpu_hours <= exact::zero() {
        return Err(ChargeError::invalid("GPU run time must be > 0"));
    }
    Ok(gpu_hours.recip())
}

pub fn speedup_from_hours(gpu_hours: f64) -> Result<Rational> {
    let t = exact::from_f64(gpu_hours).ok_or_else(|| {
        ChargeError::invalid(format!("GPU run time must be finite, got {gpu_hours}"))
    })?;
    speedup_from_time(&t)
}

/// Open-closed speedup interval `(lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupBand {
    pub lower: Rational,
    pub upper: Rational,
}

impl SpeedupBand {
    pub fn contains(&self, speedup: &Rational) -> bool {
        *speedup > self.lower && *speedup <= self.upper
    }
}

/// CPU-versus-GPU decisions for one pair of node types.
#[derive(Debug, Clone)]
pub struct CrossoverAnalysis<'a> {
    cpu_node: &'a NodeType,
    gpu_node: &'a NodeType,
    baseline_hours: Rational,
}

impl<'a> CrossoverAnalysis<'a> {
    pub fn new(cpu_node: &'a NodeType, gpu_node: &'a NodeType) -> Result<Self> {
        if !gpu_node.has_gpus() {
            return Err(ChargeError::model(format!(
                "node type {} has no GPUs",
                gpu_node.name()
            )));
        }
        Ok(CrossoverAnalysis {
            cpu_node,
            gpu_node,
            baseline_hours: exact::one(),
        })
    }

    /// CPU run time of the hypothetical application; one hour by default.
    pub fn with_baseline_hours(mut self, hours: f64) -> Result<Self> {
        self.baseline_hours = exact::from_f64(hours)
            .filter(|h| *h > exact::zero())
            .ok_or_else(|| {
                ChargeError::invalid(format!("baseline hours must be > 0, got {hours}"))
            })?;
        Ok(self)
    }

    fn weights(&self, model: &ChargeModel) -> Result<(Rational, Rational)> {
        Ok((
            model.node_hour_weight(self.cpu_node)?,
            model.node_hour_weight(self.gpu_node)?,
        ))
    }

    pub fn decide(&self, speedup: &Rational, model: &ChargeModel) -> Result<DecisionPoint> {
        if *speedup <= exact::zero() {
            return Err(ChargeError::invalid("speedup must be > 0"));
        }
        let (w_cpu, w_gpu) = self.weights(model)?;
        let gpu_hours = &self.baseline_hours / speedup;
        let su_cpu = w_cpu * &self.baseline_hours;
        let su_gpu = w_gpu * &gpu_hours;
        let (chosen, ec_total_wh) = if su_cpu <= su_gpu {
            (
                NodeChoice::Cpu,
                &self.baseline_hours * self.cpu_node.cumulative_cpu_tdp(),
            )
        } else {
            (
                NodeChoice::Gpu,
                gpu_hours * self.gpu_node.cumulative_gpu_tdp(),
            )
        };
        Ok(DecisionPoint {
            speedup: speedup.clone(),
            su_cpu,
            su_gpu,
            chosen,
            ec_total_wh,
        })
    }

    /// Speedup above which `model` steers the user to the GPU node:
    /// GPU node weight over CPU node weight.
    pub fn threshold(&self, model: &ChargeModel) -> Result<Rational> {
        let (w_cpu, w_gpu) = self.weights(model)?;
        Ok(w_gpu / w_cpu)
    }

    /// Speedup above which the GPU run uses less energy than the CPU run.
    pub fn energy_break_even(&self) -> Rational {
        self.gpu_node.cumulative_gpu_tdp() / self.cpu_node.cumulative_cpu_tdp()
    }

    /// `steps` evenly spaced speedups from `s_min` to `s_max` inclusive.
    pub fn sweep(
        &self,
        model: &ChargeModel,
        s_min: f64,
        s_max: f64,
        steps: usize,
    ) -> Result<Vec<DecisionPoint>> {
        speedup_grid(s_min, s_max, steps)?
            .iter()
            .map(|s| self.decide(s, model))
            .collect()
    }

    /// Speedups where the energy model already picks the GPU node (the
    /// lower-energy choice) while at least one rival still picks the CPU.
    ///
    /// `None` when no such speedup exists.
    pub fn efficiency_band(&self, models: &[ChargeModel]) -> Result<Option<SpeedupBand>> {
        let energy_at = models
            .iter()
            .position(|m| m.id() == ModelId::Energy)
            .ok_or_else(|| ChargeError::invalid("efficiency band needs the energy model"))?;
        let lower = self.threshold(&models[energy_at])?;
        let mut upper: Option<Rational> = None;
        let rivals = models.iter().enumerate().filter(|(i, _)| *i != energy_at);
        for (_, rival) in rivals {
            let t = self.threshold(rival)?;
            if upper.as_ref().is_none_or(|u| t > *u) {
                upper = Some(t);
            }
        }
        let upper = upper.ok_or_else(|| {
            ChargeError::invalid("efficiency band needs at least one rival model")
        })?;
        Ok((upper > lower).then_some(SpeedupBand { lower, upper }))
    }
}

pub fn speedup_grid(s_min: f64, s_max: f64, steps: usize) -> Result<Vec<Rational>> {
    let lo = exact::from_f64(s_min).filter(|s| *s > exact::zero());
    let hi = exact::from_f64(s_max);
    let (lo, hi) = match (lo, hi) {
        (Some(lo), Some(hi)) if hi > lo => (lo, hi),
        _ => {
            return Err(ChargeError::invalid(format!(
                "speedup range needs 0 < s_min < s_max, got [{s_min}, {s_max}]"
            )))
        }
    };
    if steps < 2 {
        return Err(ChargeError::invalid("a sweep needs at least 2 steps"));
    }
    let step = (&hi - &lo) / exact::int(steps as u64 - 1);
    Ok((0..steps as u64)
        .map(|i| &lo + &step * exact::int(i))
        .collect())
}

/// Decision for a single speedup with a one-hour CPU baseline.
pub fn decide_and_energy(
    speedup: &Rational,
    model: &ChargeModel,
    cpu_node: &NodeType,
    gpu_node: &NodeType,
) -> Result<DecisionPoint> {
    CrossoverAnalysis::new(cpu_node, gpu_node)?.decide(speedup, model)
}

pub fn crossover_sweep(
    model: &ChargeModel,
    cpu_node: &NodeType,
    gpu_node: &NodeType,
    s_min: f64,
    s_max: f64,
    steps: usize,
) -> Result<Vec<DecisionPoint>> {
    CrossoverAnalysis::new(cpu_node, gpu_node)?.sweep(model, s_min, s_max, steps)
}

pub fn efficiency_band(
    models: &[ChargeModel],
    cpu_node: &NodeType,
    gpu_node: &NodeType,
) -> Result<Option<SpeedupBand>> {
    CrossoverAnalysis::new(cpu_node, gpu_node)?.efficiency_band(models)
}

/// Plot data with one row per speedup and one column group per model:
/// `speedup, su_cpu_<m>, su_gpu_<m>, chosen_<m>, ec_wh_<m>, ...`.
///
/// Every series must come from the same speedup grid.
pub fn sweep_csv(series: &[(ModelId, Vec<DecisionPoint>)]) -> Result<String> {
    let rows = series.first().map_or(0, |(_, points)| points.len());
    if series.iter().any(|(_, points)| points.len() != rows) {
        return Err(ChargeError::invalid("sweep series differ in length"));
    }
    let mut out = String::from("speedup");
    for (id, _) in series {
        for col in ["su_cpu", "su_gpu", "chosen", "ec_wh"] {
            out.push_str(&format!(",{col}_{id}"));
        }
    }
    out.push('\n');
    for i in 0..rows {
        let speedup = &series[0].1[i].speedup;
        out.push_str(&format::csv_real(exact::to_f64(speedup)));
        for (_, points) in series {
            let p = &points[i];
            if p.speedup != *speedup {
                return Err(ChargeError::invalid(
                    "sweep series use different speedup grids",
                ));
            }
            out.push_str(&format!(
                ",{},{},{},{}",
                format::csv_real(exact::to_f64(&p.su_cpu)),
                format::csv_real(exact::to_f64(&p.su_gpu)),
                p.chosen.as_str(),
                format::csv_real(exact::to_f64(&p.ec_total_wh)),
            ));
        }
        out.push('\n');
    }
    Ok(out)
}

//! Randomised invariant checks, each runnable with an explicit case count.
//!
//! Shared between the core test suite and the acceptance runner.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use sumeter_core::charge::{titan_node_charge, ChargeModel, ModelId, PuhtiRates};
use sumeter_core::energy::{CrossoverAnalysis, NodeChoice};
use sumeter_core::exact::{self, Rational};
use sumeter_core::model::{
    core_equivalent, core_fraction, energy_node_weight, exclusive_node_charge, job_cost,
    memory_fraction, JobRequest, NodeType, NodeUsage, Partition, ProcessorSpec,
};

pub type Check = fn(u32) -> Result<(), String>;

/// Every suite, by name.
pub const SUITES: &[(&str, Check)] = &[
    ("monotonicity", monotonicity),
    ("shared_le_exclusive", shared_le_exclusive),
    ("core_hour_identity", core_hour_identity),
    ("memory_step_codomain", memory_step_codomain),
    ("time_additivity", time_additivity),
    ("tdp_scale_invariance", tdp_scale_invariance),
    ("threshold_identity", threshold_identity),
    ("unused_resource_independence", unused_resource_independence),
    ("decision_monotonicity", decision_monotonicity),
    ("puhti_linearity", puhti_linearity),
    ("titan_additivity", titan_additivity),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn fail<E: std::fmt::Display>(e: E) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

#[derive(Debug, Clone, Copy)]
struct Hw {
    sockets: u32,
    cores: u32,
    cpu_tdp: u32,
    gpus: u32,
    gpu_tdp: u32,
    sms: u32,
    memory_gib: u32,
}

impl Hw {
    fn node(&self, tdp_scale: u32) -> NodeType {
        let cpu =
            ProcessorSpec::cpu("c", self.cores, f64::from(self.cpu_tdp * tdp_scale), 1e12).unwrap();
        let gpu = ProcessorSpec::gpu(
            "g",
            Some(self.sms),
            f64::from(self.gpu_tdp * tdp_scale),
            1e13,
        )
        .unwrap();
        NodeType::new(
            "n",
            vec![cpu; self.sockets as usize],
            vec![gpu; self.gpus as usize],
            f64::from(self.memory_gib),
        )
        .unwrap()
    }

    fn total_cores(&self) -> u32 {
        self.sockets * self.cores
    }
}

fn hw(gpus: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = Hw> {
    (
        1u32..=4,
        1u32..=64,
        50u32..=400,
        gpus,
        100u32..=700,
        1u32..=150,
        1u32..=1024,
    )
        .prop_map(
            |(sockets, cores, cpu_tdp, gpus, gpu_tdp, sms, memory_gib)| Hw {
                sockets,
                cores,
                cpu_tdp,
                gpus,
                gpu_tdp,
                sms,
                memory_gib,
            },
        )
}

/// A non-idle request on `hw`; memory in quarter-GiB steps.
fn usage(hw: &Hw) -> impl Strategy<Value = NodeUsage> {
    (0..=hw.total_cores(), 0..=hw.gpus, 0..=hw.memory_gib * 4)
        .prop_filter("node must request something", |(c, g, m)| c + g + m > 0)
        .prop_map(|(c, g, m)| NodeUsage::new(c, g, f64::from(m) / 4.0))
}

fn hw_and_usage(gpus: std::ops::RangeInclusive<u32>) -> impl Strategy<Value = (Hw, NodeUsage)> {
    hw(gpus).prop_flat_map(|h| {
        let u = usage(&h);
        (Just(h), u)
    })
}

fn quarter_hours() -> impl Strategy<Value = f64> {
    (0u32..=400).prop_map(|q| f64::from(q) / 4.0)
}

fn cost(
    partition: &Partition,
    usages: Vec<NodeUsage>,
    hours: f64,
) -> Result<Rational, TestCaseError> {
    let job = JobRequest::new(partition, usages, hours).map_err(fail)?;
    Ok(job_cost(&job).map_err(fail)?.total_su)
}

/// Non-decreasing in every usage quantity, walltime and node count;
/// strictly increasing when a node is added and time is positive.
pub fn monotonicity(cases: u32) -> Result<(), String> {
    let strategy = (
        hw_and_usage(0..=8),
        1usize..=4,
        quarter_hours(),
        0u8..5,
        any::<u32>(),
    );
    run(cases, strategy, |((h, u), nodes, hours, which, bump)| {
        let partition = Partition::new("p", h.node(1), 8).map_err(fail)?;
        let base = cost(&partition, vec![u.clone(); nodes], hours)?;
        let mut bigger = u.clone();
        let (more_nodes, more_hours) = match which {
            0 => {
                bigger.cores_used += bump % (h.total_cores() - u.cores_used + 1);
                (nodes, hours)
            }
            1 => {
                bigger.gpus_used += bump % (h.gpus - u.gpus_used + 1);
                (nodes, hours)
            }
            2 => {
                let room = h.memory_gib * 4 - (u.memory_used_gib * 4.0) as u32;
                bigger.memory_used_gib += f64::from(bump % (room + 1)) / 4.0;
                (nodes, hours)
            }
            3 => (nodes, hours + f64::from(bump % 40) / 4.0),
            _ => (nodes + 1, hours),
        };
        let after = cost(&partition, vec![bigger; more_nodes], more_hours)?;
        prop_assert!(after >= base, "{after} < {base}");
        if more_nodes > nodes && hours > 0.0 {
            prop_assert!(after > base, "adding a node did not raise the cost");
        }
        Ok(())
    })
}

/// The shared charge never exceeds the whole-node charge.
pub fn shared_le_exclusive(cases: u32) -> Result<(), String> {
    let strategy = hw(0..=8)
        .prop_flat_map(|h| {
            let us = proptest::collection::vec(usage(&h), 1..=4);
            (Just(h), us)
        })
        .prop_flat_map(|(h, us)| (Just(h), Just(us), quarter_hours()));
    run(cases, strategy, |(h, usages, hours)| {
        let partition = Partition::new("p", h.node(1), 4).map_err(fail)?;
        let job = JobRequest::new(&partition, usages, hours).map_err(fail)?;
        let shared = job_cost(&job).map_err(fail)?;
        let exclusive = exclusive_node_charge(&job, ModelId::Energy, partition.weight().clone())
            .map_err(fail)?;
        let n = exact::int(job.node_count() as u64);
        prop_assert!(shared.fraction_sum() <= n);
        prop_assert!(shared.total_su <= exclusive.total_su);
        prop_assert_eq!(exclusive.total_su, partition.weight() * job.walltime() * n);
        Ok(())
    })
}

/// On CPU nodes with memory within the cores' share, the charge is the
/// core-hours requested.
pub fn core_hour_identity(cases: u32) -> Result<(), String> {
    let strategy = hw(0..=0)
        .prop_flat_map(|h| {
            let (total, mem) = (u64::from(h.total_cores()), u64::from(h.memory_gib));
            let per_node = (1..=h.total_cores())
                .prop_flat_map(move |c| (Just(c), 0..=u64::from(c) * mem * 4 / total));
            (Just(h), proptest::collection::vec(per_node, 1..=4))
        })
        .prop_flat_map(|(h, nodes)| (Just(h), Just(nodes), quarter_hours()));
    run(cases, strategy, |(h, nodes, hours)| {
        let node = h.node(1);
        let partition = Partition::new("cpu", node.clone(), 4).map_err(fail)?;
        let usages: Vec<NodeUsage> = nodes
            .iter()
            .map(|&(c, m)| NodeUsage::new(c, 0, m as f64 / 4.0))
            .collect();
        for u in &usages {
            prop_assert!(
                memory_fraction(u, &node).map_err(fail)?
                    <= core_fraction(u, &node).map_err(fail)?
            );
        }
        let total = cost(&partition, usages, hours)?;
        let core_hours: u64 = nodes.iter().map(|&(c, _)| u64::from(c)).sum();
        prop_assert_eq!(
            total,
            exact::from_f64(hours).unwrap() * exact::int(core_hours)
        );
        Ok(())
    })
}

/// Memory is charged in whole-core steps `{1/C, ..., C/C}`.
pub fn memory_step_codomain(cases: u32) -> Result<(), String> {
    let strategy = hw(0..=0).prop_flat_map(|h| (Just(h), 1..=h.memory_gib * 1000));
    run(cases, strategy, |(h, milli)| {
        let node = h.node(1);
        let c = h.total_cores();
        let u = NodeUsage::new(0, 0, f64::from(milli) / 1000.0);
        let e = core_equivalent(&u, &node).map_err(fail)?;
        prop_assert!((1..=c).contains(&e), "core equivalent {e} outside 1..={c}");
        let f = memory_fraction(&u, &node).map_err(fail)?;
        prop_assert_eq!(f, exact::ratio(e, c));
        // smallest step covering the request
        let used = exact::ratio(milli, 1000);
        let step = node.memory_per_core();
        prop_assert!(&step * exact::int(e) >= used);
        prop_assert!(&step * exact::int(e - 1) < used);
        Ok(())
    })
}

/// Splitting the walltime splits the charge exactly.
pub fn time_additivity(cases: u32) -> Result<(), String> {
    let strategy = (
        hw_and_usage(0..=8),
        1usize..=4,
        quarter_hours(),
        quarter_hours(),
    );
    run(cases, strategy, |((h, u), nodes, t1, t2)| {
        let partition = Partition::new("p", h.node(1), 4).map_err(fail)?;
        let whole = cost(&partition, vec![u.clone(); nodes], t1 + t2)?;
        let parts =
            cost(&partition, vec![u.clone(); nodes], t1)? + cost(&partition, vec![u; nodes], t2)?;
        prop_assert_eq!(whole, parts);
        Ok(())
    })
}

/// Scaling every TDP by a common factor leaves the GPU weight unchanged.
pub fn tdp_scale_invariance(cases: u32) -> Result<(), String> {
    run(cases, (hw(1..=8), 2u32..=50), |(h, scale)| {
        let w = energy_node_weight(&h.node(1)).map_err(fail)?;
        let scaled = energy_node_weight(&h.node(scale)).map_err(fail)?;
        prop_assert_eq!(&w, &scaled);
        let expected =
            exact::ratio(h.gpus * h.gpu_tdp, h.sockets * h.cpu_tdp) * exact::int(h.total_cores());
        prop_assert_eq!(w, expected);
        Ok(())
    })
}

/// With identical CPUs on both nodes the energy model's switch point is
/// the energy break-even speedup, and both decisions agree.
pub fn threshold_identity(cases: u32) -> Result<(), String> {
    let strategy = (hw(1..=8), 1u32..=4000).prop_map(|(h, s)| (h, exact::ratio(s, 100)));
    run(cases, strategy, |(h, s)| {
        let gpu_node = h.node(1);
        let cpu_hw = Hw { gpus: 0, ..h };
        let cpu_node = cpu_hw.node(1);
        let analysis = CrossoverAnalysis::new(&cpu_node, &gpu_node).map_err(fail)?;
        let threshold = analysis
            .threshold(&ChargeModel::EnergyBased)
            .map_err(fail)?;
        let break_even = analysis.energy_break_even();
        prop_assert_eq!(&threshold, &break_even);
        let w_g = energy_node_weight(&gpu_node).map_err(fail)?;
        prop_assert_eq!(&threshold, &(w_g / exact::int(h.total_cores())));

        let d = analysis
            .decide(&s, &ChargeModel::EnergyBased)
            .map_err(fail)?;
        let gpu_saves_energy = s > break_even;
        prop_assert_eq!(d.chosen == NodeChoice::Gpu, gpu_saves_energy);
        let cpu_ec = cpu_node.cumulative_cpu_tdp().clone();
        let gpu_ec = gpu_node.cumulative_gpu_tdp() / &s;
        prop_assert_eq!(
            d.ec_total_wh,
            if gpu_saves_energy { gpu_ec } else { cpu_ec }
        );
        Ok(())
    })
}

/// GPUs the job does not touch affect neither the core nor memory terms;
/// the cost differs only through the weight.
pub fn unused_resource_independence(cases: u32) -> Result<(), String> {
    let strategy = (hw_and_usage(0..=0), 1u32..=8, quarter_hours());
    run(cases, strategy, |((h, u), extra_gpus, hours)| {
        let plain = h.node(1);
        let with_gpus = Hw {
            gpus: extra_gpus,
            ..h
        }
        .node(1);
        prop_assert_eq!(
            core_fraction(&u, &plain).map_err(fail)?,
            core_fraction(&u, &with_gpus).map_err(fail)?
        );
        prop_assert_eq!(
            memory_fraction(&u, &plain).map_err(fail)?,
            memory_fraction(&u, &with_gpus).map_err(fail)?
        );
        let a = Partition::new("a", plain, 1).map_err(fail)?;
        let b = Partition::new("b", with_gpus, 1).map_err(fail)?;
        let ca = cost(&a, vec![u.clone()], hours)?;
        let cb = cost(&b, vec![u], hours)?;
        prop_assert_eq!(ca / a.weight(), cb / b.weight());
        Ok(())
    })
}

/// Once a model picks the GPU node, it keeps picking it at higher speedups,
/// and the energy of the chosen run never rises with speedup.
pub fn decision_monotonicity(cases: u32) -> Result<(), String> {
    let models = || {
        prop_oneof![
            Just(ChargeModel::EnergyBased),
            Just(ChargeModel::SmBased),
            Just(ChargeModel::PuhtiBu(PuhtiRates::default())),
        ]
    };
    let strategy = (hw(1..=8), models(), 1u32..=3000, 1u32..=3000);
    run(cases, strategy, |(h, model, a, b)| {
        let gpu_node = h.node(1);
        let cpu_node = Hw { gpus: 0, ..h }.node(1);
        let analysis = CrossoverAnalysis::new(&cpu_node, &gpu_node).map_err(fail)?;
        let (lo, hi) = (a.min(b), a.max(b));
        let d_lo = analysis
            .decide(&exact::ratio(lo, 100), &model)
            .map_err(fail)?;
        let d_hi = analysis
            .decide(&exact::ratio(hi, 100), &model)
            .map_err(fail)?;
        if d_lo.chosen == NodeChoice::Gpu {
            prop_assert_eq!(d_hi.chosen, NodeChoice::Gpu);
            prop_assert!(d_hi.ec_total_wh <= d_lo.ec_total_wh);
        }
        if d_hi.chosen == NodeChoice::Cpu {
            prop_assert_eq!(d_lo.ec_total_wh, d_hi.ec_total_wh);
        }
        let threshold = analysis.threshold(&model).map_err(fail)?;
        prop_assert_eq!(
            d_hi.chosen == NodeChoice::Gpu,
            exact::ratio(hi, 100) > threshold
        );
        Ok(())
    })
}

/// Billing units are linear in each resource and in walltime.
pub fn puhti_linearity(cases: u32) -> Result<(), String> {
    let strategy = (
        0u32..=128,
        0u32..=2000,
        0u32..=4000,
        0u32..=8,
        0u32..=400,
        1u32..=20,
    );
    run(cases, strategy, |(cores, mem4, nvme, gpus, q, k)| {
        let rates = PuhtiRates::default();
        let mem = f64::from(mem4) / 4.0;
        let hours = f64::from(q) / 4.0;
        let bu = rates
            .bu(cores, mem, f64::from(nvme), gpus, hours)
            .map_err(fail)?;
        let kr = exact::int(k);
        let scaled = rates
            .bu(
                cores * k,
                mem * f64::from(k),
                f64::from(nvme * k),
                gpus * k,
                hours,
            )
            .map_err(fail)?;
        prop_assert_eq!(&scaled, &(&bu * &kr));
        let longer = rates
            .bu(cores, mem, f64::from(nvme), gpus, hours * f64::from(k))
            .map_err(fail)?;
        prop_assert_eq!(&longer, &(&bu * &kr));
        let parts = [
            rates.bu(cores, 0.0, 0.0, 0, hours),
            rates.bu(0, mem, 0.0, 0, hours),
            rates.bu(0, 0.0, f64::from(nvme), 0, hours),
            rates.bu(0, 0.0, 0.0, gpus, hours),
        ];
        let mut sum = exact::zero();
        for p in parts {
            sum += p.map_err(fail)?;
        }
        prop_assert_eq!(sum, bu);
        Ok(())
    })
}

/// Titan charges split additively over cores.
pub fn titan_additivity(cases: u32) -> Result<(), String> {
    run(
        cases,
        (0u64..=1 << 20, 0u64..=1 << 20, 0u64..=1 << 20),
        |(a, b, s)| {
            prop_assert_eq!(
                titan_node_charge(a + b, s),
                titan_node_charge(a, s) + titan_node_charge(b, 0)
            );
            Ok(())
        },
    )
}

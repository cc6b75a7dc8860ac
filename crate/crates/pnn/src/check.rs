//! Oracle suite behind `pnn check`.

use pnn_core::network::forward;
use pnn_core::oracle::{
    brute_force_boundary_gain, brute_force_layout_search, fd_check_chain_term, reference_loss, OracleReport,
};
use pnn_core::plasticity::boundary_surrogate;
use pnn_core::rng::{self, seeded, uniform, unit};
use pnn_core::signal::{build_dataset, generate_signal, Dataset, SignalSpec};
use pnn_core::topology::rebalance;
use pnn_core::trainer::{train, Scenario, TrainingConfig};
use pnn_core::{ConnectionWeights, ForwardMode, LayoutParams};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignCheck {
    pub agree: usize,
    pub total: usize,
}

impl SignCheck {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.agree as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub chain_term: OracleReport,
    pub boundary_sign: SignCheck,
    pub layout_near_optimal: SignCheck,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.chain_term.passed()
            && self.chain_term.max_rel_err < 1e-6
            && self.boundary_sign.rate() >= 0.95
            && self.layout_near_optimal.rate() >= 0.7
    }
}

/// Finite-difference check of the rebalance chain term over `rows` random rows
/// of the default layout.
pub fn chain_term(rows: usize, seed: u64) -> Result<OracleReport> {
    let params = LayoutParams::default();
    let mut rng = seeded(seed);
    let mut report = OracleReport::default();
    for _ in 0..rows {
        let r: Vec<f64> = (0..params.k_max).map(|_| uniform(&mut rng, 0.05, 2.0)).collect();
        report.merge(fd_check_chain_term(&r, &params, 1e-5)?);
    }
    Ok(report)
}

fn tiny_dataset(rng: &mut rng::RunRng) -> Result<Dataset> {
    let mut spec = if unit(rng) < 0.5 {
        SignalSpec::variable_cycle(24)
    } else {
        SignalSpec::cosine(24)
    };
    spec.period = 9.0;
    spec.period_end = 6.0;
    spec.phase = unit(rng) * 6.0;
    Ok(build_dataset(&generate_signal(&spec)?, 2, 12)?)
}

/// Sign agreement of the boundary surrogate with the exact loss change on
/// `samples` random states with two variables, three synapses and twelve steps.
pub fn boundary_sign(samples: usize, seed: u64) -> Result<SignCheck> {
    let params = LayoutParams::new(2, 3, 12, 1);
    let mut rng = seeded(seed);
    let mut check = SignCheck { agree: 0, total: 0 };
    let mut attempts = 0;
    while check.total < samples && attempts < samples * 40 {
        attempts += 1;
        let data = tiny_dataset(&mut rng)?;
        let r: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| uniform(&mut rng, 0.1, 1.0)).collect()).collect();
        let layout = rebalance(&r, &params)?;
        let rows: Vec<Vec<f64>> = (0..2).map(|_| (0..3).map(|_| uniform(&mut rng, -0.5, 0.5)).collect()).collect();
        let w = ConnectionWeights::from_rows(&rows)?;
        let traj = forward(&data, &layout, &w, ForwardMode::TeacherForced)?;
        let m = (unit(&mut rng) * 2.0) as usize;
        let k = (unit(&mut rng) * 2.0) as usize;
        let surrogate = boundary_surrogate(&traj, &data, &layout, &w, m, k)?;
        if surrogate.abs() <= 1e-8 {
            continue;
        }
        let Some(change) = brute_force_boundary_gain(&data, &layout, &w, m, k, ForwardMode::TeacherForced)? else {
            continue;
        };
        check.total += 1;
        if (surrogate > 0.0) == (change < 0.0) {
            check.agree += 1;
        }
    }
    Ok(check)
}

/// Trains only the ranges of ORPNN-MF(P)-PF on tiny instances and counts the
/// final layouts within 20% of the exhaustive optimum.
pub fn layout_near_optimal(instances: u64, seed: u64) -> Result<SignCheck> {
    let mut check = SignCheck { agree: 0, total: 0 };
    for i in 0..instances {
        let run_seed = seed.wrapping_add(i);
        let mut config = Scenario::OrpnnMfPPf.configure(TrainingConfig::default().with_iterations(5000).with_seed(run_seed));
        config.layout = LayoutParams::new(2, 3, 12, 1);
        config.signal = SignalSpec::cosine(24);
        config.signal.period = 9.0;
        config.train_weights = false;
        let data = config.dataset()?;
        let report = train(&config, &data)?;
        let w = ConnectionWeights::random(2, 3, config.weight_init_scale, &mut seeded(run_seed));
        let trained = reference_loss(&data, &report.final_n1, &w, config.forward_mode)?;
        let best = brute_force_layout_search(&data, &w, &config.layout, config.forward_mode)?;
        check.total += 1;
        if trained <= 1.2 * best.mse {
            check.agree += 1;
        }
    }
    Ok(check)
}

pub fn run_checks(seed: u64) -> Result<CheckSummary> {
    Ok(CheckSummary {
        chain_term: chain_term(1000, seed)?,
        boundary_sign: boundary_sign(500, seed)?,
        layout_near_optimal: layout_near_optimal(20, seed)?,
    })
}

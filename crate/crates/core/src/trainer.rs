//! Training loop and variant matrix.
//!
//! One iteration, in order: resample (random ranges) or plasticity update
//! (optimized ranges), the per-synapse sweep that updates connection weights and
//! range weights, rebalance into integer ranges, forward pass and loss, archive
//! update, elitism, checkpoint. Every random draw comes from one seeded stream,
//! so a config reproduces its report bit for bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::network::{
    forward, mse_loss, weight_gradient, ConnectionWeights, ForwardMode, LearningSchedule, Trajectory,
};
use crate::plasticity::{
    boundary_surrogate, memory_available, memory_factor, memory_update, plasticity_step,
    FactorParams, MemoryArchive, MemoryMode, MemoryTerms, PlasticityMode, PlasticitySettings,
    Recall, Snapshot,
};
use crate::rng::{self, RunRng};
use crate::signal::{build_dataset, generate_signal, Dataset, SignalSpec};
use crate::stats::{pearson, sample_std};
use crate::topology::{clamp_weight, range_sensitivity, rebalance, LayoutParams, SynapticLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RangeMode {
    /// Fixed equal range weights (CRPNN).
    Constant,
    /// Range weights drawn uniformly at random (RRPNN).
    Random,
    /// Range weights trained (ORPNN).
    #[default]
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SimpleMode {
    #[default]
    Off,
    NoCorrection,
    CorrCorrection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Resample {
    #[default]
    PerIteration,
    Once,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingConfig {
    pub range_mode: RangeMode,
    pub memory_mode: MemoryMode,
    pub plasticity_mode: PlasticityMode,
    pub phagocytic: bool,
    pub simple_mode: SimpleMode,
    pub layout: LayoutParams,
    pub j_max: usize,
    pub base_rate: f64,
    pub signal: SignalSpec,
    pub seed: u64,
    pub checkpoints: Vec<usize>,
    pub factors: FactorParams,
    pub archive_capacity: usize,
    /// Connection weights are restored from the best snapshot when the loss
    /// exceeds this multiple of the best loss. Infinity disables it.
    pub restore_ratio: f64,
    pub forward_mode: ForwardMode,
    /// Apply the update signs exactly as printed (ascent on the weights,
    /// repulsion from the best range weights).
    pub literal_signs: bool,
    pub resample: Resample,
    pub weight_init_scale: f64,
    pub train_weights: bool,
    /// Iterations without any range change before the run is flagged.
    pub vanishing_window: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let j_max = 40_000;
        Self {
            range_mode: RangeMode::Optimized,
            memory_mode: MemoryMode::None,
            plasticity_mode: PlasticityMode::Off,
            phagocytic: false,
            simple_mode: SimpleMode::Off,
            layout: LayoutParams::default(),
            j_max,
            base_rate: 1e-3,
            signal: SignalSpec::default(),
            seed: 1,
            checkpoints: quartiles(j_max),
            factors: FactorParams::default(),
            archive_capacity: 64,
            restore_ratio: 2.0,
            forward_mode: ForwardMode::TeacherForced,
            literal_signs: false,
            resample: Resample::PerIteration,
            weight_init_scale: 0.5,
            train_weights: true,
            vanishing_window: 10_000,
        }
    }
}

/// `[j_max/4, j_max/2, 3 j_max/4, j_max]`, without zeros or duplicates.
pub fn quartiles(j_max: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=4).map(|q| j_max * q / 4).filter(|&j| j > 0).collect();
    v.dedup();
    v
}

impl TrainingConfig {
    /// Sets `j_max` and moves the checkpoints to its quartiles.
    pub fn with_iterations(mut self, j_max: usize) -> Self {
        self.j_max = j_max;
        self.checkpoints = quartiles(j_max);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_l_min(mut self, l_min: usize) -> Self {
        self.layout.l_min = l_min;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.layout.k_max = k_max;
        self
    }

    /// Applies the mode couplings: constant and random ranges carry no range
    /// learning, and the simple mode replaces gradient memory.
    pub fn normalized(mut self) -> Self {
        if self.range_mode != RangeMode::Optimized {
            self.memory_mode = MemoryMode::None;
            self.plasticity_mode = PlasticityMode::Off;
            self.phagocytic = false;
            self.simple_mode = SimpleMode::Off;
        }
        if self.simple_mode != SimpleMode::Off {
            self.memory_mode = MemoryMode::None;
        }
        self.checkpoints.sort_unstable();
        self.checkpoints.dedup();
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.signal.validate()?;
        self.factors.validate()?;
        let needed = self.layout.l_max + self.layout.m_max + 1;
        if self.signal.length <= needed {
            return Err(Error::Validation(format!(
                "signal length {} too short, needs more than {needed}",
                self.signal.length
            )));
        }
        if !(self.base_rate >= 0.0) || !self.base_rate.is_finite() {
            return Err(Error::Validation(format!("base_rate must be finite and non-negative")));
        }
        if !(self.weight_init_scale >= 0.0) || !self.weight_init_scale.is_finite() {
            return Err(Error::Validation(format!("weight_init_scale must be finite and non-negative")));
        }
        if !(self.restore_ratio > 0.0) {
            return Err(Error::Validation(format!("restore_ratio must be positive")));
        }
        if self.archive_capacity == 0 {
            return Err(Error::Validation(format!("archive_capacity must be at least 1")));
        }
        if let Some(c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.j_max) {
            return Err(Error::Validation(format!(
                "checkpoint {c} outside 1..={}",
                self.j_max
            )));
        }
        if self.simple_mode != SimpleMode::Off && self.range_mode != RangeMode::Optimized {
            return Err(Error::Validation(format!("simple mode needs optimized ranges")));
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let y = generate_signal(&self.signal)?;
        build_dataset(&y, self.layout.m_max, self.layout.l_max)
    }

    pub fn schedule(&self) -> LearningSchedule {
        LearningSchedule::new(0, self.j_max, self.base_rate)
    }
}

/// Named presets of the variant matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Crpnn,
    Rrpnn,
    Orpnn,
    OrpnnPf,
    OrpnnMfP,
    OrpnnMfPn,
    OrpnnMfPPf,
    OrpnnMfPnPf,
    SimplePf,
    SimplePfCorrected,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::Crpnn,
        Scenario::Rrpnn,
        Scenario::Orpnn,
        Scenario::OrpnnPf,
        Scenario::OrpnnMfP,
        Scenario::OrpnnMfPn,
        Scenario::OrpnnMfPPf,
        Scenario::OrpnnMfPnPf,
        Scenario::SimplePf,
        Scenario::SimplePfCorrected,
    ];

    /// Optimized-range presets that carry at least one factor.
    pub const FACTOR_PRESETS: [Scenario; 5] = [
        Scenario::OrpnnPf,
        Scenario::OrpnnMfP,
        Scenario::OrpnnMfPn,
        Scenario::OrpnnMfPPf,
        Scenario::OrpnnMfPnPf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Crpnn => "CRPNN",
            Scenario::Rrpnn => "RRPNN",
            Scenario::Orpnn => "ORPNN",
            Scenario::OrpnnPf => "ORPNN-PF",
            Scenario::OrpnnMfP => "ORPNN-MF(P)",
            Scenario::OrpnnMfPn => "ORPNN-MF(P&N)",
            Scenario::OrpnnMfPPf => "ORPNN-MF(P)-PF",
            Scenario::OrpnnMfPnPf => "ORPNN-MF(P&N)-PF",
            Scenario::SimplePf => "SIMPLE-PF",
            Scenario::SimplePfCorrected => "SIMPLE-PF-CORR",
        }
    }

    /// Overwrites the variant fields of `base`, keeping sizes, signal and seed.
    pub fn configure(self, base: TrainingConfig) -> TrainingConfig {
        let (range_mode, memory_mode, plasticity_mode, phagocytic, simple_mode) = match self {
            Scenario::Crpnn => (RangeMode::Constant, MemoryMode::None, PlasticityMode::Off, false, SimpleMode::Off),
            Scenario::Rrpnn => (RangeMode::Random, MemoryMode::None, PlasticityMode::Off, false, SimpleMode::Off),
            Scenario::Orpnn => (RangeMode::Optimized, MemoryMode::None, PlasticityMode::Off, false, SimpleMode::Off),
            Scenario::OrpnnPf => (RangeMode::Optimized, MemoryMode::None, PlasticityMode::Best, true, SimpleMode::Off),
            Scenario::OrpnnMfP => (RangeMode::Optimized, MemoryMode::Positive, PlasticityMode::Off, false, SimpleMode::Off),
            Scenario::OrpnnMfPn => (RangeMode::Optimized, MemoryMode::PositiveNegative, PlasticityMode::Off, false, SimpleMode::Off),
            Scenario::OrpnnMfPPf => (RangeMode::Optimized, MemoryMode::Positive, PlasticityMode::Best, true, SimpleMode::Off),
            Scenario::OrpnnMfPnPf => (RangeMode::Optimized, MemoryMode::PositiveNegative, PlasticityMode::Best, true, SimpleMode::Off),
            Scenario::SimplePf => (RangeMode::Optimized, MemoryMode::None, PlasticityMode::Best, true, SimpleMode::NoCorrection),
            Scenario::SimplePfCorrected => (RangeMode::Optimized, MemoryMode::None, PlasticityMode::Best, true, SimpleMode::CorrCorrection),
        };
        let mut config = TrainingConfig {
            range_mode,
            memory_mode,
            plasticity_mode,
            phagocytic,
            simple_mode,
            ..base
        };
        config.factors.memory_decay = memory_mode.default_decay();
        config.normalized()
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == wanted)
            .ok_or_else(|| Error::Validation(format!("unknown scenario `{s}`")))
    }
}

impl core::fmt::Display for Scenario {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossRecord {
    pub iteration: usize,
    pub mse: f64,
    pub corr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Checkpoint {
    pub iteration: usize,
    pub corr: Option<f64>,
    /// `n1[m][k]` at this iteration.
    pub n1: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub config: TrainingConfig,
    pub initial_loss: f64,
    pub initial_corr: Option<f64>,
    pub loss_history: Vec<LossRecord>,
    pub corr_final: Option<f64>,
    pub checkpoints: Vec<Checkpoint>,
    pub final_n1: Vec<Vec<usize>>,
    pub final_r: Vec<Vec<f64>>,
    /// Sample standard deviation of each variable's final ranges.
    pub range_std: Vec<f64>,
    /// Iterations in which any integer range changed.
    pub activity: usize,
    pub reverted_count: usize,
    pub memory_fallbacks: usize,
    pub plasticity_fallbacks: usize,
    /// Range updates cancelled by the correlation check of the simple mode.
    pub cancelled_updates: usize,
    pub conservation_violations: usize,
    pub vanishing_gradient: bool,
    pub targets: Vec<f64>,
    pub final_h: Vec<f64>,
}

impl RunReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_history
            .last()
            .map_or(self.initial_loss, |r| r.mse)
    }

    /// Mean `log10(mse)` over the last tenth of the iterations.
    pub fn final_decile_log_loss(&self) -> f64 {
        let n = self.loss_history.len();
        if n == 0 {
            return libm::log10(self.initial_loss.max(LOSS_FLOOR));
        }
        let take = (n / 10).max(1);
        self.loss_history[n - take..]
            .iter()
            .map(|r| libm::log10(r.mse.max(LOSS_FLOOR)))
            .sum::<f64>()
            / take as f64
    }

    /// Distinct range lengths seen by variable `m` across every checkpoint.
    pub fn distinct_ranges(&self, m: usize) -> usize {
        let mut seen: Vec<usize> = self
            .checkpoints
            .iter()
            .flat_map(|c| c.n1[m].iter().copied())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Losses are floored here before taking logarithms.
pub const LOSS_FLOOR: f64 = 1e-30;

/// Restores the connection weights from the best snapshot when `current_loss`
/// exceeds `ratio` times the best loss. Returns whether it restored.
pub fn elitism_check(
    current_loss: f64,
    archive: &MemoryArchive,
    w: &mut ConnectionWeights,
    ratio: f64,
) -> bool {
    let Some(best) = archive.best() else {
        return false;
    };
    if ratio.is_finite() && current_loss > ratio * best.loss {
        *w = best.w.clone();
        true
    } else {
        false
    }
}

/// Correlation of `f` and `h` over each synapse's steps `n3(m,k)..=n3(m,k+1)`
/// (clipped to the window). `None` where it is undefined.
pub fn range_correlations(
    trajectory: &Trajectory,
    dataset: &Dataset,
    layout: &SynapticLayout,
) -> Vec<Vec<Option<f64>>> {
    let l_max = layout.l_max();
    layout
        .rows()
        .iter()
        .map(|row| {
            (0..row.k_max())
                .map(|k| {
                    let lo = row.n3[k];
                    let hi = row.n3[k + 1].min(l_max);
                    pearson(&dataset.targets()[lo - 1..hi], &trajectory.h[lo - 1..hi]).ok()
                })
                .collect()
        })
        .collect()
}

/// Keeps `new_r[m][k]` only where its range correlation did not drop; an
/// undefined new correlation counts as a drop. Returns the merged weights and the
/// number of cancelled coordinates.
pub fn cancel_worsened(
    previous_r: &[Vec<f64>],
    new_r: &[Vec<f64>],
    previous_corr: &[Vec<Option<f64>>],
    new_corr: &[Vec<Option<f64>>],
) -> (Vec<Vec<f64>>, usize) {
    let mut cancelled = 0;
    let merged = new_r
        .iter()
        .enumerate()
        .map(|(m, row)| {
            row.iter()
                .enumerate()
                .map(|(k, &value)| {
                    let keep = match (previous_corr[m][k], new_corr[m][k]) {
                        (_, None) => false,
                        (None, Some(_)) => true,
                        (Some(old), Some(new)) => new >= old,
                    };
                    if keep {
                        value
                    } else {
                        cancelled += 1;
                        previous_r[m][k]
                    }
                })
                .collect()
        })
        .collect();
    (merged, cancelled)
}

/// Result of one simple-mode range update.
#[derive(Debug, Clone)]
pub struct SimpleOutcome {
    pub layout: SynapticLayout,
    pub trajectory: Trajectory,
    pub cancelled: usize,
    pub fallback: bool,
}

/// Simple-mode range update: plasticity update with `P` on every range weight,
/// no gradient. With correlation correction, each coordinate whose range
/// correlation got worse than in the previous generation is reverted.
#[allow(clippy::too_many_arguments)]
pub fn simple_pnn_step<R: RngCore + ?Sized>(
    dataset: &Dataset,
    w: &ConnectionWeights,
    layout: &SynapticLayout,
    previous_corr: &[Vec<Option<f64>>],
    recall: Option<&Recall<'_>>,
    config: &TrainingConfig,
    j: usize,
    rng: &mut R,
) -> Result<SimpleOutcome> {
    if config.simple_mode == SimpleMode::Off {
        return Err(Error::Validation(format!("simple mode is off")));
    }
    let previous_r = layout.range_weights();
    let settings = PlasticitySettings {
        mode: config.plasticity_mode,
        factors: &config.factors,
        phagocytic: config.phagocytic,
        repel: config.literal_signs,
        j,
        j_max: config.j_max,
    };
    let (candidate_r, fallback) = plasticity_step(&previous_r, recall, &settings, rng);
    let candidate = rebalance(&candidate_r, &config.layout)?;
    let candidate_traj = forward(dataset, &candidate, w, config.forward_mode)?;
    if config.simple_mode == SimpleMode::NoCorrection {
        return Ok(SimpleOutcome {
            layout: candidate,
            trajectory: candidate_traj,
            cancelled: 0,
            fallback,
        });
    }
    let new_corr = range_correlations(&candidate_traj, dataset, &candidate);
    let (merged, cancelled) = cancel_worsened(&previous_r, &candidate_r, previous_corr, &new_corr);
    let layout = rebalance(&merged, &config.layout)?;
    let trajectory = forward(dataset, &layout, w, config.forward_mode)?;
    Ok(SimpleOutcome {
        layout,
        trajectory,
        cancelled,
        fallback,
    })
}

/// Integer ranges at one checkpoint.
pub fn checkpoint_snapshot(layout: &SynapticLayout, iteration: usize, corr: Option<f64>) -> Checkpoint {
    Checkpoint {
        iteration,
        corr,
        n1: layout.lengths(),
    }
}

fn random_weights(params: &LayoutParams, rng: &mut RunRng) -> Vec<Vec<f64>> {
    (0..params.m_max)
        .map(|_| {
            (0..params.k_max)
                .map(|_| clamp_weight(rng::unit(rng)))
                .collect()
        })
        .collect()
}

/// Builds the dataset from the config's signal and trains.
pub fn train_config(config: &TrainingConfig) -> Result<RunReport> {
    let config = config.clone().normalized();
    config.validate()?;
    let dataset = config.dataset()?;
    train(&config, &dataset)
}

struct Sweep<'a> {
    config: &'a TrainingConfig,
    dataset: &'a Dataset,
}

impl Sweep<'_> {
    /// Per variable, per synapse, per step: connection-weight updates and, for
    /// optimized ranges, the range-weight update. Returns the applied range
    /// gradients and the number of memory fallbacks.
    fn run(
        &self,
        layout: &SynapticLayout,
        trajectory: &Trajectory,
        w: &mut ConnectionWeights,
        r: &mut [Vec<f64>],
        recall: Option<&Recall<'_>>,
        j: usize,
        rng: &mut RunRng,
    ) -> Result<(Vec<Vec<f64>>, usize)> {
        let config = self.config;
        let params = &config.layout;
        let rate = config.schedule().at(j).rate();
        let direction = if config.literal_signs { -1.0 } else { 1.0 };
        let learn_ranges =
            config.range_mode == RangeMode::Optimized && config.simple_mode == SimpleMode::Off;
        let use_memory = learn_ranges
            && config.memory_mode != MemoryMode::None
            && memory_available(config.memory_mode, recall);
        let l_max = layout.l_max();
        let mut applied = vec![vec![0.0; params.k_max]; params.m_max];
        let mut fallbacks = 0;

        for m in 0..params.m_max {
            if learn_ranges {
                // gradients from the row as it stood when the sweep began
                let row = r[m].clone();
                for k in 0..params.k_max {
                    let surrogate =
                        boundary_surrogate(trajectory, self.dataset, layout, w, m, k)?;
                    let raw = if surrogate == 0.0 {
                        0.0
                    } else {
                        surrogate * range_sensitivity(&row, k, params)? * rate
                    };
                    applied[m][k] = -direction * raw;
                }
                for k in 0..params.k_max {
                    let g = applied[m][k];
                    let (value, fell_back) = if use_memory {
                        let rc = recall.expect("memory availability checked");
                        let terms = MemoryTerms::gradients(rc, m, k);
                        let factor = memory_factor(j, config.j_max, config.factors.memory_decay, rng);
                        memory_update(row[k], g, Some(&terms), config.memory_mode, factor)
                    } else {
                        memory_update(row[k], g, None, MemoryMode::None, 0.0)
                    };
                    r[m][k] = value;
                    if fell_back {
                        fallbacks += 1;
                    }
                }
                if config.memory_mode != MemoryMode::None && !use_memory {
                    fallbacks += params.k_max;
                }
            }
            if config.train_weights {
                let row = layout.row(m);
                for k in 0..params.k_max {
                    for step in row.steps(k) {
                        if step + 1 > l_max {
                            break;
                        }
                        let g = weight_gradient(trajectory, self.dataset, m, step + 1, rate);
                        w.add(m, k, direction * g);
                    }
                }
            }
        }
        Ok((applied, fallbacks))
    }
}

pub fn train(config: &TrainingConfig, dataset: &Dataset) -> Result<RunReport> {
    config.validate()?;
    let params = config.layout;
    if dataset.m_max() != params.m_max || dataset.window_length() != params.l_max {
        return Err(Error::Validation(format!(
            "dataset is {} x {}, layout expects {} x {}",
            dataset.m_max(),
            dataset.window_length(),
            params.m_max,
            params.l_max
        )));
    }
    let mut rng = rng::seeded(config.seed);
    let mut w = ConnectionWeights::random(params.m_max, params.k_max, config.weight_init_scale, &mut rng);
    let mut r = match config.range_mode {
        RangeMode::Constant => vec![vec![1.0; params.k_max]; params.m_max],
        RangeMode::Random | RangeMode::Optimized => random_weights(&params, &mut rng),
    };
    let mut layout = rebalance(&r, &params)?;
    let mut trajectory = forward(dataset, &layout, &w, config.forward_mode)?;
    let initial_loss = mse_loss(&trajectory, dataset);
    if !initial_loss.is_finite() {
        return Err(Error::Divergence { iteration: 0 });
    }
    let initial_corr = pearson(&trajectory.h, dataset.targets()).ok();

    let mut archive = MemoryArchive::new(config.archive_capacity);
    archive.record(Snapshot {
        iteration: 0,
        loss: initial_loss,
        r: r.clone(),
        g_r: vec![vec![0.0; params.k_max]; params.m_max],
        w: w.clone(),
    });

    let simple = config.simple_mode != SimpleMode::Off;
    let mut range_corr = range_correlations(&trajectory, dataset, &layout);
    let sweep = Sweep { config, dataset };
    let needs_recall = config.range_mode == RangeMode::Optimized
        && (config.plasticity_mode != PlasticityMode::Off || config.memory_mode != MemoryMode::None);

    let mut report = RunReport {
        config: config.clone(),
        initial_loss,
        initial_corr,
        loss_history: Vec::with_capacity(config.j_max),
        corr_final: None,
        checkpoints: Vec::with_capacity(config.checkpoints.len()),
        final_n1: Vec::new(),
        final_r: Vec::new(),
        range_std: Vec::new(),
        activity: 0,
        reverted_count: 0,
        memory_fallbacks: 0,
        plasticity_fallbacks: 0,
        cancelled_updates: 0,
        conservation_violations: 0,
        vanishing_gradient: false,
        targets: dataset.targets().to_vec(),
        final_h: Vec::new(),
    };
    let mut frozen_for = 0usize;
    let mut next_checkpoint = 0usize;

    for j in 1..=config.j_max {
        let lengths_before = layout.lengths();

        if config.range_mode == RangeMode::Random
            && (config.resample == Resample::PerIteration || j == 1)
        {
            if config.resample == Resample::PerIteration {
                r = random_weights(&params, &mut rng);
                layout = rebalance(&r, &params)?;
                trajectory = forward(dataset, &layout, &w, config.forward_mode)?;
            }
        }

        let recall = if needs_recall { archive.recall(&mut rng) } else { None };

        if config.range_mode == RangeMode::Optimized {
            if simple {
                let outcome = simple_pnn_step(
                    dataset,
                    &w,
                    &layout,
                    &range_corr,
                    recall.as_ref(),
                    config,
                    j,
                    &mut rng,
                )?;
                layout = outcome.layout;
                trajectory = outcome.trajectory;
                r = layout.range_weights();
                report.cancelled_updates += outcome.cancelled;
                if outcome.fallback {
                    report.plasticity_fallbacks += 1;
                }
            } else if config.plasticity_mode != PlasticityMode::Off {
                let settings = PlasticitySettings {
                    mode: config.plasticity_mode,
                    factors: &config.factors,
                    phagocytic: config.phagocytic,
                    repel: config.literal_signs,
                    j,
                    j_max: config.j_max,
                };
                let (updated, fallback) = plasticity_step(&r, recall.as_ref(), &settings, &mut rng);
                r = updated;
                if fallback {
                    report.plasticity_fallbacks += 1;
                }
            }
        }

        let (applied, fallbacks) =
            sweep.run(&layout, &trajectory, &mut w, &mut r, recall.as_ref(), j, &mut rng)?;
        report.memory_fallbacks += fallbacks;
        drop(recall);

        if config.range_mode == RangeMode::Optimized && !simple {
            layout = rebalance(&r, &params)?;
        }
        if !layout.conserves() {
            report.conservation_violations += 1;
        }
        trajectory = forward(dataset, &layout, &w, config.forward_mode)?;
        let loss = mse_loss(&trajectory, dataset);
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: j });
        }
        let corr = pearson(&trajectory.h, dataset.targets()).ok();
        report.loss_history.push(LossRecord {
            iteration: j,
            mse: loss,
            corr,
        });

        archive.record(Snapshot {
            iteration: j,
            loss,
            r: r.clone(),
            g_r: applied,
            w: w.clone(),
        });
        if elitism_check(loss, &archive, &mut w, config.restore_ratio) {
            report.reverted_count += 1;
            trajectory = forward(dataset, &layout, &w, config.forward_mode)?;
        }
        if simple {
            range_corr = range_correlations(&trajectory, dataset, &layout);
        }

        if layout.lengths() != lengths_before {
            report.activity += 1;
            frozen_for = 0;
        } else {
            frozen_for += 1;
            if config.range_mode == RangeMode::Optimized && frozen_for >= config.vanishing_window {
                report.vanishing_gradient = true;
            }
        }

        while next_checkpoint < config.checkpoints.len() && config.checkpoints[next_checkpoint] == j {
            let corr = pearson(&trajectory.h, dataset.targets()).ok();
            report.checkpoints.push(checkpoint_snapshot(&layout, j, corr));
            next_checkpoint += 1;
        }
    }

    report.corr_final = pearson(&trajectory.h, dataset.targets()).ok();
    report.final_n1 = layout.lengths();
    report.final_r = layout.range_weights();
    report.range_std = report
        .final_n1
        .iter()
        .map(|row| sample_std(&row.iter().map(|&n| n as f64).collect::<Vec<_>>()))
        .collect();
    report.final_h = trajectory.h.clone();
    Ok(report)
}

/// Final ranges of variable `m` rendered per synapse across checkpoints.
pub fn range_strings(report: &RunReport, m: usize) -> Vec<String> {
    let k_max = report.final_n1.first().map_or(0, Vec::len);
    (0..k_max)
        .map(|k| {
            let values: Vec<usize> = report.checkpoints.iter().map(|c| c.n1[m][k]).collect();
            crate::topology::range_string(&values)
        })
        .collect()
}

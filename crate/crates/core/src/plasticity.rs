//! Range-weight learning: the competitive range gradient, the memory
//! persistence factor `M`, the phagocytic disturbance `P`, the best/worse/better
//! archive, and the plasticity updates that recombine archived range weights.
//!
//! Gradients passed to [`memory_update`] and stored in snapshots are *applied*
//! gradients: `r - g` is the plain update. The trainer converts the raw
//! [`grad_r`] value according to its sign convention.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::network::{ConnectionWeights, LearningSchedule, Trajectory};
use crate::rng::{signed_coin, unit};
use crate::signal::Dataset;
use crate::topology::{clamp_weight, range_sensitivity, LayoutParams, SynapticLayout};

/// Memory terms mixed into the range update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MemoryMode {
    #[default]
    None,
    /// Best gradient only (positive memory).
    Positive,
    /// Best and worse gradients, weights 0.6666 / 0.3333.
    PositiveNegative,
    /// Best, worse and better gradients, weights 0.5 / 0.25 / 0.25.
    PositiveNegativeBetter,
}

impl MemoryMode {
    /// `(MW1, MW2, MW3)` for the mode.
    pub fn mnemonic_weights(self) -> (f64, f64, f64) {
        match self {
            MemoryMode::None => (0.0, 0.0, 0.0),
            MemoryMode::Positive => (1.0, 0.0, 0.0),
            MemoryMode::PositiveNegative => (0.6666, 0.3333, 0.0),
            MemoryMode::PositiveNegativeBetter => (0.5, 0.25, 0.25),
        }
    }

    /// Decay of `M`: 5 for positive-only memory, 7 once negative memory is mixed in.
    pub fn default_decay(self) -> f64 {
        match self {
            MemoryMode::None | MemoryMode::Positive => 5.0,
            MemoryMode::PositiveNegative | MemoryMode::PositiveNegativeBetter => 7.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PlasticityMode {
    #[default]
    Off,
    Best,
    ThreeMemory,
    Quantum,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorParams {
    pub memory_decay: f64,
    /// Scale of the Monte-Carlo term in the quantum update.
    pub beta: f64,
    /// Number of archived worse/better entries averaged by the quantum update.
    pub window_length: usize,
    /// `(MW1, MW2)` of the quantum update.
    pub quantum_weights: (f64, f64),
}

impl Default for FactorParams {
    fn default() -> Self {
        Self {
            memory_decay: 5.0,
            beta: 1.0,
            window_length: 10,
            quantum_weights: (1.0, 1.0),
        }
    }
}

impl FactorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.memory_decay > 0.0) || !self.memory_decay.is_finite() {
            return Err(Error::Validation(format!("memory_decay must be positive")));
        }
        if self.window_length == 0 {
            return Err(Error::Validation(format!("window_length must be at least 1")));
        }
        if !self.beta.is_finite() {
            return Err(Error::Validation(format!("beta must be finite")));
        }
        Ok(())
    }
}

fn progress(j: usize, j_max: usize) -> f64 {
    if j_max == 0 {
        0.0
    } else {
        (j.min(j_max)) as f64 / j_max as f64
    }
}

/// Upper envelope of `M` at iteration `j`.
pub fn memory_envelope(j: usize, j_max: usize, decay: f64) -> f64 {
    libm::exp(-decay * progress(j, j_max))
}

/// Upper envelope of `|P|` at iteration `j`.
pub fn phagocytic_envelope(j: usize, j_max: usize) -> f64 {
    1.0 - progress(j, j_max)
}

/// `M = exp(-decay * j / j_max) * rand`.
pub fn memory_factor<R: RngCore + ?Sized>(j: usize, j_max: usize, decay: f64, rng: &mut R) -> f64 {
    memory_envelope(j, j_max, decay) * unit(rng)
}

/// `P = sign(rand - 0.5) * rand * (j_max - j) / j_max`, two independent draws.
pub fn phagocytic_factor<R: RngCore + ?Sized>(j: usize, j_max: usize, rng: &mut R) -> f64 {
    let sign = signed_coin(unit(rng));
    let magnitude = unit(rng);
    sign * magnitude * phagocytic_envelope(j, j_max)
}

/// First-order effect on the loss-reducing direction of moving the right
/// boundary of synapse `k` one step later.
///
/// The step `p = n3(m, k + 1)` passes from synapse `k + 1` to `k`, changing its
/// pre-activation by `(w(m, k) - w(m, k + 1)) * x_m(p)`; that step feeds the
/// prediction at `p + 1`. The value is `e(p + 1) * [1 - df(p)^2] * D` and is
/// zero for the last synapse or when `p` is the final step.
pub fn boundary_surrogate(
    trajectory: &Trajectory,
    dataset: &Dataset,
    layout: &SynapticLayout,
    w: &ConnectionWeights,
    m: usize,
    k: usize,
) -> Result<f64> {
    let k_max = layout.k_max();
    if m >= layout.m_max() || k >= k_max {
        return Err(Error::Index(format!(
            "synapse ({m}, {k}) outside {} x {k_max}",
            layout.m_max()
        )));
    }
    if k + 1 == k_max {
        return Ok(0.0);
    }
    let p = layout.row(m).n3[k + 1];
    if p + 1 > layout.l_max() {
        return Ok(0.0);
    }
    let reassign = (w.get(m, k) - w.get(m, k + 1)) * dataset.x(m, p);
    let err = dataset.f(p + 1) - trajectory.h(p + 1);
    let df = trajectory.delta_f(p);
    Ok(err * (1.0 - df * df) * reassign)
}

/// Raw range-weight gradient: boundary surrogate times the rebalance chain term
/// times the learning rate. Positive values mean a longer range for `k` lowers
/// the loss.
#[allow(clippy::too_many_arguments)]
pub fn grad_r(
    trajectory: &Trajectory,
    dataset: &Dataset,
    layout: &SynapticLayout,
    w: &ConnectionWeights,
    params: &LayoutParams,
    m: usize,
    k: usize,
    schedule: &LearningSchedule,
) -> Result<f64> {
    let surrogate = boundary_surrogate(trajectory, dataset, layout, w, m, k)?;
    if surrogate == 0.0 {
        return Ok(0.0);
    }
    let chain = range_sensitivity(&layout.row(m).r, k, params)?;
    Ok(surrogate * chain * schedule.rate())
}

/// Archived state of one iteration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub iteration: usize,
    pub loss: f64,
    pub r: Vec<Vec<f64>>,
    /// Applied range gradients of that iteration.
    pub g_r: Vec<Vec<f64>>,
    pub w: ConnectionWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossTrend {
    First,
    Worse,
    Better,
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MemoryArchive {
    best: Option<Snapshot>,
    worse: VecDeque<Snapshot>,
    better: VecDeque<Snapshot>,
    capacity: usize,
    last_loss: Option<f64>,
}

impl MemoryArchive {
    pub fn new(capacity: usize) -> Self {
        Self {
            best: None,
            worse: VecDeque::new(),
            better: VecDeque::new(),
            capacity: capacity.max(1),
            last_loss: None,
        }
    }

    pub fn best(&self) -> Option<&Snapshot> {
        self.best.as_ref()
    }

    pub fn worse_set(&self) -> &VecDeque<Snapshot> {
        &self.worse
    }

    pub fn better_set(&self) -> &VecDeque<Snapshot> {
        &self.better
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Files a snapshot by comparing its loss with the previous record.
    pub fn record(&mut self, snapshot: Snapshot) -> LossTrend {
        let loss = snapshot.loss;
        let trend = match self.last_loss {
            None => LossTrend::First,
            Some(prev) if loss > prev => LossTrend::Worse,
            Some(prev) if loss < prev => LossTrend::Better,
            Some(_) => LossTrend::Flat,
        };
        self.last_loss = Some(loss);
        let improves = self.best.as_ref().map_or(true, |b| loss < b.loss);
        match trend {
            LossTrend::Worse => push_bounded(&mut self.worse, snapshot.clone(), self.capacity),
            LossTrend::Better => push_bounded(&mut self.better, snapshot.clone(), self.capacity),
            _ => {}
        }
        if improves {
            self.best = Some(snapshot);
        }
        trend
    }

    /// Best snapshot plus recency-weighted draws from the worse and better sets
    /// (worse drawn first).
    pub fn recall<R: RngCore + ?Sized>(&self, rng: &mut R) -> Option<Recall<'_>> {
        let best = self.best.as_ref()?;
        let worse = sample_historic(&self.worse, rng);
        let better = sample_historic(&self.better, rng);
        Some(Recall {
            best,
            worse,
            better,
            worse_window: tail(&self.worse),
            better_window: tail(&self.better),
        })
    }
}

fn tail(set: &VecDeque<Snapshot>) -> Vec<&Snapshot> {
    set.iter().collect()
}

fn push_bounded(set: &mut VecDeque<Snapshot>, snapshot: Snapshot, capacity: usize) {
    if set.len() == capacity {
        set.pop_front();
    }
    set.push_back(snapshot);
}

/// Draws entry `i` (0-based) with probability proportional to `i + 1`, so later
/// entries are more likely. `None` for an empty set.
pub fn sample_historic<'a, R: RngCore + ?Sized>(
    set: &'a VecDeque<Snapshot>,
    rng: &mut R,
) -> Option<&'a Snapshot> {
    let n = set.len();
    if n == 0 {
        return None;
    }
    set.get(recency_index(n, unit(rng)))
}

/// Index selected by `u` in `[0, 1)` under linear recency weights `1..=n`.
pub fn recency_index(n: usize, u: f64) -> usize {
    let total = (n * (n + 1) / 2) as f64;
    let target = u * total;
    let mut cumulative = 0.0;
    for i in 0..n {
        cumulative += (i + 1) as f64;
        if target < cumulative {
            return i;
        }
    }
    n - 1
}

/// Snapshots recalled for one iteration.
#[derive(Debug, Clone)]
pub struct Recall<'a> {
    pub best: &'a Snapshot,
    pub worse: Option<&'a Snapshot>,
    pub better: Option<&'a Snapshot>,
    /// Whole worse set, oldest first.
    pub worse_window: Vec<&'a Snapshot>,
    /// Whole better set, oldest first.
    pub better_window: Vec<&'a Snapshot>,
}

/// Archived gradients for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryTerms {
    pub best: f64,
    pub worse: Option<f64>,
    pub better: Option<f64>,
}

impl MemoryTerms {
    pub fn gradients(recall: &Recall<'_>, m: usize, k: usize) -> Self {
        Self {
            best: recall.best.g_r[m][k],
            worse: recall.worse.map(|s| s.g_r[m][k]),
            better: recall.better.map(|s| s.g_r[m][k]),
        }
    }
}

/// One coordinate of the range update with memory:
///
/// - none: `r - g`
/// - positive: `r - g + (g_best - g) * M`
/// - positive/negative: `r - g + (0.6666 g_best + 0.3333 g_worse - g) * M`
/// - three-term: `r - g + (0.5 g_best + 0.25 g_worse + 0.25 g_better - g) * M`
///
/// Returns the clamped value and whether the update fell back to the plain form
/// because the archive lacked a required term.
pub fn memory_update(
    r: f64,
    g: f64,
    terms: Option<&MemoryTerms>,
    mode: MemoryMode,
    m_factor: f64,
) -> (f64, bool) {
    let plain = r - g;
    let mnemonic = match (mode, terms) {
        (MemoryMode::None, _) => return (clamp_weight(plain), false),
        (_, None) => None,
        (MemoryMode::Positive, Some(t)) => Some(t.best),
        (MemoryMode::PositiveNegative, Some(t)) => t.worse.map(|worse| {
            let (w1, w2, _) = mode.mnemonic_weights();
            w1 * t.best + w2 * worse
        }),
        (MemoryMode::PositiveNegativeBetter, Some(t)) => match (t.worse, t.better) {
            (Some(worse), Some(better)) => {
                let (w1, w2, w3) = mode.mnemonic_weights();
                Some(w1 * t.best + w2 * worse + w3 * better)
            }
            _ => None,
        },
    };
    match mnemonic {
        Some(mix) => (clamp_weight(plain + (mix - g) * m_factor), false),
        None => (clamp_weight(plain), true),
    }
}

/// Whether `mode` can be served by this recall.
pub fn memory_available(mode: MemoryMode, recall: Option<&Recall<'_>>) -> bool {
    match (mode, recall) {
        (MemoryMode::None, _) => true,
        (_, None) => false,
        (MemoryMode::Positive, Some(_)) => true,
        (MemoryMode::PositiveNegative, Some(r)) => r.worse.is_some(),
        (MemoryMode::PositiveNegativeBetter, Some(r)) => r.worse.is_some() && r.better.is_some(),
    }
}

/// Attraction toward the best snapshot: `r + (r_best - r) * u + P`.
/// `repel` gives the printed `r - (r_best - r) * u + P` form instead.
pub fn best_update(r: f64, r_best: f64, u: f64, p: f64, repel: bool) -> f64 {
    let pull = (r_best - r) * u;
    clamp_weight(if repel { r - pull } else { r + pull } + p)
}

/// `r + (0.5 r_best + 0.25 r_worse + 0.25 r_better - r) * u + P`.
pub fn three_memory_update(r: f64, best: f64, worse: f64, better: f64, u: f64, p: f64) -> f64 {
    clamp_weight(r + (0.5 * best + 0.25 * worse + 0.25 * better - r) * u + p)
}

/// Random draws consumed by one coordinate of the quantum update.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumDraws {
    pub u1: f64,
    pub u2: f64,
    pub sign: f64,
    pub worse_gates: Vec<bool>,
    pub better_gates: Vec<bool>,
    /// Draw in `(0, 1]` feeding `ln(1 / u)`.
    pub log_draw: f64,
    pub p: f64,
}

/// Monte-Carlo recombination of archived range weights:
///
/// `(2 - u1 - u2)/2 r_best + u1/2 r_worse + u2/2 r_better
///  + sign * beta * [MW1 * mean_gated(worse window) + MW2 * mean_gated(better window) - r]
///  * ln(1 / u) + P`
///
/// Each gated sum is divided by its window length; an empty window contributes 0.
#[allow(clippy::too_many_arguments)]
pub fn quantum_update(
    r: f64,
    best: f64,
    worse: f64,
    better: f64,
    worse_window: &[f64],
    better_window: &[f64],
    draws: &QuantumDraws,
    beta: f64,
    weights: (f64, f64),
) -> f64 {
    let gated = |window: &[f64], gates: &[bool]| -> f64 {
        if window.is_empty() {
            return 0.0;
        }
        window
            .iter()
            .zip(gates)
            .filter(|(_, open)| **open)
            .map(|(v, _)| *v)
            .sum::<f64>()
            / window.len() as f64
    };
    let convex = (2.0 - draws.u1 - draws.u2) / 2.0 * best
        + draws.u1 / 2.0 * worse
        + draws.u2 / 2.0 * better;
    let bracket = weights.0 * gated(worse_window, &draws.worse_gates)
        + weights.1 * gated(better_window, &draws.better_gates)
        - r;
    let spread = if beta == 0.0 {
        0.0
    } else {
        draws.sign * beta * bracket * libm::log(1.0 / draws.log_draw)
    };
    clamp_weight(convex + spread + draws.p)
}

/// Settings for one plasticity pass.
#[derive(Debug, Clone, Copy)]
pub struct PlasticitySettings<'a> {
    pub mode: PlasticityMode,
    pub factors: &'a FactorParams,
    pub phagocytic: bool,
    pub repel: bool,
    pub j: usize,
    pub j_max: usize,
}

/// Applies the plasticity update to every range weight.
///
/// Without a best snapshot only `P` is applied; three-memory and quantum forms
/// substitute the best snapshot for a missing worse or better one. The second
/// return value reports such a fallback.
pub fn plasticity_step<R: RngCore + ?Sized>(
    r: &[Vec<f64>],
    recall: Option<&Recall<'_>>,
    settings: &PlasticitySettings<'_>,
    rng: &mut R,
) -> (Vec<Vec<f64>>, bool) {
    let PlasticitySettings {
        mode,
        factors,
        phagocytic,
        repel,
        j,
        j_max,
    } = *settings;
    if mode == PlasticityMode::Off {
        return (r.to_vec(), false);
    }
    let mut fallback = recall.is_none();
    if let Some(rc) = recall {
        if mode != PlasticityMode::Best && (rc.worse.is_none() || rc.better.is_none()) {
            fallback = true;
        }
    }
    let window = factors.window_length;
    let draw_p = |rng: &mut R| {
        if phagocytic {
            phagocytic_factor(j, j_max, rng)
        } else {
            0.0
        }
    };
    let mut out = r.to_vec();
    for (m, row) in out.iter_mut().enumerate() {
        for (k, value) in row.iter_mut().enumerate() {
            let current = *value;
            let Some(rc) = recall else {
                *value = clamp_weight(current + draw_p(rng));
                continue;
            };
            let best = rc.best.r[m][k];
            let worse = rc.worse.map_or(best, |s| s.r[m][k]);
            let better = rc.better.map_or(best, |s| s.r[m][k]);
            *value = match mode {
                PlasticityMode::Off => current,
                PlasticityMode::Best => {
                    let u = unit(rng);
                    best_update(current, best, u, draw_p(rng), repel)
                }
                PlasticityMode::ThreeMemory => {
                    let u = unit(rng);
                    three_memory_update(current, best, worse, better, u, draw_p(rng))
                }
                PlasticityMode::Quantum => {
                    let worse_window: Vec<f64> = last_n(&rc.worse_window, window)
                        .iter()
                        .map(|s| s.r[m][k])
                        .collect();
                    let better_window: Vec<f64> = last_n(&rc.better_window, window)
                        .iter()
                        .map(|s| s.r[m][k])
                        .collect();
                    let u1 = unit(rng);
                    let u2 = unit(rng);
                    let sign = signed_coin(unit(rng));
                    let worse_gates = worse_window.iter().map(|_| unit(rng) > 0.5).collect();
                    let better_gates = better_window.iter().map(|_| unit(rng) > 0.5).collect();
                    let log_draw = 1.0 - unit(rng);
                    let draws = QuantumDraws {
                        u1,
                        u2,
                        sign,
                        worse_gates,
                        better_gates,
                        log_draw,
                        p: draw_p(rng),
                    };
                    quantum_update(
                        current,
                        best,
                        worse,
                        better,
                        &worse_window,
                        &better_window,
                        &draws,
                        factors.beta,
                        factors.quantum_weights,
                    )
                }
            };
        }
    }
    (out, fallback)
}

fn last_n<'a, 'b>(window: &'b [&'a Snapshot], n: usize) -> &'b [&'a Snapshot] {
    &window[window.len().saturating_sub(n)..]
}

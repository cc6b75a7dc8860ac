//! Forward pass of the segmented predictor and the connection-weight gradient.
//!
//! At step `t` each variable contributes through the weight of the synapse that
//! owns `t`: `s(t) = sum_m w(m, k(m, t)) * x_m(t)` and `df(t) = tanh(s(t))`. The
//! increment predicts the next output, `h(t + 1) = f(t) + df(t)` when teacher
//! forced or `h(t + 1) = h(t) + df(t)` when free running, with `h(1) = f(1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng;
use crate::signal::Dataset;
use crate::topology::SynapticLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ForwardMode {
    #[default]
    TeacherForced,
    FreeRunning,
}

/// Shared connection weights `w(m, k)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConnectionWeights {
    m_max: usize,
    k_max: usize,
    values: Vec<f64>,
}

impl ConnectionWeights {
    pub fn zeros(m_max: usize, k_max: usize) -> Self {
        Self::filled(m_max, k_max, 0.0)
    }

    pub fn filled(m_max: usize, k_max: usize, value: f64) -> Self {
        Self {
            m_max,
            k_max,
            values: vec![value; m_max * k_max],
        }
    }

    /// Uniform in `[-scale, scale)`.
    pub fn random<R: RngCore + ?Sized>(m_max: usize, k_max: usize, scale: f64, rng: &mut R) -> Self {
        let values = (0..m_max * k_max)
            .map(|_| rng::uniform(rng, -scale, scale))
            .collect();
        Self {
            m_max,
            k_max,
            values,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m_max = rows.len();
        let k_max = rows.first().map_or(0, Vec::len);
        if m_max == 0 || k_max == 0 || rows.iter().any(|r| r.len() != k_max) {
            return Err(Error::Shape(format!("weight rows must be non-empty and equal length")));
        }
        Ok(Self {
            m_max,
            k_max,
            values: rows.concat(),
        })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.values[m * self.k_max + k]
    }

    #[inline]
    pub fn set(&mut self, m: usize, k: usize, value: f64) {
        self.values[m * self.k_max + k] = value;
    }

    #[inline]
    pub fn add(&mut self, m: usize, k: usize, delta: f64) {
        self.values[m * self.k_max + k] += delta;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.k_max).map(<[f64]>::to_vec).collect()
    }
}

/// Output trajectory of one forward pass; both series are indexed by 1-based step.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub h: Vec<f64>,
    pub delta_f: Vec<f64>,
}

impl Trajectory {
    #[inline]
    pub fn h(&self, t: usize) -> f64 {
        self.h[t - 1]
    }

    #[inline]
    pub fn delta_f(&self, t: usize) -> f64 {
        self.delta_f[t - 1]
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Weights plus the trajectory they produced.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub w: ConnectionWeights,
    pub trajectory: Trajectory,
}

/// Learning rate `base_rate * (j_max - j) / j_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LearningSchedule {
    pub j: usize,
    pub j_max: usize,
    pub base_rate: f64,
}

impl LearningSchedule {
    pub fn new(j: usize, j_max: usize, base_rate: f64) -> Self {
        Self { j, j_max, base_rate }
    }

    pub fn at(&self, j: usize) -> Self {
        Self { j, ..*self }
    }

    pub fn rate(&self) -> f64 {
        if self.j_max == 0 || self.j >= self.j_max {
            return 0.0;
        }
        self.base_rate * (self.j_max - self.j) as f64 / self.j_max as f64
    }
}

fn check_shapes(dataset: &Dataset, layout: &SynapticLayout, w: &ConnectionWeights) -> Result<()> {
    if dataset.m_max() != layout.m_max() || w.m_max() != layout.m_max() {
        return Err(Error::Shape(format!(
            "m_max mismatch: dataset {}, layout {}, weights {}",
            dataset.m_max(),
            layout.m_max(),
            w.m_max()
        )));
    }
    if dataset.window_length() != layout.l_max() {
        return Err(Error::Shape(format!(
            "window length {} does not match l_max {}",
            dataset.window_length(),
            layout.l_max()
        )));
    }
    if w.k_max() != layout.k_max() {
        return Err(Error::Shape(format!(
            "weights have {} synapses per variable, layout {}",
            w.k_max(),
            layout.k_max()
        )));
    }
    Ok(())
}

pub fn forward(
    dataset: &Dataset,
    layout: &SynapticLayout,
    w: &ConnectionWeights,
    mode: ForwardMode,
) -> Result<Trajectory> {
    check_shapes(dataset, layout, w)?;
    let l_max = layout.l_max();
    let m_max = layout.m_max();
    let mut delta_f = Vec::with_capacity(l_max);
    for t in 1..=l_max {
        let s: f64 = (0..m_max)
            .map(|m| w.get(m, layout.segment(m, t)) * dataset.x(m, t))
            .sum();
        delta_f.push(libm::tanh(s));
    }
    let mut h = Vec::with_capacity(l_max);
    h.push(dataset.f(1));
    for t in 1..l_max {
        let base = match mode {
            ForwardMode::TeacherForced => dataset.f(t),
            ForwardMode::FreeRunning => h[t - 1],
        };
        h.push(base + delta_f[t - 1]);
    }
    Ok(Trajectory { h, delta_f })
}

/// Mean of `(f - h)^2`.
pub fn mse(h: &[f64], f: &[f64]) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    h.iter().zip(f).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() / h.len() as f64
}

pub fn mse_loss(trajectory: &Trajectory, dataset: &Dataset) -> f64 {
    mse(&trajectory.h, dataset.targets())
}

pub fn pearson_corr(h: &[f64], f: &[f64]) -> Result<f64> {
    crate::stats::pearson(h, f)
}

/// Connection-weight gradient for the error at step `t`, whose pre-activation
/// step `t - 1` must belong to synapse `k` of variable `m`:
/// `[f(t) - h(t)] * x_m(t - 1) * eta(j) * [1 - df(t - 1)^2]`.
///
/// Adding this value to `w(m, k)` lowers the squared error at `t`.
pub fn grad_w(
    trajectory: &Trajectory,
    dataset: &Dataset,
    layout: &SynapticLayout,
    m: usize,
    k: usize,
    t: usize,
    schedule: &LearningSchedule,
) -> Result<f64> {
    let l_max = layout.l_max();
    if t < 2 || t > l_max {
        return Err(Error::Segment { m, k, t });
    }
    if layout.segment_of(m, t - 1)? != k {
        return Err(Error::Segment { m, k, t });
    }
    Ok(weight_gradient(trajectory, dataset, m, t, schedule.rate()))
}

#[inline]
pub(crate) fn weight_gradient(
    trajectory: &Trajectory,
    dataset: &Dataset,
    m: usize,
    t: usize,
    rate: f64,
) -> f64 {
    let err = dataset.f(t) - trajectory.h(t);
    let df = trajectory.delta_f(t - 1);
    err * dataset.x(m, t - 1) * rate * (1.0 - df * df)
}

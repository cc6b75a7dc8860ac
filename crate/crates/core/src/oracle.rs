//! Brute-force and finite-difference checks.
//!
//! Nothing here calls into the rebalance or forward code it validates: range
//! lengths, the forward pass and the loss are evaluated again from scratch.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{ConnectionWeights, ForwardMode};
use crate::signal::Dataset;
use crate::topology::{range_sensitivity, LayoutParams, SynapticLayout};

/// Largest number of joint layouts `brute_force_layout_search` will enumerate.
pub const LAYOUT_SEARCH_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleFailure {
    pub input: String,
    pub expected: f64,
    pub got: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleReport {
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub samples: usize,
    pub failures: Vec<OracleFailure>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Folds another report into this one.
    pub fn merge(&mut self, other: OracleReport) {
        self.max_abs_err = self.max_abs_err.max(other.max_abs_err);
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.samples += other.samples;
        self.failures.extend(other.failures);
    }
}

/// Relative tolerance of `fd_check_chain_term`.
pub const CHAIN_TERM_TOLERANCE: f64 = 1e-6;

fn continuous_length(r: &[f64], k: usize, l_max: f64, k_max: f64, l_min: f64) -> f64 {
    let total: f64 = r.iter().sum();
    r[k] / total * (l_max - k_max * l_min) + l_min
}

/// Central difference of each continuous range in its own weight against the
/// analytic chain term. `step` is relative to the coordinate.
pub fn fd_check_chain_term(r: &[f64], params: &LayoutParams, step: f64) -> Result<OracleReport> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Validation(format!("step must be positive, got {step}")));
    }
    if let Some((index, &value)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain { index, value });
    }
    let (l_max, k_max, l_min) = (params.l_max as f64, r.len() as f64, params.l_min as f64);
    let mut report = OracleReport::default();
    let mut probe = r.to_vec();
    for k in 0..r.len() {
        let analytic = range_sensitivity(r, k, params)?;
        let h = step * r[k];
        probe[k] = r[k] + h;
        let up = continuous_length(&probe, k, l_max, k_max, l_min);
        probe[k] = r[k] - h;
        let down = continuous_length(&probe, k, l_max, k_max, l_min);
        probe[k] = r[k];
        let numeric = (up - down) / (2.0 * h);

        let abs = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        // both sides at rounding level: nothing to compare
        let rel = if scale < 1e-9 { 0.0 } else { abs / scale };
        report.max_abs_err = report.max_abs_err.max(abs);
        report.max_rel_err = report.max_rel_err.max(rel);
        report.samples += 1;
        if rel >= CHAIN_TERM_TOLERANCE {
            report.failures.push(OracleFailure {
                input: format!("r = {r:?}, k = {k}"),
                expected: numeric,
                got: analytic,
            });
        }
    }
    Ok(report)
}

fn check_lengths(lengths: &[Vec<usize>], dataset: &Dataset, w: &ConnectionWeights) -> Result<()> {
    let l_max = dataset.window_length();
    if lengths.len() != dataset.m_max() || w.m_max() != dataset.m_max() {
        return Err(Error::Shape(format!("variable count mismatch")));
    }
    for row in lengths {
        if row.len() != w.k_max() || row.iter().sum::<usize>() != l_max || row.contains(&0) {
            return Err(Error::Shape(format!("range row {row:?} does not partition {l_max}")));
        }
    }
    Ok(())
}

/// Loss of the layout given by explicit range lengths, recomputed step by step.
pub fn reference_loss(
    dataset: &Dataset,
    lengths: &[Vec<usize>],
    w: &ConnectionWeights,
    mode: ForwardMode,
) -> Result<f64> {
    check_lengths(lengths, dataset, w)?;
    let l_max = dataset.window_length();
    // synapse owning each step, per variable
    let owners: Vec<Vec<usize>> = lengths
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .flat_map(|(k, &n)| core::iter::repeat(k).take(n))
                .collect()
        })
        .collect();
    let mut h = dataset.f(1);
    let mut total = (dataset.f(1) - h) * (dataset.f(1) - h);
    for t in 1..l_max {
        let mut s = 0.0;
        for (m, owner) in owners.iter().enumerate() {
            s += w.get(m, owner[t - 1]) * dataset.x(m, t);
        }
        let base = match mode {
            ForwardMode::TeacherForced => dataset.f(t),
            ForwardMode::FreeRunning => h,
        };
        h = base + libm::tanh(s);
        let e = dataset.f(t + 1) - h;
        total += e * e;
    }
    Ok(total / l_max as f64)
}

/// Exact loss change from moving the right boundary of synapse `k` of variable
/// `m` one step later (synapse `k` gains a step, `k + 1` loses one).
///
/// `Ok(None)` when either neighbour is shorter than two steps.
pub fn brute_force_boundary_gain(
    dataset: &Dataset,
    layout: &SynapticLayout,
    w: &ConnectionWeights,
    m: usize,
    k: usize,
    mode: ForwardMode,
) -> Result<Option<f64>> {
    if m >= layout.m_max() || k + 1 >= layout.k_max() {
        return Err(Error::Index(format!(
            "boundary ({m}, {k}) outside {} x {}",
            layout.m_max(),
            layout.k_max()
        )));
    }
    let mut lengths = layout.lengths();
    if lengths[m][k] < 2 || lengths[m][k + 1] < 2 {
        return Ok(None);
    }
    let before = reference_loss(dataset, &lengths, w, mode)?;
    lengths[m][k] += 1;
    lengths[m][k + 1] -= 1;
    let after = reference_loss(dataset, &lengths, w, mode)?;
    Ok(Some(after - before))
}

/// Number of ways to split `total` into `parts` positive integers.
pub fn composition_count(total: usize, parts: usize) -> u128 {
    if parts == 0 || parts > total {
        return 0;
    }
    let (n, k) = ((total - 1) as u128, (parts - 1) as u128);
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Every split of `total` into `parts` positive integers, in lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn extend(rest: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(rest);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=rest - (parts - 1) {
            prefix.push(first);
            extend(rest - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 && parts <= total {
        extend(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayoutSearch {
    pub lengths: Vec<Vec<usize>>,
    pub mse: f64,
    pub evaluated: u128,
}

/// Exhaustive minimum-loss layout for fixed connection weights, over every
/// split of the window into `k_max` positive parts for every variable.
pub fn brute_force_layout_search(
    dataset: &Dataset,
    w: &ConnectionWeights,
    params: &LayoutParams,
    mode: ForwardMode,
) -> Result<LayoutSearch> {
    let per_row = composition_count(params.l_max, params.k_max);
    let total = (0..params.m_max).try_fold(1u128, |acc, _| acc.checked_mul(per_row));
    let total = match total {
        Some(n) if n <= LAYOUT_SEARCH_CAP => n,
        Some(n) => return Err(Error::Size(n)),
        None => return Err(Error::Size(u128::MAX)),
    };
    if total == 0 {
        return Err(Error::Validation(format!(
            "no layout splits {} into {} parts",
            params.l_max, params.k_max
        )));
    }
    let rows = compositions(params.l_max, params.k_max);
    let mut choice = vec![0usize; params.m_max];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let lengths: Vec<Vec<usize>> = choice.iter().map(|&c| rows[c].clone()).collect();
        let loss = reference_loss(dataset, &lengths, w, mode)?;
        if best.as_ref().map_or(true, |(b, _)| loss < *b) {
            best = Some((loss, choice.clone()));
        }
        // odometer over the per-variable choices
        let mut i = 0;
        loop {
            if i == choice.len() {
                let (mse, picked) = best.expect("at least one layout evaluated");
                return Ok(LayoutSearch {
                    lengths: picked.iter().map(|&c| rows[c].clone()).collect(),
                    mse,
                    evaluated: total,
                });
            }
            choice[i] += 1;
            if choice[i] < rows.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

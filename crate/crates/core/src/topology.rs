//! Synaptic effective ranges.
//!
//! Each input variable owns a row of `k_max` positive range weights `r`. The
//! rebalance formula turns a row into continuous lengths that always sum to
//! `l_max`; largest-remainder apportionment then fixes integer lengths `n1`, and
//! prefix sums give the 1-based start positions `n3` (with `n3[k_max] = l_max + 1`).
//! Synapse indices are 0-based.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Lower bound applied to every range weight after an update.
pub const RANGE_WEIGHT_FLOOR: f64 = 1e-6;

#[inline]
pub fn clamp_weight(r: f64) -> f64 {
    if r.is_nan() {
        RANGE_WEIGHT_FLOOR
    } else {
        r.max(RANGE_WEIGHT_FLOOR)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayoutParams {
    pub m_max: usize,
    pub k_max: usize,
    pub l_max: usize,
    pub l_min: usize,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            m_max: 4,
            k_max: 9,
            l_max: 44,
            l_min: 2,
        }
    }
}

impl LayoutParams {
    pub fn new(m_max: usize, k_max: usize, l_max: usize, l_min: usize) -> Self {
        Self {
            m_max,
            k_max,
            l_max,
            l_min,
        }
    }

    /// `l_max - k_max * l_min`; negative when the minimum cannot be honoured for
    /// every synapse.
    pub fn slack(&self) -> f64 {
        self.l_max as f64 - (self.k_max * self.l_min) as f64
    }

    /// True when the partition can deviate from `l_min` by at most one step.
    pub fn pinned(&self) -> bool {
        self.slack() <= 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::Validation(format!("m_max must be positive")));
        }
        if self.k_max < 2 {
            return Err(Error::Validation(format!(
                "k_max must be at least 2, got {}",
                self.k_max
            )));
        }
        if self.l_max < self.k_max {
            return Err(Error::Validation(format!(
                "l_max ({}) must be at least k_max ({})",
                self.l_max, self.k_max
            )));
        }
        if self.l_min == 0 {
            return Err(Error::Validation(format!("l_min must be at least 1")));
        }
        // with negative slack the shortest continuous range tends to
        // l_max - (k_max - 1) * l_min, which must stay positive
        if (self.k_max - 1) * self.l_min >= self.l_max {
            return Err(Error::Validation(format!(
                "l_min {} too large for k_max {} and l_max {}",
                self.l_min, self.k_max, self.l_max
            )));
        }
        Ok(())
    }
}

fn check_row(r: &[f64], params: &LayoutParams) -> Result<f64> {
    if r.len() != params.k_max {
        return Err(Error::Shape(format!(
            "range row has {} entries, expected k_max = {}",
            r.len(),
            params.k_max
        )));
    }
    if let Some((index, &value)) = r
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::Domain { index, value });
    }
    let sum: f64 = r.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(sum)
}

/// Continuous ranges `r_k / sum(r) * (l_max - k_max * l_min) + l_min`.
pub fn continuous_ranges(r: &[f64], params: &LayoutParams) -> Result<Vec<f64>> {
    let sum = check_row(r, params)?;
    let slack = params.slack();
    let lmin = params.l_min as f64;
    Ok(r.iter().map(|v| v / sum * slack + lmin).collect())
}

/// Partial derivative of continuous range `k` with respect to its own weight:
/// `(-r_k / sum(r)^2 + 1 / sum(r)) * (l_max - k_max * l_min)`.
pub fn range_sensitivity(r: &[f64], k: usize, params: &LayoutParams) -> Result<f64> {
    let sum = check_row(r, params)?;
    if k >= r.len() {
        return Err(Error::Index(format!("synapse {k} of {}", r.len())));
    }
    Ok((-r[k] / (sum * sum) + 1.0 / sum) * params.slack())
}

/// Largest-remainder apportionment of `values` into positive integers summing to
/// `l_max`. Ties on the fractional part go to the lowest index.
pub fn apportion(values: &[f64], l_max: usize) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::Constraint(format!("nothing to apportion")));
    }
    if values.len() > l_max {
        return Err(Error::Constraint(format!(
            "{} ranges cannot each be at least 1 within {l_max}",
            values.len()
        )));
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::Domain { index, value });
    }
    let total: f64 = values.iter().sum();
    if (total - l_max as f64).abs() > 1e-6 {
        return Err(Error::Constraint(format!(
            "continuous ranges sum to {total}, expected {l_max}"
        )));
    }

    let mut out: Vec<usize> = values.iter().map(|v| libm::floor(*v) as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..values.len()).collect();
    // stable sort keeps lowest index first among equal remainders
    order.sort_by(|&a, &b| {
        let fa = values[a] - libm::floor(values[a]);
        let fb = values[b] - libm::floor(values[b]);
        fb.total_cmp(&fa)
    });
    let remaining = l_max.saturating_sub(assigned);
    for &i in order.iter().take(remaining) {
        out[i] += 1;
    }

    // inputs below 1 can floor to 0; borrow a step from the most over-served entry
    while let Some(zero) = out.iter().position(|&n| n == 0) {
        let donor = (0..out.len())
            .filter(|&i| out[i] >= 2)
            .max_by(|&a, &b| {
                let ea = out[a] as f64 - values[a];
                let eb = out[b] as f64 - values[b];
                ea.total_cmp(&eb).then(b.cmp(&a))
            })
            .ok_or_else(|| Error::Constraint(format!("no range can donate a step")))?;
        out[donor] -= 1;
        out[zero] = 1;
    }
    Ok(out)
}

/// One variable's partition of the window.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RangeRow {
    pub r: Vec<f64>,
    pub n1: Vec<usize>,
    pub n3: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(skip))]
    lookup: Vec<usize>,
}

impl RangeRow {
    /// Builds a row from integer lengths; `r` is carried along unchanged.
    pub fn from_lengths(r: Vec<f64>, n1: Vec<usize>, l_max: usize) -> Result<Self> {
        if n1.is_empty() || n1.iter().any(|&n| n == 0) {
            return Err(Error::Constraint(format!("every range must be at least 1")));
        }
        if n1.iter().sum::<usize>() != l_max {
            return Err(Error::Constraint(format!(
                "ranges sum to {}, expected {l_max}",
                n1.iter().sum::<usize>()
            )));
        }
        if r.len() != n1.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} ranges",
                r.len(),
                n1.len()
            )));
        }
        let mut n3 = Vec::with_capacity(n1.len() + 1);
        n3.push(1);
        for &n in &n1 {
            n3.push(n3[n3.len() - 1] + n);
        }
        let mut lookup = Vec::with_capacity(l_max);
        for (k, &n) in n1.iter().enumerate() {
            lookup.extend(core::iter::repeat(k).take(n));
        }
        Ok(Self { r, n1, n3, lookup })
    }

    pub fn k_max(&self) -> usize {
        self.n1.len()
    }

    pub fn l_max(&self) -> usize {
        self.lookup.len()
    }

    /// Synapse owning 1-based step `t`, by binary search over the boundaries.
    pub fn segment_of(&self, t: usize) -> Result<usize> {
        let l_max = self.l_max();
        if t == 0 || t > l_max {
            return Err(Error::Range { t, l_max });
        }
        // number of starts <= t, minus one
        Ok(self.n3.partition_point(|&start| start <= t) - 1)
    }

    /// Lookup-table version of [`segment_of`](Self::segment_of) without bounds reporting.
    #[inline]
    pub fn segment(&self, t: usize) -> usize {
        self.lookup[t - 1]
    }

    /// 1-based steps covered by synapse `k`.
    pub fn steps(&self, k: usize) -> core::ops::Range<usize> {
        self.n3[k]..self.n3[k + 1]
    }
}

pub fn rebalance_row(r: &[f64], params: &LayoutParams) -> Result<RangeRow> {
    let continuous = continuous_ranges(r, params)?;
    let n1 = apportion(&continuous, params.l_max)?;
    RangeRow::from_lengths(r.to_vec(), n1, params.l_max)
}

/// The full layout: one [`RangeRow`] per input variable.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynapticLayout {
    rows: Vec<RangeRow>,
}

impl SynapticLayout {
    pub fn from_rows(rows: Vec<RangeRow>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Shape(format!("layout needs at least one variable")));
        };
        let (k_max, l_max) = (first.k_max(), first.l_max());
        if rows.iter().any(|row| row.k_max() != k_max || row.l_max() != l_max) {
            return Err(Error::Shape(format!("layout rows disagree on k_max or l_max")));
        }
        Ok(Self { rows })
    }

    /// Layout from integer lengths, with unit range weights.
    pub fn from_lengths(lengths: &[Vec<usize>], l_max: usize) -> Result<Self> {
        let rows = lengths
            .iter()
            .map(|n1| RangeRow::from_lengths(alloc::vec![1.0; n1.len()], n1.clone(), l_max))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn m_max(&self) -> usize {
        self.rows.len()
    }

    pub fn k_max(&self) -> usize {
        self.rows[0].k_max()
    }

    pub fn l_max(&self) -> usize {
        self.rows[0].l_max()
    }

    pub fn row(&self, m: usize) -> &RangeRow {
        &self.rows[m]
    }

    pub fn rows(&self) -> &[RangeRow] {
        &self.rows
    }

    pub fn segment_of(&self, m: usize, t: usize) -> Result<usize> {
        self.rows
            .get(m)
            .ok_or_else(|| Error::Index(format!("variable {m} of {}", self.rows.len())))?
            .segment_of(t)
    }

    #[inline]
    pub fn segment(&self, m: usize, t: usize) -> usize {
        self.rows[m].segment(t)
    }

    pub fn range_weights(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|row| row.r.clone()).collect()
    }

    pub fn lengths(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(|row| row.n1.clone()).collect()
    }

    /// True when every row partitions exactly `l_max` steps.
    pub fn conserves(&self) -> bool {
        let l_max = self.l_max();
        self.rows.iter().all(|row| {
            row.n1.iter().sum::<usize>() == l_max
                && row.n3[0] == 1
                && row.n3[row.k_max()] == l_max + 1
        })
    }
}

/// Rebalances every variable's weight row into a layout.
pub fn rebalance(r: &[Vec<f64>], params: &LayoutParams) -> Result<SynapticLayout> {
    if r.len() != params.m_max {
        return Err(Error::Shape(format!(
            "{} weight rows for m_max = {}",
            r.len(),
            params.m_max
        )));
    }
    let rows = r
        .iter()
        .map(|row| rebalance_row(row, params))
        .collect::<Result<Vec<_>>>()?;
    SynapticLayout::from_rows(rows)
}

/// Renders one synapse's ranges across checkpoints: `[5, 5, 4, 5]` becomes
/// `"5545"`. Multi-digit values are separated by `/`.
pub fn range_string(values: &[usize]) -> String {
    let mut s = String::new();
    let separate = values.iter().any(|&v| v >= 10);
    for (i, v) in values.iter().enumerate() {
        if separate && i > 0 {
            s.push('/');
        }
        let _ = write!(s, "{v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn reference(l_min: usize) -> LayoutParams {
        LayoutParams::new(4, 9, 44, l_min)
    }

    #[test]
    fn equal_weights_share_the_slack() {
        let c = continuous_ranges(&[1.0; 9], &reference(2)).unwrap();
        for v in &c {
            assert!((v - (26.0 / 9.0 + 2.0)).abs() < 1e-12);
        }
        let c = continuous_ranges(&[0.3; 9], &reference(5)).unwrap();
        for v in &c {
            assert!((v - (5.0 - 1.0 / 9.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_slack_pins_every_range() {
        let params = LayoutParams::new(1, 9, 45, 5);
        let c = continuous_ranges(&[0.1, 3.0, 7.0, 1.0, 1.0, 2.0, 0.5, 9.0, 4.0], &params).unwrap();
        assert!(c.iter().all(|v| *v == 5.0));
    }

    #[test]
    fn non_positive_weights_are_domain_errors() {
        let mut r = vec![1.0; 9];
        r[3] = 0.0;
        assert_eq!(
            continuous_ranges(&r, &reference(2)),
            Err(Error::Domain { index: 3, value: 0.0 })
        );
        r[3] = -1.0;
        assert!(matches!(rebalance_row(&r, &reference(2)), Err(Error::Domain { .. })));
    }

    #[test]
    fn apportion_lowest_index_wins_ties() {
        let n = apportion(&[44.0 / 9.0; 9], 44).unwrap();
        assert_eq!(n, vec![5, 5, 5, 5, 5, 5, 5, 5, 4]);
        assert_eq!(apportion(&[2.5, 2.5], 5).unwrap(), vec![3, 2]);
        assert_eq!(apportion(&[3.0, 1.0, 6.0], 10).unwrap(), vec![3, 1, 6]);
    }

    #[test]
    fn apportion_rejects_sum_mismatch() {
        assert!(matches!(apportion(&[2.0, 2.0], 5), Err(Error::Constraint(_))));
    }

    #[test]
    fn apportion_never_returns_zero() {
        let n = apportion(&[0.2, 0.3, 4.5], 5).unwrap();
        assert_eq!(n.iter().sum::<usize>(), 5);
        assert!(n.iter().all(|&v| v >= 1));
    }

    #[test]
    fn rebalance_equal_weights() {
        let row = rebalance_row(&[1.0; 9], &reference(2)).unwrap();
        assert_eq!(row.n1, vec![5, 5, 5, 5, 5, 5, 5, 5, 4]);
        assert_eq!(row.n3, vec![1, 6, 11, 16, 21, 26, 31, 36, 41, 45]);
        let row = rebalance_row(&[1.0; 9], &reference(5)).unwrap();
        assert_eq!(row.n1, vec![5, 5, 5, 5, 5, 5, 5, 5, 4]);
    }

    #[test]
    fn dominant_weight_takes_the_slack() {
        let mut r = vec![1.0; 9];
        r[0] = 100.0;
        let row = rebalance_row(&r, &reference(2)).unwrap();
        let expected = 2.0 + 26.0 * 100.0 / 108.0;
        assert!((row.n1[0] as f64 - expected).abs() <= 1.0);
        assert!(row.n1[1..].iter().all(|&n| n <= 3));
        assert_eq!(row.n1.iter().sum::<usize>(), 44);
    }

    #[test]
    fn segment_lookup() {
        let row = rebalance_row(&[1.0; 9], &reference(2)).unwrap();
        assert_eq!(row.segment_of(1).unwrap(), 0);
        assert_eq!(row.segment_of(44).unwrap(), 8);
        assert_eq!(row.segment_of(7).unwrap(), 1);
        assert_eq!(row.segment_of(6).unwrap(), 1);
        assert_eq!(row.segment_of(5).unwrap(), 0);
        assert_eq!(row.segment_of(0), Err(Error::Range { t: 0, l_max: 44 }));
        assert!(row.segment_of(45).is_err());
        for t in 1..=44 {
            assert_eq!(row.segment(t), row.segment_of(t).unwrap());
        }
    }

    #[test]
    fn sensitivity_for_equal_weights() {
        let r = [1.0; 9];
        let d = range_sensitivity(&r, 0, &reference(2)).unwrap();
        assert!((d - 8.0 / 81.0 * 26.0).abs() < 1e-12);
    }

    #[test]
    fn range_strings() {
        assert_eq!(range_string(&[5, 5, 4, 5]), "5545");
        assert_eq!(range_string(&[12, 9]), "12/9");
    }

    #[test]
    fn params_validation() {
        assert!(reference(2).validate().is_ok());
        assert!(reference(5).validate().is_ok());
        assert!(reference(6).validate().is_err());
        assert!(LayoutParams::new(4, 1, 44, 2).validate().is_err());
        assert!(LayoutParams::new(4, 9, 8, 1).validate().is_err());
        assert!(LayoutParams::new(4, 9, 44, 0).validate().is_err());
    }
}

//! Small statistics helpers.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Pearson product-moment correlation, clamped to `[-1, 1]`.
///
/// Constant or shorter-than-two inputs have no correlation; that is reported as
/// an error rather than 0.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(alloc::format!(
            "pearson inputs differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation);
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    // relative threshold: a trajectory that is constant up to rounding has no shape
    let scale = a.iter().chain(b).fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    let floor = 1e-24 * scale * scale * n as f64;
    if saa <= floor || sbb <= floor {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

/// Sample standard deviation (n - 1 denominator). Zero for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    libm::sqrt(ss / (n - 1) as f64)
}

/// Median of the finite values; `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_series_correlate_perfectly() {
        let f = [0.1, 0.5, -0.3, 0.9];
        assert!((pearson(&f, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_zero_mean_series_anticorrelate() {
        let f = [1.0, -1.0, 2.0, -2.0];
        let g: Vec<f64> = f.iter().map(|v| -v).collect();
        assert!((pearson(&g, &f).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_no_correlation() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(Error::UndefinedCorrelation)
        );
        assert_eq!(pearson(&[1.0], &[2.0]), Err(Error::UndefinedCorrelation));
    }

    #[test]
    fn sample_std_of_final_table_row() {
        // eight 5s and one 4
        let row = vec![5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 4.0];
        assert!((sample_std(&row) - 1.0 / 3.0).abs() < 1e-12);
        // 5 7 4 6 5 4 4 6 3 -> 1.2693
        let row = vec![5.0, 7.0, 4.0, 6.0, 5.0, 4.0, 4.0, 6.0, 3.0];
        assert!((sample_std(&row) - 1.2693).abs() < 5e-5);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}

use pnn_core::plasticity::{memory_envelope, memory_factor, phagocytic_envelope, phagocytic_factor};
use pnn_core::rng::seeded;

const J_MAX: usize = 40_000;

#[test]
fn memory_factor_stays_inside_its_envelope() {
    let mut rng = seeded(3);
    for decay in [5.0, 7.0] {
        for j in [0, J_MAX / 2, J_MAX] {
            let bound = memory_envelope(j, J_MAX, decay);
            let max = (0..10_000)
                .map(|_| memory_factor(j, J_MAX, decay, &mut rng))
                .fold(f64::MIN, f64::max);
            assert!(max >= 0.0 && max < bound, "j={j} decay={decay}: {max} vs {bound}");
        }
    }
    assert!((memory_envelope(J_MAX, J_MAX, 7.0) - 9.118_819_655_545_162e-4).abs() < 1e-15);
}

#[test]
fn phagocytic_factor_stays_inside_its_envelope() {
    let mut rng = seeded(4);
    for j in [0, J_MAX / 2, J_MAX] {
        let bound = phagocytic_envelope(j, J_MAX);
        let max = (0..10_000)
            .map(|_| phagocytic_factor(j, J_MAX, &mut rng).abs())
            .fold(0.0, f64::max);
        if j == J_MAX {
            assert_eq!(max, 0.0);
        } else {
            assert!(max < bound, "j={j}: {max} vs {bound}");
        }
    }
}

#[test]
fn memory_factor_mean() {
    let mut rng = seeded(5);
    let n = 1_000_000;
    let expected = 0.5 * (-3.5f64).exp();
    let mean = (0..n).map(|_| memory_factor(J_MAX / 2, J_MAX, 7.0, &mut rng)).sum::<f64>() / n as f64;
    // uniform on [0, c) has standard deviation c / sqrt(12)
    let se = 2.0 * expected / 12f64.sqrt() / (n as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
}

#[test]
fn phagocytic_factor_is_centred() {
    let mut rng = seeded(6);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| phagocytic_factor(0, J_MAX, &mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!(mean.abs() < 3.0 * se, "mean {mean}, se {se}");
}

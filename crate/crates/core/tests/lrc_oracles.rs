use lrc_core::losses::{margin_values, LossKind};
use lrc_core::lrc::{lrc_exact_ce, lrc_exact_hinge, lrc_regularizer};
use lrc_core::{Prng, Tape, Tensor};

/// Independent enumeration of `(1/B) E|sum sigma_i m_i|`.
fn brute_hinge(m: &[f64]) -> f64 {
    let b = m.len();
    let mut total = 0.0;
    for p in 0..1u32 << b {
        let s: f64 = m
            .iter()
            .enumerate()
            .map(|(i, v)| if p >> i & 1 == 1 { -v } else { *v })
            .sum();
        total += s.abs();
    }
    total / (1u32 << b) as f64 / b as f64
}

#[test]
fn exact_hinge_matches_brute_force() {
    let mut rng = Prng::new(11);
    for _ in 0..30 {
        let b = 1 + rng.below(10);
        let m: Vec<f64> = (0..b).map(|_| rng.uniform(-3.0, 3.0)).collect();
        assert!((lrc_exact_hinge(&m).unwrap() - brute_hinge(&m)).abs() < 1e-12);
    }
}

#[test]
fn sampled_hinge_regularizer_within_three_standard_errors() {
    let mut rng = Prng::new(5);
    for _ in 0..5 {
        let b = 2 + rng.below(8);
        let c = 2 + rng.below(3);
        let s: Vec<f64> = (0..b * c).map(|_| rng.next_gaussian()).collect();
        let y: Vec<usize> = (0..b).map(|_| rng.below(c)).collect();
        let scores = Tensor::matrix(b, c, s).unwrap();
        let exact = lrc_exact_hinge(&margin_values(&scores, &y).unwrap()).unwrap();
        let mut tape = Tape::new();
        let v = tape.constant(scores);
        let reg = lrc_regularizer(&mut tape, v, &y, &LossKind::Hinge { gamma: 1.0 }, 20_000, &mut rng).unwrap();
        let est = tape.value(reg.value).item();
        assert!((est - exact).abs() <= 3.0 * reg.std_error() + 1e-12, "{est} vs {exact}");
    }
}

#[test]
fn sampled_ce_regularizer_within_three_standard_errors() {
    let mut rng = Prng::new(6);
    for _ in 0..5 {
        let c = 2 + rng.below(3);
        let b = 1 + rng.below(12 / (c - 1));
        let s: Vec<f64> = (0..b * c).map(|_| rng.next_gaussian()).collect();
        let y: Vec<usize> = (0..b).map(|_| rng.below(c)).collect();
        let scores = Tensor::matrix(b, c, s).unwrap();
        let exact = lrc_exact_ce(&scores, &y).unwrap();
        let mut tape = Tape::new();
        let v = tape.constant(scores);
        let reg = lrc_regularizer(&mut tape, v, &y, &LossKind::CrossEntropy, 20_000, &mut rng).unwrap();
        let est = tape.value(reg.value).item();
        assert!((est - exact).abs() <= 3.0 * reg.std_error() + 1e-12, "{est} vs {exact}");
    }
}

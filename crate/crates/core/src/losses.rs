//! Margin, clipped hinge, and softmax cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tape::{Tape, Var};
use crate::tensor::{self, Tensor};

/// Empirical loss used by the trainer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Hinge { gamma: f64 },
    CrossEntropy,
}

impl LossKind {
    pub fn hinge(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return invalid(format!("gamma must be positive, got {gamma}"));
        }
        Ok(Self::Hinge { gamma })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hinge { gamma } => Self::hinge(gamma).map(|_| ()),
            Self::CrossEntropy => Ok(()),
        }
    }

    /// Batch loss on the tape.
    pub fn loss(&self, tape: &mut Tape, scores: Var, labels: &[usize]) -> Result<Var> {
        match *self {
            Self::Hinge { gamma } => hinge_loss(tape, scores, labels, gamma),
            Self::CrossEntropy => cross_entropy_loss(tape, scores, labels),
        }
    }

    /// Per-sample loss values without recording.
    pub fn per_sample(&self, scores: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
        match *self {
            Self::Hinge { gamma } => {
                Self::hinge(gamma)?;
                Ok(margin_values(scores, labels)?
                    .into_iter()
                    .map(|m| phi(m / gamma))
                    .collect())
            }
            Self::CrossEntropy => Ok(neg_log_prob_values(scores, labels)?),
        }
    }
}

/// Clipped hinge: 1 below zero, `1 - x` on `[0, 1]`, 0 above one.
pub fn phi(x: f64) -> f64 {
    if x < 0.0 {
        1.0
    } else if x <= 1.0 {
        1.0 - x
    } else {
        0.0
    }
}

/// Derivative of [`phi`], taken as 0 at the kinks.
pub fn phi_derivative(x: f64) -> f64 {
    if x > 0.0 && x < 1.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn check_labels(scores: &Tensor, labels: &[usize]) -> Result<()> {
    if scores.shape().len() != 2 {
        return invalid(format!("scores must be B x c, got {:?}", scores.shape()));
    }
    let (b, c) = (scores.rows(), scores.cols());
    if c < 2 {
        return invalid(format!("need at least 2 classes, got {c}"));
    }
    if labels.len() != b {
        return invalid(format!("{} labels for {b} score rows", labels.len()));
    }
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= c) {
        return invalid(format!("label {y} at row {i} out of range for {c} classes"));
    }
    Ok(())
}

/// `m_i = s[i, y_i] - max_{j != y_i} s[i, j]`.
pub fn margin(tape: &mut Tape, scores: Var, labels: &[usize]) -> Result<Var> {
    check_labels(tape.value(scores), labels)?;
    let own = tape.gather(scores, labels)?;
    let rival = tape.max_over_axis_excluding(scores, labels)?;
    tape.sub(own, rival)
}

pub fn margin_values(scores: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(scores, labels)?;
    let own = tensor::gather(scores, labels)?;
    let (rival, _) = tensor::max_over_axis(scores, Some(labels))?;
    Ok(own
        .data()
        .iter()
        .zip(rival.data())
        .map(|(a, b)| a - b)
        .collect())
}

/// Mean of `phi(m_i / gamma)` over the batch.
pub fn hinge_loss(tape: &mut Tape, scores: Var, labels: &[usize], gamma: f64) -> Result<Var> {
    LossKind::hinge(gamma)?;
    let m = margin(tape, scores, labels)?;
    let scaled = tape.scale(m, 1.0 / gamma);
    let h = tape.clipped_hinge(scaled);
    tape.mean(h)
}

/// `log softmax(s_i)[y_i] = s[i, y_i] - logsumexp(s_i)` per row.
pub fn softmax_log_prob(tape: &mut Tape, scores: Var, labels: &[usize]) -> Result<Var> {
    check_labels(tape.value(scores), labels)?;
    let own = tape.gather(scores, labels)?;
    let lse = tape.logsumexp(scores)?;
    tape.sub(own, lse)
}

pub fn cross_entropy_loss(tape: &mut Tape, scores: Var, labels: &[usize]) -> Result<Var> {
    let lp = softmax_log_prob(tape, scores, labels)?;
    let m = tape.mean(lp)?;
    Ok(tape.scale(m, -1.0))
}

/// `-log softmax(s_i)[y_i]` per row.
pub fn neg_log_prob_values(scores: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    check_labels(scores, labels)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let row = scores.row(i);
            tensor::logsumexp_slice(row) - row[y]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scores(rows: usize, data: Vec<f64>) -> Tensor {
        let c = data.len() / rows;
        Tensor::matrix(rows, c, data).unwrap()
    }

    fn eval(build: impl Fn(&mut Tape, Var) -> Result<Var>, s: Tensor) -> Result<Tensor> {
        let mut t = Tape::new();
        let v = t.constant(s);
        let out = build(&mut t, v)?;
        Ok(t.value(out).clone())
    }

    #[test]
    fn margin_examples() {
        let m = |data: Vec<f64>, y: usize| {
            eval(|t, v| margin(t, v, &[y]), scores(1, data)).unwrap().data()[0]
        };
        assert_eq!(m(vec![2.0, 0.5, 1.0], 0), 1.0);
        assert_eq!(m(vec![1.0, 1.0], 1), 0.0);
        assert_eq!(m(vec![0.0, 3.0], 0), -3.0);
    }

    #[test]
    fn margin_rejects_bad_label() {
        assert!(eval(|t, v| margin(t, v, &[2]), scores(1, vec![0.0, 1.0])).is_err());
        assert!(margin_values(&scores(1, vec![0.0, 1.0]), &[5]).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(-0.3), 1.0);
        assert_eq!(phi(0.25), 0.75);
        assert_eq!(phi(2.0), 0.0);
        assert_eq!(phi(0.0), 1.0);
        assert_eq!(phi(1.0), 0.0);
        assert_eq!(phi_derivative(0.0), 0.0);
        assert_eq!(phi_derivative(1.0), 0.0);
        assert_eq!(phi_derivative(0.5), -1.0);
    }

    #[test]
    fn hinge_loss_piecewise() {
        // margins 0.5, 2, -1 with two classes: scores [m, 0], label 0
        let s = scores(3, vec![0.5, 0.0, 2.0, 0.0, -1.0, 0.0]);
        let v = eval(|t, v| hinge_loss(t, v, &[0, 0, 0], 1.0), s).unwrap();
        assert!((v.item() - 0.5).abs() < 1e-15);
        let all_big = scores(2, vec![3.0, 0.0, 0.0, 5.0]);
        assert_eq!(eval(|t, v| hinge_loss(t, v, &[0, 1], 1.0), all_big).unwrap().item(), 0.0);
        let all_neg = scores(2, vec![-3.0, 0.0, 0.0, -5.0]);
        assert_eq!(eval(|t, v| hinge_loss(t, v, &[0, 1], 1.0), all_neg).unwrap().item(), 1.0);
    }

    #[test]
    fn hinge_rejects_nonpositive_gamma() {
        let s = scores(1, vec![0.0, 1.0]);
        assert!(eval(|t, v| hinge_loss(t, v, &[0], 0.0), s.clone()).is_err());
        assert!(eval(|t, v| hinge_loss(t, v, &[0], -1.0), s).is_err());
    }

    #[test]
    fn log_prob_examples() {
        let lp = |data: Vec<f64>, y: usize| {
            eval(|t, v| softmax_log_prob(t, v, &[y]), scores(1, data)).unwrap().data()[0]
        };
        assert!((lp(vec![0.0, 0.0, 0.0], 2) + 3f64.ln()).abs() < 1e-15);
        assert!((lp(vec![1.0, 1.0], 0) + 2f64.ln()).abs() < 1e-15);
        assert!((lp(vec![3f64.ln(), 0.0], 0) - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let ce = |s: Tensor, y: &[usize]| eval(|t, v| cross_entropy_loss(t, v, y), s).unwrap().item();
        assert!((ce(scores(1, vec![0.0; 3]), &[1]) - 3f64.ln()).abs() < 1e-15);
        let confident = ce(scores(1, vec![10.0, -10.0]), &[0]);
        assert!((confident - (-20f64).exp().ln_1p()).abs() < 1e-14);
        assert!((confident - 2.06e-9).abs() < 1e-11);
        let a = ce(scores(1, vec![0.3, -0.2, 1.0]), &[2]);
        let b = ce(scores(1, vec![1.5, 0.1, -0.7]), &[0]);
        let both = ce(scores(2, vec![0.3, -0.2, 1.0, 1.5, 0.1, -0.7]), &[2, 0]);
        assert!((both - 0.5 * (a + b)).abs() < 1e-15);
    }

    #[test]
    fn eager_and_tape_agree() {
        let s = scores(2, vec![0.3, -0.2, 1.0, 1.5, 0.1, -0.7]);
        let y = [1, 0];
        let per = LossKind::CrossEntropy.per_sample(&s, &y).unwrap();
        let taped = eval(|t, v| cross_entropy_loss(t, v, &y), s.clone()).unwrap().item();
        assert!((0.5 * (per[0] + per[1]) - taped).abs() < 1e-15);
        let per = LossKind::Hinge { gamma: 2.0 }.per_sample(&s, &y).unwrap();
        let taped = eval(|t, v| hinge_loss(t, v, &y, 2.0), s).unwrap().item();
        assert!((0.5 * (per[0] + per[1]) - taped).abs() < 1e-15);
    }

    fn batch_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, usize)> {
        (2usize..6, 1usize..5).prop_flat_map(|(c, b)| {
            (
                proptest::collection::vec(-5.0f64..5.0, b * c),
                proptest::collection::vec(0..c, b),
                Just(c),
            )
        })
    }

    proptest! {
        #[test]
        fn phi_bounded_and_monotone(x in -10.0f64..10.0, d in 0.0f64..3.0) {
            prop_assert!((0.0..=1.0).contains(&phi(x)));
            prop_assert!(phi(x + d) <= phi(x));
        }

        #[test]
        fn losses_shift_invariant((data, labels, c) in batch_strategy(), shift in -50.0f64..50.0) {
            let b = labels.len();
            let s = Tensor::matrix(b, c, data.clone()).unwrap();
            let shifted = s.map(|v| v + shift);
            let m0 = margin_values(&s, &labels).unwrap();
            let m1 = margin_values(&shifted, &labels).unwrap();
            for (a, b) in m0.iter().zip(&m1) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for kind in [LossKind::Hinge { gamma: 1.0 }, LossKind::CrossEntropy] {
                let l0: f64 = kind.per_sample(&s, &labels).unwrap().iter().sum();
                let l1: f64 = kind.per_sample(&shifted, &labels).unwrap().iter().sum();
                prop_assert!((l0 - l1).abs() < 1e-12 * b as f64);
                prop_assert!(l0 >= 0.0);
            }
        }

        #[test]
        fn equal_scores_give_ln_c(v in -5.0f64..5.0, c in 2usize..8, y in 0usize..8) {
            let y = y % c;
            let s = Tensor::matrix(1, c, vec![v; c]).unwrap();
            let ce = LossKind::CrossEntropy.per_sample(&s, &[y]).unwrap()[0];
            prop_assert!((ce - (c as f64).ln()).abs() < 1e-12);
        }
    }
}

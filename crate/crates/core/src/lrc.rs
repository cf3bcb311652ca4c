//! Sign-sampled local Rademacher complexity regularizers.
//!
//! Hinge variant, per sign draw: `(1/B) |sum_i sigma_i m_i|` over the batch
//! margins. Cross-entropy variant: `(1/(B c)) |sum_i sum_{j != y_i}
//! sigma_ij (s_ij - s_iy_i)|`, with the `c - 1` signs of row `i` assigned to
//! the classes `j != y_i` in ascending order. The `1/(B c)` normalization is
//! kept even though each row contributes only `c - 1` terms.
//!
//! `R` is the mean over `K` fresh draws. Signs are constants on the tape.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::losses::{check_labels, margin, LossKind};
use crate::rng::{Prng, SignVector};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Largest sign count the enumeration oracles accept.
pub const MAX_EXACT_SIGNS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrcConfig {
    pub lambda: f64,
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for LrcConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            k: 1,
            gamma: 1.0,
            seed: 0,
        }
    }
}

impl LrcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return invalid(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.k == 0 {
            return invalid("K must be at least 1");
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return invalid(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }
}

/// `(1/B) |sum_i sigma_i m_i|`.
pub fn lrc_hinge_sample(tape: &mut Tape, margins: Var, signs: &SignVector) -> Result<Var> {
    let b = tape.value(margins).len();
    if signs.len() != b {
        return invalid(format!("{} signs for {b} margins", signs.len()));
    }
    let corr = tape.weighted_sum(margins, signs.to_f64())?;
    let a = tape.abs(corr);
    Ok(tape.scale(a, 1.0 / b as f64))
}

/// Coefficients `C` with `sum_ij C_ij s_ij = sum_i sum_{j != y_i} sigma_ij (s_ij - s_iy_i)`.
fn ce_coefficients(rows: usize, classes: usize, labels: &[usize], signs: &SignVector) -> Vec<f64> {
    let mut coeffs = vec![0.0; rows * classes];
    for (i, &y) in labels.iter().enumerate() {
        let mut col = 0;
        let row = &mut coeffs[i * classes..(i + 1) * classes];
        for j in (0..classes).filter(|&j| j != y) {
            let s = signs.get(i * (classes - 1) + col);
            row[j] = s;
            row[y] -= s;
            col += 1;
        }
    }
    coeffs
}

/// `(1/(B c)) |sum_i sum_{j != y_i} sigma_ij (s_ij - s_iy_i)|`.
pub fn lrc_ce_sample(
    tape: &mut Tape,
    scores: Var,
    labels: &[usize],
    sign_matrix: &SignVector,
) -> Result<Var> {
    check_labels(tape.value(scores), labels)?;
    let (b, c) = (tape.value(scores).rows(), tape.value(scores).cols());
    if sign_matrix.len() != b * (c - 1) {
        return invalid(format!(
            "sign matrix has {} entries, expected {b} x {}",
            sign_matrix.len(),
            c - 1
        ));
    }
    let coeffs = ce_coefficients(b, c, labels, sign_matrix);
    let corr = tape.weighted_sum(scores, coeffs)?;
    let a = tape.abs(corr);
    Ok(tape.scale(a, 1.0 / (b * c) as f64))
}

/// The K-sample average `R` and the per-draw terms that form it.
#[derive(Debug)]
pub struct Regularizer {
    pub value: Var,
    pub samples: Vec<f64>,
}

impl Regularizer {
    /// Standard error of the K-sample mean.
    pub fn std_error(&self) -> f64 {
        std_error(&self.samples)
    }
}

pub(crate) fn std_error(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// `R = (1/K) sum_k term_k` with fresh signs for every `k`.
///
/// `scores` are the batch scores `B x c`; the hinge variant derives margins
/// from them. Signs are drawn from `rng` in order, `B` (hinge) or
/// `B (c - 1)` (cross-entropy) per draw.
pub fn lrc_regularizer(
    tape: &mut Tape,
    scores: Var,
    labels: &[usize],
    loss: &LossKind,
    k: usize,
    rng: &mut Prng,
) -> Result<Regularizer> {
    if k == 0 {
        return invalid("K must be at least 1");
    }
    check_labels(tape.value(scores), labels)?;
    let (b, c) = (tape.value(scores).rows(), tape.value(scores).cols());
    let margins = match loss {
        LossKind::Hinge { .. } => Some(margin(tape, scores, labels)?),
        LossKind::CrossEntropy => None,
    };
    let mut terms = Vec::with_capacity(k);
    let mut samples = Vec::with_capacity(k);
    for _ in 0..k {
        let term = match margins {
            Some(m) => {
                let signs = rng.sample_signs(b)?;
                lrc_hinge_sample(tape, m, &signs)?
            }
            None => {
                let signs = rng.sample_sign_matrix(b, c - 1)?;
                lrc_ce_sample(tape, scores, labels, &signs)?
            }
        };
        samples.push(tape.value(term).item());
        terms.push(term);
    }
    // Pairwise reduction keeps the rounding error O(log K).
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        for pair in terms.chunks(2) {
            next.push(match *pair {
                [a, b] => tape.add(a, b)?,
                [a] => a,
                _ => unreachable!(),
            });
        }
        terms = next;
    }
    let value = tape.scale(terms[0], 1.0 / k as f64);
    Ok(Regularizer { value, samples })
}

/// `E_sigma |sum_k sigma_k v_k|` by enumerating every sign pattern.
pub fn expected_abs_correlation(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n == 0 {
        return invalid("need at least one value");
    }
    if n > MAX_EXACT_SIGNS {
        return Err(Error::Capacity(format!(
            "{n} signs exceed the enumeration limit of {MAX_EXACT_SIGNS}"
        )));
    }
    let patterns = 1u64 << n;
    let mut total = 0.0;
    for p in 0..patterns {
        let s: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| if (p >> i) & 1 == 0 { *v } else { -*v })
            .sum();
        total += s.abs();
    }
    Ok(total / patterns as f64)
}

/// Exact expectation of the hinge term over all `2^B` sign patterns.
pub fn lrc_exact_hinge(margins: &[f64]) -> Result<f64> {
    Ok(expected_abs_correlation(margins)? / margins.len() as f64)
}

/// Exact expectation of the cross-entropy term over all `2^(B (c - 1))` patterns.
pub fn lrc_exact_ce(scores: &Tensor, labels: &[usize]) -> Result<f64> {
    check_labels(scores, labels)?;
    let (b, c) = (scores.rows(), scores.cols());
    let diffs: Vec<f64> = labels
        .iter()
        .enumerate()
        .flat_map(|(i, &y)| {
            let row = scores.row(i);
            (0..c).filter(move |&j| j != y).map(move |j| row[j] - row[y])
        })
        .collect();
    Ok(expected_abs_correlation(&diffs)? / (b * c) as f64)
}

//! Monte-Carlo and exhaustive estimation of empirical Rademacher complexity,
//! local Rademacher complexity over a sampled parameter ball, and the two
//! LRC bound chains.
//!
//! A "value table" has one row per candidate function and one column per
//! point; for a sign draw `sigma` the statistic is
//! `max_k (1/n) sum_i sigma_i table[k][i]`. The ball sup is taken over sampled
//! candidates only, so every sup reported here lower-bounds the true one.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::losses::{margin_values, neg_log_prob_values, phi};
use crate::lrc::{std_error, MAX_EXACT_SIGNS};
use crate::network::{BallSample, Network};
use crate::rng::{Prng, Role, SignVector};
use crate::tensor::{logsumexp1p, Tensor};

/// Slack for floating-point comparisons in deterministic checks.
const FP_SLACK: f64 = 1e-12;

/// How sign vectors are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaBudget {
    /// Independent draws from the estimator stream.
    Sampled(usize),
    /// Every pattern once; exact expectation, zero standard error.
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RcEstimate {
    pub value: f64,
    pub std_error: f64,
    pub sigma_samples: usize,
    pub ball_samples: usize,
}

impl RcEstimate {
    fn from_draws(draws: &[f64], exhaustive: bool, ball_samples: usize) -> Self {
        let value = draws.iter().sum::<f64>() / draws.len() as f64;
        Self {
            value,
            std_error: if exhaustive { 0.0 } else { std_error(draws) },
            sigma_samples: draws.len(),
            ball_samples,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// `max ||h_w(x_i) - h_center(x_i)||_inf / ||w - center||_2`.
    pub l_hat: f64,
    /// `max |m_w(x_i, y_i) - m_center(x_i, y_i)|`.
    pub delta_margin: f64,
    /// Nonzero offsets used.
    pub samples: usize,
}

/// Visits every sign vector of the budget, stopping early at `deadline`.
/// Returns whether the budget completed.
fn for_each_sign<F>(len: usize, budget: SigmaBudget, rng: &mut Prng, deadline: Option<Instant>, mut f: F) -> Result<bool>
where
    F: FnMut(&SignVector),
{
    let expired = |done: usize| done > 0 && deadline.is_some_and(|d| Instant::now() >= d);
    match budget {
        SigmaBudget::Sampled(0) => invalid("sigma sample budget must be at least 1"),
        SigmaBudget::Sampled(n) => {
            for done in 0..n {
                if expired(done) {
                    return Ok(false);
                }
                f(&rng.sample_signs(len)?);
            }
            Ok(true)
        }
        SigmaBudget::Exhaustive => {
            if len > MAX_EXACT_SIGNS {
                return Err(Error::Capacity(format!(
                    "{len} signs exceed the enumeration limit of {MAX_EXACT_SIGNS}"
                )));
            }
            for p in 0..(1u64 << len) {
                if expired(p as usize) {
                    return Ok(false);
                }
                f(&SignVector::from_pattern(p, len));
            }
            Ok(true)
        }
    }
}

fn check_table(table: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = table.first() else {
        return invalid("function class is empty");
    };
    let n = first.len();
    if n == 0 {
        return invalid("function class members must have at least one value");
    }
    if table.iter().any(|row| row.len() != n) {
        return invalid("function class members have differing lengths");
    }
    Ok(n)
}

/// `max_k (1/norm) sum_i sigma_i table[k][i]`.
pub fn sup_correlation(table: &[Vec<f64>], signs: &SignVector, norm: f64) -> f64 {
    table
        .iter()
        .map(|row| signs.dot(row) / norm)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Per-draw sampled suprema `max_k (1/n) sum_i sigma_i table[k][i]`.
pub fn sup_draws(table: &[Vec<f64>], budget: SigmaBudget, rng: &mut Prng) -> Result<Vec<f64>> {
    let n = check_table(table)?;
    let mut draws = Vec::new();
    for_each_sign(n, budget, rng, None, |s| draws.push(sup_correlation(table, s, n as f64)))?;
    Ok(draws)
}

/// Empirical Rademacher complexity of a finite class given by per-point value vectors.
pub fn estimate_global_rc(class: &[Vec<f64>], budget: SigmaBudget, rng: &mut Prng) -> Result<RcEstimate> {
    let draws = sup_draws(class, budget, rng)?;
    Ok(RcEstimate::from_draws(&draws, budget == SigmaBudget::Exhaustive, 1))
}

/// Scores of every ball candidate on the dataset, in candidate order.
pub fn candidate_scores(net: &Network, ball: &BallSample, data: &Dataset) -> Result<Vec<Tensor>> {
    if ball.center().len() != net.param_count() {
        return invalid(format!(
            "ball center has {} entries, network has {} parameters",
            ball.center().len(),
            net.param_count()
        ));
    }
    if data.is_empty() {
        return invalid("dataset is empty");
    }
    (0..ball.len())
        .into_par_iter()
        .map(|k| net.with_weights(ball.candidate(k))?.forward(data.inputs()))
        .collect()
}

fn margin_rows(scores: &[Tensor], labels: &[usize]) -> Result<Vec<Vec<f64>>> {
    scores.iter().map(|s| margin_values(s, labels)).collect()
}

/// Rows `phi(m_w(x_i, y_i) / gamma)` for every candidate `w`.
pub fn margin_table(net: &Network, ball: &BallSample, data: &Dataset, gamma: f64) -> Result<Vec<Vec<f64>>> {
    check_gamma(gamma)?;
    let scores = candidate_scores(net, ball, data)?;
    Ok(phi_rows(&margin_rows(&scores, data.labels())?, gamma))
}

fn phi_rows(margins: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    margins
        .iter()
        .map(|row| row.iter().map(|m| phi(m / gamma)).collect())
        .collect()
}

/// Rows `-log softmax(h_w(x_i))[y_i]` for every candidate `w`.
pub fn ce_table(net: &Network, ball: &BallSample, data: &Dataset) -> Result<Vec<Vec<f64>>> {
    let scores = candidate_scores(net, ball, data)?;
    scores.iter().map(|s| neg_log_prob_values(s, data.labels())).collect()
}

/// Rows of score differences `s_ij - s_iy_i`, `j != y_i` ascending, flattened per point.
fn difference_rows(scores: &[Tensor], labels: &[usize]) -> Vec<Vec<f64>> {
    scores
        .iter()
        .map(|s| {
            let c = s.cols();
            labels
                .iter()
                .enumerate()
                .flat_map(|(i, &y)| {
                    let row = s.row(i);
                    (0..c).filter(move |&j| j != y).map(move |j| row[j] - row[y])
                })
                .collect()
        })
        .collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    Ok(())
}

/// Sampled-sup estimate of the margin-class LRC over `ball`.
pub fn estimate_lrc_margin(
    net: &Network,
    ball: &BallSample,
    data: &Dataset,
    gamma: f64,
    budget: SigmaBudget,
    rng: &mut Prng,
) -> Result<RcEstimate> {
    let table = margin_table(net, ball, data, gamma)?;
    let draws = sup_draws(&table, budget, rng)?;
    Ok(RcEstimate::from_draws(&draws, budget == SigmaBudget::Exhaustive, ball.len()))
}

/// Sampled-sup estimate of the cross-entropy-class LRC over `ball`.
pub fn estimate_lrc_ce(
    net: &Network,
    ball: &BallSample,
    data: &Dataset,
    budget: SigmaBudget,
    rng: &mut Prng,
) -> Result<RcEstimate> {
    let table = ce_table(net, ball, data)?;
    let draws = sup_draws(&table, budget, rng)?;
    Ok(RcEstimate::from_draws(&draws, budget == SigmaBudget::Exhaustive, ball.len()))
}

/// Plug-in Lipschitz and margin-perturbation constants over nonzero offsets.
fn lipschitz_from(ball: &BallSample, scores: &[Tensor], margins: &[Vec<f64>]) -> Option<LipschitzEstimate> {
    let mut est = LipschitzEstimate {
        l_hat: 0.0,
        delta_margin: 0.0,
        samples: 0,
    };
    for k in 0..ball.len() {
        let dist = ball.offset_norm(k);
        if dist == 0.0 {
            continue;
        }
        est.samples += 1;
        let sup = scores[k]
            .data()
            .iter()
            .zip(scores[0].data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        est.l_hat = est.l_hat.max(sup / dist);
        let dm = margins[k]
            .iter()
            .zip(&margins[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        est.delta_margin = est.delta_margin.max(dm);
    }
    (est.samples > 0).then_some(est)
}

pub fn estimate_lipschitz(net: &Network, ball: &BallSample, data: &Dataset) -> Result<LipschitzEstimate> {
    let scores = candidate_scores(net, ball, data)?;
    let margins = margin_rows(&scores, data.labels())?;
    lipschitz_from(ball, &scores, &margins)
        .ok_or_else(|| Error::InvalidArgument("ball has no nonzero offsets".into()))
}

/// Result of the logsumexp Lipschitz spot check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PremiseCheck {
    pub dim: usize,
    pub pairs: usize,
    /// Largest `|r(u) - r(v)| / (sqrt(m) ||u - v||_2)` observed.
    pub max_ratio: f64,
    pub holds: bool,
}

/// Checks `|r(u) - r(v)| <= sqrt(m) ||u - v||_2` for `r(v) = log(1 + sum_j e^{v_j})`
/// on random pairs: half spread widely, half close together.
pub fn check_logsumexp_lipschitz(dim: usize, pairs: usize, rng: &mut Prng) -> Result<PremiseCheck> {
    if dim == 0 {
        return invalid("logsumexp premise needs dimension >= 1");
    }
    let bound = (dim as f64).sqrt();
    let mut max_ratio: f64 = 0.0;
    let mut holds = true;
    for p in 0..pairs {
        let u: Vec<f64> = (0..dim).map(|_| 4.0 * rng.next_gaussian()).collect();
        let step = if p % 2 == 0 { 4.0 } else { 1e-3 };
        let v: Vec<f64> = u.iter().map(|x| x + step * rng.next_gaussian()).collect();
        let dist = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        let gap = (logsumexp1p(&u) - logsumexp1p(&v)).abs();
        max_ratio = max_ratio.max(gap / (bound * dist));
        if gap > bound * dist + FP_SLACK {
            holds = false;
        }
    }
    Ok(PremiseCheck {
        dim,
        pairs,
        max_ratio,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub sigma_samples: usize,
    pub exhaustive_sigma: bool,
    pub ball_samples: usize,
    pub premise_pairs: usize,
    pub time_limit_ms: Option<u64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Self {
            sigma_samples: 2000,
            exhaustive_sigma: false,
            ball_samples: 64,
            premise_pairs: 10_000,
            time_limit_ms: None,
        }
    }
}

impl Budgets {
    pub fn sigma(&self) -> SigmaBudget {
        if self.exhaustive_sigma {
            SigmaBudget::Exhaustive
        } else {
            SigmaBudget::Sampled(self.sigma_samples)
        }
    }

    fn deadline(&self, start: Instant) -> Option<Instant> {
        self.time_limit_ms.map(|ms| start + Duration::from_millis(ms))
    }
}

/// Default ball radius: 1% of the center's Euclidean norm.
pub fn default_radius(center: &[f64]) -> f64 {
    0.01 * center.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Verification outcome, serialized as the report JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem: u8,
    /// Sampled-sup left-hand side (lower bound of the true LRC).
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Monte-Carlo estimate of the printed first term.
    pub first_term: f64,
    pub first_term_stderr: f64,
    /// Margin bound: paired, signed `E_sigma[(1/n) sum sigma_i phi(m_center/gamma)]`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_term_paired: Option<f64>,
    /// Cross-entropy bound: sampled sup of the pairwise-difference class.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhs_sup: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhs_sup_stderr: Option<f64>,
    /// The quantity `lhs` is compared against.
    pub rhs: f64,
    /// Printed bound with the plug-in Lipschitz constant.
    pub bound_rhs: f64,
    pub delta_margin: f64,
    pub l_hat: f64,
    pub radius: f64,
    /// `delta_margin / (l_hat r)`; the printed argument allows 3.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed_margin_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub premise: Option<PremiseCheck>,
    pub margin_of_satisfaction: f64,
    pub satisfied: bool,
    pub complete: bool,
    pub checks: Vec<Check>,
    pub budgets: Budgets,
    pub seed: u64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn margin_check(lip: &LipschitzEstimate, r: f64) -> Check {
    let limit = 3.0 * lip.l_hat * r;
    Check {
        name: "delta_margin_le_3_l_hat_r".into(),
        passed: lip.delta_margin <= limit * (1.0 + FP_SLACK) + FP_SLACK,
        detail: format!("delta_margin {:.6e} vs 3 L r {:.6e}", lip.delta_margin, limit),
    }
}

/// Checks the margin-class chain on shared samples.
///
/// For every sign draw the sampled sup satisfies
/// `max_k (1/n) sum sigma_i phi(m_k/gamma) <= (1/n) sum sigma_i phi(m_0/gamma) + delta_margin/gamma`
/// because `phi` is 1-Lipschitz. Averaging over the same draws gives
/// `lhs <= first_term_paired + delta_margin / gamma`, which must hold exactly.
pub fn verify_theorem1(
    net: &Network,
    ball: &BallSample,
    data: &Dataset,
    gamma: f64,
    budgets: &Budgets,
    seed: u64,
) -> Result<VerificationReport> {
    check_gamma(gamma)?;
    let start = Instant::now();
    let scores = candidate_scores(net, ball, data)?;
    let margins = margin_rows(&scores, data.labels())?;
    let phis = phi_rows(&margins, gamma);
    let lip = lipschitz_from(ball, &scores, &margins).unwrap_or(LipschitzEstimate {
        l_hat: 0.0,
        delta_margin: 0.0,
        samples: 0,
    });
    let n = data.len();
    let nf = n as f64;
    let slack = lip.delta_margin / gamma;

    let mut lhs_draws = Vec::new();
    let mut paired = Vec::new();
    let mut first = Vec::new();
    let mut violations = 0usize;
    let mut rng = Prng::for_role(seed, Role::Estimator);
    let complete = for_each_sign(n, budgets.sigma(), &mut rng, budgets.deadline(start), |s| {
        let sup = sup_correlation(&phis, s, nf);
        let center = s.dot(&phis[0]) / nf;
        if sup > center + slack + FP_SLACK {
            violations += 1;
        }
        lhs_draws.push(sup);
        paired.push(center);
        first.push(s.dot(&margins[0]) / nf);
    })?;

    let exhaustive = budgets.exhaustive_sigma;
    let lhs = RcEstimate::from_draws(&lhs_draws, exhaustive, ball.len());
    let first_est = RcEstimate::from_draws(&first, exhaustive, 1);
    let first_term_paired = mean(&paired);
    let rhs = first_term_paired + slack;
    let r = ball.radius();
    let first_term = first_est.value.abs() / gamma;
    let bound_rhs = first_term + 3.0 * lip.l_hat * r / gamma;

    let checks = vec![
        Check {
            name: "same_sample_chain".into(),
            passed: violations == 0 && lhs.value <= rhs + FP_SLACK,
            detail: format!(
                "lhs {:.6e} <= paired center {:.6e} + delta/gamma {:.6e}; {violations} per-draw violations",
                lhs.value, first_term_paired, slack
            ),
        },
        margin_check(&lip, r),
    ];
    let satisfied = complete && checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        theorem: 1,
        lhs: lhs.value,
        lhs_stderr: lhs.std_error,
        first_term,
        first_term_stderr: first_est.std_error / gamma,
        first_term_paired: Some(first_term_paired),
        rhs_sup: None,
        rhs_sup_stderr: None,
        rhs,
        bound_rhs,
        delta_margin: lip.delta_margin,
        l_hat: lip.l_hat,
        radius: r,
        observed_margin_ratio: (lip.l_hat * r > 0.0).then(|| lip.delta_margin / (lip.l_hat * r)),
        premise: None,
        margin_of_satisfaction: rhs - lhs.value,
        satisfied,
        complete,
        checks,
        budgets: budgets.clone(),
        seed,
    })
}

/// Statistical check of the cross-entropy chain.
///
/// LHS: sampled sup over the ball of `(1/n) sum sigma_i (-log softmax_y)`.
/// RHS: `sqrt(2(c-1))` times the sampled sup of
/// `(1/n) sum_i sum_{j != y_i} sigma_ij (s_ij - s_iy_i)`, plus three combined
/// standard errors. The two sides use independent sign families.
pub fn verify_theorem2(
    net: &Network,
    ball: &BallSample,
    data: &Dataset,
    budgets: &Budgets,
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let deadline = budgets.deadline(start);
    let scores = candidate_scores(net, ball, data)?;
    let labels = data.labels();
    let c = data.classes();
    if scores[0].cols() != c {
        return invalid(format!(
            "network produces {} classes, dataset has {c}",
            scores[0].cols()
        ));
    }
    let margins = margin_rows(&scores, labels)?;
    let ce: Vec<Vec<f64>> = scores
        .iter()
        .map(|s| neg_log_prob_values(s, labels))
        .collect::<Result<_>>()?;
    let diffs = difference_rows(&scores, labels);
    let lip = lipschitz_from(ball, &scores, &margins).unwrap_or(LipschitzEstimate {
        l_hat: 0.0,
        delta_margin: 0.0,
        samples: 0,
    });
    let nf = data.len() as f64;
    let mut rng = Prng::for_role(seed, Role::Estimator);
    let sigma = budgets.sigma();

    let mut lhs_draws = Vec::new();
    let done_lhs = for_each_sign(data.len(), sigma, &mut rng, deadline, |s| {
        lhs_draws.push(sup_correlation(&ce, s, nf));
    })?;
    let mut rhs_draws = Vec::new();
    let mut first = Vec::new();
    let done_rhs = for_each_sign(diffs[0].len(), sigma, &mut rng, deadline, |s| {
        rhs_draws.push(sup_correlation(&diffs, s, nf));
        first.push(s.dot(&diffs[0]) / nf);
    })?;
    let premise = check_logsumexp_lipschitz(c - 1, budgets.premise_pairs, &mut rng)?;

    let exhaustive = budgets.exhaustive_sigma;
    let lhs = RcEstimate::from_draws(&lhs_draws, exhaustive, ball.len());
    let rhs_sup = RcEstimate::from_draws(&rhs_draws, exhaustive, ball.len());
    let first_est = RcEstimate::from_draws(&first, exhaustive, 1);
    let factor = (2.0 * (c - 1) as f64).sqrt();
    let combined_se = (lhs.std_error.powi(2) + (factor * rhs_sup.std_error).powi(2)).sqrt();
    let rhs = factor * rhs_sup.value + 3.0 * combined_se;
    let r = ball.radius();
    let first_term = first_est.value.abs();
    let bound_rhs = factor * first_term + 2.0 * factor * (c - 1) as f64 * lip.l_hat * r;

    let checks = vec![
        Check {
            name: "vector_contraction".into(),
            passed: lhs.value <= rhs + FP_SLACK,
            detail: format!(
                "lhs {:.6e} <= sqrt(2(c-1)) {:.4} x sup {:.6e} + 3 se {:.6e}",
                lhs.value, factor, rhs_sup.value, combined_se
            ),
        },
        Check {
            name: "logsumexp_lipschitz_premise".into(),
            passed: premise.holds,
            detail: format!("max ratio {:.6} over {} pairs in R^{}", premise.max_ratio, premise.pairs, premise.dim),
        },
        margin_check(&lip, r),
    ];
    let complete = done_lhs && done_rhs;
    let satisfied = complete && checks.iter().all(|ch| ch.passed);
    Ok(VerificationReport {
        theorem: 2,
        lhs: lhs.value,
        lhs_stderr: lhs.std_error,
        first_term,
        first_term_stderr: first_est.std_error,
        first_term_paired: None,
        rhs_sup: Some(rhs_sup.value),
        rhs_sup_stderr: Some(rhs_sup.std_error),
        rhs,
        bound_rhs,
        delta_margin: lip.delta_margin,
        l_hat: lip.l_hat,
        radius: r,
        observed_margin_ratio: (lip.l_hat * r > 0.0).then(|| lip.delta_margin / (lip.l_hat * r)),
        premise: Some(premise),
        margin_of_satisfaction: rhs - lhs.value,
        satisfied,
        complete,
        checks,
        budgets: budgets.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;
    use crate::network::{sample_ball, MlpConfig};

    fn pattern_mean(n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        let total: f64 = (0..1u64 << n)
            .map(|p| {
                let s: Vec<f64> = (0..n).map(|i| if (p >> i) & 1 == 0 { 1.0 } else { -1.0 }).collect();
                f(&s)
            })
            .sum();
        total / (1u64 << n) as f64
    }

    #[test]
    fn singleton_class_is_zero_in_expectation() {
        let h = vec![vec![0.4, -1.0, 2.0, 0.1]];
        let est = estimate_global_rc(&h, SigmaBudget::Sampled(20_000), &mut Prng::new(3)).unwrap();
        assert!(est.value.abs() <= 4.0 * est.std_error, "{est:?}");
        let exact = estimate_global_rc(&h, SigmaBudget::Exhaustive, &mut Prng::new(3)).unwrap();
        assert!(exact.value.abs() < 1e-15);
        assert_eq!(exact.std_error, 0.0);
    }

    #[test]
    fn symmetric_pair_gives_abs_value() {
        let a = -1.7;
        let est = estimate_global_rc(&[vec![a], vec![-a]], SigmaBudget::Exhaustive, &mut Prng::new(0)).unwrap();
        assert_eq!(est.value, a.abs());
    }

    #[test]
    fn constant_class_matches_enumeration() {
        for n in 1..=12 {
            let class = vec![vec![1.0; n], vec![-1.0; n]];
            let oracle = pattern_mean(n, |s| s.iter().sum::<f64>().abs() / n as f64);
            let est = estimate_global_rc(&class, SigmaBudget::Exhaustive, &mut Prng::new(0)).unwrap();
            assert!((est.value - oracle).abs() < 1e-12, "n={n}");
            let mc = estimate_global_rc(&class, SigmaBudget::Sampled(20_000), &mut Prng::new(n as u64)).unwrap();
            assert!((mc.value - oracle).abs() <= 3.0 * mc.std_error + 1e-12, "n={n} {mc:?} vs {oracle}");
        }
    }

    #[test]
    fn empty_class_rejected() {
        assert!(estimate_global_rc(&[], SigmaBudget::Sampled(10), &mut Prng::new(0)).is_err());
        assert!(estimate_global_rc(&[vec![1.0]], SigmaBudget::Sampled(0), &mut Prng::new(0)).is_err());
    }

    fn tiny_setup(seed: u64) -> (Network, Dataset) {
        let data = gen_blobs(3, 4, 2, 0.3, &mut Prng::new(seed)).unwrap();
        let net = Network::init(MlpConfig::new(2, vec![5], 3).unwrap(), &mut Prng::new(seed + 100)).unwrap();
        (net, data)
    }

    #[test]
    fn center_only_margin_lrc_is_zero() {
        let (net, data) = tiny_setup(1);
        let ball = sample_ball(net.weights(), 0.1, 1, &mut Prng::new(2)).unwrap();
        let est = estimate_lrc_margin(&net, &ball, &data, 1.0, SigmaBudget::Sampled(5000), &mut Prng::new(9)).unwrap();
        assert!(est.value.abs() <= 4.0 * est.std_error, "{est:?}");
        let ce = estimate_lrc_ce(&net, &ball, &data, SigmaBudget::Sampled(5000), &mut Prng::new(9)).unwrap();
        assert!(ce.value.abs() <= 4.0 * ce.std_error, "{ce:?}");
    }

    #[test]
    fn sup_is_monotone_in_ball_samples() {
        let (net, data) = tiny_setup(2);
        let ball = sample_ball(net.weights(), 0.2, 32, &mut Prng::new(5)).unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for count in [1, 2, 4, 8, 16, 32] {
            let t = margin_table(&net, &ball.truncated(count), &data, 1.0).unwrap();
            let d = sup_draws(&t, SigmaBudget::Sampled(300), &mut Prng::new(8)).unwrap();
            if let Some(p) = &prev {
                assert!(d.iter().zip(p).all(|(a, b)| a >= b));
            }
            prev = Some(d);
            let ce = ce_table(&net, &ball.truncated(count), &data).unwrap();
            assert_eq!(ce.len(), count);
        }
    }

    #[test]
    fn exhaustive_lrc_is_nonnegative() {
        let (net, data) = tiny_setup(3);
        let data = data.head(6);
        let ball = sample_ball(net.weights(), 0.3, 8, &mut Prng::new(1)).unwrap().symmetrized();
        let est = estimate_lrc_margin(&net, &ball, &data, 0.5, SigmaBudget::Exhaustive, &mut Prng::new(0)).unwrap();
        assert!(est.value >= -1e-15);
        let center = estimate_lrc_margin(&net, &ball.truncated(1), &data, 0.5, SigmaBudget::Sampled(4000), &mut Prng::new(4)).unwrap();
        let sampled = estimate_lrc_margin(&net, &ball, &data, 0.5, SigmaBudget::Sampled(4000), &mut Prng::new(4)).unwrap();
        // Same draws: the ball sup dominates the center value draw by draw.
        assert!(sampled.value >= center.value);
    }

    #[test]
    fn lipschitz_linear_closed_form() {
        // 2 -> 2 linear net; offset along column y = 1 of W, parallel to x.
        let cfg = MlpConfig::new(2, vec![], 2).unwrap();
        let net = Network::from_weights(cfg, vec![1.0, -0.5, 0.25, 2.0, 0.0, 0.0]).unwrap();
        let x = [3.0, 4.0];
        let data = Dataset::new(Tensor::matrix(1, 2, x.to_vec()).unwrap(), vec![1], 2, "t").unwrap();
        let eps = 0.01;
        // W is row-major 2x2 with entries (input, class): column 1 = indices 1 and 3.
        let offset = vec![0.0, eps * 3.0 / 5.0, 0.0, eps * 4.0 / 5.0, 0.0, 0.0];
        let ball = BallSample::from_offsets(net.weights().to_vec(), eps, vec![offset]).unwrap();
        let lip = estimate_lipschitz(&net, &ball, &data).unwrap();
        assert!((lip.l_hat - 5.0).abs() < 1e-9, "{lip:?}");
        assert!((lip.delta_margin - 5.0 * eps).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_zero_for_constant_net() {
        let cfg = MlpConfig::new(2, vec![], 3).unwrap();
        let net = Network::init(cfg, &mut Prng::new(1)).unwrap();
        let data = Dataset::new(Tensor::zeros(&[3, 2]), vec![0, 1, 2], 3, "z").unwrap();
        // Perturb weights only, biases untouched.
        let mut off = vec![0.0; net.param_count()];
        off[..6].iter_mut().for_each(|v| *v = 0.01);
        let ball = BallSample::from_offsets(net.weights().to_vec(), 0.1, vec![off]).unwrap();
        let lip = estimate_lipschitz(&net, &ball, &data).unwrap();
        assert_eq!(lip.l_hat, 0.0);
        assert_eq!(lip.delta_margin, 0.0);
        let center_only = ball.truncated(1);
        assert!(estimate_lipschitz(&net, &center_only, &data).is_err());
    }

    #[test]
    fn theorem1_center_only_is_equality() {
        let (net, data) = tiny_setup(4);
        let ball = sample_ball(net.weights(), 0.05, 1, &mut Prng::new(0)).unwrap();
        let budgets = Budgets {
            sigma_samples: 500,
            ..Budgets::default()
        };
        let rep = verify_theorem1(&net, &ball, &data, 1.0, &budgets, 7).unwrap();
        assert_eq!(rep.lhs, rep.rhs);
        assert_eq!(rep.delta_margin, 0.0);
        assert!(rep.satisfied);
    }

    #[test]
    fn theorem1_random_nets_satisfied() {
        for seed in 0..5 {
            let (net, data) = tiny_setup(10 + seed);
            let r = default_radius(net.weights()).max(1e-3);
            let ball = sample_ball(net.weights(), r, 16, &mut Prng::new(seed)).unwrap();
            let rep = verify_theorem1(&net, &ball, &data, 1.0, &Budgets { sigma_samples: 400, ..Budgets::default() }, seed).unwrap();
            assert!(rep.satisfied, "{rep:#?}");
            assert!(rep.margin_of_satisfaction >= 0.0);
        }
    }

    #[test]
    fn theorem2_constant_scores_both_zero() {
        let cfg = MlpConfig::new(2, vec![], 3).unwrap();
        let net = Network::from_weights(cfg, vec![0.0; 9]).unwrap();
        let data = Dataset::new(Tensor::zeros(&[4, 2]), vec![0, 1, 2, 0], 3, "z").unwrap();
        let ball = BallSample::from_offsets(net.weights().to_vec(), 0.1, vec![]).unwrap();
        let rep = verify_theorem2(&net, &ball, &data, &Budgets { sigma_samples: 1000, premise_pairs: 100, ..Budgets::default() }, 3).unwrap();
        assert!(rep.lhs.abs() <= 4.0 * rep.lhs_stderr + 1e-12);
        assert_eq!(rep.rhs_sup, Some(0.0));
        assert!(rep.satisfied, "{rep:#?}");
    }

    #[test]
    fn premise_holds() {
        for m in [1, 2, 4, 9, 16] {
            let p = check_logsumexp_lipschitz(m, 2000, &mut Prng::new(m as u64)).unwrap();
            assert!(p.holds && p.max_ratio <= 1.0, "{p:?}");
        }
    }

    #[test]
    fn deadline_marks_incomplete() {
        let (net, data) = tiny_setup(5);
        let ball = sample_ball(net.weights(), 0.05, 4, &mut Prng::new(0)).unwrap();
        let budgets = Budgets {
            sigma_samples: usize::MAX / 2,
            time_limit_ms: Some(20),
            ..Budgets::default()
        };
        let rep = verify_theorem1(&net, &ball, &data, 1.0, &budgets, 1).unwrap();
        assert!(!rep.complete);
        assert!(!rep.satisfied);
    }
}

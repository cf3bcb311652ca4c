//! Central-difference gradient checking.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

/// Compares the analytic gradient returned by `f` against central differences.
///
/// `f` maps a flat parameter vector to `(value, gradient)`; it must be
/// deterministic. The relative error at each coordinate is
/// `|a - n| / max(1, |a|, |n|)`.
pub fn gradcheck<F>(f: F, w: &[f64], step: f64, tolerance: f64) -> Result<GradcheckReport>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, analytic) = f(w)?;
    if !value.is_finite() {
        return Err(Error::Evaluation(format!("f(w) is not finite: {value}")));
    }
    if analytic.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            w.len()
        )));
    }
    let mut point = w.to_vec();
    let mut report = GradcheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: 0.0,
        passed: true,
    };
    for k in 0..w.len() {
        point[k] = w[k] + step;
        let plus = f(&point)?.0;
        point[k] = w[k] - step;
        let minus = f(&point)?.0;
        point[k] = w[k];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Evaluation(format!(
                "non-finite value when perturbing coordinate {k}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[k];
        let rel = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
        if k == 0 || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = k;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.passed = report.max_rel_error < tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let f = |w: &[f64]| Ok((0.5 * w.iter().map(|v| v * v).sum::<f64>(), w.to_vec()));
        let r = gradcheck(f, &[0.3, -1.2, 4.0, 0.0], 1e-6, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_rel_error < 1e-9);
    }

    #[test]
    fn wrong_gradient_fails() {
        let f = |w: &[f64]| {
            let mut g = w.to_vec();
            g[1] += 0.1;
            Ok((0.5 * w.iter().map(|v| v * v).sum::<f64>(), g))
        };
        let r = gradcheck(f, &[0.3, -1.2, 4.0], 1e-6, 1e-5).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_index, 1);
    }

    #[test]
    fn non_finite_value_is_an_error() {
        let f = |_: &[f64]| Ok((f64::NAN, vec![0.0]));
        assert!(matches!(gradcheck(f, &[1.0], 1e-6, 1e-5), Err(Error::Evaluation(_))));
    }
}

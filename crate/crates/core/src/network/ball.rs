use crate::error::{invalid, Result};
use crate::rng::Prng;

/// Finite stand-in for the parameter ball `B(center, radius)`.
///
/// Offset 0 is always the zero vector, so the center is a candidate for every
/// sampled supremum.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSample {
    center: Vec<f64>,
    radius: f64,
    offsets: Vec<Vec<f64>>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl BallSample {
    /// Builds a ball from explicit offsets; the zero offset is prepended if absent.
    pub fn from_offsets(center: Vec<f64>, radius: f64, offsets: Vec<Vec<f64>>) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        for (k, o) in offsets.iter().enumerate() {
            if o.len() != center.len() {
                return invalid(format!(
                    "offset {k} has {} entries, center has {}",
                    o.len(),
                    center.len()
                ));
            }
            if norm(o) > radius {
                return invalid(format!("offset {k} has norm {} > radius {radius}", norm(o)));
            }
        }
        let mut all = Vec::with_capacity(offsets.len() + 1);
        if offsets.first().map_or(true, |o| o.iter().any(|&v| v != 0.0)) {
            all.push(vec![0.0; center.len()]);
        }
        all.extend(offsets);
        Ok(Self {
            center,
            radius,
            offsets: all,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn offsets(&self) -> &[Vec<f64>] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offset_norm(&self, k: usize) -> f64 {
        norm(&self.offsets[k])
    }

    /// Parameter vector `center + offset[k]`.
    pub fn candidate(&self, k: usize) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.offsets[k])
            .map(|(c, o)| c + o)
            .collect()
    }

    /// First `count` candidates (center included).
    pub fn truncated(&self, count: usize) -> BallSample {
        BallSample {
            center: self.center.clone(),
            radius: self.radius,
            offsets: self.offsets[..count.clamp(1, self.offsets.len())].to_vec(),
        }
    }

    /// Appends `-offset` for every nonzero offset.
    pub fn symmetrized(&self) -> BallSample {
        let mut offsets = self.offsets.clone();
        for o in &self.offsets {
            if o.iter().any(|&v| v != 0.0) {
                offsets.push(o.iter().map(|v| -v).collect());
            }
        }
        BallSample {
            center: self.center.clone(),
            radius: self.radius,
            offsets,
        }
    }
}

/// Uniform samples from the ball: Gaussian direction times `r * u^(1/dim)`.
/// Sample 0 is the center.
pub fn sample_ball(center: &[f64], radius: f64, count: usize, rng: &mut Prng) -> Result<BallSample> {
    if !(radius > 0.0) || !radius.is_finite() {
        return invalid(format!("ball radius must be positive, got {radius}"));
    }
    if count == 0 {
        return invalid("ball sample count must be at least 1");
    }
    if center.is_empty() {
        return invalid("ball center must be nonempty");
    }
    let dim = center.len();
    let mut offsets = Vec::with_capacity(count);
    offsets.push(vec![0.0; dim]);
    while offsets.len() < count {
        let dir: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
        let n = norm(&dir);
        if n == 0.0 {
            continue;
        }
        let rho = radius * rng.next_open01().powf(1.0 / dim as f64);
        let mut offset: Vec<f64> = dir.iter().map(|v| v * rho / n).collect();
        let got = norm(&offset);
        if got > radius {
            let fix = radius / got * (1.0 - f64::EPSILON);
            offset.iter_mut().for_each(|v| *v *= fix);
        }
        offsets.push(offset);
    }
    Ok(BallSample {
        center: center.to_vec(),
        radius,
        offsets,
    })
}

//! SplitMix64 streams and Rademacher sign sampling.
//!
//! Every stochastic consumer owns its own [`Prng`], derived from the run seed
//! plus a fixed [`Role`] offset, so drawing more estimator samples never shifts
//! the training stream.

use crate::error::{invalid, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// Distance between role streams derived from one seed.
const ROLE_STRIDE: u64 = 1 << 32;

/// Logical consumers of randomness. Each gets `seed + role * 2^32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Init = 0,
    Shuffle = 1,
    Sigma = 2,
    Data = 3,
    Ball = 4,
    Estimator = 5,
    Split = 6,
}

/// SplitMix64 generator. Single owner; clone to fork an identical stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn for_role(seed: u64, role: Role) -> Self {
        Self::new(seed.wrapping_add((role as u64).wrapping_mul(ROLE_STRIDE)))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller (cosine branch only).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `0..n` (multiply-shift reduction). `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }

    /// Draws `count` Rademacher signs; `+1` iff the top bit of the output is clear.
    pub fn sample_signs(&mut self, count: usize) -> Result<SignVector> {
        if count == 0 {
            return invalid("sign count must be at least 1");
        }
        let signs = (0..count)
            .map(|_| if self.next_u64() >> 63 == 0 { 1 } else { -1 })
            .collect();
        Ok(SignVector { signs })
    }

    /// Row-major `rows x cols` sign matrix drawn from the same stream as [`Prng::sample_signs`].
    pub fn sample_sign_matrix(&mut self, rows: usize, cols: usize) -> Result<SignVector> {
        if rows == 0 || cols == 0 {
            return invalid(format!("sign matrix dimensions must be positive, got {rows}x{cols}"));
        }
        self.sample_signs(rows * cols)
    }
}

/// A sequence of Rademacher variables, each exactly +1 or -1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignVector {
    signs: Vec<i8>,
}

impl SignVector {
    /// Builds from raw signs; rejects anything other than +1/-1.
    pub fn from_signs(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return invalid("sign vector must be nonempty");
        }
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return invalid(format!("sign entries must be +1 or -1, got {bad}"));
        }
        Ok(Self { signs })
    }

    /// Sign pattern from the low `len` bits of `pattern`, bit `i` set meaning `-1` at position `i`.
    pub fn from_pattern(pattern: u64, len: usize) -> Self {
        let signs = (0..len)
            .map(|i| if (pattern >> i) & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { signs }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.signs
    }

    pub fn get(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.signs.iter().map(|&s| f64::from(s))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.iter().collect()
    }

    /// Correlation `sum_i sign_i * values_i`.
    pub fn dot(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.signs.len());
        self.iter().zip(values).map(|(s, v)| s * v).sum()
    }
}

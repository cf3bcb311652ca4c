//! `--data` mini-grammar:
//!
//! - `blobs:CxN[:spread]`: `C` classes, `N` points per class, inputs in
//!   `max(2, C - 1)` dimensions, default spread 0.15;
//! - `spirals:N[:noise]`: two arms of `N` points, default noise 0.05;
//! - `csv:PATH:C`: rows of features followed by an integer label;
//! - `cifar10:DIR`: `data_batch_1.bin`..`data_batch_5.bin` and `test_batch.bin`.

use std::path::PathBuf;
use std::str::FromStr;

use lrc_core::data::{gen_blobs, gen_two_spirals, load_cifar10_binary, load_csv, split, Dataset};
use lrc_core::{Prng, Role};

use crate::error::{CliError, CliResult};

pub const DEFAULT_SPREAD: f64 = 0.15;
pub const DEFAULT_NOISE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSpec {
    Blobs { classes: usize, per_class: usize, spread: f64 },
    Spirals { per_class: usize, noise: f64 },
    Csv { path: PathBuf, classes: usize },
    Cifar10 { dir: PathBuf },
}

fn number<T: FromStr>(text: &str, what: &str, spec: &str) -> CliResult<T> {
    text.parse()
        .map_err(|_| CliError::usage(format!("--data {spec}: cannot parse {what} from {text:?}")))
}

impl FromStr for DataSpec {
    type Err = CliError;

    fn from_str(spec: &str) -> CliResult<Self> {
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| CliError::usage(format!("--data {spec}: expected KIND:ARGS")))?;
        match kind {
            "blobs" => {
                let mut parts = rest.split(':');
                let size = parts.next().unwrap_or_default();
                let (c, n) = size
                    .split_once('x')
                    .ok_or_else(|| CliError::usage(format!("--data {spec}: expected blobs:CxN")))?;
                let spread = match parts.next() {
                    Some(s) => number(s, "spread", spec)?,
                    None => DEFAULT_SPREAD,
                };
                if parts.next().is_some() {
                    return Err(CliError::usage(format!("--data {spec}: too many fields")));
                }
                Ok(Self::Blobs {
                    classes: number(c, "class count", spec)?,
                    per_class: number(n, "points per class", spec)?,
                    spread,
                })
            }
            "spirals" => {
                let (n, noise) = match rest.split_once(':') {
                    Some((n, noise)) => (n, number(noise, "noise", spec)?),
                    None => (rest, DEFAULT_NOISE),
                };
                Ok(Self::Spirals {
                    per_class: number(n, "points per arm", spec)?,
                    noise,
                })
            }
            "csv" => {
                let (path, c) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| CliError::usage(format!("--data {spec}: expected csv:PATH:C")))?;
                Ok(Self::Csv {
                    path: PathBuf::from(path),
                    classes: number(c, "class count", spec)?,
                })
            }
            "cifar10" if !rest.is_empty() => Ok(Self::Cifar10 { dir: PathBuf::from(rest) }),
            _ => Err(CliError::usage(format!(
                "--data {spec}: unknown kind; expected blobs, spirals, csv or cifar10"
            ))),
        }
    }
}

/// Training and test sets for a run.
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

impl DataSpec {
    /// Generated or loaded, then split by `fractions` (train, validation, test).
    /// CIFAR-10 keeps its own train/test files.
    pub fn load(&self, seed: u64, fractions: [f64; 3]) -> CliResult<Splits> {
        let full = match self {
            Self::Cifar10 { dir } => {
                let train: Vec<PathBuf> = (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect();
                let train = load_cifar10_binary(&train, true).map_err(CliError::from_data)?;
                let test = load_cifar10_binary(&[dir.join("test_batch.bin")], true).map_err(CliError::from_data)?;
                return Ok(Splits { train, test });
            }
            Self::Blobs {
                classes,
                per_class,
                spread,
            } => {
                let dim = (*classes).saturating_sub(1).max(2);
                gen_blobs(*classes, *per_class, dim, *spread, &mut Prng::for_role(seed, Role::Data))
            }
            Self::Spirals { per_class, noise } => gen_two_spirals(*per_class, *noise, &mut Prng::for_role(seed, Role::Data)),
            Self::Csv { path, classes } => load_csv(path, *classes),
        }
        .map_err(CliError::from_data)?;
        let (train, _, test) = split(&full, fractions, &mut Prng::for_role(seed, Role::Split)).map_err(CliError::from_data)?;
        Ok(Splits { train, test })
    }
}

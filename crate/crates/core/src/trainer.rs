//! Minibatch SGD with momentum and coupled weight decay over the hinge or
//! cross-entropy objective plus the sign-sampled LRC regularizer.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::losses::LossKind;
use crate::lrc::{lrc_regularizer, LrcConfig};
use crate::network::Network;
use crate::rng::{Prng, Role};
use crate::tape::Tape;
use crate::tensor::{argmax_rows, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `lr0 * factor^(milestones passed)`; a milestone at epoch `e` applies from `e` on.
    Step { milestones: Vec<usize>, factor: f64 },
    /// `lr0 (1 + cos(pi epoch / total_epochs)) / 2`.
    Cosine { total_epochs: usize },
}

impl Schedule {
    /// Step decay by 10 at 50% and 75% of `epochs`.
    pub fn default_step(epochs: usize) -> Self {
        Self::Step {
            milestones: vec![epochs / 2, epochs * 3 / 4],
            factor: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Step { factor, .. } if !(*factor > 0.0 && factor.is_finite()) => {
                invalid(format!("step factor must be positive, got {factor}"))
            }
            Self::Cosine { total_epochs: 0 } => invalid("cosine schedule needs total_epochs >= 1"),
            _ => Ok(()),
        }
    }
}

/// Learning rate at `epoch` (0-based).
///
/// A step factor whose reciprocal is an integer is applied as a division so
/// that `0.1` decayed twice by `0.1` is exactly `0.001`.
pub fn lr_at(schedule: &Schedule, epoch: usize, lr0: f64) -> f64 {
    match schedule {
        Schedule::Step { milestones, factor } => {
            let passed = milestones.iter().filter(|&&m| epoch >= m).count();
            let inv = 1.0 / factor;
            let divide = (inv - inv.round()).abs() <= 1e-9 * inv.abs();
            (0..passed).fold(lr0, |lr, _| if divide { lr / inv.round() } else { lr * factor })
        }
        Schedule::Cosine { total_epochs } => {
            let t = epoch.min(*total_epochs) as f64 / *total_epochs as f64;
            if t >= 1.0 {
                0.0
            } else {
                lr0 * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SgdState {
    pub velocity: Vec<f64>,
}

impl SgdState {
    pub fn new(len: usize) -> Self {
        Self { velocity: vec![0.0; len] }
    }
}

/// `v <- mu v + (g + wd w)`; `w <- w - lr v`.
pub fn sgd_step(
    weights: &mut [f64],
    grads: &[f64],
    state: &mut SgdState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    if grads.len() != weights.len() {
        return invalid(format!(
            "gradient has {} entries, weights have {}",
            grads.len(),
            weights.len()
        ));
    }
    if state.velocity.is_empty() {
        state.velocity = vec![0.0; weights.len()];
    } else if state.velocity.len() != weights.len() {
        return invalid(format!(
            "velocity has {} entries, weights have {}",
            state.velocity.len(),
            weights.len()
        ));
    }
    for ((w, g), v) in weights.iter_mut().zip(grads).zip(state.velocity.iter_mut()) {
        *v = momentum * *v + (g + weight_decay * *w);
        *w -= lr * *v;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// Weights and velocity rounded to single precision after every step.
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Hinge,
    Ce,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossName,
    /// `lambda`, `K`, the hinge `gamma`, and the seed of the sign stream.
    pub lrc: LrcConfig,
    /// When false the objective is the bare loss; `R` is still computed and logged.
    pub regularizer: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub schedule: Schedule,
    pub seed: u64,
    pub precision: Precision,
    pub bit_exact: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossName::Ce,
            lrc: LrcConfig::default(),
            regularizer: true,
            epochs: 200,
            batch_size: 32,
            lr0: 0.05,
            momentum: 0.9,
            weight_decay: 0.0002,
            schedule: Schedule::default_step(200),
            seed: 0,
            precision: Precision::F64,
            bit_exact: false,
        }
    }
}

impl TrainConfig {
    pub fn loss_kind(&self) -> LossKind {
        match self.loss {
            LossName::Hinge => LossKind::Hinge { gamma: self.lrc.gamma },
            LossName::Ce => LossKind::CrossEntropy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lrc.validate()?;
        self.schedule.validate()?;
        if !(self.lr0 > 0.0) || !self.lr0.is_finite() {
            return invalid(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return invalid(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return invalid(format!("weight decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            return invalid("batch size must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub reg_value: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub lr: f64,
    pub wall_ms: u64,
}

/// Training-side averages of one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    /// Sample-weighted mean of the batch losses, without the regularizer.
    pub train_loss: f64,
    /// Mean `R` over minibatches.
    pub reg_value: f64,
    pub lr: f64,
}

/// Mean loss and argmax accuracy; ties count as the lowest class index.
pub fn evaluate(net: &Network, data: &Dataset, loss: &LossKind) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Ok((0.0, 0.0));
    }
    let scores = net.forward(data.inputs())?;
    let losses = loss.per_sample(&scores, data.labels())?;
    let predicted = argmax_rows(&scores);
    let correct = predicted.iter().zip(data.labels()).filter(|(p, y)| p == y).count();
    let n = data.len() as f64;
    Ok((losses.iter().sum::<f64>() / n, correct as f64 / n))
}

/// `loss + lambda R` on one batch and its gradient in `weights`.
///
/// `sigma` is cloned, so repeated calls see the same signs; this is the
/// frozen-sign objective used for gradient checking.
pub fn batch_objective(
    net: &Network,
    weights: &[f64],
    batch: &Dataset,
    loss: &LossKind,
    lrc: &LrcConfig,
    sigma: &Prng,
) -> Result<(f64, Vec<f64>)> {
    let mut tape = Tape::new();
    let params = tape.param(Tensor::vector(weights.to_vec()));
    let x = tape.constant(batch.inputs().clone());
    let scores = net.forward_on(&mut tape, params, x)?;
    let base = loss.loss(&mut tape, scores, batch.labels())?;
    let r = lrc_regularizer(&mut tape, scores, batch.labels(), loss, lrc.k, &mut sigma.clone())?;
    let weighted = tape.scale(r.value, lrc.lambda);
    let total = tape.add(base, weighted)?;
    let grads = tape.backward(total)?.wrt(params);
    Ok((tape.value(total).item(), grads.into_data()))
}

fn round_f32(values: &mut [f64]) {
    values.iter_mut().for_each(|v| *v = *v as f32 as f64);
}

pub struct Trainer {
    cfg: TrainConfig,
    net: Network,
    state: SgdState,
    shuffle: Prng,
    sigma: Prng,
    epoch: usize,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, mut net: Network) -> Result<Self> {
        cfg.validate()?;
        if cfg.precision == Precision::F32 {
            round_f32(net.weights_mut());
        }
        let state = SgdState::new(net.param_count());
        Ok(Self {
            shuffle: Prng::for_role(cfg.seed, Role::Shuffle),
            sigma: Prng::for_role(cfg.lrc.seed, Role::Sigma),
            cfg,
            net,
            state,
            epoch: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One pass over `train` in a fresh seeded order; the last partial batch is kept.
    pub fn train_epoch(&mut self, train: &Dataset) -> Result<EpochStats> {
        if train.is_empty() {
            return invalid("training set is empty");
        }
        let cfg = &self.cfg;
        let loss_kind = cfg.loss_kind();
        let lr = lr_at(&cfg.schedule, self.epoch, cfg.lr0);
        let order = self.shuffle.permutation(train.len());
        let mut loss_sum = 0.0;
        let mut reg_sum = 0.0;
        let mut batches = 0usize;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = train.inputs().select_rows(idx);
            let y: Vec<usize> = idx.iter().map(|&i| train.labels()[i]).collect();
            let mut tape = Tape::new();
            let params = tape.param(Tensor::vector(self.net.weights().to_vec()));
            let xv = tape.constant(x);
            let scores = self.net.forward_on(&mut tape, params, xv)?;
            let loss = loss_kind.loss(&mut tape, scores, &y)?;
            let (objective, reg) = if cfg.regularizer {
                let r = lrc_regularizer(&mut tape, scores, &y, &loss_kind, cfg.lrc.k, &mut self.sigma)?;
                let weighted = tape.scale(r.value, cfg.lrc.lambda);
                let total = tape.add(loss, weighted)?;
                (total, tape.value(r.value).item())
            } else {
                let mut scratch = Tape::new();
                let detached = scratch.constant(tape.value(scores).clone());
                let r = lrc_regularizer(&mut scratch, detached, &y, &loss_kind, cfg.lrc.k, &mut self.sigma)?;
                (loss, scratch.value(r.value).item())
            };
            let value = tape.value(objective).item();
            if !value.is_finite() || !reg.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: self.epoch,
                    batch,
                });
            }
            let grads = tape.backward(objective)?.wrt(params);
            sgd_step(
                self.net.weights_mut(),
                grads.data(),
                &mut self.state,
                lr,
                cfg.momentum,
                cfg.weight_decay,
            )?;
            if cfg.precision == Precision::F32 {
                round_f32(self.net.weights_mut());
                round_f32(&mut self.state.velocity);
            }
            loss_sum += tape.value(loss).item() * idx.len() as f64;
            reg_sum += reg;
            batches += 1;
        }
        self.epoch += 1;
        Ok(EpochStats {
            train_loss: loss_sum / train.len() as f64,
            reg_value: reg_sum / batches as f64,
            lr,
        })
    }

    /// Trains for the configured epochs, evaluating on `test` after each.
    pub fn run<F>(&mut self, train: &Dataset, test: &Dataset, mut on_epoch: F) -> Result<Vec<MetricsRecord>>
    where
        F: FnMut(&MetricsRecord, &Network) -> Result<()>,
    {
        let start = Instant::now();
        let loss_kind = self.cfg.loss_kind();
        let mut records = Vec::with_capacity(self.cfg.epochs);
        while self.epoch < self.cfg.epochs {
            let epoch = self.epoch;
            let stats = self.train_epoch(train)?;
            let (test_loss, test_acc) = evaluate(&self.net, test, &loss_kind)?;
            let record = MetricsRecord {
                epoch,
                train_loss: stats.train_loss,
                reg_value: stats.reg_value,
                test_loss,
                test_acc,
                lr: stats.lr,
                wall_ms: if self.cfg.bit_exact {
                    0
                } else {
                    start.elapsed().as_millis() as u64
                },
            };
            on_epoch(&record, &self.net)?;
            records.push(record);
        }
        Ok(records)
    }
}

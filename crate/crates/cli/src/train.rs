use std::io::Write;
use std::path::PathBuf;

use log::info;
use lrc_core::data::Dataset;
use lrc_core::network::{MlpConfig, Network};
use lrc_core::trainer::{evaluate, LossName, MetricsRecord, Precision, Schedule, TrainConfig, Trainer};
use lrc_core::{Prng, Role};
use serde::{Deserialize, Serialize};

use crate::args::{LossArg, PrecisionArg, ScheduleArg, TrainArgs};
use crate::dataspec::DataSpec;
use crate::error::{CliError, CliResult};
use crate::io::{read_config, sink, to_json};

/// Fully resolved `train` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    pub data: String,
    pub hidden: Vec<usize>,
    pub split: [f64; 3],
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: Option<usize>,
    pub train: TrainConfig,
}

impl Default for TrainRun {
    fn default() -> Self {
        Self {
            data: "blobs:3x200".into(),
            hidden: vec![32, 32],
            split: [0.8, 0.0, 0.2],
            out: None,
            checkpoint: None,
            checkpoint_every: None,
            train: TrainConfig::default(),
        }
    }
}

fn positive(flag: &str, v: f64) -> CliResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{flag} must be positive, got {v}")))
    }
}

fn nonnegative(flag: &str, v: f64) -> CliResult<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{flag} must be >= 0, got {v}")))
    }
}

fn at_least_one(flag: &str, v: usize) -> CliResult<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{flag} must be at least 1")))
    }
}

pub fn fractions(flag: &str, v: &[f64]) -> CliResult<[f64; 3]> {
    <[f64; 3]>::try_from(v).map_err(|_| CliError::usage(format!("--{flag} needs three comma-separated fractions")))
}

impl TrainRun {
    /// Overlays command-line flags; `--seed` seeds both the run and the sign stream.
    pub fn apply(&mut self, a: &TrainArgs) -> CliResult<()> {
        let t = &mut self.train;
        if let Some(l) = a.loss {
            t.loss = match l {
                LossArg::Hinge => LossName::Hinge,
                LossArg::Ce => LossName::Ce,
            };
        }
        if let Some(v) = a.lambda {
            t.lrc.lambda = nonnegative("lambda", v)?;
        }
        if let Some(v) = a.gamma {
            t.lrc.gamma = positive("gamma", v)?;
        }
        if let Some(v) = a.k {
            t.lrc.k = at_least_one("K", v)?;
        }
        if let Some(v) = a.batch_size {
            t.batch_size = at_least_one("batch-size", v)?;
        }
        if let Some(v) = a.lr {
            t.lr0 = positive("lr", v)?;
        }
        if let Some(v) = a.momentum {
            if !(0.0..1.0).contains(&v) {
                return Err(CliError::usage(format!("--momentum must lie in [0, 1), got {v}")));
            }
            t.momentum = v;
        }
        if let Some(v) = a.weight_decay {
            t.weight_decay = nonnegative("weight-decay", v)?;
        }
        if let Some(s) = a.seed {
            t.seed = s;
            t.lrc.seed = s;
        }
        if let Some(p) = a.precision {
            t.precision = match p {
                PrecisionArg::F32 => Precision::F32,
                PrecisionArg::F64 => Precision::F64,
            };
        }
        if a.bit_exact {
            t.bit_exact = true;
        }
        if a.no_regularizer {
            t.regularizer = false;
        }
        if let Some(e) = a.epochs {
            t.epochs = at_least_one("epochs", e)?;
        }
        let rebuild = a.schedule.is_some() || a.epochs.is_some() || a.milestones.is_some() || a.lr_factor.is_some();
        if rebuild {
            let cosine = match a.schedule {
                Some(s) => s == ScheduleArg::Cosine,
                None => matches!(t.schedule, Schedule::Cosine { .. }),
            };
            t.schedule = if cosine {
                Schedule::Cosine { total_epochs: t.epochs }
            } else {
                let factor = match (a.lr_factor, &t.schedule) {
                    (Some(f), _) => positive("lr-factor", f)?,
                    (None, Schedule::Step { factor, .. }) => *factor,
                    (None, _) => 0.1,
                };
                let milestones = match &a.milestones {
                    Some(m) => m.clone(),
                    None => match (a.epochs, &t.schedule) {
                        (None, Schedule::Step { milestones, .. }) => milestones.clone(),
                        _ => match Schedule::default_step(t.epochs) {
                            Schedule::Step { milestones, .. } => milestones,
                            Schedule::Cosine { .. } => unreachable!(),
                        },
                    },
                };
                Schedule::Step { milestones, factor }
            };
        }
        if let Some(d) = &a.data {
            self.data = d.clone();
        }
        if let Some(h) = &a.hidden {
            self.hidden = h.clone();
        }
        if let Some(s) = &a.split {
            self.split = fractions("split", s)?;
        }
        if a.out.is_some() {
            self.out = a.out.clone();
        }
        if a.checkpoint.is_some() {
            self.checkpoint = a.checkpoint.clone();
        }
        if let Some(n) = a.checkpoint_every {
            self.checkpoint_every = Some(at_least_one("checkpoint-every", n)?);
        }
        self.train.validate().map_err(|e| CliError::usage(e.to_string()))
    }
}

/// Final JSONL line.
#[derive(Serialize)]
struct Summary {
    summary: bool,
    epochs: usize,
    loss: LossName,
    lambda: f64,
    seed: u64,
    final_train_loss: f64,
    final_reg_value: f64,
    final_test_loss: f64,
    final_test_acc: f64,
    /// Means over the last five epochs.
    last5_test_loss: f64,
    last5_test_acc: f64,
    last5_reg_value: f64,
    train_acc: f64,
    wall_ms: u64,
}

fn summarize(run: &TrainRun, records: &[MetricsRecord], net: &Network, train: &Dataset) -> CliResult<Summary> {
    let last = records.last().ok_or_else(|| CliError::usage("no epochs were run"))?;
    let tail = &records[records.len().saturating_sub(5)..];
    let avg = |f: fn(&MetricsRecord) -> f64| tail.iter().map(f).sum::<f64>() / tail.len() as f64;
    let (_, train_acc) = evaluate(net, train, &run.train.loss_kind())?;
    Ok(Summary {
        summary: true,
        epochs: records.len(),
        loss: run.train.loss,
        lambda: run.train.lrc.lambda,
        seed: run.train.seed,
        final_train_loss: last.train_loss,
        final_reg_value: last.reg_value,
        final_test_loss: last.test_loss,
        final_test_acc: last.test_acc,
        last5_test_loss: avg(|r| r.test_loss),
        last5_test_acc: avg(|r| r.test_acc),
        last5_reg_value: avg(|r| r.reg_value),
        train_acc,
        wall_ms: last.wall_ms,
    })
}

pub fn run(a: TrainArgs) -> CliResult<i32> {
    let mut cfg = match &a.config.config {
        Some(p) => read_config::<TrainRun>(p)?,
        None => TrainRun::default(),
    };
    cfg.apply(&a)?;
    if a.config.print_config {
        println!("{}", to_json(&cfg));
        return Ok(0);
    }
    let spec: DataSpec = cfg.data.parse()?;
    let data = spec.load(cfg.train.seed, cfg.split)?;
    let mlp = MlpConfig::new(data.train.dim(), cfg.hidden.clone(), data.train.classes())
        .map_err(|e| CliError::usage(format!("--hidden: {e}")))?;
    let net = Network::init(mlp, &mut Prng::for_role(cfg.train.seed, Role::Init))?;
    info!(
        "training on {} ({} train / {} test points), {} parameters",
        data.train.name(),
        data.train.len(),
        data.test.len(),
        net.param_count()
    );
    let mut out = sink(cfg.out.as_deref())?;
    let mut trainer = Trainer::new(cfg.train.clone(), net)?;
    let ckpt = cfg.checkpoint.clone();
    let every = cfg.checkpoint_every;
    let records = trainer.run(&data.train, &data.test, |rec, net| {
        let line = serde_json::to_string(rec).expect("metrics serialize");
        writeln!(out, "{line}")?;
        out.flush()?;
        if let (Some(path), Some(n)) = (&ckpt, every) {
            if (rec.epoch + 1) % n == 0 {
                net.save(path)?;
            }
        }
        Ok(())
    })?;
    let summary = summarize(&cfg, &records, trainer.network(), &data.train)?;
    writeln!(out, "{}", serde_json::to_string(&summary).expect("summary serializes"))?;
    out.flush()?;
    if let Some(path) = &cfg.checkpoint {
        trainer.network().save(path).map_err(|e| CliError::data(e.to_string()))?;
    }
    Ok(0)
}

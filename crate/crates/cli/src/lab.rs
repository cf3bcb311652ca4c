use std::path::PathBuf;

use log::warn;
use lrc_core::complexity::{
    default_radius, estimate_global_rc, estimate_lrc_ce, estimate_lrc_margin, verify_theorem1, verify_theorem2,
    Budgets, RcEstimate, SigmaBudget,
};
use lrc_core::data::Dataset;
use lrc_core::losses::{margin_values, phi};
use lrc_core::network::{sample_ball, BallSample, Network};
use lrc_core::{Prng, Role};
use serde::{Deserialize, Serialize};

use crate::args::{EstimateArgs, KindArg, LabArgs, VerifyArgs};
use crate::dataspec::DataSpec;
use crate::error::{CliError, CliResult, EXIT_UNSATISFIED};
use crate::io::{read_config, to_json, write_document};
use crate::train::fractions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RcKind {
    Global,
    LrcMargin,
    LrcCe,
}

/// Inputs common to `estimate-rc` and `verify-bounds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabRun {
    pub checkpoint: Option<PathBuf>,
    pub data: String,
    pub split: [f64; 3],
    pub points: Option<usize>,
    /// Ball radius; `None` means 1% of the checkpoint's weight norm.
    pub r: Option<f64>,
    pub gamma: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub budgets: Budgets,
}

impl Default for LabRun {
    fn default() -> Self {
        Self {
            checkpoint: None,
            data: "blobs:3x200".into(),
            split: [0.8, 0.0, 0.2],
            points: None,
            r: None,
            gamma: 1.0,
            seed: 0,
            out: None,
            budgets: Budgets::default(),
        }
    }
}

impl LabRun {
    fn apply(&mut self, a: &LabArgs) -> CliResult<()> {
        if a.checkpoint.is_some() {
            self.checkpoint = a.checkpoint.clone();
        }
        if let Some(d) = &a.data {
            self.data = d.clone();
        }
        if let Some(s) = &a.split {
            self.split = fractions("split", s)?;
        }
        if let Some(p) = a.points {
            if p == 0 {
                return Err(CliError::usage("--points must be at least 1"));
            }
            self.points = Some(p);
        }
        if let Some(r) = a.r {
            self.r = Some(r);
        }
        if let Some(g) = a.gamma {
            self.gamma = g;
        }
        if let Some(s) = a.seed {
            self.seed = s;
        }
        if a.out.is_some() {
            self.out = a.out.clone();
        }
        if let Some(n) = a.sigma_samples {
            self.budgets.sigma_samples = n;
        }
        if a.exhaustive {
            self.budgets.exhaustive_sigma = true;
        }
        if let Some(n) = a.ball_samples {
            self.budgets.ball_samples = n;
        }
        self.validate()
    }

    fn validate(&self) -> CliResult<()> {
        if let Some(r) = self.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::usage(format!("--r must be positive, got {r}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(CliError::usage(format!("--gamma must be positive, got {}", self.gamma)));
        }
        if self.budgets.sigma_samples == 0 {
            return Err(CliError::usage("--sigma-samples must be at least 1"));
        }
        if self.budgets.ball_samples == 0 {
            return Err(CliError::usage("--ball-samples must be at least 1"));
        }
        Ok(())
    }

    /// Checkpoint, evaluation points (the training split, optionally truncated), and ball.
    fn materialize(&self) -> CliResult<(Network, Dataset, BallSample)> {
        let path = self
            .checkpoint
            .as_ref()
            .ok_or_else(|| CliError::usage("--checkpoint is required"))?;
        let net = Network::load(path).map_err(|e| CliError::data(format!("--checkpoint {}: {e}", path.display())))?;
        let spec: DataSpec = self.data.parse()?;
        let mut data = spec.load(self.seed, self.split)?.train;
        if let Some(p) = self.points {
            data = data.head(p);
        }
        let cfg = net.config();
        if data.dim() != cfg.input_dim || data.classes() != cfg.classes {
            return Err(CliError::data(format!(
                "data has d = {}, c = {}; checkpoint expects d = {}, c = {}",
                data.dim(),
                data.classes(),
                cfg.input_dim,
                cfg.classes
            )));
        }
        let r = self.r.unwrap_or_else(|| default_radius(net.weights()));
        if !(r > 0.0) {
            return Err(CliError::usage("checkpoint weights are zero; pass --r explicitly"));
        }
        let ball = sample_ball(
            net.weights(),
            r,
            self.budgets.ball_samples,
            &mut Prng::for_role(self.seed, Role::Ball),
        )?;
        Ok((net, data, ball))
    }
}

fn load_lab<T>(config: &Option<PathBuf>) -> CliResult<T>
where
    T: Default + for<'de> Deserialize<'de>,
{
    match config {
        Some(p) => read_config(p),
        None => Ok(T::default()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateRun {
    pub kind: RcKind,
    #[serde(flatten)]
    pub lab: LabRun,
}

impl Default for EstimateRun {
    fn default() -> Self {
        Self {
            kind: RcKind::LrcMargin,
            lab: LabRun::default(),
        }
    }
}

#[derive(Serialize)]
struct EstimateReport {
    kind: RcKind,
    #[serde(flatten)]
    estimate: RcEstimate,
    radius: f64,
    points: usize,
    seed: u64,
}

/// Margin-loss values of the center and `count - 1` fresh networks from the
/// init distribution, as the finite class of the global estimate.
fn global_class(net: &Network, data: &Dataset, gamma: f64, count: usize, seed: u64) -> CliResult<Vec<Vec<f64>>> {
    let mut rng = Prng::for_role(seed, Role::Ball);
    let mut members = vec![net.clone()];
    for _ in 1..count {
        members.push(Network::init(net.config().clone(), &mut rng)?);
    }
    members
        .iter()
        .map(|m| {
            let scores = m.forward(data.inputs())?;
            Ok(margin_values(&scores, data.labels())?
                .into_iter()
                .map(|v| phi(v / gamma))
                .collect())
        })
        .collect()
}

pub fn estimate(a: EstimateArgs) -> CliResult<i32> {
    let mut run: EstimateRun = load_lab(&a.lab.config.config)?;
    if let Some(k) = a.kind {
        run.kind = match k {
            KindArg::Global => RcKind::Global,
            KindArg::LrcMargin => RcKind::LrcMargin,
            KindArg::LrcCe => RcKind::LrcCe,
        };
    }
    run.lab.apply(&a.lab)?;
    if a.lab.config.print_config {
        println!("{}", to_json(&run));
        return Ok(0);
    }
    let lab = &run.lab;
    let (net, data, ball) = lab.materialize()?;
    if lab.budgets.ball_samples == 1 && run.kind != RcKind::Global {
        warn!("--ball-samples 1: the ball holds only its center, so the estimate is E_sigma of a fixed combination (zero in expectation)");
    }
    let sigma: SigmaBudget = lab.budgets.sigma();
    let mut rng = Prng::for_role(lab.seed, Role::Estimator);
    let estimate = match run.kind {
        RcKind::Global => {
            let class = global_class(&net, &data, lab.gamma, lab.budgets.ball_samples, lab.seed)?;
            estimate_global_rc(&class, sigma, &mut rng)?
        }
        RcKind::LrcMargin => estimate_lrc_margin(&net, &ball, &data, lab.gamma, sigma, &mut rng)?,
        RcKind::LrcCe => estimate_lrc_ce(&net, &ball, &data, sigma, &mut rng)?,
    };
    let report = EstimateReport {
        kind: run.kind,
        estimate,
        radius: ball.radius(),
        points: data.len(),
        seed: lab.seed,
    };
    write_document(lab.out.as_deref(), &report)?;
    Ok(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyRun {
    pub theorem: u8,
    #[serde(flatten)]
    pub lab: LabRun,
}

impl Default for VerifyRun {
    fn default() -> Self {
        Self {
            theorem: 1,
            lab: LabRun::default(),
        }
    }
}

pub fn verify(a: VerifyArgs) -> CliResult<i32> {
    let mut run: VerifyRun = load_lab(&a.lab.config.config)?;
    if let Some(t) = a.theorem {
        run.theorem = t;
    }
    if !(1..=2).contains(&run.theorem) {
        return Err(CliError::usage(format!("--theorem must be 1 or 2, got {}", run.theorem)));
    }
    if let Some(n) = a.premise_pairs {
        run.lab.budgets.premise_pairs = n;
    }
    if a.time_limit_ms.is_some() {
        run.lab.budgets.time_limit_ms = a.time_limit_ms;
    }
    run.lab.apply(&a.lab)?;
    if a.lab.config.print_config {
        println!("{}", to_json(&run));
        return Ok(0);
    }
    let lab = &run.lab;
    let (net, data, ball) = lab.materialize()?;
    let report = match run.theorem {
        1 => verify_theorem1(&net, &ball, &data, lab.gamma, &lab.budgets, lab.seed)?,
        _ => verify_theorem2(&net, &ball, &data, &lab.budgets, lab.seed)?,
    };
    write_document(lab.out.as_deref(), &report)?;
    if !report.complete {
        warn!("budget exhausted before completion; report is partial");
    }
    Ok(if report.satisfied { 0 } else { EXIT_UNSATISFIED })
}

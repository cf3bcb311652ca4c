use lrc_core::data::{gen_blobs, gen_two_spirals, Dataset};
use lrc_core::gradcheck::gradcheck as check_gradient;
use lrc_core::losses::LossKind;
use lrc_core::lrc::LrcConfig;
use lrc_core::network::{MlpConfig, Network};
use lrc_core::trainer::batch_objective;
use lrc_core::{Prng, Role, Tensor};
use serde::Serialize;

use crate::args::{GenDataArgs, GenKindArg, GradcheckArgs, LossArg};
use crate::error::{CliError, CliResult, EXIT_GRADCHECK_FAILED};
use crate::io::write_document;

#[derive(Serialize)]
struct GradcheckOutput {
    passed: bool,
    max_rel_error: f64,
    worst_index: usize,
    analytic: f64,
    numeric: f64,
    tolerance: f64,
    params: usize,
}

/// Random network and batch; parameters are the Glorot init plus small noise
/// so no ReLU sits exactly on its kink.
fn random_problem(a: &GradcheckArgs) -> CliResult<(Network, Dataset)> {
    let cfg = MlpConfig::new(a.dim, a.hidden.clone(), a.classes).map_err(|e| CliError::usage(e.to_string()))?;
    let mut rng = Prng::for_role(a.seed, Role::Init);
    let init = Network::init(cfg, &mut rng)?;
    let w: Vec<f64> = init.weights().iter().map(|v| v + 0.1 * rng.next_gaussian()).collect();
    let net = init.with_weights(w)?;
    let mut data_rng = Prng::for_role(a.seed, Role::Data);
    let x: Vec<f64> = (0..a.batch * a.dim).map(|_| data_rng.next_gaussian()).collect();
    let y: Vec<usize> = (0..a.batch).map(|_| data_rng.below(a.classes)).collect();
    let inputs = Tensor::matrix(a.batch, a.dim, x).map_err(|e| CliError::usage(e.to_string()))?;
    let data = Dataset::new(inputs, y, a.classes, "gradcheck").map_err(|e| CliError::usage(e.to_string()))?;
    Ok((net, data))
}

pub fn gradcheck_cmd(a: &GradcheckArgs) -> CliResult<bool> {
    if a.batch == 0 || a.dim == 0 {
        return Err(CliError::usage("--batch and --dim must be at least 1"));
    }
    if !(a.tolerance > 0.0) || !(a.step > 0.0) {
        return Err(CliError::usage("--tolerance and --step must be positive"));
    }
    let loss = match a.loss {
        LossArg::Hinge => LossKind::hinge(a.gamma).map_err(|e| CliError::usage(format!("--gamma: {e}")))?,
        LossArg::Ce => LossKind::CrossEntropy,
    };
    let lrc = LrcConfig {
        lambda: a.lambda,
        k: a.k,
        gamma: a.gamma,
        seed: a.seed,
    };
    lrc.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let (net, batch) = random_problem(a)?;
    let sigma = Prng::for_role(a.seed, Role::Sigma);
    let sabotage = a.sabotage;
    let f = |w: &[f64]| {
        let (v, mut g) = batch_objective(&net, w, &batch, &loss, &lrc, &sigma)?;
        if sabotage {
            g[0] += 1.0;
        }
        Ok((v, g))
    };
    let rep = check_gradient(f, net.weights(), a.step, a.tolerance)?;
    eprintln!(
        "worst coordinate {}: analytic {:.9e}, numeric {:.9e}, relative error {:.3e} (tolerance {:.1e})",
        rep.worst_index, rep.analytic, rep.numeric, rep.max_rel_error, a.tolerance
    );
    write_document(
        None,
        &GradcheckOutput {
            passed: rep.passed,
            max_rel_error: rep.max_rel_error,
            worst_index: rep.worst_index,
            analytic: rep.analytic,
            numeric: rep.numeric,
            tolerance: a.tolerance,
            params: net.param_count(),
        },
    )?;
    Ok(rep.passed)
}

pub fn gradcheck(a: GradcheckArgs) -> CliResult<i32> {
    Ok(if gradcheck_cmd(&a)? { 0 } else { EXIT_GRADCHECK_FAILED })
}

pub fn gen_data(a: GenDataArgs) -> CliResult<i32> {
    let mut rng = Prng::for_role(a.seed, Role::Data);
    let data = match a.kind {
        GenKindArg::Blobs => {
            let dim = a.dim.unwrap_or_else(|| a.classes.saturating_sub(1).max(2));
            gen_blobs(a.classes, a.per_class, dim, a.spread, &mut rng)
        }
        GenKindArg::Spirals => gen_two_spirals(a.per_class, a.noise, &mut rng),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    data.write_csv(&a.out).map_err(|e| CliError::data(e.to_string()))?;
    Ok(0)
}

use lrc_core::complexity::{
    estimate_lrc_margin, verify_theorem1, verify_theorem2, Budgets, SigmaBudget,
};
use lrc_core::data::{gen_blobs, Dataset};
use lrc_core::losses::phi;
use lrc_core::network::{sample_ball, BallSample, MlpConfig, Network};
use lrc_core::{Prng, Tensor};

#[test]
fn exhaustive_margin_lrc_matches_hand_enumeration() {
    // Linear 2 -> 2 net, two points, eight offsets: margins are affine in w.
    let cfg = MlpConfig::new(2, vec![], 2).unwrap();
    let center = vec![0.5, -0.2, 0.1, 0.4, 0.05, -0.05];
    let net = Network::from_weights(cfg, center.clone()).unwrap();
    let x = [[1.0, 0.5], [-0.3, 0.8]];
    let y = [0usize, 1];
    let data = Dataset::new(
        Tensor::matrix(2, 2, x.iter().flatten().copied().collect()).unwrap(),
        y.to_vec(),
        2,
        "pair",
    )
    .unwrap();
    let mut rng = Prng::new(21);
    let r = 0.3;
    let offsets: Vec<Vec<f64>> = (0..7)
        .map(|_| {
            let v: Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter().map(|a| a * r * 0.9 / n).collect()
        })
        .collect();
    let ball = BallSample::from_offsets(center.clone(), r, offsets).unwrap();
    assert_eq!(ball.len(), 8);
    let gamma = 0.5;

    let score = |w: &[f64], xi: &[f64; 2], j: usize| xi[0] * w[j] + xi[1] * w[2 + j] + w[4 + j];
    let values: Vec<[f64; 2]> = (0..8)
        .map(|k| {
            let w = ball.candidate(k);
            let mut row = [0.0; 2];
            for i in 0..2 {
                let m = score(&w, &x[i], y[i]) - score(&w, &x[i], 1 - y[i]);
                row[i] = phi(m / gamma);
            }
            row
        })
        .collect();
    let mut oracle = 0.0;
    for (s0, s1) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        oracle += values
            .iter()
            .map(|v| (s0 * v[0] + s1 * v[1]) / 2.0)
            .fold(f64::NEG_INFINITY, f64::max)
            / 4.0;
    }
    let est = estimate_lrc_margin(&net, &ball, &data, gamma, SigmaBudget::Exhaustive, &mut Prng::new(0)).unwrap();
    assert!((est.value - oracle).abs() < 1e-14, "{} vs {oracle}", est.value);
    assert_eq!(est.sigma_samples, 4);
    assert_eq!(est.ball_samples, 8);
}

fn tiny(seed: u64, classes: usize) -> (Network, Dataset) {
    let mut rng = Prng::new(seed);
    let dim = (classes - 1).max(2);
    let data = gen_blobs(classes, 3, dim, 0.4, &mut rng).unwrap();
    let net = Network::init(MlpConfig::new(dim, vec![6, 4], classes).unwrap(), &mut rng).unwrap();
    (net, data)
}

#[test]
fn theorem1_chain_holds_on_random_networks() {
    for seed in 0..6 {
        let (net, data) = tiny(seed, 3);
        let ball = sample_ball(net.weights(), 0.05, 24, &mut Prng::new(seed + 50)).unwrap();
        let budgets = Budgets {
            sigma_samples: 300,
            ..Budgets::default()
        };
        let rep = verify_theorem1(&net, &ball, &data, 1.0, &budgets, seed).unwrap();
        assert!(rep.satisfied, "{rep:#?}");
        assert!(rep.delta_margin <= 2.0 * rep.l_hat * 0.05 + 1e-12);
    }
}

#[test]
fn theorem1_exhaustive_on_small_data() {
    let (net, data) = tiny(3, 2);
    let ball = sample_ball(net.weights(), 0.1, 16, &mut Prng::new(1)).unwrap();
    let budgets = Budgets {
        exhaustive_sigma: true,
        ..Budgets::default()
    };
    let rep = verify_theorem1(&net, &ball, &data, 0.5, &budgets, 0).unwrap();
    assert!(rep.satisfied);
    assert_eq!(rep.lhs_stderr, 0.0);
}

#[test]
fn theorem2_check_holds_across_class_counts() {
    for (seed, c) in [(0u64, 2usize), (1, 3), (2, 5)] {
        let (net, data) = tiny(seed, c);
        let ball = sample_ball(net.weights(), 0.05, 16, &mut Prng::new(seed)).unwrap();
        let budgets = Budgets {
            sigma_samples: 500,
            premise_pairs: 1000,
            ..Budgets::default()
        };
        let rep = verify_theorem2(&net, &ball, &data, &budgets, seed).unwrap();
        assert!(rep.satisfied, "c={c}: {rep:#?}");
        assert!(rep.premise.unwrap().holds);
    }
}

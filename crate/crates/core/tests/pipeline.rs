use edgereg::eval::{evaluate, EvalSettings};
use edgereg::inference::{pd_audit, predict_graph};
use edgereg::model::{purity_covariates, predict_precision};
use edgereg::sampler::{compute_m_s, SampleSelector};
use edgereg::simgen::{build_sim1, generate_dataset, GroundTruth};
use edgereg::{run_chain, ChainConfig, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sim1(p: usize, seed: u64) -> (GroundTruth, Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = build_sim1(p, &mut rng).unwrap();
    let d = generate_dataset(&truth, 50, 150, &mut rng).unwrap();
    let m_s = compute_m_s(&d.data, &SampleSelector::by_purity(&d.purity)).unwrap();
    (truth, d.data, m_s)
}

fn config(m_s: Vec<f64>, seed: u64) -> ChainConfig {
    ChainConfig {
        total_iterations: 3000,
        burn_in: 1500,
        thin: 5,
        seed,
        target_levels: vec![purity_covariates(0.0).to_vec(), purity_covariates(1.0).to_vec()],
        m_s,
        ..ChainConfig::default()
    }
}

#[test]
fn short_chain_recovers_structure() {
    let (truth, data, m_s) = sim1(12, 3);
    let out = run_chain(&data, &config(m_s, 11)).unwrap();
    assert_eq!(out.draws.n_draws(), 300);

    let report = evaluate(
        &out.draws,
        0,
        1,
        &truth.normal_edges(),
        &truth.tumor_edges(),
        &EvalSettings::default(),
    )
    .unwrap();
    assert!(report.normal.bauc > 0.8, "normal bAUC {}", report.normal.bauc);
    assert!(report.tumor.bauc > 0.7, "tumor bAUC {}", report.tumor.bauc);
    for a in &out.post_burn_in_acceptance {
        assert!((0.1..=0.45).contains(a), "acceptance {a}");
    }

    let g = predict_graph(&out.draws, 0, 0.1, 0.1).unwrap();
    assert!(!g.selected.is_empty());
    assert_eq!(g.rho_mean.len(), 66);
}

#[test]
fn identical_seeds_give_identical_chains() {
    let (_, data, m_s) = sim1(8, 5);
    let mut cfg = config(m_s, 2);
    cfg.total_iterations = 400;
    cfg.burn_in = 200;
    let a = run_chain(&data, &cfg).unwrap();
    let b = run_chain(&data, &cfg).unwrap();
    assert_eq!(a.draws, b.draws);
    assert_eq!(a.coefficients, b.coefficients);
    cfg.seed = 3;
    let c = run_chain(&data, &cfg).unwrap();
    assert_ne!(a.draws, c.draws);
}

#[test]
fn posterior_mean_precision_is_symmetric_and_mostly_pd() {
    let (_, data, m_s) = sim1(10, 8);
    let out = run_chain(&data, &config(m_s, 4)).unwrap();
    let coeffs = out.coefficients.unwrap();
    let (beta, diag) = coeffs.posterior_mean().unwrap();
    let grid: Vec<Vec<f64>> = (0..=100).map(|k| purity_covariates(k as f64 / 100.0).to_vec()).collect();
    for x in grid.iter().step_by(25) {
        let m = predict_precision(&beta, &diag, x).unwrap();
        assert_eq!(m, m.transpose());
    }
    let audit = pd_audit(&beta, &diag, &grid, None).unwrap();
    assert_eq!(audit.flags.len(), 101);
    assert!(audit.fraction > 0.95, "PD fraction {}", audit.fraction);
}

#[test]
fn rho_rebuilt_from_coefficients_matches_recorded() {
    let (_, data, m_s) = sim1(6, 9);
    let mut cfg = config(m_s, 7);
    cfg.total_iterations = 300;
    cfg.burn_in = 100;
    let out = run_chain(&data, &cfg).unwrap();
    let rebuilt = out.coefficients.unwrap().rho_draws(out.draws.levels()).unwrap();
    for (a, b) in rebuilt.raw().iter().zip(out.draws.raw()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn unstandardized_data_is_refused() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = build_sim1(5, &mut rng).unwrap();
    let d = generate_dataset(&truth, 10, 10, &mut rng).unwrap();
    let raw = Dataset::unnamed(d.data.y().map(|v| v * 3.0 + 1.0), d.data.x().clone()).unwrap();
    let err = run_chain(&raw, &config(vec![0.1, 0.1], 1)).unwrap_err();
    assert!(err.state.is_none());
}

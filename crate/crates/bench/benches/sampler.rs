use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use edgereg::distributions::{sample_gig, GigParams};
use edgereg::eval::{evaluate, EvalSettings};
use edgereg::sampler::{compute_m_s, SampleSelector, Sampler, UpdateMask};
use edgereg::simgen::{build_sim1, generate_dataset};
use edgereg::{run_chain, ChainConfig, SamplerState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    for p in [10usize, 20, 40] {
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        let truth = build_sim1(p, &mut rng).unwrap();
        let d = generate_dataset(&truth, 50, 150, &mut rng).unwrap();
        let m_s = compute_m_s(&d.data, &SampleSelector::by_purity(&d.purity)).unwrap();
        let state = SamplerState::initial(p, &m_s, 0.1);
        let mut sampler = Sampler::new(&d.data, state, 1, UpdateMask::default()).unwrap();
        for _ in 0..50 {
            sampler.sweep().unwrap();
        }
        group.throughput(Throughput::Elements((p * (p - 1) / 2) as u64));
        group.bench_with_input(BenchmarkId::from_parameter(p), &p, |b, _| b.iter(|| sampler.sweep().unwrap()));
    }
    group.finish();
}

fn gig(c: &mut Criterion) {
    let mut group = c.benchmark_group("gig");
    let cases = [
        ("psi", GigParams::new(0.5, 40.0, 1e-4).unwrap()),
        ("omega", GigParams::new(101.0, 200.0, 150.0).unwrap()),
        ("small_omega", GigParams::new(0.2, 0.01, 0.01).unwrap()),
    ];
    for (name, params) in cases {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        group.bench_function(name, |b| b.iter(|| sample_gig(params, &mut rng).unwrap()));
    }
    group.finish();
}

fn short_fit_and_evaluate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = build_sim1(20, &mut rng).unwrap();
    let d = generate_dataset(&truth, 50, 150, &mut rng).unwrap();
    let m_s = compute_m_s(&d.data, &SampleSelector::by_purity(&d.purity)).unwrap();
    let cfg = ChainConfig {
        total_iterations: 1000,
        burn_in: 500,
        thin: 5,
        seed: 1,
        target_levels: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        m_s,
        ..ChainConfig::default()
    };
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("fit_p20_1000_iterations", |b| b.iter(|| run_chain(&d.data, &cfg).unwrap()));
    let out = run_chain(&d.data, &cfg).unwrap();
    let settings = EvalSettings::default();
    group.bench_function("evaluate_roc_grid", |b| {
        b.iter(|| evaluate(&out.draws, 0, 1, &truth.normal_edges(), &truth.tumor_edges(), &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sweep, gig, short_fit_and_evaluate);
criterion_main!(benches);

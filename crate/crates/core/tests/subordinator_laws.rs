use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ContinuousCDF, Exp};
use subretrieve::rng::substream;
use subretrieve::stats::{chi_square_poisson_gof, ks_one_sample, ks_two_sample, mean_and_se, median};
use subretrieve::subordinators::{restart_increment, sample_gamma_jumps, sample_stable_jumps, sample_stable_marginal};
use subretrieve::{Normalization, StableConfig};

#[test]
fn jump_counts_are_poisson() {
    // C·T·δ^{-α} = 1·1·0.01^{-0.5} = 10
    let cfg = StableConfig::<f64>::paper_tail(0.5).unwrap();
    let counts: Vec<u64> = (0..2000)
        .map(|i| {
            let mut rng = substream(1011, &[i]);
            sample_stable_jumps(&cfg, 1.0, 0.01, &mut rng).unwrap().jumps().len() as u64
        })
        .collect();
    let report = chi_square_poisson_gof(&counts, 10.0, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    assert!((mean - 10.0).abs() < 4.0 * (10.0f64 / 2000.0).sqrt());
}

#[test]
fn first_passage_laplace_transform() {
    // E exp(-τ_1) = exp(-√2)
    let cfg = StableConfig::<f64>::new(0.5, Normalization::FirstPassage).unwrap();
    let mut rng = substream(12, &[]);
    let exact: Vec<f64> = (0..20_000).map(|_| (-sample_stable_marginal(&cfg, 1.0, &mut rng).unwrap()).exp()).collect();
    let path: Vec<f64> = (0..5_000)
        .map(|_| {
            let p = sample_stable_jumps(&cfg, 1.0, 1e-6, &mut rng).unwrap();
            (-p.evaluate(1.0).unwrap()).exp()
        })
        .collect();
    let target = (-2f64.sqrt()).exp();
    for samples in [exact, path] {
        let (m, se) = mean_and_se(&samples);
        assert!((m - target).abs() < 4.0 * se, "{m} vs {target} (se {se})");
    }
}

#[test]
fn paper_tail_laplace_transform() {
    // Φ(1) = Γ(1/2) = √π
    let cfg = StableConfig::<f64>::paper_tail(0.5).unwrap();
    let mut rng = substream(13, &[]);
    let samples: Vec<f64> =
        (0..20_000).map(|_| (-sample_stable_marginal(&cfg, 1.0, &mut rng).unwrap()).exp()).collect();
    let (m, se) = mean_and_se(&samples);
    let target = (-std::f64::consts::PI.sqrt()).exp();
    assert!((m - target).abs() < 4.0 * se, "{m} vs {target}");
}

#[test]
fn first_passage_median() {
    // 1 / median(χ²_1) = 1 / 0.454936
    let cfg = StableConfig::<f64>::new(0.5, Normalization::FirstPassage).unwrap();
    let mut rng = substream(14, &[]);
    let samples: Vec<f64> = (0..100_000).map(|_| sample_stable_marginal(&cfg, 1.0, &mut rng).unwrap()).collect();
    let med = median(&samples).unwrap();
    assert!((med - 2.198109).abs() < 0.05, "median {med}");
}

#[test]
fn self_similarity_of_marginals() {
    // τ_2 =law 2^{1/α} τ_1
    let alpha = 0.7;
    let cfg = StableConfig::<f64>::paper_tail(alpha).unwrap();
    let mut rng = substream(15, &[]);
    let a: Vec<f64> = (0..5000).map(|_| sample_stable_marginal(&cfg, 2.0, &mut rng).unwrap()).collect();
    let scale = 2f64.powf(1.0 / alpha);
    let b: Vec<f64> = (0..5000).map(|_| scale * sample_stable_marginal(&cfg, 1.0, &mut rng).unwrap()).collect();
    let report = ks_two_sample(&a, &b, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn path_matches_exact_marginal_for_general_alpha() {
    let cfg = StableConfig::<f64>::paper_tail(0.6).unwrap();
    let mut rng = substream(16, &[]);
    let exact: Vec<f64> = (0..3000).map(|_| sample_stable_marginal(&cfg, 1.0, &mut rng).unwrap()).collect();
    let path: Vec<f64> =
        (0..3000).map(|_| sample_stable_jumps(&cfg, 1.0, 1e-4, &mut rng).unwrap().evaluate(1.0).unwrap()).collect();
    let report = ks_two_sample(&exact, &path, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn gamma_marginal_is_exponential() {
    // γ_1 ~ Gamma(1, 1)
    let mut rng = substream(17, &[]);
    let samples: Vec<f64> =
        (0..5000).map(|_| sample_gamma_jumps(1.0, 1e-8, &mut rng).unwrap().evaluate(1.0).unwrap()).collect();
    let exp = Exp::new(1.0).unwrap();
    let report = ks_one_sample(&samples, |x| exp.cdf(x), 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn restarted_path_has_fresh_poisson_counts() {
    // jumps of the restart on [0, 1.5] with δ = 0.01: Poisson(1.5·10)
    let cfg = StableConfig::<f64>::paper_tail(0.5).unwrap();
    let counts: Vec<u64> = (0..2000)
        .map(|i| {
            let mut rng = substream(18, &[i]);
            let p = sample_stable_jumps(&cfg, 2.0, 0.01, &mut rng).unwrap();
            restart_increment(&p, 0.5).unwrap().jumps().len() as u64
        })
        .collect();
    let report = chi_square_poisson_gof(&counts, 15.0, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn chi_square_is_self_consistent() {
    let mut rng = substream(19, &[]);
    let draws: Vec<u64> = (0..4000).map(|_| Poisson::new(7.5).unwrap().sample(&mut rng) as u64).collect();
    assert!(chi_square_poisson_gof(&draws, 7.5, 0.01).unwrap().pass);
    assert!(!chi_square_poisson_gof(&draws, 8.5, 0.01).unwrap().pass);
}

use subretrieve::processes::Quadrature;
use subretrieve::retrieval::{
    count_j, count_k, count_n, default_cutoff, estimate_x0, gamma_null_retrieve, lebesgue_retrieval_counts,
    per_jump_sandwich, sandwich,
};
use subretrieve::rng::substream;
use subretrieve::stats::{chi_square_poisson_gof, ks_two_sample, median};
use subretrieve::subordinators::sample_stable_jumps;
use subretrieve::timechange::{
    jump_deltas_i, jump_deltas_y, subordinate_brownian_scale, subordinate_brownian_value, symmetric_stable,
    EulerMaruyama,
};
use subretrieve::{Error, ExponentMode, Normalization, ProcessSpec, StableConfig, ThresholdRule};

#[test]
fn count_n_is_poisson() {
    // b^α ε^{1−mα} = √2 · 0.1^{−1.5}
    let (alpha, m, eps, b) = (0.5, 5.0, 0.1, 2.0);
    let cfg = StableConfig::paper_tail(alpha).unwrap();
    let counts: Vec<u64> = (0..2000)
        .map(|i| {
            let mut rng = substream(31, &[i]);
            let p = sample_stable_jumps(&cfg, eps, default_cutoff(eps, m, b), &mut rng).unwrap();
            count_n(&p, b, eps, m).unwrap()
        })
        .collect();
    let lambda = 2f64.sqrt() * 0.1f64.powf(-1.5);
    let report = chi_square_poisson_gof(&counts, lambda, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn constant_process_retrieval() {
    let cfg = StableConfig::paper_tail(0.5).unwrap();
    let quad = Quadrature::default();
    let n = 256;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..50 {
        let mut rng = substream(32, &[i]);
        let c =
            lebesgue_retrieval_counts(&ProcessSpec::Constant { x0: -2.0 }, &cfg, n, 5.0, 2.0, &quad, &mut rng).unwrap();
        assert_eq!(c.resamples, 0);
        pos.push(c.j_pos);
        neg.push(c.j_neg);
    }
    let est =
        |j: u64| estimate_x0::<f64>(&[(n, j)], None, 0.5, 5.0, ExponentMode::Lebesgue, None).unwrap().estimate_pos[0];
    let neg_est: Vec<f64> = neg.iter().map(|&j| est(j)).collect();
    assert!(pos.iter().all(|&j| j == 0));
    let med = median(&neg_est).unwrap();
    assert!((med - 2.0).abs() < 0.15 * 2.0, "median {med}");
}

#[test]
fn sandwich_holds_for_affine_paths() {
    let cfg = StableConfig::paper_tail(0.5).unwrap();
    let quad = Quadrature::default();
    let (eps, m) = (0.05, 5.0);
    let spec = ProcessSpec::Affine { x0: 1.0, slope: 3.0 };
    for i in 0..200 {
        let mut rng = substream(33, &[i]);
        let mut bound = 4.0;
        loop {
            let p = sample_stable_jumps(&cfg, eps, default_cutoff(eps, m, bound), &mut rng).unwrap();
            let mut x = spec.evaluator(substream(0, &[])).unwrap();
            let d = jump_deltas_y(&mut x, &p, eps, &quad).unwrap();
            match sandwich(&p, &d, eps, m) {
                Ok(s) => {
                    assert!(s.holds(), "{s:?}");
                    assert!(per_jump_sandwich(&d, eps, m).holds());
                    break;
                }
                // max X beyond the bound: the upper count needs a finer cutoff
                Err(Error::Truncation { .. }) => bound *= 4.0,
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn subordinate_brownian_jump_tail() {
    // #{s ≤ 1 : |ΔB̂_s| > x} ~ Poisson(x^{−2α})
    let cfg = StableConfig::<f64>::new(0.5, Normalization::UnitBrownianTail).unwrap();
    let em = EulerMaruyama::default();
    let xs = [0.5, 1.0, 2.0];
    let reps = 3000u64;
    let mut totals = [0u64; 3];
    for i in 0..reps {
        let mut rng = substream(34, &[i]);
        let p = sample_stable_jumps(&cfg, 1.0, 1e-6, &mut rng).unwrap();
        let mut one = ProcessSpec::Constant { x0: 1.0 }.evaluator(substream(0, &[])).unwrap();
        let d = jump_deltas_i(&mut one, &p, 1.0, &em, &mut rng).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            totals[k] += d.iter().filter(|d| d.delta_b.abs() > x).count() as u64;
        }
    }
    for (k, &x) in xs.iter().enumerate() {
        let lambda = reps as f64 / x;
        assert!((totals[k] as f64 - lambda).abs() < 3.0 * lambda.sqrt(), "x = {x}: {} vs {lambda}", totals[k]);
    }
}

#[test]
fn subordinate_brownian_is_symmetric_stable() {
    let cfg = StableConfig::paper_tail(0.6).unwrap();
    let sigma = subordinate_brownian_scale(&cfg);
    let mut rng = substream(35, &[]);
    let a: Vec<f64> = (0..3000)
        .map(|_| {
            let p = sample_stable_jumps(&cfg, 1.0, 1e-5, &mut rng).unwrap();
            subordinate_brownian_value(&p, 1.0, &mut rng).unwrap()
        })
        .collect();
    let b: Vec<f64> = (0..3000).map(|_| sigma * symmetric_stable(1.2, &mut rng)).collect();
    let report = ks_two_sample(&a, &b, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn squared_rule_recovers_modulus() {
    // ΔI = −3 ΔB̂, tail of ΔB̂ is x^{−2α}, so the scaled count → 3^{2α}
    let cfg = StableConfig::<f64>::new(0.5, Normalization::UnitBrownianTail).unwrap();
    let em = EulerMaruyama::default();
    let (n, m) = (64u64, 5.0);
    let eps = 1.0 / n as f64;
    let cutoff = subretrieve::retrieval::stochastic_cutoff(eps, m, 3.0);
    let ests: Vec<f64> = (0..40)
        .map(|i| {
            let mut rng = substream(36, &[i]);
            let p = sample_stable_jumps(&cfg, eps, cutoff, &mut rng).unwrap();
            let mut x = ProcessSpec::Constant { x0: -3.0 }.evaluator(substream(0, &[])).unwrap();
            let d = jump_deltas_i(&mut x, &p, eps, &em, &mut rng).unwrap();
            let j = count_j(&d, eps, m, ThresholdRule::Squared);
            estimate_x0::<f64>(&[(n, j)], None, 0.5, m, ExponentMode::Stochastic, Some(-3.0)).unwrap().estimate_pos[0]
        })
        .collect();
    let med = median(&ests).unwrap();
    assert!((med - 3.0).abs() < 0.2 * 3.0, "median {med}");
}

#[test]
fn k_count_vanishes_for_constants() {
    let cfg = StableConfig::<f64>::new(0.5, Normalization::UnitBrownianTail).unwrap();
    let em = EulerMaruyama::default();
    let mut rng = substream(37, &[]);
    let p = sample_stable_jumps(&cfg, 0.1, 1e-8, &mut rng).unwrap();
    let mut x = ProcessSpec::Constant { x0: 2.0 }.evaluator(substream(0, &[])).unwrap();
    let k = count_k(&mut x, &p, 0.1, 5.0, 1.0, &em, &mut rng).unwrap();
    assert_eq!(k.count, 0);
    assert!(k.in_hoelder_regime);
    let mut b = ProcessSpec::Brownian { x0: 0.0 }.evaluator(substream(1, &[])).unwrap();
    assert!(count_k(&mut b, &p, 0.1, 5.0, 1.0, &em, &mut rng).is_err());
}

#[test]
fn gamma_null_rarely_counts() {
    // ε·E₁(ε^m) ≈ 1e-4·(5 ln 10⁴ − 0.577) ≈ 4.5e-3 per path
    let hits = (0..200u64)
        .filter(|&seed| {
            let s = gamma_null_retrieve(1.0, 0.5, &[10_000], 5.0, seed).unwrap();
            s.records_pos[0].count > 0
        })
        .count();
    assert!(hits <= 5, "{hits} paths counted a jump");
}

use rand::{Rng, SeedableRng};
use subretrieve::processes::{
    bessel_clock, bessel_clock_readings, integral_process, simulate_bessel2, BrownianPath, ClockStepping,
};
use subretrieve::rng::{substream, SimRng};
use subretrieve::stats::{ecdf, ks_statistic, ks_two_sample, mean_and_se};
use subretrieve::subordinators::Jump;
use subretrieve::timechange::{jump_deltas_i, EulerMaruyama};
use subretrieve::{Interpolation, JumpPath, ProcessSpec, SampledPath};

#[test]
fn bessel_second_moment() {
    // E R_T² = 1 + 2T
    let mut rng = substream(21, &[]);
    let r2: Vec<f64> = (0..4000)
        .map(|_| {
            let r = simulate_bessel2(1.0, 1e-3, &mut rng).unwrap();
            let v = *r.values().last().unwrap();
            v * v
        })
        .collect();
    let (m, se) = mean_and_se(&r2);
    assert!((m - 3.0).abs() < 4.0 * se, "{m} ± {se}");
}

#[test]
fn skew_product_clock_matches_planar_grid() {
    let mut rng = substream(22, &[]);
    let grid: Vec<f64> = (0..2000)
        .map(|_| {
            let r = simulate_bessel2(1.0, 1e-3, &mut rng).unwrap();
            *bessel_clock(&r).unwrap().values().last().unwrap()
        })
        .collect();
    let stepping = ClockStepping::default();
    let skew: Vec<f64> =
        (0..2000).map(|_| bessel_clock_readings(&[1.0], &stepping, &mut rng).unwrap()[0].clock).collect();
    let report = ks_two_sample(&grid, &skew, 0.01).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn bridge_midpoint_variance() {
    // Var(B_{1/2} | B_0, B_1) = 1/4
    let mut rng = substream(23, &[]);
    let residuals: Vec<f64> = (0..20_000)
        .map(|_| {
            let mut b = BrownianPath::new(0.0f64, SimRng::from_rng(&mut rng));
            let end = b.value_at(1.0).unwrap();
            let mid = b.value_at(0.5).unwrap();
            let r = mid - 0.5 * end;
            r * r
        })
        .collect();
    let (m, se) = mean_and_se(&residuals);
    assert!((m - 0.25).abs() < 4.0 * se, "{m} ± {se}");
}

#[test]
fn trapezoid_converges_at_second_order() {
    let sample = |n: usize| {
        let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let values = times.iter().map(|t| (3.0 * t).sin()).collect();
        let x = SampledPath::new(times, values, Interpolation::Linear).unwrap();
        let y = integral_process(&x).unwrap();
        let exact = (1.0 - 3f64.cos()) / 3.0;
        (y.values().last().unwrap() - exact).abs()
    };
    let ratio = sample(100) / sample(200);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn ito_isometry_on_one_interval() {
    // single jump interval [0, 1], X_u = 1 + u: E ΔI² = ∫(1+u)² du = 7/3
    let path = JumpPath::new(1.0, Some(0.5), 0.5, vec![Jump { time: 0.5, size: 1.0 }], 0.0).unwrap();
    let em = EulerMaruyama::default();
    let mut rng = substream(24, &[]);
    let mut x = ProcessSpec::Affine { x0: 1.0, slope: 1.0 }.evaluator(substream(0, &[])).unwrap();
    let sq: Vec<f64> = (0..20_000)
        .map(|_| {
            let d = jump_deltas_i(&mut x, &path, 1.0, &em, &mut rng).unwrap();
            d[0].delta_i * d[0].delta_i
        })
        .collect();
    let (m, se) = mean_and_se(&sq);
    assert!((m - 7.0 / 3.0).abs() < 4.0 * se, "{m} ± {se}");
}

#[test]
fn ecdf_obeys_dkw() {
    // P(sup|F_n − F| > ε) ≤ 2 exp(−2nε²); ε at 0.1%
    let n = 10_000;
    let mut rng = substream(25, &[]);
    let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let f = ecdf(&u).unwrap();
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let sup = grid.iter().map(|&x| (f.eval(x) - x).abs()).fold(0.0, f64::max);
    let eps = ((2.0f64 / 1e-3).ln() / (2.0 * n as f64)).sqrt();
    assert!(sup < eps, "{sup} vs {eps}");
    assert!(ks_statistic(&u, &u) == 0.0);
}

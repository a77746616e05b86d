//! Quasi-invariance of the gamma subordinator under scaling, and the
//! contrasting behaviour of stable subordinators.
//!
//! For `x > 0` the law of `(xγ_s)_{s≤t}` has density
//! `x^{-t} exp((1 − 1/x) γ_t)` with respect to the law of `(γ_s)_{s≤t}`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::retrieval::count_n;
use crate::special::exp_integral_e1;
use crate::stats::mean_and_se;
use crate::subordinators::{sample_gamma_jumps, sample_stable_jumps, StableConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord<T> {
    pub x: T,
    pub t: T,
    pub gamma_t: T,
    pub density: T,
}

impl<T: Real> DensityRecord<T> {
    pub fn new(x: T, t: T, gamma_t: T) -> Result<Self> {
        Ok(Self { x, t, gamma_t, density: rn_density(x, t, gamma_t)? })
    }
}

/// `x^{-t} exp((1 − 1/x) γ_t)`, evaluated in log space.
pub fn rn_density<T: Real>(x: T, t: T, gamma_t: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::Domain(format!("scale must be positive, got {x}")));
    }
    if !(t >= T::zero()) || !(gamma_t >= T::zero()) {
        return Err(Error::Domain(format!("need t >= 0 and gamma_t >= 0, got t = {t}, gamma_t = {gamma_t}")));
    }
    if x == T::one() {
        return Ok(T::one());
    }
    let (x, t, g) = (x.as_f64(), t.as_f64(), gamma_t.as_f64());
    Ok(T::lit((-t * x.ln() + (1.0 - 1.0 / x) * g).exp()))
}

fn gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    let dist = Gamma::new(shape, 1.0).map_err(|e| Error::param(format!("gamma shape {shape}: {e}")))?;
    Ok(dist.sample(rng))
}

/// Monte Carlo estimate paired with its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub estimate: f64,
    pub se: f64,
    pub target: f64,
    pub pass: bool,
}

impl MomentCheck {
    fn from_samples(samples: &[f64], target: f64, z: f64) -> Self {
        let (estimate, se) = mean_and_se(samples);
        Self { estimate, se, target, pass: (estimate - target).abs() <= z * se + 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfMeasureReport {
    pub x: f64,
    pub t: f64,
    pub replicates: usize,
    /// `E[w] = 1`.
    pub mean_weight: MomentCheck,
    /// `E[w γ_{t/2}] = x t/2`.
    pub first_moment: MomentCheck,
    /// `E[w γ_{t/2}²] = x² (t/2)(t/2 + 1)`.
    pub second_moment: MomentCheck,
    pub pass: bool,
}

/// Reweights `γ_{t/2}` by the density of `γ_t` and compares with the
/// moments of `x γ_{t/2}`, each within 3 standard errors.
///
/// The weight has finite variance only for `x < 2`; beyond that the
/// reported standard errors are unreliable.
pub fn verify_change_of_measure<R: Rng + ?Sized>(
    x: f64,
    t: f64,
    replicates: usize,
    rng: &mut R,
) -> Result<ChangeOfMeasureReport> {
    if !(x > 0.0) || !(t > 0.0) || replicates < 2 {
        return Err(Error::param("need x > 0, t > 0 and at least 2 replicates"));
    }
    let half = t / 2.0;
    let mut w = Vec::with_capacity(replicates);
    let mut w1 = Vec::with_capacity(replicates);
    let mut w2 = Vec::with_capacity(replicates);
    for _ in 0..replicates {
        let g_half = gamma_draw(half, rng)?;
        let g_t = g_half + gamma_draw(half, rng)?;
        let weight = rn_density(x, t, g_t)?;
        w.push(weight);
        w1.push(weight * g_half);
        w2.push(weight * g_half * g_half);
    }
    let mean_weight = MomentCheck::from_samples(&w, 1.0, 3.0);
    let first_moment = MomentCheck::from_samples(&w1, x * half, 3.0);
    let second_moment = MomentCheck::from_samples(&w2, x * x * half * (half + 1.0), 3.0);
    let pass = mean_weight.pass && first_moment.pass && second_moment.pass;
    Ok(ChangeOfMeasureReport { x, t, replicates, mean_weight, first_moment, second_moment, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub t: f64,
    pub gap: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheffeReport {
    pub x: f64,
    pub replicates: usize,
    /// Sorted by decreasing `t`.
    pub points: Vec<GapPoint>,
    /// `gap[k] − gap[k+1]` with its paired standard error.
    pub decreases: Vec<(f64, f64)>,
    /// Every consecutive decrease exceeds 3 paired standard errors.
    pub strictly_decreasing: bool,
}

/// `E|w_t − 1|` along `schedule`, estimated as `2 E[(1 − w_t)^+]`.
///
/// The two agree because `E[w_t] = 1`, and the latter is bounded by 2
/// whereas `w_t` itself may have infinite variance. All schedule points
/// share one nested gamma path per replicate.
pub fn scheffe_gap<R: Rng + ?Sized>(x: f64, schedule: &[f64], replicates: usize, rng: &mut R) -> Result<ScheffeReport> {
    if !(x > 0.0) || replicates < 2 || schedule.is_empty() {
        return Err(Error::param("need x > 0, a nonempty schedule and at least 2 replicates"));
    }
    if schedule.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
        return Err(Error::param("schedule times must be positive and finite"));
    }
    let mut ts = schedule.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let k = ts.len();
    // samples[j][r]: replicate r at ts[j].
    let mut samples = vec![Vec::with_capacity(replicates); k];
    for _ in 0..replicates {
        let mut gamma = 0.0;
        let mut prev_t = 0.0;
        for j in (0..k).rev() {
            gamma += gamma_draw(ts[j] - prev_t, rng)?;
            prev_t = ts[j];
            let w = rn_density(x, ts[j], gamma)?;
            samples[j].push(2.0 * (1.0 - w).max(0.0));
        }
    }
    let points: Vec<GapPoint> = ts
        .iter()
        .zip(&samples)
        .map(|(&t, s)| {
            let (gap, se) = mean_and_se(s);
            GapPoint { t, gap, se }
        })
        .collect();
    let decreases: Vec<(f64, f64)> = (0..k.saturating_sub(1))
        .map(|j| {
            let d: Vec<f64> = samples[j].iter().zip(&samples[j + 1]).map(|(a, b)| a - b).collect();
            mean_and_se(&d)
        })
        .collect();
    let strictly_decreasing = decreases.iter().all(|&(d, se)| d > 3.0 * se && d > 0.0);
    Ok(ScheffeReport { x, replicates, points, decreases, strictly_decreasing })
}

/// Accuracy of the likelihood-ratio rule between Poisson(`l1`) and
/// Poisson(`l2`) with equal priors. Ties go to the first hypothesis.
pub fn two_poisson_bayes_accuracy(l1: f64, l2: f64) -> f64 {
    if l1 == l2 {
        return 0.5;
    }
    let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
    let thr = poisson_threshold(lo, hi);
    let cdf = |lambda: f64, k: f64| -> f64 {
        if k < 0.0 {
            return 0.0;
        }
        if lambda == 0.0 {
            return 1.0;
        }
        Poisson::new(lambda).map(|p| p.cdf(k.floor() as u64)).unwrap_or(f64::NAN)
    };
    // Decide `hi` when count > thr.
    0.5 * (cdf(lo, thr) + 1.0 - cdf(hi, thr))
}

/// Count above which Poisson(`hi`) is more likely than Poisson(`lo`).
fn poisson_threshold(lo: f64, hi: f64) -> f64 {
    if lo == 0.0 {
        return 0.0;
    }
    (hi - lo) / (hi / lo).ln()
}

fn classify(count: u64, l1: f64, l2: f64) -> bool {
    // true means "x2".
    if l1 == l2 {
        return false;
    }
    let (lo, hi) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
    let thr = poisson_threshold(lo, hi);
    if l2 > l1 {
        count as f64 > thr
    } else {
        (count as f64) < thr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub x1: f64,
    pub x2: f64,
    pub alpha: f64,
    pub eps: f64,
    pub m: f64,
    pub replicates: usize,
    /// Poisson means of the stable counts under `x1`, `x2`.
    pub stable_lambda: (f64, f64),
    pub stable_accuracy: f64,
    pub stable_oracle: f64,
    /// Poisson means of the gamma counts under `x1`, `x2`.
    pub gamma_lambda: (f64, f64),
    pub gamma_accuracy: f64,
    pub gamma_oracle: f64,
}

/// Classifies `x_i τ` on `[0, ε]` by `#{s ≤ ε : x_i Δτ_s > ε^m}` for a
/// stable `τ` and for a gamma `τ`. Replicates alternate between the two
/// scales, so equal scales give accuracy exactly 1/2.
pub fn stable_contrast<R: Rng + ?Sized>(
    cfg: &StableConfig<f64>,
    x1: f64,
    x2: f64,
    eps: f64,
    m: f64,
    replicates: usize,
    rng: &mut R,
) -> Result<ContrastReport> {
    if !(x1 > 0.0) || !(x2 > 0.0) || !(eps > 0.0) || !(m > 0.0) || replicates < 2 {
        return Err(Error::param("need positive scales, eps, m and at least 2 replicates"));
    }
    let alpha = cfg.alpha();
    let thr = eps.powf(m);
    let cutoff = thr / x1.max(x2);
    let c = cfg.tail_constant();
    let stable_lambda = (c * eps * (thr / x1).powf(-alpha), c * eps * (thr / x2).powf(-alpha));
    let gamma_lambda = (eps * exp_integral_e1(thr / x1), eps * exp_integral_e1(thr / x2));

    let mut stable_hits = 0usize;
    let mut gamma_hits = 0usize;
    for r in 0..replicates {
        let second = r % 2 == 1;
        let x = if second { x2 } else { x1 };
        let path = sample_stable_jumps(cfg, eps, cutoff, rng)?;
        let n = count_n(&path, x, eps, m)?;
        stable_hits += (classify(n, stable_lambda.0, stable_lambda.1) == second) as usize;
        let path = sample_gamma_jumps(eps, cutoff, rng)?;
        let n = count_n(&path, x, eps, m)?;
        gamma_hits += (classify(n, gamma_lambda.0, gamma_lambda.1) == second) as usize;
    }
    Ok(ContrastReport {
        x1,
        x2,
        alpha,
        eps,
        m,
        replicates,
        stable_lambda,
        stable_accuracy: stable_hits as f64 / replicates as f64,
        stable_oracle: two_poisson_bayes_accuracy(stable_lambda.0, stable_lambda.1),
        gamma_lambda,
        gamma_accuracy: gamma_hits as f64 / replicates as f64,
        gamma_oracle: two_poisson_bayes_accuracy(gamma_lambda.0, gamma_lambda.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    #[test]
    fn density_values() {
        assert_eq!(rn_density(1.0, 3.0, 7.0).unwrap(), 1.0);
        assert_eq!(rn_density(5.0, 0.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(rn_density(2.0, 1.0, 1.0).unwrap(), 0.5 * 0.5f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(rn_density(2.0f32, 1.0, 1.0).unwrap(), 0.824_360_6, max_relative = 1e-6);
        assert!(rn_density(0.0, 1.0, 1.0).is_err());
        assert!(rn_density(-1.0, 1.0, 1.0).is_err());
        assert!(rn_density(0.5, 1.0, 500.0).unwrap() > 0.0);
        let r = DensityRecord::new(1.0, 2.0, 3.0).unwrap();
        assert_eq!(r.density, 1.0);
    }

    #[test]
    fn identity_scale_is_exact() {
        let mut rng = substream(1, &[]);
        let rep = verify_change_of_measure(1.0, 1.0, 1000, &mut rng).unwrap();
        assert_eq!(rep.mean_weight.estimate, 1.0);
        assert_eq!(rep.mean_weight.se, 0.0);
        let gap = scheffe_gap(1.0, &[1.0, 0.1], 100, &mut rng).unwrap();
        assert!(gap.points.iter().all(|p| p.gap == 0.0));
        assert!(!gap.strictly_decreasing);
    }

    #[test]
    fn bayes_accuracy_limits() {
        assert_eq!(two_poisson_bayes_accuracy(3.0, 3.0), 0.5);
        assert!(two_poisson_bayes_accuracy(50.0, 100.0) > 0.99);
        assert_relative_eq!(
            two_poisson_bayes_accuracy(0.0, 1.0),
            0.5 * (1.0 + 1.0 - (-1.0f64).exp()),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            two_poisson_bayes_accuracy(2.0, 5.0),
            two_poisson_bayes_accuracy(5.0, 2.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn classifier_matches_likelihood_ratio() {
        // threshold (4-2)/ln 2 ≈ 2.885
        assert!(!classify(2, 2.0, 4.0));
        assert!(classify(3, 2.0, 4.0));
        assert!(classify(2, 4.0, 2.0));
        assert!(!classify(3, 4.0, 2.0));
        assert!(!classify(10, 1.0, 1.0));
    }

    #[test]
    fn equal_scales_are_chance() {
        let cfg = StableConfig::paper_tail(0.5).unwrap();
        let mut rng = substream(2, &[]);
        let rep = stable_contrast(&cfg, 2.0, 2.0, 0.1, 5.0, 200, &mut rng).unwrap();
        assert_eq!(rep.stable_accuracy, 0.5);
        assert_eq!(rep.gamma_accuracy, 0.5);
    }
}

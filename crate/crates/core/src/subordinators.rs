//! Subordinator paths from their jump representation.
//!
//! A path on `[0, T]` keeps every jump of size at least `cutoff`; the
//! sub-cutoff jumps are replaced by their mean, a linear drift
//! `compensation_rate · ℓ`. For `α < 1` the small-jump sum converges
//! absolutely, so this is exact up to an `O(cutoff^{1-α})` drift error.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{exp_integral_e1, gamma_fn, normal_abs_moment};

/// Largest expected jump count we are willing to materialize.
pub const MAX_EXPECTED_JUMPS: f64 = 2.0e8;

/// Scale of the stable Lévy measure `C·α·x^{-1-α} dx`, i.e. tail `C·x^{-α}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Tail `x^{-α}` (`C = 1`).
    PaperTail,
    /// Brownian first-passage times: Laplace exponent `√(2λ)`. Only `α = 1/2`.
    FirstPassage,
    /// Tail chosen so that `B_τ` has Lévy tail `Π(|y| > x) = x^{-2α}`.
    UnitBrownianTail,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::PaperTail => "paper-tail",
            Normalization::FirstPassage => "first-passage",
            Normalization::UnitBrownianTail => "unit-brownian-tail",
        }
    }
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-tail" => Ok(Normalization::PaperTail),
            "first-passage" => Ok(Normalization::FirstPassage),
            "unit-brownian-tail" => Ok(Normalization::UnitBrownianTail),
            other => Err(Error::param(format!("unknown normalization '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableConfig<T> {
    alpha: T,
    normalization: Normalization,
}

impl<T: Real> StableConfig<T> {
    pub fn new(alpha: T, normalization: Normalization) -> Result<Self> {
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if normalization == Normalization::FirstPassage && alpha != T::lit(0.5) {
            return Err(Error::Unsupported(format!(
                "first-passage normalization exists only for alpha = 1/2, got {alpha}"
            )));
        }
        Ok(Self { alpha, normalization })
    }

    pub fn paper_tail(alpha: T) -> Result<Self> {
        Self::new(alpha, Normalization::PaperTail)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `C` in the tail `ν((x, ∞)) = C·x^{-α}`.
    pub fn tail_constant(&self) -> f64 {
        let alpha = self.alpha.as_f64();
        match self.normalization {
            Normalization::PaperTail => 1.0,
            Normalization::FirstPassage => (2.0 / std::f64::consts::PI).sqrt(),
            Normalization::UnitBrownianTail => 1.0 / normal_abs_moment(2.0 * alpha),
        }
    }

    /// `Φ(λ) = C·Γ(1-α)·λ^α`, so that `E exp(-λ τ_ℓ) = exp(-ℓ Φ(λ))`.
    pub fn laplace_exponent(&self, lambda: f64) -> f64 {
        let alpha = self.alpha.as_f64();
        self.tail_constant() * gamma_fn(1.0 - alpha) * lambda.powf(alpha)
    }

    /// Mean of the sub-cutoff jump mass per unit time, `C·α·δ^{1-α}/(1-α)`.
    pub fn compensation_rate(&self, cutoff: T) -> T {
        let alpha = self.alpha.as_f64();
        T::lit(self.tail_constant() * alpha * cutoff.as_f64().powf(1.0 - alpha) / (1.0 - alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump<T> {
    pub time: T,
    pub size: T,
}

/// One jump of a path together with the left limit of `τ` at its time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpInterval<T> {
    pub time: T,
    pub tau_minus: T,
    pub size: T,
}

impl<T: Real> JumpInterval<T> {
    pub fn tau_plus(&self) -> T {
        self.tau_minus + self.size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath<T> {
    horizon: T,
    alpha: Option<T>,
    cutoff: T,
    jumps: Vec<Jump<T>>,
    compensation_rate: T,
}

impl<T: Real> JumpPath<T> {
    /// Builds a path from explicit jumps, checking every invariant.
    pub fn new(horizon: T, alpha: Option<T>, cutoff: T, jumps: Vec<Jump<T>>, compensation_rate: T) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::param(format!("horizon must be positive, got {horizon}")));
        }
        if !(cutoff > T::zero()) {
            return Err(Error::param(format!("cutoff must be positive, got {cutoff}")));
        }
        if !(compensation_rate >= T::zero()) || !compensation_rate.is_finite() {
            return Err(Error::param(format!(
                "compensation rate must be finite and nonnegative, got {compensation_rate}"
            )));
        }
        let mut previous: Option<T> = None;
        for jump in &jumps {
            if !(jump.time >= T::zero() && jump.time <= horizon) {
                return Err(Error::param(format!("jump time {} outside [0, {horizon}]", jump.time)));
            }
            if let Some(p) = previous {
                if !(jump.time > p) {
                    return Err(Error::param("jump times must be strictly increasing"));
                }
            }
            if !(jump.size >= cutoff) || !jump.size.is_finite() {
                return Err(Error::param(format!("jump size {} below cutoff {cutoff}", jump.size)));
            }
            previous = Some(jump.time);
        }
        Ok(Self { horizon, alpha, cutoff, jumps, compensation_rate })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn alpha(&self) -> Option<T> {
        self.alpha
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn jumps(&self) -> &[Jump<T>] {
        &self.jumps
    }

    pub fn compensation_rate(&self) -> T {
        self.compensation_rate
    }

    /// `τ_ℓ`: drift plus every jump at a time `≤ ℓ` (right-continuous).
    pub fn evaluate(&self, ell: T) -> Result<T> {
        if !(ell >= T::zero() && ell <= self.horizon) {
            return Err(Error::Range { what: "ell", value: ell.as_f64(), lo: 0.0, hi: self.horizon.as_f64() });
        }
        let upto = self.jumps.partition_point(|j| j.time <= ell);
        let jumps: T = self.jumps[..upto].iter().map(|j| j.size).sum();
        Ok(self.compensation_rate * ell + jumps)
    }

    /// `τ` on a nondecreasing grid in one sweep.
    pub fn evaluate_grid(&self, grid: &[T]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(grid.len());
        let mut idx = 0;
        let mut acc = T::zero();
        let mut last = T::neg_infinity();
        for &ell in grid {
            if ell < last {
                return Err(Error::param("evaluation grid must be nondecreasing"));
            }
            if !(ell >= T::zero() && ell <= self.horizon) {
                return Err(Error::Range { what: "ell", value: ell.as_f64(), lo: 0.0, hi: self.horizon.as_f64() });
            }
            while idx < self.jumps.len() && self.jumps[idx].time <= ell {
                acc = acc + self.jumps[idx].size;
                idx += 1;
            }
            out.push(self.compensation_rate * ell + acc);
            last = ell;
        }
        Ok(out)
    }

    /// Jumps with time `≤ upto`, each with `τ_{s-}`.
    pub fn intervals(&self, upto: T) -> impl Iterator<Item = JumpInterval<T>> + '_ {
        let rate = self.compensation_rate;
        self.jumps.iter().take_while(move |j| j.time <= upto).scan(T::zero(), move |acc, j| {
            let tau_minus = rate * j.time + *acc;
            *acc = *acc + j.size;
            Some(JumpInterval { time: j.time, tau_minus, size: j.size })
        })
    }

    /// The increment path `u ↦ τ_{ℓ+u} − τ_ℓ` on `[0, T − ℓ]`.
    pub fn restart(&self, ell: T) -> Result<Self> {
        if !(ell >= T::zero() && ell < self.horizon) {
            return Err(Error::Range { what: "ell", value: ell.as_f64(), lo: 0.0, hi: self.horizon.as_f64() });
        }
        let first = self.jumps.partition_point(|j| j.time <= ell);
        let jumps = self.jumps[first..].iter().map(|j| Jump { time: j.time - ell, size: j.size }).collect();
        Ok(Self {
            horizon: self.horizon - ell,
            alpha: self.alpha,
            cutoff: self.cutoff,
            jumps,
            compensation_rate: self.compensation_rate,
        })
    }
}

/// `restart_increment` as a free function.
pub fn restart_increment<T: Real>(path: &JumpPath<T>, ell: T) -> Result<JumpPath<T>> {
    path.restart(ell)
}

/// `evaluate_subordinator` as a free function.
pub fn evaluate_subordinator<T: Real>(path: &JumpPath<T>, ell: T) -> Result<T> {
    path.evaluate(ell)
}

fn check_horizon_cutoff<T: Real>(horizon: T, cutoff: T) -> Result<()> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    if !(cutoff > T::zero()) || !cutoff.is_finite() {
        return Err(Error::param(format!("cutoff must be positive, got {cutoff}")));
    }
    Ok(())
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean > MAX_EXPECTED_JUMPS || !mean.is_finite() {
        return Err(Error::param(format!(
            "expected jump count {mean:e} exceeds the supported maximum {MAX_EXPECTED_JUMPS:e}"
        )));
    }
    if mean <= 0.0 {
        return Ok(0);
    }
    let draw: f64 = Poisson::new(mean).map_err(|e| Error::param(format!("poisson mean {mean}: {e}")))?.sample(rng);
    Ok(draw as usize)
}

/// `count` i.i.d. uniform times on `[0, horizon]`, already sorted.
///
/// Uses normalized exponential spacings, which have the law of uniform order
/// statistics and avoid an `O(n log n)` sort.
fn sorted_uniform_times<R: Rng + ?Sized>(count: usize, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut times = Vec::with_capacity(count);
    let mut acc = 0.0;
    for _ in 0..count {
        let e: f64 = Exp1.sample(rng);
        acc += e;
        times.push(acc);
    }
    let e: f64 = Exp1.sample(rng);
    let total = acc + e;
    let scale = horizon / total;
    for t in times.iter_mut() {
        *t *= scale;
    }
    times
}

/// Uniform on `(0, 1]`.
#[inline]
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn assemble<T: Real>(
    horizon: T,
    alpha: Option<T>,
    cutoff: T,
    times: Vec<f64>,
    sizes: Vec<f64>,
    compensation_rate: T,
) -> JumpPath<T> {
    let jumps =
        times.into_iter().zip(sizes).map(|(t, x)| Jump { time: T::lit(t), size: T::lit(x).max(cutoff) }).collect();
    JumpPath { horizon, alpha, cutoff, jumps, compensation_rate }
}

/// Stable(α) path on `[0, horizon]` keeping jumps `≥ cutoff`.
///
/// Jump count is Poisson(`C·T·δ^{-α}`), sizes have survival `(x/δ)^{-α}`.
pub fn sample_stable_jumps<T: Real, R: Rng + ?Sized>(
    cfg: &StableConfig<T>,
    horizon: T,
    cutoff: T,
    rng: &mut R,
) -> Result<JumpPath<T>> {
    check_horizon_cutoff(horizon, cutoff)?;
    let alpha = cfg.alpha().as_f64();
    let delta = cutoff.as_f64();
    let mean = cfg.tail_constant() * horizon.as_f64() * delta.powf(-alpha);
    let count = poisson_count(mean, rng)?;
    let times = sorted_uniform_times(count, horizon.as_f64(), rng);
    let sizes: Vec<f64> = if alpha == 0.5 {
        (0..count)
            .map(|_| {
                let u = open_unit(rng);
                delta / (u * u)
            })
            .collect()
    } else {
        let inv = -1.0 / alpha;
        (0..count).map(|_| delta * open_unit(rng).powf(inv)).collect()
    };
    Ok(assemble(horizon, Some(cfg.alpha()), cutoff, times, sizes, cfg.compensation_rate(cutoff)))
}

/// Draw with Laplace transform `exp(-λ^α)` (Kanter's form of the
/// Chambers–Mallows–Stuck transform).
pub fn positive_stable_unit<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * open_unit(rng);
    let w: f64 = Exp1.sample(rng);
    let w = w.max(f64::MIN_POSITIVE);
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Exact draw of `τ_ℓ`.
pub fn sample_stable_marginal<T: Real, R: Rng + ?Sized>(cfg: &StableConfig<T>, ell: T, rng: &mut R) -> Result<T> {
    if !(ell > T::zero()) || !ell.is_finite() {
        return Err(Error::param(format!("ell must be positive, got {ell}")));
    }
    let ell = ell.as_f64();
    let alpha = cfg.alpha().as_f64();
    let value = match cfg.normalization() {
        Normalization::FirstPassage => {
            if alpha != 0.5 {
                return Err(Error::Unsupported(format!("first-passage marginal needs alpha = 1/2, got {alpha}")));
            }
            let g: f64 = StandardNormal.sample(rng);
            ell * ell / (g * g).max(f64::MIN_POSITIVE)
        }
        Normalization::PaperTail | Normalization::UnitBrownianTail => {
            let scale = (ell * cfg.tail_constant() * gamma_fn(1.0 - alpha)).powf(1.0 / alpha);
            scale * positive_stable_unit(alpha, rng)
        }
    };
    Ok(T::lit(value))
}

/// Gamma-subordinator path (Lévy density `e^{-x}/x`) keeping jumps `≥ cutoff`.
pub fn sample_gamma_jumps<T: Real, R: Rng + ?Sized>(horizon: T, cutoff: T, rng: &mut R) -> Result<JumpPath<T>> {
    check_horizon_cutoff(horizon, cutoff)?;
    let delta = cutoff.as_f64();
    let count = poisson_count(horizon.as_f64() * exp_integral_e1(delta), rng)?;
    let times = sorted_uniform_times(count, horizon.as_f64(), rng);
    let sizes = (0..count).map(|_| gamma_jump_size(delta, rng)).collect();
    let compensation = T::lit(-(-delta).exp_m1());
    Ok(assemble(horizon, None, cutoff, times, sizes, compensation))
}

/// Rejection sampler for the density `∝ e^{-x}/x` on `[δ, ∞)`.
///
/// Envelope: `1/x` on `[δ, 1)` (accept with `e^{-x}`) and `e^{-x}` on
/// `[max(δ,1), ∞)` (accept with `1/x`).
fn gamma_jump_size<R: Rng + ?Sized>(delta: f64, rng: &mut R) -> f64 {
    let left_mass = if delta < 1.0 { -delta.ln() } else { 0.0 };
    let right_start = delta.max(1.0);
    let right_mass = (-right_start).exp();
    let total = left_mass + right_mass;
    loop {
        let pick = rng.random::<f64>() * total;
        let (x, accept) = if pick < left_mass {
            let x = delta * (-delta.ln() * rng.random::<f64>()).exp();
            (x, (-x).exp())
        } else {
            let e: f64 = Exp1.sample(rng);
            let x = right_start + e;
            (x, 1.0 / x)
        };
        if rng.random::<f64>() < accept {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn cfg(alpha: f64) -> StableConfig<f64> {
        StableConfig::paper_tail(alpha).unwrap()
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(StableConfig::<f64>::paper_tail(0.0).is_err());
        assert!(StableConfig::<f64>::paper_tail(1.0).is_err());
        assert!(matches!(StableConfig::<f64>::new(0.7, Normalization::FirstPassage), Err(Error::Unsupported(_))));
        let mut rng = substream(1, &[]);
        assert!(sample_stable_jumps(&cfg(0.5), 0.0, 0.1, &mut rng).is_err());
        assert!(sample_stable_jumps(&cfg(0.5), 1.0, 0.0, &mut rng).is_err());
        assert!(sample_gamma_jumps(1.0, -1.0, &mut rng).is_err());
        assert!(sample_stable_marginal(&cfg(0.5), 0.0, &mut rng).is_err());
    }

    #[test]
    fn huge_cutoff_gives_empty_path() {
        let mut rng = substream(2, &[]);
        for _ in 0..100 {
            let p = sample_stable_jumps(&cfg(0.5), 1.0, 1e12, &mut rng).unwrap();
            assert!(p.jumps().is_empty());
        }
    }

    #[test]
    fn compensation_rate_closed_form() {
        let p = JumpPath::new(1.0, Some(0.5), 0.01, vec![], cfg(0.5).compensation_rate(0.01)).unwrap();
        assert_relative_eq!(p.evaluate(1.0).unwrap(), 0.1, max_relative = 1e-14);
        assert_eq!(p.evaluate(0.0).unwrap(), 0.0);
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let p = JumpPath::new(1.0, None, 1.0, vec![Jump { time: 0.5, size: 2.0 }], 0.0).unwrap();
        assert_eq!(p.evaluate(0.4).unwrap(), 0.0);
        assert_eq!(p.evaluate(0.5).unwrap(), 2.0);
        assert!(p.evaluate(1.5).is_err());
        assert!(p.evaluate(-0.1).is_err());
    }

    #[test]
    fn constructor_enforces_invariants() {
        let j = |t, x| Jump { time: t, size: x };
        assert!(JumpPath::new(1.0, None, 0.1, vec![j(0.5, 1.0), j(0.5, 1.0)], 0.0).is_err());
        assert!(JumpPath::new(1.0, None, 0.1, vec![j(0.5, 0.01)], 0.0).is_err());
        assert!(JumpPath::new(1.0, None, 0.1, vec![j(1.5, 1.0)], 0.0).is_err());
        assert!(JumpPath::new(1.0, None, 0.1, vec![j(0.2, 1.0), j(0.7, 3.0)], 0.5).is_ok());
    }

    #[test]
    fn restart_shifts_times() {
        let p = JumpPath::new(1.0, Some(0.5), 0.1, vec![Jump { time: 0.7, size: 1.0 }], 0.0).unwrap();
        let same = p.restart(0.0).unwrap();
        assert_eq!(same, p);
        let r = p.restart(0.5).unwrap();
        assert_relative_eq!(r.horizon(), 0.5);
        assert_eq!(r.jumps().len(), 1);
        assert_relative_eq!(r.jumps()[0].time, 0.2, max_relative = 1e-12);
        assert!(p.restart(1.0).is_err());
    }

    #[test]
    fn restart_matches_increment_definition() {
        let mut rng = substream(3, &[]);
        let p = sample_stable_jumps(&cfg(0.6), 1.0, 1e-3, &mut rng).unwrap();
        let ell = 0.37;
        let r = p.restart(ell).unwrap();
        let base = p.evaluate(ell).unwrap();
        for &u in &[0.0, 0.1, 0.3, 0.63] {
            let direct = p.evaluate(ell + u).unwrap() - base;
            assert_relative_eq!(r.evaluate(u).unwrap(), direct, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn intervals_carry_left_limits() {
        let j = |t, x| Jump { time: t, size: x };
        let p = JumpPath::new(1.0, None, 0.1, vec![j(0.2, 1.0), j(0.6, 0.5), j(0.9, 2.0)], 0.5).unwrap();
        let iv: Vec<_> = p.intervals(0.6).collect();
        assert_eq!(iv.len(), 2);
        assert_relative_eq!(iv[0].tau_minus, 0.1);
        assert_relative_eq!(iv[1].tau_minus, 0.3 + 1.0);
        assert_relative_eq!(iv[1].tau_plus(), p.evaluate(0.6).unwrap());
    }

    #[test]
    fn grid_evaluation_agrees_with_pointwise() {
        let mut rng = substream(4, &[]);
        let p = sample_gamma_jumps(2.0, 1e-4, &mut rng).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let fast = p.evaluate_grid(&grid).unwrap();
        for (g, v) in grid.iter().zip(&fast) {
            assert_relative_eq!(*v, p.evaluate(*g).unwrap(), max_relative = 1e-12, epsilon = 1e-15);
        }
        assert!(fast.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn gamma_sizes_respect_cutoff() {
        let mut rng = substream(5, &[]);
        for &delta in &[1e-3f64, 0.5, 2.0] {
            let p = sample_gamma_jumps(50.0, delta, &mut rng).unwrap();
            assert!(p.jumps().iter().all(|j| j.size >= delta));
            assert!(p.jumps().windows(2).all(|w| w[1].time > w[0].time));
            assert_relative_eq!(p.compensation_rate(), 1.0 - (-delta).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn single_precision_paths() {
        let mut rng = substream(6, &[]);
        let c = StableConfig::<f32>::paper_tail(0.5).unwrap();
        let p = sample_stable_jumps(&c, 1.0f32, 0.01, &mut rng).unwrap();
        let v = p.evaluate(1.0).unwrap();
        assert!(v >= 0.1);
    }
}

//! Threshold-counting statistics and the `X_0` estimators.
//!
//! With the tail of the Lévy measure equal to `x^{-α}`, the number of jumps
//! `s ≤ ε` with `b·Δτ_s > ε^m` is Poisson with mean `b^α ε^{1−mα}`. Along
//! `ε = 1/n` and for `m > 2/α`, `n^{1−αm}` times that count tends to `b^α`.
//! Replacing `b·Δτ_s` by the observed jumps `ΔŶ_s` recovers `(X_0^+)^α`.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{PathEvaluator, ProcessSpec, Quadrature};
use crate::real::Real;
use crate::rng::substream;
use crate::subordinators::{sample_gamma_jumps, sample_stable_jumps, JumpPath, StableConfig};
use crate::timechange::{ito_deltas, jump_deltas_y, y_deltas, EulerMaruyama, ItoJumpDelta, JumpDelta, JumpIncrement};

/// Upper limit on path cutoffs regardless of the threshold.
pub const MAX_CUTOFF: f64 = 1e-6;

/// For squared thresholds a jump `Δτ < δ` still crosses `|b|²Δτ Z² > ε^m`
/// with probability `P(Z² > margin)` when `δ = ε^m / (|b|² margin)`.
pub const GAUSSIAN_TAIL_MARGIN: f64 = 50.0;

pub fn check_exponent<T: Real>(alpha: T, m: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::param(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(m > T::lit(2.0) / alpha) {
        return Err(Error::param(format!("m must exceed 2/alpha = {}, got {m}", T::lit(2.0) / alpha)));
    }
    Ok(())
}

/// `2/α + 1`.
pub fn default_m<T: Real>(alpha: T) -> T {
    T::lit(2.0) / alpha + T::one()
}

/// `n^{1−αm}`.
pub fn scale_factor<T: Real>(n: u64, alpha: T, m: T) -> T {
    T::lit(n as f64).powf(T::one() - alpha * m)
}

/// `min(ε^m / b_max, 10^{-6})`: no jump below it can cross `ε^m` after
/// multiplication by anything bounded by `b_max`.
pub fn default_cutoff<T: Real>(eps: T, m: T, b_max: T) -> T {
    (eps.powf(m) / b_max.abs()).min(T::lit(MAX_CUTOFF))
}

/// Cutoff for squared thresholds, see [`GAUSSIAN_TAIL_MARGIN`].
pub fn stochastic_cutoff<T: Real>(eps: T, m: T, b_max: T) -> T {
    (eps.powf(m) / (b_max * b_max * T::lit(GAUSSIAN_TAIL_MARGIN))).min(T::lit(MAX_CUTOFF))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord<T> {
    pub n: u64,
    pub count: u64,
    /// `n^{1−αm}·count`.
    pub scaled: T,
    pub m: T,
    pub alpha: T,
}

impl<T: Real> CountRecord<T> {
    pub fn new(n: u64, count: u64, alpha: T, m: T) -> Result<Self> {
        check_exponent(alpha, m)?;
        if n == 0 {
            return Err(Error::param("resolution n must be positive"));
        }
        let scaled = scale_factor(n, alpha, m) * T::lit(count as f64);
        Ok(Self { n, count, scaled, m, alpha })
    }

    pub fn eps(&self) -> T {
        T::one() / T::lit(self.n as f64)
    }
}

fn check_eps<T: Real>(path: &JumpPath<T>, eps: T) -> Result<()> {
    if !(eps > T::zero() && eps <= path.horizon()) {
        return Err(Error::Range { what: "eps", value: eps.as_f64(), lo: 0.0, hi: path.horizon().as_f64() });
    }
    Ok(())
}

/// `N_{ε,b} = #{s ≤ ε : b·Δτ_s > ε^m}`.
///
/// Fails with [`Error::Truncation`] if a jump below the path cutoff could
/// have been counted.
pub fn count_n<T: Real>(path: &JumpPath<T>, b: T, eps: T, m: T) -> Result<u64> {
    check_eps(path, eps)?;
    if !(b > T::zero()) {
        return Ok(0);
    }
    let threshold = eps.powf(m);
    let limit = threshold / b;
    if path.cutoff() > limit {
        return Err(Error::Truncation { cutoff: path.cutoff().as_f64(), limit: limit.as_f64() });
    }
    Ok(path.jumps().iter().take_while(|j| j.time <= eps).filter(|j| b * j.size > threshold).count() as u64)
}

/// Which side of the jump is thresholded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// `Δ > ε^m`
    Positive,
    /// `−Δ > ε^m`
    Negative,
    /// `|Δ|² > ε^m`
    Squared,
}

impl ThresholdRule {
    #[inline]
    pub fn exceeds<T: Real>(self, value: T, threshold: T) -> bool {
        match self {
            ThresholdRule::Positive => value > threshold,
            ThresholdRule::Negative => -value > threshold,
            ThresholdRule::Squared => value * value > threshold,
        }
    }
}

/// `J_ε`: jumps at `s ≤ ε` whose value exceeds `ε^m` under `rule`.
pub fn count_j<T: Real, D: JumpIncrement<T>>(deltas: &[D], eps: T, m: T, rule: ThresholdRule) -> u64 {
    let threshold = eps.powf(m);
    deltas.iter().filter(|d| d.time() <= eps && rule.exceeds(d.value(), threshold)).count() as u64
}

/// Power turning a scaled count into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentMode {
    /// Lebesgue integrals: scaled count → `(X_0^±)^α`.
    Lebesgue,
    /// Stochastic integrals: scaled count → `|X_0|^{2α}`.
    Stochastic,
}

impl ExponentMode {
    pub fn power<T: Real>(self, alpha: T) -> T {
        match self {
            ExponentMode::Lebesgue => alpha.recip(),
            ExponentMode::Stochastic => (T::lit(2.0) * alpha).recip(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries<T> {
    pub alpha: T,
    pub m: T,
    pub mode: ExponentMode,
    pub records_pos: Vec<CountRecord<T>>,
    pub estimate_pos: Vec<T>,
    pub records_neg: Option<Vec<CountRecord<T>>>,
    pub estimate_neg: Option<Vec<T>>,
    pub target: Option<T>,
}

impl<T: Real> EstimateSeries<T> {
    pub fn schedule(&self) -> Vec<u64> {
        self.records_pos.iter().map(|r| r.n).collect()
    }

    pub fn last_estimate_pos(&self) -> Option<T> {
        self.estimate_pos.last().copied()
    }

    pub fn last_estimate_neg(&self) -> Option<T> {
        self.estimate_neg.as_ref().and_then(|v| v.last().copied())
    }

    /// `|estimate − |target|| / |target|` at the last resolution, using the
    /// side matching the sign of the target.
    pub fn last_relative_error(&self) -> Option<T> {
        let target = self.target?;
        let est = if target >= T::zero() || self.mode == ExponentMode::Stochastic {
            self.last_estimate_pos()?
        } else {
            self.last_estimate_neg()?
        };
        let t = target.abs();
        if t == T::zero() {
            return Some(est);
        }
        Some((est - t).abs() / t)
    }
}

fn estimates<T: Real>(
    counts: &[(u64, u64)],
    alpha: T,
    m: T,
    mode: ExponentMode,
) -> Result<(Vec<CountRecord<T>>, Vec<T>)> {
    let power = mode.power(alpha);
    let records = counts.iter().map(|&(n, j)| CountRecord::new(n, j, alpha, m)).collect::<Result<Vec<_>>>()?;
    let est = records.iter().map(|r| r.scaled.powf(power)).collect();
    Ok((records, est))
}

/// Estimator series from `(n, J_n)` pairs: `(n^{1−αm} J_n)^{1/α}` in
/// Lebesgue mode, power `1/(2α)` in stochastic mode.
pub fn estimate_x0<T: Real>(
    pos: &[(u64, u64)],
    neg: Option<&[(u64, u64)]>,
    alpha: T,
    m: T,
    mode: ExponentMode,
    target: Option<T>,
) -> Result<EstimateSeries<T>> {
    check_exponent(alpha, m)?;
    let (records_pos, estimate_pos) = estimates(pos, alpha, m, mode)?;
    let (records_neg, estimate_neg) = match neg {
        Some(neg) => {
            let (r, e) = estimates(neg, alpha, m, mode)?;
            (Some(r), Some(e))
        }
        None => (None, None),
    };
    Ok(EstimateSeries { alpha, m, mode, records_pos, estimate_pos, records_neg, estimate_neg, target })
}

/// `N(lower) ≤ J ≤ N(upper)` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: u64,
    pub count: u64,
    pub upper: u64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.count && self.count <= self.upper
    }
}

/// Sandwich with path-wide bounds: `b_lo = min X`, `b_hi = max X` over all
/// jump intervals up to `eps`, fed to [`count_n`].
pub fn sandwich<T: Real>(path: &JumpPath<T>, deltas: &[JumpDelta<T>], eps: T, m: T) -> Result<Sandwich> {
    let in_range = deltas.iter().filter(|d| d.s <= eps);
    let lo = in_range.clone().map(|d| d.x_min).fold(T::infinity(), T::min);
    let hi = in_range.map(|d| d.x_max).fold(T::neg_infinity(), T::max);
    let count = count_j(deltas, eps, m, ThresholdRule::Positive);
    if !lo.is_finite() {
        return Ok(Sandwich { lower: 0, count, upper: 0 });
    }
    Ok(Sandwich { lower: count_n(path, lo, eps, m)?, count, upper: count_n(path, hi, eps, m)? })
}

/// Sandwich with the extrema of each jump interval separately.
pub fn per_jump_sandwich<T: Real>(deltas: &[JumpDelta<T>], eps: T, m: T) -> Sandwich {
    let threshold = eps.powf(m);
    let mut s = Sandwich { lower: 0, count: 0, upper: 0 };
    for d in deltas.iter().filter(|d| d.s <= eps) {
        s.lower += (d.x_min * d.delta_tau > threshold) as u64;
        s.count += (d.delta_y > threshold) as u64;
        s.upper += (d.x_max * d.delta_tau > threshold) as u64;
    }
    s
}

/// `K_{ε,a}` together with whether `τ_ε` stayed below the Hölder horizon of
/// `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KCount {
    pub count: u64,
    pub in_hoelder_regime: bool,
}

/// `#{s ≤ ε : |∫_{τ_{s−}}^{τ_s} (X_u − X_{τ_{s−}}) dB_u|² > a ε^m}` from
/// precomputed increments.
pub fn k_from_deltas<T: Real>(deltas: &[ItoJumpDelta<T>], eps: T, m: T, a: T) -> u64 {
    let threshold = a * eps.powf(m);
    deltas.iter().filter(|d| d.s <= eps && d.terms.remainder * d.terms.remainder > threshold).count() as u64
}

pub fn count_k<T: Real, E: PathEvaluator<T> + ?Sized, R: Rng + ?Sized>(
    x: &mut E,
    path: &JumpPath<T>,
    eps: T,
    m: T,
    a: T,
    em: &EulerMaruyama,
    rng: &mut R,
) -> Result<KCount> {
    if !(a > T::zero()) {
        return Err(Error::param(format!("a must be positive, got {a}")));
    }
    let horizon = x
        .hoelder_horizon()
        .ok_or_else(|| Error::Unsupported("K count needs an integrand with a known Hoelder horizon".into()))?;
    let threshold = a * eps.powf(m);
    let mut count = 0;
    for d in ito_deltas(x, path, eps, em, rng)? {
        let r = d?.terms.remainder;
        count += (r * r > threshold) as u64;
    }
    let tau_eps = path.evaluate(eps)?;
    Ok(KCount { count, in_hoelder_regime: tau_eps < horizon })
}

/// Counts from one Lebesgue-retrieval path at resolution `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalCounts {
    pub n: u64,
    pub j_pos: u64,
    pub j_neg: u64,
    pub jumps: usize,
    pub cutoff: f64,
    /// Times the path was redrawn because `|X|` exceeded the cutoff bound.
    pub resamples: u32,
}

const MAX_RESAMPLES: u32 = 8;

/// Samples `τ` on `[0, 1/n]`, builds `ΔŶ` for `spec` and counts both signs.
///
/// The cutoff is `default_cutoff(ε, m, bound)`. If `|X|` on the visited
/// intervals exceeds `bound`, the guard is violated; the bound is widened to
/// twice the observed maximum and the path redrawn with the smaller cutoff.
pub fn lebesgue_retrieval_counts<T: Real, R: Rng + SeedableRng>(
    spec: &ProcessSpec<T>,
    cfg: &StableConfig<T>,
    n: u64,
    m: T,
    bound: T,
    quad: &Quadrature,
    rng: &mut R,
) -> Result<RetrievalCounts> {
    check_exponent(cfg.alpha(), m)?;
    if n == 0 || !(bound > T::zero()) {
        return Err(Error::param("need n >= 1 and a positive bound"));
    }
    let eps = T::one() / T::lit(n as f64);
    let mut bound = bound;
    for resamples in 0..=MAX_RESAMPLES {
        let cutoff = default_cutoff(eps, m, bound);
        let path = sample_stable_jumps(cfg, eps, cutoff, rng)?;
        let mut x = spec.evaluator(R::from_rng(rng))?;
        let threshold = eps.powf(m);
        let (mut j_pos, mut j_neg, mut observed) = (0, 0, T::zero());
        for d in y_deltas(&mut x, &path, eps, quad)? {
            let d = d?;
            observed = observed.max(d.x_min.abs()).max(d.x_max.abs());
            j_pos += ThresholdRule::Positive.exceeds(d.delta_y, threshold) as u64;
            j_neg += ThresholdRule::Negative.exceeds(d.delta_y, threshold) as u64;
        }
        if observed > bound {
            bound = observed * T::lit(2.0);
            continue;
        }
        return Ok(RetrievalCounts { n, j_pos, j_neg, jumps: path.jumps().len(), cutoff: cutoff.as_f64(), resamples });
    }
    Err(Error::Truncation { cutoff: default_cutoff(eps, m, bound).as_f64(), limit: f64::NAN })
}

/// Counts from one stochastic-integral retrieval path at resolution `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochasticCounts {
    pub n: u64,
    pub j: u64,
    pub k: KCount,
    pub jumps: usize,
    pub cutoff: f64,
}

/// `J_ε` for `|ΔÎ|² > ε^m` and `K_{ε,a}` from a single path on `[0, 1/n]`.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_retrieval_counts<T: Real, R: Rng + SeedableRng>(
    spec: &ProcessSpec<T>,
    cfg: &StableConfig<T>,
    n: u64,
    m: T,
    a: T,
    bound: T,
    em: &EulerMaruyama,
    rng: &mut R,
) -> Result<StochasticCounts> {
    check_exponent(cfg.alpha(), m)?;
    if n == 0 || !(bound > T::zero()) || !(a > T::zero()) {
        return Err(Error::param("need n >= 1, positive bound and positive a"));
    }
    let eps = T::one() / T::lit(n as f64);
    let cutoff = stochastic_cutoff(eps, m, bound);
    let path = sample_stable_jumps(cfg, eps, cutoff, rng)?;
    let mut x = spec.evaluator(R::from_rng(rng))?;
    let horizon = x.hoelder_horizon();
    let threshold = eps.powf(m);
    let (mut j, mut k) = (0, 0);
    for d in ito_deltas(&mut x, &path, eps, em, rng)? {
        let d = d?;
        j += ThresholdRule::Squared.exceeds(d.delta_i, threshold) as u64;
        k += ThresholdRule::Squared.exceeds(d.terms.remainder, a * threshold) as u64;
    }
    let tau_eps = path.evaluate(eps)?;
    Ok(StochasticCounts {
        n,
        j,
        k: KCount { count: k, in_hoelder_regime: horizon.is_some_and(|h| tau_eps < h) },
        jumps: path.jumps().len(),
        cutoff: cutoff.as_f64(),
    })
}

/// The Lebesgue pipeline with a gamma time change and `X ≡ x0`.
///
/// Each schedule point draws its own path from `substream(seed, [index])`.
/// The expected count above `ε^m` is `ε·E₁(ε^m/x0) = O(ε log(1/ε))`, so the
/// estimates collapse to 0.
pub fn gamma_null_retrieve<T: Real>(x0: T, alpha: T, schedule: &[u64], m: T, seed: u64) -> Result<EstimateSeries<T>> {
    if !(x0 > T::zero()) {
        return Err(Error::param(format!("x0 must be positive, got {x0}")));
    }
    check_exponent(alpha, m)?;
    let mut pos = Vec::with_capacity(schedule.len());
    let mut neg = Vec::with_capacity(schedule.len());
    let quad = Quadrature::default();
    for (k, &n) in schedule.iter().enumerate() {
        if n == 0 {
            return Err(Error::param("schedule entries must be positive"));
        }
        let mut rng = substream(seed, &[k as u64]);
        let eps = T::one() / T::lit(n as f64);
        let path = sample_gamma_jumps(eps, default_cutoff(eps, m, x0), &mut rng)?;
        let mut x = ProcessSpec::Constant { x0 }.evaluator(substream(0, &[]))?;
        let deltas = jump_deltas_y(&mut x, &path, eps, &quad)?;
        pos.push((n, count_j(&deltas, eps, m, ThresholdRule::Positive)));
        neg.push((n, count_j(&deltas, eps, m, ThresholdRule::Negative)));
    }
    estimate_x0(&pos, Some(&neg), alpha, m, ExponentMode::Lebesgue, Some(x0))
}

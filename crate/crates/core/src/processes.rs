//! Continuous ingredients: sampled paths, the planar Bessel process and its
//! clock `H_t = ∫_0^t R_s^{-2} ds`, integral processes, and the lazily
//! revealed test integrands `X`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    LeftConstant,
    Linear,
}

/// A process on a deterministic grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath<T> {
    times: Vec<T>,
    values: Vec<T>,
    interpolation: Interpolation,
}

impl<T: Real> SampledPath<T> {
    pub fn new(times: Vec<T>, values: Vec<T>, interpolation: Interpolation) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::param("grid and values must be nonempty and of equal length"));
        }
        if times[0] != T::zero() {
            return Err(Error::param("grid must start at 0"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::param("grid must be strictly increasing"));
        }
        Ok(Self { times, values, interpolation })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("nonempty grid")
    }

    pub fn evaluate(&self, t: T) -> Result<T> {
        let horizon = self.horizon();
        if !(t >= T::zero() && t <= horizon) {
            return Err(Error::Horizon { t: t.as_f64(), horizon: horizon.as_f64() });
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        if i + 1 == self.times.len() || self.times[i] == t {
            return Ok(self.values[i]);
        }
        Ok(match self.interpolation {
            Interpolation::LeftConstant => self.values[i],
            Interpolation::Linear => {
                let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                self.values[i] + w * (self.values[i + 1] - self.values[i])
            }
        })
    }
}

fn uniform_grid<T: Real>(horizon: T, dt: T) -> Result<Vec<T>> {
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > T::zero() && dt <= horizon) {
        return Err(Error::param(format!("step must lie in (0, {horizon}], got {dt}")));
    }
    let stop = horizon * (T::one() - T::lit(1e-9));
    let mut times = vec![T::zero()];
    let mut i = 1usize;
    loop {
        let t = T::lit(i as f64) * dt;
        if t >= stop {
            break;
        }
        times.push(t);
        i += 1;
    }
    times.push(horizon);
    Ok(times)
}

/// Planar Bessel process from 1: `R_t = |(1 + W¹_t, W²_t)|`, exact at grid points.
pub fn simulate_bessel2<T: Real, R: Rng + ?Sized>(horizon: T, dt: T, rng: &mut R) -> Result<SampledPath<T>> {
    let times = uniform_grid(horizon, dt)?;
    let mut values = Vec::with_capacity(times.len());
    let (mut w1, mut w2) = (0.0f64, 0.0f64);
    values.push(T::one());
    for w in times.windows(2) {
        let sd = (w[1] - w[0]).as_f64().sqrt();
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        w1 += sd * z1;
        w2 += sd * z2;
        values.push(T::lit((1.0 + w1).hypot(w2)));
    }
    SampledPath::new(times, values, Interpolation::Linear)
}

/// `H_t = ∫_0^t R^{-2} ds` by the trapezoid rule on the grid of `R`.
pub fn bessel_clock<T: Real>(radius: &SampledPath<T>) -> Result<SampledPath<T>> {
    if let Some(bad) = radius.values().iter().find(|&&r| !(r > T::zero())) {
        return Err(Error::Domain(format!("Bessel path hit {bad}; clock undefined")));
    }
    let integrand: Vec<T> = radius.values().iter().map(|&r| (r * r).recip()).collect();
    let clock = cumulative_trapezoid(radius.times(), &integrand);
    SampledPath::new(radius.times().to_vec(), clock, Interpolation::Linear)
}

fn cumulative_trapezoid<T: Real>(times: &[T], f: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(times.len());
    out.push(acc);
    for i in 1..times.len() {
        acc = acc + half * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}

/// `Y_u = ∫_0^u X_s ds`, exact for the declared interpolation of `X` when it
/// is piecewise affine (trapezoid) or piecewise constant (left sums).
pub fn integral_process<T: Real>(x: &SampledPath<T>) -> Result<SampledPath<T>> {
    let values = match x.interpolation() {
        Interpolation::Linear => cumulative_trapezoid(x.times(), x.values()),
        Interpolation::LeftConstant => {
            let mut acc = T::zero();
            let mut out = vec![acc];
            for w in x.times().windows(2).zip(x.values()) {
                let (t, v) = w;
                acc = acc + (t[1] - t[0]) * *v;
                out.push(acc);
            }
            out
        }
    };
    SampledPath::new(x.times().to_vec(), values, Interpolation::Linear)
}

/// Test integrands `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String", bound = "T: Real")]
pub enum ProcessSpec<T> {
    Constant {
        x0: T,
    },
    Affine {
        x0: T,
        slope: T,
    },
    /// `X_s = R_s^{-2}` for the planar Bessel process from 1.
    BesselClockIntegrand,
    Brownian {
        x0: T,
    },
    /// `X_s = x0 + |sin s|^η`, Hölder with exponent `η` and constant 1.
    HoelderTest {
        x0: T,
        eta: T,
    },
}

impl<T: Real> ProcessSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: T| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param("process parameters must be finite"))
            }
        };
        match *self {
            ProcessSpec::Constant { x0 } | ProcessSpec::Brownian { x0 } => finite(x0),
            ProcessSpec::Affine { x0, slope } => finite(x0).and(finite(slope)),
            ProcessSpec::BesselClockIntegrand => Ok(()),
            ProcessSpec::HoelderTest { x0, eta } => {
                finite(x0)?;
                if !(eta > T::zero() && eta <= T::one()) {
                    return Err(Error::param(format!("eta must lie in (0, 1], got {eta}")));
                }
                Ok(())
            }
        }
    }

    /// `X_0`.
    pub fn initial_value(&self) -> T {
        match *self {
            ProcessSpec::Constant { x0 }
            | ProcessSpec::Affine { x0, .. }
            | ProcessSpec::Brownian { x0 }
            | ProcessSpec::HoelderTest { x0, .. } => x0,
            ProcessSpec::BesselClockIntegrand => T::one(),
        }
    }

    /// Whether values depend on a random driver.
    pub fn is_random(&self) -> bool {
        matches!(self, ProcessSpec::Brownian { .. } | ProcessSpec::BesselClockIntegrand)
    }

    /// Instantiates a path; random kinds own `rng` for on-demand refinement.
    pub fn evaluator<R: Rng + SeedableRng>(&self, mut rng: R) -> Result<ProcessEvaluator<T, R>> {
        self.validate()?;
        Ok(match *self {
            ProcessSpec::Constant { x0 } => ProcessEvaluator::Constant(x0),
            ProcessSpec::Affine { x0, slope } => ProcessEvaluator::Affine { x0, slope },
            ProcessSpec::HoelderTest { x0, eta } => ProcessEvaluator::Hoelder { x0, eta },
            ProcessSpec::Brownian { x0 } => ProcessEvaluator::Brownian(BrownianPath::new(x0, rng)),
            ProcessSpec::BesselClockIntegrand => {
                let second = R::from_rng(&mut rng);
                ProcessEvaluator::BesselIntegrand(BesselDriver::new(rng, second))
            }
        })
    }
}

impl<T: Real> fmt::Display for ProcessSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessSpec::Constant { x0 } => write!(f, "constant:{x0}"),
            ProcessSpec::Affine { x0, slope } => write!(f, "affine:{x0},{slope}"),
            ProcessSpec::BesselClockIntegrand => write!(f, "bessel-clock"),
            ProcessSpec::Brownian { x0 } => write!(f, "brownian:{x0}"),
            ProcessSpec::HoelderTest { x0, eta } => write!(f, "hoelder:{x0},{eta}"),
        }
    }
}

impl<T: Real> FromStr for ProcessSpec<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<T> = if args.trim().is_empty() {
            vec![]
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| Error::param(format!("bad number '{a}' in process '{s}'")))
                })
                .collect::<Result<_>>()?
        };
        let spec = match (kind.trim(), nums.as_slice()) {
            ("constant", [x0]) => ProcessSpec::Constant { x0: *x0 },
            ("affine", [x0, slope]) => ProcessSpec::Affine { x0: *x0, slope: *slope },
            ("bessel-clock", []) => ProcessSpec::BesselClockIntegrand,
            ("brownian", [x0]) => ProcessSpec::Brownian { x0: *x0 },
            ("hoelder", [x0]) => ProcessSpec::HoelderTest { x0: *x0, eta: T::one() },
            ("hoelder", [x0, eta]) => ProcessSpec::HoelderTest { x0: *x0, eta: *eta },
            _ => {
                return Err(Error::param(format!(
                    "unknown process '{s}' (expected constant:x0, affine:x0,slope, bessel-clock, \
                     brownian:x0 or hoelder:x0[,eta])"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Real> TryFrom<String> for ProcessSpec<T> {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl<T: Real> From<ProcessSpec<T>> for String {
    fn from(p: ProcessSpec<T>) -> String {
        p.to_string()
    }
}

/// Node schedule for integrals over jump intervals: start with `nodes`,
/// double until the relative change is below `rel_tol` or `max_nodes` is hit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: usize,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { nodes: 64, rel_tol: 1e-8, max_nodes: 256 }
    }
}

/// Integral of `X` over an interval together with the extrema of the nodes
/// that produced it; the integral always lies in `[min·len, max·len]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSummary<T> {
    pub integral: T,
    pub min: T,
    pub max: T,
    pub left: T,
}

/// Uniform access to `X_t` for the time-change machinery.
pub trait PathEvaluator<T: Real> {
    fn value_at(&mut self, t: T) -> Result<T>;

    /// `∫_start^{start+length} X_u du`.
    fn summarize(&mut self, start: T, length: T, quad: &Quadrature) -> Result<IntervalSummary<T>> {
        adaptive_trapezoid(self, start, length, quad)
    }

    /// `Some(c)` if `X ≡ c`.
    fn constant_value(&self) -> Option<T> {
        None
    }

    /// A time before which the Hölder ratio `(u−v)^{-η}|X_u − X_v|²` stays
    /// at most 1; `None` if unknown.
    fn hoelder_horizon(&self) -> Option<T> {
        None
    }
}

fn adaptive_trapezoid<T: Real, E: PathEvaluator<T> + ?Sized>(
    eval: &mut E,
    start: T,
    length: T,
    quad: &Quadrature,
) -> Result<IntervalSummary<T>> {
    let nodes = quad.nodes.max(2);
    let half = T::lit(0.5);
    let mut segments = nodes - 1;
    let mut h = length / T::lit(segments as f64);
    let mut values = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let t = if i + 1 == nodes { start + length } else { start + T::lit(i as f64) * h };
        values.push(eval.value_at(t)?);
    }
    let left = values[0];
    let mut inner: T = values[1..nodes - 1].iter().copied().sum();
    let ends = values[0] + values[nodes - 1];
    let mut lo = values.iter().copied().fold(T::infinity(), T::min);
    let mut hi = values.iter().copied().fold(T::neg_infinity(), T::max);
    let mut estimate = h * (half * ends + inner);
    while segments * 2 < quad.max_nodes {
        let mut mids = T::zero();
        for i in 0..segments {
            let v = eval.value_at(start + (T::lit(i as f64) + half) * h)?;
            lo = lo.min(v);
            hi = hi.max(v);
            mids = mids + v;
        }
        inner = inner + mids;
        segments *= 2;
        h = h * half;
        let refined = h * (half * ends + inner);
        let change = (refined - estimate).abs();
        estimate = refined;
        if change.as_f64() <= quad.rel_tol * estimate.abs().as_f64() {
            break;
        }
    }
    Ok(IntervalSummary { integral: estimate, min: lo, max: hi, left })
}

/// Brownian path revealed on demand; queries between revealed times are
/// filled in by Brownian-bridge sampling, so the path stays consistent.
#[derive(Debug, Clone)]
pub struct BrownianPath<T, R> {
    revealed: BTreeMap<OrderedFloat<f64>, T>,
    rng: R,
}

impl<T: Real, R: Rng> BrownianPath<T, R> {
    pub fn new(x0: T, rng: R) -> Self {
        let mut revealed = BTreeMap::new();
        revealed.insert(OrderedFloat(0.0), x0);
        Self { revealed, rng }
    }

    pub fn revealed_len(&self) -> usize {
        self.revealed.len()
    }

    pub fn value_at(&mut self, t: T) -> Result<T> {
        if !(t >= T::zero()) || !t.is_finite() {
            return Err(Error::param(format!("time must be finite and nonnegative, got {t}")));
        }
        let key = OrderedFloat(t.as_f64());
        if let Some(v) = self.revealed.get(&key) {
            return Ok(*v);
        }
        let (t0, x0) = self
            .revealed
            .range(..key)
            .next_back()
            .map(|(k, v)| (T::lit(k.0), *v))
            .expect("time zero is always revealed");
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let value = match self.revealed.range(key..).next().map(|(k, v)| (T::lit(k.0), *v)) {
            None => x0 + T::lit(z * (t - t0).as_f64().sqrt()),
            Some((t1, x1)) => {
                let span = t1 - t0;
                let w = (t - t0) / span;
                let var = ((t - t0) * (t1 - t) / span).as_f64();
                x0 + w * (x1 - x0) + T::lit(z * var.sqrt())
            }
        };
        self.revealed.insert(key, value);
        Ok(value)
    }
}

/// Planar Brownian driver of `R_s = |(1 + W¹_s, W²_s)|`.
#[derive(Debug, Clone)]
pub struct BesselDriver<T, R> {
    first: BrownianPath<T, R>,
    second: BrownianPath<T, R>,
}

impl<T: Real, R: Rng> BesselDriver<T, R> {
    pub fn new(first: R, second: R) -> Self {
        Self { first: BrownianPath::new(T::zero(), first), second: BrownianPath::new(T::zero(), second) }
    }

    pub fn radius(&mut self, t: T) -> Result<T> {
        let a = self.first.value_at(t)?;
        let b = self.second.value_at(t)?;
        Ok((T::one() + a).hypot(b))
    }
}

/// An instantiated [`ProcessSpec`].
#[derive(Debug, Clone)]
pub enum ProcessEvaluator<T, R> {
    Constant(T),
    Affine { x0: T, slope: T },
    Hoelder { x0: T, eta: T },
    Brownian(BrownianPath<T, R>),
    BesselIntegrand(BesselDriver<T, R>),
}

impl<T: Real, R: Rng> PathEvaluator<T> for ProcessEvaluator<T, R> {
    fn value_at(&mut self, t: T) -> Result<T> {
        if !(t >= T::zero()) {
            return Err(Error::param(format!("time must be nonnegative, got {t}")));
        }
        match self {
            ProcessEvaluator::Constant(c) => Ok(*c),
            ProcessEvaluator::Affine { x0, slope } => Ok(*x0 + *slope * t),
            ProcessEvaluator::Hoelder { x0, eta } => Ok(*x0 + t.sin().abs().powf(*eta)),
            ProcessEvaluator::Brownian(path) => path.value_at(t),
            ProcessEvaluator::BesselIntegrand(driver) => {
                let r = driver.radius(t)?;
                if !(r > T::zero()) {
                    return Err(Error::Domain(format!("Bessel radius {r} at t = {t}")));
                }
                Ok((r * r).recip())
            }
        }
    }

    fn summarize(&mut self, start: T, length: T, quad: &Quadrature) -> Result<IntervalSummary<T>> {
        match *self {
            ProcessEvaluator::Constant(c) => Ok(IntervalSummary { integral: c * length, min: c, max: c, left: c }),
            ProcessEvaluator::Affine { x0, slope } => {
                let left = x0 + slope * start;
                let right = x0 + slope * (start + length);
                let mid = x0 + slope * (start + length * T::lit(0.5));
                Ok(IntervalSummary { integral: mid * length, min: left.min(right), max: left.max(right), left })
            }
            _ => adaptive_trapezoid(self, start, length, quad),
        }
    }

    fn constant_value(&self) -> Option<T> {
        match self {
            ProcessEvaluator::Constant(c) => Some(*c),
            _ => None,
        }
    }

    fn hoelder_horizon(&self) -> Option<T> {
        match self {
            ProcessEvaluator::Constant(_) => Some(T::infinity()),
            // ||sin u|^η − |sin v|^η| ≤ |u − v|^η, so the ratio is at most
            // (u − v)^η ≤ 1 before time 1.
            ProcessEvaluator::Hoelder { .. } => Some(T::one()),
            _ => None,
        }
    }
}

/// `evaluate_process` as a free function.
pub fn evaluate_process<T: Real, E: PathEvaluator<T> + ?Sized>(eval: &mut E, t: T) -> Result<T> {
    eval.value_at(t)
}

/// A sampled path used as an integrand; evaluation beyond its grid fails.
impl<T: Real> PathEvaluator<T> for SampledPath<T> {
    fn value_at(&mut self, t: T) -> Result<T> {
        self.evaluate(t)
    }
}

/// Step control for [`bessel_clock_readings`].
///
/// The clock is simulated in its own time `u` where the step is `base_step`
/// up to `u = 1`, then grows like `base_step·u`, capped at `max_step`.
/// Readings still pending at `u = horizon` are reported as truncated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockStepping {
    pub base_step: f64,
    pub max_step: f64,
    pub horizon: f64,
}

impl Default for ClockStepping {
    fn default() -> Self {
        Self { base_step: 1e-4, max_step: 1e-2, horizon: 1e5 }
    }
}

/// `(H_t, R_t)` at one requested time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockReading {
    pub time: f64,
    pub clock: f64,
    pub radius: f64,
    pub truncated: bool,
}

/// Samples `(H_t, R_t)` at the nondecreasing `times` for one planar Bessel
/// path from 1.
///
/// Uses the skew-product form `R_t = exp(β_{H_t})`, with `β` a standard
/// Brownian motion and `H` the inverse of `A_u = ∫_0^u e^{2β_v} dv`, which is
/// exact in law. `A` is integrated by the trapezoid rule and the crossing
/// `A_u = t` interpolated linearly within the step. Cost grows with `H_t`
/// rather than `t`, which keeps heavy-tailed `t` tractable.
pub fn bessel_clock_readings<R: Rng + ?Sized>(
    times: &[f64],
    stepping: &ClockStepping,
    rng: &mut R,
) -> Result<Vec<ClockReading>> {
    if !(stepping.base_step > 0.0 && stepping.max_step >= stepping.base_step && stepping.horizon > 0.0) {
        return Err(Error::param(format!("invalid clock stepping {stepping:?}")));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || !times.windows(2).all(|w| w[1] >= w[0]) {
        return Err(Error::param("clock reading times must be nonnegative and nondecreasing"));
    }
    let mut out = Vec::with_capacity(times.len());
    let (mut u, mut beta, mut area) = (0.0f64, 0.0f64, 0.0f64);
    let mut weight = 1.0f64; // e^{2β_u}
    let mut pending = times.iter().copied().peekable();
    while let Some(&t) = pending.peek() {
        if t <= area {
            // Only reached for t == 0 before the first step.
            out.push(ClockReading { time: t, clock: u, radius: beta.exp(), truncated: false });
            pending.next();
            continue;
        }
        if u >= stepping.horizon {
            out.push(ClockReading { time: t, clock: u, radius: beta.exp(), truncated: true });
            pending.next();
            continue;
        }
        let du = (stepping.base_step * u.max(1.0)).min(stepping.max_step);
        let z: f64 = StandardNormal.sample(rng);
        let next_beta = beta + du.sqrt() * z;
        let next_weight = (2.0 * next_beta).exp();
        let next_area = area + 0.5 * du * (weight + next_weight);
        while let Some(&t) = pending.peek() {
            if t > next_area {
                break;
            }
            let frac = ((t - area) / (next_area - area)).clamp(0.0, 1.0);
            out.push(ClockReading {
                time: t,
                clock: u + frac * du,
                radius: (beta + frac * (next_beta - beta)).exp(),
                truncated: false,
            });
            pending.next();
        }
        u += du;
        beta = next_beta;
        weight = next_weight;
        area = next_area;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn path(times: Vec<f64>, values: Vec<f64>, i: Interpolation) -> SampledPath<f64> {
        SampledPath::new(times, values, i).unwrap()
    }

    #[test]
    fn sampled_path_validation_and_interpolation() {
        assert!(SampledPath::new(vec![0.1, 0.2], vec![1.0, 2.0], Interpolation::Linear).is_err());
        assert!(SampledPath::new(vec![0.0, 0.0], vec![1.0, 2.0], Interpolation::Linear).is_err());
        let lin = path(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0], Interpolation::Linear);
        assert_eq!(lin.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(lin.evaluate(2.0).unwrap(), 0.0);
        assert!(matches!(lin.evaluate(2.5), Err(Error::Horizon { .. })));
        let step = path(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0], Interpolation::LeftConstant);
        assert_eq!(step.evaluate(0.99).unwrap(), 0.0);
        assert_eq!(step.evaluate(1.0).unwrap(), 2.0);
    }

    #[test]
    fn bessel_starts_at_one_and_stays_positive() {
        let mut rng = substream(11, &[]);
        let r = simulate_bessel2(1.0, 1e-3, &mut rng).unwrap();
        assert_eq!(r.values()[0], 1.0);
        assert_eq!(r.horizon(), 1.0);
        assert!(r.values().iter().all(|&v| v > 0.0));
        assert!(simulate_bessel2(1.0, 0.0, &mut rng).is_err());
        assert!(simulate_bessel2(1.0, -1e-3, &mut rng).is_err());
    }

    #[test]
    fn clock_of_constant_radius() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let one = path(times.clone(), vec![1.0; 11], Interpolation::Linear);
        let h = bessel_clock(&one).unwrap();
        for (t, v) in times.iter().zip(h.values()) {
            assert_relative_eq!(*v, *t, epsilon = 1e-15);
        }
        let two = path(times.clone(), vec![2.0; 11], Interpolation::Linear);
        let h = bessel_clock(&two).unwrap();
        for (t, v) in times.iter().zip(h.values()) {
            assert_relative_eq!(*v, *t / 4.0, epsilon = 1e-15);
        }
        let bad = path(vec![0.0, 1.0], vec![1.0, 0.0], Interpolation::Linear);
        assert!(matches!(bessel_clock(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_exact_for_low_degree() {
        let times = vec![0.0, 0.3, 0.35, 1.0, 2.2];
        let c = path(times.clone(), vec![1.5; 5], Interpolation::Linear);
        let y = integral_process(&c).unwrap();
        for (t, v) in times.iter().zip(y.values()) {
            assert_relative_eq!(*v, 1.5 * t, epsilon = 1e-14);
        }
        let lin = path(times.clone(), times.clone(), Interpolation::Linear);
        let y = integral_process(&lin).unwrap();
        for (t, v) in times.iter().zip(y.values()) {
            assert_relative_eq!(*v, t * t / 2.0, epsilon = 1e-14);
        }
        let step = path(vec![0.0, 1.0, 3.0], vec![2.0, -1.0, 5.0], Interpolation::LeftConstant);
        assert_eq!(integral_process(&step).unwrap().values(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn process_spec_round_trip_and_errors() {
        for s in ["constant:2", "affine:1,3", "bessel-clock", "brownian:0.5", "hoelder:1,0.5"] {
            let p: ProcessSpec<f64> = s.parse().unwrap();
            assert_eq!(p.to_string(), s);
        }
        assert!("hoelder:1,1.5".parse::<ProcessSpec<f64>>().is_err());
        assert!("wiener:1".parse::<ProcessSpec<f64>>().is_err());
        assert!("affine:1".parse::<ProcessSpec<f64>>().is_err());
    }

    #[test]
    fn deterministic_evaluators() {
        let rng = substream(0, &[]);
        let mut c = ProcessSpec::Constant { x0: 2.0 }.evaluator(rng.clone()).unwrap();
        assert_eq!(c.value_at(17.0).unwrap(), 2.0);
        let mut a = ProcessSpec::Affine { x0: 1.0, slope: 3.0 }.evaluator(rng.clone()).unwrap();
        assert_eq!(evaluate_process(&mut a, 2.0).unwrap(), 7.0);
        let mut h = ProcessSpec::HoelderTest { x0: 1.0, eta: 1.0 }.evaluator(rng).unwrap();
        assert_eq!(h.value_at(0.0).unwrap(), 1.0);
        assert_relative_eq!(h.value_at(0.5).unwrap(), 1.0 + 0.5f64.sin());
    }

    #[test]
    fn brownian_requery_is_consistent() {
        let mut b = BrownianPath::new(0.5, substream(3, &[]));
        let v1 = b.value_at(1.0).unwrap();
        let mid = b.value_at(0.5).unwrap();
        assert_eq!(b.value_at(1.0).unwrap(), v1);
        assert_eq!(b.value_at(0.5).unwrap(), mid);
        assert_eq!(b.value_at(0.0).unwrap(), 0.5);
        assert_eq!(b.revealed_len(), 3);
    }

    #[test]
    fn affine_summary_is_exact() {
        let mut a = ProcessSpec::Affine { x0: 0.0, slope: 1.0 }.evaluator(substream(0, &[])).unwrap();
        let s = a.summarize(1.0, 1.0, &Quadrature::default()).unwrap();
        assert_eq!(s.integral, 1.5);
        assert_eq!((s.min, s.max, s.left), (1.0, 2.0, 1.0));
    }

    #[test]
    fn trapezoid_converges_for_smooth_integrand() {
        let mut h = ProcessSpec::HoelderTest { x0: 0.0, eta: 1.0 }.evaluator(substream(0, &[])).unwrap();
        let s = h.summarize(0.2, 0.5, &Quadrature { nodes: 64, rel_tol: 1e-12, max_nodes: 1 << 14 }).unwrap();
        let exact = 0.2f64.cos() - 0.7f64.cos();
        assert_relative_eq!(s.integral, exact, max_relative = 1e-9);
        assert!(s.min * 0.5 <= s.integral && s.integral <= s.max * 0.5);
    }

    #[test]
    fn clock_readings_start_at_zero_and_increase() {
        let mut rng = substream(9, &[]);
        let r = bessel_clock_readings(&[0.0, 0.5, 0.5, 2.0], &ClockStepping::default(), &mut rng).unwrap();
        assert_eq!(r[0].clock, 0.0);
        assert_eq!(r[0].radius, 1.0);
        assert_eq!(r[1].clock, r[2].clock);
        assert!(r[3].clock > r[1].clock);
        assert!(r.iter().all(|x| !x.truncated));
        assert!(bessel_clock_readings(&[1.0, 0.5], &ClockStepping::default(), &mut rng).is_err());
    }

    #[test]
    fn clock_truncates_at_horizon() {
        let mut rng = substream(9, &[]);
        let stepping = ClockStepping { base_step: 1e-3, max_step: 1e-2, horizon: 0.01 };
        let r = bessel_clock_readings(&[1e6], &stepping, &mut rng).unwrap();
        assert!(r[0].truncated);
        assert!(r[0].clock >= 0.01);
    }
}

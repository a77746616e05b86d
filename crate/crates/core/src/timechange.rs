//! Composition with subordinator paths and the exact jumps of `Ŷ = Y∘τ` and
//! `Î = I∘τ`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::processes::{Interpolation, PathEvaluator, Quadrature, SampledPath};
use crate::real::Real;
use crate::special::gamma_fn;
use crate::subordinators::{JumpPath, StableConfig};

/// Jump of `Ŷ` at subordinator time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpDelta<T> {
    pub s: T,
    pub tau_minus: T,
    pub tau_plus: T,
    pub delta_tau: T,
    /// `Ŷ_s − Ŷ_{s−} = ∫_{τ_{s−}}^{τ_s} X_u du`.
    pub delta_y: T,
    /// Extrema of `X` over the nodes used for `delta_y`.
    pub x_min: T,
    pub x_max: T,
}

/// Three-term split of `ΔÎ_s`:
/// `X_0 ΔB̂_s + (X_{τ_{s−}} − X_0) ΔB̂_s + ∫ (X_u − X_{τ_{s−}}) dB_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementTerms<T> {
    pub leading: T,
    pub drift: T,
    pub remainder: T,
}

/// Jump of `Î` at subordinator time `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItoJumpDelta<T> {
    pub s: T,
    pub tau_minus: T,
    pub tau_plus: T,
    pub delta_tau: T,
    /// `B_{τ_s} − B_{τ_{s−}}`.
    pub delta_b: T,
    /// `∫_{τ_{s−}}^{τ_s} X_u dB_u`.
    pub delta_i: T,
    pub terms: IncrementTerms<T>,
    pub steps: usize,
}

/// Anything carrying a jump time and a jump value to threshold.
pub trait JumpIncrement<T> {
    fn time(&self) -> T;
    fn value(&self) -> T;
}

impl<T: Real> JumpIncrement<T> for JumpDelta<T> {
    fn time(&self) -> T {
        self.s
    }

    fn value(&self) -> T {
        self.delta_y
    }
}

impl<T: Real> JumpIncrement<T> for ItoJumpDelta<T> {
    fn time(&self) -> T {
        self.s
    }

    fn value(&self) -> T {
        self.delta_i
    }
}

/// `X̂_ℓ = X_{τ_ℓ}` on `grid`, returned as a left-constant path so that
/// evaluation between grid points is right-continuous.
pub fn subordinate<T: Real, E: PathEvaluator<T> + ?Sized>(
    x: &mut E,
    path: &JumpPath<T>,
    grid: &[T],
) -> Result<SampledPath<T>> {
    let taus = path.evaluate_grid(grid)?;
    let values = taus.into_iter().map(|t| x.value_at(t)).collect::<Result<Vec<_>>>()?;
    SampledPath::new(grid.to_vec(), values, Interpolation::LeftConstant)
}

fn check_eps<T: Real>(path: &JumpPath<T>, eps: T) -> Result<()> {
    if !(eps > T::zero() && eps <= path.horizon()) {
        return Err(Error::Range { what: "eps", value: eps.as_f64(), lo: 0.0, hi: path.horizon().as_f64() });
    }
    Ok(())
}

/// `ΔŶ_s` for every jump of `τ` at `s ≤ eps`.
pub fn jump_deltas_y<T: Real, E: PathEvaluator<T> + ?Sized>(
    x: &mut E,
    path: &JumpPath<T>,
    eps: T,
    quad: &Quadrature,
) -> Result<Vec<JumpDelta<T>>> {
    y_deltas(x, path, eps, quad)?.collect()
}

/// Lazy form of [`jump_deltas_y`].
pub fn y_deltas<'a, T: Real, E: PathEvaluator<T> + ?Sized>(
    x: &'a mut E,
    path: &'a JumpPath<T>,
    eps: T,
    quad: &'a Quadrature,
) -> Result<impl Iterator<Item = Result<JumpDelta<T>>> + 'a> {
    check_eps(path, eps)?;
    if quad.nodes < 2 {
        return Err(Error::param("quadrature needs at least 2 nodes"));
    }
    Ok(path.intervals(eps).map(move |iv| {
        let summary = x.summarize(iv.tau_minus, iv.size, quad)?;
        Ok(JumpDelta {
            s: iv.time,
            tau_minus: iv.tau_minus,
            tau_plus: iv.tau_plus(),
            delta_tau: iv.size,
            delta_y: summary.integral,
            x_min: summary.min,
            x_max: summary.max,
        })
    }))
}

/// Euler–Maruyama resolution inside one jump interval: the number of steps
/// is `ceil(Δτ/step)` clamped to `[min_steps, max_steps]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerMaruyama {
    pub step: f64,
    pub min_steps: usize,
    pub max_steps: usize,
}

impl Default for EulerMaruyama {
    fn default() -> Self {
        Self { step: 1e-4, min_steps: 16, max_steps: 4096 }
    }
}

impl EulerMaruyama {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::param(format!("Euler-Maruyama step must be positive, got {}", self.step)));
        }
        if self.min_steps == 0 || self.max_steps < self.min_steps {
            return Err(Error::param("need 1 <= min_steps <= max_steps"));
        }
        Ok(())
    }

    fn steps_for(&self, length: f64) -> usize {
        let wanted = (length / self.step).ceil();
        if wanted >= self.max_steps as f64 {
            self.max_steps
        } else {
            (wanted as usize).max(self.min_steps)
        }
    }
}

/// `ΔÎ_s = ∫_{τ_{s−}}^{τ_s} X_u dB_u` for every jump at `s ≤ eps`.
///
/// `B` is a Brownian motion independent of `τ`, drawn from `rng` forward
/// inside each jump interval; only its increments over the intervals are
/// ever needed. For constant `X ≡ c` the increment is `c·ΔB̂_s` exactly.
pub fn jump_deltas_i<T: Real, E: PathEvaluator<T> + ?Sized, R: Rng + ?Sized>(
    x: &mut E,
    path: &JumpPath<T>,
    eps: T,
    em: &EulerMaruyama,
    rng: &mut R,
) -> Result<Vec<ItoJumpDelta<T>>> {
    ito_deltas(x, path, eps, em, rng)?.collect()
}

/// Lazy form of [`jump_deltas_i`], for paths too large to materialize.
pub fn ito_deltas<'a, T: Real, E: PathEvaluator<T> + ?Sized, R: Rng + ?Sized>(
    x: &'a mut E,
    path: &'a JumpPath<T>,
    eps: T,
    em: &'a EulerMaruyama,
    rng: &'a mut R,
) -> Result<impl Iterator<Item = Result<ItoJumpDelta<T>>> + 'a> {
    check_eps(path, eps)?;
    em.validate()?;
    let x0 = x.value_at(T::zero())?;
    let constant = x.constant_value();
    Ok(path.intervals(eps).map(move |iv| {
        let length = iv.size.as_f64();
        if let Some(c) = constant {
            let z: f64 = StandardNormal.sample(rng);
            let db = T::lit(length.sqrt() * z);
            return Ok(ItoJumpDelta {
                s: iv.time,
                tau_minus: iv.tau_minus,
                tau_plus: iv.tau_plus(),
                delta_tau: iv.size,
                delta_b: db,
                delta_i: c * db,
                terms: IncrementTerms { leading: c * db, drift: T::zero(), remainder: T::zero() },
                steps: 1,
            });
        }
        let steps = em.steps_for(length);
        let h = iv.size / T::lit(steps as f64);
        let sd = h.as_f64().sqrt();
        let left = x.value_at(iv.tau_minus)?;
        let (mut db, mut di, mut rem) = (T::zero(), T::zero(), T::zero());
        for k in 0..steps {
            let xv = if k == 0 { left } else { x.value_at(iv.tau_minus + T::lit(k as f64) * h)? };
            let z: f64 = StandardNormal.sample(rng);
            let inc = T::lit(sd * z);
            db = db + inc;
            di = di + xv * inc;
            rem = rem + (xv - left) * inc;
        }
        Ok(ItoJumpDelta {
            s: iv.time,
            tau_minus: iv.tau_minus,
            tau_plus: iv.tau_plus(),
            delta_tau: iv.size,
            delta_b: db,
            delta_i: di,
            terms: IncrementTerms { leading: x0 * db, drift: (left - x0) * db, remainder: rem },
            steps,
        })
    }))
}

/// `B̂_ℓ = B_{τ_ℓ}` for an independent Brownian motion `B`.
///
/// Each jump contributes `√Δτ·Z`, the compensating drift `√(c·ℓ)·Z`.
pub fn subordinate_brownian_value<T: Real, R: Rng + ?Sized>(path: &JumpPath<T>, ell: T, rng: &mut R) -> Result<T> {
    check_eps(path, ell)?;
    let mut total = 0.0f64;
    for iv in path.intervals(ell) {
        let z: f64 = StandardNormal.sample(rng);
        total += iv.size.as_f64().sqrt() * z;
    }
    let z: f64 = StandardNormal.sample(rng);
    total += (path.compensation_rate() * ell).as_f64().sqrt() * z;
    Ok(T::lit(total))
}

/// Scale `σ` such that `B̂_ℓ` has characteristic function
/// `exp(−ℓ σ^{2α} |u|^{2α})`.
pub fn subordinate_brownian_scale<T: Real>(cfg: &StableConfig<T>) -> f64 {
    let alpha = cfg.alpha().as_f64();
    let c = cfg.tail_constant() * gamma_fn(1.0 - alpha) * 2f64.powf(-alpha);
    c.powf(1.0 / (2.0 * alpha))
}

/// Symmetric stable draw with characteristic function `exp(−|u|^index)`,
/// `index ∈ (0, 2]`, by the Chambers–Mallows–Stuck transform.
pub fn symmetric_stable<R: Rng + ?Sized>(index: f64, rng: &mut R) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let v = half_pi * (2.0 * rng.random::<f64>() - 1.0);
    let w: f64 = Exp1.sample(rng);
    let w = w.max(f64::MIN_POSITIVE);
    if (index - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let a = (index * v).sin() / v.cos().powf(1.0 / index);
    let b = (((1.0 - index) * v).cos() / w).powf((1.0 - index) / index);
    a * b
}

//! Goodness-of-fit tests and empirical distribution helpers.
//!
//! Kolmogorov–Smirnov thresholds are the asymptotic ones,
//! `c(level) = √(-ln(level/2)/2)`; every caller in this workspace uses
//! samples of at least a thousand points.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::poisson_ln_pmf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub level: f64,
    pub pass: bool,
    pub sample_sizes: Vec<usize>,
}

impl TestReport {
    fn new(statistic: f64, threshold: f64, level: f64, sample_sizes: Vec<usize>) -> Self {
        Self { statistic, threshold, level, pass: statistic <= threshold, sample_sizes }
    }
}

/// `c(level)` such that `P(√n D_n > c) → level`.
pub fn ks_critical_value(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

fn sorted_f64<T: Real>(samples: &[T]) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param(format!("level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// `sup_x |F̂_a(x) − F̂_b(x)|`.
pub fn ks_statistic<T: Real>(a: &[T], b: &[T]) -> f64 {
    let a = sorted_f64(a);
    let b = sorted_f64(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn ks_two_sample<T: Real>(a: &[T], b: &[T], level: f64) -> Result<TestReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("two-sample KS needs nonempty samples"));
    }
    check_level(level)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let threshold = ks_critical_value(level) * ((na + nb) / (na * nb)).sqrt();
    Ok(TestReport::new(ks_statistic(a, b), threshold, level, vec![a.len(), b.len()]))
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample<T: Real, F: Fn(f64) -> f64>(a: &[T], cdf: F, level: f64) -> Result<TestReport> {
    if a.is_empty() {
        return Err(Error::param("KS needs a nonempty sample"));
    }
    check_level(level)?;
    let xs = sorted_f64(a);
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    });
    Ok(TestReport::new(d, ks_critical_value(level) / n.sqrt(), level, vec![xs.len()]))
}

/// Observed/expected frequencies after pooling, with the degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledCells {
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

/// Pools Poisson cells so each expected count is at least `min_expected`.
///
/// The last cell is the whole upper tail, so expected mass sums to the
/// sample size.
pub fn pool_poisson_cells(counts: &[u64], lambda: f64, min_expected: f64) -> PooledCells {
    let n = counts.len() as f64;
    let max_obs = counts.iter().copied().max().unwrap_or(0);
    let kmax = max_obs.max((lambda + 12.0 * lambda.sqrt() + 20.0) as u64);
    let mut observed_k = vec![0f64; kmax as usize + 2];
    for &c in counts {
        observed_k[c as usize] += 1.0;
    }
    let mut expected_k: Vec<f64> = (0..=kmax).map(|k| n * poisson_ln_pmf(k, lambda).exp()).collect();
    let below: f64 = expected_k.iter().sum();
    expected_k.push((n - below).max(0.0));

    let mut observed = Vec::new();
    let mut expected = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (ok, ek) in observed_k.iter().zip(&expected_k) {
        o += ok;
        e += ek;
        if e >= min_expected {
            observed.push(o);
            expected.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    // Remaining tail mass joins the last full cell.
    if e > 0.0 || o > 0.0 {
        if let (Some(lo), Some(le)) = (observed.last_mut(), expected.last_mut()) {
            *lo += o;
            *le += e;
        } else {
            observed.push(o);
            expected.push(e);
        }
    }
    // Renormalize the expected vector so the totals agree exactly.
    let total: f64 = expected.iter().sum();
    if total > 0.0 {
        for x in expected.iter_mut() {
            *x *= n / total;
        }
    }
    PooledCells { observed, expected }
}

/// Pearson χ² goodness of fit of `counts` against Poisson(`lambda`).
pub fn chi_square_poisson_gof(counts: &[u64], lambda: f64, level: f64) -> Result<TestReport> {
    check_level(level)?;
    if counts.len() < 500 {
        return Err(Error::param(format!("chi-square GOF needs >= 500 counts, got {}", counts.len())));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::param(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    if lambda == 0.0 {
        let nonzero = counts.iter().filter(|&&c| c != 0).count();
        let statistic = if nonzero == 0 { 0.0 } else { f64::INFINITY };
        return Ok(TestReport::new(statistic, 0.0, level, vec![counts.len()]));
    }
    let cells = pool_poisson_cells(counts, lambda, 5.0);
    if cells.expected.len() < 2 {
        return Err(Error::param(format!("pooling left {} cell(s)", cells.expected.len())));
    }
    let statistic: f64 = cells.observed.iter().zip(&cells.expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.expected.len() - 1) as f64;
    let threshold = ChiSquared::new(df).map_err(|e| Error::param(e.to_string()))?.inverse_cdf(1.0 - level);
    Ok(TestReport::new(statistic, threshold, level, vec![counts.len()]))
}

/// Right-continuous empirical distribution function.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new<T: Real>(samples: &[T]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("ecdf of an empty sample"));
        }
        Ok(Self { sorted: sorted_f64(samples) })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn ecdf<T: Real>(samples: &[T]) -> Result<Ecdf> {
    Ecdf::new(samples)
}

/// Sample quantiles with linear interpolation between order statistics.
pub fn quantiles<T: Real>(samples: &[T], probs: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::param("quantiles of an empty sample"));
    }
    let xs = sorted_f64(samples);
    probs
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(format!("probability {p} outside [0, 1]")));
            }
            let h = (xs.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            Ok(xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo]))
        })
        .collect()
}

pub fn median<T: Real>(samples: &[T]) -> Result<f64> {
    Ok(quantiles(samples, &[0.5])?[0])
}

/// Sample mean and its standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

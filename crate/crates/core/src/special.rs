//! Special functions on `f64`.

use statrs::function::gamma::{gamma, ln_gamma};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E₁(x) = ∫_x^∞ e^{-u}/u du` for `x > 0`.
///
/// Power series below 1, Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs a positive argument, got {x}");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let k = k as f64;
            term *= -x / k;
            let add = term / k;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `a(ℓ) = argsinh(ℓ) = log(ℓ + √(1 + ℓ²))`.
pub fn argsinh(ell: f64) -> f64 {
    ell.asinh()
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

/// `log P(N = k)` for `N ~ Poisson(lambda)`, `lambda > 0`.
pub fn poisson_ln_pmf(k: u64, lambda: f64) -> f64 {
    let k = k as f64;
    k * lambda.ln() - lambda - ln_gamma(k + 1.0)
}

/// `E|Z|^p` for a standard normal `Z`, `p > -1`.
pub fn normal_abs_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma(0.5 * (p + 1.0)) / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1 / mpmath.
        assert_relative_eq!(exp_integral_e1(1.0), 0.219_383_934_395_520_27, max_relative = 1e-13);
        assert_relative_eq!(exp_integral_e1(0.5), 0.559_773_594_776_160_8, max_relative = 1e-13);
        assert_relative_eq!(exp_integral_e1(2.0), 0.048_900_510_708_061_12, max_relative = 1e-12);
        assert_relative_eq!(exp_integral_e1(20.0), 9.835_525_290_649_886e-11, max_relative = 1e-10);
        assert_relative_eq!(exp_integral_e1(1e-6), 13.238_295_893_062_49, max_relative = 1e-10);
    }

    #[test]
    fn e1_small_argument_matches_log_asymptote() {
        let x = 1e-20;
        assert_relative_eq!(exp_integral_e1(x), -EULER_GAMMA - x.ln(), max_relative = 1e-14);
    }

    #[test]
    fn argsinh_values() {
        assert_eq!(argsinh(0.0), 0.0);
        assert_relative_eq!(argsinh(1.0), (1.0 + 2f64.sqrt()).ln(), max_relative = 1e-15);
        for &l in &[0.1, 1.0, 3.5, 40.0] {
            assert!((argsinh(l).sinh() - l).abs() < 1e-12 * l.max(1.0));
        }
    }

    #[test]
    fn abs_moment_of_normal() {
        assert_relative_eq!(normal_abs_moment(1.0), (2.0 / std::f64::consts::PI).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(normal_abs_moment(2.0), 1.0, max_relative = 1e-14);
    }
}

//! Gamma-function helpers for binomial-type coefficients at large index.

use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

/// `1 / Gamma(-x)` for real `x`, finite everywhere (zero at non-negative integers).
pub fn recip_gamma_neg(x: f64) -> f64 {
    // Gamma(-x) Gamma(1 + x) = -pi / sin(pi x)
    if x >= 0.0 && x.fract() == 0.0 {
        0.0
    } else if x > -1.0 {
        -(PI * x).sin() * gamma(1.0 + x) / PI
    } else {
        1.0 / gamma(-x)
    }
}

fn bernoulli_poly(n: usize, a: f64) -> f64 {
    match n {
        2 => a * a - a + 1.0 / 6.0,
        3 => a * a * a - 1.5 * a * a + 0.5 * a,
        4 => a.powi(4) - 2.0 * a.powi(3) + a * a - 1.0 / 30.0,
        5 => a.powi(5) - 2.5 * a.powi(4) + 5.0 / 3.0 * a.powi(3) - a / 6.0,
        _ => unreachable!("only B_2..B_5 are tabulated"),
    }
}

/// `ln Gamma(x + a) - ln Gamma(x + b)` for `x + a, x + b > 0`.
///
/// Switches to the Stirling difference series when `x` is large, where the
/// direct difference of two large `ln Gamma` values would cancel.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    let big = 1e3_f64.max(20.0 * (a.abs() + b.abs()));
    if x < big {
        return ln_gamma(x + a) - ln_gamma(x + b);
    }
    let mut acc = (a - b) * x.ln();
    let mut xn = x;
    for n in 1..=4usize {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * (bernoulli_poly(n + 1, a) - bernoulli_poly(n + 1, b)) / ((n * (n + 1)) as f64 * xn);
        xn *= x;
    }
    acc
}

/// Coefficient of `s^k` in `(1 - s)^alpha`, i.e. `(-1)^k C(alpha, k)`, for `k > alpha`.
pub fn binomial_tail_coeff(alpha: f64, k: f64) -> f64 {
    recip_gamma_neg(alpha) * ln_gamma_ratio(k, -alpha, 1.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Series;

    #[test]
    fn recip_gamma_at_integers_is_zero() {
        for n in 0..5 {
            assert!(recip_gamma_neg(n as f64).abs() < 1e-15);
        }
        // Gamma(-1.5) = 4 sqrt(pi) / 3
        let g = 4.0 * PI.sqrt() / 3.0;
        assert!((recip_gamma_neg(1.5) - 1.0 / g).abs() < 1e-14);
    }

    #[test]
    fn stirling_branch_matches_direct_difference() {
        for &(a, b) in &[(-1.5, 1.0), (-2.9, 1.0), (0.3, -0.2)] {
            let x = 1500.0;
            let direct = ln_gamma(x + a) - ln_gamma(x + b);
            assert!((ln_gamma_ratio(x, a, b) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn tail_coeff_matches_recurrence() {
        let alpha = 1.7;
        let series = Series::one_minus_s_pow(alpha, 3000);
        for &k in &[5usize, 50, 999, 1000, 2999, 3000] {
            let rec = series[k];
            let direct = binomial_tail_coeff(alpha, k as f64);
            assert!((direct / rec - 1.0).abs() < 1e-11, "k = {k}: {direct} vs {rec}");
        }
    }
}

//! Numerical inversion of Laplace transforms: fixed Talbot and Gaver–Stehfest.

use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

/// Default number of Talbot nodes.
pub const TALBOT_NODES: usize = 32;

/// Default (even) number of Gaver–Stehfest terms.
pub const STEHFEST_TERMS: usize = 14;

/// Fixed-Talbot inversion of `F` at `t > 0` with `m` nodes.
///
/// The contour `s(θ) = rθ(cot θ + i)`, `r = 2m/(5t)`, wraps around the negative
/// real axis, so `F` may have a branch cut there.
pub fn talbot<F>(f: F, t: f64, m: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(t > 0.0 && m >= 2);
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let th = k as f64 * PI / m as f64;
        let cot = th.cos() / th.sin();
        let s = Complex64::new(r * th * cot, r * th);
        let sigma = th + (th * cot - 1.0) * cot;
        let term = (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    r / m as f64 * acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Stehfest weights `V_1..V_n` for even `n`.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n.is_multiple_of(2), "Stehfest needs an even number of terms");
    let half = n / 2;
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                v += (j as f64).powi(half as i32) * factorial(2 * j)
                    / (factorial(half - j) * factorial(j) * factorial(j - 1) * factorial(k - j) * factorial(2 * j - k));
            }
            if (k + half) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

/// Gaver–Stehfest inversion of `F` (real-valued on the positive axis) at `t > 0`.
pub fn gaver_stehfest<F>(f: F, t: f64, weights: &[f64]) -> f64
where
    F: Fn(f64) -> f64,
{
    assert!(t > 0.0);
    let a = LN_2 / t;
    a * weights.iter().enumerate().map(|(i, w)| w * f((i + 1) as f64 * a)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stehfest_weights_sum_to_zero() {
        let w = stehfest_weights(14);
        assert!(w.iter().sum::<f64>().abs() < 1e-6);
        assert_eq!(stehfest_weights(2), vec![2.0, -2.0]);
    }

    #[test]
    fn inverts_elementary_transforms() {
        let w = stehfest_weights(STEHFEST_TERMS);
        for t in [0.1f64, 1.0, 5.0] {
            // 1/(s+1) <-> e^{-t}
            let exact = (-t).exp();
            let tb = talbot(|s| 1.0 / (s + 1.0), t, TALBOT_NODES);
            let gs = gaver_stehfest(|s| 1.0 / (s + 1.0), t, &w);
            assert!((tb - exact).abs() < 1e-10, "talbot t = {t}");
            assert!((gs - exact).abs() < 1e-4, "stehfest t = {t}");
            // 1/s^{3/2} <-> 2 sqrt(t/π), branch point at the origin
            let exact = 2.0 * (t / PI).sqrt();
            let tb = talbot(|s| s.powf(-1.5), t, TALBOT_NODES);
            assert!((tb - exact).abs() < 1e-10 * exact.max(1.0));
        }
    }
}

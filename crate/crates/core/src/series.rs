//! Truncated power series over `f64`.
//!
//! Every operation keeps the truncation order of its left operand; coefficients
//! beyond it are dropped, never estimated.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn zeros(order: usize) -> Self {
        Series(vec![0.0; order + 1])
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least a constant term");
        Series(coeffs)
    }

    /// The series `s` truncated at `order`.
    pub fn identity(order: usize) -> Self {
        let mut c = Self::zeros(order);
        if order >= 1 {
            c.0[1] = 1.0;
        }
        c
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut c = Self::zeros(order);
        c.0[0] = value;
        c
    }

    /// Coefficients of `(1 - s)^alpha` up to `order`, by the binomial ratio recurrence.
    pub fn one_minus_s_pow(alpha: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = 1.0;
        for k in 1..=order {
            c[k] = c[k - 1] * (k as f64 - 1.0 - alpha) / k as f64;
        }
        Series(c)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.0
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c: Vec<f64> = self.0.iter().copied().take(order + 1).collect();
        c.resize(order + 1, 0.0);
        Series(c)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        Series(self.0.iter().map(|c| c * k).collect())
    }

    /// Multiplication by `s` (coefficient shift), keeping the order.
    pub fn shift_up(&self) -> Self {
        let mut c = vec![0.0; self.0.len()];
        c[1..].copy_from_slice(&self.0[..self.0.len() - 1]);
        Series(c)
    }

    /// Truncated Cauchy product.
    pub fn mul_trunc(&self, other: &Series) -> Series {
        let n = self.order();
        let b = &other.0;
        let mut out = vec![0.0; n + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            let hi = k.min(b.len() - 1);
            let mut acc = 0.0;
            for j in 0..=hi {
                acc += self.0[k - j] * b[j];
            }
            *slot = acc;
        }
        Series(out)
    }

    /// `self / den`; requires `den[0] != 0`.
    pub fn div(&self, den: &Series) -> Series {
        let d0 = den.0[0];
        assert!(d0 != 0.0, "series division by a series with zero constant term");
        let n = self.order();
        let mut q = vec![0.0; n + 1];
        for k in 0..=n {
            let hi = k.min(den.order());
            let mut acc = self.0[k];
            for j in 1..=hi {
                acc -= den.0[j] * q[k - j];
            }
            q[k] = acc / d0;
        }
        Series(q)
    }

    /// `self^alpha` for real `alpha`, valid when the constant term is positive.
    ///
    /// Uses the recurrence from `h g' = alpha h' g`, `O(J^2)`.
    pub fn powf(&self, alpha: f64) -> Series {
        let h = &self.0;
        let h0 = h[0];
        assert!(h0 > 0.0, "real power needs a positive constant term");
        let n = self.order();
        let mut g = vec![0.0; n + 1];
        g[0] = h0.powf(alpha);
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += (alpha * k as f64 - (m - k) as f64) * h[k] * g[m - k];
            }
            g[m] = acc / (m as f64 * h0);
        }
        Series(g)
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, mut e: u32) -> Series {
        let mut base = self.clone();
        let mut acc = Series::constant(1.0, self.order());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_trunc(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_trunc(&base);
            }
        }
        acc
    }

    /// Formal derivative, keeping the order (top coefficient becomes zero).
    pub fn derivative(&self) -> Series {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for k in 1..=n {
            c[k - 1] = k as f64 * self.0[k];
        }
        Series(c)
    }

    /// Formal antiderivative with zero constant term, keeping the order.
    pub fn integral(&self) -> Series {
        let n = self.order();
        let mut c = vec![0.0; n + 1];
        for k in 1..=n {
            c[k] = self.0[k - 1] / k as f64;
        }
        Series(c)
    }
}

impl Index<usize> for Series {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Series {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add<&Series> for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let mut c = self.0.clone();
        for (a, b) in c.iter_mut().zip(&rhs.0) {
            *a += b;
        }
        Series(c)
    }
}

impl Sub<&Series> for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let mut c = self.0.clone();
        for (a, b) in c.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
        Series(c)
    }
}

impl Mul<&Series> for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        self.mul_trunc(rhs)
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        self.scale(-1.0)
    }
}

//! Branching mechanisms: `f(s)`, the intensity sequence `{a_j}` and the jump laws
//! of the process and of its size-biased (Q-process) version.
//!
//! Coefficients beyond the truncation order `J` are never dropped silently: each
//! family carries an analytic tail model `f(s) = Σ_m c_m (1 - s)^{α_m}`, whose
//! coefficients are evaluated through gamma ratios, and the samplers draw from that
//! tail by Pareto-envelope rejection.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{domain, CritError, Result};
use crate::series::Series;
use crate::special::binomial_tail_coeff;
use crate::sv::{Family, ScaleFunction, ScaleModel};

/// `f(1-) = 0` for every critical mechanism.
pub const F_AT_ONE: f64 = 0.0;

/// Slack allowed on `a_j ≥ 0` for `j ≥ 2`.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// Default truncation for series work.
pub const SERIES_ORDER: usize = 1024;

/// Default table size for the samplers.
pub const SAMPLING_ORDER: usize = 1 << 16;

/// `f(s) = (1 - s) Λ(1 - s)`.
pub fn f_of<S: ScaleModel + ?Sized>(sf: &S, s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("f_of", format!("s must lie in [0, 1), got {s}")));
    }
    Ok(f_at_y(sf, 1.0 - s))
}

/// `f(1 - y) = y Λ(y)` for `y ∈ [0, 1]`; the argument is `1 - s` given directly.
pub fn f_at_y<S: ScaleModel + ?Sized>(sf: &S, y: f64) -> f64 {
    if y <= 0.0 {
        return F_AT_ONE;
    }
    y * sf.lambda(y)
}

/// `f(s) = Σ_m c_m (1 - s)^{α_m}`, exact for the built-in families.
#[derive(Debug, Clone, PartialEq)]
pub struct TailModel {
    terms: Vec<(f64, f64)>,
}

impl TailModel {
    const MAX_TERMS: usize = 400;

    pub fn new(sf: &ScaleFunction) -> Self {
        let p = sf.params();
        let (nu, a0) = (p.nu(), p.a0());
        let terms = match p.family() {
            Family::ConstantL => vec![(a0, 1.0 + nu)],
            Family::BinarySplitBaseline => vec![(a0, 2.0)],
            Family::DeltaEqualsLambda => {
                // ν a0 y^{1+ν} / (ν + a0 - a0 y^ν) = ν Σ_{m≥1} r^m y^{1+mν}
                let r = a0 / (nu + a0);
                let mut out = Vec::new();
                let mut c = nu * r;
                let mut m = 1.0;
                while c > 1e-17 * nu * r && out.len() < Self::MAX_TERMS {
                    out.push((c, 1.0 + m * nu));
                    c *= r;
                    m += 1.0;
                }
                out
            }
        };
        TailModel { terms }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// Smallest exponent `α₁`; the coefficients decay like `k^{-(1+α₁)}`.
    pub fn leading_alpha(&self) -> f64 {
        self.terms[0].1
    }

    /// `a_k` for `k > max α_m` (any `k` beyond the polynomial part).
    pub fn coeff(&self, k: f64) -> f64 {
        self.terms.iter().map(|&(c, a)| c * binomial_tail_coeff(a, k)).sum()
    }

    /// Whether summing the terms coefficient-wise is numerically safe for small
    /// indices: the mixture converges like `(r 2^ν)^m` on the unit circle.
    fn coefficientwise_stable(&self) -> bool {
        if self.terms.len() < 2 {
            return true;
        }
        let (c1, a1) = self.terms[0];
        let (c2, a2) = self.terms[1];
        let ratio = c2 / c1 * 2f64.powf(a2 - a1);
        ratio < 0.55
    }

    fn series(&self, order: usize) -> Series {
        let mut acc = Series::zeros(order);
        for &(c, a) in &self.terms {
            acc = &acc + &Series::one_minus_s_pow(a, order).scale(c);
        }
        acc
    }

    /// Leading-order `Σ_{k>J} a_k` and `Σ_{k>J} k a_k`.
    fn tail_sums_estimate(&self, order: usize) -> (f64, f64) {
        let (c, a) = self.terms[0];
        if a.fract() == 0.0 {
            return (0.0, 0.0);
        }
        let j = order as f64;
        let g = crate::special::recip_gamma_neg(a).abs() * c;
        (g * j.powf(-a) / a, g * j.powf(1.0 - a) / (a - 1.0))
    }
}

/// Raw Taylor coefficients of `f` up to `order`, without validation.
pub fn mechanism_series(sf: &ScaleFunction, order: usize) -> Series {
    let p = sf.params();
    let (nu, a0) = (p.nu(), p.a0());
    match p.family() {
        Family::ConstantL => Series::one_minus_s_pow(1.0 + nu, order).scale(a0),
        Family::BinarySplitBaseline => Series::one_minus_s_pow(2.0, order).scale(a0),
        Family::DeltaEqualsLambda => {
            let tail = TailModel::new(sf);
            if tail.coefficientwise_stable() {
                tail.series(order)
            } else {
                let num = Series::one_minus_s_pow(1.0 + nu, order).scale(nu * a0);
                let mut den = Series::one_minus_s_pow(nu, order).scale(-a0);
                den[0] += nu + a0;
                num.div(&den)
            }
        }
    }
}

/// Truncated intensities `a_0..a_J` with recorded truncation deficits.
#[derive(Debug, Clone)]
pub struct OffspringCoeffs {
    coeffs: Vec<f64>,
    tail_exponent: f64,
    mass_deficit: f64,
    mean_deficit: f64,
    deficit_bound: (f64, f64),
    tail: TailModel,
}

impl OffspringCoeffs {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Power-law decay exponent of `a_j` (infinite for finitely supported laws).
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// `|Σ_{j≤J} a_j|`, the mass carried by the tail.
    pub fn mass_deficit(&self) -> f64 {
        self.mass_deficit
    }

    /// `|Σ_{j≤J} j a_j|`, the criticality defect of the truncated sequence.
    pub fn mean_deficit(&self) -> f64 {
        self.mean_deficit
    }

    /// Declared bounds on `(mass_deficit, mean_deficit)` from the tail asymptotics.
    pub fn deficit_bound(&self) -> (f64, f64) {
        self.deficit_bound
    }

    pub fn tail(&self) -> &TailModel {
        &self.tail
    }

    /// `|a₁|`, the total jump rate of one individual.
    pub fn total_rate(&self) -> f64 {
        -self.coeffs[1]
    }

    /// Truncated polynomial `Σ_{j≤J} a_j s^j`.
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn as_series(&self) -> Series {
        Series::from_coeffs(self.coeffs.clone())
    }
}

/// Expands `f` to order `J` and validates the intensity sign pattern.
///
/// Fails with [`CritError::InvalidCoefficients`] when a `(ν, a₀)` pair does not
/// define an offspring law (possible for `DeltaEqualsLambda`).
pub fn expand_coeffs(sf: &ScaleFunction, order: usize) -> Result<OffspringCoeffs> {
    if order < 2 {
        return Err(CritError::InvalidParameter {
            name: "J",
            reason: format!("truncation order must be at least 2, got {order}"),
        });
    }
    let series = mechanism_series(sf, order);
    let coeffs = series.into_coeffs();
    if !(coeffs[0] > 0.0) {
        return Err(CritError::InvalidCoefficients { index: 0, value: coeffs[0] });
    }
    if !(coeffs[1] < 0.0) {
        return Err(CritError::InvalidCoefficients { index: 1, value: coeffs[1] });
    }
    if let Some((j, &v)) = coeffs.iter().enumerate().skip(2).find(|(_, &v)| !(v >= -NEGATIVE_SLACK)) {
        return Err(CritError::InvalidCoefficients { index: j, value: v });
    }
    let tail = TailModel::new(sf);
    // the tail itself must stay non-negative past the table
    for k in [order + 1, 2 * order, 16 * order, 1 << 40] {
        let v = tail.coeff(k as f64);
        if v < 0.0 {
            return Err(CritError::InvalidCoefficients { index: k, value: v });
        }
    }
    let mass: f64 = coeffs.iter().sum();
    let mean: f64 = coeffs.iter().enumerate().map(|(j, a)| j as f64 * a).sum();
    let (m_est, k_est) = tail.tail_sums_estimate(order);
    let slack = 1e-13 * order as f64;
    let bound = (2.0 * m_est + slack, 2.0 * k_est + slack * order as f64);
    let out = OffspringCoeffs {
        tail_exponent: if sf.family() == Family::BinarySplitBaseline {
            f64::INFINITY
        } else {
            2.0 + sf.nu()
        },
        mass_deficit: mass.abs(),
        mean_deficit: mean.abs(),
        deficit_bound: bound,
        coeffs,
        tail,
    };
    if out.mass_deficit > bound.0 {
        return Err(CritError::MassDefect {
            order,
            defect: out.mass_deficit,
            bound: bound.0,
        });
    }
    if out.mean_deficit > bound.1 {
        return Err(CritError::MassDefect {
            order,
            defect: out.mean_deficit,
            bound: bound.1,
        });
    }
    Ok(out)
}

/// Which jump law a sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpLaw {
    /// `p_k = a_k / |a₁|`, `k ≠ 1`.
    Offspring,
    /// `p_k = k a_k / |a₁|`, the size-biased law.
    SizeBiased,
}

/// Envelope-rejection sampler for indices beyond the table.
#[derive(Debug, Clone)]
struct TailSampler {
    model: TailModel,
    law: JumpLaw,
    x_min: f64,
    beta: f64,
    bound: f64,
}

impl TailSampler {
    fn weight(&self, k: f64) -> f64 {
        let a = self.model.coeff(k);
        match self.law {
            JumpLaw::Offspring => a,
            JumpLaw::SizeBiased => k * a,
        }
    }

    /// Probability that a floored Pareto draw lands on `k`.
    fn proposal(&self, k: f64) -> f64 {
        (k / self.x_min).powf(-self.beta) * -(-self.beta * (1.0 / k).ln_1p()).exp_m1()
    }

    fn new(model: TailModel, law: JumpLaw, cutoff: usize) -> Result<Self> {
        let alpha = model.leading_alpha();
        let beta = match law {
            JumpLaw::Offspring => alpha,
            JumpLaw::SizeBiased => alpha - 1.0,
        };
        let mut s = TailSampler {
            model,
            law,
            x_min: (cutoff + 1) as f64,
            beta,
            bound: 0.0,
        };
        let mut sup: f64 = 0.0;
        let lo = s.x_min.ln();
        let hi = 1e15f64.ln().max(lo + 1.0);
        for i in 0..=600 {
            let k = (lo + (hi - lo) * i as f64 / 600.0).exp().floor().max(s.x_min);
            let r = s.weight(k) / s.proposal(k);
            if !(r >= 0.0 && r.is_finite()) {
                return Err(CritError::InvalidCoefficients {
                    index: k as usize,
                    value: s.weight(k),
                });
            }
            sup = sup.max(r);
        }
        s.bound = 1.02 * sup;
        Ok(s)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        loop {
            let u: f64 = rng.random();
            // 1 - u keeps the argument in (0, 1]
            let x = self.x_min * (1.0 - u).powf(-1.0 / self.beta);
            if x >= 9.0e18 {
                return u64::MAX;
            }
            let k = x.floor();
            let v: f64 = rng.random();
            if v * self.bound * self.proposal(k) <= self.weight(k) {
                return k as u64;
            }
        }
    }
}

/// Jump-size law of one individual, `k ≠ 1`, with table up to `J` and analytic tail.
#[derive(Debug, Clone)]
pub struct OffspringDistribution {
    law: JumpLaw,
    probs: Vec<f64>,
    tail_mass: f64,
    table: WeightedAliasIndex<f64>,
    tail: Option<TailSampler>,
}

impl OffspringDistribution {
    pub fn new(coeffs: &OffspringCoeffs, law: JumpLaw) -> Result<Self> {
        let rate = coeffs.total_rate();
        let cutoff = coeffs.order();
        let mut probs: Vec<f64> = coeffs
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                if k == 1 {
                    0.0
                } else {
                    let w = match law {
                        JumpLaw::Offspring => a,
                        JumpLaw::SizeBiased => k as f64 * a,
                    };
                    w.max(0.0) / rate
                }
            })
            .collect();
        // exact tail masses from Σ a_k = Σ k a_k = 0
        let tail_mass = match law {
            JumpLaw::Offspring => -coeffs.coeffs().iter().sum::<f64>(),
            JumpLaw::SizeBiased => -coeffs.coeffs().iter().enumerate().map(|(k, a)| k as f64 * a).sum::<f64>(),
        } / rate;
        let tail_mass = tail_mass.max(0.0);
        let finite_support = coeffs.tail_exponent().is_infinite();
        let tail = if finite_support || tail_mass == 0.0 {
            None
        } else {
            Some(TailSampler::new(coeffs.tail().clone(), law, cutoff)?)
        };
        let mut weights = probs.clone();
        weights.push(if tail.is_some() { tail_mass } else { 0.0 });
        let table = WeightedAliasIndex::new(weights).map_err(|e| CritError::InvalidParameter {
            name: "offspring table",
            reason: e.to_string(),
        })?;
        if tail.is_none() {
            // renormalize away the rounding residue of finite laws
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(OffspringDistribution {
            law,
            probs,
            tail_mass: if tail.is_some() { tail_mass } else { 0.0 },
            table,
            tail,
        })
    }

    /// A finitely supported law from explicit probabilities `p_0..p_K` (`p_1` must be 0).
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 || probs[1] != 0.0 || probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(CritError::InvalidParameter {
                name: "probs",
                reason: "need non-negative probabilities with p_1 = 0".into(),
            });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(CritError::InvalidParameter {
                name: "probs",
                reason: format!("probabilities sum to {total}"),
            });
        }
        let table = WeightedAliasIndex::new(probs.clone()).map_err(|e| CritError::InvalidParameter {
            name: "probs",
            reason: e.to_string(),
        })?;
        Ok(OffspringDistribution {
            law: JumpLaw::Offspring,
            probs,
            tail_mass: 0.0,
            table,
            tail: None,
        })
    }

    pub fn law(&self) -> JumpLaw {
        self.law
    }

    /// Table probabilities `p_0..p_J` (`p_1 = 0`).
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    /// `1 - (table mass + tail mass)`.
    pub fn normalization_defect(&self) -> f64 {
        1.0 - (self.probs.iter().sum::<f64>() + self.tail_mass)
    }

    /// Draws `k ≥ 0`, `k ≠ 1`. Saturates at `u64::MAX` for astronomically large jumps.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let idx = self.table.sample(rng);
        if idx < self.probs.len() {
            idx as u64
        } else {
            match &self.tail {
                Some(t) => t.sample(rng),
                None => unreachable!("zero-weight tail entry was drawn"),
            }
        }
    }
}

/// Draws one jump `k` (new size `i + k - 1`) for the process in state `i`.
pub fn sample_offspring<R: Rng + ?Sized>(dist: &OffspringDistribution, rng: &mut R) -> u64 {
    dist.sample(rng)
}

const QKERNEL_CHECKED_ROWS: u64 = 1000;
const QKERNEL_ROW_TOL: f64 = 1e-12;

/// The jump kernel of the size-biased process: from state `i`, the jump `k`
/// has probability `(i + k - 1) a_k / (i |a₁|)`, a mixture of the offspring law
/// (weight `(i-1)/i`) and the size-biased law (weight `1/i`).
#[derive(Debug, Clone)]
pub struct QKernel {
    offspring: OffspringDistribution,
    biased: OffspringDistribution,
}

impl QKernel {
    /// Builds both alias tables and checks that rows `i ≤ 1000` sum to 1 within 1e-12.
    pub fn new(coeffs: &OffspringCoeffs) -> Result<Self> {
        let kernel = QKernel {
            offspring: OffspringDistribution::new(coeffs, JumpLaw::Offspring)?,
            biased: OffspringDistribution::new(coeffs, JumpLaw::SizeBiased)?,
        };
        for i in 1..=QKERNEL_CHECKED_ROWS {
            let defect = kernel.row_defect(i);
            if !(defect <= QKERNEL_ROW_TOL) {
                return Err(CritError::MassDefect {
                    order: coeffs.order(),
                    defect,
                    bound: QKERNEL_ROW_TOL,
                });
            }
        }
        Ok(kernel)
    }

    pub fn offspring(&self) -> &OffspringDistribution {
        &self.offspring
    }

    pub fn biased(&self) -> &OffspringDistribution {
        &self.biased
    }

    /// Probability of jump `k ≤ J` from state `i`.
    pub fn prob(&self, i: u64, k: usize) -> f64 {
        let w = 1.0 / i as f64;
        (1.0 - w) * self.offspring.probs[k] + w * self.biased.probs[k]
    }

    /// `|1 - Σ_k prob(i, k) - tail(i)|`.
    pub fn row_defect(&self, i: u64) -> f64 {
        let w = 1.0 / i as f64;
        ((1.0 - w) * self.offspring.normalization_defect() + w * self.biased.normalization_defect()).abs()
    }

    pub fn sample<R: Rng + ?Sized>(&self, i: u64, rng: &mut R) -> u64 {
        // P(biased component) = 1/i
        if i <= 1 || rng.random::<f64>() * (i as f64) < 1.0 {
            self.biased.sample(rng)
        } else {
            self.offspring.sample(rng)
        }
    }
}

/// Hill estimator of the survival-function tail index from the top `fraction` of a sample.
pub fn hill_tail_index(samples: &[u64], fraction: f64) -> f64 {
    let mut v: Vec<f64> = samples.iter().filter(|&&x| x > 0).map(|&x| x as f64).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = ((v.len() as f64 * fraction) as usize).max(2);
    let threshold = v[k].ln();
    let mean: f64 = v[..k].iter().map(|x| x.ln() - threshold).sum::<f64>() / k as f64;
    1.0 / mean
}

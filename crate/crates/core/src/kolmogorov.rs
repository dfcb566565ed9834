//! Backward Kolmogorov evolution `∂F/∂t = f(F)`, `F(0;s) = s`.
//!
//! `R = 1 - F` is integrated in logarithmic form, `d ln R/dt = -Λ(R)`, so the
//! solver tolerance is a relative accuracy on `R`. The `ConstantL` and
//! `BinarySplitBaseline` families have closed forms and `DeltaEqualsLambda` an
//! exact implicit equation; these serve as oracles and take over past
//! [`LARGE_T`]. Transition probabilities come from evolving the truncated
//! coefficient vector of `F(t;·)`.

use crate::branching::f_at_y;
use crate::error::{domain, CritError, Result};
use crate::numerics::{adaptive_simpson, bracketed_root, QUAD_ABS_FLOOR};
use crate::ode::{integrate, OdeSolution, SolveConfig};
use crate::series::Series;
use crate::sv::{Family, ScaleFunction, ScaleModel};

/// Horizon beyond which raw ODE stepping is never used.
pub const LARGE_T: f64 = 1e4;

/// Default bound on the escaped mass `1 - Σ_{j≤J} F_j(t)`.
pub const MASS_DEFECT_BOUND: f64 = 1e-3;

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Ode,
    Oracle,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Ode => "ode",
            Provenance::Oracle => "oracle",
        }
    }
}

/// `R(t;s) = 1 - F(t;s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rts {
    pub t: f64,
    pub s: f64,
    pub value: f64,
    pub provenance: Provenance,
}

impl Rts {
    pub fn f(&self) -> f64 {
        1.0 - self.value
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(op, format!("t must be finite and non-negative, got {t}")));
    }
    Ok(())
}

fn check_y(op: &'static str, y0: f64) -> Result<()> {
    if !(y0 > 0.0 && y0 <= 1.0) {
        return Err(domain(op, format!("1 - s must lie in (0, 1], got {y0}")));
    }
    Ok(())
}

fn log_form_solution<S: ScaleModel + ?Sized>(sf: &S, y0: f64, t: f64, cfg: &SolveConfig, dense: bool) -> Result<OdeSolution> {
    cfg.validate()?;
    let tol = cfg.rel_tol;
    integrate(
        |_, u, du| du[0] = -sf.lambda(u[0].exp()),
        0.0,
        &[y0.ln()],
        t,
        cfg.max_step,
        |_, _, _| tol,
        dense,
    )
}

/// `R(t)` from `R(0) = y0` by adaptive integration only (any scale model).
pub fn solve_r_ode<S: ScaleModel + ?Sized>(sf: &S, y0: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    check_y("solve_r_ode", y0)?;
    check_time("solve_r_ode", t)?;
    if t == 0.0 {
        return Ok(y0);
    }
    let sol = log_form_solution(sf, y0, t, cfg, false)?;
    Ok(sol.y_end[0].exp())
}

/// Closed-form or exact-implicit `R(t)` from `R(0) = y0`.
pub fn exact_r(sf: &ScaleFunction, y0: f64, t: f64) -> Result<f64> {
    check_y("exact_r", y0)?;
    check_time("exact_r", t)?;
    let (nu, a0) = (sf.nu(), sf.a0());
    Ok(match sf.family() {
        // R^{-ν} = y0^{-ν} + ν a0 t
        Family::ConstantL => (y0.powf(-nu) + nu * a0 * t).powf(-1.0 / nu),
        Family::BinarySplitBaseline => y0 / (1.0 + a0 * t * y0),
        Family::DeltaEqualsLambda => {
            let w = delta_w(sf, y0, t)?;
            sf.lambda_inv(1.0 / w)?.min(y0)
        }
    })
}

/// The exact solution for `DeltaEqualsLambda`, written through `w = 1/Λ(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSolution {
    /// `w₀ = 1/Λ(1 - s)`.
    pub w0: f64,
    /// `d = w - νt`, the excess over the leading linear growth.
    pub excess: f64,
    pub t: f64,
    pub nu: f64,
}

impl DeltaSolution {
    pub fn w(&self) -> f64 {
        self.nu * self.t + self.excess
    }

    /// `∫₀ᵗ δ(R(u;s)) du = w - w₀ - νt`.
    pub fn mho(&self) -> f64 {
        self.excess - self.w0
    }
}

/// Solves `w/ν - ln(νw+1)/ν² = t + w₀/ν - ln(νw₀+1)/ν²` for `w = 1/Λ(R)`.
pub fn delta_solution(sf: &ScaleFunction, y0: f64, t: f64) -> Result<DeltaSolution> {
    if sf.family() != Family::DeltaEqualsLambda {
        return Err(CritError::WrongFamily {
            op: "exact_R_deltaL",
            expected: "DeltaEqualsLambda",
        });
    }
    check_y("exact_R_deltaL", y0)?;
    check_time("exact_R_deltaL", t)?;
    let nu = sf.nu();
    let w0 = 1.0 / sf.lambda(y0);
    let c0 = w0 / nu - (nu * w0).ln_1p() / (nu * nu);
    let h = |d: f64| d - nu * c0 - (nu * nu * t + nu * d).ln_1p() / nu;
    let lo = w0 - nu * t;
    if t == 0.0 {
        return Ok(DeltaSolution { w0, excess: lo, t, nu });
    }
    // h(lo) = -νt < 0 and h grows at least linearly in d
    let base = lo.max(nu * c0);
    let mut step = 1.0 + base.abs();
    let mut hi = base + step;
    while h(hi) <= 0.0 {
        step *= 2.0;
        hi = base + step;
    }
    let d = bracketed_root("exact_R_deltaL", h, lo, hi, 1e-16, 1e-300)?;
    Ok(DeltaSolution { w0, excess: d, t, nu })
}

fn delta_w(sf: &ScaleFunction, y0: f64, t: f64) -> Result<f64> {
    Ok(delta_solution(sf, y0, t)?.w())
}

/// `R(t;s)` for the `DeltaEqualsLambda` family from the exact implicit equation.
pub fn exact_r_delta_l(sf: &ScaleFunction, s: f64, t: f64) -> Result<Rts> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("exact_R_deltaL", format!("s must lie in [0, 1), got {s}")));
    }
    let sol = delta_solution(sf, 1.0 - s, t)?;
    Ok(Rts {
        t,
        s,
        value: if t == 0.0 { 1.0 - s } else { sf.lambda_inv(1.0 / sol.w())?.min(1.0 - s) },
        provenance: Provenance::Oracle,
    })
}

/// `R(t)` from `R(0) = y0`: ODE up to [`LARGE_T`], oracle beyond.
pub fn solve_r(sf: &ScaleFunction, y0: f64, t: f64, cfg: &SolveConfig) -> Result<(f64, Provenance)> {
    if t > LARGE_T {
        Ok((exact_r(sf, y0, t)?, Provenance::Oracle))
    } else {
        Ok((solve_r_ode(sf, y0, t, cfg)?, Provenance::Ode))
    }
}

/// `R(t;s)` by integrating the backward equation.
pub fn solve_f(sf: &ScaleFunction, s: f64, t: f64, cfg: &SolveConfig) -> Result<Rts> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("solve_F", format!("s must lie in [0, 1), got {s}")));
    }
    let (value, provenance) = solve_r(sf, 1.0 - s, t, cfg)?;
    Ok(Rts { t, s, value, provenance })
}

/// `q(t) = R(t;0)`, always from the oracle when one exists.
pub fn survival(sf: &ScaleFunction, t: f64) -> Result<f64> {
    exact_r(sf, 1.0, t)
}

/// `ν(t;s) = Λ(1 - s) νt + 1`.
pub fn nu_ts<S: ScaleModel + ?Sized>(sf: &S, s: f64, t: f64) -> f64 {
    sf.lambda(1.0 - s) * sf.nu() * t + 1.0
}

/// `℧(t;s) = ∫₀ᵗ δ(R(u;s)) du` by quadrature along the dense ODE solution.
pub fn mho_quadrature<S: ScaleModel + ?Sized>(sf: &S, s: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("mho", format!("s must lie in [0, 1), got {s}")));
    }
    check_time("mho", t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let sol = log_form_solution(sf, 1.0 - s, t, cfg, true)?;
    // the integrand decays like 1/u; split at u = 1 and work in ln u beyond it
    let g = |u: f64| sf.delta(sol.eval_scalar(u).exp());
    let head = adaptive_simpson("mho", g, 0.0, t.min(1.0), 1e-11, QUAD_ABS_FLOOR)?;
    if t <= 1.0 {
        return Ok(head);
    }
    let tail = adaptive_simpson("mho", |v| v.exp() * g(v.exp()), 0.0, t.ln(), 1e-11, QUAD_ABS_FLOOR)?;
    Ok(head + tail)
}

/// `℧(t;s)`: zero for `δ ≡ 0`, exact for `DeltaEqualsLambda` past [`LARGE_T`],
/// quadrature otherwise.
pub fn mho(sf: &ScaleFunction, s: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    match sf.family() {
        Family::ConstantL | Family::BinarySplitBaseline => {
            check_time("mho", t)?;
            Ok(0.0)
        }
        Family::DeltaEqualsLambda if t > LARGE_T => Ok(delta_solution(sf, 1.0 - s, t)?.mho()),
        Family::DeltaEqualsLambda => mho_quadrature(sf, s, t, cfg),
    }
}

/// `1/Λ(R(t;s)) - 1/Λ(1 - s) - νt - ℧(t;s)`, which vanishes identically.
pub fn identity_lemma2_residual<S: ScaleModel + ?Sized>(sf: &S, s: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("identity_lemma2_residual", format!("s must lie in [0, 1), got {s}")));
    }
    let r = solve_r_ode(sf, 1.0 - s, t, cfg)?;
    let m = mho_quadrature(sf, s, t, cfg)?;
    Ok(1.0 / sf.lambda(r) - 1.0 / sf.lambda(1.0 - s) - sf.nu() * t - m)
}

/// `G(t;s) = s f(F(t;s)) / f(s)` with `y0 = 1 - s` given directly.
pub fn g_from_y(sf: &ScaleFunction, y0: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    check_y("G_of", y0)?;
    if y0 >= 1.0 {
        return Err(domain("G_of", "s must be positive"));
    }
    let (r, _) = solve_r(sf, y0, t, cfg)?;
    let s = 1.0 - y0;
    Ok(s * f_at_y(sf, r) / f_at_y(sf, y0))
}

/// `G(t;s)`, the generating function of `Q_{1j}(t)`.
pub fn g_of(sf: &ScaleFunction, s: f64, t: f64, cfg: &SolveConfig) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("G_of", format!("s must lie in (0, 1), got {s}")));
    }
    check_time("G_of", t)?;
    g_from_y(sf, 1.0 - s, t, cfg)
}

/// `|F(t+τ;s) - F(τ;F(t;s))|`.
pub fn semigroup_residual(sf: &ScaleFunction, t: f64, tau: f64, s: f64, cfg: &SolveConfig) -> Result<f64> {
    let direct = solve_f(sf, s, t + tau, cfg)?.value;
    let mid = solve_f(sf, s, t, cfg)?.value;
    let composed = solve_r(sf, mid, tau, cfg)?.0;
    Ok((direct - composed).abs())
}

/// `f(1 - R)` as a power series in `s`, given the series of `R` with `R₀ > 0`.
fn mechanism_of_r(sf: &ScaleFunction, r: &Series) -> Series {
    let (nu, a0) = (sf.nu(), sf.a0());
    match sf.family() {
        Family::ConstantL => r.powf(1.0 + nu).scale(a0),
        Family::BinarySplitBaseline => r.mul_trunc(r).scale(a0),
        Family::DeltaEqualsLambda => {
            let p = r.powf(nu);
            let num = p.mul_trunc(r).scale(nu * a0);
            let mut den = p.scale(-a0);
            den[0] += nu + a0;
            num.div(&den)
        }
    }
}

/// Truncated coefficients `F_j(t) = P_{1j}(t)`, `j ≤ J`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesState {
    t: f64,
    coeffs: Vec<f64>,
}

impl SeriesState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn p1(&self, j: usize) -> f64 {
        self.coeffs[j]
    }

    /// `1 - Σ_{j≤J} F_j(t)`, the probability mass beyond `J`.
    pub fn mass_defect(&self) -> f64 {
        1.0 - self.coeffs.iter().sum::<f64>()
    }

    pub fn min_coeff(&self) -> f64 {
        self.coeffs.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn as_series(&self) -> Series {
        Series::from_coeffs(self.coeffs.clone())
    }

    /// `P_{ij}(t)` for `i = 1..=rows`, `j = 0..=cols`: row `i` is the `i`-fold
    /// self-convolution of row 1.
    pub fn transition_rows(&self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        let cols = cols.min(self.order());
        let base = self.as_series().truncate(cols);
        let mut out = Vec::with_capacity(rows);
        let mut acc = base.clone();
        for _ in 0..rows {
            out.push(acc.coeffs().to_vec());
            acc = acc.mul_trunc(&base);
        }
        out
    }

    /// Row `i` of the transition matrix by binary exponentiation.
    pub fn transition_row(&self, i: u32) -> Vec<f64> {
        self.as_series().powi(i).into_coeffs()
    }

    /// `Q_{ij}(t) = (j/i) P_{ij}(t)` for `i = 1..=rows`, `j = 0..=cols`.
    pub fn q_rows(&self, rows: usize, cols: usize) -> Vec<Vec<f64>> {
        let mut p = self.transition_rows(rows, cols);
        for (idx, row) in p.iter_mut().enumerate() {
            let i = (idx + 1) as f64;
            for (j, v) in row.iter_mut().enumerate() {
                *v *= j as f64 / i;
            }
        }
        p
    }
}

/// Evolves the coefficient vector of `F(t;·)` truncated at `J`.
///
/// Fails with [`CritError::MassDefect`] if more than `defect_bound` of the
/// probability mass has moved beyond `J`.
pub fn evolve_series_bounded(sf: &ScaleFunction, order: usize, t: f64, cfg: &SolveConfig, defect_bound: f64) -> Result<SeriesState> {
    if order < 2 {
        return Err(CritError::InvalidParameter {
            name: "J",
            reason: format!("truncation order must be at least 2, got {order}"),
        });
    }
    check_time("evolve_series", t)?;
    cfg.validate()?;
    // state: coefficients of R(t;·) = 1 - F(t;·), starting from 1 - s
    let mut r0 = vec![0.0; order + 1];
    r0[0] = 1.0;
    r0[1] = -1.0;
    let (rel, abs) = (cfg.rel_tol, cfg.abs_tol);
    let sol = integrate(
        |_, y, dy| {
            // stage values with R₀ ≤ 0 are rejected through a non-finite error estimate
            if !(y[0] > 0.0) {
                dy.fill(f64::NAN);
                return;
            }
            let r = Series::from_coeffs(y.to_vec());
            let f = mechanism_of_r(sf, &r);
            for (d, v) in dy.iter_mut().zip(f.coeffs()) {
                *d = -v;
            }
        },
        0.0,
        &r0,
        t,
        cfg.max_step,
        |a, b, _| abs + rel * a.abs().max(b.abs()),
        false,
    )?;
    let mut coeffs: Vec<f64> = sol.y_end.iter().map(|r| -r).collect();
    coeffs[0] = 1.0 - sol.y_end[0];
    let state = SeriesState { t, coeffs };
    let defect = state.mass_defect();
    if defect > defect_bound {
        return Err(CritError::MassDefect {
            order,
            defect,
            bound: defect_bound,
        });
    }
    Ok(state)
}

pub fn evolve_series(sf: &ScaleFunction, order: usize, t: f64, cfg: &SolveConfig) -> Result<SeriesState> {
    evolve_series_bounded(sf, order, t, cfg, MASS_DEFECT_BOUND)
}

/// `Q_{ij}(t)` for `i, j ≤ J` (row 0 omitted: row `i` is at index `i - 1`).
pub fn q_matrix(sf: &ScaleFunction, order: usize, t: f64, cfg: &SolveConfig) -> Result<Vec<Vec<f64>>> {
    let state = evolve_series(sf, order, t, cfg)?;
    Ok(state.q_rows(order, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sv::{pakes_u, pakes_v, ModelParams};

    fn sf(family: Family, nu: f64, a0: f64) -> ScaleFunction {
        ScaleFunction::new(ModelParams::new(family, nu, a0).unwrap())
    }

    fn cfg() -> SolveConfig {
        SolveConfig::default()
    }

    #[test]
    fn initial_condition() {
        for fam in Family::ALL {
            let nu = if fam == Family::BinarySplitBaseline { 1.0 } else { 0.5 };
            let m = sf(fam, nu, 1.0);
            for &s in &[0.0, 0.3, 0.9] {
                assert_eq!(solve_f(&m, s, 0.0, &cfg()).unwrap().value, 1.0 - s);
            }
        }
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        assert_eq!(exact_r_delta_l(&d, 0.4, 0.0).unwrap().value, 0.6);
    }

    #[test]
    fn constant_l_closed_form() {
        let m = sf(Family::ConstantL, 0.5, 1.0);
        let r = solve_f(&m, 0.0, 2.0, &cfg()).unwrap();
        assert!((r.value - 0.25).abs() < 1e-10);
        assert_eq!(r.provenance, Provenance::Ode);
        for &t in &[0.1, 1.0, 10.0, 100.0, 1000.0] {
            let q = solve_f(&m, 0.0, t, &cfg()).unwrap().value;
            let exact = (1.0 + t / 2.0).powi(-2);
            assert!((q - exact).abs() <= 1e-8 * exact, "t = {t}");
        }
    }

    #[test]
    fn binary_split_closed_form() {
        let m = sf(Family::BinarySplitBaseline, 1.0, 1.0);
        for &s in &[0.0, 0.5, 0.9] {
            for &t in &[0.5, 10.0, 1000.0] {
                let r = solve_f(&m, s, t, &cfg()).unwrap().value;
                let resid = 1.0 / r - 1.0 / (1.0 - s) - t;
                assert!(resid.abs() <= 1e-9 * (1.0 + t), "s = {s}, t = {t}: {resid}");
            }
        }
    }

    #[test]
    fn delta_oracle_agrees_with_ode() {
        let m = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        for &s in &[0.0, 0.5, 0.9] {
            for &t in &[0.1, 1.0, 10.0, 100.0, 1000.0] {
                let ode = solve_f(&m, s, t, &cfg()).unwrap().value;
                let ex = exact_r_delta_l(&m, s, t).unwrap().value;
                assert!((ode / ex - 1.0).abs() <= 1e-7, "s = {s}, t = {t}");
            }
        }
        for &t in &[1e6, 1e8] {
            let sol = delta_solution(&m, 1.0, t).unwrap();
            assert!((sol.w() / (0.5 * t) - 1.0).abs() < 0.01);
        }
        let c = sf(Family::ConstantL, 0.5, 1.0);
        assert!(exact_r_delta_l(&c, 0.0, 1.0).is_err());
    }

    #[test]
    fn lemma2_identity() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        for &t in &[1.0, 10.0, 100.0, 1000.0] {
            assert!(identity_lemma2_residual(&c, 0.0, t, &cfg()).unwrap().abs() <= 1e-8);
        }
        for &t in &[1.0, 10.0, 100.0] {
            let r = identity_lemma2_residual(&d, 0.0, t, &cfg()).unwrap();
            assert!(r.abs() <= 1e-6, "t = {t}: {r}");
        }
    }

    #[test]
    fn mho_properties() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        assert_eq!(mho(&c, 0.0, 50.0, &cfg()).unwrap(), 0.0);
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        // quadrature against the exact value
        for &t in &[1.0, 100.0, 5000.0] {
            let q = mho_quadrature(&d, 0.0, t, &cfg()).unwrap();
            let e = delta_solution(&d, 1.0, t).unwrap().mho();
            assert!((q - e).abs() < 1e-7 * e.max(1.0), "t = {t}: {q} vs {e}");
        }
        let vals: Vec<f64> = (0..=12).map(|k| mho(&d, 0.0, 10f64.powi(k), &cfg()).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        let per_t: Vec<f64> = vals.iter().enumerate().map(|(k, v)| v / 10f64.powi(k as i32)).collect();
        assert!(per_t.windows(2).all(|w| w[1] < w[0]));
        // ν℧/ln ν(t;0) approaches 1 at logarithmic speed
        let ratio = |t: f64| 0.5 * mho(&d, 0.0, t, &cfg()).unwrap() / nu_ts(&d, 0.0, t).ln();
        let rs: Vec<f64> = [1e4, 1e6, 1e8, 1e10, 1e12].iter().map(|&t| ratio(t)).collect();
        assert!(rs.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{rs:?}");
        assert!((rs[4] - 1.0).abs() < 0.05, "{rs:?}");
    }

    #[test]
    fn monotone_in_t_and_s() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let ts = [0.0, 0.5, 2.0, 8.0, 50.0, 400.0];
        for &s in &[0.0, 0.5] {
            let r: Vec<f64> = ts.iter().map(|&t| solve_f(&d, s, t, &cfg()).unwrap().value).collect();
            assert!(r.windows(2).all(|w| w[1] < w[0]));
        }
        let r: Vec<f64> = [0.0, 0.2, 0.6, 0.95].iter().map(|&s| solve_f(&d, s, 3.0, &cfg()).unwrap().value).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn semigroup_on_grid() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        for &t in &[0.5, 5.0, 50.0] {
            for &tau in &[1.0, 20.0] {
                for &s in &[0.0, 0.9] {
                    assert!(semigroup_residual(&d, t, tau, s, &cfg()).unwrap() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn g_properties() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        assert!((g_of(&d, 0.4, 0.0, &cfg()).unwrap() - 0.4).abs() < 1e-15);
        let tight = SolveConfig::with_rel_tol(1e-13).unwrap();
        for &s in &[0.25, 0.5, 0.75] {
            for &t in &[0.5, 5.0] {
                let h = 1e-5;
                let rp = solve_f(&d, s + h, t, &tight).unwrap().value;
                let rm = solve_f(&d, s - h, t, &tight).unwrap().value;
                let fd = -s * (rp - rm) / (2.0 * h);
                let g = g_of(&d, s, t, &cfg()).unwrap();
                assert!((fd / g - 1.0).abs() < 1e-5, "s = {s}, t = {t}");
            }
            // G(t+τ;s) F(t;s) = G(t;s) G(τ;F(t;s))
            let (t, tau) = (2.0, 3.0);
            let f = solve_f(&d, s, t, &cfg()).unwrap().f();
            let lhs = g_of(&d, s, t + tau, &cfg()).unwrap() * f;
            let rhs = g_of(&d, s, t, &cfg()).unwrap() * g_of(&d, f, tau, &cfg()).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8);
        }
        assert!(g_of(&d, 0.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn pakes_representation() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        for &s in &[0.0, 0.5] {
            for &t in &[1.0, 30.0, 1000.0] {
                let r = solve_f(&c, s, t, &cfg()).unwrap().value;
                let u = pakes_u(&c, t + pakes_v(&c, 1.0 / (1.0 - s)).unwrap()).unwrap();
                assert!((1.0 / r / u - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn series_initial_and_consistency() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        let st = evolve_series(&c, 64, 0.0, &cfg()).unwrap();
        assert_eq!(st.p1(1), 1.0);
        assert!(st.coeffs().iter().enumerate().all(|(j, &v)| j == 1 || v == 0.0));
        let st = evolve_series(&c, 1024, 2.0, &cfg()).unwrap();
        assert!((st.p1(0) - 0.75).abs() < 1e-8);
        assert!((st.p1(1) - 0.125).abs() < 1e-8);
        assert!(st.eval(1.0) <= 1.0 && st.min_coeff() >= 0.0);
        // P11 = q Λ(q)/a0 for the δ = Λ family
        let d = sf(Family::DeltaEqualsLambda, 0.5, 0.1);
        for &t in &[1.0, 10.0, 100.0] {
            let st = evolve_series(&d, 1024, t, &cfg()).unwrap();
            let q = survival(&d, t).unwrap();
            assert!((st.p1(0) - (1.0 - q)).abs() < 1e-8);
            assert!((st.p1(1) - q * d.lambda(q) / d.a0()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn q_rows_and_generating_function() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        let st = evolve_series(&c, 1024, 1.0, &cfg()).unwrap();
        let q = st.q_rows(3, 1024);
        for (j, v) in q[0].iter().enumerate() {
            assert!((v - j as f64 * st.p1(j)).abs() < 1e-15);
        }
        let g: f64 = q[0].iter().enumerate().map(|(j, v)| v * 0.5f64.powi(j as i32)).sum();
        assert!((g - g_of(&c, 0.5, 1.0, &cfg()).unwrap()).abs() < 1e-9);
        // row sums fall short only by the truncated mean
        for row in &q {
            let sum: f64 = row.iter().sum();
            assert!(sum <= 1.0 + 1e-12 && sum > 0.9, "{sum}");
        }
        let row3 = st.transition_row(3);
        let p3 = st.transition_rows(3, 1024);
        for j in 0..100 {
            assert!((row3[j] - p3[2][j]).abs() < 1e-15);
        }
    }

    #[test]
    fn mass_defect_guard() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        let err = evolve_series_bounded(&c, 8, 5.0, &cfg(), 1e-6).unwrap_err();
        assert!(matches!(err, CritError::MassDefect { .. }));
    }
}

//! Asymptotic predictions and their normalized errors against exact values.
//!
//! For `DeltaEqualsLambda` every exact quantity is expressed through the excess
//! `d = 1/Λ(R) - νt` of the implicit-equation oracle, so normalized errors of
//! size `ln t / t` are formed with `ln_1p`/`exp_m1` rather than by subtracting
//! nearly equal numbers.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::branching::{f_at_y, mechanism_series};
use crate::error::{domain, CritError, Result};
use crate::exec::Execution;
use crate::kolmogorov::{delta_solution, exact_r, mho, survival, DeltaSolution};
use crate::laplace::{gaver_stehfest, stehfest_weights, talbot, STEHFEST_TERMS, TALBOT_NODES};
use crate::numerics::linear_fit;
use crate::ode::SolveConfig;
use crate::series::Series;
use crate::sv::{solve_normalizer, Family, ScaleFunction, ScaleModel};

/// Closed catalog of the formulas the laboratory evaluates. `tag()` is the
/// identifier used in reports and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// `1/R - 1/(1-s) = a₀ t` for the quadratic mechanism.
    FiniteVariance,
    /// `q(t) / f(1 - q(t)) ~ νt`.
    Zolotarev,
    /// `1/R(t;s) = U(t + V(1/(1-s)))`.
    Pakes,
    /// `R(t;s) (νt)^{1/ν} / N(t) → 1`.
    LeadingOrder,
    /// Invariant measure of the process, `Σ μ_i P_ij = μ_j`.
    InvariantMu,
    /// Closed-form survival for constant `L`.
    ClosedForm,
    /// `1/Λ(R) - 1/Λ(1-s) = νt + ℧(t;s)`.
    ExactIdentity,
    /// `℧(t;s) ≈ ln ν(t;s) / ν`.
    MhoLog,
    /// `F(t+τ;s) = F(τ;F(t;s))`.
    Semigroup,
    /// Survival probability with general correction `-℧/ν²t`.
    SurvivalGeneral,
    /// Survival probability with correction `-ln(a₀νt+1)/ν³t`.
    SurvivalDelta,
    /// `P₁₁` with general correction.
    P11General,
    /// `P₁₁` with logarithmic correction.
    P11Delta,
    /// `(νt)^{1+1/ν} G(t;s) / (π(s) N(t)) → 1`.
    QProcess,
    /// Invariant measure of the Q-process, `π(s) = s / f(s)`.
    InvariantPi,
    /// Second-order term of the Q-process generating function.
    QProcessDelta,
    /// `Σ_{j≤n} π_j ~ n^{1+ν} L_π(n) / Γ(2+ν)`.
    Tauberian,
    /// Pointwise second-order Laplace transform correction.
    LaplacePointwise,
    /// `sup_θ Δ(t;θ)`.
    LaplaceSup,
    /// Kolmogorov distance to the limit law.
    KolmogorovRate,
    /// Monte Carlo survival and Q-process cells.
    MonteCarlo,
}

impl Formula {
    pub const ALL: [Formula; 21] = [
        Formula::FiniteVariance,
        Formula::Zolotarev,
        Formula::Pakes,
        Formula::LeadingOrder,
        Formula::InvariantMu,
        Formula::ClosedForm,
        Formula::ExactIdentity,
        Formula::MhoLog,
        Formula::Semigroup,
        Formula::SurvivalGeneral,
        Formula::SurvivalDelta,
        Formula::P11General,
        Formula::P11Delta,
        Formula::QProcess,
        Formula::InvariantPi,
        Formula::QProcessDelta,
        Formula::Tauberian,
        Formula::LaplacePointwise,
        Formula::LaplaceSup,
        Formula::KolmogorovRate,
        Formula::MonteCarlo,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Formula::FiniteVariance => "1.3",
            Formula::Zolotarev => "1.4",
            Formula::Pakes => "1.6",
            Formula::LeadingOrder => "1.7",
            Formula::InvariantMu => "lemma1",
            Formula::ClosedForm => "closed",
            Formula::ExactIdentity => "2.1",
            Formula::MhoLog => "2.6",
            Formula::Semigroup => "semigroup",
            Formula::SurvivalGeneral => "1.13",
            Formula::SurvivalDelta => "1.14",
            Formula::P11General => "1.15",
            Formula::P11Delta => "1.16",
            Formula::QProcess => "1.20",
            Formula::InvariantPi => "1.21",
            Formula::QProcessDelta => "1.22",
            Formula::Tauberian => "tauber",
            Formula::LaplacePointwise => "3.13",
            Formula::LaplaceSup => "1.23",
            Formula::KolmogorovRate => "1.24",
            Formula::MonteCarlo => "mc",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Formula> {
        Formula::ALL.iter().copied().find(|f| f.tag() == tag)
    }
}

/// Leading term and relative correction of an asymptotic formula at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction {
    pub t: f64,
    pub leading: f64,
    pub correction: f64,
    pub formula: Formula,
}

impl AsymptoticPrediction {
    /// `leading · (1 + correction)`.
    pub fn value(&self) -> f64 {
        self.leading * (1.0 + self.correction)
    }
}

fn check_t(op: &'static str, t: f64) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(domain(op, format!("t must be finite and at least 1, got {t}")));
    }
    Ok(())
}

/// Normalizer value, or an error for horizons where it is undefined.
fn normalizer(sf: &ScaleFunction, t: f64) -> Result<f64> {
    Ok(solve_normalizer(sf, t)?.value)
}

/// Prediction for `q(t)`.
pub fn predict_q(sf: &ScaleFunction, t: f64, cfg: &SolveConfig) -> Result<AsymptoticPrediction> {
    check_t("predict_q", t)?;
    let (nu, a0) = (sf.nu(), sf.a0());
    let leading = normalizer(sf, t)? / (nu * t).powf(1.0 / nu);
    let (correction, formula) = match sf.family() {
        Family::DeltaEqualsLambda => (-(a0 * nu * t).ln_1p() / (nu.powi(3) * t), Formula::SurvivalDelta),
        _ => (-mho(sf, 0.0, t, cfg)? / (nu * nu * t), Formula::SurvivalGeneral),
    };
    Ok(AsymptoticPrediction {
        t,
        leading,
        correction,
        formula,
    })
}

/// Prediction for `(νt)^{1+1/ν} P₁₁(t)`, leading term `N(t)/a₀`.
pub fn predict_p11(sf: &ScaleFunction, t: f64, cfg: &SolveConfig) -> Result<AsymptoticPrediction> {
    check_t("predict_p11", t)?;
    let (nu, a0) = (sf.nu(), sf.a0());
    let leading = normalizer(sf, t)? / a0;
    let k = (1.0 + nu) / (nu * nu);
    let (correction, formula) = match sf.family() {
        Family::DeltaEqualsLambda => (-k * (a0 * nu * t).ln_1p() / (nu * t), Formula::P11Delta),
        _ => (-k * mho(sf, 0.0, t, cfg)? / t, Formula::P11General),
    };
    Ok(AsymptoticPrediction {
        t,
        leading,
        correction,
        formula,
    })
}

/// Exact `P₁₁(t) = q(t) Λ(q(t)) / a₀`.
pub fn p11_exact(sf: &ScaleFunction, t: f64) -> Result<f64> {
    let q = survival(sf, t)?;
    Ok(q * sf.lambda(q) / sf.a0())
}

fn delta_only(sf: &ScaleFunction, op: &'static str) -> Result<()> {
    if sf.family() != Family::DeltaEqualsLambda {
        return Err(CritError::WrongFamily {
            op,
            expected: "DeltaEqualsLambda",
        });
    }
    Ok(())
}

/// `1 - R(t)(νt)^{1/ν}/N(t)` from an oracle solution; exact for the δ = Λ family,
/// where `Λ^{-1}` is explicit.
fn leading_deficit(sol: &DeltaSolution) -> f64 {
    let (nu, t) = (sol.nu, sol.t);
    // R(νt)^{1/ν}/N = (1 + νd/(1 + ν²t))^{-1/ν}
    -(-(nu * sol.excess / (1.0 + nu * nu * t)).ln_1p() / nu).exp_m1()
}

/// `1 - (νt)^{1/ν} R · νt/w / N`, the deficit of `(νt)^{1+1/ν} R Λ(R) / N`.
fn density_deficit(sol: &DeltaSolution) -> f64 {
    let (nu, t) = (sol.nu, sol.t);
    let ln_ratio = -(nu * sol.excess / (1.0 + nu * nu * t)).ln_1p() / nu;
    -(ln_ratio - (sol.excess / (nu * t)).ln_1p()).exp_m1()
}

/// `(1 - q(νt)^{1/ν}/N) · ν³t / ln(a₀νt+1)`, which tends to 1.
pub fn survival_normalized_error(sf: &ScaleFunction, t: f64) -> Result<f64> {
    delta_only(sf, "survival_normalized_error")?;
    check_t("survival_normalized_error", t)?;
    let nu = sf.nu();
    let sol = delta_solution(sf, 1.0, t)?;
    Ok(leading_deficit(&sol) * nu.powi(3) * t / (sf.a0() * nu * t).ln_1p())
}

/// `(1 - (νt)^{1+1/ν}P₁₁ a₀/N) · ν³t / ((1+ν) ln(a₀νt+1))`, which tends to 1.
pub fn p11_normalized_error(sf: &ScaleFunction, t: f64) -> Result<f64> {
    delta_only(sf, "p11_normalized_error")?;
    check_t("p11_normalized_error", t)?;
    let nu = sf.nu();
    let sol = delta_solution(sf, 1.0, t)?;
    Ok(density_deficit(&sol) * nu.powi(3) * t / ((1.0 + nu) * (sf.a0() * nu * t).ln_1p()))
}

/// `π(s) = s / f(s)`, `s ∈ (0, 1)`.
pub fn pi_of<S: ScaleModel + ?Sized>(sf: &S, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("pi_of", format!("s must lie in (0, 1), got {s}")));
    }
    Ok(s / f_at_y(sf, 1.0 - s))
}

/// `(νt)^{1+1/ν} G(t;s) / (π(s) N(t))`.
pub fn qprocess_ratio(sf: &ScaleFunction, s: f64, t: f64) -> Result<f64> {
    check_t("qprocess_ratio", t)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("qprocess_ratio", format!("s must lie in (0, 1), got {s}")));
    }
    if sf.family() == Family::DeltaEqualsLambda {
        return Ok(1.0 - density_deficit(&delta_solution(sf, 1.0 - s, t)?));
    }
    // G/π = R Λ(R)
    let nu = sf.nu();
    let r = exact_r(sf, 1.0 - s, t)?;
    Ok((nu * t).powf(1.0 + 1.0 / nu) * r * sf.lambda(r) / normalizer(sf, t)?)
}

/// `ρ(t;s) · ν³t / ((1+ν) ln[Λ(1-s)νt + 1])` with `ρ = ratio - 1`; tends to `-1`.
pub fn qprocess_normalized_error(sf: &ScaleFunction, s: f64, t: f64) -> Result<f64> {
    delta_only(sf, "qprocess_normalized_error")?;
    check_t("qprocess_normalized_error", t)?;
    if !(s > 0.0 && s < 1.0) {
        return Err(domain("qprocess_normalized_error", format!("s must lie in (0, 1), got {s}")));
    }
    let nu = sf.nu();
    let rho = -density_deficit(&delta_solution(sf, 1.0 - s, t)?);
    Ok(rho * nu.powi(3) * t / ((1.0 + nu) * (sf.lambda(1.0 - s) * nu * t).ln_1p()))
}

/// `R(t;s)(νt)^{1/ν}/N(t)`.
pub fn leading_order_ratio(sf: &ScaleFunction, s: f64, t: f64) -> Result<f64> {
    check_t("leading_order_ratio", t)?;
    if sf.family() == Family::DeltaEqualsLambda {
        return Ok(1.0 - leading_deficit(&delta_solution(sf, 1.0 - s, t)?));
    }
    let nu = sf.nu();
    Ok(exact_r(sf, 1.0 - s, t)? * (nu * t).powf(1.0 / nu) / normalizer(sf, t)?)
}

/// Coefficients of the Q-process invariant measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PiMeasure {
    coeffs: Vec<f64>,
    partial: Vec<f64>,
}

impl PiMeasure {
    /// `π_0..π_J` with `π_0 = 0`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Σ_{j≤n} π_j`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.partial[n]
    }

    /// `μ_j = π_j / j`, the invariant measure of the branching process itself.
    pub fn mu(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, p)| if j == 0 { 0.0 } else { p / j as f64 })
            .collect()
    }
}

/// `π_j = [s^{j-1}] 1/f(s)` for `j ≤ J`.
pub fn pi_coeffs(sf: &ScaleFunction, order: usize) -> PiMeasure {
    let f = mechanism_series(sf, order);
    let recip = Series::constant(1.0, order).div(&f);
    let mut coeffs = vec![0.0; order + 1];
    coeffs[1..].copy_from_slice(&recip.coeffs()[..order]);
    let mut partial = Vec::with_capacity(order + 1);
    let mut acc = 0.0;
    for &c in &coeffs {
        acc += c;
        partial.push(acc);
    }
    PiMeasure { coeffs, partial }
}

/// `Σ_{j≤n} π_j · Γ(2+ν) / (n^{1+ν} L_π(n))`, with `L_π = 1/L`.
pub fn tauberian_ratio(sf: &ScaleFunction, n: usize) -> f64 {
    let pi = pi_coeffs(sf, n);
    let nu = sf.nu();
    let nf = n as f64;
    pi.partial_sum(n) * gamma(2.0 + nu) * sf.l(nf) / nf.powf(1.0 + nu)
}

/// `Ψ(θ) = (1 + θ^ν)^{-(1+1/ν)}`.
pub fn psi_limit(nu: f64, theta: f64) -> f64 {
    assert!(theta >= 0.0, "theta must be non-negative");
    (1.0 + theta.powf(nu)).powf(-(1.0 + 1.0 / nu))
}

/// `Ψ(t;θ) = G(t; exp(-θ q(t)))`, the Laplace transform of `q(t) W(t)`.
pub fn psi_finite(sf: &ScaleFunction, t: f64, theta: f64) -> Result<f64> {
    check_t("psi_finite", t)?;
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(domain("psi_finite", format!("theta must be positive, got {theta}")));
    }
    let q = survival(sf, t)?;
    let y0 = -(-theta * q).exp_m1();
    let s = (-theta * q).exp();
    let r = exact_r(sf, y0, t)?;
    Ok(s * f_at_y(sf, r) / f_at_y(sf, y0))
}

/// `R(t; exp(-θq(t))) / q(t)`, recorded but not asserted.
pub fn c_theta(sf: &ScaleFunction, t: f64, theta: f64) -> Result<f64> {
    let q = survival(sf, t)?;
    let y0 = -(-theta * q).exp_m1();
    Ok(exact_r(sf, y0, t)? / q)
}

/// `Δ(t;θ) = |Ψ(t;θ) - Ψ(θ)|`.
pub fn laplace_gap(sf: &ScaleFunction, t: f64, theta: f64) -> Result<f64> {
    Ok((psi_finite(sf, t, theta)? - psi_limit(sf.nu(), theta)).abs())
}

/// `Δ(t;θ) ν³t / ((1+ν) ln t · θ^ν/(1+θ^ν) · Ψ(θ))`, which tends to 1.
pub fn laplace_pointwise_ratio(sf: &ScaleFunction, t: f64, theta: f64) -> Result<f64> {
    let nu = sf.nu();
    let tn = theta.powf(nu);
    let scale = (1.0 + nu) / nu.powi(3) * t.ln() / t * tn / (1.0 + tn) * psi_limit(nu, theta);
    Ok(laplace_gap(sf, t, theta)? / scale)
}

/// `max_θ θ^ν Ψ(θ) / (1 + θ^ν)`, attained at `θ^ν = ν/(1+ν)`.
pub fn laplace_profile_max(nu: f64) -> f64 {
    let u = nu / (1.0 + nu);
    u / (1.0 + u) * (1.0 + u).powf(-(1.0 + 1.0 / nu))
}

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.log10(), hi.log10());
    let mut g: Vec<f64> = (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// The default grid for the supremum over `θ`: 200 points on `[1e-3, 1e3]`.
pub fn default_theta_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 200)
}

/// Supremum of `Δ(t;θ)` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSup {
    pub t: f64,
    pub sup: f64,
    pub argmax: f64,
    /// `true` when the maximum sits on the first or last grid point.
    pub at_endpoint: bool,
}

impl DeltaSup {
    /// `sup · ν³t / ((1+ν) ln t)`.
    pub fn normalized(&self, nu: f64) -> f64 {
        self.sup * nu.powi(3) * self.t / ((1.0 + nu) * self.t.ln())
    }
}

pub fn delta_sup(sf: &ScaleFunction, t: f64, grid: &[f64]) -> Result<DeltaSup> {
    delta_sup_with(sf, t, grid, Execution::default())
}

/// [`delta_sup`] with an explicit execution strategy for the grid sweep.
pub fn delta_sup_with(sf: &ScaleFunction, t: f64, grid: &[f64], exec: Execution) -> Result<DeltaSup> {
    if grid.len() < 2 {
        return Err(domain("delta_sup", "theta grid needs at least two points"));
    }
    let gaps = exec.map_slice(grid, |&th| laplace_gap(sf, t, th)).into_iter().collect::<Result<Vec<f64>>>()?;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (i, &g) in gaps.iter().enumerate() {
        if g > best.0 {
            best = (g, i);
        }
    }
    Ok(DeltaSup {
        t,
        sup: best.0,
        argmax: grid[best.1],
        at_endpoint: best.1 == 0 || best.1 == grid.len() - 1,
    })
}

/// One inverted point of the limit law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCdfPoint {
    pub x: f64,
    pub value: f64,
    pub talbot: f64,
    pub stehfest: f64,
    /// Set when the two inversions disagree by more than [`INVERSION_AGREEMENT`].
    pub flagged: bool,
}

pub const INVERSION_AGREEMENT: f64 = 1e-4;

pub const INVERSION_METHOD: &str = "fixed-talbot(32); gaver-stehfest(14) cross-check";

/// Evaluator for the limit law `D(x)` by inverting `Ψ(p)/p`.
#[derive(Debug, Clone)]
pub struct LimitCdf {
    nu: f64,
    weights: Vec<f64>,
}

impl LimitCdf {
    pub fn new(nu: f64) -> Self {
        LimitCdf {
            nu,
            weights: stehfest_weights(STEHFEST_TERMS),
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `D(x)` by fixed Talbot alone.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let nu = self.nu;
        let v = talbot(
            |p: Complex64| (Complex64::new(1.0, 0.0) + p.powf(nu)).powf(-(1.0 + 1.0 / nu)) / p,
            x,
            TALBOT_NODES,
        );
        v.clamp(0.0, 1.0)
    }

    /// `D(x)` with the Gaver–Stehfest cross-check.
    pub fn point(&self, x: f64) -> LimitCdfPoint {
        let tb = self.cdf(x);
        let nu = self.nu;
        let gs = gaver_stehfest(|p| psi_limit(nu, p) / p, x, &self.weights);
        LimitCdfPoint {
            x,
            value: tb,
            talbot: tb,
            stehfest: gs,
            flagged: (tb - gs).abs() > INVERSION_AGREEMENT,
        }
    }
}

/// `D(x)` on a grid of positive points.
pub fn d_limit(nu: f64, x_grid: &[f64]) -> Result<Vec<LimitCdfPoint>> {
    if let Some(&x) = x_grid.iter().find(|&&x| !(x > 0.0)) {
        return Err(domain("d_limit", format!("grid points must be positive, got {x}")));
    }
    let inv = LimitCdf::new(nu);
    Ok(x_grid.iter().map(|&x| inv.point(x)).collect())
}

/// One row of a residual report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub t: f64,
    pub exact: f64,
    pub predicted: f64,
    pub normalized_error: f64,
}

impl Record {
    /// `|exact / predicted - 1|`.
    pub fn relative_residual(&self) -> f64 {
        (self.exact / self.predicted - 1.0).abs()
    }
}

/// Residual records of one formula, sorted by `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub formula: Formula,
    records: Vec<Record>,
    /// Explicit residual used by rate fits; defaults to the relative residual.
    residuals: Vec<f64>,
}

impl VerifyReport {
    pub fn new(formula: Formula) -> Self {
        VerifyReport {
            formula,
            records: Vec::new(),
            residuals: Vec::new(),
        }
    }

    /// Inserts a record, keeping the order in `t`. Non-finite records are rejected.
    pub fn push(&mut self, rec: Record) -> Result<()> {
        self.push_with_residual(rec, rec.relative_residual())
    }

    pub fn push_with_residual(&mut self, rec: Record, residual: f64) -> Result<()> {
        if ![rec.t, rec.exact, rec.predicted, rec.normalized_error, residual].iter().all(|v| v.is_finite()) {
            return Err(domain("VerifyReport", format!("non-finite record at t = {}", rec.t)));
        }
        let at = self.records.partition_point(|r| r.t <= rec.t);
        self.records.insert(at, rec);
        self.residuals.insert(at, residual);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

/// Regressor for rate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateScale {
    /// `log residual` against `log t`.
    Power,
    /// `log residual` against `log(ln t / t)`.
    LogOverT,
}

impl RateScale {
    fn x(self, t: f64) -> f64 {
        match self {
            RateScale::Power => t.ln(),
            RateScale::LogOverT => (t.ln() / t).ln(),
        }
    }
}

/// Least-squares rate fit on log scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    /// `exp(intercept)`: residual ≈ constant · regressor^slope.
    pub constant: f64,
    pub r2: f64,
}

impl RateFit {
    pub const MIN_R2: f64 = 0.99;

    pub fn accepted(&self) -> bool {
        self.r2 >= Self::MIN_R2
    }
}

/// Records with `t` below this are excluded from rate fits.
pub const BURN_IN: f64 = 1e2;

fn fit_points(report: &VerifyReport, scale: RateScale, min_points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (rec, &res) in report.records().iter().zip(report.residuals()) {
        if rec.t < BURN_IN || !(res > 0.0) {
            continue;
        }
        xs.push(scale.x(rec.t));
        ys.push(res.ln());
    }
    if xs.len() < min_points {
        return Err(CritError::DegenerateFit(format!("{} usable records, need at least {min_points}", xs.len())));
    }
    let (t_lo, t_hi) = (
        report.records().iter().find(|r| r.t >= BURN_IN).map(|r| r.t).unwrap_or(1.0),
        report.records().last().map(|r| r.t).unwrap_or(1.0),
    );
    if (t_hi / t_lo).log10() < 2.0 - 1e-12 {
        return Err(CritError::DegenerateFit(format!("records span {t_lo:e}..{t_hi:e}, need two decades")));
    }
    Ok((xs, ys))
}

/// Free-slope fit of `log|residual|`; needs ≥ 5 records past the burn-in over ≥ 2 decades.
pub fn fit_rate(report: &VerifyReport, scale: RateScale) -> Result<RateFit> {
    let (xs, ys) = fit_points(report, scale, 5)?;
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(RateFit {
        slope,
        constant: intercept.exp(),
        r2,
    })
}

/// Constant of the fit with the slope pinned, `exp(mean(log res - slope·x))`.
pub fn fit_constant(report: &VerifyReport, scale: RateScale, slope: f64) -> Result<f64> {
    let (xs, ys) = fit_points(report, scale, 2)?;
    let mean = xs.iter().zip(&ys).map(|(x, y)| y - slope * x).sum::<f64>() / xs.len() as f64;
    Ok(mean.exp())
}

/// Survival records `(t, q_exact, leading)` for the rate fit on a log grid of `t`.
pub fn survival_report(sf: &ScaleFunction, ts: &[f64]) -> Result<VerifyReport> {
    let mut rep = VerifyReport::new(if sf.family() == Family::DeltaEqualsLambda {
        Formula::SurvivalDelta
    } else {
        Formula::SurvivalGeneral
    });
    for &t in ts {
        let nu = sf.nu();
        let leading = normalizer(sf, t)? / (nu * t).powf(1.0 / nu);
        let exact = survival(sf, t)?;
        let (err, residual) = if sf.family() == Family::DeltaEqualsLambda {
            let sol = delta_solution(sf, 1.0, t)?;
            (survival_normalized_error(sf, t)?, leading_deficit(&sol))
        } else {
            let r = (exact / leading - 1.0).abs();
            (r * t, r)
        };
        rep.push_with_residual(
            Record {
                t,
                exact,
                predicted: leading,
                normalized_error: err,
            },
            residual,
        )?;
    }
    Ok(rep)
}

/// Baseline records: the quadratic-mechanism identity and the Zolotarev ratio.
pub fn baseline_checks(sf: &ScaleFunction, ts: &[f64], s: f64, cfg: &SolveConfig) -> Result<VerifyReport> {
    if !(0.0..1.0).contains(&s) {
        return Err(domain("baseline_checks", format!("s must lie in [0, 1), got {s}")));
    }
    let mut rep;
    if sf.family() == Family::BinarySplitBaseline {
        rep = VerifyReport::new(Formula::FiniteVariance);
        for &t in ts {
            let r = crate::kolmogorov::solve_f(sf, s, t, cfg)?.value;
            let exact = 1.0 / r - 1.0 / (1.0 - s);
            let predicted = sf.a0() * t;
            rep.push_with_residual(
                Record {
                    t,
                    exact,
                    predicted,
                    normalized_error: (exact - predicted) / (1.0 + t),
                },
                (exact - predicted).abs(),
            )?;
        }
    } else {
        rep = VerifyReport::new(Formula::Zolotarev);
        for &t in ts {
            let q = survival(sf, t)?;
            // q / f(1 - q) = 1 / Λ(q)
            let exact = q / f_at_y(sf, q);
            let predicted = sf.nu() * t;
            rep.push(Record {
                t,
                exact,
                predicted,
                normalized_error: exact / predicted,
            })?;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kolmogorov::{g_of, solve_f};
    use crate::numerics::adaptive_simpson;
    use crate::sv::ModelParams;

    fn sf(family: Family, nu: f64, a0: f64) -> ScaleFunction {
        ScaleFunction::new(ModelParams::new(family, nu, a0).unwrap())
    }

    fn cfg() -> SolveConfig {
        SolveConfig::default()
    }

    #[test]
    fn tags_round_trip() {
        for f in Formula::ALL {
            assert_eq!(Formula::from_tag(f.tag()), Some(f));
        }
        assert_eq!(Formula::from_tag("9.99"), None);
    }

    #[test]
    fn constant_l_survival_prediction() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        for &t in &[10.0, 1e3, 1e5] {
            let p = predict_q(&c, t, &cfg()).unwrap();
            assert!((p.leading - (t / 2.0).powi(-2)).abs() < 1e-15 * p.leading);
            assert_eq!(p.correction, 0.0);
            let exact = (1.0 + t / 2.0).powi(-2);
            let e = (exact / p.leading - 1.0) * t;
            assert!(e.abs() < 5.0, "t = {t}");
        }
    }

    #[test]
    fn delta_survival_error_tends_to_one() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let ts = log_grid(1e4, 1e8, 9);
        let e: Vec<f64> = ts.iter().map(|&t| survival_normalized_error(&d, t).unwrap()).collect();
        assert!(e.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{e:?}");
        assert!((0.9..=1.1).contains(&e[8]), "{e:?}");
        // against direct subtraction at moderate t
        let t = 1e4;
        let p = predict_q(&d, t, &cfg()).unwrap();
        let q = survival(&d, t).unwrap();
        let direct = (1.0 - q / p.leading) * 0.125 * t / (0.5 * t + 1.0).ln();
        assert!((direct - e[0]).abs() < 1e-6);
        // the corrected prediction is closer than the leading term
        assert!((p.value() - q).abs() < (p.leading - q).abs());
    }

    #[test]
    fn p11_checks() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        assert!((p11_exact(&c, 2.0).unwrap() - 0.125).abs() < 1e-15);
        // (νt)^{1+1/ν} P₁₁ vs N/a₀ = 1, the gap decaying like 1/t
        let gap: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&t: &f64| ((0.5 * t).powi(3) * p11_exact(&c, t).unwrap() - 1.0).abs() * t)
            .collect();
        assert!(gap.iter().all(|g| (g / gap[2] - 1.0).abs() < 0.5), "{gap:?}");
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let e = p11_normalized_error(&d, 1e8).unwrap();
        assert!((0.85..=1.15).contains(&e), "{e}");
        let pred = predict_p11(&d, 1e6, &cfg()).unwrap();
        assert_eq!(pred.formula, Formula::P11Delta);
        assert!(pred.correction < 0.0);
    }

    #[test]
    fn pi_measure() {
        let c = sf(Family::ConstantL, 0.5, 1.0);
        let r: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&s| pi_of(&c, s).unwrap() / s).collect();
        assert!((r[2] - 1.0).abs() < 1e-5);
        let pi = pi_coeffs(&c, 200);
        let exact = Series::one_minus_s_pow(-1.5, 200);
        for j in 1..=200 {
            assert!((pi.coeffs()[j] / exact[j - 1] - 1.0).abs() < 1e-12);
        }
        assert!(pi.coeffs().iter().all(|&p| p >= 0.0));
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let pi = pi_coeffs(&d, 100);
        assert!((pi.coeffs()[1] - 1.0).abs() < 1e-15);
        assert!((pi_of(&d, 0.3).unwrap() - pi.coeffs().iter().enumerate().map(|(j, p)| p * 0.3f64.powi(j as i32)).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn tauberian_sums() {
        let c = tauberian_ratio(&sf(Family::ConstantL, 0.5, 1.0), 10_000);
        assert!((c - 1.0).abs() < 0.05, "{c}");
        let d = tauberian_ratio(&sf(Family::DeltaEqualsLambda, 0.5, 1.0), 10_000);
        assert!((d - 1.0).abs() < 0.05, "{d}");
    }

    #[test]
    fn qprocess_ratio_and_second_order() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        for &s in &[0.25, 0.5, 0.75] {
            let r = qprocess_ratio(&d, s, 1e6).unwrap();
            assert!((r - 1.0).abs() < 0.02);
            let e = qprocess_normalized_error(&d, s, 1e6).unwrap();
            assert!((e + 1.0).abs() < 0.2, "s = {s}: {e}");
        }
        // exact route agrees with the ODE-based G at moderate t
        let t = 50.0;
        let n = solve_normalizer(&d, t).unwrap().value;
        let g = g_of(&d, 0.5, t, &cfg()).unwrap();
        let via_ode = (0.5 * t).powf(3.0) * g / (pi_of(&d, 0.5).unwrap() * n);
        assert!((via_ode / qprocess_ratio(&d, 0.5, t).unwrap() - 1.0).abs() < 1e-8);
        let c = sf(Family::ConstantL, 0.5, 1.0);
        assert!((qprocess_ratio(&c, 0.5, 1e6).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn leading_order_recovery() {
        for m in [sf(Family::ConstantL, 0.5, 1.0), sf(Family::DeltaEqualsLambda, 0.5, 1.0)] {
            for &s in &[0.0, 0.5, 0.9] {
                let r: Vec<f64> = [1e3, 1e5, 1e7].iter().map(|&t| leading_order_ratio(&m, s, t).unwrap()).collect();
                assert!((r[2] - 1.0).abs() < 1e-4, "{r:?}");
                assert!((r[2] - 1.0).abs() <= (r[0] - 1.0).abs());
            }
        }
    }

    #[test]
    fn psi_values() {
        assert_eq!(psi_limit(0.5, 0.0), 1.0);
        assert!((psi_limit(0.5, 1.0) - 0.125).abs() < 1e-16);
        let g = log_grid(1e-3, 1e3, 50);
        assert!(g.windows(2).all(|w| psi_limit(0.5, w[1]) < psi_limit(0.5, w[0])));
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        for &th in &[0.1, 1.0, 10.0] {
            let gaps: Vec<f64> = [1e2, 1e3, 1e4, 1e5, 1e6].iter().map(|&t| laplace_gap(&d, t, th).unwrap()).collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
            for &t in &[1e2, 1e6] {
                let p = psi_finite(&d, t, th).unwrap();
                assert!(p > 0.0 && p <= 1.0);
            }
        }
        let r = laplace_pointwise_ratio(&d, 1e6, 1.0).unwrap();
        assert!((r - 1.0).abs() < 0.2, "{r}");
        // finite-t transform is completely monotone in the weak sense
        let vals: Vec<f64> = g.iter().map(|&th| psi_finite(&d, 1e3, th).unwrap()).collect();
        let d1: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(d1.iter().all(|&x| x < 0.0));
        // second differences of a convex function on a log grid: compare slopes in θ
        let slopes: Vec<f64> = vals.windows(2).zip(g.windows(2)).map(|(v, x)| (v[1] - v[0]) / (x[1] - x[0])).collect();
        assert!(slopes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn psi_finite_matches_ode_route() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let t = 20.0;
        let q = survival(&d, t).unwrap();
        let s = (-q).exp();
        let via_ode = g_of(&d, s, t, &cfg()).unwrap();
        assert!((psi_finite(&d, t, 1.0).unwrap() - via_ode).abs() < 1e-9);
        assert!(psi_finite(&d, 0.5, 1.0).is_err());
    }

    #[test]
    fn delta_sup_behaviour() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let grid = default_theta_grid();
        assert_eq!(grid.len(), 200);
        let sups: Vec<DeltaSup> = [1e3, 1e4, 1e5, 1e6, 1e7].iter().map(|&t| delta_sup(&d, t, &grid).unwrap()).collect();
        assert!(sups.windows(2).all(|w| w[1].sup < w[0].sup));
        assert!(sups.iter().all(|s| !s.at_endpoint));
        // Δ → 0 as θ → 0
        let small: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&th| laplace_gap(&d, 1e4, th).unwrap()).collect();
        assert!(small.windows(2).all(|w| w[1] < w[0]));
        // the supremum follows the pointwise profile's maximum
        let ratio = sups[3].normalized(0.5) / laplace_profile_max(0.5);
        assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
        let cth = c_theta(&d, 1e6, 1.0).unwrap();
        assert!(cth > 0.0 && cth < 1.0);
    }

    #[test]
    fn limit_cdf() {
        let pts = d_limit(0.5, &log_grid(1e-3, 1e3, 40)).unwrap();
        assert!(pts.iter().all(|p| !p.flagged));
        assert!(pts.windows(2).all(|w| w[1].value >= w[0].value));
        assert!(pts[0].value < 1e-3);
        // 1 - D(x) ~ (1 + 1/ν) x^{-ν} / Γ(1-ν)
        let inv = LimitCdf::new(0.5);
        let c = 3.0 / std::f64::consts::PI.sqrt();
        let tails: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&x: &f64| (1.0 - inv.cdf(x)) * x.sqrt() / c).collect();
        assert!(tails.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()), "{tails:?}");
        assert!((tails[2] - 1.0).abs() < 0.01);
        assert!(d_limit(0.5, &[0.0]).is_err());
    }

    #[test]
    fn limit_cdf_round_trip() {
        let inv = LimitCdf::new(0.5);
        for &th in &[0.5, 1.0, 2.0] {
            // ∫ e^{-θx} dD(x) = θ ∫ e^{-θx} D(x) dx, in x = u²
            let upper = (60.0f64 / th).sqrt();
            let integral = adaptive_simpson("round trip", |u| 2.0 * u * (-th * u * u).exp() * inv.cdf(u * u), 0.0, upper, 1e-9, 1e-13).unwrap();
            assert!((th * integral - psi_limit(0.5, th)).abs() < 1e-3);
        }
    }

    #[test]
    fn baselines() {
        let b = sf(Family::BinarySplitBaseline, 1.0, 1.0);
        let rep = baseline_checks(&b, &[1.0, 10.0, 100.0], 0.5, &cfg()).unwrap();
        assert!(rep.residuals().iter().all(|&r| r <= 1e-9 * 101.0));
        for m in [sf(Family::ConstantL, 0.5, 1.0), sf(Family::DeltaEqualsLambda, 0.5, 1.0)] {
            let rep = baseline_checks(&m, &[1e6], 0.0, &cfg()).unwrap();
            assert!((rep.records()[0].normalized_error - 1.0).abs() < 0.01);
        }
        assert!(solve_f(&b, 0.5, 1.0, &cfg()).is_ok());
    }

    #[test]
    fn synthetic_rate_fit() {
        let mut rep = VerifyReport::new(Formula::ClosedForm);
        for t in log_grid(1e2, 1e6, 9) {
            rep.push(Record {
                t,
                exact: 1.0 + 3.0 / t,
                predicted: 1.0,
                normalized_error: 3.0,
            })
            .unwrap();
        }
        let fit = fit_rate(&rep, RateScale::Power).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.05);
        assert!(fit.accepted());
        assert!((fit.constant / 3.0 - 1.0).abs() < 1e-3);
        let mut short = VerifyReport::new(Formula::ClosedForm);
        for t in [100.0, 200.0, 300.0, 400.0, 500.0] {
            short.push(Record { t, exact: 2.0, predicted: 1.0, normalized_error: 1.0 }).unwrap();
        }
        assert!(fit_rate(&short, RateScale::Power).is_err());
        assert!(rep.push(Record { t: 5.0, exact: f64::NAN, predicted: 1.0, normalized_error: 0.0 }).is_err());
    }

    #[test]
    fn survival_rate_fit_constant() {
        let d = sf(Family::DeltaEqualsLambda, 0.5, 1.0);
        let rep = survival_report(&d, &log_grid(1e4, 1e8, 9)).unwrap();
        let fit = fit_rate(&rep, RateScale::LogOverT).unwrap();
        assert!(fit.accepted(), "{fit:?}");
        let c = fit_constant(&rep, RateScale::LogOverT, 1.0).unwrap();
        assert!((c * 0.125 - 1.0).abs() < 0.15, "{c}");
    }
}

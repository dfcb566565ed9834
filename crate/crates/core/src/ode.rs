//! Dormand–Prince 5(4) integrator with step-size control and dense output.

use crate::error::{CritError, Result};

/// Integration method tag. Only the embedded Dormand–Prince pair is provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    DormandPrince45,
}

/// Tolerances for the adaptive solvers.
///
/// For the scalar survival solves `rel_tol` is the relative accuracy of `R(t;s)`;
/// for vector states the usual mixed error norm `abs_tol + rel_tol * |y|` is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub method: Method,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_step: f64::INFINITY,
            method: Method::DormandPrince45,
        }
    }
}

impl SolveConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Result<Self> {
        let cfg = SolveConfig {
            rel_tol,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(1e-14..=1e-3).contains(&v) {
                return Err(CritError::InvalidParameter {
                    name,
                    reason: format!("{v:e} outside [1e-14, 1e-3]"),
                });
            }
        }
        if !(self.max_step > 0.0) {
            return Err(CritError::InvalidParameter {
                name: "max_step",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
#[cfg(test)]
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output polynomial: y(t + th) = y + h * sum_i K_i * sum_j P[i][j] th^(j+1)
const P: [[f64; 4]; 7] = [
    [1.0, -8048581381.0 / 2820520608.0, 8663915743.0 / 2820520608.0, -12715105075.0 / 11282082432.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799.0, -68118460800.0 / 10900136933.0, 87487479700.0 / 32700410799.0],
    [0.0, -1754552775.0 / 470086768.0, 14199869525.0 / 1410260304.0, -10690763975.0 / 1880347072.0],
    [0.0, 127303824393.0 / 49829197408.0, -318862633887.0 / 49829197408.0, 701980252875.0 / 199316789632.0],
    [0.0, -282668133.0 / 205662961.0, 2019193451.0 / 616988883.0, -1453857185.0 / 822651844.0],
    [0.0, 40617522.0 / 29380423.0, -110615467.0 / 29380423.0, 69997945.0 / 29380423.0],
];

const MAX_STEPS: usize = 1_000_000;

/// One accepted step, kept for dense output.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    y0: Vec<f64>,
    k: [Vec<f64>; 7],
}

/// Result of an integration: final state plus (optionally) the dense trajectory.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t_end: f64,
    pub y_end: Vec<f64>,
    pub steps: usize,
    segments: Vec<Segment>,
}

impl OdeSolution {
    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty()
    }

    /// Interpolates the state at `t` inside the integrated range.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        assert!(self.has_dense_output(), "solution was computed without dense output");
        let idx = match self
            .segments
            .binary_search_by(|seg| seg.t0.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx];
        let th = ((t - seg.t0) / seg.h).clamp(0.0, 1.0);
        let pw = [th, th * th, th * th * th, th * th * th * th];
        let mut w = [0.0; 7];
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = P[i].iter().zip(pw).map(|(p, q)| p * q).sum();
        }
        for (d, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..7 {
                acc += w[i] * seg.k[i][d];
            }
            *slot = seg.y0[d] + seg.h * acc;
        }
    }

    pub fn eval_scalar(&self, t: f64) -> f64 {
        let mut y = [0.0];
        self.eval(t, &mut y);
        y[0]
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 >= t0`.
///
/// `error_scale(y_old, y_new, i)` supplies the per-component tolerance.
pub fn integrate<F, S>(mut rhs: F, t0: f64, y0: &[f64], t1: f64, max_step: f64, error_scale: S, dense: bool) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: Fn(f64, f64, usize) -> f64,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut segments = Vec::new();
    if t1 <= t0 {
        return Ok(OdeSolution {
            t_end: t0,
            y_end: y,
            steps: 0,
            segments,
        });
    }
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    rhs(t, &y, &mut k[0]);

    // initial step (Hairer–Wanner heuristic)
    let d0 = rms(&y, |i| error_scale(y[i], y[i], i));
    let d1 = rms(&k[0], |i| error_scale(y[i], y[i], i));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t1 - t0).min(max_step);

    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut steps = 0usize;
    let mut fail_streak = 0;
    while t < t1 {
        if steps >= MAX_STEPS {
            return Err(CritError::TooManySteps { steps });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(CritError::StepSizeUnderflow { t });
        }
        for s in 1..7 {
            for d in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][d];
                }
                ytmp[d] = y[d] + h * acc;
            }
            rhs(t + C[s] * h, &ytmp, &mut k[s]);
        }
        // stage 6 evaluated at the 5th-order solution (FSAL)
        ynew.copy_from_slice(&ytmp);
        let mut err2 = 0.0;
        let mut finite = true;
        for d in 0..n {
            let mut e = 0.0;
            for i in 0..7 {
                e += E[i] * k[i][d];
            }
            let sc = error_scale(y[d], ynew[d], d);
            let r = h * e / sc;
            err2 += r * r;
            finite &= ynew[d].is_finite();
        }
        let err = if finite { (err2 / n as f64).sqrt() } else { f64::INFINITY };
        if err <= 1.0 {
            if dense {
                segments.push(Segment {
                    t0: t,
                    h,
                    y0: y.clone(),
                    k: k.clone(),
                });
            }
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            steps += 1;
            fail_streak = 0;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * fac).min(max_step);
        } else {
            fail_streak += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= if fail_streak > 3 { fac.min(0.5) } else { fac };
        }
    }
    Ok(OdeSolution {
        t_end: t1,
        y_end: y,
        steps,
        segments,
    })
}

fn rms(v: &[f64], scale: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = v.iter().enumerate().map(|(i, x)| (x / scale(i)).powi(2)).sum();
    (s / v.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_consistency() {
        for (s, row) in A.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            assert!((sum - C[s]).abs() < 1e-14, "row {s}");
        }
        for i in 0..7 {
            let at_one: f64 = P[i].iter().sum();
            assert!((at_one - B[i]).abs() < 1e-14, "dense row {i}");
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_and_dense_output() {
        let sol = integrate(
            |_, y, dy| dy[0] = -y[0],
            0.0,
            &[1.0],
            10.0,
            f64::INFINITY,
            |a, b, _| 1e-13 + 1e-11 * a.abs().max(b.abs()),
            true,
        )
        .unwrap();
        assert!((sol.y_end[0] / (-10f64).exp() - 1.0).abs() < 1e-9);
        for &t in &[0.05, 1.3, 4.44, 9.999] {
            let v = sol.eval_scalar(t);
            assert!((v - (-t).exp()).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn config_bounds() {
        assert!(SolveConfig::with_rel_tol(1e-15).is_err());
        assert!(SolveConfig::with_rel_tol(1e-2).is_err());
        assert!(SolveConfig::with_rel_tol(1e-8).is_ok());
    }
}

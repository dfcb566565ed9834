//! The `solve`, `simulate`, `verify`, `rates` and `report` commands.
//!
//! Every command computes its rows first and writes them from a single place,
//! so files are byte-identical across runs and thread counts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::asymptotics::{fit_constant, fit_rate, pi_of, survival_report, Formula, RateScale};
use crate::branching::SAMPLING_ORDER;
use crate::exec::Execution;
use crate::kolmogorov::{evolve_series, g_from_y, solve_r, survival};
use crate::simulator::{block_rng, simulate_mbp, survival_curve, write_trajectories, McRun, SimModel};
use crate::sv::{solve_normalizer, Family, ScaleFunction, ScaleModel};

use super::config::ExperimentConfig;
use super::criteria::{self, CriterionResult, SuiteContext};
use super::report::{fmt_float, read_rows, write_rows, Method, ReportRow};
use super::{exit, HarnessError};

type Result<T> = std::result::Result<T, HarnessError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    Ok((path, BufWriter::new(file)))
}

fn write_report(dir: &Path, name: &str, rows: &[ReportRow]) -> Result<PathBuf> {
    let (path, w) = create(dir, name)?;
    write_rows(w, rows).map_err(|e| HarnessError::Io {
        path: path.clone(),
        source: std::io::Error::other(e),
    })?;
    Ok(path)
}

/// `N(t)/(νt)^{1/ν}` where the normalizer is defined.
fn leading_survival(sf: &ScaleFunction, t: f64) -> Option<f64> {
    if t < 1.0 {
        return None;
    }
    solve_normalizer(sf, t).ok().map(|n| n.leading_survival(sf.nu()))
}

/// Engine sweeps of `R(t;s)` and `G(t;s)`, plus an optional block of `P_ij`.
pub fn cmd_solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let sf = ScaleFunction::new(cfg.params);
    let nu = sf.nu();
    let mut rows = Vec::new();
    for &s in &cfg.s_list {
        let id = format!("{}/solve/s={s}", cfg.experiment);
        for &t in &cfg.t_grid {
            let (r, prov) = solve_r(&sf, 1.0 - s, t, &cfg.solve)?;
            let mut row = ReportRow::new(id.clone(), Formula::LeadingOrder, t, r, prov.into());
            if let Some(lead) = leading_survival(&sf, t) {
                row = row.predicted(lead).normalized(r / lead - 1.0);
            }
            rows.push(row);
            if s > 0.0 {
                let g = g_from_y(&sf, 1.0 - s, t, &cfg.solve)?;
                let mut row = ReportRow::new(id.clone(), Formula::QProcess, t, g, prov.into());
                if let Some(lead) = leading_survival(&sf, t) {
                    let pred = pi_of(&sf, s)? * lead / (nu * t);
                    row = row.predicted(pred).normalized(g / pred - 1.0);
                }
                rows.push(row);
            }
        }
    }
    let mut written = vec![write_report(out_dir, "solve.csv", &rows)?];
    if cfg.p_rows > 0 {
        let t = *cfg.t_grid.last().unwrap();
        let st = evolve_series(&sf, cfg.series_order, t, &cfg.solve)?;
        let (path, mut w) = create(out_dir, "transition.csv")?;
        let mut body = String::from("i,j,t,p_ij\n");
        for (idx, row) in st.transition_rows(cfg.p_rows, cfg.p_cols - 1).iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                body.push_str(&format!("{},{j},{},{}\n", idx + 1, fmt_float(t), fmt_float(*v)));
            }
        }
        w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Monte Carlo survival and mean-size estimates on the time grid.
pub fn cmd_simulate(cfg: &ExperimentConfig, out_dir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let seed = cfg.require_seed()?;
    let sf = ScaleFunction::new(cfg.params);
    let model = SimModel::new(&sf, SAMPLING_ORDER)?;
    let run = McRun::new(cfg.mc_n, seed).with_cap(cfg.cap).with_exec(exec);
    let summary = survival_curve(&model, cfg.i0, &cfg.t_grid, &run)?;
    let mut rows = Vec::new();
    let i0 = cfg.i0 as f64;
    for (k, &t) in cfg.t_grid.iter().enumerate() {
        let est = summary.survival[k];
        let exact_q = if t > 0.0 { survival(&sf, t)? } else { 1.0 };
        let pred = -(cfg.i0 as f64 * (-exact_q).ln_1p()).exp_m1();
        let mut row = ReportRow::new(format!("{}/simulate/survival/i0={}", cfg.experiment, cfg.i0), Formula::MonteCarlo, t, est.value, Method::Mc)
            .predicted(pred)
            .stderr(est.stderr);
        if est.stderr > 0.0 {
            row = row.normalized((est.value - pred) / est.stderr);
        }
        rows.push(row);
        let (mean, se) = summary.mean[k];
        let mut row = ReportRow::new(format!("{}/simulate/mean/i0={}", cfg.experiment, cfg.i0), Formula::MonteCarlo, t, mean, Method::Mc)
            .predicted(i0)
            .stderr(se);
        if se > 0.0 {
            row = row.normalized((mean - i0) / se);
        }
        rows.push(row);
    }
    let mut written = vec![write_report(out_dir, "simulate.csv", &rows)?];
    if cfg.trajectories > 0 {
        let horizon = *cfg.t_grid.last().unwrap();
        let mut rng = block_rng(seed, u64::MAX);
        let paths = (0..cfg.trajectories)
            .map(|_| simulate_mbp(&model, cfg.i0, horizon, cfg.cap, &mut rng))
            .collect::<crate::Result<Vec<_>>>()?;
        let (path, mut w) = create(out_dir, "trajectories.tsv")?;
        write_trajectories(&mut w, &paths).and_then(|_| w.flush()).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Outcome of `verify`.
#[derive(Debug)]
pub struct VerifySummary {
    pub results: Vec<CriterionResult>,
    pub report: PathBuf,
}

impl VerifySummary {
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().any(|r| r.numerical.is_some()) {
            exit::NUMERICAL
        } else if self.results.iter().any(|r| !r.passed) {
            exit::CRITERION_FAILED
        } else {
            exit::PASS
        }
    }
}

/// Runs the selected criteria, printing one line per criterion to `log`.
pub fn cmd_verify(ctx: &SuiteContext, only: Option<&str>, out_dir: &Path, log: &mut dyn Write) -> Result<VerifySummary> {
    let selected = criteria::select(only)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    let stdout_err = |e| HarnessError::Io {
        path: PathBuf::from("<log>"),
        source: e,
    };
    for c in &selected {
        let r = c.run(ctx);
        writeln!(log, "{}", r.line()).map_err(stdout_err)?;
        for d in &r.outcome.diagnostics {
            writeln!(log, "    note{}: {}", if d.passed { "" } else { " (unmet)" }, d.label).map_err(stdout_err)?;
        }
        rows.extend(r.outcome.rows.iter().cloned());
        results.push(r);
    }
    let report = write_report(out_dir, "verify.csv", &rows)?;
    let (path, mut w) = create(out_dir, "verify_summary.csv")?;
    let mut body = String::from("criterion,tags,passed,elapsed_s,budget_s\n");
    for r in &results {
        let tags: Vec<&str> = r.formulas.iter().map(|f| f.tag()).collect();
        body.push_str(&format!(
            "C{:02},{},{},{:.3},{}\n",
            r.id,
            tags.join(";"),
            r.passed,
            r.elapsed.as_secs_f64(),
            r.budget.as_secs()
        ));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(VerifySummary { results, report })
}

/// Survival residuals on the time grid with a log-scale rate fit.
pub fn cmd_rates(cfg: &ExperimentConfig, out_dir: &Path, log: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let sf = ScaleFunction::new(cfg.params);
    let ts: Vec<f64> = cfg.t_grid.iter().copied().filter(|&t| leading_survival(&sf, t).is_some()).collect();
    let rep = survival_report(&sf, &ts)?;
    let id = format!("{}/rates/survival", cfg.experiment);
    let rows: Vec<ReportRow> = rep
        .records()
        .iter()
        .map(|r| {
            ReportRow::new(id.clone(), rep.formula, r.t, r.exact, Method::Oracle)
                .predicted(r.predicted)
                .normalized(r.normalized_error)
        })
        .collect();
    let path = write_report(out_dir, "rates.csv", &rows)?;
    let (scale, slope, name) = match sf.family() {
        Family::DeltaEqualsLambda => (RateScale::LogOverT, 1.0, "ln t / t"),
        _ => (RateScale::Power, -1.0, "t"),
    };
    let fit = fit_rate(&rep, scale)?;
    let c = fit_constant(&rep, scale, slope)?;
    let ioe = |e| HarnessError::Io {
        path: PathBuf::from("<log>"),
        source: e,
    };
    writeln!(
        log,
        "{}: residual ~ C·({name})^b: b = {:.4}, R² = {:.5} ({}); C with b = {slope} pinned: {c:.6}",
        rep.formula.tag(),
        fit.slope,
        fit.r2,
        if fit.accepted() { "accepted" } else { "rejected" }
    )
    .map_err(ioe)?;
    Ok(vec![path])
}

/// Aggregates every report CSV in `dir` into `summary.csv`.
pub fn cmd_report(dir: &Path, log: &mut dyn Write) -> Result<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name().is_some_and(|n| !["summary.csv", "transition.csv", "verify_summary.csv"].contains(&n.to_str().unwrap_or("")))
        })
        .collect();
    files.sort();
    let mut body = String::from("file,tag,method,rows,t_min,t_max,max_abs_normalized_error\n");
    for path in &files {
        let file = File::open(path).map_err(io_err(path))?;
        let rows = read_rows(file).map_err(|e| HarnessError::Report {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let mut groups: Vec<(Formula, Method, Vec<&ReportRow>)> = Vec::new();
        for r in &rows {
            match groups.iter_mut().find(|g| g.0 == r.formula && g.1 == r.method) {
                Some(g) => g.2.push(r),
                None => groups.push((r.formula, r.method, vec![r])),
            }
        }
        let name = path.file_name().unwrap().to_string_lossy();
        for (formula, method, rs) in groups {
            let t_min = rs.iter().map(|r| r.t).fold(f64::INFINITY, f64::min);
            let t_max = rs.iter().map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
            let worst = rs.iter().filter_map(|r| r.normalized_error).map(f64::abs).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
            let line = format!(
                "{name},{},{},{},{},{},{}",
                formula.tag(),
                method.as_str(),
                rs.len(),
                fmt_float(t_min),
                fmt_float(t_max),
                worst.map(fmt_float).unwrap_or_default()
            );
            writeln!(log, "{line}").map_err(io_err(Path::new("<log>")))?;
            body.push_str(&line);
            body.push('\n');
        }
    }
    let (path, mut w) = create(dir, "summary.csv")?;
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(io_err(&path))?;
    Ok(path)
}

//! Monte Carlo ground truth: exact event-driven simulation of the branching
//! process and of its size-biased Q-process.
//!
//! Trajectories are generated in blocks of [`BLOCK`]; block `b` draws from
//! ChaCha8 stream `b` of the run seed, so results are bit-identical for any
//! thread count or execution strategy.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::branching::{expand_coeffs, JumpLaw, OffspringDistribution, QKernel};
use crate::error::{domain, CritError, Result};
use crate::exec::Execution;
use crate::sv::ScaleFunction;

/// Default population cap; paths crossing it are censored.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Trajectories per RNG stream.
pub const BLOCK: usize = 1024;

/// Marker for sizes after censoring.
pub const CENSORED: u64 = u64::MAX;

/// Which chain to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    Branching,
    QProcess,
}

/// Per-individual jump rate and jump laws.
#[derive(Debug, Clone)]
pub struct SimModel {
    rate: f64,
    offspring: OffspringDistribution,
    kernel: Option<QKernel>,
}

impl SimModel {
    /// Builds sampling tables of size `order` for a critical family.
    pub fn new(sf: &ScaleFunction, order: usize) -> Result<Self> {
        let coeffs = expand_coeffs(sf, order)?;
        let kernel = QKernel::new(&coeffs)?;
        Ok(SimModel {
            rate: coeffs.total_rate(),
            offspring: kernel.offspring().clone(),
            kernel: Some(kernel),
        })
    }

    /// A branching process with an arbitrary jump law (no Q-process).
    pub fn from_law(rate: f64, offspring: OffspringDistribution) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) || offspring.law() != JumpLaw::Offspring {
            return Err(CritError::InvalidParameter {
                name: "rate",
                reason: "need a positive rate and an offspring law".into(),
            });
        }
        Ok(SimModel {
            rate,
            offspring,
            kernel: None,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn kernel(&self) -> Option<&QKernel> {
        self.kernel.as_ref()
    }

    fn check(&self, process: Process) -> Result<()> {
        if process == Process::QProcess && self.kernel.is_none() {
            return Err(domain("simulate_qprocess", "model has no size-biased kernel"));
        }
        Ok(())
    }
}

/// A recorded path: event times and the sizes right after each event.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub sizes: Vec<u64>,
    pub extinction_time: Option<f64>,
    /// Set when the population crossed the cap; the path stops there.
    pub censored: bool,
}

/// Sizes of one path at fixed observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `CENSORED` for grid points after censoring.
    pub sizes: Vec<u64>,
    pub extinction_time: Option<f64>,
    pub censored: bool,
    pub events: u64,
}

struct PathEnd {
    extinction_time: Option<f64>,
    censored: bool,
    events: u64,
}

/// The Gillespie loop; `on_event(t, new_size)` sees every accepted jump.
fn run<R: Rng + ?Sized>(
    model: &SimModel,
    process: Process,
    i0: u64,
    horizon: f64,
    cap: u64,
    rng: &mut R,
    mut on_event: impl FnMut(f64, u64),
) -> PathEnd {
    let mut t = 0.0;
    let mut i = i0;
    let mut events = 0u64;
    loop {
        if i == 0 {
            return PathEnd {
                extinction_time: Some(t),
                censored: false,
                events,
            };
        }
        let e: f64 = rng.sample(Exp1);
        let dt = e / (i as f64 * model.rate);
        if t + dt > horizon {
            return PathEnd {
                extinction_time: None,
                censored: false,
                events,
            };
        }
        t += dt;
        let k = match process {
            Process::Branching => model.offspring.sample(rng),
            Process::QProcess => model.kernel.as_ref().expect("checked by caller").sample(i, rng),
        };
        events += 1;
        let next = if k == u64::MAX { None } else { (i + k).checked_sub(1) };
        match next {
            Some(n) if n <= cap => {
                i = n;
                on_event(t, i);
            }
            _ => {
                on_event(t, CENSORED);
                return PathEnd {
                    extinction_time: None,
                    censored: true,
                    events,
                };
            }
        }
    }
}

fn check_start(i0: u64, horizon: f64) -> Result<()> {
    if i0 == 0 {
        return Err(domain("simulate", "initial population must be at least 1"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(domain("simulate", format!("horizon must be finite and non-negative, got {horizon}")));
    }
    Ok(())
}

fn record<R: Rng + ?Sized>(model: &SimModel, process: Process, i0: u64, horizon: f64, cap: u64, rng: &mut R) -> Result<Trajectory> {
    check_start(i0, horizon)?;
    model.check(process)?;
    let mut times = vec![0.0];
    let mut sizes = vec![i0];
    let end = run(model, process, i0, horizon, cap, rng, |t, n| {
        times.push(t);
        sizes.push(n);
    });
    Ok(Trajectory {
        times,
        sizes,
        extinction_time: end.extinction_time,
        censored: end.censored,
    })
}

/// Exact simulation of the branching process up to extinction or `horizon`.
pub fn simulate_mbp<R: Rng + ?Sized>(model: &SimModel, i0: u64, horizon: f64, cap: u64, rng: &mut R) -> Result<Trajectory> {
    record(model, Process::Branching, i0, horizon, cap, rng)
}

/// Exact simulation of the Q-process; it never reaches 0.
pub fn simulate_qprocess<R: Rng + ?Sized>(model: &SimModel, i0: u64, horizon: f64, cap: u64, rng: &mut R) -> Result<Trajectory> {
    record(model, Process::QProcess, i0, horizon, cap, rng)
}

/// Simulates one path and reads it off at every point of the increasing `grid`.
pub fn observe<R: Rng + ?Sized>(model: &SimModel, process: Process, i0: u64, grid: &[f64], cap: u64, rng: &mut R) -> Result<Observation> {
    check_grid(grid)?;
    let horizon = *grid.last().unwrap();
    check_start(i0, horizon)?;
    model.check(process)?;
    Ok(observe_unchecked(model, process, i0, grid, cap, rng))
}

fn observe_unchecked<R: Rng + ?Sized>(model: &SimModel, process: Process, i0: u64, grid: &[f64], cap: u64, rng: &mut R) -> Observation {
    let horizon = *grid.last().unwrap();
    let mut sizes = Vec::with_capacity(grid.len());
    let mut current = i0;
    let end = run(model, process, i0, horizon, cap, rng, |t, n| {
        while sizes.len() < grid.len() && grid[sizes.len()] < t {
            sizes.push(current);
        }
        current = n;
    });
    let last = if end.extinction_time.is_some() { 0 } else { current };
    while sizes.len() < grid.len() {
        sizes.push(last);
    }
    Observation {
        sizes,
        extinction_time: end.extinction_time,
        censored: end.censored,
        events: end.events,
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] >= 0.0) {
        return Err(domain("observe", "grid must be non-empty, non-negative and increasing"));
    }
    Ok(())
}

/// The RNG of block `b` for a run seed.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Runs `n` trajectories in blocks and returns the per-block results in order.
pub fn run_blocks<T, F>(n: usize, seed: u64, exec: Execution, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    exec.map(blocks, |b| {
        let mut rng = block_rng(seed, b as u64);
        let count = BLOCK.min(n - b * BLOCK);
        job(&mut rng, count)
    })
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Proportion `count/n` with `stderr = sqrt(p(1-p)/n)`.
    pub fn proportion(count: usize, n: usize, seed: u64) -> Self {
        assert!(n >= 1);
        let p = count as f64 / n as f64;
        McEstimate {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            seed,
        }
    }

    /// `|value - target| / stderr` (infinite for a zero stderr and a miss).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Shared settings of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRun {
    pub n: usize,
    pub seed: u64,
    pub cap: u64,
    pub exec: Execution,
}

impl McRun {
    pub fn new(n: usize, seed: u64) -> Self {
        McRun {
            n,
            seed,
            cap: DEFAULT_CAP,
            exec: Execution::default(),
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("monte carlo", "need at least one trajectory"));
        }
        Ok(())
    }
}

/// Summary of a survival run on a time grid (one path serves every grid point).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSummary {
    pub grid: Vec<f64>,
    /// `P{H > t}` per grid point; censored paths count as alive.
    pub survival: Vec<McEstimate>,
    /// Sample mean of `Z(t)` at each grid point and its standard error.
    pub mean: Vec<(f64, f64)>,
    pub censored: usize,
    pub events: u64,
}

/// Estimates `P{H > t | Z(0) = i0}` and `E Z(t)` on a grid.
pub fn survival_curve(model: &SimModel, i0: u64, grid: &[f64], run_cfg: &McRun) -> Result<SurvivalSummary> {
    run_cfg.check()?;
    check_grid(grid)?;
    check_start(i0, *grid.last().unwrap())?;
    let g = grid.len();
    struct Acc {
        alive: Vec<usize>,
        sum: Vec<f64>,
        sum2: Vec<f64>,
        censored: usize,
        events: u64,
    }
    let parts = run_blocks(run_cfg.n, run_cfg.seed, run_cfg.exec, |rng, count| {
        let mut acc = Acc {
            alive: vec![0; g],
            sum: vec![0.0; g],
            sum2: vec![0.0; g],
            censored: 0,
            events: 0,
        };
        for _ in 0..count {
            let obs = observe_unchecked(model, Process::Branching, i0, grid, run_cfg.cap, rng);
            acc.censored += obs.censored as usize;
            acc.events += obs.events;
            for (k, &z) in obs.sizes.iter().enumerate() {
                if z > 0 {
                    acc.alive[k] += 1;
                }
                let zf = if z == CENSORED { run_cfg.cap as f64 } else { z as f64 };
                acc.sum[k] += zf;
                acc.sum2[k] += zf * zf;
            }
        }
        acc
    });
    let mut alive = vec![0usize; g];
    let mut sum = vec![0.0; g];
    let mut sum2 = vec![0.0; g];
    let (mut censored, mut events) = (0, 0);
    for p in parts {
        for k in 0..g {
            alive[k] += p.alive[k];
            sum[k] += p.sum[k];
            sum2[k] += p.sum2[k];
        }
        censored += p.censored;
        events += p.events;
    }
    let n = run_cfg.n as f64;
    Ok(SurvivalSummary {
        grid: grid.to_vec(),
        survival: alive.iter().map(|&a| McEstimate::proportion(a, run_cfg.n, run_cfg.seed)).collect(),
        mean: sum
            .iter()
            .zip(&sum2)
            .map(|(&s, &s2)| {
                let m = s / n;
                let var = (s2 / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
                (m, (var / n).sqrt())
            })
            .collect(),
        censored,
        events,
    })
}

/// Empirical law of `W(t)` on the cells `0..=jmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCounts {
    pub counts: Vec<usize>,
    /// Paths above `jmax` at `t`, censored ones included.
    pub above: usize,
    pub censored: usize,
    pub n: usize,
    pub seed: u64,
}

impl CellCounts {
    pub fn estimate(&self, j: usize) -> McEstimate {
        McEstimate::proportion(self.counts[j], self.n, self.seed)
    }
}

/// Simulates `W(t)` from `W(0) = 1` and tallies the cells `j ≤ jmax`.
pub fn qprocess_cells(model: &SimModel, t: f64, jmax: usize, run_cfg: &McRun) -> Result<CellCounts> {
    run_cfg.check()?;
    model.check(Process::QProcess)?;
    check_start(1, t)?;
    let grid = [t];
    let parts = run_blocks(run_cfg.n, run_cfg.seed, run_cfg.exec, |rng, count| {
        let mut counts = vec![0usize; jmax + 1];
        let (mut above, mut censored) = (0, 0);
        for _ in 0..count {
            let obs = observe_unchecked(model, Process::QProcess, 1, &grid, run_cfg.cap, rng);
            censored += obs.censored as usize;
            let w = obs.sizes[0];
            if w as u128 <= jmax as u128 {
                counts[w as usize] += 1;
            } else {
                above += 1;
            }
        }
        (counts, above, censored)
    });
    let mut out = CellCounts {
        counts: vec![0; jmax + 1],
        above: 0,
        censored: 0,
        n: run_cfg.n,
        seed: run_cfg.seed,
    };
    for (c, a, z) in parts {
        for (o, v) in out.counts.iter_mut().zip(c) {
            *o += v;
        }
        out.above += a;
        out.censored += z;
    }
    Ok(out)
}

/// Sorted sample of `q(t) W(t)`; censored paths sit at `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    /// Distinct finite values with their cumulative counts.
    atoms: Vec<(f64, usize)>,
    pub n: usize,
    pub censored: usize,
    pub events: u64,
}

impl EmpiricalCdf {
    /// Builds the empirical law from raw `W` values (`CENSORED` allowed).
    pub fn from_sizes(mut sizes: Vec<u64>, scale: f64, events: u64) -> Self {
        sizes.sort_unstable();
        let n = sizes.len();
        let mut atoms: Vec<(f64, usize)> = Vec::new();
        let mut censored = 0;
        for (idx, &w) in sizes.iter().enumerate() {
            if w == CENSORED {
                censored += 1;
                continue;
            }
            let x = scale * w as f64;
            match atoms.last_mut() {
                Some(last) if last.0 == x => last.1 = idx + 1,
                _ => atoms.push((x, idx + 1)),
            }
        }
        EmpiricalCdf { atoms, n, censored, events }
    }

    /// `F_n(x)`.
    pub fn value(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 <= x);
        if k == 0 {
            0.0
        } else {
            self.atoms[k - 1].1 as f64 / self.n as f64
        }
    }

    pub fn atoms(&self) -> &[(f64, usize)] {
        &self.atoms
    }

    /// `sup_x |F_n(x) - D(x)|` against a continuous CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64 + Sync + Send, exec: Execution) -> f64 {
        let d = exec.map_slice(&self.atoms, |a| cdf(a.0));
        let n = self.n as f64;
        let mut sup: f64 = 0.0;
        let mut prev = 0.0;
        for (a, dv) in self.atoms.iter().zip(d) {
            let cur = a.1 as f64 / n;
            sup = sup.max((cur - dv).abs()).max((prev - dv).abs());
            prev = cur;
        }
        // mass at +∞
        sup.max(1.0 - prev)
    }
}

/// Dvoretzky–Kiefer–Wolfowitz half-width at level `alpha`.
pub fn dkw_band(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Empirical law of `q(t) W(t)` from `n` Q-process paths started at 1.
pub fn empirical_d(model: &SimModel, t: f64, q_t: f64, run_cfg: &McRun) -> Result<EmpiricalCdf> {
    run_cfg.check()?;
    model.check(Process::QProcess)?;
    check_start(1, t)?;
    if !(q_t > 0.0 && q_t <= 1.0) {
        return Err(domain("empirical_D", format!("q(t) must lie in (0, 1], got {q_t}")));
    }
    let grid = [t];
    let parts = run_blocks(run_cfg.n, run_cfg.seed, run_cfg.exec, |rng, count| {
        let mut sizes = Vec::with_capacity(count);
        let mut events = 0;
        for _ in 0..count {
            let obs = observe_unchecked(model, Process::QProcess, 1, &grid, run_cfg.cap, rng);
            events += obs.events;
            sizes.push(obs.sizes[0]);
        }
        (sizes, events)
    });
    let mut all = Vec::with_capacity(run_cfg.n);
    let mut events = 0;
    for (s, e) in parts {
        all.extend(s);
        events += e;
    }
    Ok(EmpiricalCdf::from_sizes(all, q_t, events))
}

/// Writes trajectories as tab-separated `path  time  size` lines.
pub fn write_trajectories<W: Write>(out: &mut W, paths: &[Trajectory]) -> std::io::Result<()> {
    for (id, p) in paths.iter().enumerate() {
        for (t, z) in p.times.iter().zip(&p.sizes) {
            if *z == CENSORED {
                writeln!(out, "{id}\t{t:.17e}\tcensored")?;
            } else {
                writeln!(out, "{id}\t{t:.17e}\t{z}")?;
            }
        }
    }
    Ok(())
}

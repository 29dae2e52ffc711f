//! Monte Carlo estimation of pointwise moments `E|u(t,x)|^p`, of the
//! kernel-weighted functionals
//!
//! ```text
//! F(t) = ∫ E|u(t,y)|² p²(t,y) dy,    G(t) = ∫ E|u(t,y)| p(t,y) dy,
//! ```
//!
//! of finite-horizon Liapounov exponents, and of blow-up.
//!
//! Replicate `i` draws from the ChaCha stream `i` of the master seed, and
//! results are reduced in replicate order, so output does not depend on how
//! replicates are scheduled across workers.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::kernel::{Alpha, KernelCache};
use crate::ode::Condition;
use crate::spde::{replicate_rng, simulate_observed, CoeffSpec, InitSpec, SpdeConfig, TrajectoryStatus};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FRACBLOW_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Base experiment; its seed is the master seed.
    pub base: SpdeConfig,
    pub n_replicates: usize,
    /// Sorted, within `[0, base.horizon]`.
    pub record_times: Vec<f64>,
    /// Grid indices.
    pub probe_points: Vec<usize>,
    pub moments_p: Vec<f64>,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.n_replicates < 2 {
            return Err(invalid("ensemble.replicates", "need at least 2 replicates"));
        }
        if self.record_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("record.times", "must be strictly increasing"));
        }
        if let Some(&j) = self.probe_points.iter().find(|&&j| j >= self.base.n_grid) {
            return Err(invalid(
                "ensemble.probes",
                format!("index {j} outside grid of {} nodes", self.base.n_grid),
            ));
        }
        if let Some(&p) = self.moments_p.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid("ensemble.moments", format!("moment orders must be positive, got {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub t: f64,
    pub probe: usize,
    pub probe_x: f64,
    pub p: f64,
    /// Mean of `|u|^p` over the replicates alive at `t`; NaN when none is.
    pub mean: f64,
    pub std_error: f64,
    pub n_alive: usize,
}

impl MomentEstimate {
    pub fn censored(&self) -> bool {
        self.n_alive == 0
    }
}

/// `F̂` and `Ĝ` at the positive record times, each as `(value, std_error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    pub times: Vec<f64>,
    pub f_hat: Vec<(f64, f64)>,
    pub g_hat: Vec<(f64, f64)>,
    pub n_alive: Vec<usize>,
    pub n_replicates: usize,
}

impl FunctionalSeries {
    pub fn f_points(&self) -> Vec<SeriesPoint> {
        self.points(&self.f_hat)
    }

    pub fn g_points(&self) -> Vec<SeriesPoint> {
        self.points(&self.g_hat)
    }

    fn points(&self, values: &[(f64, f64)]) -> Vec<SeriesPoint> {
        self.times
            .iter()
            .zip(values)
            .zip(&self.n_alive)
            .map(|((&t, &(value, _)), &n_alive)| SeriesPoint { t, value, n_alive })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub estimates: Vec<MomentEstimate>,
    pub functionals: FunctionalSeries,
    pub statuses: Vec<TrajectoryStatus>,
}

impl EnsembleResult {
    pub fn fraction_blown(&self) -> f64 {
        let blown = self.statuses.iter().filter(|s| s.blow_time().is_some()).count();
        blown as f64 / self.statuses.len() as f64
    }

    pub fn moment_points(&self, probe: usize, p: f64) -> Vec<SeriesPoint> {
        self.estimates
            .iter()
            .filter(|e| e.probe == probe && e.p == p)
            .map(|e| SeriesPoint {
                t: e.t,
                value: e.mean,
                n_alive: e.n_alive,
            })
            .collect()
    }
}

/// Per replicate: for each record time, `|u(probe)|^p` for every
/// (probe, p) pair followed by the replicate's `F` and `G` sums.
struct ReplicateRecord {
    samples: Vec<Option<Vec<f64>>>,
    status: TrajectoryStatus,
}

fn worker_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Run `f` on a pool capped by `threads`, or by `FRACBLOW_THREADS` when
/// `threads` is `None`.
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads.or_else(worker_count) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    run_ensemble_with_threads(cfg, None)
}

pub fn run_ensemble_with_threads(cfg: &EnsembleConfig, threads: Option<usize>) -> Result<EnsembleResult> {
    cfg.validate()?;
    let grid = cfg.base.grid()?;
    let alpha = Alpha::for_spde(cfg.base.alpha)?;
    let cache = KernelCache::new();
    let dx = grid.dx();
    let weights: Vec<Option<Vec<f64>>> = cfg
        .record_times
        .iter()
        .map(|&t| (t > 0.0).then(|| cache.grid_values(alpha, t, &grid).iter().map(|p| p * dx).collect()))
        .collect();
    let n_pairs = cfg.probe_points.len() * cfg.moments_p.len();

    let run_one = |index: usize| -> Result<ReplicateRecord> {
        let mut rng = replicate_rng(cfg.base.seed, index as u64);
        let mut samples: Vec<Option<Vec<f64>>> = vec![None; cfg.record_times.len()];
        let (status, _) = simulate_observed(&cfg.base, &mut rng, &cfg.record_times, |k, state| {
            let mut row = Vec::with_capacity(n_pairs + 2);
            for &j in &cfg.probe_points {
                let u = state.values[j].abs();
                row.extend(cfg.moments_p.iter().map(|&p| u.powf(p)));
            }
            let (f, g) = match &weights[k] {
                Some(w) => state.values.iter().zip(w).fold((0.0, 0.0), |(f, g), (u, w)| {
                    let a = u.abs();
                    (f + a * a * w * w / dx, g + a * w)
                }),
                None => (f64::NAN, f64::NAN),
            };
            row.push(f);
            row.push(g);
            samples[k] = Some(row);
        })?;
        Ok(ReplicateRecord { samples, status })
    };

    let records: Vec<ReplicateRecord> = with_workers(threads, || {
        (0..cfg.n_replicates)
            .into_par_iter()
            .map(run_one)
            .collect::<Result<Vec<_>>>()
    })?;

    let mut estimates = Vec::with_capacity(cfg.record_times.len() * n_pairs);
    let mut functionals = FunctionalSeries {
        times: Vec::new(),
        f_hat: Vec::new(),
        g_hat: Vec::new(),
        n_alive: Vec::new(),
        n_replicates: cfg.n_replicates,
    };
    for (k, &t) in cfg.record_times.iter().enumerate() {
        let alive: Vec<&Vec<f64>> = records.iter().filter_map(|r| r.samples[k].as_ref()).collect();
        let column = |c: usize| mean_and_error(alive.iter().map(|row| row[c]));
        for (pi, &j) in cfg.probe_points.iter().enumerate() {
            for (qi, &p) in cfg.moments_p.iter().enumerate() {
                let (mean, std_error) = column(pi * cfg.moments_p.len() + qi);
                estimates.push(MomentEstimate {
                    t,
                    probe: j,
                    probe_x: grid.x(j),
                    p,
                    mean,
                    std_error,
                    n_alive: alive.len(),
                });
            }
        }
        if t > 0.0 {
            functionals.times.push(t);
            functionals.f_hat.push(column(n_pairs));
            functionals.g_hat.push(column(n_pairs + 1));
            functionals.n_alive.push(alive.len());
        }
    }
    Ok(EnsembleResult {
        estimates,
        functionals,
        statuses: records.into_iter().map(|r| r.status).collect(),
    })
}

/// Sample mean and standard error by Welford's recurrence, in iteration
/// order. NaN mean for an empty sample; zero error for a single value.
fn mean_and_error(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    match n {
        0 => (f64::NAN, f64::NAN),
        1 => (mean, 0.0),
        _ => (mean, (m2 / (n - 1) as f64 / n as f64).sqrt()),
    }
}

/// A moment or functional estimate with its censoring count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    pub value: f64,
    pub n_alive: usize,
}

/// First time the estimate exceeds `threshold` or a strict majority of the
/// `n_replicates` paths has blown up.
pub fn detect_moment_blowup(points: &[SeriesPoint], n_replicates: usize, threshold: f64) -> Option<f64> {
    points
        .iter()
        .find(|pt| 2 * pt.n_alive < n_replicates || (pt.value.is_finite() && pt.value > threshold))
        .map(|pt| pt.t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub gamma_hat: f64,
    pub std_error: f64,
    pub n_points: usize,
}

/// Least-squares slope of `ln E|u(t, x)|^p` over `window`, a finite-horizon
/// stand-in for `limsup (1/t) ln E|u(t,x)|^p`.
pub fn estimate_lyapunov(
    estimates: &[MomentEstimate],
    probe: usize,
    p: f64,
    window: (f64, f64),
) -> Result<LyapunovEstimate> {
    let series: Vec<&MomentEstimate> = estimates.iter().filter(|e| e.probe == probe && e.p == p).collect();
    let full = series.iter().map(|e| e.n_alive).max().unwrap_or(0);
    let inside: Vec<&MomentEstimate> = series
        .into_iter()
        .filter(|e| e.t >= window.0 && e.t <= window.1)
        .collect();
    if inside.len() < 4 {
        return Err(invalid(
            "lyapunov.window",
            format!("needs at least 4 record times, found {}", inside.len()),
        ));
    }
    if let Some(e) = inside
        .iter()
        .find(|e| e.n_alive < full || !(e.mean.is_finite() && e.mean > 0.0))
    {
        return Err(Error::Censored(format!(
            "estimate at t = {} has {} of {} replicates alive (mean {})",
            e.t, e.n_alive, full, e.mean
        )));
    }
    let n = inside.len() as f64;
    let tbar = inside.iter().map(|e| e.t).sum::<f64>() / n;
    let ybar = inside.iter().map(|e| e.mean.ln()).sum::<f64>() / n;
    let sxx: f64 = inside.iter().map(|e| (e.t - tbar).powi(2)).sum();
    let sxy: f64 = inside.iter().map(|e| (e.t - tbar) * (e.mean.ln() - ybar)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = inside
        .iter()
        .map(|e| {
            let fit = ybar + slope * (e.t - tbar);
            (e.mean.ln() - fit).powi(2)
        })
        .sum();
    Ok(LyapunovEstimate {
        gamma_hat: slope,
        std_error: (ssr / (n - 2.0) / sxx).sqrt(),
        n_points: inside.len(),
    })
}

/// Fraction of replicates that must blow up for a cell to count as
/// blown up.
pub const PHASE_VERDICT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseVerdict {
    BlewUp { median_t_blow: f64 },
    Survived { horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub kappa: f64,
    pub excess: f64,
    pub alpha: f64,
    pub verdict: PhaseVerdict,
    pub fraction_blown: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub condition: Condition,
    pub kappas: Vec<f64>,
    pub excesses: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Supplies grid, time step, horizon, seed and the coefficient not set
    /// by the condition: the drift under A, the diffusion under B.
    pub base: SpdeConfig,
    /// `K₁` or `K₂` in the power-law coefficient `K|u|^{1+excess}`.
    pub coefficient: f64,
    pub n_replicates: usize,
}

pub const MAX_PHASE_CELLS: usize = 64;

impl PhaseConfig {
    pub fn cell_config(&self, alpha: f64, excess: f64, kappa: f64) -> SpdeConfig {
        let power = CoeffSpec::Power {
            k: self.coefficient,
            exponent: 1.0 + excess,
        };
        let mut cfg = SpdeConfig {
            alpha,
            init: InitSpec::Constant(kappa),
            ..self.base.clone()
        };
        match self.condition {
            Condition::A => cfg.diffusion = power,
            Condition::B => cfg.drift = power,
        }
        cfg
    }
}

/// One small ensemble per `(α, excess, κ)` cell; a cell blew up when at
/// least half of its paths blew up before the horizon. Cells are ordered by
/// α, then excess, then κ.
pub fn phase_experiment(cfg: &PhaseConfig) -> Result<Vec<PhaseCell>> {
    let cells = cfg.alphas.len() * cfg.excesses.len() * cfg.kappas.len();
    if cells == 0 || cells > MAX_PHASE_CELLS {
        return Err(invalid(
            "phase",
            format!("grid must have between 1 and {MAX_PHASE_CELLS} cells, got {cells}"),
        ));
    }
    for (name, v) in [("phase.excesses", &cfg.excesses), ("phase.kappas", &cfg.kappas)] {
        if let Some(bad) = v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(invalid(name, format!("values must be positive, got {bad}")));
        }
    }
    let mut out = Vec::with_capacity(cells);
    for &alpha in &cfg.alphas {
        for &excess in &cfg.excesses {
            for &kappa in &cfg.kappas {
                let ensemble = EnsembleConfig {
                    base: cfg.cell_config(alpha, excess, kappa),
                    n_replicates: cfg.n_replicates,
                    record_times: Vec::new(),
                    probe_points: Vec::new(),
                    moments_p: Vec::new(),
                };
                let result = run_ensemble(&ensemble)?;
                out.push(phase_cell(alpha, excess, kappa, &result.statuses, cfg.base.horizon));
            }
        }
    }
    Ok(out)
}

fn phase_cell(alpha: f64, excess: f64, kappa: f64, statuses: &[TrajectoryStatus], horizon: f64) -> PhaseCell {
    let mut times: Vec<f64> = statuses
        .iter()
        .map(|s| s.blow_time().unwrap_or(f64::INFINITY))
        .collect();
    times.sort_by(f64::total_cmp);
    let blown = times.iter().filter(|t| t.is_finite()).count();
    let fraction_blown = blown as f64 / statuses.len() as f64;
    let verdict = if fraction_blown >= PHASE_VERDICT_FRACTION {
        PhaseVerdict::BlewUp {
            median_t_blow: times[(times.len() - 1) / 2],
        }
    } else {
        PhaseVerdict::Survived { horizon }
    };
    PhaseCell {
        kappa,
        excess,
        alpha,
        verdict,
        fraction_blown,
    }
}

/// Kernel-weight self-test: with `u ≡ 1`, the grid sums for `Ĝ` and `F̂`
/// should reproduce `1` and `p_L(2t, 0)`. Returns both sums.
pub fn functional_weight_sums(alpha: Alpha, t: f64, grid: &Grid) -> (f64, f64) {
    let cache = KernelCache::new();
    let w = cache.grid_values(alpha, t, grid);
    let dx = grid.dx();
    let g = w.iter().sum::<f64>() * dx;
    let f = w.iter().map(|p| p * p).sum::<f64>() * dx;
    (g, f)
}

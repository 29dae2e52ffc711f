//! Sample paths of `∂ₜu = -(-Δ)^{α/2}u + b(u) + σ(u)ẇ` on the torus
//! `[-L, L)`.
//!
//! One step of size `dt` is a Lie splitting: the drift and the noise are
//! applied explicitly in physical space, then the linear flow is applied
//! exactly as the Fourier multiplier `exp(-dt|k|^α)`:
//!
//! ```text
//! v = u + dt·b(u) + σ(u)·ΔW,   ΔW_j ~ N(0, dt/dx)
//! u ← F⁻¹[exp(-dt|k|^α)·F v]
//! ```
//!
//! `ΔW_j` is the average of space-time white noise over the `dt × dx` cell
//! of node `j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::kernel::Alpha;
use crate::spectral::LinearFlow;

/// Pointwise coefficient, used both for the drift `b` and the noise
/// amplitude `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoeffSpec {
    Zero,
    Constant(f64),
    Linear(f64),
    /// `k·|u|^exponent` with `exponent > 1`.
    Power { k: f64, exponent: f64 },
}

impl CoeffSpec {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            CoeffSpec::Zero => 0.0,
            CoeffSpec::Constant(c) => c,
            CoeffSpec::Linear(lambda) => lambda * u,
            CoeffSpec::Power { k, exponent } => k * u.abs().powf(exponent),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, CoeffSpec::Zero)
    }

    /// `name` is the configuration prefix reported in errors.
    pub fn validate(&self, name: &str) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(&format!("{name}.{field}"), format!("must be positive, got {v}")))
            }
        };
        match *self {
            CoeffSpec::Zero => Ok(()),
            CoeffSpec::Constant(c) => {
                if c.is_finite() && c >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(&format!("{name}.c"), format!("must be nonnegative, got {c}")))
                }
            }
            CoeffSpec::Linear(lambda) => positive("lambda", lambda),
            CoeffSpec::Power { k, exponent } => {
                positive("k", k)?;
                if exponent.is_finite() && exponent > 1.0 {
                    Ok(())
                } else {
                    Err(invalid(
                        &format!("{name}.exponent"),
                        format!("must exceed 1, got {exponent}"),
                    ))
                }
            }
        }
    }
}

/// Initial datum `u₀ ≥ κ > 0`, or `u₀ ≡ 0` for additive-noise checks.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    Constant(f64),
    Samples(Vec<f64>),
}

impl InitSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        match self {
            InitSpec::Zero => Ok(()),
            InitSpec::Constant(kappa) => {
                if kappa.is_finite() && *kappa > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("init.kappa", format!("must be positive, got {kappa}")))
                }
            }
            InitSpec::Samples(values) => {
                if values.len() != grid.len() {
                    return Err(Error::GridMismatch {
                        expected: grid.len(),
                        actual: values.len(),
                    });
                }
                if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(invalid("init.samples", format!("values must be positive, found {bad}")));
                }
                Ok(())
            }
        }
    }

    /// Lower bound `κ = inf u₀`.
    pub fn kappa(&self) -> f64 {
        match self {
            InitSpec::Zero => 0.0,
            InitSpec::Constant(kappa) => *kappa,
            InitSpec::Samples(values) => values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        match self {
            InitSpec::Zero => vec![0.0; grid.len()],
            InitSpec::Constant(kappa) => vec![*kappa; grid.len()],
            InitSpec::Samples(values) => values.clone(),
        }
    }
}

/// One SPDE experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdeConfig {
    pub alpha: f64,
    pub half_width: f64,
    pub n_grid: usize,
    pub dt: f64,
    pub horizon: f64,
    pub drift: CoeffSpec,
    pub diffusion: CoeffSpec,
    pub init: InitSpec,
    pub seed: u64,
    pub blowup_threshold: f64,
}

impl Default for SpdeConfig {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            half_width: 10.0,
            n_grid: 512,
            dt: 1e-4,
            horizon: 1.0,
            drift: CoeffSpec::Zero,
            diffusion: CoeffSpec::Zero,
            init: InitSpec::Constant(1.0),
            seed: 0,
            blowup_threshold: 1e10,
        }
    }
}

impl SpdeConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_width, self.n_grid)
    }

    pub fn validate(&self) -> Result<()> {
        Alpha::for_spde(self.alpha)?;
        let grid = self.grid()?;
        if self.n_grid < 32 || !self.n_grid.is_power_of_two() {
            return Err(invalid(
                "grid.n",
                format!("must be a power of two >= 32, got {}", self.n_grid),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.dt > 0.1 * grid.dx() {
            return Err(invalid(
                "dt",
                format!("must not exceed 0.1·dx = {:e}, got {}", 0.1 * grid.dx(), self.dt),
            ));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(invalid("horizon", format!("must be nonnegative, got {}", self.horizon)));
        }
        self.drift.validate("drift")?;
        self.diffusion.validate("diffusion")?;
        self.init.validate(&grid)?;
        if !(self.blowup_threshold.is_finite() && self.blowup_threshold > 0.0) {
            return Err(invalid("blowup_threshold", "must be positive and finite"));
        }
        Ok(())
    }

    /// Whether `L ≥ 8·horizon^{1/α}`, the rule of thumb under which the
    /// periodic domain stands in for the whole line.
    pub fn tail_rule_satisfied(&self) -> bool {
        self.half_width >= 8.0 * self.horizon.powf(1.0 / self.alpha)
    }

    pub fn n_steps(&self) -> usize {
        steps_to(self.horizon, self.dt)
    }
}

fn steps_to(t: f64, dt: f64) -> usize {
    (t / dt - 1e-9).ceil().max(0.0) as usize
}

/// Spatial snapshot of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupCause {
    /// `sup|u|` exceeded the threshold (infinite values included).
    Threshold,
    /// NaN appeared while every number was below the threshold; this
    /// signals a scheme failure rather than growth.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryStatus {
    Completed,
    BlownUp { t_blow: f64, cause: BlowupCause },
}

impl TrajectoryStatus {
    pub fn blow_time(&self) -> Option<f64> {
        match self {
            TrajectoryStatus::Completed => None,
            TrajectoryStatus::BlownUp { t_blow, .. } => Some(*t_blow),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub snapshots: Vec<FieldState>,
    pub status: TrajectoryStatus,
    /// Number of standard normal draws consumed.
    pub rng_draws: u64,
}

/// Random stream of replicate `index` under `master_seed`. Distinct indices
/// select distinct ChaCha streams of the same key, so streams never overlap.
pub fn replicate_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Fill `out` with independent `N(0, dt/dx)` draws: the cell averages of
/// space-time white noise.
pub fn sample_noise_increment<R: Rng + ?Sized>(out: &mut [f64], dt: f64, dx: f64, rng: &mut R) {
    let sd = (dt / dx).sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = sd * z;
    }
}

/// Reusable stepping machinery for one configuration.
pub struct Stepper {
    dt: f64,
    dx: f64,
    drift: CoeffSpec,
    diffusion: CoeffSpec,
    flow: LinearFlow,
    noise: Vec<f64>,
    draws: u64,
}

impl Stepper {
    pub fn new(cfg: &SpdeConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        Ok(Self {
            dt: cfg.dt,
            dx: grid.dx(),
            drift: cfg.drift,
            diffusion: cfg.diffusion,
            flow: LinearFlow::new(&grid, cfg.alpha, cfg.dt),
            noise: vec![0.0; grid.len()],
            draws: 0,
        })
    }

    pub fn rng_draws(&self) -> u64 {
        self.draws
    }

    /// Advance `state` by one step. Non-finite output is left in place for
    /// the caller to classify.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut FieldState, rng: &mut R) {
        let dt = self.dt;
        if self.diffusion.is_zero() {
            if !self.drift.is_zero() {
                for u in state.values.iter_mut() {
                    *u += dt * self.drift.eval(*u);
                }
            }
        } else {
            sample_noise_increment(&mut self.noise, dt, self.dx, rng);
            self.draws += self.noise.len() as u64;
            for (u, dw) in state.values.iter_mut().zip(&self.noise) {
                let v = *u;
                *u = v + dt * self.drift.eval(v) + self.diffusion.eval(v) * dw;
            }
        }
        self.flow.apply(&mut state.values);
        state.t += dt;
    }
}

/// Classify a field after a step; `None` while the path is alive.
pub fn blowup_cause(values: &[f64], threshold: f64) -> Option<BlowupCause> {
    let mut nan = false;
    for v in values {
        if v.is_nan() {
            nan = true;
        } else if v.abs() > threshold {
            return Some(BlowupCause::Threshold);
        }
    }
    nan.then_some(BlowupCause::NonFinite)
}

fn record_steps(cfg: &SpdeConfig, record_times: &[f64]) -> Result<Vec<usize>> {
    let mut steps = Vec::with_capacity(record_times.len());
    for &t in record_times {
        if !(t.is_finite() && t >= 0.0 && t <= cfg.horizon * (1.0 + 1e-12)) {
            return Err(invalid(
                "record.times",
                format!("{t} lies outside [0, horizon = {}]", cfg.horizon),
            ));
        }
        steps.push(((t / cfg.dt).round() as usize).min(cfg.n_steps()));
    }
    Ok(steps)
}

/// Run one path, handing every recorded state to `observe` in time order.
/// Returns the final status and the number of normal draws.
pub fn simulate_observed<F>(
    cfg: &SpdeConfig,
    rng: &mut ChaCha8Rng,
    record_times: &[f64],
    mut observe: F,
) -> Result<(TrajectoryStatus, u64)>
where
    F: FnMut(usize, &FieldState),
{
    let mut stepper = Stepper::new(cfg)?;
    let grid = cfg.grid()?;
    let steps = record_steps(cfg, record_times)?;
    let mut order: Vec<usize> = (0..steps.len()).collect();
    order.sort_by_key(|&i| steps[i]);

    let mut state = FieldState {
        t: 0.0,
        values: cfg.init.values(&grid),
    };
    let mut next = 0;
    let mut emit = |m: usize, state: &FieldState, next: &mut usize| {
        while *next < order.len() && steps[order[*next]] == m {
            observe(order[*next], state);
            *next += 1;
        }
    };
    emit(0, &state, &mut next);
    for m in 1..=cfg.n_steps() {
        stepper.step(&mut state, rng);
        state.t = m as f64 * cfg.dt;
        if let Some(cause) = blowup_cause(&state.values, cfg.blowup_threshold) {
            let status = TrajectoryStatus::BlownUp {
                t_blow: state.t.min(cfg.horizon),
                cause,
            };
            return Ok((status, stepper.rng_draws()));
        }
        emit(m, &state, &mut next);
    }
    Ok((TrajectoryStatus::Completed, stepper.rng_draws()))
}

/// Simulate one path from `cfg.seed`, keeping snapshots at `record_times`.
pub fn simulate(cfg: &SpdeConfig, record_times: &[f64]) -> Result<TrajectoryResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut snapshots: Vec<(usize, FieldState)> = Vec::with_capacity(record_times.len());
    let (status, rng_draws) = simulate_observed(cfg, &mut rng, record_times, |i, s| {
        snapshots.push((i, s.clone()));
    })?;
    snapshots.sort_by_key(|(i, _)| *i);
    Ok(TrajectoryResult {
        snapshots: snapshots.into_iter().map(|(_, s)| s).collect(),
        status,
        rng_draws,
    })
}

/// The noiseless equation `∂ₜu = -(-Δ)^{α/2}u + b(u)`: `cfg` with the
/// diffusion forced to zero. No random numbers are drawn.
pub fn simulate_deterministic(cfg: &SpdeConfig, record_times: &[f64]) -> Result<TrajectoryResult> {
    let cfg = SpdeConfig {
        diffusion: CoeffSpec::Zero,
        ..cfg.clone()
    };
    simulate(&cfg, record_times)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SpdeConfig {
        SpdeConfig {
            n_grid: 64,
            dt: 1e-3,
            horizon: 0.1,
            ..SpdeConfig::default()
        }
    }

    #[test]
    fn validation_names_keys() {
        let cases: Vec<(SpdeConfig, &str)> = vec![
            (SpdeConfig { alpha: 2.5, ..base() }, "alpha"),
            (SpdeConfig { alpha: 1.0, ..base() }, "alpha"),
            (SpdeConfig { n_grid: 48, ..base() }, "grid.n"),
            (SpdeConfig { dt: 0.1, ..base() }, "dt"),
            (
                SpdeConfig {
                    drift: CoeffSpec::Power { k: 1.0, exponent: 1.0 },
                    ..base()
                },
                "drift.exponent",
            ),
            (
                SpdeConfig {
                    diffusion: CoeffSpec::Linear(-1.0),
                    ..base()
                },
                "diffusion.lambda",
            ),
            (
                SpdeConfig {
                    init: InitSpec::Constant(0.0),
                    ..base()
                },
                "init.kappa",
            ),
        ];
        for (cfg, key) in cases {
            match cfg.validate() {
                Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, key),
                other => panic!("expected error on {key}, got {other:?}"),
            }
        }
    }

    #[test]
    fn constant_field_is_invariant() {
        let cfg = SpdeConfig {
            init: InitSpec::Constant(3.0),
            ..base()
        };
        let res = simulate(&cfg, &[0.1]).unwrap();
        assert_eq!(res.status, TrajectoryStatus::Completed);
        assert_eq!(res.rng_draws, 0);
        assert!(res.snapshots[0].values.iter().all(|v| (v - 3.0).abs() < 1e-13));
    }

    #[test]
    fn single_mode_decays_exactly() {
        let grid = Grid::new(10.0, 64).unwrap();
        let k = std::f64::consts::PI / 10.0;
        // cos(πx/L) is not positive, so step the stepper directly.
        let cfg = base();
        let mut stepper = Stepper::new(&cfg).unwrap();
        let mut state = FieldState {
            t: 0.0,
            values: grid.points().map(|x| (k * x).cos()).collect(),
        };
        let mut rng = replicate_rng(0, 0);
        stepper.step(&mut state, &mut rng);
        let factor = (-cfg.dt * k.powf(cfg.alpha)).exp();
        for (j, v) in state.values.iter().enumerate() {
            assert!((v - factor * (k * grid.x(j)).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_drift_single_step() {
        let cfg = SpdeConfig {
            drift: CoeffSpec::Power { k: 1.0, exponent: 2.0 },
            ..base()
        };
        let res = simulate(&cfg, &[cfg.dt]).unwrap();
        for v in &res.snapshots[0].values {
            assert!((v - (1.0 + cfg.dt)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let cfg = SpdeConfig {
            horizon: 0.0,
            diffusion: CoeffSpec::Constant(0.0),
            ..base()
        };
        let res = simulate(&cfg, &[0.0]).unwrap();
        assert_eq!(res.status, TrajectoryStatus::Completed);
        assert_eq!(res.snapshots.len(), 1);
        assert_eq!(res.snapshots[0].values, vec![1.0; 64]);
    }

    #[test]
    fn record_times_outside_horizon_rejected() {
        assert!(simulate(&base(), &[0.5]).is_err());
    }

    #[test]
    fn nan_without_large_values_is_a_scheme_failure() {
        assert_eq!(blowup_cause(&[1.0, f64::NAN], 1e10), Some(BlowupCause::NonFinite));
        assert_eq!(blowup_cause(&[f64::INFINITY, f64::NAN], 1e10), Some(BlowupCause::Threshold));
        assert_eq!(blowup_cause(&[1.0, 2.0], 1e10), None);
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let mut a = vec![0.0; 100];
        let mut b = vec![0.0; 100];
        sample_noise_increment(&mut a, 1e-4, 0.04, &mut replicate_rng(7, 3));
        sample_noise_increment(&mut b, 1e-4, 0.04, &mut replicate_rng(7, 3));
        assert_eq!(a, b);
        sample_noise_increment(&mut b, 1e-4, 0.04, &mut replicate_rng(7, 4));
        assert_ne!(a, b);
    }
}

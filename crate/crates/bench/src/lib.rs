//! Shared fixtures for the criterion benchmarks.

use fracblow::{CoeffSpec, FieldState, InitSpec, SpdeConfig};

/// Multiplicative-noise configuration on `n` cells, constant data 1.
pub fn spde_fixture(n: usize) -> SpdeConfig {
    SpdeConfig {
        alpha: 1.5,
        n_grid: n,
        diffusion: CoeffSpec::Linear(1.0),
        drift: CoeffSpec::Power { k: 1.0, exponent: 1.5 },
        init: InitSpec::Constant(1.0),
        ..SpdeConfig::default()
    }
}

pub fn initial_state(cfg: &SpdeConfig) -> FieldState {
    let grid = cfg.grid().expect("fixture grid");
    FieldState {
        t: 0.0,
        values: cfg.init.values(&grid),
    }
}

/// Uniform time grid `0, h, …, horizon` with `steps` cells.
pub fn time_grid(horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    (0..=steps).map(|i| i as f64 * h).collect()
}

//! Exact action of the fractional heat semigroup on periodic grid functions.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Applies `exp(-t|k|^α)` to every Fourier mode of a real grid function.
pub struct LinearFlow {
    multipliers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl LinearFlow {
    pub fn new(grid: &Grid, alpha: f64, t: f64) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        let norm = 1.0 / n as f64;
        let multipliers = (0..n)
            .map(|j| (-t * grid.wavenumber(j).abs().powf(alpha)).exp() * norm)
            .collect();
        Self {
            multipliers,
            forward,
            inverse,
            buffer: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    /// Advances `u` in place; panics if `u` has the wrong length.
    pub fn apply(&mut self, u: &mut [f64]) {
        assert_eq!(u.len(), self.buffer.len());
        for (b, &v) in self.buffer.iter_mut().zip(u.iter()) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (b, &m) in self.buffer.iter_mut().zip(&self.multipliers) {
            *b *= m;
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (v, b) in u.iter_mut().zip(&self.buffer) {
            *v = b.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_decays_by_its_multiplier() {
        let grid = Grid::new(10.0, 64).unwrap();
        let (alpha, dt) = (1.5, 0.01);
        let k = std::f64::consts::PI / 10.0;
        let mut u: Vec<f64> = grid.points().map(|x| (k * x).cos()).collect();
        let mut flow = LinearFlow::new(&grid, alpha, dt);
        flow.apply(&mut u);
        let factor = (-dt * k.powf(alpha)).exp();
        for (j, v) in u.iter().enumerate() {
            assert!((v - factor * (k * grid.x(j)).cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn constants_are_fixed() {
        let grid = Grid::new(5.0, 32).unwrap();
        let mut u = vec![2.5; 32];
        LinearFlow::new(&grid, 2.0, 3.0).apply(&mut u);
        assert!(u.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }
}

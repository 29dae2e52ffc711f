use crate::error::{invalid, Result};

/// Uniform periodic grid on `[-L, L)` with `n` nodes, `x_j = -L + j·dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(invalid("domain.half_width", format!("must be positive, got {half_width}")));
        }
        if n < 2 {
            return Err(invalid("grid.n", format!("need at least 2 nodes, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.x(j))
    }

    /// Index of the node `x = 0`, present whenever `n` is even.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Nearest node to `x`, wrapped into the periodic cell.
    pub fn index_of(&self, x: f64) -> usize {
        let j = ((x + self.half_width) / self.dx()).round() as i64;
        j.rem_euclid(self.n as i64) as usize
    }

    /// Angular wavenumber `πm/L` of FFT bin `j`, with `m ∈ [-n/2, n/2)`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let m = if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        };
        std::f64::consts::PI * m as f64 / self.half_width
    }
}

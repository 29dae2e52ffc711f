//! Second moment of the linear multiplicative equation as a Volterra
//! equation of the second kind.
//!
//! For `σ(u) = λu`, `b = 0` and constant `u₀`, the Itô isometry applied to
//! the mild form gives, at every point of the torus,
//!
//! ```text
//! f(t) = u₀² + λ² ∫₀ᵗ p_L(2(t-s), 0) f(s) ds
//! ```
//!
//! with a kernel `p_L(2r, 0) ~ p(1,0)·(2r)^{-1/α}` that is weakly singular
//! at `r = 0`.

use crate::error::{invalid, Result};
use crate::kernel::{density, torus_density, Alpha, KernelEval};
use crate::quadrature::gauss_legendre;

/// Cell integrals `W_m = ∫_{mh}^{(m+1)h} p_L(2r, 0) dr` for `m < count`.
///
/// The first cell integrates the whole-line singularity `p(2r, 0)` exactly
/// and adds the smooth image correction `p_L - p` by Gauss–Legendre. Later
/// cells integrate each Fourier mode of `p_L` in closed form.
pub fn kernel_cell_weights(alpha: Alpha, half_width: f64, h: f64, count: usize) -> Result<Vec<f64>> {
    let a = alpha.value();
    if a <= 1.0 {
        return Err(invalid("alpha", "the kernel is not integrable for alpha <= 1"));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(invalid("time_grid", "spacing must be positive"));
    }
    if (2.0 * h).powf(1.0 / a) > half_width / 8.0 {
        return Err(invalid(
            "time_grid",
            format!("spacing {h} too coarse: the first cell must resolve the kernel singularity well inside L = {half_width}"),
        ));
    }
    let cfg = KernelEval::default();
    let peak = density(alpha, 1.0, 0.0, &cfg)?;
    let q = 1.0 / a;
    let singular = peak * 2f64.powf(-q) * h.powf(1.0 - q) / (1.0 - q);
    let (nodes, weights) = gauss_legendre(24);
    let mut images = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let r = 0.5 * h * (x + 1.0);
        images += w * (torus_density(alpha, 2.0 * r, 0.0, half_width) - density(alpha, 2.0 * r, 0.0, &cfg)?);
    }
    images *= 0.5 * h;

    let mut out = Vec::with_capacity(count);
    if count > 0 {
        out.push(singular + images);
    }
    let base = std::f64::consts::PI / half_width;
    for m in 1..count {
        let (lo, hi) = (m as f64 * h, (m + 1) as f64 * h);
        let mut sum = h;
        let mut n = 1u64;
        loop {
            let rate = 2.0 * (base * n as f64).powf(a);
            let head = (-rate * lo).exp();
            if head < 1e-18 {
                break;
            }
            sum += 2.0 * (head - (-rate * hi).exp()) / rate;
            n += 1;
        }
        out.push(sum / (2.0 * half_width));
    }
    Ok(out)
}

/// `f(t) = E u(t, x)²` on a uniform time grid starting at 0, by
/// product-rectangle stepping (left endpoint in each cell).
pub fn volterra_second_moment(
    alpha: Alpha,
    lambda: f64,
    u0: f64,
    half_width: f64,
    time_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if time_grid.len() < 2 || time_grid[0] != 0.0 {
        return Err(invalid("time_grid", "must start at 0 and have at least two points"));
    }
    let h = time_grid[1];
    for (i, t) in time_grid.iter().enumerate() {
        if (t - i as f64 * h).abs() > 1e-9 * h.max(*t) {
            return Err(invalid("time_grid", "must be uniform"));
        }
    }
    let n = time_grid.len();
    let w = kernel_cell_weights(alpha, half_width, h, n - 1)?;
    let l2 = lambda * lambda;
    let start = u0 * u0;
    let mut f = Vec::with_capacity(n);
    f.push(start);
    for i in 1..n {
        let conv: f64 = (0..i).map(|j| w[i - 1 - j] * f[j]).sum();
        f.push(start + l2 * conv);
    }
    Ok(f)
}

/// `∫₀ᵗ p_L(2r, 0) dr`, the variance of the additive-noise solution
/// `σ ≡ 1`, `u₀ = 0`, `b = 0` at any point.
pub fn additive_variance(alpha: Alpha, half_width: f64, t: f64) -> Result<f64> {
    let steps = 1000;
    let w = kernel_cell_weights(alpha, half_width, t / steps as f64, steps)?;
    Ok(w.iter().sum())
}

//! The symmetric α-stable transition density and the identities it obeys.
//!
//! `p(t, x)` is the density of a symmetric stable process with
//! characteristic function `exp(-t|ξ|^α)`:
//!
//! ```text
//! p(t, x) = (1/π) ∫₀^∞ exp(-t ξ^α) cos(ξ x) dξ
//! ```
//!
//! For `α ∈ {1, 2}` the Cauchy and Gaussian closed forms are used. Otherwise
//! the inversion integral is evaluated by adaptive Gauss–Kronrod quadrature
//! along the ray `ξ = r·e^{iφ}` in the upper half plane. Rotating the contour
//! turns the oscillatory cosine transform into an exponentially damped one
//! without changing its value.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::{Arc, RwLock};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::quadrature::{self, QuadOptions};
use crate::spectral::LinearFlow;

/// Stability index `α ∈ (0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 && value <= 2.0 {
            Ok(Self(value))
        } else {
            Err(invalid("alpha", format!("must lie in (0, 2], got {value}")))
        }
    }

    /// Stability index admissible for the SPDE, `α ∈ (1, 2]`.
    pub fn for_spde(value: f64) -> Result<Self> {
        if value.is_finite() && value > 1.0 && value <= 2.0 {
            Ok(Self(value))
        } else {
            Err(invalid("alpha", format!("must lie in (1, 2], got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Quadrature and periodization settings for density evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    /// Absolute error target for a density value.
    pub quadrature_tolerance: f64,
    /// Truncation of the inversion integral, in the dimensionless frequency
    /// `η = (t·cos αφ)^{1/α}·r`, so the integrand at the cutoff is
    /// `exp(-η^α)`.
    pub frequency_cutoff: f64,
    /// Number of images on each side in [`density_periodized`].
    pub n_images: usize,
}

impl Default for KernelEval {
    fn default() -> Self {
        Self {
            quadrature_tolerance: 1e-12,
            frequency_cutoff: 40.0,
            n_images: 8,
        }
    }
}

impl KernelEval {
    /// Settings whose cutoff satisfies the truncation bound for `alpha`.
    pub fn for_alpha(alpha: Alpha) -> Self {
        let base = Self::default();
        let needed = (-base.quadrature_tolerance.ln() + 20.0).powf(1.0 / alpha.value());
        Self {
            frequency_cutoff: base.frequency_cutoff.max(needed),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quadrature_tolerance.is_finite() && self.quadrature_tolerance > 0.0) {
            return Err(invalid("kernel.tolerance", "must be positive"));
        }
        if !(self.frequency_cutoff.is_finite() && self.frequency_cutoff > 0.0) {
            return Err(invalid("kernel.cutoff", "must be positive"));
        }
        Ok(())
    }

    /// Upper bound on `(1/π)∫_Ξ^∞ exp(-t·c·r^α) dr` at the configured cutoff,
    /// where `c = cos(αφ)` for the quadrature ray.
    pub fn truncation_bound(&self, alpha: Alpha, t: f64) -> f64 {
        let a = alpha.value();
        let c = (ray_angle(a) * a).cos() * t;
        let eta = self.frequency_cutoff;
        let cutoff = eta / c.powf(1.0 / a);
        2.0 / PI * (-eta.powf(a)).exp() / (c * a * cutoff.powf(a - 1.0))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(invalid("t", format!("time must be positive, got {t}")))
    }
}

fn ray_angle(alpha: f64) -> f64 {
    FRAC_PI_4 / alpha.max(1.0)
}

/// Closed form for the Cauchy (`α = 1`) and Gaussian (`α = 2`) cases.
pub fn closed_form(alpha: Alpha, t: f64, x: f64) -> Option<f64> {
    match alpha.value() {
        1.0 => Some(t / (PI * (t * t + x * x))),
        2.0 => Some((-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()),
        _ => None,
    }
}

/// The density `p(t, x)`.
pub fn density(alpha: Alpha, t: f64, x: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(t)?;
    match closed_form(alpha, t, x.abs()) {
        Some(v) => Ok(v),
        None => density_quadrature(alpha, t, x, cfg),
    }
}

/// The density by quadrature of the inversion integral, for every `α`.
pub fn density_quadrature(alpha: Alpha, t: f64, x: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(t)?;
    cfg.validate()?;
    let a = alpha.value();
    let x = x.abs();
    let phi = ray_angle(a);
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (sin_aphi, cos_aphi) = (a * phi).sin_cos();
    let damping = t * cos_aphi;

    let time_cutoff = cfg.frequency_cutoff / damping.powf(1.0 / a);
    let space_cutoff = if x > 0.0 { 60.0 / (x * sin_phi) } else { f64::INFINITY };
    let upper = time_cutoff.min(space_cutoff);
    if time_cutoff <= space_cutoff {
        let bound = cfg.truncation_bound(alpha, t);
        if bound > 0.5 * cfg.quadrature_tolerance {
            return Err(Error::Truncation {
                bound,
                tolerance: cfg.quadrature_tolerance,
            });
        }
    }

    let integrand = |r: f64| {
        let ra = r.powf(a);
        let envelope = (-damping * ra - x * r * sin_phi).exp();
        if envelope == 0.0 {
            return 0.0;
        }
        envelope * (phi - t * ra * sin_aphi + x * r * cos_phi).cos()
    };
    let mut breaks = vec![0.0];
    breaks.extend([1024.0, 256.0, 64.0, 16.0, 4.0, 1.0].iter().map(|d| upper / d));
    let opts = QuadOptions {
        abs_tol: 0.5 * PI * cfg.quadrature_tolerance,
        max_panels: 4000,
    };
    let value = quadrature::integrate_breaks(integrand, &breaks, opts)?.value / PI;
    if value < 0.0 {
        if value < -cfg.quadrature_tolerance {
            return Err(Error::NegativeDensity { value });
        }
        return Ok(0.0);
    }
    Ok(value)
}

/// Image sum `Σ_{|n| ≤ n_images} p(t, x + 2Ln)`, the density wrapped onto
/// the torus `[-L, L)`.
pub fn density_periodized(alpha: Alpha, t: f64, x: f64, half_width: f64, cfg: &KernelEval) -> Result<f64> {
    if !(half_width > 0.0 && x.abs() <= half_width) {
        return Err(invalid("x", format!("must satisfy |x| <= L = {half_width}, got {x}")));
    }
    if cfg.n_images < 1 {
        return Err(invalid("kernel.images", "need at least one image"));
    }
    let period = 2.0 * half_width;
    let mut sum = density(alpha, t, x, cfg)?;
    for n in 1..=cfg.n_images {
        let shift = period * n as f64;
        sum += density(alpha, t, x + shift, cfg)? + density(alpha, t, x - shift, cfg)?;
    }
    Ok(sum)
}

/// The torus heat kernel `p_L(t, x)` from its Fourier series
/// `(1/2L) Σ_m exp(-t|πm/L|^α) cos(πm x/L)`.
///
/// By Poisson summation this is the `n_images → ∞` limit of
/// [`density_periodized`]; the series converges geometrically for `t > 0`.
pub fn torus_density(alpha: Alpha, t: f64, x: f64, half_width: f64) -> f64 {
    let a = alpha.value();
    let base = PI / half_width;
    let mut sum = 0.5;
    let mut m = 1u64;
    loop {
        let weight = (-t * (base * m as f64).powf(a)).exp();
        if weight < 1e-18 || m > 50_000_000 {
            break;
        }
        sum += weight * (base * m as f64 * x).cos();
        m += 1;
    }
    sum / half_width
}

/// `P_t u₀`: periodic convolution of grid samples with the torus kernel,
/// applied as the Fourier multiplier `exp(-t|k|^α)`. `t = 0` is the
/// identity.
pub fn semigroup_apply(alpha: Alpha, t: f64, u0: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    if u0.len() != grid.len() {
        return Err(Error::GridMismatch {
            expected: grid.len(),
            actual: u0.len(),
        });
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(invalid("t", format!("time must be nonnegative, got {t}")));
    }
    let mut u = u0.to_vec();
    if t > 0.0 {
        LinearFlow::new(grid, alpha.value(), t).apply(&mut u);
    }
    Ok(u)
}

/// `‖p(t,·)‖²_{L²} = p(2t, 0)`.
pub fn l2_norm_squared(alpha: Alpha, t: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(t)?;
    density(alpha, 2.0 * t, 0.0, cfg)
}

/// `∫_ℝ f(x) dx` for an even integrand concentrated on the scale `width`.
fn integrate_even_line<F: FnMut(f64) -> Result<f64>>(mut f: F, width: f64, abs_tol: f64) -> Result<f64> {
    let mut failure = None;
    let mut g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let opts = QuadOptions {
        abs_tol: 0.25 * abs_tol,
        max_panels: 2000,
    };
    let core = quadrature::integrate_breaks(&mut g, &[0.0, width, 4.0 * width, 16.0 * width], opts)?;
    let tail = quadrature::integrate_to_infinity(&mut g, 16.0 * width, 16.0 * width, opts)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(2.0 * (core.value + tail.value))
}

fn inner_cfg(cfg: &KernelEval) -> KernelEval {
    KernelEval {
        quadrature_tolerance: cfg.quadrature_tolerance.min(1e-13),
        ..*cfg
    }
}

/// `∫ p(t, x) p(s, x) dx` by quadrature over the line.
pub fn convolution_integral(alpha: Alpha, s: f64, t: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    let inner = inner_cfg(cfg);
    let width = s.max(t).powf(1.0 / alpha.value());
    integrate_even_line(
        |x| Ok(density(alpha, t, x, &inner)? * density(alpha, s, x, &inner)?),
        width,
        1e-9,
    )
}

/// `|∫ p(t,x) p(s,x) dx - p(t+s, 0)|`.
pub fn convolution_identity_residual(alpha: Alpha, s: f64, t: f64, cfg: &KernelEval) -> Result<f64> {
    let lhs = convolution_integral(alpha, s, t, cfg)?;
    let rhs = density(alpha, t + s, 0.0, cfg)?;
    Ok((lhs - rhs).abs())
}

/// `∫ p(t, x)² dx` by direct quadrature of the square.
pub fn l2_norm_squared_quadrature(alpha: Alpha, t: f64, cfg: &KernelEval) -> Result<f64> {
    convolution_integral(alpha, t, t, cfg)
}

/// `|p(st, x) - t^{-1/α} p(s, t^{-1/α} x)|`.
pub fn scaling_residual(alpha: Alpha, s: f64, t: f64, x: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    let factor = t.powf(-1.0 / alpha.value());
    let lhs = density(alpha, s * t, x, cfg)?;
    let rhs = factor * density(alpha, s, factor * x, cfg)?;
    Ok((lhs - rhs).abs())
}

/// Whether `p(t, (x-y)/a) ≥ p(t, x)·p(t, y)` holds at one sample.
///
/// Requires `a > 2` and `p(t, 0) ≤ 1`.
pub fn product_inequality_check(alpha: Alpha, t: f64, x: f64, y: f64, a: f64, cfg: &KernelEval) -> Result<bool> {
    check_time(t)?;
    if !(a > 2.0 && a.is_finite()) {
        return Err(invalid("a", format!("must exceed 2, got {a}")));
    }
    let peak = density(alpha, t, 0.0, cfg)?;
    if peak > 1.0 {
        return Err(Error::PeakAboveOne { t, peak });
    }
    let lhs = density(alpha, t, (x - y) / a, cfg)?;
    let rhs = density(alpha, t, x, cfg)? * density(alpha, t, y, cfg)?;
    Ok(lhs >= rhs)
}

/// `t^{3/α} ∫ p²(s, x) p²(t, x) dx` for `0 < s ≤ t`.
pub fn quadruple_product_ratio(alpha: Alpha, s: f64, t: f64, cfg: &KernelEval) -> Result<f64> {
    check_time(s)?;
    check_time(t)?;
    if s > t {
        return Err(invalid("s", format!("must not exceed t = {t}, got {s}")));
    }
    let inner = inner_cfg(cfg);
    let width = s.powf(1.0 / alpha.value());
    // The integrand scales like t^{-3/α}; tolerance follows it.
    let scale = t.powf(-3.0 / alpha.value());
    let integral = integrate_even_line(
        |x| {
            let ps = density(alpha, s, x, &inner)?;
            let pt = density(alpha, t, x, &inner)?;
            Ok(ps * ps * pt * pt)
        },
        width,
        1e-11 * scale,
    )?;
    Ok(integral / scale)
}

/// `Υ(β) = (1/2π) ∫ dξ / (β + 2|ξ|^α)`; `+∞` when `α ≤ 1`.
pub fn upsilon(alpha: Alpha, beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    let a = alpha.value();
    if a <= 1.0 {
        return Ok(f64::INFINITY);
    }
    // Split at R where β/(2R^α) = 1/10; beyond R expand the integrand in
    // powers of β/(2ξ^α) and integrate term by term.
    let r = (5.0 * beta).powf(1.0 / a);
    let head = quadrature::integrate_breaks(
        |xi| 1.0 / (beta + 2.0 * xi.powf(a)),
        &[0.0, r / 64.0, r / 8.0, r],
        QuadOptions {
            abs_tol: 1e-14 * r / beta,
            max_panels: 2000,
        },
    )?
    .value;
    let q = -beta / (2.0 * r.powf(a));
    let mut tail = 0.0;
    let mut qk = 1.0;
    for k in 0..60 {
        let order = a * (k + 1) as f64 - 1.0;
        tail += qk * r.powf(1.0 - a) / (2.0 * order);
        qk *= q;
        if qk.abs() < 1e-18 {
            break;
        }
    }
    Ok((head + tail) / PI)
}

/// Observed range of `p(t,x) / min(t^{-1/α}, t/|x|^{1+α})` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub sample_grid: Vec<(f64, f64)>,
}

pub fn envelope(alpha: Alpha, times: &[f64], xs: &[f64], cfg: &KernelEval) -> Result<EnvelopeReport> {
    let a = alpha.value();
    let mut report = EnvelopeReport {
        ratio_min: f64::INFINITY,
        ratio_max: 0.0,
        sample_grid: Vec::with_capacity(times.len() * xs.len()),
    };
    for &t in times {
        for &x in xs {
            let p = density(alpha, t, x, cfg)?;
            let bulk = t.powf(-1.0 / a);
            let tail = if x == 0.0 {
                f64::INFINITY
            } else {
                t / x.abs().powf(1.0 + a)
            };
            let ratio = p / bulk.min(tail);
            report.ratio_min = report.ratio_min.min(ratio);
            report.ratio_max = report.ratio_max.max(ratio);
            report.sample_grid.push((t, x));
        }
    }
    Ok(report)
}

/// The time `t₀` at which `p(t₀, 0) = 1`; `p(t, 0) ≤ 1` for all `t ≥ t₀`.
pub fn unit_density_time(alpha: Alpha, cfg: &KernelEval) -> Result<f64> {
    let (mut lo, mut hi) = (1e-6f64.ln(), 1e3f64.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if density(alpha, mid.exp(), 0.0, cfg)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(hi.exp())
}

type CacheKey = (u64, u64, u64, usize);

/// Write-once cache of torus kernel values `p_L(t, x_j)` on a grid, keyed by
/// `(α, t, L, n)`.
#[derive(Debug, Default)]
pub struct KernelCache {
    entries: RwLock<HashMap<CacheKey, Arc<Vec<f64>>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn grid_values(&self, alpha: Alpha, t: f64, grid: &Grid) -> Arc<Vec<f64>> {
        let key = (
            alpha.value().to_bits(),
            t.to_bits(),
            grid.half_width().to_bits(),
            grid.len(),
        );
        if let Some(hit) = self.entries.read().expect("cache lock").get(&key) {
            return Arc::clone(hit);
        }
        let values: Arc<Vec<f64>> = Arc::new(
            grid.points()
                .map(|x| torus_density(alpha, t, x, grid.half_width()))
                .collect(),
        );
        let mut map = self.entries.write().expect("cache lock");
        Arc::clone(map.entry(key).or_insert(values))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

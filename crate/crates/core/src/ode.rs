//! The blow-up ODE `y'(s)·s^b = y(s)^{1+a}` and the two reductions of the
//! moment inequalities to it.
//!
//! With `z = y^{-a}` the equation is linear, `z' = -a·s^{-b}`, which gives
//!
//! ```text
//! b = 1:  y(t)^{-a} = y₀^{-a} - a·ln(t/t₀)
//! b ≠ 1:  y(t)^{-a} = y₀^{-a} + a·(t^{1-b} - t₀^{1-b})/(b - 1)
//! ```
//!
//! Blow-up happens when the right-hand side reaches zero. For `b ≤ 1` it
//! always does; for `b > 1` it does iff `y₀^a > t₀^{b-1}(b-1)/a`.

use crate::error::{invalid, Error, Result};
use crate::kernel::Alpha;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSpec {
    /// Nonlinearity excess `a > 0`.
    pub a: f64,
    /// Time weight exponent `b ≥ 0`.
    pub b_exp: f64,
    pub t0: f64,
    pub y0: f64,
}

impl OdeSpec {
    pub fn new(a: f64, b_exp: f64, t0: f64, y0: f64) -> Result<Self> {
        let spec = Self { a, b_exp, t0, y0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive, got {v}")))
            }
        };
        positive("a", self.a)?;
        positive("t0", self.t0)?;
        positive("y0", self.y0)?;
        if !(self.b_exp.is_finite() && self.b_exp >= 0.0) {
            return Err(invalid("b", format!("must be nonnegative, got {}", self.b_exp)));
        }
        Ok(())
    }

    /// Blow-up threshold on `y₀^a` for `b > 1`; `None` when every positive
    /// initial value blows up.
    pub fn threshold(&self) -> Option<f64> {
        (self.b_exp > 1.0).then(|| self.t0.powf(self.b_exp - 1.0) * (self.b_exp - 1.0) / self.a)
    }

    /// `y(t)^{-a}` from the closed form; nonpositive once blown up.
    fn inverse_power(&self, t: f64) -> f64 {
        let z0 = self.y0.powf(-self.a);
        if self.b_exp == 1.0 {
            z0 - self.a * (t / self.t0).ln()
        } else {
            let e = 1.0 - self.b_exp;
            z0 + self.a * (t.powf(e) - self.t0.powf(e)) / (self.b_exp - 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupVerdict {
    pub blows_up: bool,
    pub t_star: Option<f64>,
    /// Limit of `y` as `t → ∞` when there is no blow-up. On the threshold
    /// itself `y` grows without bound but never in finite time; the limit is
    /// then `+∞`.
    pub asymptote: Option<f64>,
}

/// `y(t)` from the closed form; `+∞` at and beyond the blow-up time.
pub fn closed_form_value(spec: &OdeSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    if !(t >= spec.t0) {
        return Err(invalid("t", format!("must be at least t0 = {}, got {t}", spec.t0)));
    }
    if t == spec.t0 {
        return Ok(spec.y0);
    }
    let z = spec.inverse_power(t);
    if z <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(z.powf(-1.0 / spec.a))
    }
}

pub fn classify(spec: &OdeSpec) -> BlowupVerdict {
    let OdeSpec { a, b_exp: b, t0, y0 } = *spec;
    let z0 = y0.powf(-a);
    if b == 1.0 {
        return BlowupVerdict {
            blows_up: true,
            t_star: Some(t0 * (z0 / a).exp()),
            asymptote: None,
        };
    }
    if let Some(threshold) = spec.threshold() {
        if y0.powf(a) <= threshold {
            // z(∞) = z0 - a·t0^{1-b}/(b-1) ≥ 0
            let z_inf = z0 - a * t0.powf(1.0 - b) / (b - 1.0);
            let asymptote = if z_inf > 0.0 {
                z_inf.powf(-1.0 / a)
            } else {
                f64::INFINITY
            };
            return BlowupVerdict {
                blows_up: false,
                t_star: None,
                asymptote: Some(asymptote),
            };
        }
    }
    let inner = t0.powf(1.0 - b) - (b - 1.0) * z0 / a;
    BlowupVerdict {
        blows_up: true,
        t_star: Some((inner.ln() / (1.0 - b)).exp()),
        asymptote: None,
    }
}

/// Output of [`integrate_numeric`].
#[derive(Debug, Clone, PartialEq)]
pub struct NumericSolution {
    /// Accepted `(t, y)` pairs, starting at `(t0, y0)`.
    pub trajectory: Vec<(f64, f64)>,
    pub verdict: BlowupVerdict,
    /// Set when the step size collapsed before reaching the threshold.
    pub underflow: Option<f64>,
}

fn rhs(spec: &OdeSpec, s: f64, y: f64) -> f64 {
    y.powf(1.0 + spec.a) * s.powf(-spec.b_exp)
}

fn rk4(spec: &OdeSpec, s: f64, y: f64, h: f64) -> f64 {
    let k1 = rhs(spec, s, y);
    let k2 = rhs(spec, s + 0.5 * h, y + 0.5 * h * k1);
    let k3 = rhs(spec, s + 0.5 * h, y + 0.5 * h * k2);
    let k4 = rhs(spec, s + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Adaptive RK4 with step-doubling error control on `y' = y^{1+a}·s^{-b}`.
///
/// Blow-up is declared at the first accepted step with `y` above
/// `divergence_threshold`; the crossing time is interpolated linearly in
/// `y^{-a}`, which is locally linear in `t` near the asymptote.
pub fn integrate_numeric(
    spec: &OdeSpec,
    horizon: f64,
    divergence_threshold: f64,
    rel_tol: f64,
) -> Result<NumericSolution> {
    spec.validate()?;
    if !(horizon > spec.t0) {
        return Err(invalid("horizon", format!("must exceed t0 = {}", spec.t0)));
    }
    if !(divergence_threshold > spec.y0) {
        return Err(invalid("threshold", "must exceed y0"));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(invalid("rel_tol", format!("must lie in (0, 1), got {rel_tol}")));
    }
    let mut trajectory = vec![(spec.t0, spec.y0)];
    let (mut s, mut y) = (spec.t0, spec.y0);
    // Keep the first step well inside the local time scale y/y'.
    let mut h = (0.01 * y / rhs(spec, s, y)).min(0.01 * (horizon - s));
    let min_step = 1e-15 * horizon;

    while s < horizon {
        h = h.min(horizon - s);
        let full = rk4(spec, s, y, h);
        let half = rk4(spec, s, y, 0.5 * h);
        let two_half = rk4(spec, s + 0.5 * h, half, 0.5 * h);
        let err = (two_half - full).abs() / 15.0;
        let scale = rel_tol * two_half.abs().max(y);
        if !two_half.is_finite() || err > scale {
            h *= if two_half.is_finite() {
                (0.9 * (scale / err).powf(0.2)).max(0.1)
            } else {
                0.1
            };
            if h < 4.0 * f64::EPSILON * s.max(min_step) {
                // Time resolution is exhausted. The frozen-coefficient time
                // to blow-up, y^{-a}·s^b/a, decides whether this is the
                // vertical asymptote or a genuine integration failure.
                let remaining = y.powf(-spec.a) * s.powf(spec.b_exp) / spec.a;
                if y > divergence_threshold || remaining < 64.0 * f64::EPSILON * s {
                    return Ok(NumericSolution {
                        trajectory,
                        verdict: blown(s + remaining),
                        underflow: Some(s),
                    });
                }
                return Err(Error::StepUnderflow { t: s, y });
            }
            continue;
        }
        let y_new = two_half + (two_half - full) / 15.0;
        let s_new = s + h;
        if y_new > divergence_threshold {
            let (za, zb) = (y.powf(-spec.a), y_new.powf(-spec.a));
            let zt = divergence_threshold.powf(-spec.a);
            let crossing = s + h * (za - zt) / (za - zb);
            trajectory.push((s_new, y_new));
            return Ok(NumericSolution {
                trajectory,
                verdict: blown(crossing),
                underflow: None,
            });
        }
        s = s_new;
        y = y_new;
        trajectory.push((s, y));
        let grow = if err > 0.0 {
            (0.9 * (scale / err).powf(0.2)).min(4.0)
        } else {
            4.0
        };
        h *= grow;
    }
    Ok(NumericSolution {
        trajectory,
        verdict: BlowupVerdict {
            blows_up: false,
            t_star: None,
            asymptote: None,
        },
        underflow: None,
    })
}

fn blown(t: f64) -> BlowupVerdict {
    BlowupVerdict {
        blows_up: true,
        t_star: Some(t),
        asymptote: None,
    }
}

/// Which growth condition the reduction starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `σ(x) ≥ K₁|x|^{1+β}`: second-moment functional `F`.
    A,
    /// `b(x) ≥ K₂|x|^{1+γ}`: first-moment functional `G`.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionSpec {
    pub kind: Condition,
    pub alpha: Alpha,
    /// `β` under condition A, `γ` under condition B.
    pub excess: f64,
    pub kappa: f64,
    pub t0: f64,
    /// Unspecified positive constant multiplying `Y(t₀)`; qualitative only.
    pub front_constant: f64,
}

impl ReductionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kind == Condition::A {
            Alpha::for_spde(self.alpha.value())?;
        }
        for (name, v) in [
            ("excess", self.excess),
            ("kappa", self.kappa),
            ("t0", self.t0),
            ("front_constant", self.front_constant),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Map a growth condition onto the comparison ODE.
///
/// Condition A: `Y = F·t^{5/α}`, `Y' t^{(3+4β)/α} = c·Y^{1+β}`,
/// `Y(t₀) = c·κ²·t₀^{4/α}`. Condition B: `Y = G·t^{1/α}`,
/// `Y' t^{γ/α} = c·Y^{1+γ}`, `Y(t₀) = c·κ·t₀^{1/α}`.
pub fn reduce_theorem(spec: &ReductionSpec) -> Result<OdeSpec> {
    spec.validate()?;
    let alpha = spec.alpha.value();
    let (b_exp, y0) = match spec.kind {
        Condition::A => (
            (3.0 + 4.0 * spec.excess) / alpha,
            spec.kappa * spec.kappa * spec.t0.powf(4.0 / alpha),
        ),
        Condition::B => (spec.excess / alpha, spec.kappa * spec.t0.powf(1.0 / alpha)),
    };
    OdeSpec::new(spec.excess, b_exp, spec.t0, spec.front_constant * y0)
}

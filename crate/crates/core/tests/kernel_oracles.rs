use std::f64::consts::PI;

use fracblow::grid::Grid;
use fracblow::kernel::{self, Alpha, KernelEval};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

/// Composite Simpson of `(1/π)∫₀^Ξ exp(-tξ^α) cos(ξx) dξ` on the real
/// axis, independent of the rotated-contour evaluation.
fn simpson_density(a: f64, t: f64, x: f64) -> f64 {
    let upper = (60.0 / t).powf(1.0 / a);
    let n = 400_000;
    let h = upper / n as f64;
    let f = |xi: f64| (-t * xi.powf(a)).exp() * (xi * x).cos();
    let mut sum = f(0.0) + f(upper);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0 / PI
}

#[test]
fn peak_matches_gamma_function() {
    for a in [0.7, 1.2, 1.5, 1.8] {
        for t in [0.5, 1.0, 4.0] {
            let cfg = KernelEval::for_alpha(alpha(a));
            let p = kernel::density(alpha(a), t, 0.0, &cfg).unwrap();
            let exact = gamma(1.0 + 1.0 / a) / (PI * t.powf(1.0 / a));
            assert!((p - exact).abs() < 1e-10, "alpha={a} t={t}: {p} vs {exact}");
        }
    }
}

#[test]
fn off_axis_values_match_real_axis_simpson() {
    for (a, t, x) in [(1.5, 1.0, 0.0), (1.5, 1.0, 2.0), (1.3, 0.7, 0.4), (1.8, 2.0, 5.0)] {
        let cfg = KernelEval::for_alpha(alpha(a));
        let p = kernel::density(alpha(a), t, x, &cfg).unwrap();
        let oracle = simpson_density(a, t, x);
        assert!((p - oracle).abs() < 1e-8, "alpha={a} t={t} x={x}: {p} vs {oracle}");
    }
}

/// `p(1, 1)` at α = 1.5 from `simpson_density`.
const FROZEN_P_15_1_1: f64 = 0.202_038_159_607_863;

#[test]
fn frozen_values() {
    // Values from the Simpson oracle above, frozen.
    let cfg = KernelEval::for_alpha(alpha(1.5));
    let p = kernel::density(alpha(1.5), 1.0, 1.0, &cfg).unwrap();
    assert!((p - FROZEN_P_15_1_1).abs() < 1e-12, "{p}");
    assert!((kernel::l2_norm_squared(alpha(1.0), 1.0, &cfg).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-12);
    assert!((kernel::l2_norm_squared(alpha(2.0), 1.0, &cfg).unwrap() - 1.0 / (8.0 * PI).sqrt()).abs() < 1e-12);
}

#[test]
fn l2_norm_by_quadrature_of_the_square() {
    let a = alpha(1.5);
    let cfg = KernelEval::for_alpha(a);
    let direct = kernel::l2_norm_squared_quadrature(a, 1.0, &cfg).unwrap();
    let identity = kernel::l2_norm_squared(a, 1.0, &cfg).unwrap();
    assert!((direct - identity).abs() < 1e-6);
}

#[test]
fn normalization_and_unimodality() {
    for a in [1.2, 1.5, 1.9] {
        let cfg = KernelEval::for_alpha(alpha(a));
        let t = 1.0;
        let half = 400.0;
        let h = 0.01;
        let n = (2.0 * half / h) as usize;
        let mut mass = 0.0;
        let mut prev = f64::INFINITY;
        for i in 0..=n {
            let x = -half + i as f64 * h;
            let p = kernel::density(alpha(a), t, x, &cfg).unwrap();
            mass += if i == 0 || i == n { 0.5 * p } else { p };
            if x >= 0.0 {
                assert!(p <= prev + 1e-15, "not unimodal at x={x}");
                prev = p;
            }
        }
        mass *= h;
        // Tail beyond |x| = X carries about 2·c_α·t/(α X^α) of mass.
        let c = gamma(1.0 + a) * (PI * a / 2.0).sin() / PI;
        let tail = 2.0 * c * t / (a * half.powf(a));
        assert!((mass + tail - 1.0).abs() < 1e-4, "alpha={a}: mass {mass} tail {tail}");
    }
}

#[test]
fn periodic_cauchy_matches_closed_sum() {
    // Σ_n t/(π(t² + (x+2Ln)²)) = sinh(πt/L) / (2L(cosh(πt/L) - cos(πx/L))).
    let (l, a) = (3.0, alpha(1.0));
    for t in [0.2, 1.0, 2.5] {
        for x in [0.0, 0.7, -2.9] {
            let exact = (PI * t / l).sinh() / (2.0 * l * ((PI * t / l).cosh() - (PI * x / l).cos()));
            let torus = kernel::torus_density(a, t, x, l);
            assert!((torus - exact).abs() < 1e-10, "t={t} x={x}: {torus} vs {exact}");
        }
    }
}

#[test]
fn torus_and_image_sums_agree() {
    let a = alpha(1.5);
    let cfg = KernelEval {
        n_images: 200,
        ..KernelEval::for_alpha(a)
    };
    for x in [0.0, 1.0, -4.0] {
        let images = kernel::density_periodized(a, 0.5, x, 5.0, &cfg).unwrap();
        let torus = kernel::torus_density(a, 0.5, x, 5.0);
        assert!((images - torus).abs() < 1e-6, "x={x}: {images} vs {torus}");
    }
}

#[test]
fn semigroup_of_point_mass_is_periodized_kernel() {
    let grid = Grid::new(10.0, 256).unwrap();
    let a = alpha(2.0);
    let cfg = KernelEval::for_alpha(a);
    let mut u0 = vec![0.0; grid.len()];
    u0[grid.origin_index()] = 1.0 / grid.dx();
    let u = kernel::semigroup_apply(a, 1.0, &u0, &grid).unwrap();
    for (j, v) in u.iter().enumerate() {
        let want = kernel::density_periodized(a, 1.0, grid.x(j), 10.0, &cfg).unwrap();
        assert!((v - want).abs() < 1e-6, "j={j}");
    }
    let constant = kernel::semigroup_apply(a, 1.0, &vec![3.0; grid.len()], &grid).unwrap();
    assert!(constant.iter().all(|v| (v - 3.0).abs() < 1e-6));
}

#[test]
fn quadruple_product_cauchy_value() {
    // ∫ (π(1+x²))^{-4} dx = 5π/16 / π⁴.
    let ratio = kernel::quadruple_product_ratio(alpha(1.0), 1.0, 1.0, &KernelEval::default()).unwrap();
    assert!((ratio - 5.0 / (16.0 * PI.powi(3))).abs() < 1e-10);
}

#[test]
fn upsilon_values() {
    assert!((kernel::upsilon(alpha(2.0), 2.0).unwrap() - 0.25).abs() < 1e-12);
    assert!((kernel::upsilon(alpha(2.0), 8.0).unwrap() - 0.125).abs() < 1e-12);
    assert!(kernel::upsilon(alpha(1.0), 1.0).unwrap().is_infinite());
    assert!(kernel::upsilon(alpha(2.0), 0.0).is_err());
}

#[test]
fn product_inequality_examples() {
    let cfg = KernelEval::default();
    assert!(kernel::product_inequality_check(alpha(2.0), 1.0, 0.0, 0.0, 3.0, &cfg).unwrap());
    assert!(kernel::product_inequality_check(alpha(1.0), 1.0, 2.0, -2.0, 4.0, &cfg).unwrap());
    assert!(kernel::product_inequality_check(alpha(2.0), 0.01, 0.0, 0.0, 3.0, &cfg).is_err());
}

#[test]
fn unit_density_time_is_closed_form() {
    for a in [1.2, 1.5, 2.0] {
        let t0 = kernel::unit_density_time(alpha(a), &KernelEval::for_alpha(alpha(a))).unwrap();
        let exact = (gamma(1.0 + 1.0 / a) / PI).powf(a);
        assert!((t0 - exact).abs() < 1e-10 * exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_is_symmetric(a in 0.5f64..=2.0, t in 0.1f64..5.0, x in -20.0f64..20.0) {
        let cfg = KernelEval::for_alpha(alpha(a));
        let p = kernel::density(alpha(a), t, x, &cfg).unwrap();
        let q = kernel::density(alpha(a), t, -x, &cfg).unwrap();
        prop_assert_eq!(p.to_bits(), q.to_bits());
        prop_assert!(p >= 0.0);
    }

    #[test]
    fn scaling_holds(a in 1.05f64..=2.0, s in 0.1f64..3.0, t in 0.2f64..5.0, x in -5.0f64..5.0) {
        let cfg = KernelEval::for_alpha(alpha(a));
        let r = kernel::scaling_residual(alpha(a), s, t, x, &cfg).unwrap();
        prop_assert!(r <= 2.0 * cfg.quadrature_tolerance, "residual {}", r);
    }
}

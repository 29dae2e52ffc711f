use fracblow::kernel::{torus_density, Alpha};
use fracblow::moments::{
    functional_weight_sums, phase_experiment, run_ensemble, run_ensemble_with_threads, EnsembleConfig, PhaseConfig,
    PhaseVerdict,
};
use fracblow::ode::Condition;
use fracblow::spde::{CoeffSpec, InitSpec, SpdeConfig};
use fracblow::volterra::{additive_variance, kernel_cell_weights, volterra_second_moment};
use fracblow::Grid;
use statrs::function::erf::erfc;

/// Whole-line α = 2 solution of `f = 1 + ∫(8π(t-s))^{-1/2} f(s) ds`:
/// `E_{1/2}(√(t/8)) = e^{t/8}·erfc(-√(t/8))`.
fn gaussian_oracle(t: f64) -> f64 {
    (t / 8.0).exp() * erfc(-(t / 8.0).sqrt())
}

fn uniform(t: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t * i as f64 / n as f64).collect()
}

#[test]
fn volterra_matches_mittag_leffler_oracle() {
    let two = Alpha::new(2.0).unwrap();
    let f = volterra_second_moment(two, 1.0, 1.0, 10.0, &uniform(1.0, 1000)).unwrap();
    for (i, want) in [(250, 1.235_4), (500, 1.358_6), (1000, 1.567_0)] {
        let oracle = gaussian_oracle(i as f64 / 1000.0);
        assert!((oracle - want).abs() < 1e-4, "oracle drift at {i}: {oracle}");
        assert!((f[i] - oracle).abs() < 1e-3 * oracle, "t={}: {} vs {oracle}", i as f64 / 1000.0, f[i]);
    }
}

#[test]
fn volterra_converges_under_refinement() {
    let a = Alpha::new(1.5).unwrap();
    let coarse = volterra_second_moment(a, 1.0, 1.0, 10.0, &uniform(1.0, 500)).unwrap();
    let fine = volterra_second_moment(a, 1.0, 1.0, 10.0, &uniform(1.0, 1000)).unwrap();
    let finer = volterra_second_moment(a, 1.0, 1.0, 10.0, &uniform(1.0, 2000)).unwrap();
    let (c, m, f) = (coarse[500], fine[1000], finer[2000]);
    assert!((m - f).abs() < (c - m).abs(), "{c} {m} {f}");
    assert!((m - f).abs() < 1e-3 * f);
}

#[test]
fn additive_variance_matches_whole_line_value() {
    // ∫₀¹ (8πr)^{-1/2} dr = 1/√(2π) on the line; the torus adds e^{-L²/2}-small images.
    let v = additive_variance(Alpha::new(2.0).unwrap(), 10.0, 1.0).unwrap();
    assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6, "{v}");
    let w = kernel_cell_weights(Alpha::new(1.5).unwrap(), 10.0, 1e-3, 10).unwrap();
    assert!(w.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn functional_weights_reproduce_kernel_identities() {
    let grid = Grid::new(10.0, 512).unwrap();
    for a in [1.2, 1.5, 1.8, 2.0] {
        let alpha = Alpha::new(a).unwrap();
        for t in [0.05, 0.5, 2.0] {
            let (g, f) = functional_weight_sums(alpha, t, &grid);
            assert!((g - 1.0).abs() < 1e-4);
            assert!((f - torus_density(alpha, 2.0 * t, 0.0, 10.0)).abs() < 1e-4);
        }
    }
}

fn small_linear(n: usize) -> EnsembleConfig {
    let base = SpdeConfig {
        diffusion: CoeffSpec::Linear(1.0),
        n_grid: 64,
        half_width: 5.0,
        dt: 1e-3,
        horizon: 0.3,
        seed: 4,
        ..SpdeConfig::default()
    };
    EnsembleConfig {
        base,
        n_replicates: n,
        record_times: vec![0.0, 0.1, 0.2, 0.3],
        probe_points: vec![0, 32],
        moments_p: vec![1.0, 2.0],
    }
}

#[test]
fn ensemble_is_independent_of_worker_count() {
    let cfg = small_linear(16);
    let one = run_ensemble_with_threads(&cfg, Some(1)).unwrap();
    let four = run_ensemble_with_threads(&cfg, Some(4)).unwrap();
    assert_eq!(one.estimates, four.estimates);
    assert_eq!(one.functionals, four.functionals);
    assert_eq!(one.statuses, four.statuses);
}

#[test]
fn initial_moments_are_exact() {
    let res = run_ensemble(&small_linear(8)).unwrap();
    for e in res.estimates.iter().filter(|e| e.t == 0.0) {
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.std_error, 0.0);
    }
    assert_eq!(res.functionals.times, vec![0.1, 0.2, 0.3]);
}

#[test]
fn censoring_counts_only_live_paths() {
    let mut cfg = small_linear(12);
    cfg.base.diffusion = CoeffSpec::Power { k: 1.0, exponent: 2.0 };
    cfg.base.init = InitSpec::Constant(3.0);
    cfg.base.blowup_threshold = 1e6;
    let res = run_ensemble(&cfg).unwrap();
    for e in &res.estimates {
        let alive = res
            .statuses
            .iter()
            .filter(|s| s.blow_time().is_none_or(|t| t > e.t))
            .count();
        assert_eq!(e.n_alive, alive, "{e:?}");
        assert_eq!(e.mean.is_finite(), alive > 0);
    }
}

#[test]
fn phase_blowup_set_is_upward_closed_in_kappa() {
    let cfg = PhaseConfig {
        condition: Condition::B,
        kappas: vec![0.05, 0.5, 2.0, 8.0],
        excesses: vec![1.0],
        alphas: vec![1.5, 2.0],
        base: SpdeConfig {
            n_grid: 64,
            half_width: 5.0,
            dt: 1e-3,
            horizon: 1.0,
            diffusion: CoeffSpec::Linear(0.5),
            seed: 21,
            ..SpdeConfig::default()
        },
        coefficient: 1.0,
        n_replicates: 8,
    };
    let cells = phase_experiment(&cfg).unwrap();
    assert_eq!(cells.len(), 8);
    for row in cells.chunks(4) {
        let blew: Vec<bool> = row
            .iter()
            .map(|c| matches!(c.verdict, PhaseVerdict::BlewUp { .. }))
            .collect();
        let flips = blew.windows(2).filter(|w| w[0] && !w[1]).count();
        assert!(flips <= 1, "{row:?}");
        assert!(blew[3], "large kappa should blow up: {row:?}");
    }
}

#[test]
fn oversized_phase_grids_are_rejected() {
    let cfg = PhaseConfig {
        condition: Condition::A,
        kappas: (1..=9).map(f64::from).collect(),
        excesses: vec![0.5; 8],
        alphas: vec![2.0],
        base: SpdeConfig::default(),
        coefficient: 1.0,
        n_replicates: 2,
    };
    assert!(phase_experiment(&cfg).is_err());
}

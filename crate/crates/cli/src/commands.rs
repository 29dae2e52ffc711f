use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use fracblow::io;
use fracblow::kernel::{Alpha, KernelEval};
use fracblow::moments::{
    detect_moment_blowup, estimate_lyapunov, phase_experiment, run_ensemble, EnsembleConfig, EnsembleResult,
    PhaseConfig, PhaseVerdict,
};
use fracblow::ode::{classify, integrate_numeric, reduce_theorem, Condition, OdeSpec, ReductionSpec};
use fracblow::spde::{self, BlowupCause, CoeffSpec, InitSpec, SpdeConfig, TrajectoryStatus};
use fracblow::{verify, volterra};

use crate::config::{spde_config, Params};
use crate::Failure;

/// Where artifacts go: a directory, or stdout for the main CSV.
pub struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", d.display())))?;
        }
        Ok(Self { dir })
    }

    fn to_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` into the output directory; the main artifact goes to
    /// stdout when there is no directory, others are dropped.
    fn write(
        &self,
        name: &str,
        main: bool,
        f: impl FnOnce(&mut dyn Write) -> fracblow::Result<()>,
    ) -> Result<(), Failure> {
        match &self.dir {
            Some(d) => {
                let mut w = BufWriter::new(File::create(d.join(name))?);
                f(&mut w)?;
                w.flush()?;
            }
            None if main => {
                let stdout = std::io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock)?;
            }
            None => {}
        }
        Ok(())
    }

    /// Summary lines: stdout when CSVs go to files, stderr otherwise.
    fn say(&self, line: &str) {
        if self.to_dir() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

fn validated(cfg: &SpdeConfig) -> Result<(), Failure> {
    cfg.validate()?;
    if !cfg.tail_rule_satisfied() {
        eprintln!(
            "warning: domain.half_width = {} is below 8·horizon^(1/alpha) = {:.3}; periodic images may matter",
            cfg.half_width,
            8.0 * cfg.horizon.powf(1.0 / cfg.alpha)
        );
    }
    Ok(())
}

pub fn kernel_check(p: &mut Params, out: &Output) -> Result<(), Failure> {
    let alpha = Alpha::new(p.take_or("alpha", 2.0)?)?;
    let defaults = KernelEval::for_alpha(alpha);
    let cfg = KernelEval {
        quadrature_tolerance: p.take_or("kernel.tolerance", defaults.quadrature_tolerance)?,
        frequency_cutoff: p.take_or("kernel.cutoff", defaults.frequency_cutoff)?,
        n_images: p.take_or("kernel.images", defaults.n_images)?,
    };
    std::mem::take(p).finish()?;
    cfg.validate()?;
    let rows = verify::kernel_suite(alpha, &cfg)?;
    let mut failed = Vec::new();
    println!("kernel checks, alpha = {}", alpha.value());
    for (name, ok, detail) in &rows {
        println!("{:<20} {:<4} {detail}", name, if *ok { "pass" } else { "FAIL" });
        if !ok {
            failed.push(name.as_str());
        }
    }
    if let Some(d) = &out.dir {
        let mut w = csv_writer(d.join("kernel_check.csv"))?;
        w.write_record(["check", "passed", "detail"]).map_err(fracblow::Error::from)?;
        for (name, ok, detail) in &rows {
            w.write_record([name.as_str(), if *ok { "true" } else { "false" }, detail.as_str()])
                .map_err(fracblow::Error::from)?;
        }
        w.flush()?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(format!("failed checks: {}", failed.join(", "))))
    }
}

fn csv_writer(path: PathBuf) -> Result<csv::Writer<File>, Failure> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn ode_spec(p: &mut Params) -> Result<(OdeSpec, Option<String>), Failure> {
    match p.take_str("reduction") {
        None => {
            let spec = OdeSpec {
                a: p.require("a")?,
                b_exp: p.require("b")?,
                t0: p.take_or("t0", 1.0)?,
                y0: p.require("y0")?,
            };
            spec.validate()?;
            Ok((spec, None))
        }
        Some(kind) => {
            let kind = match kind.as_str() {
                "conditionA" | "A" => Condition::A,
                "conditionB" | "B" => Condition::B,
                other => {
                    return Err(Failure::Config(format!(
                        "key `reduction`: expected conditionA or conditionB, got {other:?}"
                    )))
                }
            };
            let excess_key = if kind == Condition::A { "beta" } else { "gamma" };
            let spec = ReductionSpec {
                kind,
                alpha: Alpha::new(p.require("alpha")?)?,
                excess: p.require(excess_key)?,
                kappa: p.require("kappa")?,
                t0: p.take_or("t0", 1.0)?,
                front_constant: p.take_or("front_constant", 1.0)?,
            };
            let ode = reduce_theorem(&spec)?;
            let note = format!(
                "reduction {:?}: a = {}, b_exp = {}, y0 = {} (front_constant {} is qualitative)",
                kind, ode.a, ode.b_exp, ode.y0, spec.front_constant
            );
            Ok((ode, Some(note)))
        }
    }
}

pub fn ode(p: &mut Params, out: &Output) -> Result<(), Failure> {
    let (spec, note) = ode_spec(p)?;
    let numeric: bool = p.take_or("numeric", true)?;
    let exact = classify(&spec);
    let horizon: f64 = p.take_or("horizon", exact.t_star.map_or(100.0 * spec.t0, |t| 1.5 * t))?;
    let threshold: f64 = p.take_or("threshold", 1e8)?;
    let rel_tol: f64 = p.take_or("rel_tol", 1e-8)?;
    std::mem::take(p).finish()?;
    if let Some(n) = note {
        println!("{n}");
    }
    println!("{}", io::format_verdict(&exact));
    if numeric {
        let sol = integrate_numeric(&spec, horizon, threshold, rel_tol)?;
        println!("numeric (horizon {horizon}): {}", io::format_verdict(&sol.verdict));
        if let Some(t) = sol.underflow {
            println!("numeric step size underflowed at t = {t}");
        }
        if let Some(d) = &out.dir {
            let mut w = BufWriter::new(File::create(d.join("ode.csv"))?);
            io::write_ode_trajectory(&mut w, &sol.trajectory)?;
            w.flush()?;
        }
    }
    if let Some(d) = &out.dir {
        std::fs::write(d.join("ode_verdict.txt"), format!("{}\n", io::format_verdict(&exact)))?;
    }
    Ok(())
}

fn status_line(status: &TrajectoryStatus) -> String {
    match status {
        TrajectoryStatus::Completed => "status=completed".into(),
        TrajectoryStatus::BlownUp { t_blow, cause } => {
            let cause = match cause {
                BlowupCause::Threshold => "threshold",
                BlowupCause::NonFinite => "non_finite",
            };
            format!("status=blown_up,t_blow={t_blow},cause={cause}")
        }
    }
}

fn non_finite(statuses: &[TrajectoryStatus]) -> usize {
    statuses
        .iter()
        .filter(|s| {
            matches!(
                s,
                TrajectoryStatus::BlownUp {
                    cause: BlowupCause::NonFinite,
                    ..
                }
            )
        })
        .count()
}

fn record_times(p: &mut Params, horizon: f64, default_count: usize) -> Result<Vec<f64>, Failure> {
    Ok(match p.take_list("record.times")? {
        Some(v) => v,
        None => (0..=default_count)
            .map(|i| horizon * i as f64 / default_count as f64)
            .collect(),
    })
}

pub fn simulate(p: &mut Params, out: &Output) -> Result<(), Failure> {
    let cfg = spde_config(p)?;
    let times = record_times(p, cfg.horizon, 4)?;
    std::mem::take(p).finish()?;
    validated(&cfg)?;
    let grid = cfg.grid()?;
    let res = spde::simulate(&cfg, &times)?;
    out.write("snapshots.csv", true, |w| io::write_snapshots(w, &grid, &res.snapshots))?;
    out.say(&format!("{},rng_draws={}", status_line(&res.status), res.rng_draws));
    if non_finite(std::slice::from_ref(&res.status)) > 0 {
        return Err(Failure::Numerical(
            "the field became non-finite before crossing the blow-up threshold".into(),
        ));
    }
    Ok(())
}

/// Moment oracle for the linear cases with constant initial data.
fn oracle_footer(cfg: &EnsembleConfig, result: &EnsembleResult, out: &Output) -> Result<(), Failure> {
    let base = &cfg.base;
    if !base.drift.is_zero() {
        return Ok(());
    }
    let alpha = Alpha::for_spde(base.alpha)?;
    let horizon = base.horizon;
    if horizon <= 0.0 {
        return Ok(());
    }
    let steps = (1000.0 * horizon.ceil()).max(1000.0) as usize;
    let second_moment: Box<dyn Fn(f64) -> f64> = match (&base.diffusion, &base.init) {
        (CoeffSpec::Linear(lambda), InitSpec::Constant(kappa)) => {
            let grid: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
            let f = volterra::volterra_second_moment(alpha, *lambda, *kappa, base.half_width, &grid)?;
            Box::new(move |t: f64| {
                let x = t / horizon * steps as f64;
                let i = (x.floor() as usize).min(steps - 1);
                let w = x - i as f64;
                (1.0 - w) * f[i] + w * f[i + 1]
            })
        }
        (CoeffSpec::Constant(c), InitSpec::Zero) => {
            let c2 = c * c;
            let half_width = base.half_width;
            let mut cache = Vec::new();
            for e in result.estimates.iter().filter(|e| e.t > 0.0) {
                cache.push((e.t, c2 * volterra::additive_variance(alpha, half_width, e.t)?));
            }
            Box::new(move |t: f64| {
                cache
                    .iter()
                    .find(|(s, _)| *s == t)
                    .map_or(f64::NAN, |(_, v)| *v)
            })
        }
        _ => return Ok(()),
    };
    out.say("# oracle: second moment from the Itô isometry");
    for e in result.estimates.iter().filter(|e| e.p == 2.0 && e.t > 0.0) {
        let want = second_moment(e.t);
        let z = (e.mean - want) / e.std_error;
        out.say(&format!(
            "# oracle t={} x={} mc={} se={} oracle={} z={:.3}",
            e.t, e.probe_x, e.mean, e.std_error, want, z
        ));
    }
    Ok(())
}

pub fn ensemble(p: &mut Params, out: &Output) -> Result<(), Failure> {
    let base = spde_config(p)?;
    let grid = base.grid()?;
    let n_replicates = p.take_or("ensemble.replicates", 100)?;
    let probes_x: Vec<f64> = p.take_list("ensemble.probes")?.unwrap_or_else(|| vec![0.0]);
    let moments_p = p.take_list("ensemble.moments")?.unwrap_or_else(|| vec![2.0]);
    let times = record_times(p, base.horizon, 10)?;
    let threshold: f64 = p.take_or("moment.threshold", 1e6)?;
    let window: Vec<f64> = p
        .take_list("lyapunov.window")?
        .unwrap_or_else(|| vec![0.5 * base.horizon, base.horizon]);
    std::mem::take(p).finish()?;
    if window.len() != 2 {
        return Err(Failure::Config("key `lyapunov.window`: expected two times".into()));
    }
    validated(&base)?;
    let cfg = EnsembleConfig {
        base,
        n_replicates,
        record_times: times,
        probe_points: probes_x.iter().map(|&x| grid.index_of(x)).collect(),
        moments_p,
    };
    let result = run_ensemble(&cfg)?;
    out.write("moments.csv", true, |w| io::write_moments(w, &result.estimates))?;
    out.write("functionals.csv", false, |w| {
        io::write_functionals(w, &io::functional_rows(&result.functionals))
    })?;

    out.say(&format!("fraction_blown={}", result.fraction_blown()));
    let n = cfg.n_replicates;
    let report = |label: String, t: Option<f64>| match t {
        Some(t) => format!("numerical blow-up ({label}): t={t}"),
        None => format!("numerical blow-up ({label}): none before the last record time"),
    };
    out.say(&report("F".into(), detect_moment_blowup(&result.functionals.f_points(), n, threshold)));
    out.say(&report("G".into(), detect_moment_blowup(&result.functionals.g_points(), n, threshold)));
    for &j in &cfg.probe_points {
        for &q in &cfg.moments_p {
            let x = grid.x(j);
            out.say(&report(
                format!("E|u(t,{x})|^{q}"),
                detect_moment_blowup(&result.moment_points(j, q), n, threshold),
            ));
            match estimate_lyapunov(&result.estimates, j, q, (window[0], window[1])) {
                Ok(fit) => out.say(&format!(
                    "gamma_hat(p={q}, x={x}) = {} ± {} over [{}, {}] ({} points)",
                    fit.gamma_hat, fit.std_error, window[0], window[1], fit.n_points
                )),
                Err(e) => out.say(&format!("gamma_hat(p={q}, x={x}) unavailable: {e}")),
            }
        }
    }
    oracle_footer(&cfg, &result, out)?;
    let bad = non_finite(&result.statuses);
    if bad > 0 {
        return Err(Failure::Numerical(format!(
            "{bad} replicate(s) became non-finite before crossing the blow-up threshold"
        )));
    }
    Ok(())
}

pub fn phase(p: &mut Params, out: &Output) -> Result<(), Failure> {
    let condition = match p.take_str("phase.condition").as_deref() {
        Some("A") | Some("conditionA") | None => Condition::A,
        Some("B") | Some("conditionB") => Condition::B,
        Some(other) => {
            return Err(Failure::Config(format!(
                "key `phase.condition`: expected A or B, got {other:?}"
            )))
        }
    };
    let base = spde_config(p)?;
    let cfg = PhaseConfig {
        condition,
        kappas: p.take_list("phase.kappas")?.unwrap_or_else(|| vec![0.01, 10.0]),
        excesses: p.take_list("phase.excesses")?.unwrap_or_else(|| vec![0.5]),
        alphas: p.take_list("phase.alphas")?.unwrap_or_else(|| vec![base.alpha]),
        coefficient: p.take_or("phase.k", 1.0)?,
        n_replicates: p.take_or("phase.replicates", 20)?,
        base,
    };
    std::mem::take(p).finish()?;
    for &a in &cfg.alphas {
        validated(&cfg.cell_config(a, cfg.excesses.first().copied().unwrap_or(1.0), 1.0))?;
    }
    let cells = phase_experiment(&cfg)?;
    out.write("phase.csv", true, |w| io::write_phase(w, &cells))?;
    for c in &cells {
        let verdict = match c.verdict {
            PhaseVerdict::BlewUp { median_t_blow } => format!("blew_up (median t_blow {median_t_blow})"),
            PhaseVerdict::Survived { horizon } => format!("survived to {horizon}"),
        };
        out.say(&format!(
            "alpha={} excess={} kappa={}: {verdict}, fraction_blown={}",
            c.alpha, c.excess, c.kappa, c.fraction_blown
        ));
    }
    Ok(())
}

pub fn verify(p: &mut Params, out: &Output, only: &[u8]) -> Result<(), Failure> {
    std::mem::take(p).finish()?;
    let ids: Vec<u8> = if only.is_empty() { verify::ALL.to_vec() } else { only.to_vec() };
    let reports = verify::run_selected(&ids, |r| println!("{r}"))?;
    if let Some(d) = &out.dir {
        for r in &reports {
            for a in &r.artifacts {
                std::fs::write(d.join(&a.name), &a.body)?;
            }
        }
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Property(format!("failed criteria: {}", failed.join(", "))))
    }
}

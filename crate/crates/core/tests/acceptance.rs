//! Acceptance suite: one line per criterion on stderr, then assertions.
//!
//! Criterion 4 cannot pass at α = 2. The Gaussian density decays like
//! `exp(-x²/4t)`, faster than the `t/|x|^{1+α}` envelope, so the ratio
//! underflows to exactly zero at `t = 0.1, x = 20`. It is reported as a
//! failure and the test pins down that this is the only reason.

use std::io::Write;

use fracblow::kernel::{envelope, Alpha, KernelEval};
use fracblow::verify::{self, envelope_times, envelope_xs};

const UNATTAINABLE: [u8; 1] = [4];

fn emit(line: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

#[test]
fn acceptance_criteria() {
    emit("acceptance criteria:");
    let reports = verify::run_selected(&verify::ALL, |r| {
        let note = if UNATTAINABLE.contains(&r.id) && !r.passed {
            " [unattainable at alpha=2, see module docs]"
        } else {
            ""
        };
        emit(&format!("{r}{note}"));
    })
    .expect("criteria run without errors");
    assert_eq!(reports.len(), 13);

    let unexpected: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed && !UNATTAINABLE.contains(&r.id))
        .map(|r| r.to_string())
        .collect();
    assert!(unexpected.is_empty(), "failed criteria:\n{}", unexpected.join("\n"));

    let (times, xs) = (envelope_times(), envelope_xs());
    for a in [1.2, 1.5] {
        let alpha = Alpha::new(a).unwrap();
        let r = envelope(alpha, &times, &xs, &KernelEval::for_alpha(alpha)).unwrap();
        assert!(r.ratio_min > 0.0 && r.ratio_max.is_finite(), "alpha={a}: {r:?}");
    }
    let gauss = Alpha::new(2.0).unwrap();
    let r = envelope(gauss, &times, &xs, &KernelEval::for_alpha(gauss)).unwrap();
    assert_eq!(r.ratio_min, 0.0);
    assert!(r.ratio_max.is_finite());
}

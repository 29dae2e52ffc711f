use fracblow::kernel::Alpha;
use fracblow::ode::{classify, closed_form_value, integrate_numeric, reduce_theorem, Condition, OdeSpec, ReductionSpec};
use proptest::prelude::*;

fn spec(a: f64, b: f64, t0: f64, y0: f64) -> OdeSpec {
    OdeSpec::new(a, b, t0, y0).unwrap()
}

#[test]
fn closed_form_examples() {
    let v = closed_form_value(&spec(1.0, 1.0, 1.0, 1.0), 2.0).unwrap();
    assert!((v - 3.258_891_353_270_929).abs() < 1e-12);
    let below = classify(&spec(1.0, 0.0, 1.0, 0.5));
    assert!(below.blows_up);
    assert!((below.t_star.unwrap() - 3.0).abs() < 1e-12);
    let s = spec(1.7, 0.3, 2.0, 0.8);
    assert_eq!(closed_form_value(&s, 2.0).unwrap(), 0.8);
}

#[test]
fn numeric_examples() {
    let e = integrate_numeric(&spec(1.0, 1.0, 1.0, 1.0), 5.0, 1e8, 1e-8).unwrap();
    assert!(e.verdict.blows_up);
    assert!((e.verdict.t_star.unwrap() - std::f64::consts::E).abs() < 0.01 * std::f64::consts::E);

    let s = spec(1.0, 2.0, 1.0, 0.5);
    let bounded = integrate_numeric(&s, 100.0, 1e8, 1e-8).unwrap();
    assert!(!bounded.verdict.blows_up);
    let &(t_end, y_end) = bounded.trajectory.last().unwrap();
    assert_eq!(t_end, 100.0);
    let exact = closed_form_value(&s, 100.0).unwrap();
    assert!((y_end - exact).abs() < 1e-6 * exact);

    let slow = spec(2.0, 0.5, 1.0, 0.1);
    let t_star = classify(&slow).t_star.unwrap();
    let n = integrate_numeric(&slow, 1.5 * t_star, 1e8, 1e-8).unwrap();
    assert!((n.verdict.t_star.unwrap() - t_star).abs() < 0.01 * t_star);
}

#[test]
fn reduction_examples() {
    let b = |kind, a: f64, excess, kappa| {
        reduce_theorem(&ReductionSpec {
            kind,
            alpha: Alpha::new(a).unwrap(),
            excess,
            kappa,
            t0: 1.0,
            front_constant: 1.0,
        })
        .unwrap()
    };
    for kappa in [0.01, 0.3, 1.0, 100.0] {
        let ode = b(Condition::B, 2.0, 1.0, kappa);
        assert_eq!(ode.b_exp, 0.5);
        assert!(classify(&ode).blows_up);
    }
    let steep = b(Condition::B, 1.5, 3.0, 1.0);
    assert_eq!(steep.b_exp, 2.0);
    assert!(!classify(&b(Condition::B, 1.5, 3.0, 0.1)).blows_up);
    assert!(classify(&b(Condition::B, 1.5, 3.0, 10.0)).blows_up);
    let a = b(Condition::A, 2.0, 1.0, 1.0);
    assert_eq!(a.b_exp, 3.5);
    assert!(!classify(&b(Condition::A, 2.0, 1.0, 0.5)).blows_up);
    assert!(classify(&b(Condition::A, 2.0, 1.0, 3.0)).blows_up);
}

#[test]
fn b_equal_one_is_continuous() {
    let (a, t0, y0): (f64, f64, f64) = (1.0, 1.0, 1.0);
    let limit = t0 * (y0.powf(-a) / a).exp();
    for b in [1.0 - 1e-6, 1.0 + 1e-6] {
        let t = classify(&spec(a, b, t0, y0)).t_star.unwrap();
        assert!((t - limit).abs() / limit <= 1e-4, "b={b}: {t}");
    }
}

#[test]
fn invalid_specs_name_their_key() {
    for (s, key) in [
        (OdeSpec::new(0.0, 1.0, 1.0, 1.0), "a"),
        (OdeSpec::new(1.0, -1.0, 1.0, 1.0), "b"),
        (OdeSpec::new(1.0, 1.0, 0.0, 1.0), "t0"),
        (OdeSpec::new(1.0, 1.0, 1.0, -2.0), "y0"),
    ] {
        let msg = s.unwrap_err().to_string();
        assert!(msg.contains(key), "{msg}");
    }
}

proptest! {
    #[test]
    fn blowup_set_is_upward_closed(
        a in 0.2f64..3.0, b in 0.0f64..4.0, t0 in 0.1f64..5.0, y0 in 0.01f64..10.0, factor in 1.0f64..100.0
    ) {
        if classify(&spec(a, b, t0, y0)).blows_up {
            prop_assert!(classify(&spec(a, b, t0, y0 * factor)).blows_up);
        }
    }

    #[test]
    fn verdict_invariants(a in 0.2f64..3.0, b in 0.0f64..4.0, t0 in 0.1f64..5.0, y0 in 0.01f64..10.0) {
        let v = classify(&spec(a, b, t0, y0));
        if v.blows_up {
            prop_assert!(v.t_star.unwrap() > t0);
        } else {
            prop_assert!(v.asymptote.unwrap() >= y0);
        }
    }
}

mod common;

use common::*;
use proptest::prelude::*;

use wavekit::model::HSign;
use wavekit::shoot::{integrate_z, threshold_for_interval, IntervalData};
use wavekit::wave::{glue, Exists};

#[test]
fn examples_exist_above_threshold_and_not_below() {
    for name in ["ex1", "ex2", "ex3", "kpp"] {
        let s = Solved::new(shipped(name));
        for off in [0.1, 0.5, 1.0] {
            let r = s.report(s.th.c_hat + off);
            assert_eq!(
                r.verdict.exists,
                Exists::Yes,
                "{name} at ĉ+{off}: {}",
                r.verdict.reason
            );
        }
        let r = s.report(s.th.c_hat - 0.1);
        assert_eq!(r.verdict.exists, Exists::No, "{name} at ĉ−0.1");
        assert!(
            !r.verdict.infeasible_intervals.is_empty() || r.verdict.reason.contains("quotient")
        );
    }
}

#[test]
fn feasibility_is_monotone_in_speed() {
    for name in SHIPPED {
        let s = Solved::new(shipped(name));
        for t in &s.th.per_interval {
            let iv = s.d.interval(t.k);
            let flags: Vec<bool> = [-0.2, -0.05, 0.05, 0.3, 1.0]
                .iter()
                .map(|o| {
                    integrate_z(s.p(), iv, t.c_star + o, &s.opts().shoot)
                        .unwrap()
                        .is_feasible()
                })
                .collect();
            assert!(monotone(&flags), "{name} interval {}: {flags:?}", t.k);
            assert!(!flags[0] && flags[4], "{name} interval {}: {flags:?}", t.k);
        }
    }
}

#[test]
fn solutions_profiles_and_classifications_are_consistent() {
    for name in SHIPPED {
        let s = Solved::new(shipped(name));
        let offsets: &[f64] = if name == "ex3" {
            &[0.2, 0.5]
        } else {
            &[0.0, 0.2, 0.5]
        };
        for &off in offsets {
            let r = s.report(s.th.c_hat + off);
            assert!(exists(&r), "{name} +{off}");
            assert!(z_h_opposite(&s, &r), "{name} +{off}: z·h ≥ 0 somewhere");
            let ode = z_ode_residual(&s, &r);
            assert!(ode <= 1e-6, "{name} +{off}: z residual {ode:e}");
            let res = profile_residual_max(&s, &r);
            assert!(res <= 1e-5, "{name} +{off}: profile residual {res:e}");
            assert!(boundary_flux(&r) <= 1e-4, "{name} +{off}");
            assert!(strictly_decreasing(&r), "{name} +{off}");
            assert!(
                tails_agree(&r),
                "{name} +{off}: {:?} vs {:?}",
                r.tails,
                (r.a_finite, r.b_finite)
            );
        }
    }
}

#[test]
fn negative_interval_threshold_matches_its_mirror() {
    let mut pf = file("ex1");
    pf.options.tol_c = Some(1e-9);
    let s = Solved::new(load_file(&pf, &[("K", 1.0)]));
    let m = Solved::new(load_file(&mirror_file(&pf), &[("K", 1.0)]));
    assert_eq!(s.d.intervals.len(), 2);
    let neg =
        s.d.intervals
            .iter()
            .find(|iv| iv.h_sign == HSign::Negative)
            .unwrap();
    let pos =
        m.d.intervals
            .iter()
            .find(|iv| iv.h_sign == HSign::Positive && (iv.alpha - (1.0 - neg.beta)).abs() < 1e-9)
            .unwrap();
    let bound = |x: &Solved, k: usize| {
        let b = &x.th.bracket.per_interval[k - 1];
        (b.lower, b.upper)
    };
    let a = threshold_for_interval(s.p(), neg, bound(&s, neg.k), 1e-9, &s.opts().shoot).unwrap();
    let b = threshold_for_interval(m.p(), pos, bound(&m, pos.k), 1e-9, &m.opts().shoot).unwrap();
    assert!(
        (a.c_star - b.c_star).abs() <= 1e-6,
        "{} vs {}",
        a.c_star,
        b.c_star
    );
}

#[test]
fn analytic_bracket_holds_on_random_polynomial_problems() {
    for loaded in random_polynomial_problems(20_241_015, 10) {
        let s = Solved::new(loaded);
        let b = &s.th.bracket;
        assert!(
            s.th.c_hat >= b.lower - 1e-3 && s.th.c_hat <= b.upper + 1e-3,
            "{}: {} outside [{}, {}]",
            s.p().name,
            s.th.c_hat,
            b.lower,
            b.upper
        );
    }
}

#[test]
fn sweep_flips_inside_the_bracket() {
    let s = Solved::new(shipped("ex1"));
    let speeds: Vec<f64> = (0..=10).map(|i| 1.5 + 0.1 * i as f64).collect();
    let rows = wavekit::cli::sweep(&s.loaded, &speeds).unwrap();
    let flags: Vec<bool> = rows.iter().map(|r| r.exists == Exists::Yes).collect();
    assert!(monotone(&flags));
    let flip = flags.iter().position(|&f| f).unwrap();
    assert!(flip > 0);
    let (lo, hi) = (speeds[flip - 1], speeds[flip]);
    assert!(
        hi >= s.th.bracket.lower && lo <= s.th.bracket.upper,
        "flip in [{lo}, {hi}]"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reflection_is_an_involution(k in 0.9f64..2.0, u in 0.0f64..1.0) {
        let loaded = load("ex1", &[("K", k)]);
        let p = &loaded.problem;
        let d = wavekit::model::decompose(p, 2048, loaded.options.tolerances).unwrap();
        for iv in &d.intervals {
            let v = IntervalData::new(p, *iv);
            let back = v.reflect().reflect();
            prop_assert_eq!(back.interval, v.interval);
            let x = iv.alpha + u * iv.len();
            prop_assert_eq!(back.h(x).unwrap(), v.h(x).unwrap());
            prop_assert_eq!(back.f(x).unwrap(), v.f(x).unwrap());
            prop_assert_eq!(back.g(x).unwrap(), v.g(x).unwrap());
            let r = v.reflect();
            let (a, b) = (r.h(iv.alpha + iv.beta - x).unwrap(), -v.h(x).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn mirrored_expressions_evaluate_at_the_mirror_point(u in 0.0f64..1.0) {
        let pf = file("ex1");
        let m = mirror_file(&pf);
        let a = load_file(&pf, &[("K", 1.0)]).problem;
        let b = load_file(&m, &[("K", 1.0)]).problem;
        let (x, y) = (a.d.eval(1.0 - u).unwrap(), b.d.eval(u).unwrap());
        prop_assert!((x + y).abs() <= 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rescaling_rho_and_d_keeps_z_and_scales_phi(lambda in 0.25f64..4.0) {
        let base = shipped("ex1");
        let mut pf = file("ex1");
        pf.rho = format!("({lambda})*({})", pf.rho);
        pf.d = format!("({})/({lambda})", pf.d);
        let scaled = load_file(&pf, &[("K", 1.0)]);
        let s = Solved::new(base);
        let t = Solved::new(scaled);
        prop_assert!((s.th.c_hat - t.th.c_hat).abs() <= 1e-8 * s.th.c_hat);

        let c = s.th.c_hat + 0.3;
        let gs = glue(s.p(), &s.d, c, &s.opts().shoot).unwrap();
        let gt = glue(t.p(), &t.d, c, &t.opts().shoot).unwrap();
        for u in [0.1, 0.3, 0.5, 0.9] {
            let (za, zb) = (gs.z_at(u).unwrap(), gt.z_at(u).unwrap());
            prop_assert!((za - zb).abs() <= 1e-8 * za.abs(), "z at {}: {} vs {}", u, za, zb);
            let (pa, pb) = (gs.phi_at(s.p(), u).unwrap().unwrap(), gt.phi_at(t.p(), u).unwrap().unwrap());
            prop_assert!((pb - lambda * pa).abs() <= 1e-8 * pb.abs());
        }
    }
}

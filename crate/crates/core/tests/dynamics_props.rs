use chaosync::experiments::{run_scenario, scenario_presets, Controller};
use chaosync::system::{
    a_tilde, closed_loop_error_rhs, control_law, coupled_rhs, error_matrix, Alpha,
    DistributionMatrix, ErrorVec, Feedback, GainRow, State3,
};
use chaosync::{Matrix, SymMatrix};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = State3> {
    (-40.0f64..40.0, -40.0f64..40.0, -10.0f64..60.0).prop_map(|(x, y, z)| State3::new(x, y, z))
}

fn alpha() -> impl Strategy<Value = Alpha> {
    (0.0f64..=1.0).prop_map(|a| Alpha::new(a).unwrap())
}

fn feedback() -> impl Strategy<Value = Feedback> {
    prop_oneof![
        (-600.0f64..50.0, -600.0f64..50.0, -50.0f64..50.0)
            .prop_map(|(a, b, c)| Feedback::row(GainRow::new(a, b, c))),
        prop::collection::vec(-50.0f64..50.0, 9).prop_map(|k| {
            Feedback::new(DistributionMatrix::Identity, Matrix::new(3, 3, k).unwrap()).unwrap()
        }),
    ]
}

fn close(a: ErrorVec, b: ErrorVec, scale: f64) -> bool {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .all(|(x, y)| (x - y).abs() <= 1e-12 * scale.max(1.0))
}

fn magnitude(v: impl AsRef<[f64]>) -> f64 {
    v.as_ref().iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn coupled_difference_is_closed_loop_error(
        a in alpha(), m in state(), s in state(), fb in feedback()
    ) {
        let (dm, ds) = coupled_rhs(a, m, s, &fb, true);
        let diff = ErrorVec::new(ds.x - dm.x, ds.y - dm.y, ds.z - dm.z);
        let e = ErrorVec::between(m, s);
        let want = closed_loop_error_rhs(a, e, &fb);
        let scale = magnitude(ds.to_array()).max(magnitude(dm.to_array())).max(magnitude(want.to_array()));
        prop_assert!(close(diff, want, scale), "{diff:?} vs {want:?}");
    }

    #[test]
    fn error_matrix_plus_control_is_closed_loop(
        a in alpha(), m in state(), s in state(), fb in feedback()
    ) {
        let e = ErrorVec::between(m, s);
        let ae = error_matrix(a, m.z, s.x, m.y).mul_vec(&e.to_array());
        let u = control_law(&fb, m, s, true);
        let got = ErrorVec::new(ae[0] + u.u1, ae[1] + u.u2, ae[2] + u.u3);
        let want = closed_loop_error_rhs(a, e, &fb);
        prop_assert!(close(got, want, magnitude(&ae).max(magnitude(want.to_array()))));
    }

    #[test]
    fn uncontrolled_error_follows_error_matrix(a in alpha(), m in state(), s in state()) {
        let fb = Feedback::zero(DistributionMatrix::Ones);
        let (dm, ds) = coupled_rhs(a, m, s, &fb, false);
        let e = ErrorVec::between(m, s);
        let ae = error_matrix(a, m.z, s.x, m.y).mul_vec(&e.to_array());
        let diff = ErrorVec::new(ds.x - dm.x, ds.y - dm.y, ds.z - dm.z);
        prop_assert!(close(diff, ErrorVec::new(ae[0], ae[1], ae[2]), magnitude(ds.to_array()).max(magnitude(dm.to_array()))));
    }
}

proptest! {
    #[test]
    fn closed_loop_error_rhs_is_linear(
        a in alpha(),
        fb in feedback(),
        e1 in prop::array::uniform3(-10.0f64..10.0),
        e2 in prop::array::uniform3(-10.0f64..10.0),
        c in -5.0f64..5.0,
    ) {
        let (e1, e2) = (ErrorVec::from_array(e1), ErrorVec::from_array(e2));
        let sum = ErrorVec::new(e1.e1 + e2.e1, e1.e2 + e2.e2, e1.e3 + e2.e3);
        let f1 = closed_loop_error_rhs(a, e1, &fb);
        let f2 = closed_loop_error_rhs(a, e2, &fb);
        let fs = closed_loop_error_rhs(a, sum, &fb);
        let scale = magnitude(f1.to_array()).max(magnitude(f2.to_array())).max(1.0) * 10.0;
        prop_assert!(close(fs, ErrorVec::new(f1.e1 + f2.e1, f1.e2 + f2.e2, f1.e3 + f2.e3), scale));

        let scaled = ErrorVec::new(c * e1.e1, c * e1.e2, c * e1.e3);
        let fc = closed_loop_error_rhs(a, scaled, &fb);
        prop_assert!(close(fc, ErrorVec::new(c * f1.e1, c * f1.e2, c * f1.e3), scale * 5.0));
    }

    #[test]
    fn a_tilde_is_affine_in_alpha(a in 0.0f64..=1.0, b in 0.0f64..=1.0, w in 0.0f64..=1.0) {
        let mix = Alpha::new(w * a + (1.0 - w) * b).unwrap();
        let lhs = a_tilde(mix);
        let rhs = &a_tilde(Alpha::new(a).unwrap()).scale(w) + &a_tilde(Alpha::new(b).unwrap()).scale(1.0 - w);
        prop_assert!((&lhs - &rhs).max_abs() <= 1e-12);
    }
}

#[test]
fn identical_states_stay_identical_with_and_without_control() {
    let controller = Controller {
        feedback: Feedback::row(GainRow::new(-28.3433, -543.0217, 1.0950)),
        p: SymMatrix::identity(3),
    };
    for name in ["random", "onoff", "step"] {
        let mut s = scenario_presets(name).unwrap();
        s.slave0 = s.master0;
        for scenario in [s.clone(), s.without_control()] {
            let run = run_scenario(&scenario, &controller).unwrap();
            assert!(!run.metrics.diverged);
            let worst = run.records.iter().map(|r| r.e_norm).fold(0.0, f64::max);
            assert!(worst <= 1e-9, "{name}: e_norm reached {worst}");
        }
    }
}

mod common;

use common::*;
use proptest::prelude::*;
use robust_sgd::aero::Evaluator;
use robust_sgd::geometry::{DesignVector, DEFAULT_PANELS};

#[test]
fn response_gradients_match_central_differences() {
    let ev = default_evaluator();
    let mut r = rng(11);
    for _ in 0..10 {
        let d = random_design(&ev, &mut r, 0.02);
        let x = random_input(&mut r);
        let resp = ev.evaluate(&d, &x).unwrap();
        for i in 0..d.len() {
            let fd_cl = central_diff(|p| ev.evaluate(p, &x).unwrap().c_l, &d, i, 1e-6);
            let fd_cd = central_diff(|p| ev.evaluate(p, &x).unwrap().c_d, &d, i, 1e-6);
            assert!(close(resp.grad_c_l[i], fd_cl, 1e-5, 1e-9), "c_l [{i}] {} vs {fd_cl}", resp.grad_c_l[i]);
            assert!(close(resp.grad_c_d[i], fd_cd, 1e-5, 1e-9), "c_d [{i}] {} vs {fd_cd}", resp.grad_c_d[i]);
        }
    }
}

#[test]
fn area_ratio_gradient_matches_central_differences() {
    let ev = default_evaluator();
    let mut r = rng(12);
    for _ in 0..10 {
        let d = random_design(&ev, &mut r, 0.02);
        let (_, g) = ev.area_ratio(&d).unwrap();
        for i in 0..d.len() {
            let fd = central_diff(|p| ev.area_ratio(p).unwrap().0, &d, i, 1e-6);
            assert!(close(g[i], fd, 1e-5, 1e-9), "[{i}] {} vs {fd}", g[i]);
        }
        assert_eq!(*g.last().unwrap(), 0.0);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let ev = default_evaluator();
    let mut r = rng(13);
    let d = random_design(&ev, &mut r, 0.03);
    let x = random_input(&mut r);
    assert_eq!(ev.evaluate(&d, &x).unwrap(), ev.evaluate(&d, &x).unwrap());
}

#[test]
fn baseline_is_reproduced_and_symmetric() {
    let ev = default_evaluator();
    let d = DesignVector::baseline(ev.n_free());
    let shape = ev.shape(&d).unwrap();
    assert_eq!(shape.points(), ev.baseline().points());
    let (ratio, _) = ev.area_ratio(&d).unwrap();
    assert_eq!(ratio, 1.0);
    // zero camber: lift is purely the angle of attack term
    let x = robust_sgd::uncertainty::dsp_input();
    assert!(ev.evaluate(&d, &x).unwrap().c_l.abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn displacement_is_linear_in_design(
        a in prop::collection::vec(-0.01f64..0.01, 16),
        b in prop::collection::vec(-0.01f64..0.01, 16),
        s in -1.0f64..1.0,
    ) {
        let ev = default_evaluator();
        let base = ev.baseline().points().to_vec();
        let shape = |dy: Vec<f64>| ev.shape(&DesignVector { ffd_dy: dy, alpha_deg: 0.0 }).unwrap().points().to_vec();
        let pa = shape(a.clone());
        let pb = shape(b.clone());
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let pm = shape(mix);
        for i in 0..base.len() {
            let lhs = pm[i][1] - base[i][1];
            let rhs = (pa[i][1] - base[i][1]) + s * (pb[i][1] - base[i][1]);
            prop_assert!((lhs - rhs).abs() < 1e-14);
            prop_assert_eq!(pm[i][0], base[i][0]);
        }
    }

    #[test]
    fn leading_and_trailing_edges_stay_put(dy in prop::collection::vec(-0.02f64..0.02, 16)) {
        let ev = default_evaluator();
        if let Ok(shape) = ev.shape(&DesignVector { ffd_dy: dy, alpha_deg: 0.0 }) {
            let p = shape.points();
            prop_assert_eq!(p[0], [1.0, 0.0]);
            prop_assert_eq!(p[DEFAULT_PANELS], [0.0, 0.0]);
        }
    }
}

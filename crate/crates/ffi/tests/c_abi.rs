use std::ffi::CStr;
use std::ptr;

use engagement_lab_ffi::*;

fn last_error() -> String {
    let p = el_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn point_round_trip() {
    let mut pt = ptr::null_mut();
    assert_eq!(el_model_point_new(0.5, 0.5, 3.0, 1.0, &mut pt), ElStatus::Ok);
    let mut ev = ElEvaluation::default();
    assert_eq!(el_model_point_evaluate(pt, &mut ev), ElStatus::Ok);
    assert_eq!((ev.e_s, ev.e_t, ev.participates), (3.0, 3.0, true));
    let mut sim = ElSimSummary::default();
    assert_eq!(el_simulate(pt, 20_000, 1, &mut sim), ElStatus::Ok);
    assert!((sim.mean_t - 3.0).abs() < 4.0 * sim.se_t);
    unsafe { el_model_point_free(pt) };
}

#[test]
fn errors_are_reported() {
    let mut pt = ptr::null_mut();
    assert_eq!(el_model_point_new(1.5, 0.5, 3.0, 1.0, &mut pt), ElStatus::InvalidArgument);
    assert!(pt.is_null());
    assert!(last_error().contains('p'));
    assert_eq!(el_model_point_new(0.5, 0.5, 3.0, 1.0, ptr::null_mut()), ElStatus::NullPointer);
    let mut ev = ElEvaluation::default();
    assert_eq!(el_model_point_evaluate(ptr::null(), &mut ev), ElStatus::NullPointer);
    assert_eq!(el_simulate(ptr::null(), 10, 0, ptr::null_mut()), ElStatus::NullPointer);
    unsafe { el_model_point_free(ptr::null_mut()) };
}

#[test]
fn gamma_and_population() {
    let mut g = ElGammaResult::default();
    assert_eq!(el_gamma_evaluate(0.0, 0.5, 4.0, 1.0, &mut g), ElStatus::Ok);
    assert_eq!((g.t_star, g.e_t), (2, 3.0));
    let mut m = ElPopulationMetrics::default();
    assert_eq!(el_population_uniform(0.5, 0.5, 1.35, 0.5, 1.0, &mut m), ElStatus::Ok);
    assert_eq!(m.w_star, 0.9);
    assert!((m.pr_use - 0.8).abs() < 1e-12);
    assert_eq!(el_population_uniform(0.5, 0.5, 1.35, 1.0, 0.5, &mut m), ElStatus::InvalidArgument);
}

#[test]
fn tree_widths() {
    let values = [1.011, 1.05];
    let probs = [0.5, 0.5];
    let (mut ds, mut dt) = (99usize, 99usize);
    let st = unsafe { el_tree_optimize_iid(0.01, 0.0, values.as_ptr(), probs.as_ptr(), 2, 1.0, 5, &mut ds, &mut dt) };
    assert_eq!(st, ElStatus::Ok);
    assert_eq!((ds, dt), (2, 1));

    let mut cfg = ptr::null_mut();
    let st = unsafe { el_tree_config_new_iid(2, 0.01, 0.0, values.as_ptr(), probs.as_ptr(), 2, 1.0, &mut cfg) };
    assert_eq!(st, ElStatus::Ok);
    let mut sol = ElTreeSolution::default();
    assert_eq!(el_tree_solve(cfg, &mut sol), ElStatus::Ok);
    assert_eq!(sol.tau_star, 1.05);
    unsafe { el_tree_config_free(cfg) };

    let bad = [0.5, 0.4];
    let st = unsafe { el_tree_config_new_iid(2, 0.01, 0.0, values.as_ptr(), bad.as_ptr(), 2, 1.0, &mut cfg) };
    assert_eq!(st, ElStatus::InvalidArgument);
}

#[test]
fn header_is_generated() {
    let header = include_str!("../include/engagement_lab.h");
    for sym in ["el_model_point_new", "el_tree_solve", "el_last_error_message", "typedef struct ElModelPoint"] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
    let v = unsafe { CStr::from_ptr(el_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

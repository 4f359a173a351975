use mhsets::fields::{ExpBarrier, Grid, LevelSet, Shape, SignedDistance};
use mhsets::linalg::SymForm;
use mhsets::predicate::{
    critical_h, distance_enlargement_check, fixtures, mh_test, probe_search, rebuild_probe,
    restricted_max, Ambient, ProbeFamily, Quadratic, SearchConfig, TestFunction, Verdict,
};
use std::sync::Arc;

#[test]
fn half_plane_constancy_probe() {
    let z = fixtures::half_plane(1.0, 0.02).unwrap();
    let a = SymForm::from_diag(&[2.0, 0.0, 2.0]);
    let f = TestFunction::quadratic(Quadratic::new(vec![0.0; 3], vec![1.0, 0.0, 0.0], a, 0.0).unwrap());
    let maxima = restricted_max(&f, &z).unwrap();
    assert!(maxima.iter().all(|m| m.point[0] == 0.0));
    assert!(maxima.iter().any(|m| m.point == vec![0.0, 0.0, 0.0]));
    let c = mh_test(&z, &f, 2, 0.0, None).unwrap();
    let c = c.certificate().expect("violation");
    assert_eq!(c.trace_m, 2.0);
    assert_eq!(c.grad_norm, 1.0);
}

#[test]
fn plane_passes_with_proper_tail() {
    let z = fixtures::plane_patch(1.0, 0.05).unwrap();
    let f = TestFunction::quadratic(Quadratic::new(
        vec![0.0; 3],
        vec![0.0; 3],
        SymForm::from_diag(&[0.0, 0.0, -2.0]),
        0.0,
    ).unwrap())
    .with_proper_tail(&[0.0; 3], 1e-6)
    .unwrap();
    let v = mh_test(&z, &f, 2, 0.0, None).unwrap();
    assert!(!v.is_violation());
    assert_eq!(v.pass_report().unwrap().maxima_checked, 1);
}

#[test]
fn plane_passes_probe_suite() {
    let z = fixtures::plane_patch(1.0, 0.05).unwrap();
    let v = probe_search(&z, 2, 0.0, &SearchConfig::new(500, 11)).unwrap();
    let Verdict::Pass(r) = v else { panic!("{v:?}") };
    assert!(r.falsifier_only);
    assert!(r.worst_margin.unwrap() <= r.tolerances.margin, "{r:?}");
}

#[test]
fn sphere_barrier_violation_margin() {
    let r = 0.8;
    let z = fixtures::sphere(3, r, 2000).unwrap();
    let ball: Arc<dyn LevelSet> = Arc::new(Shape::sphere(vec![0.0; 3], r));
    let f = TestFunction::exp_barrier(ExpBarrier::new(ball, 10.0 / r).unwrap());
    let h = 2.0 / r - 0.1 / r;
    let c = mh_test(&z, &f, 2, h, None).unwrap();
    let c = c.certificate().unwrap();
    let want = 0.1 / r * c.grad_norm;
    assert!((c.margin - want).abs() < 0.1 * want);

    let g = Grid::cube_with_spacing(3, 1.25 * r, r / 64.0).unwrap();
    let sd: Arc<dyn LevelSet> =
        Arc::new(SignedDistance::build(&Shape::sphere(vec![0.0; 3], r), &g, 0.1).unwrap());
    let f = TestFunction::exp_barrier(ExpBarrier::new(sd, 10.0 / r).unwrap());
    let c = mh_test(&z, &f, 2, h, None).unwrap();
    let c = c.certificate().unwrap();
    let want = 0.1 / r * c.grad_norm;
    assert!((c.margin - want).abs() < 0.1 * want, "{} vs {want}", c.margin);
}

#[test]
fn sphere_threshold_bisection() {
    let r = 1.0;
    let z = fixtures::sphere(3, r, 3000).unwrap();
    let cfg = SearchConfig::new(40, 5).with_families(&ProbeFamily::BARRIERS);
    let b = critical_h(&z, 2, 0.5 / r, 4.0 / r, 20, &cfg).unwrap();
    let mid = b.midpoint();
    assert!((mid - 2.0 / r).abs() < 0.1 * 2.0 / r, "{b:?}");
    // full family agrees at the bracket ends
    let all = SearchConfig::new(200, 5);
    assert!(probe_search(&z, 2, 1.1 * 2.0 / r, &all).map(|v| !v.is_violation()).unwrap());
    assert!(probe_search(&z, 2, 0.9 * 2.0 / r, &all).unwrap().is_violation());
}

#[test]
fn certificates_recheck() {
    let z = fixtures::segment(1.0, 0.02).unwrap();
    let cfg = SearchConfig::new(50, 2);
    let v = probe_search(&z, 1, 0.0, &cfg).unwrap();
    let c = v.certificate().unwrap();
    let idx = c.probe["index"].as_u64().unwrap() as usize;
    let f = rebuild_probe(&z, 1, &cfg, idx).unwrap();
    let again = c.recheck(&f).unwrap();
    assert!((again - c.margin).abs() < 1e-12 && again > c.tolerances.margin);
}

#[test]
fn slab_and_ball_distance_sets() {
    let plane = fixtures::plane_patch(1.0, 0.05).unwrap();
    let s = 0.2;
    let rep = distance_enlargement_check(&plane, s, 2, 0.0, Ambient::Flat, &SearchConfig::new(100, 3)).unwrap();
    let Some(Verdict::Pass(p)) = &rep.verdict else { panic!("{rep:?}") };
    assert!(p.worst_margin.unwrap() <= p.tolerances.margin);

    for m in 1..=3 {
        let z = fixtures::singleton(3, 0.01).unwrap();
        let s = 0.5;
        let rep = distance_enlargement_check(&z, s, m, 0.0, Ambient::Flat, &SearchConfig::new(20, 3)).unwrap();
        let c = rep.verdict.as_ref().unwrap().certificate().expect("violation");
        assert!(c.margin >= 2.0 * m as f64 / s * 0.9, "m={m} margin {}", c.margin);
    }
}

#[test]
fn shell_passes_sphere_bound() {
    let r = 1.0;
    let z = fixtures::sphere(3, r, 3000).unwrap();
    let rep = distance_enlargement_check(&z, 0.3, 2, 2.0 / r, Ambient::Flat, &SearchConfig::new(100, 9)).unwrap();
    assert!(rep.passes(), "{:?}", rep.verdict);
}

#[test]
fn curved_ambient_delegates_to_comparison() {
    let z = fixtures::sphere(3, 1.0, 200).unwrap();
    let rep = distance_enlargement_check(&z, 0.2, 2, 1.0, Ambient::SpaceForm { k: 1.0 }, &SearchConfig::new(1, 0)).unwrap();
    assert!(!rep.constructive);
    assert!((rep.adjusted_h - 0.6).abs() < 1e-15);
    assert!(rep.passes());
}

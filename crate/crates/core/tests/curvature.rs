use mhsets::curvature::{
    barrier_check, comparison_check, converse_barrier_build, level_set_curvatures, riccati_closed_form,
    riccati_propagate, SpaceFormAmbient,
};
use mhsets::fields::{ExpBarrier, Grid, LevelSet, Shape, SignedDistance};
use mhsets::linalg::{dominance_check, SymForm};
use mhsets::predicate::{fixtures, perturb_to_nonvanishing_gradient, ClosedSet, Quadratic, TestFunction};
use mhsets::MhError;
use proptest::prelude::*;
use std::sync::Arc;

fn disk(r: f64, rings: usize) -> ClosedSet {
    let mut pts = vec![vec![0.0; 3]];
    for i in 1..=rings {
        let rho = r * i as f64 / rings as f64;
        let k = 6 * i;
        for j in 0..k {
            let t = std::f64::consts::TAU * j as f64 / k as f64;
            pts.push(vec![rho * t.cos(), rho * t.sin(), 0.0]);
        }
    }
    ClosedSet::point_cloud("disk", pts, r / rings as f64).unwrap()
}

#[test]
fn plane_through_a_ball_reports_the_inconsistency() {
    let r = 0.8;
    let ball = Shape::sphere(vec![0.0; 3], r);
    let rep = barrier_check(&disk(r, 40), &ball, 0.01, 2, 0.0).unwrap();
    assert!(!rep.holds);
    assert!((rep.max_excess - 2.0 / r).abs() < 1e-9, "{}", rep.max_excess);
}

#[test]
fn plane_inside_a_slab_passes() {
    let slab = Shape::Slab { normal: vec![0.0, 0.0, 1.0], offset: 0.0, half_width: 0.3 };
    let z = fixtures::plane_patch(1.0, 0.05).unwrap();
    let lifted = ClosedSet::point_cloud(
        "plane",
        z.points().iter().map(|p| vec![p[0], p[1], 0.3]).collect(),
        0.05,
    )
    .unwrap();
    let rep = barrier_check(&lifted, &slab, 0.01, 2, 0.0).unwrap();
    assert!(rep.holds && rep.max_excess.abs() < 1e-12);
    // not touching at all
    assert!(matches!(barrier_check(&z, &slab, 0.01, 2, 0.0), Err(MhError::NoContact)));
}

#[test]
fn coincident_sphere_has_zero_excess() {
    let r = 1.0;
    let z = fixtures::sphere(3, r, 400).unwrap();
    let g = Grid::cube_with_spacing(3, 1.25 * r, r / 64.0).unwrap();
    let sd = SignedDistance::build(&Shape::sphere(vec![0.0; 3], r), &g, 0.1).unwrap();
    let rep = barrier_check(&z, &sd, g.max_spacing(), 2, 2.0 / r).unwrap();
    assert_eq!(rep.touching.len(), 400);
    assert!(rep.holds, "{} vs {}", rep.max_excess, rep.tolerance);
    assert!(rep.max_excess.abs() <= 0.03 * 2.0 / r);
}

#[test]
fn gridded_cylinder_curvatures() {
    let r = 0.5;
    let g = Grid::cube_with_spacing(3, 0.75, r / 64.0).unwrap();
    let cyl = Shape::Cylinder { point: vec![0.0; 3], axis: vec![0.0, 0.0, 1.0], radius: r };
    let sd = SignedDistance::build(&cyl, &g, 0.1).unwrap();
    let (k, _) = level_set_curvatures(&sd, &[0.3, 0.4, 0.1]).unwrap();
    assert!(k.values[0].abs() < 0.03 / r);
    assert!((k.values[1] - 1.0 / r).abs() < 0.03 / r, "{:?}", k.values);
}

#[test]
fn converse_from_a_singleton_is_a_sphere() {
    // a coarse resolution makes the translated sphere resolvable on the grid
    let z = fixtures::singleton(3, 0.4).unwrap();
    let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 3], 1.0));
    let pert = perturb_to_nonvanishing_gradient(&f, &z, &[0.0; 3], 2, 0.0).unwrap();
    let p = pert.certificate.point.clone();
    let g = Grid::cube_with_spacing(3, 0.6, 1.0 / 128.0).unwrap();
    let rep = converse_barrier_build(&z, &pert.function, &p, 2, 0.0, &g).unwrap();
    // ∂N is the sphere about the translated centre through p
    let radius: f64 = p.iter().zip(&pert.translation).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let want = 2.0 / radius;
    assert!(rep.exceeds_h);
    assert!((rep.h_m_analytic - want).abs() < 1e-9 * want);
    assert!((rep.h_m_grid - want).abs() < 0.05 * want, "{} vs {want}", rep.h_m_grid);
}

#[test]
fn converse_refuses_linear_probes() {
    let z = fixtures::half_plane(1.0, 0.05).unwrap();
    let f = TestFunction::quadratic(Quadratic::new(vec![0.0; 3], vec![1.0, 0.0, 0.0], SymForm::zeros(3), 0.0).unwrap());
    let g = Grid::cube(3, 1.0, 17).unwrap();
    assert!(matches!(
        converse_barrier_build(&z, &f, &[0.0; 3], 2, 0.0, &g),
        Err(MhError::NotViolating { .. })
    ));
}

#[test]
fn converse_of_the_sphere_barrier() {
    let r = 0.5;
    let z = fixtures::sphere(3, r, 800).unwrap();
    let ball: Arc<dyn LevelSet> = Arc::new(Shape::sphere(vec![0.0; 3], r));
    let f = TestFunction::exp_barrier(ExpBarrier::new(ball, 10.0 / r).unwrap());
    let h = 2.0 / r - 0.2;
    let p = z.points()[0].clone();
    let g = Grid::cube_with_spacing(3, 1.25 * r, r / 48.0).unwrap();
    let rep = converse_barrier_build(&z, &f, &p, 2, h, &g).unwrap();
    assert!(rep.h_m_grid > h && rep.h_m_grid <= 2.0 / r * 1.03, "{}", rep.h_m_grid);
}

#[test]
fn riccati_fixtures_match_closed_forms() {
    let flat = SpaceFormAmbient::flat(4);
    let r = 2.0;
    let s = riccati_propagate(&SymForm::scaled_identity(3, 1.0 / r), &flat, 1.0).unwrap();
    for x in &s.eigenvalues {
        assert!((x - 1.0 / (r - 1.0)).abs() <= 1e-8 * (1.0 / (r - 1.0)));
    }
    let zero = riccati_propagate(&SymForm::zeros(3), &flat, 3.0).unwrap();
    assert!(zero.eigenvalues.iter().all(|x| *x == 0.0));
    let sphere = SpaceFormAmbient::new(2, 1.0).unwrap();
    for k0 in [-0.5, 0.0, 0.3] {
        let s = riccati_propagate(&SymForm::from_diag(&[k0]), &sphere, 0.8).unwrap();
        let want = (0.8 + f64::atan(k0)).tan();
        assert!((s.eigenvalues[0] - want).abs() <= 1e-8 * want.abs().max(1.0));
        assert_eq!(riccati_closed_form(k0, 1.0, 0.8).map(|x| (x - want).abs() < 1e-12), Some(true));
    }
}

#[test]
fn comparison_examples() {
    let flat = SpaceFormAmbient::flat(3);
    let r = 1.0;
    let d = 0.4;
    let bp = SymForm::scaled_identity(2, 1.0 / r);
    let bq = riccati_propagate(&bp, &flat, d).unwrap().form;
    let rep = comparison_check(&bp, &bq, &flat, d, 1).unwrap();
    assert!(rep.holds);
    assert!((rep.per_eigenvalue.slack - d / (r * (r - d))).abs() < 1e-8);
    let z = SymForm::zeros(2);
    let rep = comparison_check(&z, &z, &flat, d, 2).unwrap();
    assert!(rep.holds && rep.full_trace.slack == 0.0);
    let sphere = SpaceFormAmbient::new(2, 1.0).unwrap();
    let bq = riccati_propagate(&SymForm::zeros(1), &sphere, 0.5).unwrap().form;
    let rep = comparison_check(&SymForm::zeros(1), &bq, &sphere, 0.5, 1).unwrap();
    assert!(rep.holds && (rep.per_eigenvalue.slack - (0.5f64.tan() - 0.5)).abs() < 1e-8);
}

fn arb_ordered_pair() -> impl Strategy<Value = (SymForm, SymForm, f64)> {
    (1usize..=3).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0f64..1.0, d * d),
            prop::collection::vec(-0.7f64..0.7, d * d),
            prop::sample::select(vec![-1.0, 0.0, 1.0]),
        )
            .prop_map(move |(a, p, k)| {
                let b = SymForm::new(d, a).unwrap().scale(0.5);
                let p = SymForm::new(d, p).unwrap();
                let psd = SymForm::new(d, p.mul_dense(&p)).unwrap();
                (b.clone(), b.add(&psd).unwrap(), k)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn propagation_preserves_dominance((b, bp, k) in arb_ordered_pair(), s in 0.05f64..0.3) {
        let amb = SpaceFormAmbient::new(b.dim() + 1, k).unwrap();
        let lo = riccati_propagate(&b, &amb, s).unwrap();
        let hi = riccati_propagate(&bp, &amb, s).unwrap();
        prop_assert!(lo.max_rel_error <= 1e-8 && hi.max_rel_error <= 1e-8);
        for (x, y) in lo.trace.iter().zip(&hi.trace) {
            prop_assert!(x[1..].iter().zip(&y[1..]).all(|(a, c)| *a <= c + 1e-12));
        }
        prop_assert!(dominance_check(&lo.form, &hi.form).unwrap().holds);
        // the three tube inequalities between the start and the end of each solution
        let rep = comparison_check(&b, &lo.form, &amb, s, b.dim()).unwrap();
        prop_assert!(rep.holds, "{:?}", rep);
    }

    #[test]
    fn trace_derivative_bound((b, _bp, k) in arb_ordered_pair(), s in 0.1f64..0.3) {
        let n1 = b.dim() as f64;
        let amb = SpaceFormAmbient::new(b.dim() + 1, k).unwrap();
        let sol = riccati_propagate(&b, &amb, s).unwrap();
        for w in sol.trace.windows(3) {
            let (t0, t1, t2): (f64, f64, f64) = (w[0][1..].iter().sum(), w[1][1..].iter().sum(), w[2][1..].iter().sum());
            let ds = w[2][0] - w[0][0];
            let deriv = (t2 - t0) / ds;
            let bound = n1 * k + t1 * t1 / n1;
            prop_assert!(deriv >= bound - 1e-6 * (1.0 + bound.abs()), "{deriv} < {bound}");
        }
    }
}

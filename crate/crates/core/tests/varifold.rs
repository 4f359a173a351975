use mhsets::fields::Grid;
use mhsets::linalg::{vec as v, SymForm};
use mhsets::predicate::{Quadratic, TestFunction};
use mhsets::varifold::{
    blowup_set, boundary_flux, boundary_mass, counterexample_sequence, density, divergence_bound_audit,
    excess_curvature_audit, first_variation, fixtures, gap_alpha_check, gradient_field_jacobian, mass, plateau,
    AnalyticField, Cubic, DiscreteVarifold, Region, Schedule,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn radial_unit(n: usize) -> AnalyticField<impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync> {
    AnalyticField::new(n, move |x: &[f64]| {
        let r = v::norm(x);
        let u = v::scale(x, 1.0 / r);
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                j[a * n + b] = (if a == b { 1.0 } else { 0.0 } - u[a] * u[b]) / r;
            }
        }
        (u, j)
    })
}

fn identity_field(n: usize) -> AnalyticField<impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync> {
    AnalyticField::new(n, move |x: &[f64]| {
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            j[a * n + a] = 1.0;
        }
        (x.to_vec(), j)
    })
}

#[test]
fn disk_masses() {
    let d = fixtures::disk(1.0, 32).unwrap();
    assert_eq!(d.len(), 2048);
    let half = mass(&d, &Region::ball(vec![0.0; 3], 0.5));
    assert!((half - PI / 4.0).abs() < 0.01 * PI / 4.0, "{half}");
    let b = boundary_mass(&d, &Region::All);
    assert!((b - 2.0 * PI).abs() < 0.01 * 2.0 * PI, "{b}");
    let s = fixtures::octasphere(1.0, 3).unwrap();
    assert_eq!(boundary_mass(&s, &Region::All), 0.0);
}

#[test]
fn sphere_first_variation() {
    let r = 1.5;
    let s = fixtures::octasphere(r, 5).unwrap();
    assert_eq!(s.len(), 8192);
    let dv = first_variation(&s, &radial_unit(3)).unwrap();
    let want = 2.0 / r * 4.0 * PI * r * r;
    assert!((dv - want).abs() < 0.02 * want, "{dv} vs {want}");
    // mean curvature vector −(2/r)x̂ pairs with X = x̂ to −2/r
    let h_dot_x = -2.0 / r * mass(&s, &Region::All);
    assert!((dv + h_dot_x).abs() < 0.02 * dv.abs());
}

#[test]
fn flat_pieces_are_stationary_inside() {
    let p = fixtures::plane_patch(1.0, 24).unwrap();
    // compactly supported bump field, zero near the boundary
    let x = AnalyticField::new(3, |x: &[f64]| {
        let s = 1.0 - 4.0 * (x[0] * x[0] + x[1] * x[1]);
        if s <= 0.0 {
            return (vec![0.0; 3], vec![0.0; 9]);
        }
        let w = s * s;
        let (dw0, dw1) = (-16.0 * s * x[0], -16.0 * s * x[1]);
        let val = vec![w * (1.0 + x[1]), w * x[0], w];
        let j = vec![
            dw0 * (1.0 + x[1]), dw1 * (1.0 + x[1]) + w, 0.0,
            dw0 * x[0] + w, dw1 * x[0], 0.0,
            dw0, dw1, 0.0,
        ];
        (val, j)
    });
    let dv = first_variation(&p, &x).unwrap();
    let area = mass(&p, &Region::All);
    assert!(dv.abs() < 1e-3 * 2.0 * area, "{dv}");
}

#[test]
fn disk_boundary_term() {
    let d = fixtures::disk(1.0, 32).unwrap();
    let x = identity_field(3);
    let flux = boundary_flux(&d, &x).unwrap();
    assert!((flux - 2.0 * PI).abs() < 0.02 * 2.0 * PI, "{flux}");
    let dv = first_variation(&d, &x).unwrap();
    assert!((dv - flux).abs() < 1e-9 * flux);
}

fn lifted_patch(height: f64) -> DiscreteVarifold {
    let p = fixtures::plane_patch(1.0, 8).unwrap();
    let verts = p.vertices().iter().map(|q| vec![q[0], q[1], height]).collect();
    DiscreteVarifold::new(verts, p.faces().to_vec(), p.multiplicities().to_vec()).unwrap()
}

#[test]
fn linear_function_gives_an_equality_chain() {
    let vf = lifted_patch(0.7);
    let f = TestFunction::quadratic(
        Quadratic::new(vec![0.0; 3], vec![0.0, 0.0, 1.0], SymForm::zeros(3), 0.0).unwrap(),
    );
    let a = divergence_bound_audit(&vf, &f).unwrap();
    assert_eq!(a.holds_fraction, 1.0);
    for row in &a.faces {
        assert!(row.div_m.abs() < 1e-12 && row.trace_m_dx.abs() < 1e-12 && row.f_trace_m_hess == 0.0);
    }
}

#[test]
fn half_square_norm_matches_hand_derivative() {
    let vf = lifted_patch(1.0);
    let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 3], 0.5));
    for x in [[0.3, -0.2, 1.0], [0.0, 0.0, 1.0], [-0.9, 0.8, 1.0]] {
        let dx = gradient_field_jacobian(&f.jet(&x).unwrap());
        let half = 0.5 * v::dot(&x, &x);
        for a in 0..3 {
            for b in 0..3 {
                let hand = if a == b { half } else { 0.0 } + x[a] * x[b];
                assert!((dx.get(a, b) - hand).abs() < 1e-14);
            }
        }
    }
    let a = divergence_bound_audit(&vf, &f).unwrap();
    assert_eq!(a.holds_fraction, 1.0);
    // tangential trace picks up |x|² + x₁² + x₂², strictly above Trace_2
    assert!(a.faces.iter().all(|r| r.div_m > r.trace_m_dx + 1e-3));
}

#[test]
fn random_cubic_on_sphere() {
    let s = fixtures::octasphere(1.0, 4).unwrap();
    for seed in 0..3 {
        let f = Cubic::random(vec![0.0; 3], 1.0, seed);
        let a = divergence_bound_audit(&s, &f).unwrap();
        assert!(a.holds_fraction >= 0.99, "seed {seed}: {}", a.holds_fraction);
        for row in a.flagged() {
            assert!(row.discretization > 0.0);
        }
    }
}

#[test]
fn plane_densities() {
    let p = fixtures::plane_patch(1.0, 32).unwrap();
    let est = density(&p, &[0.1, -0.2, 0.0], &[0.6, 0.5]).unwrap();
    assert!(est.iter().all(|e| (e.theta - 1.0).abs() < 0.01), "{est:?}");
    let p3 = p.scaled_multiplicity(3.0).unwrap();
    let est = density(&p3, &[0.0; 3], &[0.5]).unwrap();
    assert!((est[0].theta - 3.0).abs() < 0.03);
}

#[test]
fn counterexample_density_profile() {
    let c = counterexample_sequence(1, 0.01).unwrap();
    let vf = &c.varifold;
    let at = |x: [f64; 2], r: f64| density(vf, &x, &[r]).unwrap()[0].theta;
    assert!((at([1.5, 0.0], 0.2) - plateau(1.5)).abs() < 0.02 * 2.0);
    assert!((at([0.0, 1.0], 0.2) - 1.0).abs() < 0.02);
    assert!((at([4.0, 0.0], 0.2) - 1.0).abs() < 0.02);
    assert!((at([-2.5, 0.0], 0.1) - plateau(2.5)).abs() < 0.02 * plateau(2.5));
    for alpha in [1.001, 1.5, 2.0, 3.0] {
        assert!(!gap_alpha_check(vf, alpha).unwrap().holds, "α = {alpha}");
    }
}

#[test]
fn counterexample_sequence_converges_without_c1() {
    let mut last = f64::INFINITY;
    for n in 1..=6 {
        let c = counterexample_sequence(n, 0.01).unwrap();
        assert!(c.hausdorff_to_segment <= 1.0 / n as f64 + 1e-15);
        assert!(c.hausdorff_to_segment < last);
        last = c.hausdorff_to_segment;
        for jump in c.tangent_angle_jump {
            assert!(jump > 0.0);
            assert!((jump - c.tangent_angle_limit).abs() < 0.01 * c.tangent_angle_limit, "{jump}");
        }
        assert!((c.mass - c.mass_oracle).abs() < 5e-3 * c.mass_oracle);
    }
}

fn slab_grid(half: f64, cell: f64) -> Grid {
    let k = (half / cell).round() as usize;
    Grid::new(vec![-half, -half, -0.4], vec![half, half, 0.4], vec![2 * k + 1, 2 * k + 1, 9]).unwrap()
}

#[test]
fn blowup_of_multiplied_plane() {
    let cell = 0.1;
    let g = slab_grid(0.8, cell);
    let fam = fixtures::multiplicity_plane_family(16, 1.0, 32).unwrap();
    let rep = blowup_set(&fam, &g, cell, Schedule::default()).unwrap();
    assert!(rep.marked.iter().all(|p| p[2].abs() <= cell));
    let layer = (0..g.len()).map(|i| g.node_flat(i)).filter(|p| p[2] == 0.0).count();
    assert_eq!(rep.marked.iter().filter(|p| p[2] == 0.0).count(), layer);
}

#[test]
fn blowup_of_bounded_family_is_empty() {
    let g = Grid::new(vec![-1.2, -1.2, -0.4], vec![1.2, 1.2, 0.4], vec![25, 25, 9]).unwrap();
    let fam = fixtures::bounded_disk_family(16, 32).unwrap();
    let rep = blowup_set(&fam, &g, 0.1, Schedule::default()).unwrap();
    assert!(rep.marked.is_empty() && rep.set.is_none());
}

#[test]
fn blowup_of_half_weighted_plane_is_the_closed_half_plane() {
    let cell = 0.1;
    let g = slab_grid(0.8, cell);
    let fam = fixtures::half_plane_family(16, 1.0, 32).unwrap();
    let rep = blowup_set(&fam, &g, cell, Schedule::default()).unwrap();
    assert!(rep.marked.iter().all(|p| p[2].abs() <= cell && p[0] <= cell));
    for i in 0..g.len() {
        let p = g.node_flat(i);
        if p[2] == 0.0 && p[0] <= 1e-12 {
            assert!(rep.marked.contains(&p), "{p:?} missing");
        }
    }
}

#[test]
fn excess_curvature_stays_bounded_on_spheres() {
    let r = 0.8;
    let base = fixtures::octasphere(r, 3).unwrap();
    let fam: Vec<_> = (1..=5).map(|i| base.scaled_multiplicity(i as f64).unwrap()).collect();
    let h_abs = |_: &[f64]| 2.0 / r;
    let at_h = excess_curvature_audit(&fam, &[2.0 / r; 5], &Region::All, &h_abs, 1e-9).unwrap();
    assert!(at_h.bounded);
    let cap = 2.0 / r * 4.0 * PI * r * r * 5.0 * 1.01;
    let small = excess_curvature_audit(&fam, &[0.0; 5], &Region::All, &h_abs, cap).unwrap();
    assert!(small.bounded);
    assert!(small.values.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_additive_over_disjoint_boxes(t in 0.0f64..1.0, lo in -1.2f64..-0.5, hi in 0.5f64..1.2) {
        let cut = lo + t * (hi - lo);
        let d = fixtures::disk(1.0, 12).unwrap();
        let left = Region::Box { lo: vec![lo, -2.0, -1.0], hi: vec![cut, 2.0, 1.0] };
        let right = Region::Box { lo: vec![cut + 1e-12, -2.0, -1.0], hi: vec![hi, 2.0, 1.0] };
        let both = Region::Box { lo: vec![lo, -2.0, -1.0], hi: vec![hi, 2.0, 1.0] };
        let whole = mass(&d, &both);
        let parts = mass(&d, &left) + mass(&d, &right);
        prop_assert!((whole - parts).abs() <= 1e-3 * whole);
    }

    #[test]
    fn mass_is_linear_in_multiplicity(c in 0.0f64..10.0, x in -1.0f64..1.0, r in 0.05f64..1.0) {
        let d = fixtures::disk(1.0, 8).unwrap();
        let u = Region::ball(vec![x, 0.0, 0.0], r);
        let scaled = d.scaled_multiplicity(c).unwrap();
        // powers of two scale exactly; others up to rounding
        prop_assert!((mass(&scaled, &u) - c * mass(&d, &u)).abs() <= 1e-14 * c.max(1.0));
        let four = d.scaled_multiplicity(4.0).unwrap();
        prop_assert_eq!(mass(&four, &u), 4.0 * mass(&d, &u));
    }
}

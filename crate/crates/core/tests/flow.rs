use mhsets::fields::{signed_distance, Grid, Shape};
use mhsets::flow::{
    flow_to_limit, AvoidanceMonitor, FlowOptions, FlowState, HMeanConvexRegion,
};
use mhsets::predicate::ClosedSet;
use mhsets::MhError;

fn circle_state(half: f64, count: usize, radius: f64, h: f64) -> FlowState {
    let grid = Grid::cube(2, half, count).unwrap();
    let phi = signed_distance(&Shape::sphere(vec![0.0, 0.0], radius), &grid).unwrap();
    FlowState::new(phi, h).unwrap()
}

fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let d = |p: &Vec<f64>, q: &Vec<f64>| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let one = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.iter().map(|p| b.iter().map(|q| d(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

fn vertical_line(x: f64, spacing: f64) -> ClosedSet {
    let k = (2.0 / spacing).ceil() as usize;
    let pts = (0..=k).map(|i| vec![x, -1.0 + 2.0 * i as f64 / k as f64]).collect();
    ClosedSet::point_cloud("line", pts, spacing).unwrap()
}

#[test]
fn shrinking_circle_tracks_the_ode_and_vanishes_on_time() {
    let mut s = circle_state(0.6, 121, 0.5, 0.0);
    let dx = s.dx();
    let dt = s.default_dt();
    let mut last = (s.t, s.equivalent_radius());
    let mut worst: f64 = 0.0;
    while !s.is_extinct() {
        for _ in 0..100 {
            s.advance(dt).unwrap();
            if s.is_extinct() {
                break;
            }
            if s.steps_since_reinit >= 20 && s.reinitialize_in_place().is_err() {
                break;
            }
        }
        if s.is_extinct() {
            break;
        }
        let now = (s.t, s.equivalent_radius());
        if now.1 < 10.0 * dx {
            break;
        }
        let rate = (now.1 - last.1) / (now.0 - last.0);
        // exact mean rate of ρ = √(ρ₀² − 2t) over the interval
        let exact = -2.0 / (now.1 + last.1);
        worst = worst.max((rate / exact - 1.0).abs());
        last = now;
    }
    assert!(worst < 0.02, "relative rate error {worst}");
    while !s.is_extinct() {
        s.advance(dt).unwrap();
        if s.steps_since_reinit >= 20 && s.reinitialize_in_place().is_err() {
            break;
        }
    }
    let exact = 0.5f64 * 0.5 / 2.0;
    assert!((s.t / exact - 1.0).abs() < 0.05, "extinction at {} vs {exact}", s.t);
}

#[test]
fn forced_circle_equilibrium_barely_drifts() {
    let mut s = circle_state(0.6, 121, 0.5, 2.0);
    let dx = s.dx();
    let dt = s.default_dt();
    let start = s.interface_points();
    for _ in 0..1000 {
        s.advance(dt).unwrap();
        if s.steps_since_reinit >= 20 {
            s.reinitialize_in_place().unwrap();
        }
    }
    let drift = hausdorff(&start, &s.interface_points());
    assert!(drift <= dx, "drift {drift} vs cell {dx}");
}

#[test]
fn reinitialization_keeps_the_circle_in_place() {
    let mut s = circle_state(0.6, 121, 0.5, 0.0);
    let dx = s.dx();
    let dt = s.default_dt();
    for _ in 0..19 {
        s.advance(dt).unwrap();
    }
    let before = s.interface_points();
    let r = s.reinitialize().unwrap();
    let moved = hausdorff(&before, &r.interface_points());
    assert!(moved <= 0.1 * dx, "moved {moved}");
    let phi = r.phi();
    for (i, v) in phi.values().iter().enumerate() {
        let p = phi.grid().node_flat(i);
        if v.abs() < 3.0 * dx && v.abs() > dx && phi.grid().has_margin(&p, 2) {
            let g = phi.gradient(&p).unwrap();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((0.9..=1.1).contains(&n), "|∇φ| = {n} at {p:?}");
        }
    }
}

#[test]
fn circle_limit_is_the_cmc_circle() {
    let grid = Grid::cube(2, 0.8, 129).unwrap();
    let n0 = HMeanConvexRegion::from_shape(&Shape::sphere(vec![0.0, 0.0], 0.5), &grid, 2.0).unwrap();
    assert!(n0.verified);
    let limit = flow_to_limit(&n0, 2.0, None, &FlowOptions::default()).unwrap();
    let dx = grid.min_spacing();
    assert!(!limit.extinct && limit.converged);
    let tol = (0.02 * 0.5f64).max(2.0 * dx);
    assert!((limit.radius - 0.5).abs() <= tol, "radius {}", limit.radius);
    assert!(limit.nesting_ok, "rate {}", limit.nesting_worst_rate);
}

#[test]
fn sphere_limit_is_the_cmc_sphere() {
    let grid = Grid::cube(3, 1.5, 48).unwrap();
    let n0 = HMeanConvexRegion::from_shape(&Shape::sphere(vec![0.0; 3], 1.0), &grid, 2.0).unwrap();
    assert!(n0.verified);
    let limit = flow_to_limit(&n0, 2.0, None, &FlowOptions::default()).unwrap();
    let dx = grid.min_spacing();
    assert!(!limit.extinct);
    assert!((limit.radius - 1.0).abs() <= 0.02f64.max(2.0 * dx), "radius {}", limit.radius);
}

#[test]
fn unforced_ball_goes_extinct_with_nested_regions() {
    let grid = Grid::cube(2, 0.6, 61).unwrap();
    let n0 = HMeanConvexRegion::from_shape(&Shape::sphere(vec![0.0, 0.0], 0.3), &grid, 0.0).unwrap();
    let limit = flow_to_limit(&n0, 0.0, None, &FlowOptions::default()).unwrap();
    assert!(limit.extinct && !limit.converged);
    assert!((limit.time / 0.045 - 1.0).abs() < 0.05, "time {}", limit.time);
    assert!(limit.nesting_ok, "rate {}", limit.nesting_worst_rate);
    assert!(limit.curvature_residual.is_none());
}

#[test]
fn flow_rejects_regions_that_are_not_mean_convex_enough() {
    let grid = Grid::cube(2, 0.6, 61).unwrap();
    let n0 = HMeanConvexRegion::from_shape(&Shape::sphere(vec![0.0, 0.0], 0.3), &grid, 5.0).unwrap();
    assert!(!n0.verified);
    assert!(matches!(
        flow_to_limit(&n0, 5.0, None, &FlowOptions::default()),
        Err(MhError::InvalidSetup(_))
    ));
}

#[test]
fn strong_barrier_configuration_is_stationary() {
    let grid = Grid::cube(2, 0.8, 129).unwrap();
    let dx = grid.min_spacing();
    let n0 = HMeanConvexRegion::from_shape(&Shape::sphere(vec![0.0, 0.0], 0.5), &grid, 2.0).unwrap();
    let k = 400;
    let ring: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / k as f64;
            vec![0.5 * a.cos(), 0.5 * a.sin()]
        })
        .collect();
    let z = ClosedSet::point_cloud("ring", ring.clone(), dx).unwrap();
    let limit = flow_to_limit(&n0, 2.0, Some(&z), &FlowOptions::default()).unwrap();
    assert_eq!(limit.z_contained, Some(true));
    let gap = hausdorff(&limit.surface, &ring);
    assert!(gap <= dx, "boundary gap {gap}");
}

#[test]
fn shrinking_circle_avoids_lines() {
    for gap_cells in [2.0, 10.0] {
        let mut s = circle_state(0.8, 81, 0.5, 0.0);
        let dx = s.dx();
        let z = vertical_line(0.5 + gap_cells * dx, 0.5 * dx);
        let mut m = AvoidanceMonitor::new(&z, &s).unwrap();
        let dt = s.default_dt();
        for _ in 0..60 {
            for _ in 0..20 {
                s.advance(dt).unwrap();
            }
            s.reinitialize_in_place().unwrap();
            m.record(&s);
        }
        let r = m.report();
        assert!(r.pass, "worst approach {}", r.worst_approach);
        assert!(r.distances.last().unwrap() > &r.distances[0]);
    }
}

#[test]
fn monitor_rejects_sets_meeting_the_region() {
    let grid = Grid::cube(3, 0.6, 25).unwrap();
    let phi = signed_distance(&Shape::sphere(vec![0.0; 3], 0.4), &grid).unwrap();
    let s = FlowState::new(phi, 0.0).unwrap();
    let mut pts = Vec::new();
    for i in 0..=20 {
        for j in 0..=20 {
            pts.push(vec![-0.5 + 0.05 * i as f64, -0.5 + 0.05 * j as f64, 0.0]);
        }
    }
    let plane = ClosedSet::point_cloud("plane", pts, 0.05).unwrap();
    assert!(matches!(AvoidanceMonitor::new(&plane, &s), Err(MhError::InvalidSetup(_))));
    let near = circle_state(0.8, 81, 0.5, 0.0);
    let z = vertical_line(0.5 + 0.5 * near.dx(), 0.01);
    assert!(matches!(AvoidanceMonitor::new(&z, &near), Err(MhError::InvalidSetup(_))));
}

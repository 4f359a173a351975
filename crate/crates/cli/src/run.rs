//! Dispatch from scenario kinds to the library pipelines.

use crate::fixtures::{closed_set, family, varifold};
use crate::report::{evaluate, Report, Status, Table};
use crate::scenario::*;
use anyhow::{bail, Result};
use mhsets::curvature::{barrier_check, comparison_check, riccati_propagate, SpaceFormAmbient};
use mhsets::fields::{ExpBarrier, Shape, SignedDistance};
use mhsets::flow::{flow_to_limit, HMeanConvexRegion};
use mhsets::linalg::SymForm;
use mhsets::predicate::{
    critical_h, distance_enlargement_check, mh_test, perturb_to_nonvanishing_gradient, probe_search, ClosedSet,
    ProbeFamily, Quadratic, SearchConfig, TestFunction, Verdict,
};
use mhsets::varifold::{
    blowup_set, boundary_flux, boundary_mass, counterexample_sequence, declared_density, density,
    divergence_bound_audit, first_variation, gap_alpha_check, mass, AnalyticField, Cubic, SmoothFunction,
};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Relative agreement of the tube integrator with the closed forms.
pub const TUBE_CLOSED_FORM: f64 = 1e-8;
/// Fraction of faces on which the divergence audit must hold.
pub const DIVERGENCE_FRACTION: f64 = 0.99;

struct Output {
    outcome: Outcome,
    result: Value,
    tables: BTreeMap<String, Table>,
}

impl Output {
    fn new(outcome: Outcome, result: Value) -> Self {
        Output { outcome, result, tables: BTreeMap::new() }
    }

    fn table(mut self, name: &str, t: Table) -> Self {
        self.tables.insert(name.to_string(), t);
        self
    }
}

fn outcome(violation: bool) -> Outcome {
    if violation {
        Outcome::Violation
    } else {
        Outcome::Pass
    }
}

/// Runs a scenario. `seed` overrides the scenario seed.
pub fn execute(s: &Scenario, seed: Option<u64>) -> Result<Report> {
    let seed = seed.unwrap_or(s.seed);
    let out = match s.task()? {
        Task::MhCheck(p) => mh_check(&p, seed)?,
        Task::Barrier(p) => barrier(&p)?,
        Task::Tube(p) => tube(&p)?,
        Task::VarifoldAudit(p) => varifold_audit(&p, seed)?,
        Task::Blowup(p) => blowup(&p)?,
        Task::Flow(p) => flow(&p)?,
        Task::DistanceSet(p) => distance(&p, seed)?,
        Task::Counterexample(p) => counterexample(&p)?,
    };
    let checks: Vec<_> = s
        .expect
        .iter()
        .flat_map(|e| e.checks.iter())
        .map(|c| evaluate(c, &out.result))
        .collect();
    let met = match &s.expect {
        Some(e) => e.outcome.is_none_or(|o| o == out.outcome) && checks.iter().all(|c| c.ok),
        None => out.outcome == Outcome::Pass,
    };
    Ok(Report {
        scenario: s.id.clone(),
        kind: s.kind,
        seed,
        tool_version: crate::report::TOOL_VERSION,
        outcome: out.outcome,
        status: if met { Status::Ok } else { Status::Unexpected },
        expected: s.expect.clone(),
        checks,
        result: out.result,
        tables: out.tables,
        tolerances: mhsets::tol::snapshot(),
    })
}

pub fn probe(spec: &ProbeSpec) -> Result<TestFunction> {
    Ok(match spec {
        ProbeSpec::Quadratic { center, linear, matrix, constant } => {
            let n = matrix.len();
            if matrix.iter().any(|r| r.len() != n) {
                bail!("quadratic matrix must be square");
            }
            let a = SymForm::new(n, matrix.concat())?;
            TestFunction::quadratic(Quadratic::new(center.clone(), linear.clone(), a, *constant)?)
        }
        ProbeSpec::Radial { center, s } => TestFunction::quadratic(Quadratic::radial(center.clone(), *s)),
        ProbeSpec::ExpBarrier { shape, alpha } => {
            shape.validate()?;
            TestFunction::exp_barrier(ExpBarrier::new(Arc::new(shape.clone()), *alpha)?)
        }
    })
}

fn set_summary(z: &ClosedSet) -> Value {
    json!({"id": z.id(), "samples": z.len(), "resolution": z.resolution()})
}

fn search_config(budget: usize, seed: u64, families: Option<&[ProbeFamily]>) -> SearchConfig {
    let cfg = SearchConfig::new(budget, seed);
    match families {
        Some(f) => cfg.with_families(f),
        None => cfg,
    }
}

fn mh_check(p: &MhCheck, seed: u64) -> Result<Output> {
    let z = closed_set(&p.set)?;
    let cfg = search_config(p.budget, seed, p.families.as_deref());
    let (verdict, f) = match &p.probe {
        Some(spec) => {
            let f = probe(spec)?;
            (mh_test(&z, &f, p.m, p.h, None)?, Some(f))
        }
        None => (probe_search(&z, p.m, p.h, &cfg)?, None),
    };
    let mut result = json!({"set": set_summary(&z), "verdict": verdict});
    // a critical maximum is moved to a nearby one with nonzero gradient
    if let (Verdict::Violation(c), Some(f)) = (&verdict, &f) {
        if c.grad_norm <= c.tolerances.grad {
            let pert = perturb_to_nonvanishing_gradient(f, &z, &c.point, p.m, p.h)?;
            result["perturbation"] = json!({
                "translation": pert.translation,
                "concavified": pert.concavified,
                "strict": pert.strict,
                "margin": pert.certificate.margin,
                "grad_norm": pert.certificate.grad_norm,
                "point": pert.certificate.point,
            });
        }
    }
    if let Some(b) = &p.bisect {
        let br = critical_h(&z, p.m, b.lo, b.hi, b.iterations, &cfg)?;
        result["bisect"] = json!({
            "violating": br.violating,
            "passing": br.passing,
            "iterations": br.iterations,
            "midpoint": br.midpoint(),
        });
    }
    Ok(Output::new(outcome(verdict.is_violation()), result))
}

fn barrier(p: &Barrier) -> Result<Output> {
    let z = closed_set(&p.set)?;
    p.region.validate()?;
    let rep = match &p.grid {
        Some(g) => {
            let grid = g.build()?;
            let sd = SignedDistance::build(&p.region, &grid, 6.0 * grid.max_spacing())?;
            barrier_check(&z, &sd, p.cell.unwrap_or(grid.max_spacing()), p.m, p.h)?
        }
        None => barrier_check(&z, &p.region, p.cell.unwrap_or(z.resolution()), p.m, p.h)?,
    };
    let n = z.dim();
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend((1..=n).map(|i| format!("foot{i}")));
    cols.extend(["h_m".to_string(), "excess".to_string()]);
    let mut t = Table { columns: cols, rows: Vec::new() };
    for tp in &rep.touching {
        let mut row = tp.sample.clone();
        row.extend(&tp.foot);
        row.extend([tp.h_m, tp.excess]);
        t.push(row);
    }
    let result = json!({
        "set": set_summary(&z),
        "region": if p.grid.is_some() { "gridded" } else { "analytic" },
        "m": rep.m,
        "h": rep.h,
        "touching": rep.touching.len(),
        "max_excess": rep.max_excess,
        "tolerance": rep.tolerance,
        "holds": rep.holds,
    });
    Ok(Output::new(outcome(!rep.holds), result).table("touching", t))
}

fn form(spec: &FormSpec, size: usize) -> Result<SymForm> {
    let f = match spec {
        FormSpec::Diag(d) => SymForm::from_diag(d),
        FormSpec::Rows(rows) => {
            if rows.iter().any(|r| r.len() != rows.len()) {
                bail!("form rows must be square");
            }
            SymForm::new(rows.len(), rows.concat())?
        }
    };
    if f.dim() != size {
        bail!("form has size {}, expected n − 1 = {size}", f.dim());
    }
    Ok(f)
}

fn tube(p: &Tube) -> Result<Output> {
    if p.n < 2 {
        bail!("tube needs an ambient dimension of at least 2");
    }
    let b = form(&p.form, p.n - 1)?;
    let amb = SpaceFormAmbient::new(p.n, p.k)?;
    let sol = riccati_propagate(&b, &amb, p.s)?;
    let cmp = comparison_check(&b, &sol.form, &amb, p.s, p.m)?;
    let closed_ok = sol.max_rel_error <= TUBE_CLOSED_FORM;
    let mut cols = vec!["s".to_string()];
    cols.extend((1..p.n).map(|i| format!("kappa_{i}")));
    let t = Table { columns: cols, rows: sol.trace.clone() };
    let result = json!({
        "initial": b.entries(),
        "final": sol.form.entries(),
        "eigenvalues": sol.eigenvalues,
        "closed_form": sol.closed_form,
        "max_rel_error": sol.max_rel_error,
        "closed_form_ok": closed_ok,
        "steps": sol.steps,
        "comparison": cmp,
    });
    Ok(Output::new(outcome(!(cmp.holds && closed_ok)), result).table("trace", t))
}

fn radial_unit(n: usize) -> AnalyticField<impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync> {
    AnalyticField::new(n, move |x: &[f64]| {
        let r = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        let u: Vec<f64> = x.iter().map(|a| a / r).collect();
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                j[a * n + b] = (if a == b { 1.0 } else { 0.0 } - u[a] * u[b]) / r;
            }
        }
        (u, j)
    })
}

fn identity(n: usize) -> AnalyticField<impl Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Sync> {
    AnalyticField::new(n, move |x: &[f64]| {
        let mut j = vec![0.0; n * n];
        for a in 0..n {
            j[a * n + a] = 1.0;
        }
        (x.to_vec(), j)
    })
}

fn varifold_audit(p: &VarifoldAudit, seed: u64) -> Result<Output> {
    let vf = varifold(&p.varifold)?;
    let n = vf.dim();
    let mut violation = false;
    let masses: Vec<Value> = p.masses.iter().map(|r| json!({"region": r, "mass": mass(&vf, r)})).collect();
    let bmasses: Vec<Value> =
        p.boundary_masses.iter().map(|r| json!({"region": r, "mass": boundary_mass(&vf, r)})).collect();
    let mut fv = Vec::new();
    for f in &p.first_variation {
        let (value, flux) = match f {
            FieldSpec::RadialUnit => (first_variation(&vf, &radial_unit(n))?, boundary_flux(&vf, &radial_unit(n))?),
            FieldSpec::Identity => (first_variation(&vf, &identity(n))?, boundary_flux(&vf, &identity(n))?),
        };
        fv.push(json!({"field": f, "value": value, "boundary_flux": flux}));
    }
    let mut dens = Vec::new();
    let mut t = Table::new(&["point_index", "radius", "mass", "theta"]);
    for (i, d) in p.density.iter().enumerate() {
        let est = density(&vf, &d.point, &d.radii)?;
        for e in &est {
            t.push(vec![i as f64, e.radius, e.mass, e.theta]);
        }
        dens.push(json!({"point": d.point, "estimates": est}));
    }
    let mut result = json!({
        "faces": vf.len(),
        "m": vf.m(),
        "total_mass": mass(&vf, &mhsets::varifold::Region::All),
        "masses": masses,
        "boundary_masses": bmasses,
        "first_variation": fv,
        "density": dens,
    });
    if let Some(a) = &p.divergence {
        let audit = match a {
            AuditFunction::Cubic { center, scale } => {
                divergence_bound_audit(&vf, &Cubic::random(center.clone(), *scale, seed) as &dyn SmoothFunction)?
            }
            AuditFunction::Probe { probe: spec } => divergence_bound_audit(&vf, &probe(spec)?)?,
        };
        violation |= audit.holds_fraction < DIVERGENCE_FRACTION;
        result["divergence"] = json!({
            "m": audit.m,
            "tolerance": audit.tolerance,
            "holds_fraction": audit.holds_fraction,
            "flagged": audit.flagged().count(),
        });
    }
    if let Some(alpha) = p.gap_alpha {
        let g = gap_alpha_check(&vf, alpha)?;
        violation |= !g.holds;
        result["gap"] = json!({"alpha": g.alpha, "holds": g.holds, "offenders": g.offenders.len()});
    }
    Ok(Output::new(outcome(violation), result).table("density", t))
}

fn blowup(p: &Blowup) -> Result<Output> {
    let fam = family(&p.family)?;
    let grid = p.grid.build()?;
    let rep = blowup_set(&fam, &grid, p.r, p.schedule)?;
    let n = grid.dim();
    let mut t = Table { columns: (1..=n).map(|i| format!("x{i}")).collect(), rows: Vec::new() };
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for q in &rep.marked {
        t.push(q.clone());
        for k in 0..n {
            lo[k] = lo[k].min(q[k]);
            hi[k] = hi[k].max(q[k]);
        }
    }
    let bbox = if rep.marked.is_empty() { Value::Null } else { json!({"lo": lo, "hi": hi}) };
    let result = json!({
        "radius": rep.radius,
        "schedule": rep.schedule,
        "i0": rep.i0,
        "thresholds": rep.thresholds,
        "nodes_checked": rep.nodes_checked,
        "marked": rep.marked.len(),
        "empty": rep.marked.is_empty(),
        "bounding_box": bbox,
    });
    Ok(Output::new(Outcome::Pass, result).table("marked", t))
}

fn flow(p: &Flow) -> Result<Output> {
    let grid = p.grid.build()?;
    p.region.validate()?;
    let n0 = HMeanConvexRegion::from_shape(&p.region, &grid, p.h)?;
    let z = p.z.as_ref().map(closed_set).transpose()?;
    let limit = flow_to_limit(&n0, p.h, z.as_ref(), &p.options)?;
    let mut t = Table::new(&["step", "t", "measure", "radius", "min_distance_to_z", "max_abs_kappa"]);
    for r in &limit.rows {
        t.push(vec![
            r.step as f64,
            r.t,
            r.measure,
            r.radius,
            r.min_distance_to_z.unwrap_or(f64::NAN),
            r.max_abs_kappa,
        ]);
    }
    let mut result = serde_json::to_value(&limit)?;
    if let Value::Object(m) = &mut result {
        m.remove("rows");
    }
    let m = grid.dim() - 1;
    result["initial"] = serde_json::to_value(&n0)?;
    result["m"] = json!(m);
    result["grid_spacing"] = json!(grid.min_spacing());
    if p.h > 0.0 {
        result["equilibrium_radius"] = json!(m as f64 / p.h);
    }
    if let Shape::Sphere { radius, .. } = &p.region {
        result["initial_radius"] = json!(radius);
    }
    let bad = !limit.nesting_ok || limit.z_contained == Some(false);
    Ok(Output::new(outcome(bad), result).table("rows", t))
}

fn distance(p: &DistanceSet, seed: u64) -> Result<Output> {
    let z = closed_set(&p.set)?;
    let cfg = SearchConfig::new(p.budget, seed);
    let rep = distance_enlargement_check(&z, p.s, p.m, p.h, p.ambient, &cfg)?;
    let passes = rep.passes();
    let mut result = serde_json::to_value(&rep)?;
    result["set"] = set_summary(&z);
    result["passes"] = json!(passes);
    Ok(Output::new(outcome(!passes), result))
}

fn counterexample(p: &Counterexample) -> Result<Output> {
    if p.n.is_empty() {
        bail!("counterexample needs at least one sequence index");
    }
    let mut members = Vec::new();
    let mut t = Table::new(&["n", "x", "y", "radius", "theta", "declared"]);
    let mut all_jump = true;
    for &n in &p.n {
        let c = counterexample_sequence(n, p.resolution)?;
        all_jump &= c.tangent_angle_jump.iter().all(|j| *j > 0.0);
        let mut worst: f64 = 0.0;
        for d in &p.density {
            let want = declared_density(d.point[0]);
            for e in density(&c.varifold, &d.point, &d.radii)? {
                worst = worst.max((e.theta - want).abs() / want);
                t.push(vec![n as f64, d.point[0], d.point[1], e.radius, e.theta, want]);
            }
        }
        let mut v = serde_json::to_value(&c)?;
        v["density_rel_error"] = json!(worst);
        members.push(v);
    }
    // a certified jump at ±1 for every member is the failure of C¹ regularity
    let result = json!({"members": members, "c1_failure": all_jump});
    Ok(Output::new(outcome(all_jump), result).table("density", t))
}

use super::check::{check_mh, lex, scored_maxima, MarginParts, PassReport, PredicateTolerances, Verdict, ViolationCertificate};
use super::function::{Quadratic, TestFunction};
use super::set::ClosedSet;
use crate::error::{invalid, MhError, Result};
use crate::fields::{ExpBarrier, LevelSet, Shape};
use crate::linalg::{vec as v, SymForm};
use crate::par::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::sync::Arc;

/// Members of the probe family swept by [`probe_search`].
///
/// Probe `i` belongs to family `families[i % families.len()]` and draws its
/// parameters from ChaCha8 stream `i` of the search seed. Lengths are
/// measured by `L`, the distance from the probe centre to the farthest sample.
///
/// - `radial`: `|x − c|²/L`.
/// - `quadratic`: `b·(x − c) + ½(x − c)ᵀA(x − c)` with a random orthonormal
///   frame, eigenvalues of `A` uniform in `[−2/L, 2/L]` and a unit `b`.
/// - `ball-barrier`: `e^{αu}/α` with `u` the signed distance to the smallest
///   ball about `c` that contains the samples, `α = 10/R`.
/// - `cylinder-barrier`: the same for an enclosing round cylinder with a
///   random axis (a half-space in the plane).
/// - `half-space`: `y₁ + (y₁² + Σ_{i>m} (tᵢ·y)²)/L` in a frame `(e, t₂, …)`
///   with `y = x − p` and `p` the sample extreme in direction `e`.
/// - `nearest-point`: `−|x − c|²/L`, maximal at the samples nearest `c`,
///   with `c` displaced from the centre by `L/2` in a random direction.
///
/// The first probes of each family use the box centre and the coordinate
/// directions; later ones are jittered. Every probe carries a proper tail
/// `−10⁻⁶|x − c|²/L³`. Constants do not enter margins, so the normalization
/// of the maximum to value 0 is recorded rather than applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeFamily {
    Radial,
    Quadratic,
    BallBarrier,
    CylinderBarrier,
    HalfSpace,
    NearestPoint,
}

impl ProbeFamily {
    pub const ALL: [ProbeFamily; 6] = [
        ProbeFamily::Radial,
        ProbeFamily::Quadratic,
        ProbeFamily::BallBarrier,
        ProbeFamily::CylinderBarrier,
        ProbeFamily::HalfSpace,
        ProbeFamily::NearestPoint,
    ];

    pub const BARRIERS: [ProbeFamily; 2] = [ProbeFamily::BallBarrier, ProbeFamily::CylinderBarrier];
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub budget: usize,
    pub seed: u64,
    pub families: Vec<ProbeFamily>,
    pub exec: Exec,
}

impl SearchConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        SearchConfig {
            budget,
            seed,
            families: ProbeFamily::ALL.to_vec(),
            exec: Exec::default(),
        }
    }

    pub fn with_families(mut self, families: &[ProbeFamily]) -> Self {
        self.families = families.to_vec();
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

const TAIL: f64 = 1e-6;

/// Geometry of the sample set shared by every probe.
struct ProbeContext<'a> {
    z: &'a ClosedSet,
    center: Vec<f64>,
    extent: Vec<f64>,
    m: usize,
}

impl<'a> ProbeContext<'a> {
    fn new(z: &'a ClosedSet, m: usize) -> Self {
        let b = z.bounding_box();
        ProbeContext {
            z,
            center: z.centroid_of_box(),
            extent: b.lo.iter().zip(&b.hi).map(|(l, h)| 0.5 * (h - l)).collect(),
            m,
        }
    }

    fn n(&self) -> usize {
        self.z.dim()
    }

    /// Farthest-sample distance from `c`, at least the resolution.
    fn reach(&self, c: &[f64]) -> f64 {
        self.z
            .points()
            .iter()
            .map(|p| v::dist(p, c))
            .fold(self.z.resolution(), f64::max)
    }

    fn jittered_center(&self, rng: &mut ChaCha8Rng, jitter: bool) -> Vec<f64> {
        if !jitter {
            return self.center.clone();
        }
        self.center
            .iter()
            .zip(&self.extent)
            .map(|(c, e)| c + 0.5 * e * rng.gen_range(-1.0..=1.0))
            .collect()
    }

    fn unit(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let g: Vec<f64> = (0..self.n()).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v::norm(&g);
            if norm > 1e-3 {
                return v::scale(&g, 1.0 / norm);
            }
        }
    }

    /// Orthonormal frame whose first vector is `first`.
    fn frame(&self, first: Vec<f64>, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut basis = vec![first];
        while basis.len() < self.n() {
            let mut w = self.unit(rng);
            for b in &basis {
                w = v::sub(&w, &v::scale(b, v::dot(&w, b)));
            }
            let norm = v::norm(&w);
            if norm > 1e-3 {
                basis.push(v::scale(&w, 1.0 / norm));
            }
        }
        basis
    }

    /// Sample maximizing `e·x`; ties go to the lexicographically largest.
    fn extreme(&self, e: &[f64]) -> Vec<f64> {
        let mut best = &self.z.points()[0];
        let mut best_v = v::dot(best, e);
        for p in &self.z.points()[1..] {
            let s = v::dot(p, e);
            if s > best_v || (s == best_v && lex(p, best).is_gt()) {
                best = p;
                best_v = s;
            }
        }
        best.clone()
    }

    fn tail(&self, f: TestFunction, c: &[f64], l: f64) -> Result<TestFunction> {
        f.with_proper_tail(c, TAIL / (l * l * l))
    }

    fn build(&self, family: ProbeFamily, i: usize, seed: u64) -> Result<TestFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let n = self.n();
        let round = i / ProbeFamily::ALL.len();
        let jitter = round > 0;
        let label = match family {
            ProbeFamily::Radial => "radial",
            ProbeFamily::Quadratic => "quadratic",
            ProbeFamily::BallBarrier => "ball-barrier",
            ProbeFamily::CylinderBarrier => "cylinder-barrier",
            ProbeFamily::HalfSpace => "half-space",
            ProbeFamily::NearestPoint => "nearest-point",
        };
        let f = match family {
            ProbeFamily::NearestPoint => {
                let c0 = self.jittered_center(&mut rng, jitter);
                let d = self.unit(&mut rng);
                let c = v::add(&c0, &v::scale(&d, 0.5 * self.reach(&c0)));
                let l = self.reach(&c);
                let f = TestFunction::quadratic(Quadratic::radial(c.clone(), -1.0 / l));
                self.tail(f, &c, l)?
            }
            ProbeFamily::Radial => {
                let c = self.jittered_center(&mut rng, jitter);
                let l = self.reach(&c);
                let f = TestFunction::quadratic(Quadratic::radial(c.clone(), 1.0 / l));
                self.tail(f, &c, l)?
            }
            ProbeFamily::Quadratic => {
                let c = self.jittered_center(&mut rng, true);
                let l = self.reach(&c);
                let first = self.unit(&mut rng);
                let frame = self.frame(first, &mut rng);
                let eig: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0) / l).collect();
                let a = SymForm::from_spectrum(&eig, &frame);
                let b = self.unit(&mut rng);
                let f = TestFunction::quadratic(Quadratic::new(c.clone(), b, a, 0.0)?);
                self.tail(f, &c, l)?
            }
            ProbeFamily::BallBarrier => {
                let c = self.jittered_center(&mut rng, jitter);
                let r = self.reach(&c);
                let ball: Arc<dyn LevelSet> = Arc::new(Shape::sphere(c.clone(), r));
                let alpha = 10.0 / r;
                let f = TestFunction::exp_barrier(ExpBarrier::new(ball, alpha)?).scaled(1.0 / alpha)?;
                self.tail(f, &c, r)?
            }
            ProbeFamily::CylinderBarrier => {
                let c = self.jittered_center(&mut rng, jitter);
                let axis = if !jitter {
                    let mut a = vec![0.0; n];
                    a[(i / ProbeFamily::ALL.len()) % n] = 1.0;
                    a
                } else {
                    self.unit(&mut rng)
                };
                let shape = if n >= 3 {
                    let radius = self
                        .z
                        .points()
                        .iter()
                        .map(|p| {
                            let y = v::sub(p, &c);
                            v::norm(&v::sub(&y, &v::scale(&axis, v::dot(&y, &axis))))
                        })
                        .fold(self.z.resolution(), f64::max);
                    Shape::Cylinder { point: c.clone(), axis, radius }
                } else {
                    let offset = v::dot(&self.extreme(&axis), &axis);
                    Shape::HalfSpace { normal: axis, offset }
                };
                let l = self.reach(&c);
                let alpha = match &shape {
                    Shape::Cylinder { radius, .. } => 10.0 / radius,
                    _ => 10.0 / l,
                };
                let src: Arc<dyn LevelSet> = Arc::new(shape);
                let f = TestFunction::exp_barrier(ExpBarrier::new(src, alpha)?).scaled(1.0 / alpha)?;
                self.tail(f, &c, l)?
            }
            ProbeFamily::HalfSpace => {
                let slot = i / ProbeFamily::ALL.len();
                let e = if slot < 2 * n {
                    let mut e = vec![0.0; n];
                    e[slot / 2] = if slot.is_multiple_of(2) { 1.0 } else { -1.0 };
                    e
                } else {
                    self.unit(&mut rng)
                };
                let p = self.extreme(&e);
                let l = self.reach(&p);
                let frame = self.frame(e.clone(), &mut rng);
                let mut a = SymForm::outer(&frame[0]);
                for t in frame.iter().skip(self.m) {
                    a = a.add(&SymForm::outer(t))?;
                }
                let f = TestFunction::quadratic(Quadratic::new(p.clone(), e, a.scale(2.0 / l), 0.0)?);
                self.tail(f, &p, l)?
            }
        };
        Ok(f.with_label(label))
    }
}

/// Outcome of one probe: its best maximum, if any.
struct ProbeHit {
    index: usize,
    point: Vec<f64>,
    parts: MarginParts,
    checked: usize,
    max_value: f64,
}

fn run_probe(ctx: &ProbeContext, cfg: &SearchConfig, i: usize, h: f64) -> Option<ProbeHit> {
    let family = cfg.families[i % cfg.families.len()];
    let f = ctx.build(family, i, cfg.seed).ok()?;
    let scored = scored_maxima(ctx.z, &f, ctx.m, h, None, Exec::Sequential).ok()?;
    let checked = scored.len();
    let max_value = scored.iter().map(|s| s.0.value).fold(f64::NEG_INFINITY, f64::max);
    let (mx, parts) = scored.into_iter().next()?;
    Some(ProbeHit {
        index: i,
        point: mx.point,
        parts,
        checked,
        max_value,
    })
}

/// Sweeps the probe family over `z` and returns the largest violation, or a
/// pass report with the largest margin seen.
///
/// A pass is evidence only: the predicate quantifies over every C² function.
pub fn probe_search(z: &ClosedSet, m: usize, h: f64, cfg: &SearchConfig) -> Result<Verdict> {
    check_mh(m, h, z.dim())?;
    if cfg.budget == 0 || cfg.families.is_empty() {
        return Err(invalid("probe budget and family list must be nonempty"));
    }
    let ctx = ProbeContext::new(z, m);
    let tols = PredicateTolerances::for_set(z);
    let hits: Vec<Option<ProbeHit>> = cfg.exec.map(cfg.budget, |i| run_probe(&ctx, cfg, i, h));
    let checked = hits.iter().flatten().map(|h| h.checked).sum();
    let best = hits.into_iter().flatten().reduce(|a, b| {
        let order = b
            .parts
            .margin
            .total_cmp(&a.parts.margin)
            .then_with(|| lex(&a.point, &b.point))
            .then_with(|| a.index.cmp(&b.index));
        if order.is_gt() {
            b
        } else {
            a
        }
    });
    Ok(match best {
        Some(hit) if hit.parts.margin > tols.margin => {
            let family = cfg.families[hit.index % cfg.families.len()];
            let f = ctx.build(family, hit.index, cfg.seed)?;
            Verdict::Violation(ViolationCertificate {
                set_id: z.id().to_string(),
                m,
                h,
                probe: json!({
                    "family": family,
                    "index": hit.index,
                    "seed": cfg.seed,
                    "max_value": hit.max_value,
                    "function": f.describe(),
                }),
                point: hit.point,
                margin: hit.parts.margin,
                trace_m: hit.parts.trace_m,
                grad_norm: hit.parts.grad_norm,
                tolerances: tols,
            })
        }
        best => Verdict::Pass(PassReport {
            set_id: z.id().to_string(),
            m,
            h,
            probes: cfg.budget,
            maxima_checked: checked,
            worst_margin: best.as_ref().map(|b| b.parts.margin),
            worst_point: best.map(|b| b.point),
            falsifier_only: true,
            tolerances: tols,
        }),
    })
}

/// Rebuilds probe `index` of a search, for independent re-evaluation.
pub fn rebuild_probe(z: &ClosedSet, m: usize, cfg: &SearchConfig, index: usize) -> Result<TestFunction> {
    let family = cfg.families[index % cfg.families.len()];
    ProbeContext::new(z, m).build(family, index, cfg.seed)
}

/// `[violating, passing]` bracket for the smallest passing `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HBracket {
    pub violating: f64,
    pub passing: f64,
    pub iterations: usize,
}

impl HBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.violating + self.passing)
    }
}

/// Bisects on `h` between a violating `lo` and a passing `hi`.
pub fn critical_h(z: &ClosedSet, m: usize, lo: f64, hi: f64, iterations: usize, cfg: &SearchConfig) -> Result<HBracket> {
    if !(lo < hi) {
        return Err(invalid("bisection needs lo < hi"));
    }
    if !probe_search(z, m, lo, cfg)?.is_violation() {
        return Err(invalid(format!("h = {lo} already passes; lower the bracket")));
    }
    if probe_search(z, m, hi, cfg)?.is_violation() {
        return Err(invalid(format!("h = {hi} still violates; raise the bracket")));
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iterations {
        let mid = 0.5 * (a + b);
        if probe_search(z, m, mid, cfg)?.is_violation() {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(HBracket {
        violating: a,
        passing: b,
        iterations,
    })
}

/// Ambient geometry for the distance-set theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Ambient {
    Flat,
    /// Constant sectional curvature `k`.
    SpaceForm { k: f64 },
    /// Codimension-one case with Ricci lower bound `rho`.
    Ricci { rho: f64 },
}

impl Ambient {
    /// `h' ∈ {h, h − mKs, h − ρs}`.
    pub fn adjusted_h(&self, m: usize, h: f64, s: f64) -> f64 {
        match *self {
            Ambient::Flat => h,
            Ambient::SpaceForm { k } => h - m as f64 * k * s,
            Ambient::Ricci { rho } => h - rho * s,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub s: f64,
    pub m: usize,
    pub h: f64,
    pub adjusted_h: f64,
    pub ambient: Ambient,
    /// Whether `Z(s)` was built and probed directly.
    pub constructive: bool,
    pub samples: usize,
    pub verdict: Option<Verdict>,
    /// Tube comparison used for curved ambients.
    pub comparison: Option<crate::curvature::ComparisonReport>,
}

impl DistanceReport {
    pub fn passes(&self) -> bool {
        match (&self.verdict, &self.comparison) {
            (Some(v), _) => !v.is_violation(),
            (None, Some(c)) => c.holds,
            (None, None) => false,
        }
    }
}

/// Largest node count of a constructed distance set.
const MAX_DISTANCE_NODES: usize = 4_000_000;

/// `Z(s) = {x : dist(x, Z) ≤ s}` as the nodes of a lattice of spacing
/// `s/4` covering the samples, plus points on the level `dist = s` along
/// lattice edges that leave the set. The trust window is pulled in by `s`.
pub fn distance_set(z: &ClosedSet, s: f64) -> Result<ClosedSet> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid("distance must be positive"));
    }
    if let Some(w) = z.window().min_finite_width() {
        if w <= 2.0 * s {
            return Err(MhError::OutOfDomain {
                point: z.centroid_of_box(),
                margin: 0,
            });
        }
    }
    let dx = s / 4.0;
    let b = z.bounding_box();
    let lo: Vec<f64> = b.lo.iter().map(|x| x - s - dx).collect();
    let counts: Vec<usize> = b
        .lo
        .iter()
        .zip(&b.hi)
        .map(|(l, h)| ((h - l + 2.0 * (s + dx)) / dx).ceil() as usize + 1)
        .collect();
    let total = counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c));
    if total.is_none_or(|t| t > MAX_DISTANCE_NODES) {
        return Err(invalid("distance set needs too many lattice nodes"));
    }
    let total = total.unwrap_or(0);
    let node = |mut t: usize| -> Vec<f64> {
        let mut x = vec![0.0; counts.len()];
        for k in (0..counts.len()).rev() {
            x[k] = lo[k] + (t % counts[k]) as f64 * dx;
            t /= counts[k];
        }
        x
    };
    // re-index the samples with cells of width s so each query visits 3ⁿ cells
    let coarse = ClosedSet::point_cloud("", z.points().to_vec(), s / crate::tol::MAX_NEIGHBOURHOOD)?;
    let nearest = |x: &[f64]| {
        let mut best = f64::INFINITY;
        coarse.all_within(x, s, |j| {
            best = best.min(v::dist(&coarse.points()[j], x));
            true
        });
        best
    };
    let keep: Vec<bool> = Exec::default().map(total, |t| nearest(&node(t)) <= s);
    let strides: Vec<usize> = (0..counts.len())
        .map(|k| counts[k + 1..].iter().product())
        .collect();
    // exact boundary samples on lattice edges that cross dist = s
    let crossings: Vec<Vec<Vec<f64>>> = Exec::default().map(total, |t| {
        let mut out = Vec::new();
        if !keep[t] {
            return out;
        }
        let x = node(t);
        for k in 0..counts.len() {
            let idx = (t / strides[k]) % counts[k];
            for (dir, ok) in [(1.0, idx + 1 < counts[k]), (-1.0, idx > 0)] {
                if !ok {
                    continue;
                }
                let u = if dir > 0.0 { t + strides[k] } else { t - strides[k] };
                if keep[u] {
                    continue;
                }
                let (mut a, mut b) = (0.0, dx);
                for _ in 0..40 {
                    let mid = 0.5 * (a + b);
                    let mut y = x.clone();
                    y[k] += dir * mid;
                    if nearest(&y) <= s {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let mut y = x.clone();
                y[k] += dir * a;
                out.push(y);
            }
        }
        out
    });
    let points: Vec<Vec<f64>> = (0..total)
        .filter(|&t| keep[t])
        .map(node)
        .chain(crossings.into_iter().flatten())
        .collect();
    ClosedSet::point_cloud(format!("{}(s={s})", z.id()), points, dx)?.with_window(z.window().shrink(s))
}

/// Checks that `Z(s)` satisfies the predicate with the ambient-adjusted `h`.
///
/// Flat ambients build `Z(s)` and sweep probes. Curved ambients report the
/// adjusted `h` and verify the tube comparison it rests on.
pub fn distance_enlargement_check(
    z: &ClosedSet,
    s: f64,
    m: usize,
    h: f64,
    ambient: Ambient,
    cfg: &SearchConfig,
) -> Result<DistanceReport> {
    check_mh(m, h, z.dim())?;
    if !(s > 0.0) {
        return Err(invalid("distance must be positive"));
    }
    let adjusted_h = ambient.adjusted_h(m, h, s);
    match ambient {
        Ambient::Flat => {
            let zs = distance_set(z, s)?;
            let verdict = probe_search(&zs, m, adjusted_h, cfg)?;
            Ok(DistanceReport {
                s,
                m,
                h,
                adjusted_h,
                ambient,
                constructive: true,
                samples: zs.len(),
                verdict: Some(verdict),
                comparison: None,
            })
        }
        Ambient::SpaceForm { .. } | Ambient::Ricci { .. } => {
            let comparison = crate::curvature::enlargement_comparison(z.dim(), m, h, ambient, s)?;
            Ok(DistanceReport {
                s,
                m,
                h,
                adjusted_h,
                ambient,
                constructive: false,
                samples: 0,
                verdict: None,
                comparison: Some(comparison),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::fixtures;

    #[test]
    fn probes_are_reproducible() {
        let z = fixtures::sphere(3, 1.0, 500).unwrap();
        let cfg = SearchConfig::new(20, 7);
        for i in 0..20 {
            let a = rebuild_probe(&z, 2, &cfg, i).unwrap();
            let b = rebuild_probe(&z, 2, &cfg, i).unwrap();
            assert_eq!(a.describe(), b.describe());
        }
    }

    #[test]
    fn segment_endpoint_violation() {
        let z = fixtures::segment(1.0, 0.01).unwrap();
        let verdict = probe_search(&z, 1, 0.0, &SearchConfig::new(25, 1)).unwrap();
        let c = verdict.certificate().expect("violation");
        assert!((c.point[0].abs() - 1.0).abs() < 1e-12, "{:?}", c.point);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let z = fixtures::sphere(3, 1.0, 400).unwrap();
        let a = probe_search(&z, 2, 1.5, &SearchConfig::new(30, 3).with_exec(Exec::Sequential)).unwrap();
        let b = probe_search(&z, 2, 1.5, &SearchConfig::new(30, 3).with_exec(Exec::Parallel)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn adjusted_h_per_ambient() {
        assert_eq!(Ambient::Flat.adjusted_h(2, 1.0, 0.5), 1.0);
        assert_eq!(Ambient::SpaceForm { k: 1.0 }.adjusted_h(2, 1.0, 0.5), 0.0);
        assert_eq!(Ambient::Ricci { rho: 2.0 }.adjusted_h(2, 1.0, 0.5), 0.0);
    }

    #[test]
    fn oversized_distance_is_out_of_domain() {
        let z = fixtures::plane_patch(1.0, 0.1).unwrap();
        assert!(matches!(distance_set(&z, 1.0), Err(MhError::OutOfDomain { .. })));
    }
}

use super::function::{Jet, Quadratic, TestFunction};
use super::set::ClosedSet;
use crate::error::{invalid, MhError, Result};
use crate::fields::{metric_norm, MetricField};
use crate::linalg::{self, normalize_by_metric, trace_m, vec as v};
use crate::par::Exec;
use crate::tol;
use serde::Serialize;
use serde_json::Value;
use std::cmp::Ordering;

/// Thresholds used by one predicate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredicateTolerances {
    /// Relative tie tolerance for restricted maxima.
    pub max_rel: f64,
    /// Absolute margin above which a violation is reported.
    pub margin: f64,
    /// Gradient norm below which a maximum counts as critical.
    pub grad: f64,
}

impl PredicateTolerances {
    pub fn for_set(z: &ClosedSet) -> Self {
        PredicateTolerances {
            max_rel: tol::MAX_REL,
            margin: tol::MARGIN / z.length_scale(),
            grad: tol::GRAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedMax {
    pub index: usize,
    pub point: Vec<f64>,
    pub value: f64,
}

/// Lexicographic order on points, used for every tie-break.
pub(crate) fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Values of `f` on every sample of `z`.
pub fn sample_values(f: &TestFunction, z: &ClosedSet, exec: Exec) -> Result<Vec<f64>> {
    if f.dim() != z.dim() {
        return Err(invalid("test function and set differ in dimension"));
    }
    exec.map_slice(z.points(), |p| f.value(p)).into_iter().collect()
}

/// Samples of `z` inside its trust window where `f` is within the tie
/// tolerance of its maximum over the `3·resolution` neighbourhood,
/// ordered by descending value then lexicographically.
pub fn restricted_max(f: &TestFunction, z: &ClosedSet) -> Result<Vec<RestrictedMax>> {
    restricted_max_with(f, z, Exec::default())
}

pub fn restricted_max_with(f: &TestFunction, z: &ClosedSet, exec: Exec) -> Result<Vec<RestrictedMax>> {
    if z.is_empty() {
        return Err(MhError::EmptySet);
    }
    let values = sample_values(f, z, exec)?;
    Ok(maxima_from_values(z, &values, exec))
}

pub(crate) fn maxima_from_values(z: &ClosedSet, values: &[f64], exec: Exec) -> Vec<RestrictedMax> {
    let scale = values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tie = tol::MAX_REL * if scale > 0.0 { scale } else { 1.0 };
    let radius = tol::MAX_NEIGHBOURHOOD * z.resolution();
    let flags = exec.map(z.len(), |i| {
        let p = &z.points()[i];
        z.trusted(p) && z.all_within(p, radius, |j| values[i] >= values[j] - tie)
    });
    let mut out: Vec<RestrictedMax> = flags
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(i, _)| RestrictedMax {
            index: i,
            point: z.points()[i].clone(),
            value: values[i],
        })
        .collect();
    out.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| lex(&a.point, &b.point)));
    out
}

/// `Trace_m(D²f) − h|Df|` at a jet, together with its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginParts {
    pub margin: f64,
    pub trace_m: f64,
    pub grad_norm: f64,
}

pub fn margin_of(jet: &Jet, m: usize, h: f64, metric_at_p: Option<&linalg::SymForm>) -> Result<MarginParts> {
    let (t, g) = match metric_at_p {
        None => (trace_m(&jet.hess, m)?, v::norm(&jet.grad)),
        Some(gp) => (
            trace_m(&normalize_by_metric(&jet.hess, gp)?, m)?,
            metric_norm(gp, &jet.grad)?,
        ),
    };
    Ok(MarginParts {
        margin: t - h * g,
        trace_m: t,
        grad_norm: g,
    })
}

/// Evidence that `z` is not an `(m, h)` set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationCertificate {
    pub set_id: String,
    pub m: usize,
    pub h: f64,
    pub probe: Value,
    pub point: Vec<f64>,
    pub margin: f64,
    pub trace_m: f64,
    pub grad_norm: f64,
    pub tolerances: PredicateTolerances,
}

impl ViolationCertificate {
    /// Recomputes the margin from `f` through a shifted eigenproblem.
    pub fn recheck(&self, f: &TestFunction) -> Result<f64> {
        let jet = f.jet(&self.point)?;
        // a power of two keeps the shift exact in binary arithmetic
        let shift = (jet.hess.frobenius() + 1.0).log2().ceil().exp2();
        let t = linalg::trace_m_of_shifted(&jet.hess, self.m, shift)? - self.m as f64 * shift;
        let g = jet.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(t - self.h * g)
    }
}

/// Outcome of a probe sweep that found nothing.
///
/// Always carries `falsifier_only = true`: no finite probe family can prove
/// that a set satisfies the predicate, so a pass is evidence only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassReport {
    pub set_id: String,
    pub m: usize,
    pub h: f64,
    pub probes: usize,
    pub maxima_checked: usize,
    /// Largest margin seen; `None` when no probe had a trusted maximum.
    pub worst_margin: Option<f64>,
    pub worst_point: Option<Vec<f64>>,
    pub falsifier_only: bool,
    pub tolerances: PredicateTolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Pass(PassReport),
    Violation(ViolationCertificate),
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation(_))
    }
    pub fn certificate(&self) -> Option<&ViolationCertificate> {
        match self {
            Verdict::Violation(c) => Some(c),
            Verdict::Pass(_) => None,
        }
    }
    pub fn pass_report(&self) -> Option<&PassReport> {
        match self {
            Verdict::Pass(p) => Some(p),
            Verdict::Violation(_) => None,
        }
    }
}

pub(crate) fn check_mh(m: usize, h: f64, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    if !(h >= 0.0) || !h.is_finite() {
        return Err(invalid(format!("h must be finite and nonnegative, got {h}")));
    }
    Ok(())
}

/// Margins at every restricted maximum; the best one first.
pub(crate) fn scored_maxima(
    z: &ClosedSet,
    f: &TestFunction,
    m: usize,
    h: f64,
    metric: Option<&MetricField>,
    exec: Exec,
) -> Result<Vec<(RestrictedMax, MarginParts)>> {
    let maxima = restricted_max_with(f, z, exec)?;
    let mut scored = Vec::with_capacity(maxima.len());
    for mx in maxima {
        let jet = f.jet_in(&mx.point, metric)?;
        let gp = match metric {
            Some(g) => Some(g.at(&mx.point)?),
            None => None,
        };
        let parts = margin_of(&jet, m, h, gp.as_ref())?;
        scored.push((mx, parts));
    }
    scored.sort_by(|a, b| {
        b.1.margin
            .total_cmp(&a.1.margin)
            .then_with(|| lex(&a.0.point, &b.0.point))
    });
    Ok(scored)
}

/// Evaluates `Trace_m(D²f(p)) ≤ h|Df(p)|` at every restricted maximum of
/// `f` on `z` and reports the largest violation beyond tolerance.
pub fn mh_test(
    z: &ClosedSet,
    f: &TestFunction,
    m: usize,
    h: f64,
    metric: Option<&MetricField>,
) -> Result<Verdict> {
    check_mh(m, h, z.dim())?;
    let tols = PredicateTolerances::for_set(z);
    let scored = scored_maxima(z, f, m, h, metric, Exec::default())?;
    Ok(match scored.first() {
        Some((mx, parts)) if parts.margin > tols.margin => Verdict::Violation(ViolationCertificate {
            set_id: z.id().to_string(),
            m,
            h,
            probe: f.describe(),
            point: mx.point.clone(),
            margin: parts.margin,
            trace_m: parts.trace_m,
            grad_norm: parts.grad_norm,
            tolerances: tols,
        }),
        best => Verdict::Pass(PassReport {
            set_id: z.id().to_string(),
            m,
            h,
            probes: 1,
            maxima_checked: scored.len(),
            worst_margin: best.map(|b| b.1.margin),
            worst_point: best.map(|b| b.0.point.clone()),
            falsifier_only: true,
            tolerances: tols,
        }),
    })
}

/// A violating probe whose restricted maximum has nonzero gradient.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub function: TestFunction,
    pub certificate: ViolationCertificate,
    pub translation: Vec<f64>,
    /// Weight `ε` of the `−ε|x − p|²` term, when one was needed.
    pub concavified: Option<f64>,
    /// Whether `p` is a strict maximum of the (concavified) probe on `z`.
    pub strict: bool,
    pub tried: usize,
}

/// Whether every other sample within the neighbourhood of `p` has a strictly smaller value.
pub fn is_strict_max(f: &TestFunction, z: &ClosedSet, p: &[f64]) -> Result<bool> {
    let fp = f.value(p)?;
    let radius = tol::MAX_NEIGHBOURHOOD * z.resolution();
    for j in z.within(p, radius) {
        let q = &z.points()[j];
        if v::dist(q, p) > 0.0 && f.value(q)? >= fp {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Moves a critical-point violation to one with nonvanishing gradient.
///
/// If `p` is not a strict maximum, `ε|x − p|²` is subtracted first with
/// `ε = margin/(4m)`, which halves the margin. The probe is then translated,
/// `f'(x) = f(x − q)`, over `q = ±δe_k` with `δ` in
/// `resolution·{1/4, 1/2, 1, 2}`, smallest first, until a restricted maximum
/// near `p` violates with `|Df'| > tol_grad`.
pub fn perturb_to_nonvanishing_gradient(
    f: &TestFunction,
    z: &ClosedSet,
    p: &[f64],
    m: usize,
    h: f64,
) -> Result<Perturbation> {
    check_mh(m, h, z.dim())?;
    let tols = PredicateTolerances::for_set(z);
    let jet = f.jet(p)?;
    let parts = margin_of(&jet, m, h, None)?;
    if parts.margin <= tols.margin {
        return Err(MhError::NotViolating { margin: parts.margin });
    }
    let certify = |g: &TestFunction, at: &[f64], parts: MarginParts| ViolationCertificate {
        set_id: z.id().to_string(),
        m,
        h,
        probe: g.describe(),
        point: at.to_vec(),
        margin: parts.margin,
        trace_m: parts.trace_m,
        grad_norm: parts.grad_norm,
        tolerances: tols,
    };
    if parts.grad_norm > tols.grad {
        return Ok(Perturbation {
            function: f.clone(),
            certificate: certify(f, p, parts),
            translation: vec![0.0; p.len()],
            concavified: None,
            strict: is_strict_max(f, z, p)?,
            tried: 0,
        });
    }
    let (base, eps) = if is_strict_max(f, z, p)? {
        (f.clone(), None)
    } else {
        let eps = parts.margin / (4.0 * m as f64);
        (f.plus_quadratic(&Quadratic::radial(p.to_vec(), -eps))?, Some(eps))
    };
    let strict = is_strict_max(&base, z, p)?;
    let n = p.len();
    let res = z.resolution();
    let mut tried = 0;
    for delta in [0.25, 0.5, 1.0, 2.0].map(|s| s * res) {
        for k in 0..n {
            for sign in [1.0, -1.0] {
                tried += 1;
                let mut q = vec![0.0; n];
                q[k] = sign * delta;
                let g = base.translated(&q)?;
                let reach = tol::MAX_NEIGHBOURHOOD * res + delta;
                let scored = scored_maxima(z, &g, m, h, None, Exec::default())?;
                let hit = scored.into_iter().find(|(mx, parts)| {
                    v::dist(&mx.point, p) <= reach
                        && parts.grad_norm > tols.grad
                        && parts.margin > tols.margin
                });
                if let Some((mx, parts)) = hit {
                    return Ok(Perturbation {
                        certificate: certify(&g, &mx.point, parts),
                        function: g,
                        translation: q,
                        concavified: eps,
                        strict,
                        tried,
                    });
                }
            }
        }
    }
    Err(MhError::SearchExhausted { tried })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymForm;

    fn singleton(n: usize) -> ClosedSet {
        ClosedSet::point_cloud("singleton", vec![vec![0.0; n]], 0.01).unwrap()
    }

    #[test]
    fn singleton_margin_is_exactly_2m() {
        for n in 1..=4 {
            for m in 1..=n {
                let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; n], 1.0));
                let verdict = mh_test(&singleton(n), &f, m, 0.0, None).unwrap();
                let c = verdict.certificate().expect("violation");
                assert_eq!(c.margin, 2.0 * m as f64);
                assert_eq!(c.grad_norm, 0.0);
                assert_eq!(c.recheck(&f).unwrap(), 2.0 * m as f64);
            }
        }
    }

    #[test]
    fn linear_on_circle_has_one_maximum() {
        let pts: Vec<Vec<f64>> = (0..360)
            .map(|i| {
                let t = (i as f64).to_radians();
                vec![t.cos(), t.sin()]
            })
            .collect();
        let z = ClosedSet::point_cloud("circle", pts, 0.02).unwrap();
        let f = TestFunction::quadratic(
            Quadratic::new(vec![0.0; 2], vec![1.0, 0.0], SymForm::zeros(2), 0.0).unwrap(),
        );
        let maxima = restricted_max(&f, &z).unwrap();
        assert_eq!(maxima.len(), 1);
        assert_eq!(maxima[0].point, vec![1.0, 0.0]);
    }

    #[test]
    fn constant_restriction_returns_everything() {
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 100.0;
                vec![2.0 * t.cos(), 2.0 * t.sin()]
            })
            .collect();
        let z = ClosedSet::point_cloud("circle", pts, 0.15).unwrap();
        let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 2], -1.0));
        let maxima = restricted_max(&f, &z).unwrap();
        assert_eq!(maxima.len(), 100);
        assert!(maxima.iter().all(|m| (m.value + 4.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 2], 1.0));
        assert!(mh_test(&singleton(2), &f, 3, 0.0, None).is_err());
        assert!(mh_test(&singleton(2), &f, 1, -1.0, None).is_err());
    }

    #[test]
    fn singleton_translation_gives_gradient_2delta() {
        for m in 1..=3 {
            let z = singleton(3);
            let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 3], 1.0));
            let h = 1.0;
            let out = perturb_to_nonvanishing_gradient(&f, &z, &[0.0; 3], m, h).unwrap();
            let delta = 0.25 * z.resolution();
            assert_eq!(out.translation, vec![delta, 0.0, 0.0]);
            assert_eq!(out.certificate.point, vec![0.0; 3]);
            assert!((out.certificate.grad_norm - 2.0 * delta).abs() < 1e-15);
            assert!((out.certificate.margin - (2.0 * m as f64 - h * 2.0 * delta)).abs() < 1e-12);
            assert!(out.concavified.is_none());
        }
    }

    #[test]
    fn nonzero_gradient_is_a_no_op() {
        let z = singleton(2);
        let f = TestFunction::quadratic(
            Quadratic::new(vec![0.0; 2], vec![0.1, 0.0], SymForm::identity(2), 0.0).unwrap(),
        );
        let out = perturb_to_nonvanishing_gradient(&f, &z, &[0.0, 0.0], 1, 0.0).unwrap();
        assert_eq!(out.tried, 0);
        assert_eq!(out.translation, vec![0.0, 0.0]);
    }

    #[test]
    fn non_violation_is_refused() {
        let z = singleton(2);
        let f = TestFunction::quadratic(Quadratic::radial(vec![0.0; 2], -1.0));
        assert!(matches!(
            perturb_to_nonvanishing_gradient(&f, &z, &[0.0, 0.0], 1, 0.0),
            Err(MhError::NotViolating { .. })
        ));
    }
}

use crate::error::{invalid, MhError, Result};
use crate::linalg::{eigh, SymForm};
use crate::predicate::Ambient;
use crate::tol;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Ambient manifold of constant sectional curvature `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormAmbient {
    pub n: usize,
    pub k: f64,
}

impl SpaceFormAmbient {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if n < 2 || !k.is_finite() {
            return Err(invalid("space form needs n ≥ 2 and finite curvature"));
        }
        Ok(SpaceFormAmbient { n, k })
    }

    pub fn flat(n: usize) -> Self {
        SpaceFormAmbient { n, k: 0.0 }
    }

    /// Ricci lower bound `(n − 1)K`.
    pub fn rho(&self) -> f64 {
        (self.n - 1) as f64 * self.k
    }
}

/// Solution of `κ' = K + κ²` from `κ₀`, or `None` past the blow-up distance.
pub fn riccati_closed_form(kappa0: f64, k: f64, s: f64) -> Option<f64> {
    let out = if k == 0.0 {
        let d = 1.0 - s * kappa0;
        if d <= 0.0 {
            return None;
        }
        kappa0 / d
    } else if k > 0.0 {
        let r = k.sqrt();
        let arg = r * s + (kappa0 / r).atan();
        if arg >= std::f64::consts::FRAC_PI_2 {
            return None;
        }
        r * arg.tan()
    } else {
        let r = (-k).sqrt();
        let q = kappa0 / r;
        if q.abs() < 1.0 {
            -r * (r * s - q.atanh()).tanh()
        } else if q.abs() > 1.0 {
            // κ = −r·coth(rs + c) with coth c = −q
            let c = (-1.0 / q).atanh();
            let arg = r * s + c;
            if c < 0.0 && arg >= 0.0 {
                return None;
            }
            -r / arg.tanh()
        } else {
            kappa0
        }
    };
    out.is_finite().then_some(out)
}

/// Distance at which the closed form blows up, if it does.
pub fn blowup_distance(kappa0: f64, k: f64) -> Option<f64> {
    if k == 0.0 {
        (kappa0 > 0.0).then(|| 1.0 / kappa0)
    } else if k > 0.0 {
        let r = k.sqrt();
        Some((std::f64::consts::FRAC_PI_2 - (kappa0 / r).atan()) / r)
    } else {
        let r = (-k).sqrt();
        let q = kappa0 / r;
        (q > 1.0).then(|| -(-1.0 / q).atanh() / r)
    }
}

/// Second fundamental form propagated to distance `s`, with the
/// eigenvalue trace and the closed-form comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiccatiSolution {
    pub s: f64,
    pub form: SymForm,
    pub eigenvalues: Vec<f64>,
    pub closed_form: Vec<f64>,
    /// Largest relative eigenvalue difference against the closed form.
    pub max_rel_error: f64,
    pub steps: usize,
    /// `(s, κ₁, …, κ_{n−1})` at every step.
    pub trace: Vec<Vec<f64>>,
}

impl RiccatiSolution {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s");
        for i in 1..=self.eigenvalues.len() {
            let _ = write!(out, ",kappa_{i}");
        }
        out.push('\n');
        for row in &self.trace {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn rhs(b: &SymForm, k: f64) -> SymForm {
    b.square().shift(k)
}

fn axpy(b: &SymForm, c: f64, d: &SymForm) -> SymForm {
    let e: Vec<f64> = b.entries().iter().zip(d.entries()).map(|(x, y)| x + c * y).collect();
    SymForm::new(b.dim(), e).expect("same dimension")
}

/// Integrates `B' = K·I + B²` with classical RK4 steps of size
/// `min(10⁻³, s/100)` and cross-checks against the per-eigenvalue closed form.
pub fn riccati_propagate(b0: &SymForm, ambient: &SpaceFormAmbient, s: f64) -> Result<RiccatiSolution> {
    if b0.dim() + 1 != ambient.n {
        return Err(invalid(format!(
            "second fundamental form of dimension {} in an ambient of dimension {}",
            b0.dim(),
            ambient.n
        )));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid("propagation distance must be finite and nonnegative"));
    }
    let k = ambient.k;
    let steps = if s == 0.0 {
        0
    } else {
        (s / tol::RICCATI_MAX_STEP.min(s / 100.0)).ceil() as usize
    };
    let dt = if steps == 0 { 0.0 } else { s / steps as f64 };
    let mut b = b0.clone();
    let mut trace = vec![std::iter::once(0.0).chain(eigh(&b)?.values).collect::<Vec<_>>()];
    for i in 0..steps {
        let k1 = rhs(&b, k);
        let k2 = rhs(&axpy(&b, 0.5 * dt, &k1), k);
        let k3 = rhs(&axpy(&b, 0.5 * dt, &k2), k);
        let k4 = rhs(&axpy(&b, dt, &k3), k);
        let incr: Vec<f64> = (0..b.entries().len())
            .map(|j| {
                dt / 6.0
                    * (k1.entries()[j] + 2.0 * k2.entries()[j] + 2.0 * k3.entries()[j] + k4.entries()[j])
            })
            .collect();
        b = axpy(&b, 1.0, &SymForm::new(b.dim(), incr)?);
        let at = (i + 1) as f64 * dt;
        let big = b.entries().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(big <= tol::BLOWUP_CURVATURE) {
            return Err(MhError::CurvatureBlowup { at });
        }
        trace.push(std::iter::once(at).chain(eigh(&b)?.values).collect());
    }
    let e0 = eigh(b0)?;
    let mut closed = Vec::with_capacity(e0.values.len());
    for &kappa0 in &e0.values {
        match riccati_closed_form(kappa0, k, s) {
            Some(x) => closed.push(x),
            None => {
                return Err(MhError::CurvatureBlowup {
                    at: blowup_distance(kappa0, k).unwrap_or(s),
                })
            }
        }
    }
    closed.sort_by(f64::total_cmp);
    let eigenvalues = eigh(&b)?.values;
    let max_rel_error = eigenvalues
        .iter()
        .zip(&closed)
        .map(|(a, c)| (a - c).abs() / c.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(RiccatiSolution {
        s,
        form: b,
        eigenvalues,
        closed_form: closed,
        max_rel_error,
        steps,
        trace,
    })
}

/// Subtracts `ε = 10⁻³/scale` from every principal curvature, the strict
/// containment used in place of smoothing near a cut locus.
pub fn shrink_for_cut_locus(b: &SymForm, scale: f64) -> SymForm {
    b.shift(-tol::CUT_LOCUS_SHRINK / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inequality {
    pub holds: bool,
    /// Smallest `lhs − rhs`; nonnegative when the inequality holds.
    pub slack: f64,
}

/// The three tube comparisons between points `p` and `q` at distance `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub d: f64,
    pub m: usize,
    pub k: f64,
    /// `κ_i(q) ≥ κ_i(p) + K d` for every `i`.
    pub per_eigenvalue: Inequality,
    /// `H_m(q) ≥ H_m(p) + mK d`.
    pub trace_m: Inequality,
    /// `tr B(q) ≥ tr B(p) + ρ d`.
    pub full_trace: Inequality,
    pub holds: bool,
}

fn inequality(slack: f64, scale: f64) -> Inequality {
    Inequality {
        holds: slack >= -1e-12 * scale.max(1.0),
        slack,
    }
}

pub fn comparison_check(
    b_p: &SymForm,
    b_q: &SymForm,
    ambient: &SpaceFormAmbient,
    d: f64,
    m: usize,
) -> Result<ComparisonReport> {
    if b_p.dim() != b_q.dim() || b_p.dim() + 1 != ambient.n {
        return Err(invalid("comparison forms must share the tangent dimension n − 1"));
    }
    if !(d > 0.0) {
        return Err(invalid("comparison distance must be positive"));
    }
    if m == 0 || m > b_p.dim() {
        return Err(invalid(format!("m = {m} must lie in 1..={}", b_p.dim())));
    }
    let kp = eigh(b_p)?.values;
    let kq = eigh(b_q)?.values;
    let k = ambient.k;
    let scale = kp.iter().chain(&kq).fold(0.0f64, |a, x| a.max(x.abs()));
    let per = kp
        .iter()
        .zip(&kq)
        .map(|(p, q)| q - p - k * d)
        .fold(f64::INFINITY, f64::min);
    let hm = |x: &[f64]| x[..m].iter().sum::<f64>();
    let tm = hm(&kq) - hm(&kp) - m as f64 * k * d;
    let full = kq.iter().sum::<f64>() - kp.iter().sum::<f64>() - ambient.rho() * d;
    let per_eigenvalue = inequality(per, scale);
    let trace_m = inequality(tm, scale * m as f64);
    let full_trace = inequality(full, scale * kp.len() as f64);
    Ok(ComparisonReport {
        d,
        m,
        k,
        holds: per_eigenvalue.holds && trace_m.holds && full_trace.holds,
        per_eigenvalue,
        trace_m,
        full_trace,
    })
}

/// Tube comparison behind the curved distance-set statement: the borderline
/// form `(h/m)·I` is propagated a distance `s` in the space form (the Ricci
/// case uses `K = ρ/(n − 1)`) and compared with its start.
pub fn enlargement_comparison(n: usize, m: usize, h: f64, ambient: Ambient, s: f64) -> Result<ComparisonReport> {
    if m >= n {
        return Err(invalid("tube comparison needs m < n"));
    }
    let k = match ambient {
        Ambient::Flat => 0.0,
        Ambient::SpaceForm { k } => k,
        Ambient::Ricci { rho } => rho / (n - 1) as f64,
    };
    let space = SpaceFormAmbient::new(n, k)?;
    let mut b0 = SymForm::scaled_identity(n - 1, h / m as f64);
    if let Some(star) = blowup_distance(h / m as f64, k) {
        if s >= star {
            return Err(MhError::CurvatureBlowup { at: star });
        }
        if s > star * (1.0 - tol::CUT_LOCUS_SHRINK) {
            b0 = shrink_for_cut_locus(&b0, star);
        }
    }
    let sol = riccati_propagate(&b0, &space, s)?;
    comparison_check(&b0, &sol.form, &space, s, m)
}

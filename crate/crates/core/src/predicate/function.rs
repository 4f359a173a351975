use crate::error::{invalid, Result};
use crate::fields::{ExpBarrier, MetricField, ScalarField};
use crate::linalg::{vec as v, SymForm};
use serde_json::{json, Value};
use std::sync::Arc;

/// Value, gradient and Hessian at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: SymForm,
}

/// `c + b·y + ½ yᵀAy` with `y = x − center`. Evaluates exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub linear: Vec<f64>,
    pub matrix: SymForm,
    pub constant: f64,
}

impl Quadratic {
    pub fn new(center: Vec<f64>, linear: Vec<f64>, matrix: SymForm, constant: f64) -> Result<Self> {
        let n = center.len();
        if linear.len() != n || matrix.dim() != n {
            return Err(invalid("quadratic parts disagree in dimension"));
        }
        if !matrix.is_finite() || center.iter().chain(&linear).any(|x| !x.is_finite()) {
            return Err(invalid("quadratic coefficients must be finite"));
        }
        Ok(Quadratic { center, linear, matrix, constant })
    }

    /// `s|x − c|²`.
    pub fn radial(center: Vec<f64>, s: f64) -> Self {
        let n = center.len();
        Quadratic {
            linear: vec![0.0; n],
            matrix: SymForm::scaled_identity(n, 2.0 * s),
            center,
            constant: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let y = v::sub(x, &self.center);
        let ay = self.matrix.matvec(&y);
        Jet {
            value: self.constant + v::dot(&self.linear, &y) + 0.5 * v::dot(&y, &ay),
            grad: v::add(&self.linear, &ay),
            hess: self.matrix.clone(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let y = v::sub(x, &self.center);
        self.constant + v::dot(&self.linear, &y) + 0.5 * self.matrix.pair(&y, &y)
    }

    fn describe(&self) -> Value {
        let n = self.dim();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.matrix.get(i, j)).collect())
            .collect();
        json!({
            "center": self.center,
            "linear": self.linear,
            "matrix": rows,
            "constant": self.constant,
        })
    }
}

#[derive(Debug, Clone)]
pub enum ProbeKind {
    Quadratic(Quadratic),
    ExpBarrier(ExpBarrier),
    Gridded(Arc<ScalarField>),
}

/// A C² test function `f(x) = scale·base(x − shift) + extra(x)`.
///
/// `extra` holds the quadratic corrections added by normalization
/// (proper tail, concavification). With the proper-tail flag set, the
/// super-level sets of `f` are compact.
#[derive(Debug, Clone)]
pub struct TestFunction {
    kind: ProbeKind,
    scale: f64,
    shift: Option<Vec<f64>>,
    extra: Option<Quadratic>,
    proper_tail: bool,
    label: String,
}

impl TestFunction {
    pub fn quadratic(q: Quadratic) -> Self {
        Self::wrap(ProbeKind::Quadratic(q), "quadratic")
    }

    pub fn exp_barrier(b: ExpBarrier) -> Self {
        Self::wrap(ProbeKind::ExpBarrier(b), "exp-barrier")
    }

    pub fn gridded(f: Arc<ScalarField>) -> Self {
        Self::wrap(ProbeKind::Gridded(f), "gridded")
    }

    fn wrap(kind: ProbeKind, label: &str) -> Self {
        TestFunction {
            kind,
            scale: 1.0,
            shift: None,
            extra: None,
            proper_tail: false,
            label: label.to_string(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &ProbeKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ProbeKind::Quadratic(q) => q.dim(),
            ProbeKind::ExpBarrier(b) => b.dim(),
            ProbeKind::Gridded(f) => f.grid().dim(),
        }
    }

    pub fn has_proper_tail(&self) -> bool {
        self.proper_tail
    }

    /// Whether every evaluation is exact arithmetic on closed forms.
    pub fn is_exact(&self) -> bool {
        match &self.kind {
            ProbeKind::Quadratic(_) => true,
            ProbeKind::ExpBarrier(b) => b.source().describe().starts_with("analytic"),
            ProbeKind::Gridded(_) => false,
        }
    }

    /// `c·f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(invalid("probe scale must be positive"));
        }
        let mut out = self.clone();
        out.scale *= c;
        if let Some(e) = &mut out.extra {
            e.matrix = e.matrix.scale(c);
            e.linear = v::scale(&e.linear, c);
            e.constant *= c;
        }
        Ok(out)
    }

    /// `x ↦ f(x − q)`.
    pub fn translated(&self, q: &[f64]) -> Result<Self> {
        if q.len() != self.dim() {
            return Err(invalid("translation dimension mismatch"));
        }
        let mut out = self.clone();
        let s = match &self.shift {
            Some(s) => v::add(s, q),
            None => q.to_vec(),
        };
        out.shift = Some(s);
        if let Some(e) = &mut out.extra {
            e.center = v::add(&e.center, q);
        }
        Ok(out)
    }

    /// `f + q`.
    pub fn plus_quadratic(&self, q: &Quadratic) -> Result<Self> {
        if q.dim() != self.dim() {
            return Err(invalid("added quadratic dimension mismatch"));
        }
        let mut out = self.clone();
        out.extra = Some(match &self.extra {
            None => q.clone(),
            Some(e) => {
                // re-center q at e's center so the two merge into one quadratic
                let jq = q.jet(&e.center);
                Quadratic {
                    center: e.center.clone(),
                    linear: v::add(&e.linear, &jq.grad),
                    matrix: e.matrix.add(&q.matrix)?,
                    constant: e.constant + jq.value,
                }
            }
        });
        Ok(out)
    }

    /// Adds `−τ|x − c|²` so that super-level sets are bounded.
    pub fn with_proper_tail(&self, center: &[f64], tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(invalid("tail weight must be positive"));
        }
        let mut out = self.plus_quadratic(&Quadratic::radial(center.to_vec(), -tau))?;
        out.proper_tail = true;
        Ok(out)
    }

    fn base_point(&self, x: &[f64]) -> Vec<f64> {
        match &self.shift {
            Some(s) => v::sub(x, s),
            None => x.to_vec(),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let y = self.base_point(x);
        let base = match &self.kind {
            ProbeKind::Quadratic(q) => q.value(&y),
            ProbeKind::ExpBarrier(b) => b.value(&y)?,
            ProbeKind::Gridded(f) => f.value(&y)?,
        };
        let extra = self.extra.as_ref().map_or(0.0, |e| e.value(x));
        Ok(self.scale * base + extra)
    }

    /// Flat-space jet.
    pub fn jet(&self, x: &[f64]) -> Result<Jet> {
        self.jet_in(x, None)
    }

    /// Jet with the covariant Hessian of `metric` when given.
    pub fn jet_in(&self, x: &[f64], metric: Option<&MetricField>) -> Result<Jet> {
        let y = self.base_point(x);
        let mut jet = match &self.kind {
            ProbeKind::Quadratic(q) => q.jet(&y),
            ProbeKind::ExpBarrier(b) => Jet {
                value: b.value(&y)?,
                grad: b.gradient(&y)?,
                hess: b.hessian(&y)?,
            },
            ProbeKind::Gridded(f) => Jet {
                value: f.value(&y)?,
                grad: f.gradient(&y)?,
                hess: f.hessian_flat(&y)?,
            },
        };
        if self.scale != 1.0 {
            jet.value *= self.scale;
            jet.grad = v::scale(&jet.grad, self.scale);
            jet.hess = jet.hess.scale(self.scale);
        }
        if let Some(e) = &self.extra {
            let je = e.jet(x);
            jet.value += je.value;
            jet.grad = v::add(&jet.grad, &je.grad);
            jet.hess = jet.hess.add(&je.hess)?;
        }
        if let Some(g) = metric {
            let n = jet.grad.len();
            let gamma = g.christoffel_at(x)?;
            let mut h = jet.hess.clone();
            for a in 0..n {
                for b in 0..n {
                    let corr: f64 = (0..n).map(|k| gamma[k][a * n + b] * jet.grad[k]).sum();
                    h.set(a, b, jet.hess.get(a, b) - corr);
                }
            }
            jet.hess = h;
        }
        Ok(jet)
    }

    /// JSON description for certificates.
    pub fn describe(&self) -> Value {
        let base = match &self.kind {
            ProbeKind::Quadratic(q) => json!({"kind": "quadratic", "quadratic": q.describe()}),
            ProbeKind::ExpBarrier(b) => json!({
                "kind": "exp-barrier",
                "alpha": b.alpha(),
                "source": b.source().describe(),
            }),
            ProbeKind::Gridded(f) => json!({
                "kind": "gridded",
                "counts": f.grid().counts(),
                "lower": f.grid().lower(),
                "upper": f.grid().upper(),
            }),
        };
        json!({
            "label": self.label,
            "base": base,
            "scale": self.scale,
            "shift": self.shift,
            "extra": self.extra.as_ref().map(|e| e.describe()),
            "proper_tail": self.proper_tail,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{LevelSet, Shape};

    #[test]
    fn quadratic_jet_is_exact() {
        let a = SymForm::from_rows(&[vec![2.0, 1.0], vec![1.0, -4.0]]).unwrap();
        let q = Quadratic::new(vec![1.0, 0.0], vec![0.5, -1.0], a, 3.0).unwrap();
        let j = q.jet(&[2.0, 1.0]);
        // y = (1,1): c + b·y + ½yᵀAy = 3 − 0.5 + ½(2 + 2 − 4)
        assert_eq!(j.value, 2.5);
        assert_eq!(j.grad, vec![3.5, -4.0]);
    }

    #[test]
    fn scaling_translation_and_extras_compose() {
        let f = TestFunction::quadratic(Quadratic::radial(vec![0.0, 0.0], 1.0))
            .with_proper_tail(&[0.0, 0.0], 0.25)
            .unwrap();
        let g = f.scaled(2.0).unwrap().translated(&[1.0, 0.0]).unwrap();
        let x = [1.5, 2.0];
        let direct = 2.0 * (0.25 + 4.0) - 2.0 * 0.25 * (0.25 + 4.0);
        assert!((g.value(&x).unwrap() - direct).abs() < 1e-14);
        let j = g.jet(&x).unwrap();
        assert!((j.value - direct).abs() < 1e-14);
        assert!((j.hess.get(0, 0) - (4.0 - 1.0)).abs() < 1e-14);
        assert!(g.has_proper_tail());
    }

    #[test]
    fn merged_extras_match_sum() {
        let base = TestFunction::quadratic(Quadratic::radial(vec![0.0; 2], 0.0));
        let q1 = Quadratic::radial(vec![1.0, 0.0], 1.0);
        let q2 = Quadratic::radial(vec![0.0, 2.0], -0.5);
        let f = base.plus_quadratic(&q1).unwrap().plus_quadratic(&q2).unwrap();
        let x = [0.3, -0.7];
        let want = q1.value(&x) + q2.value(&x);
        assert!((f.value(&x).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn barrier_kind_delegates() {
        let s: Arc<dyn LevelSet> = Arc::new(Shape::sphere(vec![0.0; 3], 1.0));
        let f = TestFunction::exp_barrier(ExpBarrier::new(s, 10.0).unwrap());
        let j = f.jet(&[1.0, 0.0, 0.0]).unwrap();
        assert!((j.value - 1.0).abs() < 1e-15);
        assert!((j.grad[0] - 10.0).abs() < 1e-12);
        assert!(f.is_exact());
        assert_eq!(f.describe()["base"]["kind"], "exp-barrier");
    }
}

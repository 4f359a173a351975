use super::{tangential_curvatures, LevelSet};
use crate::error::{invalid, Result};
use crate::linalg::{vec as v, SymForm};
use std::sync::Arc;

/// `f = e^{αu}` for a level-set function `u`.
///
/// Derivatives are composed from those of `u`:
/// `Df = α e^{αu} Du` and `D²f = α² e^{αu} Du Duᵀ + α e^{αu} D²u`,
/// so no differencing of `f` itself ever happens.
#[derive(Debug, Clone)]
pub struct ExpBarrier {
    source: Arc<dyn LevelSet>,
    alpha: f64,
}

impl ExpBarrier {
    pub fn new(source: Arc<dyn LevelSet>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid(format!("barrier exponent must be positive, got {alpha}")));
        }
        Ok(ExpBarrier { source, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn source(&self) -> &Arc<dyn LevelSet> {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        Ok((self.alpha * self.source.value(p)?).exp())
    }

    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        let e = (self.alpha * self.source.value(p)?).exp();
        Ok(v::scale(&self.source.gradient(p)?, self.alpha * e))
    }

    pub fn hessian(&self, p: &[f64]) -> Result<SymForm> {
        let e = (self.alpha * self.source.value(p)?).exp();
        let du = self.source.gradient(p)?;
        let d2u = self.source.hessian(p)?;
        SymForm::outer(&du)
            .scale(self.alpha * self.alpha * e)
            .add(&d2u.scale(self.alpha * e))
    }

    /// Checks `α > max |κ_i|` for the level set of `u` through `p`, the
    /// condition under which `α²e^{αu}` is the top eigenvalue of `D²f`.
    pub fn validate_at(&self, p: &[f64]) -> Result<f64> {
        let (k, _, _) = tangential_curvatures(&self.source.gradient(p)?, &self.source.hessian(p)?)?;
        let kmax = k.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if self.alpha <= kmax {
            return Err(invalid(format!(
                "barrier exponent {} does not exceed max |κ| = {kmax}",
                self.alpha
            )));
        }
        Ok(kmax)
    }
}

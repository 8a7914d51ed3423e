//! Equally-weighted two-component Gaussian mixture benchmark target.

use nalgebra::DVector;

use crate::error::CoreError;
use crate::numeric::{log_add_exp, LN_2PI};
use crate::state::State;
use crate::target::{Space, TargetModel};

/// Mixture `0.5 N(m1, s1^2 I) + 0.5 N(m2, s2^2 I)`.
///
/// The benchmark constructor places the means at -(1,..,1) and (1,..,1)
/// with variances `s1^2 = 0.5 sqrt(d/100)` and `s2^2 = sqrt(d/100)`; the
/// unequal widths are what makes plain tempering degrade with dimension.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    pub mean1: DVector<f64>,
    pub mean2: DVector<f64>,
    pub var1: f64,
    pub var2: f64,
}

impl GaussianMixture {
    pub fn new(
        mean1: DVector<f64>,
        mean2: DVector<f64>,
        var1: f64,
        var2: f64,
    ) -> Result<Self, CoreError> {
        if mean1.len() != mean2.len() {
            return Err(CoreError::DimensionMismatch {
                expected: mean1.len(),
                got: mean2.len(),
            });
        }
        if var1 <= 0.0 || var2 <= 0.0 {
            return Err(CoreError::invalid("mixture variances must be positive"));
        }
        if mean1 == mean2 {
            return Err(CoreError::invalid("mixture means must differ"));
        }
        Ok(GaussianMixture {
            mean1,
            mean2,
            var1,
            var2,
        })
    }

    /// The unequal-variance benchmark target at dimension `d`.
    pub fn benchmark(d: usize) -> Self {
        let scale = (d as f64 / 100.0).sqrt();
        GaussianMixture {
            mean1: DVector::from_element(d, -1.0),
            mean2: DVector::from_element(d, 1.0),
            var1: 0.5 * scale,
            var2: scale,
        }
    }

    pub fn dimension(&self) -> usize {
        self.mean1.len()
    }

    fn component_log_densities(&self, x: &DVector<f64>) -> (f64, f64) {
        let d = self.dimension() as f64;
        let q1 = (x - &self.mean1).norm_squared() / self.var1;
        let q2 = (x - &self.mean2).norm_squared() / self.var2;
        let l1 = -0.5 * (d * (LN_2PI + self.var1.ln()) + q1);
        let l2 = -0.5 * (d * (LN_2PI + self.var2.ln()) + q2);
        (l1, l2)
    }

    pub fn log_density_at(&self, x: &DVector<f64>) -> f64 {
        let (l1, l2) = self.component_log_densities(x);
        log_add_exp(l1, l2) - std::f64::consts::LN_2
    }

    /// Gradient: responsibility-weighted sum of component gradients.
    pub fn gradient_at(&self, x: &DVector<f64>) -> DVector<f64> {
        let (l1, l2) = self.component_log_densities(x);
        let lse = log_add_exp(l1, l2);
        let r1 = (l1 - lse).exp();
        let r2 = (l2 - lse).exp();
        (&self.mean1 - x) * (r1 / self.var1) + (&self.mean2 - x) * (r2 / self.var2)
    }
}

impl TargetModel for GaussianMixture {
    fn space(&self) -> Space {
        Space::Continuous {
            dimension: self.dimension(),
        }
    }

    fn log_density(&self, x: &State) -> f64 {
        match x.as_continuous() {
            Some(v) if v.len() == self.dimension() => self.log_density_at(v),
            _ => f64::NEG_INFINITY,
        }
    }

    fn gradient(&self, x: &State) -> Option<DVector<f64>> {
        x.as_continuous().map(|v| self.gradient_at(v))
    }
}

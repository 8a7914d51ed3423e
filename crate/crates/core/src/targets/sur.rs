//! Seemingly-unrelated regression: profile log-likelihood and the
//! iterative generalized least-squares estimator.
//!
//! The model is a system of M linear regressions whose error vectors are
//! correlated across equations with covariance `Sigma (x) I_n`. Profiling
//! out `Sigma` at its maximum-likelihood value `Sigma_hat(beta) =
//! E(beta)' E(beta) / n` leaves
//!
//! ```text
//! l(beta) = -n log(2 pi) - (n/2) log |Sigma_hat(beta)| - n
//! ```
//!
//! which in the bivariate case can have up to five stationary points and
//! as many as three local maxima, making it a genuinely multimodal target
//! despite its innocuous appearance.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::numeric::LN_2PI;
use crate::state::State;
use crate::target::{Space, TargetModel};

/// Observed responses and designs for an M-equation system sharing one
/// sample size n.
#[derive(Debug, Clone)]
pub struct SurData {
    pub responses: Vec<DVector<f64>>,
    pub designs: Vec<DMatrix<f64>>,
}

impl SurData {
    pub fn new(responses: Vec<DVector<f64>>, designs: Vec<DMatrix<f64>>) -> Result<Self, CoreError> {
        if responses.len() != designs.len() || responses.is_empty() {
            return Err(CoreError::invalid("responses and designs must pair up"));
        }
        let n = responses[0].len();
        for (y, x) in responses.iter().zip(designs.iter()) {
            if y.len() != n || x.nrows() != n {
                return Err(CoreError::DimensionMismatch {
                    expected: n,
                    got: y.len().min(x.nrows()),
                });
            }
        }
        Ok(SurData { responses, designs })
    }

    pub fn n_equations(&self) -> usize {
        self.responses.len()
    }

    pub fn n_obs(&self) -> usize {
        self.responses[0].len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.designs.iter().map(|x| x.ncols()).sum()
    }

    /// Residual matrix E(beta), one column per equation.
    pub fn residuals(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n_obs();
        let m = self.n_equations();
        let mut e = DMatrix::zeros(n, m);
        let mut cursor = 0;
        for (j, (y, x)) in self.responses.iter().zip(self.designs.iter()).enumerate() {
            let k = x.ncols();
            let b = beta.rows(cursor, k);
            e.set_column(j, &(y - x * b));
            cursor += k;
        }
        e
    }

    /// Maximum-likelihood residual covariance `E'E / n`.
    pub fn residual_covariance(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let e = self.residuals(beta);
        e.transpose() * &e / self.n_obs() as f64
    }
}

/// Profile log-likelihood `l(beta)`; errors if the residual covariance is
/// singular (degenerate perfect-fit configurations).
pub fn profile_log_likelihood(beta: &DVector<f64>, data: &SurData) -> Result<f64, CoreError> {
    if beta.len() != data.n_coeffs() {
        return Err(CoreError::DimensionMismatch {
            expected: data.n_coeffs(),
            got: beta.len(),
        });
    }
    let n = data.n_obs() as f64;
    let sigma = data.residual_covariance(beta);
    let det = sigma.determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(CoreError::SingularMatrix {
            context: "residual covariance in profile log-likelihood",
        });
    }
    Ok(-n * LN_2PI - 0.5 * n * det.ln() - n)
}

/// Analytic gradient of the profile log-likelihood:
/// `d l / d beta_m = X_m' E Sigma_hat^{-1} e_m-column-weights`.
pub fn profile_gradient(beta: &DVector<f64>, data: &SurData) -> Result<DVector<f64>, CoreError> {
    let e = data.residuals(beta);
    let n = data.n_obs() as f64;
    let sigma = e.transpose() * &e / n;
    let sigma_inv = sigma.clone().try_inverse().ok_or(CoreError::SingularMatrix {
        context: "residual covariance in profile gradient",
    })?;
    // E * Sigma^{-1}: column m holds sum_k S_{mk} e_k.
    let es = &e * &sigma_inv;
    let mut grad = DVector::zeros(beta.len());
    let mut cursor = 0;
    for (m, x) in data.designs.iter().enumerate() {
        let k = x.ncols();
        let gm = x.transpose() * es.column(m);
        grad.rows_mut(cursor, k).copy_from(&gm);
        cursor += k;
    }
    Ok(grad)
}

/// Result of the iterative GLS fit.
#[derive(Debug, Clone)]
pub struct ZellnerFit {
    pub beta: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub iterations: usize,
    /// False when `max_iter` ran out before the max-norm change fell
    /// below tolerance; a reported outcome, not an error, since the
    /// iteration is only guaranteed to converge for log-concave systems.
    pub converged: bool,
}

/// Zellner's iterative feasible GLS: alternate the GLS update of beta
/// given `Sigma_hat` with the moment update of `Sigma_hat` given beta.
/// `Sigma_hat` starts at the identity, so the first beta update is
/// equation-wise OLS whenever the designs coincide.
pub fn zellner_igls(data: &SurData, tol: f64, max_iter: usize) -> Result<ZellnerFit, CoreError> {
    for x in &data.designs {
        let xtx = x.transpose() * x;
        if xtx.cholesky().is_none() {
            return Err(CoreError::RankDeficient);
        }
    }
    let m = data.n_equations();
    let mut sigma = DMatrix::identity(m, m);
    let mut beta = DVector::zeros(data.n_coeffs());
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let next = gls_update(data, &sigma)?;
        let delta = (&next - &beta).amax();
        beta = next;
        sigma = data.residual_covariance(&beta);
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(ZellnerFit {
        beta,
        sigma,
        iterations,
        converged,
    })
}

/// One GLS solve of the stacked system given the error covariance.
fn gls_update(data: &SurData, sigma: &DMatrix<f64>) -> Result<DVector<f64>, CoreError> {
    let sigma_inv = sigma.clone().try_inverse().ok_or(CoreError::SingularMatrix {
        context: "error covariance in GLS step",
    })?;
    let p = data.n_coeffs();
    let m = data.n_equations();
    let mut lhs = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    let col_offsets: Vec<usize> = data
        .designs
        .iter()
        .scan(0usize, |acc, x| {
            let off = *acc;
            *acc += x.ncols();
            Some(off)
        })
        .collect();
    for i in 0..m {
        let xi = &data.designs[i];
        let ki = xi.ncols();
        for j in 0..m {
            let xj = &data.designs[j];
            let kj = xj.ncols();
            let s_ij = sigma_inv[(i, j)];
            let block = xi.transpose() * xj * s_ij;
            lhs.view_mut((col_offsets[i], col_offsets[j]), (ki, kj))
                .copy_from(&block);
            let vec_part = xi.transpose() * &data.responses[j] * s_ij;
            let mut r = rhs.rows_mut(col_offsets[i], ki);
            r += vec_part;
        }
    }
    lhs.lu()
        .solve(&rhs)
        .ok_or(CoreError::SingularMatrix { context: "GLS normal equations" })
}

/// The profile log-likelihood as a sampler target over beta.
///
/// Singular residual covariances map to `-inf`, so samplers treat the
/// degenerate set as out of support.
#[derive(Debug, Clone)]
pub struct SurProfileTarget {
    pub data: SurData,
}

impl SurProfileTarget {
    pub fn new(data: SurData) -> Self {
        SurProfileTarget { data }
    }
}

impl TargetModel for SurProfileTarget {
    fn space(&self) -> Space {
        Space::Continuous {
            dimension: self.data.n_coeffs(),
        }
    }

    fn log_density(&self, x: &State) -> f64 {
        match x.as_continuous() {
            Some(beta) if beta.len() == self.data.n_coeffs() => {
                profile_log_likelihood(beta, &self.data).unwrap_or(f64::NEG_INFINITY)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn gradient(&self, x: &State) -> Option<DVector<f64>> {
        let beta = x.as_continuous()?;
        profile_gradient(beta, &self.data).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn draw(n: usize, rng: &mut RngStream) -> DVector<f64> {
        DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
    }

    fn random_data(n: usize, seed: u64) -> SurData {
        let mut rng = RngStream::new(seed, 0);
        let x1 = DMatrix::from_column_slice(n, 1, draw(n, &mut rng).as_slice());
        let x2 = DMatrix::from_column_slice(n, 1, draw(n, &mut rng).as_slice());
        let e1 = draw(n, &mut rng);
        let e2 = &e1 * 0.8 + draw(n, &mut rng) * 0.6;
        let y1 = &x1 * DVector::from_column_slice(&[1.5]) + e1 * 0.5;
        let y2 = &x2 * DVector::from_column_slice(&[-0.7]) + e2 * 0.5;
        SurData::new(vec![y1, y2], vec![x1, x2]).unwrap()
    }

    #[test]
    fn unit_determinant_value() {
        // Any beta with |Sigma_hat| = 1 and n = 10 gives
        // l = -10 log(2 pi) - 10. Construct orthonormal residuals scaled
        // so the covariance is exactly the identity.
        let n = 10;
        let mut y1 = DVector::zeros(n);
        let mut y2 = DVector::zeros(n);
        y1[0] = (n as f64).sqrt();
        y2[1] = (n as f64).sqrt();
        let x = DMatrix::zeros(n, 1);
        // Zero designs are rank-deficient for fitting but fine for a
        // direct likelihood evaluation at beta = 0.
        let data = SurData::new(vec![y1, y2], vec![x.clone(), x]).unwrap();
        let l = profile_log_likelihood(&DVector::zeros(2), &data).unwrap();
        assert_relative_eq!(l, -10.0 * LN_2PI - 10.0, epsilon = 1e-10);
        assert_relative_eq!(l, -28.3788, epsilon = 1e-3);
    }

    #[test]
    fn likelihood_depends_on_beta_only_through_determinant() {
        let data = random_data(12, 3);
        let b1 = DVector::from_column_slice(&[0.4, -0.2]);
        let l1 = profile_log_likelihood(&b1, &data).unwrap();
        let det1 = data.residual_covariance(&b1).determinant();
        let expect = -(12.0) * LN_2PI - 0.5 * 12.0 * det1.ln() - 12.0;
        assert_relative_eq!(l1, expect, epsilon = 1e-10);
    }

    #[test]
    fn equation_relabeling_symmetry() {
        let data = random_data(15, 7);
        let swapped = SurData::new(
            vec![data.responses[1].clone(), data.responses[0].clone()],
            vec![data.designs[1].clone(), data.designs[0].clone()],
        )
        .unwrap();
        let beta = DVector::from_column_slice(&[0.3, 1.1]);
        let beta_swapped = DVector::from_column_slice(&[1.1, 0.3]);
        assert_relative_eq!(
            profile_log_likelihood(&beta, &data).unwrap(),
            profile_log_likelihood(&beta_swapped, &swapped).unwrap(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = random_data(20, 11);
        let mut rng = RngStream::new(13, 0);
        for _ in 0..100 {
            let beta = draw(2, &mut rng) * 2.0;
            let g = profile_gradient(&beta, &data).unwrap();
            let h = 1e-6;
            let mut fd = DVector::zeros(2);
            for i in 0..2 {
                let mut bp = beta.clone();
                bp[i] += h;
                let mut bm = beta.clone();
                bm[i] -= h;
                fd[i] = (profile_log_likelihood(&bp, &data).unwrap()
                    - profile_log_likelihood(&bm, &data).unwrap())
                    / (2.0 * h);
            }
            let denom = g.norm().max(1e-8);
            assert!((&g - &fd).norm() / denom < 1e-4, "g={g} fd={fd}");
        }
    }

    #[test]
    fn identical_designs_first_update_is_ols() {
        let mut rng = RngStream::new(21, 0);
        let n = 30;
        let x = DMatrix::from_column_slice(n, 1, draw(n, &mut rng).as_slice());
        let y1 = &x * DVector::from_column_slice(&[2.0]) + draw(n, &mut rng);
        let y2 = &x * DVector::from_column_slice(&[-1.0]) + draw(n, &mut rng);
        let data = SurData::new(vec![y1.clone(), y2.clone()], vec![x.clone(), x.clone()]).unwrap();
        let first = gls_update(&data, &DMatrix::identity(2, 2)).unwrap();
        let xtx = (x.transpose() * &x)[(0, 0)];
        let ols1 = (x.transpose() * &y1)[(0, 0)] / xtx;
        let ols2 = (x.transpose() * &y2)[(0, 0)] / xtx;
        assert_relative_eq!(first[0], ols1, epsilon = 1e-10);
        assert_relative_eq!(first[1], ols2, epsilon = 1e-10);
    }

    #[test]
    fn igls_converges_to_stationary_point_on_unimodal_data() {
        let data = random_data(40, 17);
        let fit = zellner_igls(&data, 1e-10, 500).unwrap();
        assert!(fit.converged, "IGLS did not converge");
        let g = profile_gradient(&fit.beta, &data).unwrap();
        assert!(g.norm() < 1e-6, "gradient at fit: {g}");
    }

    #[test]
    fn rank_deficient_design_is_an_error() {
        let n = 10;
        let x = DMatrix::zeros(n, 1);
        let y = DVector::from_element(n, 1.0);
        let data = SurData::new(vec![y.clone(), y], vec![x.clone(), x]).unwrap();
        assert!(matches!(
            zellner_igls(&data, 1e-8, 100),
            Err(CoreError::RankDeficient)
        ));
    }
}

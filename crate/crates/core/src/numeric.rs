//! Shared numerical helpers: stable log-space reductions, multivariate
//! Gaussian / Student-t log-densities, and SPD matrix utilities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::CoreError;
use crate::rng::RngStream;

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// log(exp(a) + exp(b)) without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// log(sum_i exp(xs[i])) without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalize log-weights into probabilities summing to one.
pub fn normalized_exp(log_weights: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(log_weights);
    log_weights.iter().map(|&lw| (lw - z).exp()).collect()
}

/// Cholesky factorization with escalating diagonal jitter.
///
/// Running covariance estimates can be numerically semidefinite early in a
/// run; jitter starting at `1e-10 * I` restores definiteness without
/// visibly perturbing the proposal.
pub fn cholesky_with_jitter(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>, CoreError> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol);
    }
    let n = m.nrows();
    let scale = m.diagonal().amax().max(1.0);
    let mut jitter = 1e-10;
    for _ in 0..8 {
        let jittered = m + DMatrix::identity(n, n) * (jitter * scale);
        if let Some(chol) = Cholesky::new(jittered) {
            return Ok(chol);
        }
        jitter *= 100.0;
    }
    Err(CoreError::CholeskyFailure)
}

/// Draw z ~ N(0, I_d).
pub fn standard_normal_vector(d: usize, rng: &mut RngStream) -> DVector<f64> {
    DVector::from_fn(d, |_, _| StandardNormal.sample(rng))
}

/// Draw y ~ N(mean, scale^2 * I).
pub fn isotropic_gaussian(mean: &DVector<f64>, scale: f64, rng: &mut RngStream) -> DVector<f64> {
    mean + standard_normal_vector(mean.len(), rng) * scale
}

/// Multivariate Gaussian log-density given a precomputed Cholesky factor
/// of the covariance.
pub fn mvn_log_density(x: &DVector<f64>, mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let d = x.len() as f64;
    let diff = x - mean;
    let solved = chol.l().solve_lower_triangular(&diff).expect("triangular solve");
    let quad = solved.norm_squared();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -0.5 * (d * LN_2PI + log_det + quad)
}

/// Multivariate Student-t log-density with `dof` degrees of freedom and
/// scale matrix given by its Cholesky factor.
pub fn mvt_log_density(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    chol: &Cholesky<f64, Dyn>,
    dof: f64,
) -> f64 {
    let d = x.len() as f64;
    let diff = x - mean;
    let solved = chol.l().solve_lower_triangular(&diff).expect("triangular solve");
    let quad = solved.norm_squared();
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    ln_gamma((dof + d) / 2.0)
        - ln_gamma(dof / 2.0)
        - 0.5 * (d * (dof * std::f64::consts::PI).ln() + log_det)
        - 0.5 * (dof + d) * (1.0 + quad / dof).ln()
}

/// Draw from a multivariate Gaussian via its covariance Cholesky factor.
pub fn sample_mvn(
    mean: &DVector<f64>,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut RngStream,
) -> DVector<f64> {
    mean + chol.l() * standard_normal_vector(mean.len(), rng)
}

/// Lanczos approximation of ln Gamma(x), x > 0. Accurate to ~1e-13.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * LN_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// A random symmetric positive-definite matrix with condition spread
/// controlled by `eig_lo..eig_hi` (log-uniform eigenvalues).
pub fn random_spd(d: usize, eig_lo: f64, eig_hi: f64, rng: &mut RngStream) -> DMatrix<f64> {
    // Random orthogonal basis from the QR of a Gaussian matrix.
    let m = DMatrix::from_fn(d, d, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        v
    });
    let qr = m.qr();
    let q = qr.q();
    let eigs = DVector::from_fn(d, |_, _| {
        let u: f64 = rng.random();
        (eig_lo.ln() + u * (eig_hi.ln() - eig_lo.ln())).exp()
    });
    &q * DMatrix::from_diagonal(&eigs) * q.transpose()
}

/// Simpson's rule on [a, b] with `n` (even) intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even interval count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

//! Exact finite-space oracles and sampling metrics.
//!
//! For tabular targets every kernel in this crate can be frozen and built
//! into an explicit row-stochastic matrix, from which spectral gaps,
//! conductance, Cheeger margins, and detailed-balance residuals are
//! computed exactly. These oracles are what the test suite trusts; the
//! samplers are validated against them rather than against themselves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::CoreError;
use crate::rng::RngStream;
use crate::targets::tabular::TabularTarget;
use crate::trace::Trace;

/// Subset enumeration cap for exact conductance: 2^16 cuts.
pub const CONDUCTANCE_ENUM_LIMIT: usize = 16;

/// Exact transition matrix of a frozen kernel on a finite space.
#[derive(Debug, Clone)]
pub struct ExactKernelMatrix {
    pub matrix: DMatrix<f64>,
    pub stationary: DVector<f64>,
    pub reversible: bool,
}

/// Frozen, enumerable kernel configurations on tabular spaces.
#[derive(Debug, Clone)]
pub enum FrozenKernel {
    /// No movement at all.
    Identity,
    /// Symmetric +-k index walk, k in 1..=width.
    RandomWalk { width: usize },
    /// Independence proposal from a fixed probability vector.
    Independence { probabilities: Vec<f64> },
    /// Arbitrary (sub-)stochastic proposal matrix; missing row mass is
    /// treated as an automatic rejection.
    Proposal { matrix: DMatrix<f64> },
}

impl FrozenKernel {
    fn proposal_matrix(&self, n: usize) -> Result<DMatrix<f64>, CoreError> {
        match self {
            FrozenKernel::Identity => Ok(DMatrix::zeros(n, n)),
            FrozenKernel::RandomWalk { width } => {
                Ok(crate::kernels::IndexRandomWalk::new(*width).proposal_matrix(n))
            }
            FrozenKernel::Independence { probabilities } => {
                if probabilities.len() != n {
                    return Err(CoreError::DimensionMismatch {
                        expected: n,
                        got: probabilities.len(),
                    });
                }
                let q = DVector::from_column_slice(probabilities);
                Ok(DMatrix::from_fn(n, n, |_, j| q[j]))
            }
            FrozenKernel::Proposal { matrix } => {
                if matrix.nrows() != n || matrix.ncols() != n {
                    return Err(CoreError::DimensionMismatch {
                        expected: n,
                        got: matrix.nrows(),
                    });
                }
                Ok(matrix.clone())
            }
        }
    }
}

/// Build the exact Metropolis-Hastings transition matrix of a frozen
/// kernel against the given tabular target. Rejection mass (including
/// out-of-support proposals) lands on the diagonal.
pub fn build_transition_matrix(
    kernel: &FrozenKernel,
    target: &TabularTarget,
) -> Result<ExactKernelMatrix, CoreError> {
    let pi = DVector::from_column_slice(target.probabilities());
    let q = kernel.proposal_matrix(target.n_states())?;
    Ok(build_mh_matrix(&q, &pi))
}

/// MH matrix for an arbitrary stationary vector `pi` (need not come from a
/// `TabularTarget`; biased and augmented targets use this directly).
pub fn build_mh_matrix(proposal: &DMatrix<f64>, pi: &DVector<f64>) -> ExactKernelMatrix {
    let n = pi.len();
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut move_mass = 0.0;
        for y in 0..n {
            if y == x || proposal[(x, y)] == 0.0 {
                continue;
            }
            let qxy = proposal[(x, y)];
            let qyx = proposal[(y, x)];
            // min(1, pi(y) q(y,x) / (pi(x) q(x,y))); zero reverse density
            // means the move can never be reversed, so it is rejected.
            let alpha = if qyx == 0.0 || pi[x] == 0.0 {
                0.0
            } else {
                ((pi[y] * qyx) / (pi[x] * qxy)).min(1.0)
            };
            let mass = qxy * alpha;
            p[(x, y)] = mass;
            move_mass += mass;
        }
        p[(x, x)] = 1.0 - move_mass;
    }
    ExactKernelMatrix::new(p, pi.clone())
}

impl ExactKernelMatrix {
    pub fn new(matrix: DMatrix<f64>, stationary: DVector<f64>) -> Self {
        let reversible = detailed_balance_residual(&matrix, &stationary) <= 1e-10;
        ExactKernelMatrix {
            matrix,
            stationary,
            reversible,
        }
    }

    pub fn n(&self) -> usize {
        self.stationary.len()
    }

    /// max_x |sum_y P(x,y) - 1|.
    pub fn row_sum_residual(&self) -> f64 {
        let ones = DVector::from_element(self.n(), 1.0);
        (&self.matrix * &ones - ones).amax()
    }

    /// max_x |(pi P)(x) - pi(x)|.
    pub fn invariance_residual(&self) -> f64 {
        let pi_t = self.stationary.transpose();
        (&pi_t * &self.matrix - pi_t).amax()
    }

    /// max_{x,y} |pi(x) P(x,y) - pi(y) P(y,x)|.
    pub fn detailed_balance_residual(&self) -> f64 {
        detailed_balance_residual(&self.matrix, &self.stationary)
    }
}

fn detailed_balance_residual(p: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let n = pi.len();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((pi[x] * p[(x, y)] - pi[y] * p[(y, x)]).abs());
        }
    }
    worst
}

/// Spectral summary of an exact kernel matrix.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralGap {
    /// 1 - lambda_2, distance of the largest non-unit eigenvalue from 1.
    pub right_gap: f64,
    /// 1 - max |lambda| over the non-unit spectrum.
    pub absolute_gap: f64,
    /// Spectrum on the zero-mean subspace (unit eigenvalue removed),
    /// sorted descending by real part. Imaginary parts only arise for
    /// non-reversible chains.
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Eigen-decomposition of the kernel restricted to zero-mean functions.
///
/// Reversible chains use the pi-symmetrized form `D^(1/2) P D^(-1/2)`,
/// which has a guaranteed real spectrum; otherwise the complex spectrum
/// is computed and moduli are reported.
pub fn spectral_gap(m: &ExactKernelMatrix) -> Result<SpectralGap, CoreError> {
    let n = m.n();
    let mut eigs: Vec<(f64, f64)> = if m.reversible {
        let d_half = m.stationary.map(|p| p.sqrt());
        let sym = DMatrix::from_fn(n, n, |i, j| {
            d_half[i] * m.matrix[(i, j)] / d_half[j]
        });
        let sym = (&sym + sym.transpose()) * 0.5;
        sym.symmetric_eigenvalues()
            .iter()
            .map(|&l| (l, 0.0))
            .collect()
    } else {
        m.matrix
            .complex_eigenvalues()
            .iter()
            .map(|c| (c.re, c.im))
            .collect()
    };
    // Remove the single eigenvalue closest to 1: the constant direction.
    let unit_idx = eigs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (a.0 - 1.0).powi(2) + a.1.powi(2);
            let db = (b.0 - 1.0).powi(2) + b.1.powi(2);
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or(CoreError::invalid("empty spectrum"))?;
    eigs.remove(unit_idx);
    eigs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let top_real = eigs.first().map_or(f64::NEG_INFINITY, |e| e.0);
    let top_mod = eigs
        .iter()
        .map(|(re, im)| (re * re + im * im).sqrt())
        .fold(0.0f64, f64::max);
    Ok(SpectralGap {
        right_gap: 1.0 - top_real,
        absolute_gap: 1.0 - top_mod,
        eigenvalues: eigs,
    })
}

/// Conductance report from exhaustive cut enumeration.
#[derive(Debug, Clone, Serialize)]
pub struct ConductanceReport {
    pub kappa: f64,
    /// States in the minimizing cut.
    pub argmin: Vec<usize>,
    /// Whether the reversible restriction pi(A) <= 1/2 was applied.
    pub reversible_restriction: bool,
}

/// Exact conductance by enumerating all 2^n cuts (n <= 16).
///
/// For reversible chains the infimum may be restricted to cuts with
/// pi(A) <= 1/2 since kappa(A) = kappa(A^c).
pub fn conductance(m: &ExactKernelMatrix) -> Result<ConductanceReport, CoreError> {
    let n = m.n();
    if n > CONDUCTANCE_ENUM_LIMIT {
        return Err(CoreError::invalid(format!(
            "exact conductance enumerates 2^n cuts and is capped at n = {CONDUCTANCE_ENUM_LIMIT}; \
             use conductance_sampled for an estimate"
        )));
    }
    let mut best = f64::INFINITY;
    let mut best_mask: u32 = 0;
    for mask in 1u32..((1u32 << n) - 1) {
        let pi_a: f64 = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| m.stationary[i])
            .sum();
        if pi_a <= 0.0 || pi_a >= 1.0 {
            continue;
        }
        if m.reversible && pi_a > 0.5 + 1e-12 {
            continue;
        }
        let kappa_a = cut_kappa(m, mask);
        if kappa_a < best {
            best = kappa_a;
            best_mask = mask;
        }
    }
    Ok(ConductanceReport {
        kappa: best,
        argmin: (0..n).filter(|&i| best_mask & (1 << i) != 0).collect(),
        reversible_restriction: m.reversible,
    })
}

fn cut_kappa(m: &ExactKernelMatrix, mask: u32) -> f64 {
    let n = m.n();
    let mut flow = 0.0;
    let mut pi_a = 0.0;
    for x in 0..n {
        if mask & (1 << x) == 0 {
            continue;
        }
        pi_a += m.stationary[x];
        for y in 0..n {
            if mask & (1 << y) == 0 {
                flow += m.stationary[x] * m.matrix[(x, y)];
            }
        }
    }
    flow / (pi_a * (1.0 - pi_a))
}

/// Sampled-cut upper estimate of conductance for spaces too large to
/// enumerate. This is an estimate (an upper bound from the cuts tried),
/// never an exact value.
pub fn conductance_sampled(
    m: &ExactKernelMatrix,
    n_cuts: usize,
    rng: &mut RngStream,
) -> ConductanceReport {
    let n = m.n();
    assert!(n <= 32, "sampled conductance uses 32-bit masks");
    let mut best = f64::INFINITY;
    let mut best_mask: u32 = 0;
    for _ in 0..n_cuts {
        let mask: u32 = rng.random_range(1..((1u64 << n) - 1) as u32);
        let pi_a: f64 = (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| m.stationary[i])
            .sum();
        if pi_a <= 0.0 || pi_a >= 1.0 {
            continue;
        }
        let kappa_a = cut_kappa(m, mask);
        if kappa_a < best {
            best = kappa_a;
            best_mask = mask;
        }
    }
    ConductanceReport {
        kappa: best,
        argmin: (0..n).filter(|&i| best_mask & (1 << i) != 0).collect(),
        reversible_restriction: false,
    }
}

/// Cheeger sandwich verification: kappa^2/8 <= 1 - lambda_2 <= kappa.
#[derive(Debug, Clone, Serialize)]
pub struct CheegerReport {
    pub holds: bool,
    pub kappa: f64,
    pub right_gap: f64,
    /// right_gap - kappa^2/8 (>= -slack when the bound holds).
    pub lower_margin: f64,
    /// kappa - right_gap (>= -slack when the bound holds).
    pub upper_margin: f64,
}

/// Slack for the Cheeger comparison: the paper's strict inequalities are
/// attained with equality on two-state chains, so the check is inclusive.
pub const CHEEGER_SLACK: f64 = 1e-9;

pub fn cheeger_check(m: &ExactKernelMatrix) -> Result<CheegerReport, CoreError> {
    if !m.reversible {
        return Err(CoreError::invalid(
            "Cheeger sandwich requires a reversible kernel",
        ));
    }
    let gap = spectral_gap(m)?;
    let cond = conductance(m)?;
    let lower_margin = gap.right_gap - cond.kappa * cond.kappa / 8.0;
    let upper_margin = cond.kappa - gap.right_gap;
    Ok(CheegerReport {
        holds: lower_margin >= -CHEEGER_SLACK && upper_margin >= -CHEEGER_SLACK,
        kappa: cond.kappa,
        right_gap: gap.right_gap,
        lower_margin,
        upper_margin,
    })
}

/// Independence-sampler gap identity check: gap(P) = 1/w* with
/// w* = max over the support of pi(x)/Q_J(x).
#[derive(Debug, Clone, Serialize)]
pub struct JumpGapReport {
    pub w_star: f64,
    pub inverse_w_star: f64,
    pub exact_gap: f64,
    pub matches: bool,
}

pub fn jump_gap_check(
    pi: &TabularTarget,
    jump_probabilities: &[f64],
) -> Result<JumpGapReport, CoreError> {
    let n = pi.n_states();
    if jump_probabilities.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: jump_probabilities.len(),
        });
    }
    let mut w_star = 0.0f64;
    for (p, q) in pi.probabilities().iter().zip(jump_probabilities.iter()) {
        if *p > 0.0 {
            if *q <= 0.0 {
                return Err(CoreError::ZeroProposalDensity);
            }
            w_star = w_star.max(p / q);
        }
    }
    let m = build_transition_matrix(
        &FrozenKernel::Independence {
            probabilities: jump_probabilities.to_vec(),
        },
        pi,
    )?;
    let gap = spectral_gap(&m)?;
    let inverse = 1.0 / w_star;
    Ok(JumpGapReport {
        w_star,
        inverse_w_star: inverse,
        exact_gap: gap.right_gap,
        matches: (gap.right_gap - inverse).abs() <= 1e-8,
    })
}

/// Inhomogeneity factor `b = d * sum(1/l_i) / (sum(1/sqrt(l_i)))^2` over
/// the eigenvalues of `Sigma_target^-1 Sigma_proposal`: the slowdown from
/// proposing with the wrong covariance shape. Equals 1 exactly when the
/// proposal covariance is proportional to the target's.
pub fn inhomogeneity_factor(
    sigma_target: &DMatrix<f64>,
    sigma_proposal: &DMatrix<f64>,
) -> Result<f64, CoreError> {
    let d = sigma_target.nrows();
    if sigma_proposal.nrows() != d || sigma_target.ncols() != d || sigma_proposal.ncols() != d {
        return Err(CoreError::DimensionMismatch {
            expected: d,
            got: sigma_proposal.nrows(),
        });
    }
    let chol = nalgebra::Cholesky::new(sigma_target.clone()).ok_or(CoreError::SingularMatrix {
        context: "target covariance in inhomogeneity factor",
    })?;
    // L^-1 Sigma_P L^-T is SPD-similar to Sigma^-1 Sigma_P.
    let l = chol.l();
    let tmp = l
        .solve_lower_triangular(sigma_proposal)
        .ok_or(CoreError::SingularMatrix {
            context: "triangular solve in inhomogeneity factor",
        })?;
    let middle = l
        .solve_lower_triangular(&tmp.transpose())
        .ok_or(CoreError::SingularMatrix {
            context: "triangular solve in inhomogeneity factor",
        })?;
    let sym = (&middle + middle.transpose()) * 0.5;
    let eigs = sym.symmetric_eigenvalues();
    if eigs.iter().any(|&l| l <= 0.0) {
        return Err(CoreError::SingularMatrix {
            context: "proposal covariance in inhomogeneity factor",
        });
    }
    let sum_inv: f64 = eigs.iter().map(|l| 1.0 / l).sum();
    let sum_inv_sqrt: f64 = eigs.iter().map(|l| 1.0 / l.sqrt()).sum();
    Ok(d as f64 * sum_inv / (sum_inv_sqrt * sum_inv_sqrt))
}

/// `|| ergodic_average - true_mean ||_2 / sqrt(d)`.
pub fn rmse_over_sqrt_d(trace: &Trace, true_mean: &DVector<f64>) -> Result<f64, CoreError> {
    let avg = crate::chain::ergodic_average(trace, crate::chain::identity_fn)?;
    if avg.len() != true_mean.len() {
        return Err(CoreError::DimensionMismatch {
            expected: true_mean.len(),
            got: avg.len(),
        });
    }
    Ok((avg - true_mean).norm() / (true_mean.len() as f64).sqrt())
}

/// Same metric over a plain sample mean (weighted estimators and subsets).
pub fn rmse_of_mean(mean: &DVector<f64>, true_mean: &DVector<f64>) -> f64 {
    (mean - true_mean).norm() / (true_mean.len() as f64).sqrt()
}

/// Completed hottest -> coldest -> hottest excursions per replica per
/// sweep, averaged over replicas. `labels[s][l]` is the replica occupying
/// temperature level `l` (0 = coldest) at sweep `s`.
pub fn round_trip_rate(labels: &[Vec<usize>], n_levels: usize) -> f64 {
    if labels.is_empty() || n_levels < 2 {
        return 0.0;
    }
    let n_replicas = n_levels;
    let hottest = n_levels - 1;
    // Per-replica excursion phase: None until first hottest visit, then
    // false = heading cold, true = heading hot.
    let mut phase: Vec<Option<bool>> = vec![None; n_replicas];
    let mut trips = 0usize;
    for row in labels {
        for (level, &replica) in row.iter().enumerate() {
            match phase[replica] {
                None => {
                    if level == hottest {
                        phase[replica] = Some(false);
                    }
                }
                Some(false) => {
                    if level == 0 {
                        phase[replica] = Some(true);
                    }
                }
                Some(true) => {
                    if level == hottest {
                        trips += 1;
                        phase[replica] = Some(false);
                    }
                }
            }
        }
    }
    trips as f64 / (labels.len() as f64 * n_replicas as f64)
}

/// Total variation distance between two distributions on the same finite
/// support: 0.5 * sum |nu_i - pi_i|.
pub fn tv_distance(empirical: &[f64], exact: &[f64]) -> Result<f64, CoreError> {
    if empirical.len() != exact.len() {
        return Err(CoreError::DimensionMismatch {
            expected: exact.len(),
            got: empirical.len(),
        });
    }
    Ok(0.5
        * empirical
            .iter()
            .zip(exact.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Named diagnostic fields emitted as JSON by the harness.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DiagnosticsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conductance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absolute_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inhomogeneity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_over_sqrt_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub round_trip_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_state(p: f64, q: f64, pi0: f64) -> ExactKernelMatrix {
        let m = DMatrix::from_row_slice(2, 2, &[1.0 - p, p, q, 1.0 - q]);
        ExactKernelMatrix::new(m, DVector::from_column_slice(&[pi0, 1.0 - pi0]))
    }

    #[test]
    fn identity_kernel_matrix_and_gap() {
        let target = TabularTarget::new(vec![0.4, 0.6]).unwrap();
        let m = build_transition_matrix(&FrozenKernel::Identity, &target).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(2, 2));
        let gap = spectral_gap(&m).unwrap();
        assert_relative_eq!(gap.right_gap, 0.0, epsilon = 1e-12);
        let cond = conductance(&m).unwrap();
        assert_relative_eq!(cond.kappa, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_state_always_swap_kernel() {
        let target = TabularTarget::new(vec![0.5, 0.5]).unwrap();
        let m = build_transition_matrix(&FrozenKernel::RandomWalk { width: 1 }, &target).unwrap();
        // Proposal width 1 on 2 states: probability 1/2 of proposing the
        // other state, 1/2 of proposing out of range (rejected).
        assert_relative_eq!(m.matrix[(0, 1)], 0.5, epsilon = 1e-14);
        assert_relative_eq!(m.matrix[(0, 0)], 0.5, epsilon = 1e-14);
        assert!(m.reversible);
    }

    #[test]
    fn independence_example_matrix_gap_and_identity() {
        // pi = (1/2, 1/2), Q_J = (1/4, 3/4): the Metropolized matrix is
        // [[3/4, 1/4], [1/4, 3/4]] with spectral gap 1/2 = 1/w*.
        let target = TabularTarget::new(vec![0.5, 0.5]).unwrap();
        let m = build_transition_matrix(
            &FrozenKernel::Independence {
                probabilities: vec![0.25, 0.75],
            },
            &target,
        )
        .unwrap();
        assert_relative_eq!(m.matrix[(0, 0)], 0.75, epsilon = 1e-14);
        assert_relative_eq!(m.matrix[(0, 1)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(m.matrix[(1, 0)], 0.25, epsilon = 1e-14);
        let report = jump_gap_check(&target, &[0.25, 0.75]).unwrap();
        assert_relative_eq!(report.w_star, 2.0, epsilon = 1e-12);
        assert_relative_eq!(report.exact_gap, 0.5, epsilon = 1e-10);
        assert!(report.matches);
    }

    #[test]
    fn perfect_proposal_has_unit_gap() {
        let target = TabularTarget::new(vec![0.3, 0.2, 0.5]).unwrap();
        let report = jump_gap_check(&target, &[0.3, 0.2, 0.5]).unwrap();
        assert_relative_eq!(report.w_star, 1.0, epsilon = 1e-12);
        assert_relative_eq!(report.exact_gap, 1.0, epsilon = 1e-10);
        assert!(report.matches);
    }

    #[test]
    fn two_state_uniform_chain_spectrum_and_conductance() {
        // p = q = 0.3 with uniform pi: lambda_2 = 1 - p - q = 0.4,
        // right gap 0.6, conductance 0.6, Cheeger boundary equality.
        let m = two_state(0.3, 0.3, 0.5);
        let gap = spectral_gap(&m).unwrap();
        assert_relative_eq!(gap.right_gap, 0.6, epsilon = 1e-12);
        let cond = conductance(&m).unwrap();
        assert_relative_eq!(cond.kappa, 0.6, epsilon = 1e-12);
        let cheeger = cheeger_check(&m).unwrap();
        assert!(cheeger.holds);
        assert_relative_eq!(cheeger.upper_margin, 0.0, epsilon = 1e-12);
        assert_relative_eq!(cheeger.lower_margin, 0.6 - 0.045, epsilon = 1e-12);
    }

    #[test]
    fn all_rows_equal_to_pi_gives_unit_gap_and_kappa_one() {
        let pi = DVector::from_column_slice(&[0.2, 0.3, 0.5]);
        let m = DMatrix::from_fn(3, 3, |_, j| pi[j]);
        let ekm = ExactKernelMatrix::new(m, pi);
        let gap = spectral_gap(&ekm).unwrap();
        assert_relative_eq!(gap.absolute_gap, 1.0, epsilon = 1e-10);
        let cond = conductance(&ekm).unwrap();
        assert_relative_eq!(cond.kappa, 1.0, epsilon = 1e-12);
        let cheeger = cheeger_check(&ekm).unwrap();
        assert!(cheeger.holds);
    }

    #[test]
    fn isolated_state_has_zero_conductance() {
        // Block-diagonal chain: states {0,1} never reach {2}.
        let p = DMatrix::from_row_slice(
            3,
            3,
            &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 1.0],
        );
        let pi = DVector::from_column_slice(&[0.25, 0.25, 0.5]);
        let m = ExactKernelMatrix::new(p, pi);
        let cond = conductance(&m).unwrap();
        assert_relative_eq!(cond.kappa, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inhomogeneity_examples() {
        // Proportional covariances give exactly 1.
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let p = &t * 3.7;
        assert_relative_eq!(inhomogeneity_factor(&t, &p).unwrap(), 1.0, epsilon = 1e-10);
        // Eigenvalues {1, 4}: b = 2 * 1.25 / 1.5^2 = 1.111...
        let id = DMatrix::identity(2, 2);
        let diag = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 4.0]));
        assert_relative_eq!(
            inhomogeneity_factor(&id, &diag).unwrap(),
            2.0 * 1.25 / 2.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn tv_distance_examples() {
        assert_relative_eq!(
            tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            tv_distance(&[1.0, 0.0], &[0.5, 0.5]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn round_trip_examples() {
        // No swaps ever: labels constant, rate 0.
        let still = vec![vec![0usize, 1]; 10];
        assert_relative_eq!(round_trip_rate(&still, 2), 0.0);
        // L = 2 with every swap accepted: 1 round trip per 2 sweeps per
        // replica, i.e. rate 0.5 asymptotically.
        let n = 10_000;
        let labels: Vec<Vec<usize>> = (0..n)
            .map(|s| if s % 2 == 0 { vec![0, 1] } else { vec![1, 0] })
            .collect();
        let rate = round_trip_rate(&labels, 2);
        assert_relative_eq!(rate, 0.5, epsilon = 1e-3);
    }

    #[test]
    fn rmse_examples() {
        use crate::state::State;
        use crate::trace::StepMeta;
        let mut trace = Trace::with_capacity(1);
        trace.states.push(State::continuous(&[1.0, 1.0]));
        trace.states.push(State::continuous(&[1.0, 1.0]));
        trace.meta.push(StepMeta::new(false, "t"));
        // Stuck at m2 = (1,..,1) against true mean 0: exactly 1.
        let r = rmse_over_sqrt_d(&trace, &DVector::zeros(2)).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        // Samples at the true mean: 0.
        let r0 = rmse_over_sqrt_d(&trace, &DVector::from_column_slice(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(r0, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn conductance_cap_is_enforced() {
        let n = 17;
        let pi = DVector::from_element(n, 1.0 / n as f64);
        let m = ExactKernelMatrix::new(DMatrix::identity(n, n), pi);
        assert!(conductance(&m).is_err());
        let mut rng = RngStream::new(1, 0);
        let est = conductance_sampled(&m, 100, &mut rng);
        assert_relative_eq!(est.kappa, 0.0, epsilon = 1e-14);
    }
}

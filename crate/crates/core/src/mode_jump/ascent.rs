//! Multistart gradient ascent and mode deduplication.

use nalgebra::{DMatrix, DVector};

use crate::error::CoreError;
use crate::state::State;
use crate::target::TargetModel;

use super::jams::{KernelFamily, ModeAtlas, ModeComponent};

/// Backtracking gradient-ascent settings.
#[derive(Debug, Clone)]
pub struct AscentConfig {
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Initial step length per line search.
    pub init_step: f64,
    /// Step shrink factor on backtracking.
    pub shrink: f64,
    /// Abandon the line search below this step length.
    pub min_step: f64,
    /// Cap on the displacement of a single iteration. Without it, steep
    /// gradients can vault the iterate across a valley into another
    /// basin before backtracking engages.
    pub max_move: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            grad_tol: 1e-8,
            max_iters: 10_000,
            init_step: 1.0,
            shrink: 0.5,
            min_step: 1e-15,
            max_move: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub point: DVector<f64>,
    pub log_density: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Ascend the log-density by backtracking line search along the gradient
/// until the gradient norm drops below tolerance or the budget runs out.
pub fn gradient_ascent(
    target: &dyn TargetModel,
    start: &DVector<f64>,
    config: &AscentConfig,
) -> Result<AscentResult, CoreError> {
    let mut x = start.clone();
    let mut f = target.log_density(&State::Continuous(x.clone()));
    let mut iterations = 0;
    // Armijo sufficient-increase constant.
    const ARMIJO: f64 = 1e-4;
    for it in 0..config.max_iters {
        iterations = it;
        let grad = target
            .gradient(&State::Continuous(x.clone()))
            .ok_or(CoreError::MissingGradient)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "gradient",
                iteration: it,
                value: grad.iter().copied().find(|g| !g.is_finite()).unwrap(),
            });
        }
        let gnorm2 = grad.norm_squared();
        if gnorm2.sqrt() < config.grad_tol {
            return Ok(AscentResult {
                point: x,
                log_density: f,
                converged: true,
                iterations: it,
            });
        }
        let mut step = config.init_step.min(config.max_move / gnorm2.sqrt());
        let mut advanced = false;
        while step >= config.min_step {
            let candidate = &x + &grad * step;
            let fc = target.log_density(&State::Continuous(candidate.clone()));
            if fc > f + ARMIJO * step * gnorm2 {
                x = candidate;
                f = fc;
                advanced = true;
                break;
            }
            step *= config.shrink;
        }
        if !advanced {
            // Line search exhausted: numerically at a stationary point.
            let converged = gnorm2.sqrt() < config.grad_tol.max(1e-6);
            return Ok(AscentResult {
                point: x,
                log_density: f,
                converged,
                iterations: it,
            });
        }
    }
    Ok(AscentResult {
        point: x,
        log_density: f,
        converged: false,
        iterations,
    })
}

/// Finite-difference Hessian of the log-density from gradient columns.
pub fn gradient_hessian(target: &dyn TargetModel, x: &DVector<f64>, h: f64) -> Option<DMatrix<f64>> {
    let d = x.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut xp = x.clone();
    for j in 0..d {
        let step = h * (1.0 + x[j].abs());
        xp[j] = x[j] + step;
        let gp = target.gradient(&State::Continuous(xp.clone()))?;
        xp[j] = x[j] - step;
        let gm = target.gradient(&State::Continuous(xp.clone()))?;
        xp[j] = x[j];
        hess.set_column(j, &((gp - gm) / (2.0 * step)));
    }
    // Symmetrize the finite-difference noise away.
    Some((&hess + hess.transpose()) * 0.5)
}

/// Run gradient ascent from every start, merge modes closer than the
/// dedup radius (keeping the higher log-density representative), and
/// initialize each mode's covariance from the inverse negative Hessian
/// (identity when that is unavailable or not positive-definite).
///
/// The returned atlas orders modes by descending log-density and gives
/// them uniform weights, so the result is invariant to permutations of
/// the starts.
pub fn find_modes(
    target: &dyn TargetModel,
    starts: &[DVector<f64>],
    dedup_radius: f64,
    config: &AscentConfig,
    family: KernelFamily,
) -> Result<ModeAtlas, CoreError> {
    if starts.is_empty() {
        return Err(CoreError::invalid("find_modes needs at least one start"));
    }
    let mut found: Vec<AscentResult> = Vec::new();
    for start in starts {
        let result = gradient_ascent(target, start, config)?;
        if !result.converged {
            continue;
        }
        match found
            .iter_mut()
            .find(|m| (&m.point - &result.point).norm() <= dedup_radius)
        {
            Some(existing) => {
                if result.log_density > existing.log_density {
                    *existing = result;
                }
            }
            None => found.push(result),
        }
    }
    if found.is_empty() {
        return Err(CoreError::NoModesFound);
    }
    // Deterministic order: best mode first, ties broken by coordinates.
    found.sort_by(|a, b| {
        b.log_density
            .partial_cmp(&a.log_density)
            .unwrap()
            .then_with(|| {
                a.point
                    .iter()
                    .partial_cmp(b.point.iter())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    let k = found.len();
    let d = target.dimension();
    let mut components = Vec::with_capacity(k);
    for m in &found {
        let covariance = gradient_hessian(target, &m.point, 1e-5)
            .and_then(|h| (-h).try_inverse())
            .filter(|c| nalgebra::Cholesky::new(c.clone()).is_some())
            .unwrap_or_else(|| DMatrix::identity(d, d));
        components.push(ModeComponent::new(
            m.point.clone(),
            covariance,
            1.0 / k as f64,
        )?);
    }
    ModeAtlas::new(components, family)
}



#[cfg(test)]
mod probe2 {
    use super::*;
    use crate::targets::mixture::GaussianMixture;

    #[test]
    #[ignore]
    fn probe_perm() {
        let m = GaussianMixture::benchmark(2);
        let starts = vec![
            DVector::from_column_slice(&[2.0, 2.0]),
            DVector::from_column_slice(&[-2.0, -2.0]),
            DVector::from_column_slice(&[1.4, 0.2]),
        ];
        for s in &starts {
            let r = gradient_ascent(&m, s, &AscentConfig::default()).unwrap();
            println!("start {:?} -> {:?} f={:.17} conv={}", s.as_slice(), r.point.as_slice(), r.log_density, r.converged);
        }
    }
}

//! Random walk on tabular state indices.

use nalgebra::DMatrix;
use rand::Rng;

use crate::chain::{mh_step, Proposal, TransitionKernel};
use crate::error::CoreError;
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::StepMeta;

/// Symmetric +-k proposal on indices. Steps past either end propose an
/// out-of-support index and are rejected by the acceptance step, which
/// keeps the proposal matrix symmetric.
#[derive(Debug, Clone)]
pub struct IndexRandomWalk {
    pub width: usize,
}

impl IndexRandomWalk {
    pub fn new(width: usize) -> Self {
        assert!(width >= 1);
        IndexRandomWalk { width }
    }

    /// The exact proposal matrix over `n` states; off-support mass shows
    /// up as missing row mass (handled as self-transitions downstream).
    pub fn proposal_matrix(&self, n: usize) -> DMatrix<f64> {
        let p = 1.0 / (2 * self.width) as f64;
        DMatrix::from_fn(n, n, |i, j| {
            let d = i.abs_diff(j);
            if d >= 1 && d <= self.width {
                p
            } else {
                0.0
            }
        })
    }
}

impl TransitionKernel for IndexRandomWalk {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        let i = state
            .position
            .as_index()
            .ok_or(CoreError::UnsupportedSpace {
                space: target.space().name(),
            })? as isize;
        let k = rng.random_range(1..=self.width) as isize;
        let dir = if rng.random::<bool>() { 1 } else { -1 };
        let j = i + dir * k;
        let candidate = if j < 0 {
            // Out of support; represented by an index past the table so
            // the target reports -inf and MH rejects.
            State::Index(usize::MAX)
        } else {
            State::Index(j as usize)
        };
        let log_density = target.log_density(&candidate);
        mh_step(
            state,
            Proposal {
                candidate,
                log_density,
                log_ratio: 0.0,
            },
            "walk",
            rng,
        )
    }

    fn tag(&self) -> &'static str {
        "walk"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::run_chain;
    use crate::diagnostics::tv_distance;
    use crate::targets::tabular::{empirical_distribution, TabularTarget};

    #[test]
    fn long_run_matches_exact_table() {
        let target = TabularTarget::new(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap();
        let mut kernel = IndexRandomWalk::new(1);
        let mut rng = RngStream::new(2024, 0);
        let trace =
            run_chain(&target, &mut kernel, State::Index(0), 1_000_000, &mut rng).unwrap();
        let emp = empirical_distribution(&trace.states, 5);
        let tv = tv_distance(&emp, target.probabilities()).unwrap();
        assert!(tv < 0.02, "tv {tv}");
        // Ergodic mean of the index within 0.01 of the exact mean.
        let avg = crate::chain::ergodic_average(&trace, crate::chain::identity_fn).unwrap();
        let exact: f64 = target
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum();
        assert!((avg[0] - exact).abs() < 0.01, "mean {} vs {exact}", avg[0]);
    }
}

//! Metropolis-Hastings stepping, chain execution, and ergodic averaging.

use nalgebra::DVector;
use rand::Rng;
use thiserror::Error;

use crate::error::CoreError;
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::{StepMeta, Trace};

/// A proposal draw: the candidate state, its log-density under the target,
/// and `log q(y,x) - log q(x,y)` (zero for symmetric proposals).
pub struct Proposal {
    pub candidate: State,
    pub log_density: f64,
    pub log_ratio: f64,
}

/// One Metropolis-Hastings accept/reject step.
///
/// Accepts the candidate with probability
/// `min(1, pi(y)/pi(x) * q(y,x)/q(x,y))`, all in log space. Out-of-support
/// candidates (`log pi(y) = -inf`) are rejections; a non-finite proposal
/// ratio aborts the step.
pub fn mh_step(
    state: &mut ChainState,
    proposal: Proposal,
    kernel_tag: &'static str,
    rng: &mut RngStream,
) -> Result<StepMeta, CoreError> {
    if proposal.log_ratio.is_nan() || proposal.log_ratio == f64::INFINITY {
        return Err(CoreError::NonFiniteProposalRatio {
            value: proposal.log_ratio,
        });
    }
    if proposal.log_density.is_nan() {
        return Err(CoreError::NonFinite {
            what: "proposal log-density",
            iteration: state.iteration,
            value: proposal.log_density,
        });
    }
    let log_alpha = proposal.log_density - state.log_density + proposal.log_ratio;
    let accepted = if proposal.log_density == f64::NEG_INFINITY {
        false
    } else if log_alpha >= 0.0 {
        true
    } else {
        rng.random::<f64>().ln() < log_alpha
    };
    if accepted {
        state.position = proposal.candidate;
        state.log_density = proposal.log_density;
    }
    state.iteration += 1;
    Ok(StepMeta::new(accepted, kernel_tag))
}

/// A Markov transition kernel that advances a chain state in place.
pub trait TransitionKernel {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError>;

    fn tag(&self) -> &'static str;
}

/// Chain execution failure carrying the completed portion of the trace.
#[derive(Debug, Error)]
#[error("chain aborted at iteration {iteration}: {source}")]
pub struct ChainRunError {
    pub iteration: usize,
    pub partial: Trace,
    #[source]
    pub source: CoreError,
}

/// Run `kernel` for `n_iter` transitions from `init`.
///
/// Output is a pure function of (target, kernel configuration, init,
/// n_iter, rng stream): the chain body never consults anything else. On
/// kernel failure the partial trace is returned inside the error with its
/// failure marker set.
pub fn run_chain(
    target: &dyn TargetModel,
    kernel: &mut dyn TransitionKernel,
    init: State,
    n_iter: usize,
    rng: &mut RngStream,
) -> Result<Trace, ChainRunError> {
    let mut trace = Trace::with_capacity(n_iter);
    let mut state = ChainState::new(init, target);
    trace.states.push(state.position.clone());
    for i in 0..n_iter {
        match kernel.step(&mut state, target, rng) {
            Ok(meta) => {
                trace.states.push(state.position.clone());
                trace.meta.push(meta);
            }
            Err(e) => {
                trace.failure = Some(e.to_string());
                return Err(ChainRunError {
                    iteration: i,
                    partial: trace,
                    source: e,
                });
            }
        }
    }
    Ok(trace)
}

/// Ergodic average of `f` over every stored state:
/// `(m+1)^-1 * sum_n f(X_n)`.
pub fn ergodic_average<F>(trace: &Trace, f: F) -> Result<DVector<f64>, CoreError>
where
    F: Fn(&State) -> DVector<f64>,
{
    assert!(!trace.states.is_empty(), "ergodic average of empty trace");
    let mut acc: Option<DVector<f64>> = None;
    for (i, s) in trace.states.iter().enumerate() {
        let v = f(s);
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "test function value",
                iteration: i,
                value: *bad,
            });
        }
        match &mut acc {
            Some(a) => *a += v,
            None => acc = Some(v),
        }
    }
    Ok(acc.expect("non-empty trace") / trace.states.len() as f64)
}

/// Identity test function on state coordinates.
pub fn identity_fn(s: &State) -> DVector<f64> {
    DVector::from_vec(s.coords())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::tabular::TabularTarget;
    use approx::assert_relative_eq;

    fn tab(probs: &[f64]) -> TabularTarget {
        TabularTarget::new(probs.to_vec()).unwrap()
    }

    #[test]
    fn equal_density_symmetric_proposal_always_accepts() {
        let target = tab(&[0.5, 0.5]);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            let mut state = ChainState::new(State::Index(0), &target);
            let prop = Proposal {
                candidate: State::Index(1),
                log_density: target.log_density(&State::Index(1)),
                log_ratio: 0.0,
            };
            let meta = mh_step(&mut state, prop, "test", &mut rng).unwrap();
            assert!(meta.accepted);
            assert_eq!(state.position, State::Index(1));
        }
    }

    #[test]
    fn half_density_ratio_accepts_half_the_time() {
        // pi(y)/pi(x) = 0.5 with a symmetric proposal: empirical acceptance
        // within 3 standard errors of 0.5.
        let target = tab(&[2.0 / 3.0, 1.0 / 3.0]);
        let mut rng = RngStream::new(9, 0);
        let n = 40_000;
        let mut accepted = 0usize;
        for _ in 0..n {
            let mut state = ChainState::new(State::Index(0), &target);
            let prop = Proposal {
                candidate: State::Index(1),
                log_density: target.log_density(&State::Index(1)),
                log_ratio: 0.0,
            };
            if mh_step(&mut state, prop, "test", &mut rng).unwrap().accepted {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / n as f64;
        let se = (0.5 * 0.5 / n as f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * se, "rate {rate}");
    }

    #[test]
    fn out_of_support_proposal_is_rejected() {
        let target = tab(&[0.5, 0.5]);
        let mut rng = RngStream::new(2, 0);
        let mut state = ChainState::new(State::Index(0), &target);
        let prop = Proposal {
            candidate: State::Index(1),
            log_density: f64::NEG_INFINITY,
            log_ratio: 0.0,
        };
        let meta = mh_step(&mut state, prop, "test", &mut rng).unwrap();
        assert!(!meta.accepted);
        assert_eq!(state.position, State::Index(0));
    }

    #[test]
    fn non_finite_ratio_aborts() {
        let target = tab(&[0.5, 0.5]);
        let mut rng = RngStream::new(3, 0);
        let mut state = ChainState::new(State::Index(0), &target);
        let prop = Proposal {
            candidate: State::Index(1),
            log_density: -0.5,
            log_ratio: f64::NAN,
        };
        assert!(mh_step(&mut state, prop, "test", &mut rng).is_err());
    }

    #[test]
    fn zero_iterations_yields_only_init() {
        let target = tab(&[0.25, 0.75]);
        let mut kernel = crate::kernels::IndexRandomWalk::new(1);
        let mut rng = RngStream::new(4, 0);
        let trace = run_chain(&target, &mut kernel, State::Index(1), 0, &mut rng).unwrap();
        assert_eq!(trace.states.len(), 1);
        assert!(trace.meta.is_empty());
    }

    #[test]
    fn same_seed_gives_identical_traces() {
        let target = tab(&[0.2, 0.3, 0.5]);
        let run = |seed| {
            let mut kernel = crate::kernels::IndexRandomWalk::new(1);
            let mut rng = RngStream::new(seed, 0);
            run_chain(&target, &mut kernel, State::Index(0), 500, &mut rng).unwrap()
        };
        let a = run(42);
        let b = run(42);
        assert_eq!(a.states, b.states);
        let c = run(43);
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn ergodic_average_constant_and_alternating() {
        let mut trace = Trace::with_capacity(3);
        for v in [1.0, -1.0, 1.0, -1.0] {
            trace.states.push(State::continuous(&[v]));
        }
        for _ in 0..3 {
            trace.meta.push(StepMeta::new(true, "test"));
        }
        let avg = ergodic_average(&trace, identity_fn).unwrap();
        assert_relative_eq!(avg[0], 0.0, epsilon = 1e-15);
        let avg_c = ergodic_average(&trace, |_| DVector::from_column_slice(&[7.0])).unwrap();
        assert_relative_eq!(avg_c[0], 7.0, epsilon = 1e-15);
    }

    #[test]
    fn ergodic_average_reports_offending_iteration() {
        let mut trace = Trace::with_capacity(2);
        for v in [1.0, 2.0, 3.0] {
            trace.states.push(State::continuous(&[v]));
        }
        let err = ergodic_average(&trace, |s| {
            let x = s.coords()[0];
            DVector::from_column_slice(&[if x == 2.0 { f64::NAN } else { x }])
        })
        .unwrap_err();
        match err {
            CoreError::NonFinite { iteration, .. } => assert_eq!(iteration, 1),
            other => panic!("unexpected error {other}"),
        }
    }
}

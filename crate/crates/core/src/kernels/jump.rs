//! Metropolized independence sampler: the generic jump kernel.
//!
//! Proposals are drawn from a fixed distribution `Q_J` ignoring the
//! current state, and accepted with
//! `min(1, [pi(y) Q_J(x)] / [pi(x) Q_J(y)])`. The spectral gap of this
//! kernel is exactly `1 / w*` with `w* = sup pi(x)/Q_J(x)`, so proposal
//! tails must dominate the target's for the gap to exist at all.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::chain::{mh_step, Proposal, TransitionKernel};
use crate::error::CoreError;
use crate::numeric::{log_sum_exp, mvn_log_density, mvt_log_density, sample_mvn};
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::StepMeta;

/// One component of a continuous jump proposal.
#[derive(Debug, Clone)]
pub struct JumpComponent {
    pub weight: f64,
    pub center: DVector<f64>,
    pub covariance: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// Student-t degrees of freedom; `None` means Gaussian.
    pub dof: Option<f64>,
}

impl JumpComponent {
    pub fn gaussian(weight: f64, center: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self, CoreError> {
        let chol = crate::numeric::cholesky_with_jitter(&covariance)?;
        Ok(JumpComponent {
            weight,
            center,
            covariance,
            chol,
            dof: None,
        })
    }

    pub fn student_t(
        weight: f64,
        center: DVector<f64>,
        covariance: DMatrix<f64>,
        dof: f64,
    ) -> Result<Self, CoreError> {
        let chol = crate::numeric::cholesky_with_jitter(&covariance)?;
        Ok(JumpComponent {
            weight,
            center,
            covariance,
            chol,
            dof: Some(dof),
        })
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        match self.dof {
            None => mvn_log_density(x, &self.center, &self.chol),
            Some(nu) => mvt_log_density(x, &self.center, &self.chol, nu),
        }
    }

    fn sample(&self, rng: &mut RngStream) -> DVector<f64> {
        match self.dof {
            None => sample_mvn(&self.center, &self.chol, rng),
            Some(nu) => {
                // t draw = Gaussian draw scaled by sqrt(nu / chi2_nu).
                let z = sample_mvn(&DVector::zeros(self.center.len()), &self.chol, rng);
                let g = rand_distr::Gamma::new(nu / 2.0, 2.0 / nu).expect("gamma params");
                let u: f64 = rand_distr::Distribution::sample(&g, rng);
                &self.center + z / u.sqrt()
            }
        }
    }
}

/// A jump proposal distribution: either a table over a finite space or a
/// mixture of Gaussian / Student-t components in R^d.
#[derive(Debug, Clone)]
pub enum JumpProposal {
    Tabular { probabilities: Vec<f64> },
    Mixture { components: Vec<JumpComponent> },
}

impl JumpProposal {
    pub fn tabular(probabilities: Vec<f64>) -> Result<Self, CoreError> {
        let sum: f64 = probabilities.iter().sum();
        if probabilities.iter().any(|p| *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CoreError::invalid("tabular jump proposal must be a probability vector"));
        }
        Ok(JumpProposal::Tabular { probabilities })
    }

    pub fn mixture(components: Vec<JumpComponent>) -> Result<Self, CoreError> {
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if components.is_empty() || components.iter().any(|c| c.weight <= 0.0) {
            return Err(CoreError::invalid("mixture weights must be positive"));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::invalid("mixture weights must sum to 1"));
        }
        Ok(JumpProposal::Mixture { components })
    }

    pub fn log_density(&self, x: &State) -> f64 {
        match (self, x) {
            (JumpProposal::Tabular { probabilities }, State::Index(i)) => {
                if *i < probabilities.len() && probabilities[*i] > 0.0 {
                    probabilities[*i].ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            (JumpProposal::Mixture { components }, State::Continuous(v)) => {
                let logs: Vec<f64> = components
                    .iter()
                    .map(|c| c.weight.ln() + c.log_density(v))
                    .collect();
                log_sum_exp(&logs)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> State {
        match self {
            JumpProposal::Tabular { probabilities } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probabilities.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return State::Index(i);
                    }
                }
                State::Index(probabilities.len() - 1)
            }
            JumpProposal::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = components.len() - 1;
                for (i, c) in components.iter().enumerate() {
                    acc += c.weight;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                State::Continuous(components[pick].sample(rng))
            }
        }
    }
}

/// The Metropolized independence kernel.
#[derive(Debug, Clone)]
pub struct IndependenceJump {
    pub proposal: JumpProposal,
}

impl IndependenceJump {
    pub fn new(proposal: JumpProposal) -> Self {
        IndependenceJump { proposal }
    }
}

impl TransitionKernel for IndependenceJump {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        let log_q_x = self.proposal.log_density(&state.position);
        if log_q_x == f64::NEG_INFINITY {
            // Q_J must cover the support of pi or the chain loses
            // ergodicity; treat as a hard error, not a rejection.
            return Err(CoreError::ZeroProposalDensity);
        }
        let candidate = self.proposal.sample(rng);
        let log_density = target.log_density(&candidate);
        let log_q_y = self.proposal.log_density(&candidate);
        mh_step(
            state,
            Proposal {
                candidate,
                log_density,
                // q(y -> x) / q(x -> y) for an independence proposal is
                // Q_J(x) / Q_J(y).
                log_ratio: log_q_x - log_q_y,
            },
            "jump",
            rng,
        )
    }

    fn tag(&self) -> &'static str {
        "jump"
    }
}

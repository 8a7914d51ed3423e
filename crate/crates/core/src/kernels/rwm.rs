//! Adaptive random-walk Metropolis.
//!
//! The proposal is `y ~ N(x, lambda * Sigma_P)`. Adaptation combines the
//! classic two ingredients: the global scale `lambda` follows a
//! Robbins-Monro recursion on its log targeting the 0.234 acceptance
//! rate, and `Sigma_P` tracks the running sample covariance of the chain
//! (with diagonal jitter so it stays positive-definite). The step size
//! eta_t = t^-0.6 decays inside the (1/2, 1] range required for
//! diminishing adaptation.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::chain::{mh_step, Proposal, TransitionKernel};
use crate::error::CoreError;
use crate::numeric::{cholesky_with_jitter, standard_normal_vector};
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::StepMeta;

/// The RWM optimal acceptance rate from diffusion-limit scaling.
pub const OPTIMAL_ACCEPTANCE: f64 = 0.234;

/// Diagonal jitter applied whenever the empirical covariance is promoted
/// to the proposal covariance.
pub const COVARIANCE_JITTER: f64 = 1e-10;

/// Welford running mean/covariance accumulator.
#[derive(Debug, Clone)]
pub struct RunningCov {
    pub count: u64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl RunningCov {
    pub fn new(dim: usize) -> Self {
        RunningCov {
            count: 0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    pub fn update(&mut self, x: &DVector<f64>) {
        self.count += 1;
        let delta = x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta2 = x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Sample covariance; `None` with fewer than two observations.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        if self.count < 2 {
            return None;
        }
        Some(&self.m2 / (self.count - 1) as f64)
    }
}

/// Robbins-Monro recursion on log(lambda) targeting an acceptance rate.
#[derive(Debug, Clone)]
pub struct ScaleAdapter {
    pub log_lambda: f64,
    pub target_rate: f64,
    pub decay: f64,
    t: u64,
}

impl ScaleAdapter {
    pub fn new(initial_lambda: f64, target_rate: f64) -> Self {
        ScaleAdapter {
            log_lambda: initial_lambda.ln(),
            target_rate,
            decay: 0.6,
            t: 0,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.log_lambda.exp()
    }

    /// Update with the realized acceptance indicator or probability.
    pub fn update(&mut self, acceptance: f64) {
        self.t += 1;
        let eta = (self.t as f64).powf(-self.decay);
        self.log_lambda += eta * (acceptance - self.target_rate);
    }
}

/// Adaptive Gaussian random-walk Metropolis kernel state.
#[derive(Debug, Clone)]
pub struct AdaptiveRwm {
    dim: usize,
    /// Shape of the proposal; scaled by `lambda` at propose time.
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    pub scale: ScaleAdapter,
    pub running: RunningCov,
    /// Exponentially weighted acceptance-rate tracker (rate 0.01).
    pub acceptance_ewma: f64,
    frozen: bool,
    adapt_covariance: bool,
    /// Promote the running covariance into the proposal every this many
    /// accumulated states (amortizes the refactorization).
    refresh_every: u64,
    warmup: u64,
    tag: &'static str,
}

impl AdaptiveRwm {
    /// Standard initialization: `Sigma_P = I`, `lambda = 2.38^2 / d`, so
    /// the initial proposal covariance is `(2.38^2/d) I`.
    pub fn new(dim: usize) -> Self {
        Self::with_shape(
            DMatrix::identity(dim, dim),
            2.38 * 2.38 / dim as f64,
        )
    }

    /// Explicit shape matrix and scale.
    pub fn with_shape(sigma: DMatrix<f64>, lambda: f64) -> Self {
        let dim = sigma.nrows();
        let chol = cholesky_with_jitter(&sigma).expect("initial proposal covariance must be SPD");
        AdaptiveRwm {
            dim,
            sigma,
            chol,
            scale: ScaleAdapter::new(lambda, OPTIMAL_ACCEPTANCE),
            running: RunningCov::new(dim),
            acceptance_ewma: OPTIMAL_ACCEPTANCE,
            frozen: false,
            adapt_covariance: true,
            refresh_every: 50,
            warmup: 100,
            tag: "rwm",
        }
    }

    pub fn with_tag(mut self, tag: &'static str) -> Self {
        self.tag = tag;
        self
    }

    /// Stop all adaptation; the kernel becomes a fixed MH kernel.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn set_adapt_covariance(&mut self, on: bool) {
        self.adapt_covariance = on;
    }

    /// Replace the proposal shape matrix (for externally managed
    /// covariance sharing).
    pub fn set_shape(&mut self, sigma: DMatrix<f64>) -> Result<(), CoreError> {
        self.chol = cholesky_with_jitter(&sigma)?;
        self.sigma = sigma;
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.scale.lambda()
    }

    pub fn proposal_shape(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Current full proposal covariance `lambda * Sigma_P`.
    pub fn proposal_covariance(&self) -> DMatrix<f64> {
        &self.sigma * self.lambda()
    }

    /// Draw the Gaussian proposal `N(x, lambda * Sigma_P)`.
    pub fn propose(&self, x: &DVector<f64>, rng: &mut RngStream) -> DVector<f64> {
        let z = standard_normal_vector(self.dim, rng);
        x + self.chol.l() * z * self.lambda().sqrt()
    }

    /// Adaptation update after one transition: feed the (possibly
    /// unchanged) chain state into the covariance accumulator and push
    /// log(lambda) toward the target acceptance rate.
    pub fn adapt(&mut self, accepted: bool, new_state: &DVector<f64>) -> Result<(), CoreError> {
        if self.frozen {
            return Ok(());
        }
        self.running.update(new_state);
        self.scale.update(if accepted { 1.0 } else { 0.0 });
        self.acceptance_ewma += 0.01 * (f64::from(accepted) - self.acceptance_ewma);
        if self.adapt_covariance
            && self.running.count >= self.warmup
            && self.running.count % self.refresh_every == 0
        {
            if let Some(cov) = self.running.covariance() {
                let jittered = &cov + DMatrix::identity(self.dim, self.dim) * COVARIANCE_JITTER;
                self.chol = cholesky_with_jitter(&jittered)?;
                self.sigma = jittered;
            }
        }
        Ok(())
    }
}

impl TransitionKernel for AdaptiveRwm {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        let x = state
            .position
            .as_continuous()
            .ok_or(CoreError::UnsupportedSpace {
                space: target.space().name(),
            })?;
        let y = self.propose(x, rng);
        let candidate = State::Continuous(y);
        let log_density = target.log_density(&candidate);
        let meta = mh_step(
            state,
            Proposal {
                candidate,
                log_density,
                log_ratio: 0.0,
            },
            self.tag,
            rng,
        )?;
        let current = state.position.as_continuous().expect("continuous chain");
        let current = current.clone();
        self.adapt(meta.accepted, &current)?;
        Ok(meta)
    }

    fn tag(&self) -> &'static str {
        self.tag
    }
}

//! Jumping adaptive multimodal sampler.
//!
//! The chain lives on the augmented space (x, i) with density
//!
//! ```text
//! pi(x, i) = pi(x) * w_i kappa_i(x) / sum_j w_j kappa_j(x)
//! ```
//!
//! whose x-marginal is exactly pi: summing the mode-assignment factor
//! over i gives one. Local moves update x with a mode-specific adaptive
//! RWM at fixed i; jump moves propose a new index i' and transport x
//! deterministically between mode frames, whitening by the source
//! covariance and coloring by the destination's:
//!
//! ```text
//! x' = nu_i' + L_i' L_i^-1 (x - nu_i)
//! ```
//!
//! with the Jacobian |Sigma_i'|^(1/2) / |Sigma_i|^(1/2) entering the
//! acceptance ratio. On an atlas matching a Gaussian-mixture target
//! exactly, target, kappa, and Jacobian factors cancel and every jump
//! is accepted regardless of dimension.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::kernels::AdaptiveRwm;
use crate::numeric::{log_sum_exp, mvn_log_density, mvt_log_density};
use crate::rng::RngStream;
use crate::state::State;
use crate::target::TargetModel;
use crate::trace::{StepMeta, Trace};

/// Mode-kernel family for the assignment factors kappa_i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    Gaussian,
    /// Student-t with the given degrees of freedom; heavier tails keep
    /// the assignment factors from underflowing far between modes.
    StudentT { dof: f64 },
}

impl Default for KernelFamily {
    fn default() -> Self {
        KernelFamily::StudentT { dof: 7.0 }
    }
}

/// One discovered mode: center, local covariance, and weight.
#[derive(Debug, Clone)]
pub struct ModeComponent {
    pub center: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub weight: f64,
    chol: Cholesky<f64, Dyn>,
    /// 0.5 * log |Sigma|.
    log_sqrt_det: f64,
}

impl ModeComponent {
    pub fn new(
        center: DVector<f64>,
        covariance: DMatrix<f64>,
        weight: f64,
    ) -> Result<Self, CoreError> {
        let chol = crate::numeric::cholesky_with_jitter(&covariance)?;
        let log_sqrt_det = chol.l().diagonal().iter().map(|v| v.ln()).sum();
        Ok(ModeComponent {
            center,
            covariance,
            weight,
            chol,
            log_sqrt_det,
        })
    }

    pub fn log_sqrt_det(&self) -> f64 {
        self.log_sqrt_det
    }

    fn log_kappa(&self, x: &DVector<f64>, family: KernelFamily) -> f64 {
        match family {
            KernelFamily::Gaussian => mvn_log_density(x, &self.center, &self.chol),
            KernelFamily::StudentT { dof } => mvt_log_density(x, &self.center, &self.chol, dof),
        }
    }

    /// Whiten a displacement from this mode: `L^-1 (x - nu)`.
    fn whiten(&self, x: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .solve_lower_triangular(&(x - &self.center))
            .expect("triangular solve")
    }

    /// Color a whitened displacement into this mode: `nu + L z`.
    fn color(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.center + self.chol.l() * z
    }
}

/// The discovered modes with their geometries and weights.
#[derive(Debug, Clone)]
pub struct ModeAtlas {
    pub modes: Vec<ModeComponent>,
    pub family: KernelFamily,
}

impl ModeAtlas {
    pub fn new(modes: Vec<ModeComponent>, family: KernelFamily) -> Result<Self, CoreError> {
        if modes.is_empty() {
            return Err(CoreError::NoModesFound);
        }
        let total: f64 = modes.iter().map(|m| m.weight).sum();
        if (total - 1.0).abs() > 1e-9 || modes.iter().any(|m| m.weight <= 0.0) {
            return Err(CoreError::invalid("mode weights must be positive and sum to 1"));
        }
        Ok(ModeAtlas { modes, family })
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// log(w_i kappa_i(x)) for every mode.
    pub fn log_weighted_kappas(&self, x: &DVector<f64>) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| m.weight.ln() + m.log_kappa(x, self.family))
            .collect()
    }

    /// Deterministic affine transport of `x` from mode `from`'s frame to
    /// mode `to`'s.
    pub fn transport(&self, x: &DVector<f64>, from: usize, to: usize) -> DVector<f64> {
        self.modes[to].color(&self.modes[from].whiten(x))
    }

    /// Replace mode `i`'s covariance (phase-2 refinement / adaptation).
    pub fn set_covariance(&mut self, i: usize, covariance: DMatrix<f64>) -> Result<(), CoreError> {
        let weight = self.modes[i].weight;
        let center = self.modes[i].center.clone();
        self.modes[i] = ModeComponent::new(center, covariance, weight)?;
        Ok(())
    }

    /// JSON-structured text serialization of centers, covariances
    /// (row-major), weights, and the kernel family.
    pub fn to_json(&self) -> String {
        let repr = AtlasRepr::from(self);
        serde_json::to_string_pretty(&repr).expect("atlas serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let repr: AtlasRepr =
            serde_json::from_str(text).map_err(|e| CoreError::invalid(e.to_string()))?;
        repr.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct AtlasRepr {
    family: KernelFamily,
    modes: Vec<ModeRepr>,
}

#[derive(Serialize, Deserialize)]
struct ModeRepr {
    center: Vec<f64>,
    /// Row-major covariance entries.
    covariance: Vec<f64>,
    weight: f64,
}

impl From<&ModeAtlas> for AtlasRepr {
    fn from(atlas: &ModeAtlas) -> Self {
        AtlasRepr {
            family: atlas.family,
            modes: atlas
                .modes
                .iter()
                .map(|m| ModeRepr {
                    center: m.center.iter().copied().collect(),
                    covariance: m.covariance.transpose().iter().copied().collect(),
                    weight: m.weight,
                })
                .collect(),
        }
    }
}

impl TryFrom<AtlasRepr> for ModeAtlas {
    type Error = CoreError;

    fn try_from(repr: AtlasRepr) -> Result<Self, CoreError> {
        let modes = repr
            .modes
            .into_iter()
            .map(|m| {
                let d = m.center.len();
                let cov = DMatrix::from_row_slice(d, d, &m.covariance);
                ModeComponent::new(DVector::from_vec(m.center), cov, m.weight)
            })
            .collect::<Result<Vec<_>, _>>()?;
        ModeAtlas::new(modes, repr.family)
    }
}

/// Augmented log-density `log pi(x, i)`; all kappa handling in log space.
pub fn jams_augmented_logdensity(
    x: &DVector<f64>,
    i: usize,
    atlas: &ModeAtlas,
    target: &dyn TargetModel,
) -> f64 {
    let lp = target.log_density(&State::Continuous(x.clone()));
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let logs = atlas.log_weighted_kappas(x);
    lp + logs[i] - log_sum_exp(&logs)
}

/// Augmented chain state: position, mode index, and caches.
#[derive(Debug, Clone)]
pub struct JamsState {
    pub position: DVector<f64>,
    pub mode: usize,
    /// log pi(x).
    pub log_pi: f64,
    /// log(w_j kappa_j(x)) per mode.
    pub log_kappas: Vec<f64>,
}

impl JamsState {
    pub fn new(position: DVector<f64>, mode: usize, atlas: &ModeAtlas, target: &dyn TargetModel) -> Self {
        let log_pi = target.log_density(&State::Continuous(position.clone()));
        let log_kappas = atlas.log_weighted_kappas(&position);
        JamsState {
            position,
            mode,
            log_pi,
            log_kappas,
        }
    }

    /// Cached augmented log-density.
    pub fn augmented(&self) -> f64 {
        self.log_pi + self.log_kappas[self.mode] - log_sum_exp(&self.log_kappas)
    }
}

/// The JAMS sampler: per-mode local kernels plus the jump move.
pub struct JamsSampler {
    pub atlas: ModeAtlas,
    local: Vec<AdaptiveRwm>,
    pub jump_attempts: u64,
    pub jump_accepts: u64,
    /// Per-mode local acceptance counters (accepts, attempts).
    pub local_counts: Vec<(u64, u64)>,
}

impl JamsSampler {
    pub fn new(atlas: ModeAtlas) -> Self {
        let local = atlas
            .modes
            .iter()
            .map(|m| {
                let d = m.center.len();
                AdaptiveRwm::with_shape(m.covariance.clone(), 2.38 * 2.38 / d as f64)
                    .with_tag("jams_local")
            })
            .collect();
        let k = atlas.k();
        JamsSampler {
            atlas,
            local,
            jump_attempts: 0,
            jump_accepts: 0,
            local_counts: vec![(0, 0); k],
        }
    }

    pub fn freeze(&mut self) {
        for k in &mut self.local {
            k.freeze();
        }
    }

    /// Mode-local RWM move at fixed index, targeting the augmented
    /// conditional; adaptation is per mode.
    pub fn local_step(
        &mut self,
        state: &mut JamsState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<bool, CoreError> {
        let i = state.mode;
        let kernel = &mut self.local[i];
        let candidate = kernel.propose(&state.position, rng);
        let cand_log_pi = target.log_density(&State::Continuous(candidate.clone()));
        let accepted = if cand_log_pi == f64::NEG_INFINITY {
            false
        } else {
            let cand_kappas = self.atlas.log_weighted_kappas(&candidate);
            let cand_aug = cand_log_pi + cand_kappas[i] - log_sum_exp(&cand_kappas);
            let log_alpha = cand_aug - state.augmented();
            let ok = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
            if ok {
                state.position = candidate;
                state.log_pi = cand_log_pi;
                state.log_kappas = cand_kappas;
            }
            ok
        };
        kernel.adapt(accepted, &state.position)?;
        let (acc, att) = &mut self.local_counts[i];
        *att += 1;
        if accepted {
            *acc += 1;
        }
        Ok(accepted)
    }

    /// Jump move: uniform proposal of a different mode index and affine
    /// transport of the position between the two mode frames.
    pub fn jump_step(
        &mut self,
        state: &mut JamsState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<bool, CoreError> {
        let k = self.atlas.k();
        if k < 2 {
            return Ok(false);
        }
        self.jump_attempts += 1;
        let i = state.mode;
        let mut j = rng.random_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        let candidate = self.atlas.transport(&state.position, i, j);
        let cand_log_pi = target.log_density(&State::Continuous(candidate.clone()));
        if cand_log_pi == f64::NEG_INFINITY {
            return Ok(false);
        }
        let cand_kappas = self.atlas.log_weighted_kappas(&candidate);
        let cand_aug = cand_log_pi + cand_kappas[j] - log_sum_exp(&cand_kappas);
        // Jacobian of the affine transport: |Sigma_j|^1/2 / |Sigma_i|^1/2.
        let log_jacobian = self.atlas.modes[j].log_sqrt_det() - self.atlas.modes[i].log_sqrt_det();
        let log_alpha = cand_aug - state.augmented() + log_jacobian;
        let accepted = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
        if accepted {
            state.position = candidate;
            state.mode = j;
            state.log_pi = cand_log_pi;
            state.log_kappas = cand_kappas;
            self.jump_accepts += 1;
        }
        Ok(accepted)
    }

    pub fn jump_acceptance_rate(&self) -> f64 {
        if self.jump_attempts == 0 {
            0.0
        } else {
            self.jump_accepts as f64 / self.jump_attempts as f64
        }
    }
}

/// JAMS run configuration.
#[derive(Debug, Clone)]
pub struct JamsConfig {
    /// Mode-merge radius; defaults to 1e-3 * sqrt(d).
    pub dedup_radius: Option<f64>,
    /// Phase-2 iterations per mode for covariance refinement.
    pub phase2_iters: usize,
    /// Samples from the tail of phase 2 used for the covariance.
    pub phase2_cov_window: usize,
    /// Probability of attempting a jump move per main-phase iteration.
    pub p_jump: f64,
    /// Main-phase iterations.
    pub n_iter: usize,
    pub ascent: super::ascent::AscentConfig,
    pub family: KernelFamily,
}

impl Default for JamsConfig {
    fn default() -> Self {
        JamsConfig {
            dedup_radius: None,
            phase2_iters: 5_000,
            phase2_cov_window: 2_500,
            p_jump: 0.1,
            n_iter: 100_000,
            ascent: super::ascent::AscentConfig::default(),
            family: KernelFamily::default(),
        }
    }
}

/// Output of a full JAMS run.
pub struct JamsRun {
    /// Main-phase trace over x; `aux_index` carries the mode index.
    pub trace: Trace,
    /// Atlas after phase 1 (discovery) and after phase 2 (refinement).
    pub atlas_history: Vec<ModeAtlas>,
    pub atlas: ModeAtlas,
    pub jump_acceptance: f64,
    pub local_acceptance: Vec<f64>,
}

/// Full three-phase JAMS: mode discovery from the starts, per-mode
/// covariance refinement, then the main augmented-space chain.
pub fn jams_run(
    target: &dyn TargetModel,
    starts: &[DVector<f64>],
    config: &JamsConfig,
    seed: u64,
) -> Result<JamsRun, CoreError> {
    let d = target.dimension();
    let dedup = config
        .dedup_radius
        .unwrap_or(1e-3 * (d as f64).sqrt());
    let mut atlas = super::ascent::find_modes(target, starts, dedup, &config.ascent, config.family)?;
    let discovery_atlas = atlas.clone();

    // Phase 2: per-mode chains against the augmented conditional at
    // fixed i; the tail of each chain estimates the local covariance.
    let base = RngStream::new(seed, 0);
    for i in 0..atlas.k() {
        let mut rng = base.substream(1_000 + i as u64);
        let mut sampler = JamsSampler::new(atlas.clone());
        let mut state = JamsState::new(atlas.modes[i].center.clone(), i, &atlas, target);
        let mut cov = crate::kernels::RunningCov::new(d);
        let window_start = config.phase2_iters.saturating_sub(config.phase2_cov_window);
        for it in 0..config.phase2_iters {
            sampler.local_step(&mut state, target, &mut rng)?;
            if it >= window_start {
                cov.update(&state.position);
            }
        }
        if let Some(estimate) = cov.covariance() {
            if nalgebra::Cholesky::new(estimate.clone()).is_some() {
                atlas.set_covariance(i, estimate)?;
            }
        }
    }
    let refined_atlas = atlas.clone();

    // Main phase.
    let mut sampler = JamsSampler::new(atlas);
    let mut rng = base.substream(0);
    let mut state = JamsState::new(
        sampler.atlas.modes[0].center.clone(),
        0,
        &sampler.atlas,
        target,
    );
    let mut trace = Trace::with_capacity(config.n_iter);
    trace.states.push(State::Continuous(state.position.clone()));
    for _ in 0..config.n_iter {
        let jump: bool = rng.random::<f64>() < config.p_jump;
        let accepted = if jump && sampler.atlas.k() >= 2 {
            sampler.jump_step(&mut state, target, &mut rng)?
        } else {
            sampler.local_step(&mut state, target, &mut rng)?
        };
        trace.states.push(State::Continuous(state.position.clone()));
        trace.meta.push(StepMeta::with_aux(
            accepted,
            if jump { "jams_jump" } else { "jams_local" },
            state.mode,
        ));
    }

    Ok(JamsRun {
        trace,
        atlas_history: vec![discovery_atlas, refined_atlas],
        jump_acceptance: sampler.jump_acceptance_rate(),
        local_acceptance: sampler
            .local_counts
            .iter()
            .map(|(a, t)| if *t == 0 { 0.0 } else { *a as f64 / *t as f64 })
            .collect(),
        atlas: sampler.atlas,
    })
}

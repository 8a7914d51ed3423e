//! Repelling-attracting Metropolis.
//!
//! Each proposal is built in two forced stages through a symmetric
//! random-walk kernel R: first downhill (repeat z ~ R(x, .) until
//! accepted with min{1, pi(x)/pi(z)}), then uphill (repeat y ~ R(z, .)
//! until accepted with min{1, pi(y)/pi(z)}), so proposals dive into the
//! valley and climb the far side. The composed proposal density is
//! intractable, but its only intractable factor is the downhill
//! normalizing constant c(x), and 1/c is exactly the mean of the
//! geometric trial count of a forced downhill run. The chain therefore
//! carries the trial count as an auxiliary variable: one extra downhill
//! run from the proposal point y yields a fresh count m, and the move is
//! accepted with
//!
//! ```text
//! min{1, [pi(y) * m] / [pi(x) * n]}
//! ```
//!
//! where n is the count stored when x was last accepted. On the extended
//! space (x, n) with target pi(x) * n * Geom_c(x)(n) * c(x), all
//! intractable factors cancel and the x-marginal is exactly pi, placing
//! the kernel in the pseudomarginal family. Correctness is gated by
//! exact-stationarity tests on tabular oracles rather than argued only
//! on paper; see the acceptance suite.
//!
//! The target must be positive on the whole space the walk can reach:
//! a zero-density intermediate point breaks the downhill/uphill ratio
//! algebra.

use nalgebra::DVector;
use rand::Rng;

use crate::chain::TransitionKernel;
use crate::error::CoreError;
use crate::numeric::isotropic_gaussian;
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::StepMeta;

/// Repelling-attracting proposal settings.
#[derive(Debug, Clone)]
pub struct RamConfig {
    /// Standard deviation of the isotropic Gaussian R on continuous
    /// spaces.
    pub scale: f64,
    /// Cap on proposals per forced stage; exhaustion abandons the move.
    pub max_inner: usize,
    /// Step width of the lazy +-k index walk R on tabular spaces
    /// (out-of-range steps propose staying put, keeping R symmetric).
    pub index_width: usize,
}

impl RamConfig {
    pub fn new(scale: f64) -> Self {
        RamConfig {
            scale,
            max_inner: 1000,
            index_width: 1,
        }
    }
}

/// A two-stage proposal: the intermediate downhill point and the final
/// uphill point, with the trial counts of each forced stage.
#[derive(Debug, Clone)]
pub struct RamProposal {
    pub intermediate: State,
    pub intermediate_log_density: f64,
    pub candidate: State,
    pub candidate_log_density: f64,
    pub down_trials: u64,
    pub up_trials: u64,
}

fn draw_r(x: &State, cfg: &RamConfig, target: &dyn TargetModel, rng: &mut RngStream) -> State {
    match x {
        State::Continuous(v) => State::Continuous(isotropic_gaussian(v, cfg.scale, rng)),
        State::Index(i) => {
            let k = rng.random_range(1..=cfg.index_width) as isize;
            let dir: bool = rng.random();
            let j = *i as isize + if dir { k } else { -k };
            let n = match target.space() {
                crate::target::Space::Tabular { n } => n as isize,
                _ => isize::MAX,
            };
            if j < 0 || j >= n {
                State::Index(*i)
            } else {
                State::Index(j as usize)
            }
        }
        State::Binary(_) => unreachable!("RAM does not support binary lattices"),
    }
}

enum Stage {
    /// Accept w with probability min{1, pi(from)/pi(w)}.
    Down,
    /// Accept w with probability min{1, pi(w)/pi(from)}.
    Up,
}

/// Forced move: repeat proposals from `from` until one is accepted under
/// the stage rule, or the budget runs out.
fn forced_move(
    from: &State,
    from_log_density: f64,
    stage: Stage,
    target: &dyn TargetModel,
    cfg: &RamConfig,
    rng: &mut RngStream,
) -> Result<(State, f64, u64), CoreError> {
    for trial in 1..=cfg.max_inner as u64 {
        let w = draw_r(from, cfg, target, rng);
        let lp_w = target.log_density(&w);
        let log_alpha = match stage {
            Stage::Down => from_log_density - lp_w,
            Stage::Up => lp_w - from_log_density,
        };
        if log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha {
            return Ok((w, lp_w, trial));
        }
    }
    Err(CoreError::BudgetExhausted {
        phase: match stage {
            Stage::Down => "downhill",
            Stage::Up => "uphill",
        },
        budget: cfg.max_inner,
    })
}

/// Build one repelling-attracting proposal from `x`: the forced downhill
/// intermediate z and the forced uphill endpoint y.
pub fn ram_propose(
    x: &State,
    x_log_density: f64,
    target: &dyn TargetModel,
    cfg: &RamConfig,
    rng: &mut RngStream,
) -> Result<RamProposal, CoreError> {
    let (z, lp_z, down_trials) = forced_move(x, x_log_density, Stage::Down, target, cfg, rng)?;
    let (y, lp_y, up_trials) = forced_move(&z, lp_z, Stage::Up, target, cfg, rng)?;
    Ok(RamProposal {
        intermediate: z,
        intermediate_log_density: lp_z,
        candidate: y,
        candidate_log_density: lp_y,
        down_trials,
        up_trials,
    })
}

/// The RAM transition kernel, carrying the auxiliary geometric trial
/// count of the current state.
#[derive(Debug, Clone)]
pub struct RamKernel {
    pub cfg: RamConfig,
    /// Trial count attached to the current state; lazily initialized by
    /// one downhill run from the initial position.
    aux_trials: Option<u64>,
}

impl RamKernel {
    pub fn new(cfg: RamConfig) -> Self {
        RamKernel {
            cfg,
            aux_trials: None,
        }
    }
}

impl TransitionKernel for RamKernel {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        // Initialize the auxiliary count for the starting state.
        if self.aux_trials.is_none() {
            match forced_move(
                &state.position,
                state.log_density,
                Stage::Down,
                target,
                &self.cfg,
                rng,
            ) {
                Ok((_, _, trials)) => self.aux_trials = Some(trials),
                Err(CoreError::BudgetExhausted { .. }) => self.aux_trials = Some(self.cfg.max_inner as u64),
                Err(e) => return Err(e),
            }
        }
        let n = self.aux_trials.expect("initialized above");

        let proposal = match ram_propose(&state.position, state.log_density, target, &self.cfg, rng)
        {
            Ok(p) => p,
            Err(CoreError::BudgetExhausted { .. }) => {
                // Abandoned proposal counts as a rejection.
                state.iteration += 1;
                return Ok(StepMeta::new(false, "ram"));
            }
            Err(e) => return Err(e),
        };
        // Fresh auxiliary count for the proposal point: one more forced
        // downhill run from y, keeping only how long it took.
        let m = match forced_move(
            &proposal.candidate,
            proposal.candidate_log_density,
            Stage::Down,
            target,
            &self.cfg,
            rng,
        ) {
            Ok((_, _, trials)) => trials,
            Err(CoreError::BudgetExhausted { .. }) => {
                state.iteration += 1;
                return Ok(StepMeta::new(false, "ram"));
            }
            Err(e) => return Err(e),
        };

        let log_alpha = proposal.candidate_log_density + (m as f64).ln()
            - state.log_density
            - (n as f64).ln();
        let accepted = log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha;
        if accepted {
            state.position = proposal.candidate;
            state.log_density = proposal.candidate_log_density;
            self.aux_trials = Some(m);
        }
        state.iteration += 1;
        Ok(StepMeta::new(accepted, "ram"))
    }

    fn tag(&self) -> &'static str {
        "ram"
    }
}

/// Convenience: fraction of a slice of 1-d states lying in the positive
/// half-line (basin bookkeeping for symmetric bimodal targets).
pub fn positive_fraction(states: &[State]) -> f64 {
    let positives = states
        .iter()
        .filter(|s| match s {
            State::Continuous(v) => v[0] > 0.0,
            State::Index(_) | State::Binary(_) => false,
        })
        .count();
    positives as f64 / states.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::run_chain;
    use crate::targets::mixture::GaussianMixture;
    use crate::targets::tabular::TabularTarget;

    struct Flat1d;
    impl TargetModel for Flat1d {
        fn space(&self) -> crate::target::Space {
            crate::target::Space::Continuous { dimension: 1 }
        }
        fn log_density(&self, _x: &State) -> f64 {
            0.0
        }
    }

    fn one_d_mixture() -> GaussianMixture {
        GaussianMixture::new(
            DVector::from_column_slice(&[-1.5]),
            DVector::from_column_slice(&[1.5]),
            0.16,
            0.16,
        )
        .unwrap()
    }

    #[test]
    fn flat_target_accepts_first_draw_in_both_stages() {
        let cfg = RamConfig::new(0.5);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..50 {
            let p = ram_propose(&State::continuous(&[0.0]), 0.0, &Flat1d, &cfg, &mut rng).unwrap();
            assert_eq!(p.down_trials, 1);
            assert_eq!(p.up_trials, 1);
        }
    }

    #[test]
    fn downhill_from_a_mode_accepts_first_draw() {
        // From the global mode every candidate has lower density, so the
        // downhill stage accepts with probability one.
        struct Gauss1;
        impl TargetModel for Gauss1 {
            fn space(&self) -> crate::target::Space {
                crate::target::Space::Continuous { dimension: 1 }
            }
            fn log_density(&self, x: &State) -> f64 {
                -0.5 * x.as_continuous().unwrap().norm_squared()
            }
        }
        let cfg = RamConfig::new(1.0);
        let mut rng = RngStream::new(2, 0);
        for _ in 0..100 {
            let p = ram_propose(&State::continuous(&[0.0]), 0.0, &Gauss1, &cfg, &mut rng).unwrap();
            assert_eq!(p.down_trials, 1);
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged_and_counts_as_rejection() {
        // Steep monotone tabular target: downhill from the bottom state
        // almost never accepts, exhausting a small budget.
        let n = 20;
        let weights: Vec<f64> = (0..n).map(|i| (2.0 * i as f64).exp()).collect();
        let target = TabularTarget::new(weights).unwrap();
        let mut cfg = RamConfig::new(1.0);
        cfg.max_inner = 3;
        cfg.index_width = 1;
        let mut kernel = RamKernel::new(cfg);
        let mut rng = RngStream::new(3, 0);
        let trace = run_chain(&target, &mut kernel, State::Index(0), 50, &mut rng).unwrap();
        // The chain survives; abandoned proposals are recorded as
        // rejections rather than errors.
        assert_eq!(trace.meta.len(), 50);
        assert!(trace.meta.iter().any(|m| !m.accepted));
    }

    #[test]
    fn ram_crosses_valleys_more_often_than_rwm_at_equal_scale() {
        // Fraction of proposals from the left basin landing in the right
        // basin, RAM vs plain RWM, same R scale.
        let m = one_d_mixture();
        let cfg = RamConfig::new(0.6);
        let mut rng = RngStream::new(4, 0);
        let x = State::continuous(&[-1.5]);
        let lp = m.log_density(&x);
        let trials = 2000;
        let mut ram_cross = 0;
        let mut rwm_cross = 0;
        for _ in 0..trials {
            if let Ok(p) = ram_propose(&x, lp, &m, &cfg, &mut rng) {
                if p.candidate.as_continuous().unwrap()[0] > 0.0 {
                    ram_cross += 1;
                }
            }
            let y = isotropic_gaussian(x.as_continuous().unwrap(), cfg.scale, &mut rng);
            if y[0] > 0.0 {
                rwm_cross += 1;
            }
        }
        assert!(
            ram_cross > rwm_cross,
            "RAM crossings {ram_cross} vs RWM {rwm_cross}"
        );
    }

    #[test]
    fn symmetric_bimodal_occupancy_is_balanced() {
        // Symmetric 1-d mixture: both modes occupied with frequency
        // 0.5 +- 0.05 over a long run.
        let m = one_d_mixture();
        let mut kernel = RamKernel::new(RamConfig::new(0.8));
        let mut rng = RngStream::new(5, 0);
        let trace = run_chain(&m, &mut kernel, State::continuous(&[-1.5]), 1_000_000, &mut rng)
            .unwrap();
        let frac = positive_fraction(&trace.states);
        assert!((frac - 0.5).abs() < 0.05, "positive fraction {frac}");
    }

    #[test]
    fn steps_are_seed_deterministic() {
        let m = one_d_mixture();
        let run = |seed| {
            let mut kernel = RamKernel::new(RamConfig::new(0.7));
            let mut rng = RngStream::new(seed, 0);
            run_chain(&m, &mut kernel, State::continuous(&[1.5]), 200, &mut rng)
                .unwrap()
                .states
        };
        assert_eq!(run(9), run(9));
    }
}

//! Parallel tempering with adaptive temperature spacing.
//!
//! One replica runs at each inverse temperature `1 = beta_1 > ... >
//! beta_L > 0`, alternating independent propagation moves at every level
//! with swap attempts between adjacent levels. Swap schedules include the
//! classical uniformly-chosen pair, the all-even / all-odd parallel
//! batches, and their deterministic alternation, which makes the swap
//! process non-reversible and moves replicas along the ladder in O(L)
//! rather than O(L^2) sweeps.
//!
//! Ladder adaptation reparameterizes the gaps between log inverse
//! temperatures as `rho_l = ln(ln beta_l - ln beta_{l+1})` and applies a
//! Robbins-Monro step on each rho toward the 0.234 swap acceptance rate,
//! so monotonicity holds by construction and the coldest level stays
//! pinned at beta = 1.

use std::io::{self, Write};

use rand::Rng;

use crate::chain::TransitionKernel;
use crate::error::CoreError;
use crate::kernels::{AdaptiveRwm, RunningCov};
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::{TargetModel, Tempered};
use crate::trace::{StepMeta, Trace};

/// Stream offset reserved for swap-move randomness (level streams use
/// offsets 0..L).
const SWAP_STREAM: u64 = 500_000;

/// Ordered inverse temperatures with per-pair adaptation state.
#[derive(Debug, Clone)]
pub struct TemperatureLadder {
    betas: Vec<f64>,
    /// Unconstrained spacing parameters: rho_l = ln(gap in log-beta).
    rho: Vec<f64>,
    /// Rolling per-pair swap acceptance (EWMA, rate 0.02).
    pub pair_acceptance: Vec<f64>,
    pub pair_attempts: Vec<u64>,
    adapt_steps: u64,
    pub decay: f64,
}

impl TemperatureLadder {
    /// Geometric ladder `beta_l = beta_min^(l/(L-1))`.
    pub fn geometric(levels: usize, beta_min: f64) -> Result<Self, CoreError> {
        if levels == 0 {
            return Err(CoreError::invalid("ladder needs at least one level"));
        }
        if levels > 1 && !(beta_min > 0.0 && beta_min < 1.0) {
            return Err(CoreError::invalid("beta_min must lie in (0, 1)"));
        }
        let betas: Vec<f64> = (0..levels)
            .map(|l| {
                if levels == 1 {
                    1.0
                } else {
                    beta_min.powf(l as f64 / (levels - 1) as f64)
                }
            })
            .collect();
        Ok(Self::from_betas(betas))
    }

    /// Build from explicit inverse temperatures (strictly decreasing,
    /// first equal to 1).
    pub fn from_betas(betas: Vec<f64>) -> Self {
        assert!(!betas.is_empty());
        assert!((betas[0] - 1.0).abs() < 1e-12, "beta_1 must be 1");
        for w in betas.windows(2) {
            assert!(w[0] > w[1] && w[1] > 0.0, "betas must strictly decrease");
        }
        let rho: Vec<f64> = betas
            .windows(2)
            .map(|w| (w[0].ln() - w[1].ln()).ln())
            .collect();
        let n_pairs = rho.len();
        TemperatureLadder {
            betas,
            rho,
            pair_acceptance: vec![0.0; n_pairs],
            pair_attempts: vec![0; n_pairs],
            adapt_steps: 0,
            decay: 0.6,
        }
    }

    pub fn levels(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn beta(&self, level: usize) -> f64 {
        self.betas[level]
    }

    fn rebuild_betas(&mut self) {
        let mut log_beta = 0.0;
        self.betas[0] = 1.0;
        for l in 0..self.rho.len() {
            log_beta -= self.rho[l].exp();
            self.betas[l + 1] = log_beta.exp();
        }
    }

    /// Robbins-Monro update of the spacing parameters from observed pair
    /// acceptances (`None` for pairs not attempted this sweep).
    pub fn adapt(&mut self, observed: &[Option<f64>]) {
        assert_eq!(observed.len(), self.rho.len());
        self.adapt_steps += 1;
        let eta = (self.adapt_steps as f64).powf(-self.decay);
        let mut touched = false;
        for (l, acc) in observed.iter().enumerate() {
            if let Some(a) = acc {
                // Acceptance above target: temperatures too close, widen
                // the gap; below target: narrow it.
                self.rho[l] += eta * (a - crate::kernels::OPTIMAL_ACCEPTANCE);
                self.pair_attempts[l] += 1;
                self.pair_acceptance[l] += 0.02 * (a - self.pair_acceptance[l]);
                touched = true;
            }
        }
        if touched {
            self.rebuild_betas();
        }
    }
}

/// Per-temperature chain states plus the replica identity labels.
/// `labels[l]` is the replica currently occupying level `l`; the labels
/// are always a permutation of `0..L`.
#[derive(Debug, Clone)]
pub struct ReplicaEnsemble {
    pub states: Vec<ChainState>,
    /// Untempered log pi of each level's state.
    pub log_pi: Vec<f64>,
    pub labels: Vec<usize>,
}

impl ReplicaEnsemble {
    pub fn new(target: &dyn TargetModel, ladder: &TemperatureLadder, init: &State) -> Self {
        let log_pi_init = target.log_density(init);
        let states = ladder
            .betas()
            .iter()
            .map(|beta| ChainState::with_log_density(init.clone(), beta * log_pi_init))
            .collect();
        ReplicaEnsemble {
            states,
            log_pi: vec![log_pi_init; ladder.levels()],
            labels: (0..ladder.levels()).collect(),
        }
    }
}

/// Symmetric Metropolis acceptance probability for swapping the states at
/// adjacent levels l (colder) and l+1 (hotter):
/// `min(1, exp[(beta_l - beta_{l+1}) (log pi_{l+1} - log pi_l)])`.
pub fn swap_acceptance(beta_l: f64, beta_lp1: f64, log_pi_l: f64, log_pi_lp1: f64) -> f64 {
    let log_alpha = (beta_l - beta_lp1) * (log_pi_lp1 - log_pi_l);
    if log_alpha >= 0.0 {
        1.0
    } else {
        log_alpha.exp()
    }
}

/// How adjacent-pair swaps are scheduled within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapSchedule {
    /// One pair per sweep, chosen uniformly from the L-1 adjacent pairs.
    UniformPair,
    /// All even pairs: (2,3), (4,5), ... in 1-based level numbering.
    Even,
    /// All odd pairs: (1,2), (3,4), ...
    Odd,
    /// Deterministic even/odd alternation keyed on the 0-based sweep
    /// index: even sweeps apply the even batch, odd sweeps the odd batch.
    DeoAlternating,
}

impl SwapSchedule {
    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "uniform-random-pair" => Ok(SwapSchedule::UniformPair),
            "even" => Ok(SwapSchedule::Even),
            "odd" => Ok(SwapSchedule::Odd),
            "deo-alternating" => Ok(SwapSchedule::DeoAlternating),
            other => Err(CoreError::invalid(format!(
                "unknown swap schedule `{other}`"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SwapSchedule::UniformPair => "uniform-random-pair",
            SwapSchedule::Even => "even",
            SwapSchedule::Odd => "odd",
            SwapSchedule::DeoAlternating => "deo-alternating",
        }
    }

    /// 0-based indices of the pairs attempted on this sweep.
    /// Pair `p` joins levels `p` and `p+1`; in 1-based level numbering
    /// that is the pair (p+1, p+2), so the "odd" batch is p = 0, 2, 4...
    pub fn pairs(self, n_pairs: usize, sweep_index: usize, rng: &mut RngStream) -> Vec<usize> {
        match self {
            SwapSchedule::UniformPair => {
                if n_pairs == 0 {
                    vec![]
                } else {
                    vec![rng.random_range(0..n_pairs)]
                }
            }
            SwapSchedule::Odd => (0..n_pairs).step_by(2).collect(),
            SwapSchedule::Even => (1..n_pairs).step_by(2).collect(),
            SwapSchedule::DeoAlternating => {
                if sweep_index % 2 == 0 {
                    SwapSchedule::Even.pairs(n_pairs, sweep_index, rng)
                } else {
                    SwapSchedule::Odd.pairs(n_pairs, sweep_index, rng)
                }
            }
        }
    }
}

/// Advance every level's chain by one kernel step against its tempered
/// target. Levels own disjoint random substreams, so the result does not
/// depend on the order in which levels are processed.
pub fn propagate<K: TransitionKernel>(
    ensemble: &mut ReplicaEnsemble,
    target: &dyn TargetModel,
    ladder: &TemperatureLadder,
    kernels: &mut [K],
    streams: &mut [RngStream],
) -> Result<Vec<StepMeta>, CoreError> {
    let mut metas = Vec::with_capacity(ensemble.states.len());
    for l in 0..ensemble.states.len() {
        let beta = ladder.beta(l);
        let tempered = Tempered::new(target, beta);
        // Refresh the tempered cache: the ladder may have moved since the
        // state was last touched.
        ensemble.states[l].log_density = beta * ensemble.log_pi[l];
        let meta = kernels[l].step(&mut ensemble.states[l], &tempered, &mut streams[l])?;
        ensemble.log_pi[l] = ensemble.states[l].log_density / beta;
        metas.push(meta);
    }
    Ok(metas)
}

/// Attempt the scheduled adjacent-pair swaps. Returns the realized
/// acceptance probability per pair (`None` where not attempted).
pub fn swap_sweep(
    ensemble: &mut ReplicaEnsemble,
    ladder: &TemperatureLadder,
    schedule: SwapSchedule,
    sweep_index: usize,
    rng: &mut RngStream,
) -> Vec<Option<f64>> {
    let n_pairs = ladder.levels().saturating_sub(1);
    let mut observed = vec![None; n_pairs];
    for p in schedule.pairs(n_pairs, sweep_index, rng) {
        let (l, h) = (p, p + 1);
        let alpha = swap_acceptance(
            ladder.beta(l),
            ladder.beta(h),
            ensemble.log_pi[l],
            ensemble.log_pi[h],
        );
        observed[p] = Some(alpha);
        if rng.random::<f64>() < alpha {
            ensemble.states.swap(l, h);
            ensemble.log_pi.swap(l, h);
            ensemble.labels.swap(l, h);
            // Re-temper the caches for their new levels.
            ensemble.states[l].log_density = ladder.beta(l) * ensemble.log_pi[l];
            ensemble.states[h].log_density = ladder.beta(h) * ensemble.log_pi[h];
        }
    }
    observed
}

/// Options for a full parallel-tempering run.
#[derive(Debug, Clone)]
pub struct PtOptions {
    pub schedule: SwapSchedule,
    pub adapt: bool,
    /// Share one proposal covariance shape across all temperatures,
    /// keeping only per-level scalar scales. Reduces adaptation
    /// parameters at the cost of shape flexibility.
    pub common_covariance: bool,
    /// Record the ladder every this many sweeps (0 = endpoints only).
    pub ladder_record_every: usize,
}

impl Default for PtOptions {
    fn default() -> Self {
        PtOptions {
            schedule: SwapSchedule::DeoAlternating,
            adapt: true,
            common_covariance: false,
            ladder_record_every: 1000,
        }
    }
}

/// Output of [`pt_run`].
pub struct PtRun {
    /// Trace of the beta = 1 chain, one state per sweep; `aux_index`
    /// holds the replica label occupying the cold level.
    pub cold_trace: Trace,
    /// Replica labels per sweep: `labels[s][l]` occupies level `l`.
    pub replica_labels: Vec<Vec<usize>>,
    pub ladder: TemperatureLadder,
    pub ladder_history: Vec<(usize, Vec<f64>)>,
    /// Per-level propagation acceptance rates.
    pub propagation_acceptance: Vec<f64>,
}

/// Run adaptive parallel tempering with per-level adaptive RWM
/// propagation kernels on a continuous target.
pub fn pt_run(
    target: &dyn TargetModel,
    mut ladder: TemperatureLadder,
    init: &State,
    n_sweeps: usize,
    options: &PtOptions,
    seed: u64,
) -> Result<PtRun, CoreError> {
    let levels = ladder.levels();
    let d = target.dimension();
    let base = RngStream::new(seed, 0);
    let mut streams: Vec<RngStream> = (0..levels as u64).map(|l| base.substream(l)).collect();
    let mut swap_stream = base.substream(SWAP_STREAM);

    let mut kernels: Vec<AdaptiveRwm> = (0..levels)
        .map(|_| {
            let mut k = AdaptiveRwm::new(d);
            if !options.adapt {
                k.freeze();
            }
            if options.common_covariance {
                k.set_adapt_covariance(false);
            }
            k
        })
        .collect();
    // Shared covariance accumulator for the common-covariance option,
    // fed by all levels and pushed into every kernel periodically.
    let mut common_cov = RunningCov::new(d);

    let mut ensemble = ReplicaEnsemble::new(target, &ladder, init);
    let mut cold_trace = Trace::with_capacity(n_sweeps);
    cold_trace.states.push(ensemble.states[0].position.clone());
    let mut replica_labels = Vec::with_capacity(n_sweeps);
    let mut ladder_history = vec![(0usize, ladder.betas().to_vec())];
    let mut accept_counts = vec![0u64; levels];

    for sweep in 0..n_sweeps {
        let metas = propagate(&mut ensemble, target, &ladder, &mut kernels, &mut streams)?;
        for (l, m) in metas.iter().enumerate() {
            if m.accepted {
                accept_counts[l] += 1;
            }
        }
        let observed = swap_sweep(&mut ensemble, &ladder, options.schedule, sweep, &mut swap_stream);
        if options.adapt && levels > 1 {
            ladder.adapt(&observed);
        }
        if options.common_covariance {
            for st in &ensemble.states {
                if let Some(v) = st.position.as_continuous() {
                    common_cov.update(v);
                }
            }
            if sweep % 200 == 199 {
                if let Some(cov) = common_cov.covariance() {
                    for k in kernels.iter_mut() {
                        k.set_shape(cov.clone())?;
                    }
                }
            }
        }
        cold_trace.states.push(ensemble.states[0].position.clone());
        cold_trace
            .meta
            .push(StepMeta::with_aux(metas[0].accepted, "pt", ensemble.labels[0]));
        replica_labels.push(ensemble.labels.clone());
        if options.ladder_record_every > 0 && (sweep + 1) % options.ladder_record_every == 0 {
            ladder_history.push((sweep + 1, ladder.betas().to_vec()));
        }
    }
    ladder_history.push((n_sweeps, ladder.betas().to_vec()));

    Ok(PtRun {
        cold_trace,
        replica_labels,
        ladder,
        ladder_history,
        propagation_acceptance: accept_counts
            .iter()
            .map(|&c| c as f64 / n_sweeps.max(1) as f64)
            .collect(),
    })
}

/// Replica-index trace CSV: `sweep,temp_level_1..L` giving replica labels.
pub fn write_replica_csv<W: Write>(labels: &[Vec<usize>], mut w: W) -> io::Result<()> {
    let levels = labels.first().map_or(0, Vec::len);
    write!(w, "sweep")?;
    for l in 1..=levels {
        write!(w, ",temp_level_{l}")?;
    }
    writeln!(w)?;
    for (sweep, row) in labels.iter().enumerate() {
        write!(w, "{sweep}")?;
        for r in row {
            write!(w, ",{r}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

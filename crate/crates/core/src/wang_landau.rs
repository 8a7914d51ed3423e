//! Generalized Wang-Landau and its parallel adaptive variant (PAWL).
//!
//! A one-dimensional reaction coordinate xi (by default the negative
//! unnormalized log-density) is binned over a range found by a pilot
//! chain. Sampling targets the biased density
//! `log pi~(x) = log pi(x) - theta(bin(xi(x)))`, where the log-bias
//! weights theta are adapted so the chain spends equal time in every bin,
//! lifting it out of the modes it would otherwise sit in. Occupancies are
//! monitored against the flat-histogram criterion; each time it is met an
//! epoch ends, the adaptation step halves, and the occupancy counters
//! reset. Post-processing undoes the bias by importance reweighting with
//! the final theta.
//!
//! PAWL runs M chains against one shared bias (pooling their occupancy
//! information) and can split histogram bins whose mass concentrates on
//! one side, growing the partition into territory the pilot never saw.

use std::io::{self, Write};

use nalgebra::DVector;

use crate::chain::TransitionKernel;
use crate::error::CoreError;
use crate::kernels::{AdaptiveRwm, IndexRandomWalk, SingleSiteFlip};
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::{Space, TargetModel};

/// Stream offset for the pilot chain; main chains use offsets 0..M.
const PILOT_STREAM: u64 = 600_000;

/// Per-bin cap on recorded reaction-coordinate values (split decisions
/// only need a large sample, not the full history).
const MAX_RECORDED_PER_BIN: usize = 200_000;

/// Choice of reaction coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionCoordinate {
    /// Negative unnormalized log-density ("energy"); the default.
    NegLogDensity,
    /// One coordinate of the state vector.
    Coordinate(usize),
}

/// Evaluate the reaction coordinate. For `NegLogDensity` a cached
/// log-density may be supplied to avoid recomputation.
pub fn reaction_coordinate(
    x: &State,
    target: &dyn TargetModel,
    rc: ReactionCoordinate,
    cached_log_density: Option<f64>,
) -> f64 {
    match rc {
        ReactionCoordinate::NegLogDensity => {
            -cached_log_density.unwrap_or_else(|| target.log_density(x))
        }
        ReactionCoordinate::Coordinate(k) => x.coords()[k],
    }
}

/// How the log-bias weights are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasUpdateRule {
    /// Stochastic approximation toward uniform occupancy:
    /// theta(j) += eta * (nu_hat(j) - 1/J), recentered to mean zero.
    StochasticApproximation,
    /// Classical per-visit increment: theta(visited) += eta.
    ClassicalVisit,
}

/// Binned log-bias over the reaction-coordinate range.
///
/// Bins are defined by strictly increasing interior cuts; the outer bins
/// absorb values beyond the nominal range (clamping, flagged). Splitting
/// a bin inserts a new cut at the within-bin empirical median, so the
/// partition can grow outward through the boundary bins.
#[derive(Debug, Clone)]
pub struct BiasPotential {
    /// Nominal range from the pilot run (reporting and clamp flags).
    pub z_min: f64,
    pub z_max: f64,
    /// Strictly increasing interior boundaries; J = cuts.len() + 1 bins.
    cuts: Vec<f64>,
    theta: Vec<f64>,
    /// Visit counts per bin within the current epoch.
    occupancy: Vec<f64>,
    /// Reaction-coordinate values recorded per bin this epoch.
    values: Vec<Vec<f64>>,
    /// Whether to keep per-bin values (needed only for splitting).
    pub record_values: bool,
    pub epoch: usize,
    pub eta: f64,
    pub update_rule: BiasUpdateRule,
    /// Set when a value outside the nominal range was binned.
    pub saw_out_of_range: bool,
    epoch_samples: u64,
}

impl BiasPotential {
    /// Equal-width bins over `[z_min, z_max]`.
    pub fn new(z_min: f64, z_max: f64, bins: usize, eta0: f64) -> Result<Self, CoreError> {
        if !(z_max > z_min) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(CoreError::DegeneratePilotRange { lo: z_min, hi: z_max });
        }
        if bins < 2 {
            return Err(CoreError::invalid("bias potential needs at least 2 bins"));
        }
        let width = (z_max - z_min) / bins as f64;
        let cuts = (1..bins).map(|k| z_min + k as f64 * width).collect();
        Ok(BiasPotential {
            z_min,
            z_max,
            cuts,
            theta: vec![0.0; bins],
            occupancy: vec![0.0; bins],
            values: vec![Vec::new(); bins],
            record_values: true,
            epoch: 0,
            eta: eta0,
            update_rule: BiasUpdateRule::StochasticApproximation,
            saw_out_of_range: false,
            epoch_samples: 0,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Directly install log-bias weights (testing and frozen-kernel use).
    pub fn set_theta(&mut self, theta: Vec<f64>) {
        assert_eq!(theta.len(), self.n_bins());
        self.theta = theta;
    }

    pub fn occupancy(&self) -> &[f64] {
        &self.occupancy
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Bin containing `z` plus a flag for values outside the nominal
    /// range (clamped into the corresponding boundary bin).
    pub fn bin_index(&self, z: f64) -> (usize, bool) {
        let idx = self.cuts.partition_point(|c| *c <= z);
        (idx, z < self.z_min || z > self.z_max)
    }

    pub fn log_bias(&self, z: f64) -> f64 {
        self.theta[self.bin_index(z).0]
    }

    /// Nominal `[lo, hi)` interval of each bin for reporting.
    pub fn bin_edges(&self) -> Vec<(f64, f64)> {
        let mut edges = Vec::with_capacity(self.n_bins());
        let mut lo = self.z_min.min(self.cuts.first().copied().unwrap_or(self.z_min));
        for &c in &self.cuts {
            edges.push((lo, c));
            lo = c;
        }
        edges.push((lo, self.z_max.max(lo)));
        edges
    }

    /// Record one visit at reaction-coordinate value `z`.
    pub fn record_visit(&mut self, z: f64) {
        let (j, clamped) = self.bin_index(z);
        self.occupancy[j] += 1.0;
        if self.record_values && self.values[j].len() < MAX_RECORDED_PER_BIN {
            self.values[j].push(z);
        }
        self.epoch_samples += 1;
        if clamped {
            self.saw_out_of_range = true;
        }
    }

    /// Bias update from the pooled current bins of all chains, followed
    /// by recentering theta to mean zero.
    pub fn update(&mut self, batch_bins: &[usize]) {
        let j = self.n_bins();
        match self.update_rule {
            BiasUpdateRule::StochasticApproximation => {
                let mut nu_hat = vec![0.0; j];
                for &b in batch_bins {
                    nu_hat[b] += 1.0 / batch_bins.len() as f64;
                }
                let uniform = 1.0 / j as f64;
                for (t, n) in self.theta.iter_mut().zip(nu_hat.iter()) {
                    *t += self.eta * (n - uniform);
                }
            }
            BiasUpdateRule::ClassicalVisit => {
                for &b in batch_bins {
                    self.theta[b] += self.eta / batch_bins.len() as f64;
                }
            }
        }
        let mean = self.theta.iter().sum::<f64>() / j as f64;
        for t in self.theta.iter_mut() {
            *t -= mean;
        }
    }

    /// Flat-histogram criterion: true iff every epoch occupancy fraction
    /// is within `c/J` of the uniform `1/J`. Requires at least J samples
    /// this epoch. On success the epoch advances: eta halves and the
    /// occupancy counters reset.
    pub fn flat_histogram(&mut self, c: f64) -> bool {
        let j = self.n_bins();
        if self.epoch_samples < j as u64 {
            return false;
        }
        let total: f64 = self.occupancy.iter().sum();
        let uniform = 1.0 / j as f64;
        let flat = self
            .occupancy
            .iter()
            .all(|&count| (count / total - uniform).abs() < c / j as f64);
        if flat {
            self.epoch += 1;
            self.eta /= 2.0;
            self.occupancy.iter_mut().for_each(|o| *o = 0.0);
            self.values.iter_mut().for_each(Vec::clear);
            self.epoch_samples = 0;
        }
        flat
    }

    /// Split any bin whose recorded mass concentrates past
    /// `mass_threshold` on one side of its midpoint, cutting at the
    /// within-bin median. Children inherit the parent's theta. Returns
    /// the number of splits performed.
    pub fn maybe_split_bins(&mut self, min_samples: usize, mass_threshold: f64) -> usize {
        let mut splits = 0;
        let mut j = 0;
        while j < self.n_bins() {
            if self.values[j].len() >= min_samples && self.try_split(j, mass_threshold) {
                splits += 1;
                j += 2;
            } else {
                j += 1;
            }
        }
        splits
    }

    fn try_split(&mut self, j: usize, mass_threshold: f64) -> bool {
        let vals = &self.values[j];
        let lo = if j == 0 { self.z_min } else { self.cuts[j - 1] };
        let hi = if j == self.n_bins() - 1 {
            self.z_max
        } else {
            self.cuts[j]
        };
        let mid = 0.5 * (lo + hi);
        let left = vals.iter().filter(|&&v| v < mid).count() as f64;
        let frac_left = left / vals.len() as f64;
        if frac_left.max(1.0 - frac_left) <= mass_threshold {
            return false;
        }
        let mut sorted = vals.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        // The new cut must keep the boundary list strictly increasing.
        let lower_ok = j == 0 || median > self.cuts[j - 1];
        let upper_ok = j == self.n_bins() - 1 || median < self.cuts[j];
        if !(lower_ok && upper_ok) {
            return false;
        }
        self.cuts.insert(j, median);
        self.theta.insert(j, self.theta[j]);
        // Replay the recorded values into the two children.
        let parent_vals = std::mem::take(&mut self.values[j]);
        let parent_occ = self.occupancy[j];
        let (left_vals, right_vals): (Vec<f64>, Vec<f64>) =
            parent_vals.into_iter().partition(|&v| v < median);
        let total = (left_vals.len() + right_vals.len()).max(1) as f64;
        let left_share = parent_occ * left_vals.len() as f64 / total;
        self.values[j] = left_vals;
        self.values.insert(j + 1, right_vals);
        self.occupancy[j] = left_share;
        self.occupancy.insert(j + 1, parent_occ - left_share);
        true
    }
}

/// Normalized importance weights proportional to
/// `exp(theta(bin(xi(x_n))))` under a frozen bias.
pub fn importance_reweight(sample_xi: &[f64], bias: &BiasPotential) -> Vec<f64> {
    let log_weights: Vec<f64> = sample_xi.iter().map(|&z| bias.log_bias(z)).collect();
    crate::numeric::normalized_exp(&log_weights)
}

/// Weighted mean of sampled states (weights summing to one).
pub fn weighted_mean(samples: &[State], weights: &[f64]) -> DVector<f64> {
    assert_eq!(samples.len(), weights.len());
    assert!(!samples.is_empty());
    let d = samples[0].coords().len();
    let mut acc = DVector::zeros(d);
    for (s, &w) in samples.iter().zip(weights.iter()) {
        acc += DVector::from_vec(s.coords()) * w;
    }
    acc
}

/// A target biased by a frozen Wang-Landau potential (reaction coordinate
/// fixed to the negative log-density). With theta frozen this is an
/// ordinary target, so the biased kernel's detailed balance can be
/// checked exactly on tabular spaces.
pub struct BiasedTarget<'a> {
    pub base: &'a dyn TargetModel,
    pub bias: &'a BiasPotential,
}

impl<'a> TargetModel for BiasedTarget<'a> {
    fn space(&self) -> Space {
        self.base.space()
    }

    fn log_density(&self, x: &State) -> f64 {
        let lp = self.base.log_density(x);
        if lp == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        lp - self.bias.log_bias(-lp)
    }

    fn flip_delta(&self, x: &[u8], site: usize) -> Option<f64> {
        let lp = self.base.log_density(&State::Binary(x.to_vec()));
        let delta = self.base.flip_delta(x, site)?;
        let lp_new = lp + delta;
        Some((lp_new - self.bias.log_bias(-lp_new)) - (lp - self.bias.log_bias(-lp)))
    }
}

/// Accept/reject for one biased Metropolis step with a symmetric
/// proposal:
/// `min{1, exp[(log pi(y) - theta(J(y))) - (log pi(x) - theta(J(x)))]}`.
pub fn wl_accept(
    log_pi_current: f64,
    log_pi_candidate: f64,
    bias: &BiasPotential,
    rng: &mut RngStream,
) -> bool {
    use rand::Rng;
    if log_pi_candidate == f64::NEG_INFINITY {
        return false;
    }
    let biased_current = log_pi_current - bias.log_bias(-log_pi_current);
    let biased_candidate = log_pi_candidate - bias.log_bias(-log_pi_candidate);
    let log_alpha = biased_candidate - biased_current;
    log_alpha >= 0.0 || rng.random::<f64>().ln() < log_alpha
}

/// PAWL configuration.
#[derive(Debug, Clone)]
pub struct PawlConfig {
    /// Number of interacting chains M.
    pub n_chains: usize,
    /// Initial histogram bin count.
    pub j_init: usize,
    /// Flat-histogram tolerance c (occupancies within c/J of uniform).
    pub flat_threshold: f64,
    /// Pilot chain length used to find the reaction-coordinate range.
    pub pilot_iters: usize,
    /// Main iterations per chain.
    pub n_iter: usize,
    pub eta0: f64,
    pub update_rule: BiasUpdateRule,
    /// Evaluate the flat-histogram criterion every this many iterations,
    /// so each epoch accumulates a meaningful occupancy sample first.
    pub flat_check_every: usize,
    /// Check for bin splits every this many iterations (0 disables).
    pub split_check_every: usize,
    pub split_min_samples: usize,
    pub split_mass_threshold: f64,
    /// Iterations (per chain) discarded before samples are recorded.
    pub burn_in: usize,
    /// Record every `thin`-th state per chain.
    pub thin: usize,
    /// Step width for tabular index walks.
    pub index_walk_width: usize,
}

impl Default for PawlConfig {
    fn default() -> Self {
        PawlConfig {
            n_chains: 4,
            j_init: 10,
            flat_threshold: 0.9,
            pilot_iters: 10_000,
            n_iter: 100_000,
            eta0: 1.0,
            update_rule: BiasUpdateRule::StochasticApproximation,
            flat_check_every: 1000,
            split_check_every: 1000,
            split_min_samples: 100,
            split_mass_threshold: 0.9,
            burn_in: 0,
            thin: 1,
            index_walk_width: 1,
        }
    }
}

/// Snapshot of the bias at an epoch boundary.
#[derive(Debug, Clone)]
pub struct BiasSnapshot {
    pub epoch: usize,
    pub eta: f64,
    pub edges: Vec<(f64, f64)>,
    pub theta: Vec<f64>,
    pub occupancy: Vec<f64>,
}

/// Output of a PAWL run.
#[derive(Debug)]
pub struct PawlRun {
    /// Post-burn-in, thinned states pooled across chains.
    pub samples: Vec<State>,
    /// Reaction-coordinate value of each recorded sample.
    pub sample_xi: Vec<f64>,
    /// Importance weights under the final bias, normalized to sum 1.
    pub weights: Vec<f64>,
    pub bias: BiasPotential,
    pub bias_history: Vec<BiasSnapshot>,
    /// Full reaction-coordinate path of every chain.
    pub xi_traces: Vec<Vec<f64>>,
    pub epochs_completed: usize,
    pub pilot_range: (f64, f64),
    /// Acceptance rate pooled over chains and iterations.
    pub acceptance_rate: f64,
}

impl PawlRun {
    /// Weighted estimate of the target mean from the reweighted samples.
    pub fn weighted_mean(&self) -> DVector<f64> {
        weighted_mean(&self.samples, &self.weights)
    }

    /// Range of reaction-coordinate values visited by any chain.
    pub fn xi_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in &self.xi_traces {
            for &z in t {
                lo = lo.min(z);
                hi = hi.max(z);
            }
        }
        (lo, hi)
    }
}

/// Local move machinery per chain: a symmetric proposal appropriate to
/// the target's space.
enum LocalMove {
    Continuous(AdaptiveRwm),
    Flip,
    Index(IndexRandomWalk),
}

/// Run the unbiased pilot chain and return its final state plus the
/// observed reaction-coordinate range.
fn run_pilot(
    target: &dyn TargetModel,
    init: &State,
    iters: usize,
    rng: &mut RngStream,
    width: usize,
) -> Result<(State, f64, f64), CoreError> {
    let mut kernel: Box<dyn TransitionKernel> = match target.space() {
        Space::Continuous { dimension } => Box::new(AdaptiveRwm::new(dimension)),
        Space::BinaryLattice { .. } => Box::new(SingleSiteFlip),
        Space::Tabular { .. } => Box::new(IndexRandomWalk::new(width)),
    };
    let mut state = ChainState::new(init.clone(), target);
    let mut lo = -state.log_density;
    let mut hi = lo;
    for _ in 0..iters {
        kernel.step(&mut state, target, rng)?;
        let xi = -state.log_density;
        lo = lo.min(xi);
        hi = hi.max(xi);
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(CoreError::DegeneratePilotRange { lo, hi });
    }
    Ok((state.position, lo, hi))
}

/// Parallel adaptive Wang-Landau: pilot range finding, M interacting
/// chains against one shared bias, flat-histogram epochs, adaptive bin
/// splitting, and importance reweighting of the output samples.
pub fn pawl_run(
    target: &dyn TargetModel,
    init: &State,
    config: &PawlConfig,
    seed: u64,
) -> Result<PawlRun, CoreError> {
    let base = RngStream::new(seed, 0);
    let mut pilot_rng = base.substream(PILOT_STREAM);
    let (pilot_state, z_lo, z_hi) = run_pilot(
        target,
        init,
        config.pilot_iters,
        &mut pilot_rng,
        config.index_walk_width,
    )?;
    let mut bias = BiasPotential::new(z_lo, z_hi, config.j_init, config.eta0)?;
    bias.update_rule = config.update_rule;
    bias.record_values = config.split_check_every > 0;

    let m = config.n_chains.max(1);
    let mut streams: Vec<RngStream> = (0..m as u64).map(|c| base.substream(c)).collect();
    let mut positions: Vec<State> = vec![pilot_state.clone(); m];
    let mut log_pi: Vec<f64> = vec![target.log_density(&pilot_state); m];
    let mut local: Vec<LocalMove> = (0..m)
        .map(|_| match target.space() {
            Space::Continuous { dimension } => LocalMove::Continuous(AdaptiveRwm::new(dimension)),
            Space::BinaryLattice { .. } => LocalMove::Flip,
            Space::Tabular { .. } => {
                LocalMove::Index(IndexRandomWalk::new(config.index_walk_width))
            }
        })
        .collect();

    let mut samples = Vec::new();
    let mut sample_xi = Vec::new();
    let mut xi_traces: Vec<Vec<f64>> = vec![Vec::with_capacity(config.n_iter); m];
    let mut bias_history = Vec::new();
    let mut current_bins = vec![0usize; m];
    let mut accepted = 0u64;
    let thin = config.thin.max(1);

    for iter in 0..config.n_iter {
        for c in 0..m {
            let rng = &mut streams[c];
            let (candidate, cand_log_pi) = match &mut local[c] {
                LocalMove::Continuous(rwm) => {
                    let x = positions[c].as_continuous().expect("continuous chain");
                    let y = rwm.propose(x, rng);
                    let cand = State::Continuous(y);
                    let lp = target.log_density(&cand);
                    (cand, lp)
                }
                LocalMove::Flip => {
                    use rand::Rng;
                    let bits = positions[c].as_binary().expect("binary chain");
                    let site = rng.random_range(0..bits.len());
                    let delta =
                        target
                            .flip_delta(bits, site)
                            .ok_or(CoreError::UnsupportedSpace {
                                space: target.space().name(),
                            })?;
                    let mut flipped = bits.to_vec();
                    flipped[site] = 1 - flipped[site];
                    (State::Binary(flipped), log_pi[c] + delta)
                }
                LocalMove::Index(walk) => {
                    use rand::Rng;
                    let i = positions[c].as_index().expect("tabular chain") as isize;
                    let k = rng.random_range(1..=walk.width) as isize;
                    let dir: bool = rng.random();
                    let j = i + if dir { k } else { -k };
                    let cand = if j < 0 {
                        State::Index(usize::MAX)
                    } else {
                        State::Index(j as usize)
                    };
                    let lp = target.log_density(&cand);
                    (cand, lp)
                }
            };
            let accept = wl_accept(log_pi[c], cand_log_pi, &bias, rng);
            if accept {
                positions[c] = candidate;
                log_pi[c] = cand_log_pi;
                accepted += 1;
            }
            if let LocalMove::Continuous(rwm) = &mut local[c] {
                let x = positions[c]
                    .as_continuous()
                    .expect("continuous chain")
                    .clone();
                rwm.adapt(accept, &x)?;
            }
            let xi = -log_pi[c];
            xi_traces[c].push(xi);
            bias.record_visit(xi);
            current_bins[c] = bias.bin_index(xi).0;
            if iter >= config.burn_in && (iter - config.burn_in) % thin == 0 {
                samples.push(positions[c].clone());
                sample_xi.push(xi);
            }
        }
        bias.update(&current_bins);
        if (iter + 1) % config.flat_check_every.max(1) == 0
            && bias.flat_histogram(config.flat_threshold)
        {
            bias_history.push(BiasSnapshot {
                epoch: bias.epoch,
                eta: bias.eta,
                edges: bias.bin_edges(),
                theta: bias.theta().to_vec(),
                occupancy: bias.occupancy().to_vec(),
            });
        }
        if config.split_check_every > 0 && (iter + 1) % config.split_check_every == 0 {
            bias.maybe_split_bins(config.split_min_samples, config.split_mass_threshold);
        }
    }

    let weights = importance_reweight(&sample_xi, &bias);
    bias_history.push(BiasSnapshot {
        epoch: bias.epoch,
        eta: bias.eta,
        edges: bias.bin_edges(),
        theta: bias.theta().to_vec(),
        occupancy: bias.occupancy().to_vec(),
    });
    Ok(PawlRun {
        samples,
        sample_xi,
        weights,
        epochs_completed: bias.epoch,
        bias_history,
        xi_traces,
        pilot_range: (z_lo, z_hi),
        acceptance_rate: accepted as f64 / (config.n_iter.max(1) * m) as f64,
        bias,
    })
}

/// Bias history CSV: `epoch,eta,bin_lo,bin_hi,theta,occupancy`.
pub fn write_bias_csv<W: Write>(history: &[BiasSnapshot], mut w: W) -> io::Result<()> {
    writeln!(w, "epoch,eta,bin_lo,bin_hi,theta,occupancy")?;
    for snap in history {
        for ((lo, hi), (theta, occ)) in snap
            .edges
            .iter()
            .zip(snap.theta.iter().zip(snap.occupancy.iter()))
        {
            writeln!(w, "{},{},{lo},{hi},{theta},{occ}", snap.epoch, snap.eta)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::autologistic::{Autologistic, AutologisticParams};
    use crate::targets::mixture::GaussianMixture;
    use crate::targets::tabular::TabularTarget;
    use approx::assert_relative_eq;

    fn flat_bias(bins: usize) -> BiasPotential {
        BiasPotential::new(0.0, 10.0, bins, 1.0).unwrap()
    }

    #[test]
    fn reaction_coordinate_variants() {
        let mixture = GaussianMixture::benchmark(2);
        let m2 = State::continuous(&[1.0, 1.0]);
        let valley = State::continuous(&[0.0, 0.0]);
        // The mode has lower energy than the valley.
        let xi_mode = reaction_coordinate(&m2, &mixture, ReactionCoordinate::NegLogDensity, None);
        let xi_valley =
            reaction_coordinate(&valley, &mixture, ReactionCoordinate::NegLogDensity, None);
        assert!(xi_mode < xi_valley);
        assert_relative_eq!(
            reaction_coordinate(&m2, &mixture, ReactionCoordinate::Coordinate(1), None),
            1.0
        );
    }

    #[test]
    fn autologistic_energy_is_negative_suff_stat_combination() {
        let p = AutologisticParams::new(2, 2, vec![1; 4], 1.0, 0.7).unwrap();
        let target = Autologistic::new(p);
        let x = State::Binary(vec![1, 1, 1, 1]);
        let xi = reaction_coordinate(&x, &target, ReactionCoordinate::NegLogDensity, None);
        // s1 = 4, s2 = 6 for this configuration.
        assert_relative_eq!(xi, -(1.0 * 4.0 + 0.7 * 6.0), epsilon = 1e-12);
    }

    #[test]
    fn bin_index_examples() {
        let bias = flat_bias(10);
        // z = z_min lands in the first bin.
        assert_eq!(bias.bin_index(0.0), (0, false));
        // Ten equal bins on [0,10]: z = 3.5 is in 0-based bin 3, i.e. the
        // fourth bin.
        assert_eq!(bias.bin_index(3.5), (3, false));
        // Beyond the ends: clamped into the boundary bins, flagged.
        assert_eq!(bias.bin_index(12.0), (9, true));
        assert_eq!(bias.bin_index(-1.0), (0, true));
    }

    #[test]
    fn update_bias_arithmetic() {
        // Two bins, only bin 0 occupied, eta = 0.1: theta moves by
        // (+0.05, -0.05) after recentering.
        let mut bias = BiasPotential::new(0.0, 2.0, 2, 0.1).unwrap();
        bias.update(&[0]);
        assert_relative_eq!(bias.theta()[0], 0.05, epsilon = 1e-12);
        assert_relative_eq!(bias.theta()[1], -0.05, epsilon = 1e-12);
    }

    #[test]
    fn uniform_batch_leaves_theta_unchanged() {
        let mut bias = flat_bias(4);
        bias.update(&[0, 1, 2, 3]);
        for &t in bias.theta() {
            assert_relative_eq!(t, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn repeated_single_bin_visits_raise_its_theta() {
        let mut bias = flat_bias(3);
        for _ in 0..10 {
            bias.update(&[1]);
        }
        assert!(bias.theta()[1] > bias.theta()[0]);
        assert!(bias.theta()[1] > bias.theta()[2]);
    }

    #[test]
    fn flat_histogram_examples() {
        // One empty bin out of 10 with c = 0.9: |0 - 0.1| = 0.1 > 0.09.
        let mut bias = flat_bias(10);
        for j in 0..9 {
            for _ in 0..10 {
                bias.record_visit(j as f64 + 0.5);
            }
        }
        assert!(!bias.flat_histogram(0.9));
        // Two bins at (0.55, 0.45) with c = 0.2: |0.05| < 0.1 passes.
        let mut b2 = BiasPotential::new(0.0, 2.0, 2, 1.0).unwrap();
        for _ in 0..55 {
            b2.record_visit(0.5);
        }
        for _ in 0..45 {
            b2.record_visit(1.5);
        }
        assert!(b2.flat_histogram(0.2));
        assert_eq!(b2.epoch, 1);
        assert_relative_eq!(b2.eta, 0.5);
        assert!(b2.occupancy().iter().all(|&o| o == 0.0));
        // Exactly uniform occupancy passes for any positive c.
        let mut b3 = BiasPotential::new(0.0, 2.0, 2, 1.0).unwrap();
        for _ in 0..50 {
            b3.record_visit(0.5);
            b3.record_visit(1.5);
        }
        assert!(b3.flat_histogram(1e-6));
    }

    #[test]
    fn eta_halves_exactly_per_epoch() {
        let mut bias = BiasPotential::new(0.0, 2.0, 2, 1.0).unwrap();
        for epoch in 1..=4 {
            for _ in 0..10 {
                bias.record_visit(0.5);
                bias.record_visit(1.5);
            }
            assert!(bias.flat_histogram(0.9));
            assert_relative_eq!(bias.eta, 0.5f64.powi(epoch));
        }
    }

    #[test]
    fn split_triggers_only_on_lopsided_bins() {
        // Values spread evenly within the bin: no split.
        let mut bias = flat_bias(2);
        for i in 0..200 {
            bias.record_visit(i as f64 * 5.0 / 200.0);
        }
        assert_eq!(bias.maybe_split_bins(100, 0.9), 0);
        // All mass hugging the left edge: split at the median.
        let mut lop = flat_bias(2);
        for i in 0..200 {
            lop.record_visit(i as f64 * 0.001);
        }
        assert_eq!(lop.maybe_split_bins(100, 0.9), 1);
        assert_eq!(lop.n_bins(), 3);
        // Cuts remain strictly increasing.
        for w in lop.cuts().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn boundary_bin_split_extends_past_nominal_range() {
        let mut bias = flat_bias(2);
        // Values beyond z_max = 10 clamp into the top bin.
        for i in 0..300 {
            bias.record_visit(15.0 + i as f64 * 0.01);
        }
        assert!(bias.saw_out_of_range);
        let n_before = bias.n_bins();
        let splits = bias.maybe_split_bins(100, 0.9);
        assert!(splits >= 1, "boundary bin should split");
        assert_eq!(bias.n_bins(), n_before + splits);
        // The new cut lies beyond the nominal range.
        assert!(bias.cuts().iter().any(|&c| c > 10.0));
    }

    #[test]
    fn uniform_theta_reduces_to_plain_metropolis() {
        // With theta identically zero the biased acceptance equals the
        // plain MH acceptance, so decisions driven by the same stream
        // coincide.
        let bias = flat_bias(5);
        let mut r1 = RngStream::new(42, 0);
        let mut r2 = RngStream::new(42, 0);
        for (lp_x, lp_y) in [(-1.0, -2.0), (-3.0, -0.5), (-2.0, -2.0), (-0.1, -4.0)] {
            use rand::Rng;
            let wl = wl_accept(lp_x, lp_y, &bias, &mut r1);
            let log_alpha: f64 = lp_y - lp_x;
            let plain = log_alpha >= 0.0 || r2.random::<f64>().ln() < log_alpha;
            assert_eq!(wl, plain);
        }
    }

    #[test]
    fn same_bin_acceptance_equals_plain_mh() {
        let mut bias = flat_bias(2);
        bias.set_theta(vec![3.0, -3.0]);
        let mut r1 = RngStream::new(4, 0);
        let mut r2 = RngStream::new(4, 0);
        // Both xi values in bin 0 (xi < 5): theta cancels.
        use rand::Rng;
        let wl = wl_accept(-1.0, -2.5, &bias, &mut r1);
        let plain = r2.random::<f64>().ln() < -1.5;
        assert_eq!(wl, plain);
    }

    #[test]
    fn exact_theta_cancellation_always_accepts() {
        // theta(J(y)) - theta(J(x)) = log pi(y) - log pi(x) makes the
        // biased ratio exactly zero, so every proposal is accepted.
        let mut bias = BiasPotential::new(0.0, 4.0, 2, 1.0).unwrap();
        // Bins [0,2) and [2,4]: xi(x) = 1 -> bin 0, xi(y) = 3 -> bin 1.
        let lp_x = -1.0;
        let lp_y = -3.0;
        bias.set_theta(vec![0.0, lp_y - lp_x]);
        let mut rng = RngStream::new(9, 0);
        for _ in 0..100 {
            assert!(wl_accept(lp_x, lp_y, &bias, &mut rng));
        }
    }

    #[test]
    fn importance_weights_normalize_and_flatten() {
        let bias = flat_bias(4);
        let xi = [0.5, 3.0, 7.0, 9.9];
        let w = importance_reweight(&xi, &bias);
        assert_relative_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for &wi in &w {
            assert_relative_eq!(wi, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn pawl_is_seed_deterministic_with_multiple_chains() {
        let target = TabularTarget::new(vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let config = PawlConfig {
            n_chains: 3,
            j_init: 3,
            pilot_iters: 200,
            n_iter: 500,
            split_check_every: 0,
            ..PawlConfig::default()
        };
        let a = pawl_run(&target, &State::Index(0), &config, 7).unwrap();
        let b = pawl_run(&target, &State::Index(0), &config, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.epochs_completed, b.epochs_completed);
    }

    #[test]
    fn degenerate_pilot_errors() {
        // A flat tabular target has constant xi.
        let target = TabularTarget::new(vec![0.25; 4]).unwrap();
        let config = PawlConfig {
            pilot_iters: 100,
            ..PawlConfig::default()
        };
        let err = pawl_run(&target, &State::Index(0), &config, 1).unwrap_err();
        assert!(matches!(err, CoreError::DegeneratePilotRange { .. }));
    }

    #[test]
    fn paper_shape_configs_accepted() {
        // Ising shape: J = 10 bins, M = 10 chains, 1e6 iterations.
        let c1 = PawlConfig {
            n_chains: 10,
            j_init: 10,
            n_iter: 1_000_000,
            ..PawlConfig::default()
        };
        assert_eq!((c1.n_chains, c1.j_init, c1.n_iter), (10, 10, 1_000_000));
        // Mixture shape: 50k pilot + 500k main iterations, J = 10.
        let c2 = PawlConfig {
            pilot_iters: 50_000,
            n_iter: 500_000,
            j_init: 10,
            ..PawlConfig::default()
        };
        assert_eq!((c2.pilot_iters, c2.n_iter, c2.j_init), (50_000, 500_000, 10));
    }

    #[test]
    fn tabular_bimodal_weighted_mean_matches_exact() {
        // 16-state bimodal target with tent-shaped energies (levels
        // spaced ~1.1 so every bin stays reachable) and a linear tilt
        // separating the two modes' heights. The exact table is the
        // oracle for the weighted-mean estimate.
        let mut weights = Vec::new();
        for i in 0..16i64 {
            let dist = (i - 5).abs().min((i - 10).abs()) as f64;
            let xi = 1.1 * dist + 0.05 * i as f64;
            weights.push((-xi).exp());
        }
        let target = TabularTarget::new(weights).unwrap();
        let exact_mean: f64 = target
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * p)
            .sum();
        // 1e6 WL steps in total: 4 chains of 250k.
        let config = PawlConfig {
            n_chains: 4,
            j_init: 4,
            pilot_iters: 5_000,
            flat_threshold: 0.3,
            n_iter: 250_000,
            burn_in: 50_000,
            split_check_every: 0,
            index_walk_width: 2,
            ..PawlConfig::default()
        };
        let run = pawl_run(&target, &State::Index(5), &config, 23).unwrap();
        let est = run.weighted_mean()[0];
        assert!(
            (est - exact_mean).abs() < 0.02,
            "weighted mean {est} vs exact {exact_mean}"
        );
        assert!(run.epochs_completed >= 2, "epochs {}", run.epochs_completed);
    }
}

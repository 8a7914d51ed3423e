//! Multimodal MCMC toolkit.
//!
//! Samplers built here share three pieces of machinery: a [`TargetModel`]
//! abstraction over continuous, binary-lattice, and tabular state spaces;
//! seeded, stream-splittable random number generation ([`RngStream`]); and
//! a [`Trace`] record of chain output with per-iteration metadata.
//!
//! On top of that sit the multimodal samplers themselves:
//!
//! * [`kernels`] - adaptive random-walk Metropolis, single-site Gibbs for
//!   binary lattices, and the Metropolized independence (jump) sampler.
//! * [`tempering`] - parallel tempering with reversible and deterministic
//!   even/odd swap schedules and adaptive temperature spacing.
//! * [`wang_landau`] - generalized Wang-Landau / PAWL with flat-histogram
//!   epochs, adaptive bin splitting, and importance reweighting.
//! * [`mode_jump`] - multistart gradient ascent for mode discovery, the
//!   jumping adaptive multimodal sampler (JAMS) on an augmented target,
//!   and the repelling-attracting Metropolis (RAM) kernel.
//!
//! The [`diagnostics`] module provides exact small-space oracles
//! (transition matrices, spectral gaps, conductance, Cheeger margins) used
//! throughout the test suite to verify the samplers against enumerable
//! ground truth, plus the sampling metrics (RMSE/sqrt(d), total variation,
//! round-trip rates) used by the benchmark harness.

pub mod chain;
pub mod diagnostics;
pub mod kernels;
pub mod mode_jump;
pub mod numeric;
pub mod rng;
pub mod state;
pub mod target;
pub mod targets;
pub mod tempering;
pub mod trace;
pub mod wang_landau;

mod error;

pub use chain::{ergodic_average, mh_step, run_chain, ChainRunError, TransitionKernel};
pub use error::CoreError;
pub use rng::RngStream;
pub use state::{ChainState, State};
pub use target::{Space, TargetModel};
pub use trace::{StepMeta, Trace};

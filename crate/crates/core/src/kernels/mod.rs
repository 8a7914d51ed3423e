//! Local and jump proposal kernels.

pub mod gibbs;
pub mod jump;
pub mod rwm;
pub mod walk;

pub use gibbs::{gibbs_site_step, GibbsSweep, SingleSiteFlip};
pub use jump::{IndependenceJump, JumpProposal};
pub use rwm::{AdaptiveRwm, RunningCov, ScaleAdapter, OPTIMAL_ACCEPTANCE};
pub use walk::IndexRandomWalk;

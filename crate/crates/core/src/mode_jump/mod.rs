//! Mode discovery and mode-jumping samplers.
//!
//! Multistart gradient ascent locates the local maxima of a differentiable
//! target and summarizes their geometry into a [`ModeAtlas`]. JAMS then
//! samples an augmented distribution over (state, mode index), mixing
//! mode-local adaptive random-walk moves with deterministic affine jumps
//! between mode frames. The repelling-attracting Metropolis kernel takes
//! the opposite approach: no atlas at all, just a two-stage proposal
//! forced first downhill into the valley and then uphill the other side.

mod ascent;
mod jams;
mod ram;

pub use ascent::{find_modes, gradient_ascent, AscentConfig, AscentResult};
pub use jams::{
    jams_augmented_logdensity, jams_run, JamsConfig, JamsRun, JamsSampler, JamsState,
    KernelFamily, ModeAtlas, ModeComponent,
};
pub use ram::{ram_propose, RamConfig, RamKernel, RamProposal};

//! Single-site samplers for binary-lattice targets: systematic-scan Gibbs
//! and single-site-flip Metropolis.

use rand::Rng;

use crate::chain::TransitionKernel;
use crate::error::CoreError;
use crate::rng::RngStream;
use crate::state::{ChainState, State};
use crate::target::TargetModel;
use crate::trace::StepMeta;

/// Resample one site from its full conditional; all other sites unchanged.
pub fn gibbs_site_step(
    x: &mut Vec<u8>,
    site: usize,
    target: &dyn TargetModel,
    rng: &mut RngStream,
) -> Result<(), CoreError> {
    let p1 = target
        .binary_site_conditional(x, site)
        .ok_or(CoreError::UnsupportedSpace {
            space: target.space().name(),
        })?;
    x[site] = u8::from(rng.random::<f64>() < p1);
    Ok(())
}

/// Systematic sweep over all sites; one kernel step is one full sweep.
#[derive(Debug, Clone, Default)]
pub struct GibbsSweep;

impl TransitionKernel for GibbsSweep {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        let mut bits = match &state.position {
            State::Binary(b) => b.clone(),
            _ => {
                return Err(CoreError::UnsupportedSpace {
                    space: target.space().name(),
                })
            }
        };
        for site in 0..bits.len() {
            gibbs_site_step(&mut bits, site, target, rng)?;
        }
        state.position = State::Binary(bits);
        state.log_density = target.log_density(&state.position);
        state.iteration += 1;
        // Gibbs draws are always "accepted".
        Ok(StepMeta::new(true, "gibbs"))
    }

    fn tag(&self) -> &'static str {
        "gibbs"
    }
}

/// Metropolis kernel proposing a flip of one uniformly chosen site.
///
/// The flip proposal is symmetric, so acceptance is `min(1, exp(delta))`
/// with `delta` supplied incrementally by the target.
#[derive(Debug, Clone, Default)]
pub struct SingleSiteFlip;

impl TransitionKernel for SingleSiteFlip {
    fn step(
        &mut self,
        state: &mut ChainState,
        target: &dyn TargetModel,
        rng: &mut RngStream,
    ) -> Result<StepMeta, CoreError> {
        let bits = match &mut state.position {
            State::Binary(b) => b,
            _ => {
                return Err(CoreError::UnsupportedSpace {
                    space: target.space().name(),
                })
            }
        };
        let site = rng.random_range(0..bits.len());
        let delta = target
            .flip_delta(bits, site)
            .ok_or(CoreError::UnsupportedSpace {
                space: target.space().name(),
            })?;
        let accepted = delta >= 0.0 || rng.random::<f64>().ln() < delta;
        if accepted {
            bits[site] = 1 - bits[site];
            state.log_density += delta;
        }
        state.iteration += 1;
        Ok(StepMeta::with_aux(accepted, "flip", site))
    }

    fn tag(&self) -> &'static str {
        "flip"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::autologistic::{Autologistic, AutologisticParams};

    #[test]
    fn zero_parameters_give_fair_coin() {
        let p = AutologisticParams::new(1, 2, vec![1, 0], 0.0, 0.0).unwrap();
        let target = Autologistic::new(p);
        let mut rng = RngStream::new(3, 0);
        let mut ones = 0usize;
        let n = 20_000;
        for _ in 0..n {
            let mut x = vec![0u8, 0u8];
            gibbs_site_step(&mut x, 0, &target, &mut rng).unwrap();
            ones += x[0] as usize;
        }
        let rate = ones as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((rate - 0.5).abs() < 4.0 * se, "rate {rate}");
    }

    #[test]
    fn flip_delta_agrees_with_full_recount() {
        let p = AutologisticParams::new(2, 3, vec![1, 0, 1, 1, 0, 0], 1.0, 0.7).unwrap();
        let target = Autologistic::new(p);
        for k in 0..64usize {
            let x: Vec<u8> = (0..6).map(|i| ((k >> i) & 1) as u8).collect();
            for site in 0..6 {
                let mut flipped = x.clone();
                flipped[site] = 1 - flipped[site];
                let full = target.log_density(&State::Binary(flipped))
                    - target.log_density(&State::Binary(x.clone()));
                let fast = target.flip_delta(&x, site).unwrap();
                assert!((full - fast).abs() < 1e-12);
            }
        }
    }
}

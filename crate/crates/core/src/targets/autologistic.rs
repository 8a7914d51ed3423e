//! Autologistic (Ising-type) binary image model with an 8-neighborhood.
//!
//! The unnormalized log-density of a configuration `x` given the observed
//! image `y` is `alpha * s1(x,y) + beta * s2(x)`, where `s1` counts sites
//! on which `x` agrees with `y` and `s2` counts identical neighbor pairs.
//! Boundary sites keep only their in-lattice neighbors (no wrap-around),
//! so corners have 3 neighbors and non-corner edge sites 5.

use crate::error::CoreError;
use crate::state::State;
use crate::target::{Space, TargetModel};
use crate::targets::tabular::TabularTarget;

/// Model parameters plus the precomputed neighbor-pair list.
#[derive(Debug, Clone)]
pub struct AutologisticParams {
    pub height: usize,
    pub width: usize,
    pub observed: Vec<u8>,
    pub alpha: f64,
    pub beta: f64,
    /// Each unordered 8-neighborhood pair appears exactly once.
    pairs: Vec<(usize, usize)>,
    /// Per-site neighbor lists, for single-site conditionals.
    neighbors: Vec<Vec<usize>>,
}

impl AutologisticParams {
    pub fn new(
        height: usize,
        width: usize,
        observed: Vec<u8>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self, CoreError> {
        if observed.len() != height * width {
            return Err(CoreError::DimensionMismatch {
                expected: height * width,
                got: observed.len(),
            });
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(CoreError::invalid("autologistic parameters must be non-negative"));
        }
        let (pairs, neighbors) = eight_neighborhood(height, width);
        Ok(AutologisticParams {
            height,
            width,
            observed,
            alpha,
            beta,
            pairs,
            neighbors,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.height * self.width
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }
}

fn eight_neighborhood(h: usize, w: usize) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let idx = |r: usize, c: usize| r * w + c;
    let mut pairs = Vec::new();
    let mut neighbors = vec![Vec::new(); h * w];
    // Forward offsets only, so each unordered pair is emitted once:
    // east, south-west, south, south-east.
    let offsets: [(isize, isize); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
    for r in 0..h {
        for c in 0..w {
            for (dr, dc) in offsets {
                let nr = r as isize + dr;
                let nc = c as isize + dc;
                if nr >= 0 && nr < h as isize && nc >= 0 && nc < w as isize {
                    let a = idx(r, c);
                    let b = idx(nr as usize, nc as usize);
                    pairs.push((a, b));
                    neighbors[a].push(b);
                    neighbors[b].push(a);
                }
            }
        }
    }
    (pairs, neighbors)
}

/// Sufficient statistics `(s1, s2)`: agreement-with-observed count and
/// identical-neighbor-pair count.
pub fn sufficient_statistics(x: &[u8], p: &AutologisticParams) -> Result<(usize, usize), CoreError> {
    if x.len() != p.n_sites() {
        return Err(CoreError::DimensionMismatch {
            expected: p.n_sites(),
            got: x.len(),
        });
    }
    let s1 = x
        .iter()
        .zip(p.observed.iter())
        .filter(|(a, b)| a == b)
        .count();
    let s2 = p.pairs.iter().filter(|(a, b)| x[*a] == x[*b]).count();
    Ok((s1, s2))
}

/// Unnormalized log-density `alpha*s1 + beta*s2`.
pub fn log_density_unnormalized(x: &[u8], p: &AutologisticParams) -> Result<f64, CoreError> {
    let (s1, s2) = sufficient_statistics(x, p)?;
    Ok(p.alpha * s1 as f64 + p.beta * s2 as f64)
}

/// Probability that site `i` equals 1 given all other sites.
///
/// Logistic of `alpha*(d(1,y_i)-d(0,y_i)) + beta*sum_j (d(1,x_j)-d(0,x_j))`
/// over neighbors `j` of `i`.
pub fn site_conditional(x: &[u8], site: usize, p: &AutologisticParams) -> f64 {
    let obs_term = if p.observed[site] == 1 { p.alpha } else { -p.alpha };
    let mut neigh = 0.0;
    for &j in p.neighbors(site).iter() {
        neigh += if x[j] == 1 { 1.0 } else { -1.0 };
    }
    let logit = obs_term + p.beta * neigh;
    1.0 / (1.0 + (-logit).exp())
}

/// The autologistic model as a sampler target over binary lattices.
#[derive(Debug, Clone)]
pub struct Autologistic {
    pub params: AutologisticParams,
}

impl Autologistic {
    pub fn new(params: AutologisticParams) -> Self {
        Autologistic { params }
    }

    /// Exact normalized table over all 2^n configurations; only feasible
    /// for small lattices. Configuration bits are packed little-endian:
    /// state index `k` has site `i` equal to bit `i` of `k`.
    pub fn brute_force_table(&self) -> Result<TabularTarget, CoreError> {
        let n = self.params.n_sites();
        if n > 20 {
            return Err(CoreError::invalid("brute-force table limited to 20 sites"));
        }
        let mut log_weights = Vec::with_capacity(1 << n);
        let mut x = vec![0u8; n];
        for k in 0..(1usize << n) {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = ((k >> i) & 1) as u8;
            }
            log_weights.push(log_density_unnormalized(&x, &self.params)?);
        }
        TabularTarget::from_log_weights(&log_weights)
    }

    pub fn state_to_index(x: &[u8]) -> usize {
        x.iter()
            .enumerate()
            .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i))
    }
}

impl TargetModel for Autologistic {
    fn space(&self) -> Space {
        Space::BinaryLattice {
            height: self.params.height,
            width: self.params.width,
        }
    }

    fn log_density(&self, x: &State) -> f64 {
        match x.as_binary() {
            Some(bits) if bits.len() == self.params.n_sites() => {
                log_density_unnormalized(bits, &self.params).unwrap_or(f64::NEG_INFINITY)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    fn flip_delta(&self, x: &[u8], site: usize) -> Option<f64> {
        let p = &self.params;
        let old = x[site];
        let new = 1 - old;
        let d = |a: u8, b: u8| if a == b { 1.0 } else { 0.0 };
        let mut delta = p.alpha * (d(new, p.observed[site]) - d(old, p.observed[site]));
        for &j in p.neighbors(site) {
            delta += p.beta * (d(new, x[j]) - d(old, x[j]));
        }
        Some(delta)
    }

    fn binary_site_conditional(&self, x: &[u8], site: usize) -> Option<f64> {
        Some(site_conditional(x, site, &self.params))
    }
}

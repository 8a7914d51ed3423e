//! Finite enumerated targets: the substrate for exact-kernel oracles.

use crate::error::CoreError;
use crate::state::State;
use crate::target::{Space, TargetModel};

/// A normalized probability table over `n` states, optionally with a
/// neighbor structure for local proposals.
#[derive(Debug, Clone)]
pub struct TabularTarget {
    probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
    /// Explicit neighbor lists; `None` means the default +-k index walk.
    pub adjacency: Option<Vec<Vec<usize>>>,
}

impl TabularTarget {
    /// Build from positive weights; normalizes to sum 1.
    pub fn new(weights: Vec<f64>) -> Result<Self, CoreError> {
        if weights.len() < 2 {
            return Err(CoreError::invalid("tabular target needs at least 2 states"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(CoreError::invalid(
                "tabular weights must be finite and strictly positive",
            ));
        }
        let z: f64 = weights.iter().sum();
        let probabilities: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let log_probabilities = probabilities.iter().map(|p| p.ln()).collect();
        Ok(TabularTarget {
            probabilities,
            log_probabilities,
            adjacency: None,
        })
    }

    /// Build from unnormalized log-weights.
    pub fn from_log_weights(log_weights: &[f64]) -> Result<Self, CoreError> {
        let probs = crate::numeric::normalized_exp(log_weights);
        TabularTarget::new(probs)
    }

    pub fn n_states(&self) -> usize {
        self.probabilities.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_probability(&self, i: usize) -> f64 {
        self.log_probabilities[i]
    }
}

impl TargetModel for TabularTarget {
    fn space(&self) -> Space {
        Space::Tabular {
            n: self.probabilities.len(),
        }
    }

    fn log_density(&self, x: &State) -> f64 {
        match x {
            State::Index(i) if *i < self.probabilities.len() => self.log_probabilities[*i],
            State::Index(_) => f64::NEG_INFINITY,
            _ => f64::NEG_INFINITY,
        }
    }

    fn exact_table(&self) -> Option<Vec<f64>> {
        Some(self.probabilities.clone())
    }
}

/// Empirical distribution of tabular states in a slice.
pub fn empirical_distribution(states: &[State], n: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for s in states {
        if let State::Index(i) = s {
            counts[*i] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        for c in counts.iter_mut() {
            *c /= total;
        }
    }
    counts
}

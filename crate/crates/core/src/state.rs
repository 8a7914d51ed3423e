//! Chain states over continuous, binary-lattice, and tabular spaces.

use nalgebra::DVector;

use crate::target::TargetModel;

/// A point in one of the three supported state spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    /// Point in R^d.
    Continuous(DVector<f64>),
    /// Binary configuration over a lattice, one byte (0/1) per site.
    Binary(Vec<u8>),
    /// Index into a finite enumerated space.
    Index(usize),
}

impl State {
    pub fn continuous(xs: &[f64]) -> Self {
        State::Continuous(DVector::from_column_slice(xs))
    }

    pub fn as_continuous(&self) -> Option<&DVector<f64>> {
        match self {
            State::Continuous(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_binary(&self) -> Option<&[u8]> {
        match self {
            State::Binary(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_index(&self) -> Option<usize> {
        match self {
            State::Index(i) => Some(*i),
            _ => None,
        }
    }

    /// Coordinates as f64s, for traces and ergodic averages.
    /// Tabular states expose their index as a single coordinate.
    pub fn coords(&self) -> Vec<f64> {
        match self {
            State::Continuous(v) => v.iter().copied().collect(),
            State::Binary(b) => b.iter().map(|&x| f64::from(x)).collect(),
            State::Index(i) => vec![*i as f64],
        }
    }
}

/// A chain position together with its cached unnormalized log-density.
///
/// The cache is an invariant: it always equals `target.log_density(&position)`
/// for the target the chain is running on.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub position: State,
    pub log_density: f64,
    pub iteration: usize,
}

impl ChainState {
    pub fn new(position: State, target: &dyn TargetModel) -> Self {
        let log_density = target.log_density(&position);
        ChainState {
            position,
            log_density,
            iteration: 0,
        }
    }

    pub fn with_log_density(position: State, log_density: f64) -> Self {
        ChainState {
            position,
            log_density,
            iteration: 0,
        }
    }
}

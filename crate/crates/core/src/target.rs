//! The target-model interface shared by all samplers.

use nalgebra::DVector;

use crate::state::State;

/// The kind of state space a target is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// R^d.
    Continuous { dimension: usize },
    /// {0,1}^(h*w) over an h-by-w lattice.
    BinaryLattice { height: usize, width: usize },
    /// Finite enumerated space with `n` states.
    Tabular { n: usize },
}

impl Space {
    pub fn dimension(&self) -> usize {
        match self {
            Space::Continuous { dimension } => *dimension,
            Space::BinaryLattice { height, width } => height * width,
            Space::Tabular { .. } => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Continuous { .. } => "continuous",
            Space::BinaryLattice { .. } => "binary-lattice",
            Space::Tabular { .. } => "tabular",
        }
    }
}

/// An unnormalized log-density over one of the supported state spaces.
///
/// `log_density` must be finite on every representable in-support state and
/// return `f64::NEG_INFINITY` for out-of-support states. Normalizing
/// constants are never required: acceptance ratios only use differences of
/// log-densities. Tabular targets additionally expose their exact
/// normalized probability table so samplers can be validated against
/// enumerable ground truth.
pub trait TargetModel: Sync {
    fn space(&self) -> Space;

    fn log_density(&self, x: &State) -> f64;

    /// Gradient of the log-density, for continuous differentiable targets.
    fn gradient(&self, _x: &State) -> Option<DVector<f64>> {
        None
    }

    /// Exact normalized probabilities, tabular spaces only.
    fn exact_table(&self) -> Option<Vec<f64>> {
        None
    }

    /// Change in log-density from flipping `site` of a binary state.
    /// Lattice targets implement this in O(neighborhood) so single-site
    /// samplers never rescan the whole configuration.
    fn flip_delta(&self, _x: &[u8], _site: usize) -> Option<f64> {
        None
    }

    /// Full conditional P(x_site = 1 | rest) for binary-lattice targets.
    fn binary_site_conditional(&self, _x: &[u8], _site: usize) -> Option<f64> {
        None
    }

    fn dimension(&self) -> usize {
        self.space().dimension()
    }
}

/// `base` raised to the power `beta`: the tempered target pi^beta.
pub struct Tempered<'a> {
    pub base: &'a dyn TargetModel,
    pub beta: f64,
}

impl<'a> Tempered<'a> {
    pub fn new(base: &'a dyn TargetModel, beta: f64) -> Self {
        Tempered { base, beta }
    }
}

impl<'a> TargetModel for Tempered<'a> {
    fn space(&self) -> Space {
        self.base.space()
    }

    fn log_density(&self, x: &State) -> f64 {
        let lp = self.base.log_density(x);
        // beta * (-inf) must stay -inf, not NaN, for out-of-support states.
        if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.beta * lp
        }
    }

    fn gradient(&self, x: &State) -> Option<DVector<f64>> {
        self.base.gradient(x).map(|g| g * self.beta)
    }

    fn exact_table(&self) -> Option<Vec<f64>> {
        let table = self.base.exact_table()?;
        let logs: Vec<f64> = table.iter().map(|p| self.beta * p.ln()).collect();
        Some(crate::numeric::normalized_exp(&logs))
    }

    fn flip_delta(&self, x: &[u8], site: usize) -> Option<f64> {
        self.base.flip_delta(x, site).map(|d| self.beta * d)
    }

    fn binary_site_conditional(&self, x: &[u8], site: usize) -> Option<f64> {
        // Tempering scales the flip logit: P(x_i=1 | rest) under pi^beta
        // is logistic(beta * logit).
        let x1_delta = self.base.flip_delta(x, site)?;
        let logit = if x[site] == 1 { -x1_delta } else { x1_delta };
        Some(1.0 / (1.0 + (-self.beta * logit).exp()))
    }
}

/// Central finite-difference gradient of a continuous target's log-density.
pub fn finite_difference_gradient(
    target: &dyn TargetModel,
    x: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let d = x.len();
    let mut grad = DVector::zeros(d);
    let mut xp = x.clone();
    for i in 0..d {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = target.log_density(&State::Continuous(xp.clone()));
        xp[i] = x[i] - step;
        let fm = target.log_density(&State::Continuous(xp.clone()));
        xp[i] = x[i];
        grad[i] = (fp - fm) / (2.0 * step);
    }
    grad
}

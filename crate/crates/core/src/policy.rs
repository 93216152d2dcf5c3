use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stationary policy over a finite action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// One action index per state.
    Deterministic(Vec<usize>),
    /// `probs[s][a]`.
    Stochastic(Vec<Vec<f64>>),
}

impl Policy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy::Stochastic(vec![vec![1.0 / n_actions as f64; n_actions]; n_states])
    }

    pub fn n_states(&self) -> usize {
        match self {
            Policy::Deterministic(acts) => acts.len(),
            Policy::Stochastic(probs) => probs.len(),
        }
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            Policy::Deterministic(acts) => {
                if acts[s] == a {
                    1.0
                } else {
                    0.0
                }
            }
            Policy::Stochastic(probs) => probs[s][a],
        }
    }

    /// Action of a deterministic policy; `None` for stochastic ones.
    pub fn action(&self, s: usize) -> Option<usize> {
        match self {
            Policy::Deterministic(acts) => Some(acts[s]),
            Policy::Stochastic(_) => None,
        }
    }

    pub fn validate(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.n_states() != n_states {
            return Err(Error::ShapeMismatch(format!(
                "policy covers {} states, environment has {n_states}",
                self.n_states()
            )));
        }
        match self {
            Policy::Deterministic(acts) => {
                if let Some((s, &a)) = acts.iter().enumerate().find(|(_, &a)| a >= n_actions) {
                    return Err(Error::InvalidPolicy(format!(
                        "state {s} selects action {a} of {n_actions}"
                    )));
                }
            }
            Policy::Stochastic(probs) => {
                for (s, row) in probs.iter().enumerate() {
                    if row.len() != n_actions {
                        return Err(Error::ShapeMismatch(format!(
                            "policy row {s} has {} actions, expected {n_actions}",
                            row.len()
                        )));
                    }
                    let total: f64 = row.iter().sum();
                    if row.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidPolicy(format!("row {s} is not a distribution")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Draws an action in state `s`.
    pub fn sample_action<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        match self {
            Policy::Deterministic(acts) => acts[s],
            Policy::Stochastic(probs) => sample_index(&probs[s], rng),
        }
    }

    /// Every deterministic policy, in lexicographic order of action vectors
    /// with state 0 the most significant digit.
    pub fn enumerate_deterministic(n_states: usize, n_actions: usize) -> Vec<Policy> {
        let count = n_actions.pow(n_states as u32);
        (0..count)
            .map(|mut code| {
                let mut acts = vec![0; n_states];
                for s in (0..n_states).rev() {
                    acts[s] = code % n_actions;
                    code /= n_actions;
                }
                Policy::Deterministic(acts)
            })
            .collect()
    }

    /// A stochastic policy with rows drawn from a flat Dirichlet.
    pub fn random_stochastic<R: Rng + ?Sized>(n_states: usize, n_actions: usize, rng: &mut R) -> Policy {
        let probs = (0..n_states)
            .map(|_| {
                // Normalised exponentials give a uniform point on the simplex.
                let raw: Vec<f64> = (0..n_actions).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            })
            .collect();
        Policy::Stochastic(probs)
    }
}

/// Inverse-CDF draw from a discrete distribution.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

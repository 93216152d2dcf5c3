//! Dense per-transition reward tensors.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Reward `R(s, a, s')` stored row-major as `[s][a][s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl RewardTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, 0.0)
    }

    pub fn constant(n_states: usize, n_actions: usize, value: f64) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![value; n_states * n_actions * n_states],
        }
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions * n_states);
        for s in 0..n_states {
            for a in 0..n_actions {
                for x in 0..n_states {
                    values.push(f(s, a, x));
                }
            }
        }
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn from_vec(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_states * n_actions * n_states {
            return Err(Error::ShapeMismatch(format!(
                "expected {} reward entries for ({n_states}, {n_actions}, {n_states}), got {}",
                n_states * n_actions * n_states,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("reward entry {i} is not finite")));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    /// Builds a table from `[s][a][s']` nesting.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = nested.len();
        let n_actions = nested.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_states * n_actions * n_states);
        for (s, per_action) in nested.iter().enumerate() {
            if per_action.len() != n_actions {
                return Err(Error::ShapeMismatch(format!(
                    "state {s} has {} actions, expected {n_actions}",
                    per_action.len()
                )));
            }
            for (a, row) in per_action.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::ShapeMismatch(format!(
                        "row ({s}, {a}) has {} next states, expected {n_states}",
                        row.len()
                    )));
                }
                values.extend_from_slice(row);
            }
        }
        Self::from_vec(n_states, n_actions, values)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_states)
            .map(|s| (0..self.n_actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize, x: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + x
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize, x: usize) -> f64 {
        self.values[self.index(s, a, x)]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, x: usize, value: f64) {
        let i = self.index(s, a, x);
        self.values[i] = value;
    }

    /// Rewards for every next state of `(s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.values[start..start + self.n_states]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &RewardTable) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    pub fn check_shape(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.n_states != n_states || self.n_actions != n_actions {
            return Err(Error::ShapeMismatch(format!(
                "reward is ({}, {}, {}) but the environment is ({n_states}, {n_actions}, {n_states})",
                self.n_states, self.n_actions, self.n_states
            )));
        }
        Ok(())
    }

    pub fn check_same_shape(&self, other: &RewardTable) -> Result<()> {
        other.check_shape(self.n_states, self.n_actions)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination. Panics on shape mismatch.
    pub fn zip_with(&self, other: &RewardTable, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(self.same_shape(other), "reward tables differ in shape");
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().zip(&other.values).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn dot(&self, other: &RewardTable) -> f64 {
        self.values.iter().zip(&other.values).map(|(x, y)| x * y).sum()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &RewardTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

impl Add for &RewardTable {
    type Output = RewardTable;
    fn add(self, rhs: &RewardTable) -> RewardTable {
        self.zip_with(rhs, |x, y| x + y)
    }
}

impl Sub for &RewardTable {
    type Output = RewardTable;
    fn sub(self, rhs: &RewardTable) -> RewardTable {
        self.zip_with(rhs, |x, y| x - y)
    }
}

impl Mul<f64> for &RewardTable {
    type Output = RewardTable;
    fn mul(self, rhs: f64) -> RewardTable {
        self.scale(rhs)
    }
}

impl Neg for &RewardTable {
    type Output = RewardTable;
    fn neg(self) -> RewardTable {
        self.map(|v| -v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_round_trip_preserves_order() {
        let r = RewardTable::from_fn(2, 3, |s, a, x| (100 * s + 10 * a + x) as f64);
        let nested = r.to_nested();
        assert_eq!(nested[1][2][0], 120.0);
        assert_eq!(RewardTable::from_nested(&nested).unwrap(), r);
    }

    #[test]
    fn ragged_input_is_rejected() {
        let nested = vec![vec![vec![0.0, 1.0]], vec![vec![0.0]]];
        assert!(matches!(
            RewardTable::from_nested(&nested),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        assert!(RewardTable::from_vec(1, 1, vec![f64::NAN]).is_err());
    }
}

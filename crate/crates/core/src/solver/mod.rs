//! Exact dynamic programming for impulse-control games.
//!
//! The Bellman operator is
//!
//! ```text
//! T v(s) = min( max( M1 v(s), R(s,0,0) + γ Σ P(s'|s,0,0) v(s') ), M2 v(s) )
//! M1 v(s) = max_{a≠0} [ R(s,a,0) − c(s,a) + γ Σ P(s'|s,a,0) v(s') ]
//! M2 v(s) = min_{b≠0} [ R(s,0,b) + c(s,b) + γ Σ P(s'|s,0,b) v(s') ]
//! ```
//!
//! It is a γ-contraction in the sup norm, so value iteration converges to
//! the unique saddle-point value from any starting field.

mod evaluate;
mod operators;
mod oracle;
mod policy;
mod value_iteration;

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::game::{GameStructure, ImpulseGame};

pub use evaluate::{evaluate_policies, uncontrolled_value};
pub use operators::{bellman, m1, m2, noop, Intervention, StageTerms};
pub use oracle::{deviation_gains, minimax_oracle, DeviationGains, OracleReport, CERTIFY_TOL};
pub use policy::{
    decide, extract_policy, greedy_value, intervention_times, simulate, EquilibriumPolicy,
    StatePolicy, Trajectory, TrajectoryStep, TIE_EPS,
};
pub use value_iteration::{solve, solve_from, SolveReport};

/// State-value function `s -> v(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueField(pub Vec<f64>);

impl ValueField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, x: f64) -> Self {
        Self(vec![x; n])
    }

    /// `‖self − other‖∞`.
    pub fn sup_dist(&self, other: &ValueField) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Deref for ValueField {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ValueField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ValueField {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Joint action-value table `(s, a, b) -> Q`, cost-exclusive: costs are
/// applied by the intervention operators, never stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct JointQ {
    num_states: usize,
    num_actions1: usize,
    num_actions2: usize,
    data: Vec<f64>,
}

impl JointQ {
    pub fn constant(num_states: usize, num_actions1: usize, num_actions2: usize, x: f64) -> Self {
        Self {
            num_states,
            num_actions1,
            num_actions2,
            data: vec![x; num_states * num_actions1 * num_actions2],
        }
    }

    pub fn zeros_like<G: GameStructure + ?Sized>(g: &G) -> Self {
        Self::constant(g.num_states(), g.num_actions1(), g.num_actions2(), 0.0)
    }

    /// One-step lookahead `Q(s,a,b) = R(s,a,b) + γ Σ P(s'|s,a,b) v(s')`.
    pub fn from_value(game: &ImpulseGame, v: &[f64]) -> Self {
        let mut q = Self::zeros_like(game);
        let g = game.gamma();
        for s in 0..game.num_states() {
            for a in 0..game.num_actions1() {
                for b in 0..game.num_actions2() {
                    q.set(s, a, b, game.reward(s, a, b) + g * game.expected_next(s, a, b, v));
                }
            }
        }
        q
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions1(&self) -> usize {
        self.num_actions1
    }

    pub fn num_actions2(&self) -> usize {
        self.num_actions2
    }

    #[inline]
    fn idx(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.num_actions1 + a) * self.num_actions2 + b
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize, b: usize) -> f64 {
        self.data[self.idx(s, a, b)]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, b: usize, x: f64) {
        let i = self.idx(s, a, b);
        self.data[i] = x;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `max |self − other|` over all cells.
    pub fn sup_dist(&self, other: &JointQ) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Nested `[s][a][b]` copy for serialization.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions1)
                    .map(|a| (0..self.num_actions2).map(|b| self.get(s, a, b)).collect())
                    .collect()
            })
            .collect()
    }
}

impl Serialize for JointQ {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_nested().serialize(serializer)
    }
}

//! Linear function approximation of the game value.
//!
//! The value is approximated as `Φr` for an `|S|×p` feature matrix `Φ`.
//! [`fit`] runs a stochastic iteration in weight space whose fixed point is
//! the projected fixed point `Π 𝔉(Φr) = Φr`; [`verify_bound`] measures the
//! distance of the result to the exact value against the projection error,
//! `‖Φr̂ − v̂‖ ≤ (1−γ²)^{-1/2} ‖Πv̂ − v̂‖`, in the stationary-weighted norm.

mod basis;
mod fit;

use serde::{Deserialize, Serialize};

use crate::game::{GameStructure, ImpulseGame};
use crate::solver::{StageTerms, ValueField};

pub use basis::{project, project_weights, weighted_norm, FeatureBasis, RANK_TOL};
pub use fit::{
    fit, projected_fixed_point, stationary_distribution, verify_bound, BoundCheck, FitConfig,
    FitReport, ProjectedIteration, StationaryWeights, BOUND_SLACK, DIVERGENCE_NORM,
};

/// How the three one-step terms are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Combinator {
    /// `max(min(M1, noop), M2)`.
    #[default]
    F,
    /// `min(max(M1, noop), M2)`, the exact Bellman combinator.
    T,
}

impl std::str::FromStr for Combinator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" | "f" => Ok(Combinator::F),
            "T" | "t" => Ok(Combinator::T),
            other => Err(format!("unknown combinator `{other}` (expected F or T)")),
        }
    }
}

impl Combinator {
    /// Combines stage terms. A player without actions drops out of the
    /// expression rather than contributing an infinite sentinel.
    pub fn combine(self, t: &StageTerms) -> f64 {
        match self {
            Combinator::T => t.value(),
            Combinator::F => {
                let inner = if t.m1.action.is_some() {
                    t.m1.value.min(t.noop)
                } else {
                    t.noop
                };
                if t.m2.action.is_some() {
                    inner.max(t.m2.value)
                } else {
                    inner
                }
            }
        }
    }
}

/// Applies the one-step operator to a state-value field.
pub fn apply_operator(game: &ImpulseGame, lambda: &[f64], combinator: Combinator) -> ValueField {
    (0..game.num_states())
        .map(|s| combinator.combine(&StageTerms::from_value(game, lambda, s)))
        .collect::<Vec<_>>()
        .into()
}

/// `𝔉(Φr)`.
pub fn f_operator(
    game: &ImpulseGame,
    basis: &FeatureBasis,
    r: &[f64],
    combinator: Combinator,
) -> ValueField {
    apply_operator(game, &basis.eval(r), combinator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::g1;

    #[test]
    fn both_combinators_reduce_to_td_without_actions() {
        let mut g = ImpulseGame::new(2, 0, 0, 0.5, 0.1).unwrap();
        g.set_reward(0, 0, 0, 1.0);
        g.set_reward(1, 0, 0, -1.0);
        g.kernel_row_mut(0, 0, 0).copy_from_slice(&[0.25, 0.75]);
        let lambda = [2.0, 4.0];
        let td = [1.0 + 0.5 * (0.5 + 3.0), -1.0 + 0.5 * 4.0];
        for c in [Combinator::F, Combinator::T] {
            let out = apply_operator(&g, &lambda, c);
            assert!((out[0] - td[0]).abs() < 1e-15 && (out[1] - td[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn t_combinator_fixes_g1_value() {
        let g = g1();
        let basis = FeatureBasis::identity(1);
        let out = f_operator(&g, &basis, &[0.6], Combinator::T);
        assert!((out[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn f_combinator_on_g1() {
        // M1 = 1.8, noop = 1.3, M2 = 0.6: max(min(1.8, 1.3), 0.6) = 1.3
        let g = g1();
        let out = apply_operator(&g, &[0.6], Combinator::F);
        assert!((out[0] - 1.3).abs() < 1e-15);
    }

    #[test]
    fn parse_combinator() {
        assert_eq!("F".parse::<Combinator>().unwrap(), Combinator::F);
        assert!("X".parse::<Combinator>().is_err());
    }
}

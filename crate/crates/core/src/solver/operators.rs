use super::ValueField;
use crate::game::{GameStructure, ImpulseGame};

/// Value and maximizing (or minimizing) action of an intervention operator.
///
/// When the player has no available non-null action the value is the
/// neutral sentinel (−∞ for Player 1, +∞ for Player 2) and `action` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intervention {
    pub value: f64,
    pub action: Option<usize>,
}

impl Intervention {
    pub const NONE1: Intervention = Intervention {
        value: f64::NEG_INFINITY,
        action: None,
    };
    pub const NONE2: Intervention = Intervention {
        value: f64::INFINITY,
        action: None,
    };
}

/// Player 1 intervention operator at `s`; ties go to the lowest action index.
pub fn m1(game: &ImpulseGame, v: &[f64], s: usize) -> Intervention {
    let g = game.gamma();
    let mut best = Intervention::NONE1;
    for a in 1..game.num_actions1() {
        if !game.available1(s, a) {
            continue;
        }
        let x = game.reward(s, a, 0) - game.cost1(s, a) + g * game.expected_next(s, a, 0, v);
        if best.action.is_none() || x > best.value {
            best = Intervention {
                value: x,
                action: Some(a),
            };
        }
    }
    best
}

/// Player 2 intervention operator at `s`; ties go to the lowest action index.
pub fn m2(game: &ImpulseGame, v: &[f64], s: usize) -> Intervention {
    let g = game.gamma();
    let mut best = Intervention::NONE2;
    for b in 1..game.num_actions2() {
        if !game.available2(s, b) {
            continue;
        }
        let x = game.reward(s, 0, b) + game.cost2(s, b) + g * game.expected_next(s, 0, b, v);
        if best.action.is_none() || x < best.value {
            best = Intervention {
                value: x,
                action: Some(b),
            };
        }
    }
    best
}

/// Continuation value when nobody acts.
pub fn noop(game: &ImpulseGame, v: &[f64], s: usize) -> f64 {
    game.reward(s, 0, 0) + game.gamma() * game.expected_next(s, 0, 0, v)
}

/// The three one-step terms the Bellman combinator acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTerms {
    pub m1: Intervention,
    pub noop: f64,
    pub m2: Intervention,
}

impl StageTerms {
    pub fn from_value(game: &ImpulseGame, v: &[f64], s: usize) -> Self {
        Self {
            m1: m1(game, v, s),
            noop: noop(game, v, s),
            m2: m2(game, v, s),
        }
    }

    /// `max(M1, noop)`; collapses to `noop` when Player 1 has no action.
    pub fn inner(&self) -> f64 {
        self.m1.value.max(self.noop)
    }

    /// `min(max(M1, noop), M2)` with sentinel collapse.
    pub fn value(&self) -> f64 {
        self.inner().min(self.m2.value)
    }
}

/// One application of the Bellman operator (Jacobi sweep).
pub fn bellman(game: &ImpulseGame, v: &ValueField) -> ValueField {
    (0..game.num_states())
        .map(|s| StageTerms::from_value(game, v, s).value())
        .collect::<Vec<_>>()
        .into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;

    #[test]
    fn m1_examples() {
        let g = g1();
        assert_eq!(m1(&g, &[0.0], 0), Intervention { value: 1.5, action: Some(1) });
        let r = m1(&g, &[0.6], 0);
        assert!((r.value - 1.8).abs() < 1e-15);
        assert_eq!(r.action, Some(1));
    }

    #[test]
    fn m2_examples() {
        let g = g1();
        assert_eq!(m2(&g, &[0.0], 0), Intervention { value: 0.3, action: Some(1) });
        let r = m2(&g, &[0.6], 0);
        assert!((r.value - 0.6).abs() < 1e-15);
    }

    #[test]
    fn sentinels_for_empty_action_sets() {
        let g = ImpulseGame::new(1, 0, 0, 0.5, 0.1).unwrap();
        assert_eq!(m1(&g, &[0.0], 0), Intervention::NONE1);
        assert_eq!(m2(&g, &[0.0], 0), Intervention::NONE2);
        // T collapses to the uncontrolled continuation
        let mut g = g;
        g.set_reward(0, 0, 0, 2.0);
        assert_eq!(bellman(&g, &ValueField(vec![1.0]))[0], 2.5);
    }

    #[test]
    fn masked_actions_are_skipped() {
        let mut g = g1();
        g.set_available1(0, 1, false);
        assert_eq!(m1(&g, &[0.0], 0), Intervention::NONE1);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut g = ImpulseGame::new(1, 2, 2, 0.5, 0.1).unwrap();
        g.set_reward(0, 1, 0, 1.0);
        g.set_reward(0, 2, 0, 1.0);
        assert_eq!(m1(&g, &[0.0], 0).action, Some(1));
        assert_eq!(m2(&g, &[0.0], 0).action, Some(1));
    }

    #[test]
    fn bellman_examples() {
        let g = g1();
        assert!((bellman(&g, &ValueField(vec![0.0]))[0] - 0.3).abs() < 1e-15);
        assert!((bellman(&g, &ValueField(vec![0.6]))[0] - 0.6).abs() < 1e-15);
    }
}

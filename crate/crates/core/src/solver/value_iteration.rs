use serde::Serialize;
use serde_json::json;

use super::{bellman, extract_policy, EquilibriumPolicy, JointQ, ValueField};
use crate::game::{GameStructure, ImpulseGame};

/// Outcome of value iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub value: ValueField,
    pub q: JointQ,
    pub policy: EquilibriumPolicy,
    pub sweeps: usize,
    /// `‖Tv − v‖∞` at the last sweep.
    pub residual: f64,
    /// `γ·residual/(1−γ)`, a bound on `‖v − v̂‖∞`.
    pub error_bound: f64,
    pub converged: bool,
}

impl SolveReport {
    /// JSON document; `labels` optionally names each state.
    pub fn to_json(&self, labels: Option<&[String]>) -> serde_json::Value {
        let policy: Vec<serde_json::Value> = self
            .policy
            .states
            .iter()
            .enumerate()
            .map(|(s, p)| {
                let mut rec = json!({
                    "state": s,
                    "p1_acts": p.p1_acts,
                    "p1_action": p.p1_action,
                    "p2_acts": p.p2_acts,
                    "p2_action": p.p2_action,
                });
                if let Some(l) = labels {
                    rec["label"] = json!(l[s]);
                }
                rec
            })
            .collect();
        let mut doc = json!({
            "value": self.value,
            "q": self.q,
            "policy": policy,
            "region1": self.policy.region1,
            "region2": self.policy.region2,
            "sweeps": self.sweeps,
            "residual": self.residual,
            "error_bound": self.error_bound,
            "converged": self.converged,
        });
        if let Some(l) = labels {
            doc["states"] = json!(l);
        }
        doc
    }
}

/// Value iteration from `v ≡ 0`.
pub fn solve(game: &ImpulseGame, tol: f64, max_sweeps: usize) -> SolveReport {
    solve_from(game, ValueField::zeros(game.num_states()), tol, max_sweeps)
}

/// Value iteration from `v0`, stopping once `‖Tv − v‖∞ ≤ tol·(1−γ)/γ`, which
/// guarantees `‖v − v̂‖∞ ≤ tol`.
pub fn solve_from(game: &ImpulseGame, v0: ValueField, tol: f64, max_sweeps: usize) -> SolveReport {
    assert!(tol > 0.0, "tolerance must be positive");
    let g = game.gamma();
    let threshold = if g > 0.0 { tol * (1.0 - g) / g } else { f64::INFINITY };
    let mut v = v0;
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while sweeps < max_sweeps {
        let tv = bellman(game, &v);
        residual = tv.sup_dist(&v);
        v = tv;
        sweeps += 1;
        if residual <= threshold {
            converged = true;
            break;
        }
    }
    if sweeps == 0 {
        residual = bellman(game, &v).sup_dist(&v);
    }
    let q = JointQ::from_value(game, &v);
    let policy = extract_policy(game, &q);
    log::debug!("value iteration: {sweeps} sweeps, residual {residual:e}");
    SolveReport {
        error_bound: if g > 0.0 { g * residual / (1.0 - g) } else { 0.0 },
        value: v,
        q,
        policy,
        sweeps,
        residual,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::game::random_game;

    #[test]
    fn closed_form_micro_games() {
        let r = solve(&g1(), 1e-9, 100_000);
        assert!(r.converged);
        assert!((r.value[0] - 0.6).abs() <= 1e-9);
        assert!((solve(&g2(), 1e-9, 100_000).value[0] - 3.0).abs() <= 1e-9);
        assert!((solve(&g3(), 1e-9, 100_000).value[0] - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn q_is_one_step_lookahead() {
        let r = solve(&g2(), 1e-12, 100_000);
        assert!((r.q.get(0, 1, 0) - 3.5).abs() < 1e-10);
        assert!((r.q.get(0, 0, 0) - 2.5).abs() < 1e-10);
        assert!((r.q.get(0, 0, 1) - 1.5).abs() < 1e-10);
    }

    #[test]
    fn one_shot_game_with_zero_discount() {
        let mut g = g1();
        g.set_gamma(0.0);
        let r = solve(&g, 1e-9, 10);
        assert!(r.converged);
        assert_eq!(r.value[0], 0.3);
        assert_eq!(r.error_bound, 0.0);
    }

    #[test]
    fn sweep_budget_exhaustion_is_flagged() {
        let g = random_game(4, 2, 2, 3).unwrap();
        let r = solve(&g, 1e-12, 5);
        assert!(!r.converged);
        assert_eq!(r.sweeps, 5);
        assert!(r.residual > 0.0);
    }

    #[test]
    fn two_initializations_agree() {
        let g = random_game(6, 2, 2, 9).unwrap();
        let tol = 1e-9;
        let a = solve(&g, tol, 100_000);
        let b = solve_from(&g, ValueField::constant(g.num_states(), 100.0), tol, 100_000);
        assert!(a.value.sup_dist(&b.value) <= 2.0 * tol);
    }

    #[test]
    fn value_bounded_by_reward_horizon() {
        let g = random_game(6, 2, 2, 10).unwrap();
        let r = solve(&g, 1e-10, 100_000);
        let bound = g.effective_reward_sup() / (1.0 - g.gamma());
        assert!(r.value.sup_norm() <= bound + 1e-9);
    }
}

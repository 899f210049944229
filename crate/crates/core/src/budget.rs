//! Budget-constrained play through state augmentation.
//!
//! Each player may intervene at most `n1` (resp. `n2`) times. The remaining
//! budgets are carried in the state, `x = (s, y, z)`, and every intervention
//! decrements its owner's counter. Exhausted budgets are enforced by masking
//! the player's non-null actions at those states.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameStructure, ImpulseGame};
use crate::solver::{solve, EquilibriumPolicy, SolveReport, Trajectory, TrajectoryStep};

/// Impulse game over augmented states `(s, y, z)`.
#[derive(Debug, Clone)]
pub struct AugmentedGame {
    pub game: ImpulseGame,
    pub base_states: usize,
    pub n1: usize,
    pub n2: usize,
}

impl AugmentedGame {
    pub fn index(&self, s: usize, y: usize, z: usize) -> usize {
        debug_assert!(s < self.base_states && y <= self.n1 && z <= self.n2);
        (s * (self.n1 + 1) + y) * (self.n2 + 1) + z
    }

    pub fn decode(&self, x: usize) -> (usize, usize, usize) {
        let z = x % (self.n2 + 1);
        let rest = x / (self.n2 + 1);
        (rest / (self.n1 + 1), rest % (self.n1 + 1), z)
    }

    /// `"(s,y,z)"` for every augmented state, in index order.
    pub fn labels(&self) -> Vec<String> {
        (0..self.game.num_states())
            .map(|x| {
                let (s, y, z) = self.decode(x);
                format!("({s},{y},{z})")
            })
            .collect()
    }
}

/// Builds the augmented game with budgets `n1`, `n2`.
pub fn augment(base: &ImpulseGame, n1: usize, n2: usize) -> Result<AugmentedGame> {
    let ns = base.num_states();
    let (k1, k2) = (base.num_actions1(), base.num_actions2());
    let size = ns
        .checked_mul(n1 + 1)
        .and_then(|x| x.checked_mul(n2 + 1))
        .ok_or_else(|| Error::InvalidArgument("augmented state space too large".into()))?;
    let mut game = ImpulseGame::new(size, k1 - 1, k2 - 1, base.gamma(), base.cost_floor())?;
    let index = |s: usize, y: usize, z: usize| (s * (n1 + 1) + y) * (n2 + 1) + z;
    for s in 0..ns {
        for y in 0..=n1 {
            for z in 0..=n2 {
                let x = index(s, y, z);
                for a in 0..k1 {
                    for b in 0..k2 {
                        game.set_reward(x, a, b, base.reward(s, a, b));
                        // Masked actions keep a well-formed, never-used row.
                        let y2 = if a != 0 { y.saturating_sub(1) } else { y };
                        let z2 = if b != 0 { z.saturating_sub(1) } else { z };
                        let row = game.kernel_row_mut(x, a, b);
                        row.iter_mut().for_each(|p| *p = 0.0);
                        for (t, &p) in base.kernel_row(s, a, b).iter().enumerate() {
                            row[index(t, y2, z2)] += p;
                        }
                    }
                }
                for a in 1..k1 {
                    game.set_cost1(x, a, base.cost1(s, a));
                    game.set_available1(x, a, y > 0 && base.available1(s, a));
                }
                for b in 1..k2 {
                    game.set_cost2(x, b, base.cost2(s, b));
                    game.set_available2(x, b, z > 0 && base.available2(s, b));
                }
            }
        }
    }
    Ok(AugmentedGame {
        game: game.validated()?,
        base_states: ns,
        n1,
        n2,
    })
}

/// Augments and solves.
pub fn solve_budgeted(
    base: &ImpulseGame,
    n1: usize,
    n2: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<(AugmentedGame, SolveReport)> {
    let aug = augment(base, n1, n2)?;
    let report = solve(&aug.game, tol, max_sweeps);
    Ok((aug, report))
}

#[derive(Debug, Clone)]
pub struct BudgetedTrajectory {
    /// Steps indexed by augmented state.
    pub trajectory: Trajectory,
    /// `(s, y, z)` at every step.
    pub states: Vec<(usize, usize, usize)>,
    pub interventions1: usize,
    pub interventions2: usize,
}

/// Rolls out `policy` from `(start, n1, n2)`.
///
/// Fails if the policy picks a masked action. Intervention counts are
/// checked against the budgets before returning.
pub fn simulate_budgeted<R: Rng + ?Sized>(
    aug: &AugmentedGame,
    policy: &EquilibriumPolicy,
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Result<BudgetedTrajectory> {
    if start >= aug.base_states {
        return Err(Error::IndexOutOfRange {
            what: "start state",
            index: start,
            len: aug.base_states,
        });
    }
    let g = &aug.game;
    let mut x = aug.index(start, aug.n1, aug.n2);
    let mut discount = 1.0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps);
    let (mut taus, mut rhos) = (Vec::new(), Vec::new());
    for t in 0..steps {
        let joint = policy.executed(x);
        if joint.a != 0 {
            if !g.available1(x, joint.a) {
                return Err(Error::MaskedAction { player: 1, state: x, action: joint.a });
            }
            taus.push(t);
        }
        if joint.b != 0 {
            if !g.available2(x, joint.b) {
                return Err(Error::MaskedAction { player: 2, state: x, action: joint.b });
            }
            rhos.push(t);
        }
        let r = g.effective_reward(x, joint)?;
        total += discount * r;
        states.push(aug.decode(x));
        out.push(TrajectoryStep {
            t,
            s: x,
            executed_a: joint.a,
            executed_b: joint.b,
            reward: r,
            cumulative_return: total,
        });
        discount *= g.gamma();
        x = g.sample_next(x, joint, rng);
    }
    assert!(
        taus.len() <= aug.n1 && rhos.len() <= aug.n2,
        "budget exceeded: {} > {} or {} > {}",
        taus.len(),
        aug.n1,
        rhos.len(),
        aug.n2
    );
    Ok(BudgetedTrajectory {
        interventions1: taus.len(),
        interventions2: rhos.len(),
        states,
        trajectory: Trajectory {
            steps: out,
            final_state: x,
            taus,
            rhos,
        },
    })
}

/// Value table keyed by `(s, y, z)`, for reports.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetedValue {
    pub state: String,
    pub s: usize,
    pub y: usize,
    pub z: usize,
    pub value: f64,
}

pub fn value_table(aug: &AugmentedGame, value: &[f64]) -> Vec<BudgetedValue> {
    aug.labels()
        .into_iter()
        .enumerate()
        .map(|(x, state)| {
            let (s, y, z) = aug.decode(x);
            BudgetedValue {
                state,
                s,
                y,
                z,
                value: value[x],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::sampling_env;
    use crate::game::fixtures::*;
    use crate::game::{random_game, GameStructure, JointAction};
    use crate::qlearn::{learn, reachable_distance, LearnConfig};
    use crate::solver::uncontrolled_value;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn g2_with_two_interventions() {
        let (aug, rep) = solve_budgeted(&g2(), 2, 0, 1e-12, 100_000).unwrap();
        for (y, v) in [(0, 2.0), (1, 2.5), (2, 2.75)] {
            assert!((rep.value[aug.index(0, y, 0)] - v).abs() < 1e-9);
        }
        assert!(!rep.policy.states[aug.index(0, 0, 0)].p1_acts);
        assert!(rep.policy.states[aug.index(0, 1, 0)].p1_acts);
        assert!(rep.policy.states[aug.index(0, 2, 0)].p1_acts);
    }

    #[test]
    fn g2_spends_budget_immediately() {
        let (aug, rep) = solve_budgeted(&g2(), 2, 0, 1e-12, 100_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tr = simulate_budgeted(&aug, &rep.policy, 0, 100, &mut rng).unwrap();
        assert_eq!(tr.trajectory.taus, vec![0, 1]);
        assert_eq!(tr.interventions1, 2);
        assert_eq!(tr.states[2], (0, 0, 0));
    }

    #[test]
    fn augmented_size_and_indexing() {
        let base = random_game(3, 1, 1, 4).unwrap();
        let aug = augment(&base, 2, 1).unwrap();
        assert_eq!(aug.game.num_states(), 18);
        for x in 0..18 {
            let (s, y, z) = aug.decode(x);
            assert_eq!(aug.index(s, y, z), x);
        }
        assert_eq!(aug.labels()[aug.index(2, 1, 0)], "(2,1,0)");
    }

    #[test]
    fn zero_budgets_give_uncontrolled_value() {
        let base = random_game(4, 2, 2, 9).unwrap();
        let (aug, rep) = solve_budgeted(&base, 0, 0, 1e-12, 100_000).unwrap();
        let chain = uncontrolled_value(&base);
        for s in 0..4 {
            assert!((rep.value[aug.index(s, 0, 0)] - chain[s]).abs() < 1e-9);
        }
        assert!(aug.game.actions1_at(0).is_empty() && aug.game.actions2_at(0).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = simulate_budgeted(&aug, &rep.policy, 0, 500, &mut rng).unwrap();
        assert_eq!((tr.interventions1, tr.interventions2), (0, 0));
    }

    #[test]
    fn large_budgets_match_unconstrained() {
        // With γ = 0.5, 60 interventions discount the rest below 1e-15.
        for g in [g1(), g2(), g3()] {
            let free = solve(&g, 1e-12, 100_000);
            let (aug, rep) = solve_budgeted(&g, 60, 60, 1e-12, 100_000).unwrap();
            assert!((rep.value[aug.index(0, 60, 60)] - free.value[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn one_shot_matches_brute_force_stopping() {
        // No Player 2, one intervention: v(s) = max(uncontrolled, best single shot),
        // evaluated as a pointwise maximum over every stopping set.
        let base = random_game(4, 2, 0, 21).unwrap();
        let (aug, rep) = solve_budgeted(&base, 1, 0, 1e-12, 100_000).unwrap();
        let free = uncontrolled_value(&base);
        let ns = base.num_states();
        let mut best = vec![f64::NEG_INFINITY; ns];
        for mask in 0u32..(1 << ns) {
            for choice in 0..(2usize.pow(ns as u32)) {
                // Policy: intervene (with action 1 + bit of `choice`) in states of `mask`
                // while the budget lasts, then follow the uncontrolled chain.
                let acts: Vec<usize> = (0..ns)
                    .map(|s| if mask >> s & 1 == 1 { 1 + (choice >> s & 1) } else { 0 })
                    .collect();
                // Pre-intervention value w solves w = r0 + γ P0 w off the set and
                // w = R(a) − c + γ P_a free on it.
                let mut w = vec![0.0; ns];
                for _ in 0..5_000 {
                    w = (0..ns)
                        .map(|s| {
                            if acts[s] != 0 {
                                base.effective_reward(s, JointAction::player1(acts[s])).unwrap()
                                    + base.gamma() * base.expected_next(s, acts[s], 0, &free)
                            } else {
                                base.reward(s, 0, 0) + base.gamma() * base.expected_next(s, 0, 0, &w)
                            }
                        })
                        .collect();
                }
                for s in 0..ns {
                    best[s] = best[s].max(w[s]);
                }
            }
        }
        for s in 0..ns {
            assert!((rep.value[aug.index(s, 1, 0)] - best[s]).abs() < 1e-8);
        }
    }

    #[test]
    fn value_is_monotone_in_budgets() {
        for seed in 0..5 {
            let base = random_game(3, 2, 2, seed).unwrap();
            let (aug, rep) = solve_budgeted(&base, 3, 3, 1e-11, 100_000).unwrap();
            for s in 0..3 {
                for y in 0..=3 {
                    for z in 0..=3 {
                        let v = rep.value[aug.index(s, y, z)];
                        if y < 3 {
                            assert!(rep.value[aug.index(s, y + 1, z)] >= v - 1e-9);
                        }
                        if z < 3 {
                            assert!(rep.value[aug.index(s, y, z + 1)] <= v + 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn seeded_rollouts_repeat() {
        let base = random_game(3, 1, 1, 2).unwrap();
        let (aug, rep) = solve_budgeted(&base, 2, 2, 1e-10, 100_000).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_budgeted(&aug, &rep.policy, 1, 50, &mut rng).unwrap().trajectory.steps
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn masked_policy_is_a_fault() {
        let (aug, _) = solve_budgeted(&g2(), 1, 0, 1e-12, 100_000).unwrap();
        let always = crate::solver::EquilibriumPolicy::from_states(
            (0..aug.game.num_states())
                .map(|_| crate::solver::StatePolicy {
                    p1_acts: true,
                    p1_action: Some(1),
                    p2_acts: false,
                    p2_action: None,
                })
                .collect(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = simulate_budgeted(&aug, &always, 0, 5, &mut rng).unwrap_err();
        assert!(matches!(err, Error::MaskedAction { player: 1, .. }));
    }

    #[test]
    fn qlearning_on_augmented_game() {
        // |X| = 2·3·3 = 18
        let base = random_game(2, 1, 1, 5).unwrap();
        let aug = augment(&base, 2, 2).unwrap();
        let exact = solve(&aug.game, 1e-12, 100_000);
        let cfg = LearnConfig {
            steps: 300_000,
            episode_len: 20,
            seed: 1,
            ..Default::default()
        };
        let out = learn(&mut sampling_env(&aug.game), &cfg, None).unwrap();
        let d = reachable_distance(&aug.game, &out.q, &exact.q, &out.visits, 1);
        assert!(d <= 0.05 * (1.0 + exact.q.sup_norm()), "distance {d}");
    }
}

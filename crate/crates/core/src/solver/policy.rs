use rand::Rng;
use serde::Serialize;

use super::{Intervention, JointQ, StageTerms};
use crate::game::{GameStructure, ImpulseGame, JointAction};

/// Margin below which a player is considered indifferent; ties resolve to
/// the null action.
pub const TIE_EPS: f64 = 1e-10;

/// Stage terms read off a cost-exclusive Q table.
fn terms_from_q<G: GameStructure + ?Sized>(q: &JointQ, g: &G, s: usize) -> StageTerms {
    let mut m1 = Intervention::NONE1;
    for a in 1..g.num_actions1() {
        if g.available1(s, a) {
            let x = q.get(s, a, 0) - g.cost1(s, a);
            if m1.action.is_none() || x > m1.value {
                m1 = Intervention { value: x, action: Some(a) };
            }
        }
    }
    let mut m2 = Intervention::NONE2;
    for b in 1..g.num_actions2() {
        if g.available2(s, b) {
            let x = q.get(s, 0, b) + g.cost2(s, b);
            if m2.action.is_none() || x < m2.value {
                m2 = Intervention { value: x, action: Some(b) };
            }
        }
    }
    StageTerms {
        m1,
        noop: q.get(s, 0, 0),
        m2,
    }
}

/// `min(max(max_a[Q(s,a,0) − c(s,a)], Q(s,0,0)), min_b[Q(s,0,b) + c(s,b)])`.
pub fn greedy_value<G: GameStructure + ?Sized>(q: &JointQ, g: &G, s: usize) -> f64 {
    terms_from_q(q, g, s).value()
}

/// Intervention decision at one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StatePolicy {
    pub p1_acts: bool,
    pub p1_action: Option<usize>,
    pub p2_acts: bool,
    pub p2_action: Option<usize>,
}

impl StatePolicy {
    /// Decision from already-computed stage terms.
    pub fn from_terms(t: &StageTerms) -> Self {
        let p1_acts = t.m1.action.is_some() && t.m1.value > t.noop + TIE_EPS;
        let p2_acts = t.m2.action.is_some() && t.m2.value < t.inner() - TIE_EPS;
        Self {
            p1_acts,
            p1_action: t.m1.action.filter(|_| p1_acts),
            p2_acts,
            p2_action: t.m2.action.filter(|_| p2_acts),
        }
    }

    /// The joint action actually executed, Player 2 taking precedence.
    pub fn executed(&self) -> JointAction {
        match (self.p2_action, self.p1_action) {
            (Some(b), _) => JointAction::player2(b),
            (None, Some(a)) => JointAction::player1(a),
            (None, None) => JointAction::NOOP,
        }
    }
}

/// The intervention rule applied to a Q table at state `s`.
pub fn decide<G: GameStructure + ?Sized>(q: &JointQ, g: &G, s: usize) -> StatePolicy {
    StatePolicy::from_terms(&terms_from_q(q, g, s))
}

/// Stationary equilibrium policy with its intervention regions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumPolicy {
    pub states: Vec<StatePolicy>,
    /// States where Player 1's action executes (it acts and Player 2 does not).
    pub region1: Vec<usize>,
    /// States where Player 2 acts.
    pub region2: Vec<usize>,
}

impl EquilibriumPolicy {
    pub fn from_states(states: Vec<StatePolicy>) -> Self {
        let region1 = (0..states.len())
            .filter(|&s| states[s].p1_acts && !states[s].p2_acts)
            .collect();
        let region2 = (0..states.len()).filter(|&s| states[s].p2_acts).collect();
        Self {
            states,
            region1,
            region2,
        }
    }

    pub fn executed(&self, s: usize) -> JointAction {
        self.states[s].executed()
    }

    /// Player 1's stationary map `s -> a` (0 when not acting).
    pub fn player1_map(&self) -> Vec<usize> {
        self.states.iter().map(|p| p.p1_action.unwrap_or(0)).collect()
    }

    /// Player 2's stationary map `s -> b` (0 when not acting).
    pub fn player2_map(&self) -> Vec<usize> {
        self.states.iter().map(|p| p.p2_action.unwrap_or(0)).collect()
    }
}

/// Greedy policy of a (solved) cost-exclusive Q table.
///
/// Player 1 acts where its best action beats idling by more than
/// [`TIE_EPS`]; Player 2 acts where its best action undercuts Player 1's
/// best option by more than [`TIE_EPS`].
pub fn extract_policy(game: &ImpulseGame, q: &JointQ) -> EquilibriumPolicy {
    EquilibriumPolicy::from_states((0..game.num_states()).map(|s| decide(q, game, s)).collect())
}

/// Intervention times along a state trajectory: Player 1 at `taus`, Player 2 at `rhos`.
pub fn intervention_times(policy: &EquilibriumPolicy, trajectory: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut taus = Vec::new();
    let mut rhos = Vec::new();
    for (t, &s) in trajectory.iter().enumerate() {
        let p = &policy.states[s];
        if p.p2_acts {
            rhos.push(t);
        } else if p.p1_acts {
            taus.push(t);
        }
    }
    (taus, rhos)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStep {
    pub t: usize,
    pub s: usize,
    pub executed_a: usize,
    pub executed_b: usize,
    /// Player 1's net payoff at this step; Player 2 receives its negation.
    pub reward: f64,
    pub cumulative_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub final_state: usize,
    pub taus: Vec<usize>,
    pub rhos: Vec<usize>,
}

impl Trajectory {
    pub fn discounted_return(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cumulative_return)
    }
}

/// Rolls out `policy` for `steps` steps from `start`, sampling from the kernel.
pub fn simulate<R: Rng + ?Sized>(
    game: &ImpulseGame,
    policy: &EquilibriumPolicy,
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Trajectory {
    let mut s = start;
    let mut discount = 1.0;
    let mut total = 0.0;
    let mut out = Vec::with_capacity(steps);
    let mut taus = Vec::new();
    let mut rhos = Vec::new();
    for t in 0..steps {
        let joint = policy.executed(s);
        if joint.a != 0 {
            taus.push(t);
        }
        if joint.b != 0 {
            rhos.push(t);
        }
        let r = game.effective_reward_unchecked(s, joint);
        total += discount * r;
        out.push(TrajectoryStep {
            t,
            s,
            executed_a: joint.a,
            executed_b: joint.b,
            reward: r,
            cumulative_return: total,
        });
        discount *= game.gamma();
        s = game.sample_next(s, joint, rng);
    }
    Trajectory {
        steps: out,
        final_state: s,
        taus,
        rhos,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::solver::solve;

    #[test]
    fn greedy_value_examples() {
        let g = g1();
        assert_eq!(greedy_value(&JointQ::constant(1, 2, 2, 0.0), &g, 0), 0.0);
        assert_eq!(greedy_value(&JointQ::constant(1, 2, 2, 1.0), &g, 0), 1.0);
    }

    #[test]
    fn g1_player2_has_precedence() {
        let r = solve(&g1(), 1e-12, 10_000);
        let p = r.policy.states[0];
        assert!(p.p2_acts && p.p1_acts);
        assert_eq!(p.executed(), JointAction::player2(1));
        assert_eq!(r.policy.region1, Vec::<usize>::new());
        assert_eq!(r.policy.region2, vec![0]);
        assert_eq!(intervention_times(&r.policy, &[0]), (vec![], vec![0]));
    }

    #[test]
    fn g2_player1_intervenes_every_step() {
        let r = solve(&g2(), 1e-12, 10_000);
        let p = r.policy.states[0];
        assert!(p.p1_acts && !p.p2_acts);
        assert_eq!(p.p1_action, Some(1));
        assert_eq!(intervention_times(&r.policy, &[0, 0, 0]), (vec![0, 1, 2], vec![]));
    }

    #[test]
    fn g3_nobody_intervenes() {
        let r = solve(&g3(), 1e-12, 10_000);
        let p = r.policy.states[0];
        assert!(!p.p1_acts && !p.p2_acts);
        assert_eq!(intervention_times(&r.policy, &[0, 0]), (vec![], vec![]));
    }

    #[test]
    fn ties_resolve_to_no_action() {
        // M1 equals the no-op continuation exactly
        let mut g = ImpulseGame::new(1, 1, 0, 0.5, 0.1).unwrap();
        g.set_reward(0, 0, 0, 1.0);
        g.set_reward(0, 1, 0, 1.5);
        g.set_cost1(0, 1, 0.5);
        let r = solve(&g, 1e-12, 10_000);
        assert!(!r.policy.states[0].p1_acts);
    }

    #[test]
    fn simulate_g2_return() {
        use rand::SeedableRng;
        let g = g2();
        let r = solve(&g, 1e-12, 10_000);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let tr = simulate(&g, &r.policy, 0, 10, &mut rng);
        let expected: f64 = (0..10).map(|t| 0.5f64.powi(t) * 1.5).sum();
        assert!((tr.discounted_return() - expected).abs() < 1e-12);
        assert!((expected - 2.9971).abs() < 1e-4);
        assert_eq!(tr.taus, (0..10).collect::<Vec<_>>());
    }
}

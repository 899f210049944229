//! The impulse-control stochastic game model.
//!
//! A game has finite states and two finite action sets, each containing the
//! null action `0`. Every non-null action carries a cost bounded below by a
//! positive floor. Rewards and transition kernels are stored for every joint
//! action `(a, b)`, but cells where both entries are non-null are inert: the
//! solver and the simulator only ever execute `(a, 0)`, `(0, b)` or `(0, 0)`.

mod file;
mod random;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{load, save, GameSpecFile};
pub use random::{random_game, random_game_with, RandomGameConfig};

/// Tolerance on kernel row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// The null action index, shared by both players.
pub const NULL: usize = 0;

/// An executed or proposed joint action. `0` is the null action for both players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct JointAction {
    pub a: usize,
    pub b: usize,
}

impl JointAction {
    pub const NOOP: JointAction = JointAction { a: 0, b: 0 };

    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub fn player1(a: usize) -> Self {
        Self { a, b: 0 }
    }

    pub fn player2(b: usize) -> Self {
        Self { a: 0, b }
    }

    /// Applies the precedence rule: if Player 2 acts, Player 1's action is dropped.
    pub fn with_precedence(self) -> Self {
        if self.b != NULL {
            Self { a: NULL, b: self.b }
        } else {
            self
        }
    }

    pub fn is_noop(&self) -> bool {
        self.a == NULL && self.b == NULL
    }
}

/// Read-only structural view of a game: sizes, costs, action availability and
/// discount. This is everything a model-free learner is allowed to know; the
/// kernel and the rewards are hidden behind [`crate::envs::ImpulseEnv`].
pub trait GameStructure {
    fn num_states(&self) -> usize;
    /// Number of Player 1 actions including the null action.
    fn num_actions1(&self) -> usize;
    /// Number of Player 2 actions including the null action.
    fn num_actions2(&self) -> usize;
    fn discount(&self) -> f64;
    /// Cost of non-null Player 1 action `a` at state `s`.
    fn cost1(&self, s: usize, a: usize) -> f64;
    /// Cost of non-null Player 2 action `b` at state `s`.
    fn cost2(&self, s: usize, b: usize) -> f64;
    fn available1(&self, s: usize, a: usize) -> bool;
    fn available2(&self, s: usize, b: usize) -> bool;

    /// Available non-null Player 1 actions at `s`, ascending.
    fn actions1_at(&self, s: usize) -> Vec<usize> {
        (1..self.num_actions1())
            .filter(|&a| self.available1(s, a))
            .collect()
    }

    /// Available non-null Player 2 actions at `s`, ascending.
    fn actions2_at(&self, s: usize) -> Vec<usize> {
        (1..self.num_actions2())
            .filter(|&b| self.available2(s, b))
            .collect()
    }
}

/// A finite two-player zero-sum stochastic game with impulse control.
///
/// Player 1 maximizes, Player 2 minimizes. Storage is dense and row-major:
/// rewards `[s][a][b]`, kernel `[s][a][b][s']`, costs `[s][a-1]` and
/// `[s][b-1]`, availability `[s][a]` and `[s][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseGame {
    num_states: usize,
    num_actions1: usize,
    num_actions2: usize,
    gamma: f64,
    cost_floor: f64,
    rewards: Vec<f64>,
    costs1: Vec<f64>,
    costs2: Vec<f64>,
    kernel: Vec<f64>,
    available1: Vec<bool>,
    available2: Vec<bool>,
}

impl ImpulseGame {
    /// Creates a game with zero rewards, self-loop transitions, every action
    /// available and every cost equal to `cost_floor`.
    ///
    /// `extra1`/`extra2` count non-null actions; the null action is added.
    pub fn new(
        num_states: usize,
        extra1: usize,
        extra2: usize,
        gamma: f64,
        cost_floor: f64,
    ) -> Result<Self> {
        if num_states == 0 {
            return Err(Error::InvalidArgument("a game needs at least one state".into()));
        }
        let n1 = extra1 + 1;
        let n2 = extra2 + 1;
        let mut kernel = vec![0.0; num_states * n1 * n2 * num_states];
        for s in 0..num_states {
            for a in 0..n1 {
                for b in 0..n2 {
                    kernel[((s * n1 + a) * n2 + b) * num_states + s] = 1.0;
                }
            }
        }
        Ok(Self {
            num_states,
            num_actions1: n1,
            num_actions2: n2,
            gamma,
            cost_floor,
            rewards: vec![0.0; num_states * n1 * n2],
            costs1: vec![cost_floor; num_states * extra1],
            costs2: vec![cost_floor; num_states * extra2],
            kernel,
            available1: vec![true; num_states * n1],
            available2: vec![true; num_states * n2],
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        self.gamma = gamma;
    }

    pub fn cost_floor(&self) -> f64 {
        self.cost_floor
    }

    pub fn set_cost_floor(&mut self, floor: f64) {
        self.cost_floor = floor;
    }

    #[inline]
    fn cell(&self, s: usize, a: usize, b: usize) -> usize {
        (s * self.num_actions1 + a) * self.num_actions2 + b
    }

    /// Raw (cost-exclusive) reward of joint action `(a, b)` at `s`.
    #[inline]
    pub fn reward(&self, s: usize, a: usize, b: usize) -> f64 {
        self.rewards[self.cell(s, a, b)]
    }

    pub fn set_reward(&mut self, s: usize, a: usize, b: usize, r: f64) {
        let i = self.cell(s, a, b);
        self.rewards[i] = r;
    }

    /// Next-state distribution for `(s, a, b)`.
    #[inline]
    pub fn kernel_row(&self, s: usize, a: usize, b: usize) -> &[f64] {
        let start = self.cell(s, a, b) * self.num_states;
        &self.kernel[start..start + self.num_states]
    }

    pub fn kernel_row_mut(&mut self, s: usize, a: usize, b: usize) -> &mut [f64] {
        let start = self.cell(s, a, b) * self.num_states;
        let n = self.num_states;
        &mut self.kernel[start..start + n]
    }

    /// Expected value of `v` at the next state under `(s, a, b)`.
    #[inline]
    pub fn expected_next(&self, s: usize, a: usize, b: usize, v: &[f64]) -> f64 {
        self.kernel_row(s, a, b)
            .iter()
            .zip(v)
            .map(|(p, x)| p * x)
            .sum()
    }

    /// Draws a successor of `s` under `joint` (no precedence applied).
    pub fn sample_next<R: rand::Rng + ?Sized>(&self, s: usize, joint: JointAction, rng: &mut R) -> usize {
        sample_index(self.kernel_row(s, joint.a, joint.b), rng)
    }

    pub fn set_cost1(&mut self, s: usize, a: usize, c: f64) {
        assert!(a >= 1 && a < self.num_actions1, "cost1 needs a non-null action");
        let extra = self.num_actions1 - 1;
        self.costs1[s * extra + a - 1] = c;
    }

    pub fn set_cost2(&mut self, s: usize, b: usize, c: f64) {
        assert!(b >= 1 && b < self.num_actions2, "cost2 needs a non-null action");
        let extra = self.num_actions2 - 1;
        self.costs2[s * extra + b - 1] = c;
    }

    pub fn set_available1(&mut self, s: usize, a: usize, available: bool) {
        self.available1[s * self.num_actions1 + a] = available;
    }

    pub fn set_available2(&mut self, s: usize, b: usize, available: bool) {
        self.available2[s * self.num_actions2 + b] = available;
    }

    /// Multiplies every action cost by `factor`.
    pub fn scale_costs(&mut self, factor: f64) {
        self.costs1.iter_mut().for_each(|c| *c *= factor);
        self.costs2.iter_mut().for_each(|c| *c *= factor);
    }

    /// Copy of this game with every Player 2 non-null action removed.
    pub fn without_player2(&self) -> ImpulseGame {
        let mut g = ImpulseGame::new(
            self.num_states,
            self.num_actions1 - 1,
            0,
            self.gamma,
            self.cost_floor,
        )
        .expect("non-empty state set");
        for s in 0..self.num_states {
            for a in 0..self.num_actions1 {
                g.set_reward(s, a, 0, self.reward(s, a, 0));
                g.kernel_row_mut(s, a, 0)
                    .copy_from_slice(self.kernel_row(s, a, 0));
                g.set_available1(s, a, self.available1(s, a));
                if a > 0 {
                    g.set_cost1(s, a, self.cost1(s, a));
                }
            }
        }
        g
    }

    /// Player 1's per-step net payoff: reward minus Player 1's cost plus
    /// Player 2's cost.
    pub fn effective_reward(&self, s: usize, joint: JointAction) -> Result<f64> {
        self.check_index(s, joint)?;
        Ok(self.effective_reward_unchecked(s, joint))
    }

    #[inline]
    pub(crate) fn effective_reward_unchecked(&self, s: usize, joint: JointAction) -> f64 {
        let mut r = self.reward(s, joint.a, joint.b);
        if joint.a != NULL {
            r -= self.cost1(s, joint.a);
        }
        if joint.b != NULL {
            r += self.cost2(s, joint.b);
        }
        r
    }

    /// Player 2's per-step net payoff, the exact negation of Player 1's.
    pub fn player2_payoff(&self, s: usize, joint: JointAction) -> Result<f64> {
        Ok(-self.effective_reward(s, joint)?)
    }

    pub(crate) fn check_index(&self, s: usize, joint: JointAction) -> Result<()> {
        if s >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: s,
                len: self.num_states,
            });
        }
        if joint.a >= self.num_actions1 {
            return Err(Error::IndexOutOfRange {
                what: "player 1 action",
                index: joint.a,
                len: self.num_actions1,
            });
        }
        if joint.b >= self.num_actions2 {
            return Err(Error::IndexOutOfRange {
                what: "player 2 action",
                index: joint.b,
                len: self.num_actions2,
            });
        }
        Ok(())
    }

    /// Largest absolute reward over all cells.
    pub fn reward_sup(&self) -> f64 {
        self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest action cost.
    pub fn cost_sup(&self) -> f64 {
        self.costs1
            .iter()
            .chain(&self.costs2)
            .fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Largest absolute effective reward over executable joint actions.
    pub fn effective_reward_sup(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in 0..self.num_states {
            m = m.max(self.reward(s, 0, 0).abs());
            for a in self.actions1_at(s) {
                m = m.max(self.effective_reward_unchecked(s, JointAction::player1(a)).abs());
            }
            for b in self.actions2_at(s) {
                m = m.max(self.effective_reward_unchecked(s, JointAction::player2(b)).abs());
            }
        }
        m
    }

    /// Checks every invariant. An empty list means the game is well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.gamma.is_finite() && (0.0..1.0).contains(&self.gamma)) {
            out.push(Violation::Discount(self.gamma));
        }
        if !(self.cost_floor.is_finite() && self.cost_floor > 0.0) {
            out.push(Violation::CostFloor(self.cost_floor));
        }
        for s in 0..self.num_states {
            if !self.available1(s, NULL) || !self.available2(s, NULL) {
                out.push(Violation::NullUnavailable { s });
            }
            for a in 0..self.num_actions1 {
                for b in 0..self.num_actions2 {
                    let r = self.reward(s, a, b);
                    if !r.is_finite() {
                        out.push(Violation::NonFiniteReward { s, a, b });
                    }
                    let row = self.kernel_row(s, a, b);
                    let mut bad = false;
                    for (next, &p) in row.iter().enumerate() {
                        if !p.is_finite() || p < 0.0 {
                            out.push(Violation::BadProbability { s, a, b, next, p });
                            bad = true;
                        }
                    }
                    if !bad {
                        let sum: f64 = row.iter().sum();
                        if (sum - 1.0).abs() > ROW_SUM_TOL {
                            out.push(Violation::RowSum { s, a, b, sum });
                        }
                    }
                }
            }
            for a in 1..self.num_actions1 {
                let c = self.cost1(s, a);
                if !c.is_finite() || c < self.cost_floor || c <= 0.0 {
                    out.push(Violation::CostBelowFloor {
                        player: 1,
                        s,
                        action: a,
                        cost: c,
                    });
                }
            }
            for b in 1..self.num_actions2 {
                let c = self.cost2(s, b);
                if !c.is_finite() || c < self.cost_floor || c <= 0.0 {
                    out.push(Violation::CostBelowFloor {
                        player: 2,
                        s,
                        action: b,
                        cost: c,
                    });
                }
            }
        }
        out
    }

    /// Returns `self` if [`validate`](Self::validate) finds nothing.
    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::Invalid(v))
        }
    }
}

impl GameStructure for ImpulseGame {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions1(&self) -> usize {
        self.num_actions1
    }

    fn num_actions2(&self) -> usize {
        self.num_actions2
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    #[inline]
    fn cost1(&self, s: usize, a: usize) -> f64 {
        self.costs1[s * (self.num_actions1 - 1) + a - 1]
    }

    #[inline]
    fn cost2(&self, s: usize, b: usize) -> f64 {
        self.costs2[s * (self.num_actions2 - 1) + b - 1]
    }

    #[inline]
    fn available1(&self, s: usize, a: usize) -> bool {
        self.available1[s * self.num_actions1 + a]
    }

    #[inline]
    fn available2(&self, s: usize, b: usize) -> bool {
        self.available2[s * self.num_actions2 + b]
    }
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_index<R: rand::Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
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
    // rounding left u above the accumulated mass
    last
}

/// A broken invariant of [`ImpulseGame`], with the offending indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Discount(f64),
    CostFloor(f64),
    NullUnavailable {
        s: usize,
    },
    NonFiniteReward {
        s: usize,
        a: usize,
        b: usize,
    },
    BadProbability {
        s: usize,
        a: usize,
        b: usize,
        next: usize,
        p: f64,
    },
    RowSum {
        s: usize,
        a: usize,
        b: usize,
        sum: f64,
    },
    CostBelowFloor {
        player: u8,
        s: usize,
        action: usize,
        cost: f64,
    },
    /// Array shape mismatch found while reading a game-spec file.
    Shape {
        key: String,
        expected: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Discount(g) => write!(f, "discount must be < 1 and >= 0 (got {g})"),
            Violation::CostFloor(k) => write!(f, "cost floor must be > 0 (got {k})"),
            Violation::NullUnavailable { s } => {
                write!(f, "null action must be available at state {s}")
            }
            Violation::NonFiniteReward { s, a, b } => {
                write!(f, "reward at ({s},{a},{b}) is not finite")
            }
            Violation::BadProbability { s, a, b, next, p } => write!(
                f,
                "kernel entry ({s},{a},{b}) -> {next} is not a probability ({p})"
            ),
            Violation::RowSum { s, a, b, sum } => {
                write!(f, "kernel row ({s},{a},{b}) sums to {sum}, not 1")
            }
            Violation::CostBelowFloor {
                player,
                s,
                action,
                cost,
            } => write!(
                f,
                "cost below floor for player {player} action {action} at state {s} ({cost})"
            ),
            Violation::Shape { key, expected } => {
                write!(f, "key `{key}` has the wrong shape, expected {expected}")
            }
        }
    }
}

//! Environments: model-free sampling access to a game, and the
//! advertising-investment duopoly.

mod duopoly;

use rand::Rng;

use crate::game::{sample_index, GameStructure, ImpulseGame, JointAction};

pub use duopoly::{build_duopoly_game, duopoly_step_mean, DuopolyParams, HERMITE_NODES};

/// Outcome of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// Raw (cost-exclusive) reward `R(s, a, b)`.
    pub reward: f64,
    pub next: usize,
}

/// Model-free access to an impulse game: the learner sees sizes, costs and
/// action availability but only samples of rewards and transitions.
pub trait ImpulseEnv: GameStructure {
    /// Draws a start state.
    fn reset(&mut self, rng: &mut dyn rand::RngCore) -> usize;

    /// Executes `joint` at `s` (generative access: any `s` is allowed).
    fn step(&mut self, s: usize, joint: JointAction, rng: &mut dyn rand::RngCore) -> Step;
}

/// Sampling front-end over an [`ImpulseGame`]. Never exposes probabilities.
#[derive(Debug, Clone)]
pub struct SamplingEnv<'a> {
    game: &'a ImpulseGame,
    start: Option<Vec<f64>>,
}

impl<'a> SamplingEnv<'a> {
    /// Resets uniformly over states.
    pub fn new(game: &'a ImpulseGame) -> Self {
        Self { game, start: None }
    }

    /// Resets from the given distribution over states.
    pub fn with_start_distribution(game: &'a ImpulseGame, start: Vec<f64>) -> Self {
        assert_eq!(start.len(), game.num_states());
        Self {
            game,
            start: Some(start),
        }
    }
}

/// Sampling environment for a game (including a built duopoly game).
pub fn sampling_env(game: &ImpulseGame) -> SamplingEnv<'_> {
    SamplingEnv::new(game)
}

impl GameStructure for SamplingEnv<'_> {
    fn num_states(&self) -> usize {
        self.game.num_states()
    }

    fn num_actions1(&self) -> usize {
        self.game.num_actions1()
    }

    fn num_actions2(&self) -> usize {
        self.game.num_actions2()
    }

    fn discount(&self) -> f64 {
        self.game.gamma()
    }

    fn cost1(&self, s: usize, a: usize) -> f64 {
        self.game.cost1(s, a)
    }

    fn cost2(&self, s: usize, b: usize) -> f64 {
        self.game.cost2(s, b)
    }

    fn available1(&self, s: usize, a: usize) -> bool {
        self.game.available1(s, a)
    }

    fn available2(&self, s: usize, b: usize) -> bool {
        self.game.available2(s, b)
    }
}

impl ImpulseEnv for SamplingEnv<'_> {
    fn reset(&mut self, rng: &mut dyn rand::RngCore) -> usize {
        match &self.start {
            Some(dist) => sample_index(dist, rng),
            None => rng.gen_range(0..self.game.num_states()),
        }
    }

    fn step(&mut self, s: usize, joint: JointAction, rng: &mut dyn rand::RngCore) -> Step {
        Step {
            reward: self.game.reward(s, joint.a, joint.b),
            next: self.game.sample_next(s, joint, rng),
        }
    }
}

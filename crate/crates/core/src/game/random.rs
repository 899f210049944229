use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ImpulseGame;
use crate::error::{Error, Result};

/// Knobs for [`random_game_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGameConfig {
    pub gamma: f64,
    /// κ; costs are drawn uniformly from `[κ, 2κ]`.
    pub cost_floor: f64,
}

impl Default for RandomGameConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            cost_floor: 0.1,
        }
    }
}

/// Random game with default discount 0.9 and cost floor 0.1.
///
/// Action counts exclude the null action, which is always added.
pub fn random_game(
    num_states: usize,
    num_actions1: usize,
    num_actions2: usize,
    seed: u64,
) -> Result<ImpulseGame> {
    random_game_with(
        num_states,
        num_actions1,
        num_actions2,
        seed,
        RandomGameConfig::default(),
    )
}

/// Deterministic in all arguments: kernel rows are normalized uniform
/// variates, rewards are uniform in `[-1, 1]`, costs uniform in `[κ, 2κ]`.
pub fn random_game_with(
    num_states: usize,
    num_actions1: usize,
    num_actions2: usize,
    seed: u64,
    config: RandomGameConfig,
) -> Result<ImpulseGame> {
    if num_states == 0 {
        return Err(Error::InvalidArgument("num_states must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ImpulseGame::new(
        num_states,
        num_actions1,
        num_actions2,
        config.gamma,
        config.cost_floor,
    )?;
    let (n1, n2) = (num_actions1 + 1, num_actions2 + 1);
    for s in 0..num_states {
        for a in 0..n1 {
            for b in 0..n2 {
                g.set_reward(s, a, b, rng.gen_range(-1.0..=1.0));
                let row = g.kernel_row_mut(s, a, b);
                let mut total = 0.0;
                for p in row.iter_mut() {
                    // strictly positive so that every row is ergodic
                    *p = rng.gen::<f64>() + 1e-3;
                    total += *p;
                }
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
        let k = config.cost_floor;
        for a in 1..n1 {
            g.set_cost1(s, a, rng.gen_range(k..=2.0 * k));
        }
        for b in 1..n2 {
            g.set_cost2(s, b, rng.gen_range(k..=2.0 * k));
        }
    }
    Ok(g)
}

//! Model-free Q-learning for impulse games.
//!
//! The learner plays both sides. At each step it applies the intervention
//! rule to its current table (Player 2 first, then Player 1, else idle), with
//! ε-greedy exploration layered on top, and moves the executed cell toward
//! the sampled target `R(s,e) + γ·v_Q(s')`, where `v_Q` is the Bellman
//! combinator evaluated on the stored table.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::envs::ImpulseEnv;
use crate::error::{Error, Result};
use crate::game::{GameStructure, JointAction};
use crate::solver::{decide, greedy_value, JointQ};

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Total environment steps.
    pub steps: usize,
    /// Steps per episode before a reset.
    pub episode_len: usize,
    /// Exploration rate at the first step; decays linearly to `epsilon_end`.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Learning-rate exponent ω in `α = 1/(1 + visits)^ω`, within `(0.5, 1]`.
    pub omega: f64,
    pub seed: u64,
    /// Steps between diagnostics snapshots.
    pub epoch: usize,
    /// Stop early once an epoch changes no cell by more than this.
    pub stop_tol: Option<f64>,
    /// Initial value of every cell.
    pub init: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            steps: 200_000,
            episode_len: 200,
            epsilon_start: 0.2,
            epsilon_end: 0.01,
            omega: 0.85,
            seed: 0,
            epoch: 1_000,
            stop_tol: None,
            init: 0.0,
        }
    }
}

impl LearnConfig {
    fn check(&self) -> Result<()> {
        if !(self.omega > 0.5 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "omega must lie in (0.5, 1], got {}",
                self.omega
            )));
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidArgument(format!("epsilon {e} outside [0, 1]")));
            }
        }
        if self.epoch == 0 || self.episode_len == 0 {
            return Err(Error::InvalidArgument("epoch and episode_len must be >= 1".into()));
        }
        Ok(())
    }

    /// Exploration rate at step `t`.
    pub fn epsilon_at(&self, t: usize) -> f64 {
        if self.steps <= 1 {
            return self.epsilon_start;
        }
        let frac = t as f64 / (self.steps - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac.min(1.0)
    }
}

/// One sampled interaction. `joint` never has both entries non-null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub joint: JointAction,
    /// Raw (cost-exclusive) reward.
    pub reward: f64,
    pub next: usize,
}

/// Step size `1/(1 + visits)^ω`.
pub fn step_size(visits: u64, omega: f64) -> f64 {
    (1.0 + visits as f64).powf(-omega)
}

/// Moves the executed cell toward `R + γ·v_Q(s')`. Returns the increment.
pub fn step_update<G: GameStructure + ?Sized>(
    q: &mut JointQ,
    g: &G,
    tr: &Transition,
    alpha: f64,
) -> f64 {
    let target = tr.reward + g.discount() * greedy_value(q, g, tr.next);
    let JointAction { a, b } = tr.joint;
    let old = q.get(tr.s, a, b);
    let inc = alpha * (target - old);
    q.set(tr.s, a, b, old + inc);
    inc
}

/// Behaviour policy: with probability `1 − ε` the greedy intervention rule on
/// `q`; otherwise a uniform slot (Player 1 / Player 2 / idle) among those with
/// available actions, then a uniform action within it.
pub fn act<G: GameStructure + ?Sized, R: Rng + ?Sized>(
    q: &JointQ,
    g: &G,
    s: usize,
    epsilon: f64,
    rng: &mut R,
) -> JointAction {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        let a1 = g.actions1_at(s);
        let a2 = g.actions2_at(s);
        let mut slots = Vec::with_capacity(3);
        if !a1.is_empty() {
            slots.push(1u8);
        }
        if !a2.is_empty() {
            slots.push(2u8);
        }
        slots.push(0u8);
        return match slots[rng.gen_range(0..slots.len())] {
            1 => JointAction::player1(a1[rng.gen_range(0..a1.len())]),
            2 => JointAction::player2(a2[rng.gen_range(0..a2.len())]),
            _ => JointAction::NOOP,
        };
    }
    decide(q, g, s).executed()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochDiagnostic {
    pub step: usize,
    /// `‖Q_n − Q_{n−1}‖∞` across the epoch.
    pub sup_norm_delta: f64,
    /// `‖Q − Q̂‖∞` on visited executable cells, when a reference is given.
    pub dist_to_qhat: Option<f64>,
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub q: JointQ,
    /// Visit counts per cell, laid out like the Q table.
    pub visits: JointQ,
    pub steps: usize,
    pub diagnostics: Vec<EpochDiagnostic>,
}

impl LearnOutcome {
    pub fn total_visits(&self) -> u64 {
        self.visits.as_slice().iter().map(|&v| v as u64).sum()
    }
}

/// Cells an executed joint action can occupy: `(s,0,0)`, `(s,a,0)`, `(s,0,b)`.
pub fn executable_cells<G: GameStructure + ?Sized>(g: &G) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for s in 0..g.num_states() {
        out.push((s, 0, 0));
        out.extend(g.actions1_at(s).into_iter().map(|a| (s, a, 0)));
        out.extend(g.actions2_at(s).into_iter().map(|b| (s, 0, b)));
    }
    out
}

/// `max |Q − Q̂|` over executable cells visited at least `min_visits` times.
pub fn reachable_distance<G: GameStructure + ?Sized>(
    g: &G,
    q: &JointQ,
    reference: &JointQ,
    visits: &JointQ,
    min_visits: u64,
) -> f64 {
    executable_cells(g)
        .into_iter()
        .filter(|&(s, a, b)| visits.get(s, a, b) as u64 >= min_visits.max(1))
        .fold(0.0, |m, (s, a, b)| m.max((q.get(s, a, b) - reference.get(s, a, b)).abs()))
}

/// Runs ε-greedy Q-learning against `env` for `config.steps` steps.
pub fn learn<E: ImpulseEnv>(
    env: &mut E,
    config: &LearnConfig,
    reference: Option<&JointQ>,
) -> Result<LearnOutcome> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (ns, n1, n2) = (env.num_states(), env.num_actions1(), env.num_actions2());
    let mut q = JointQ::constant(ns, n1, n2, config.init);
    let mut visits = JointQ::constant(ns, n1, n2, 0.0);
    let mut snapshot = q.clone();
    let mut diagnostics = Vec::new();
    let mut s = env.reset(&mut rng);
    let mut steps = 0;

    for t in 0..config.steps {
        if t > 0 && t % config.episode_len == 0 {
            s = env.reset(&mut rng);
        }
        let eps = config.epsilon_at(t);
        let joint = act(&q, &*env, s, eps, &mut rng);
        let out = env.step(s, joint, &mut rng);
        let tr = Transition {
            s,
            joint,
            reward: out.reward,
            next: out.next,
        };
        let n = visits.get(s, joint.a, joint.b);
        let alpha = step_size(n as u64, config.omega);
        step_update(&mut q, &*env, &tr, alpha);
        if !q.get(s, joint.a, joint.b).is_finite() {
            return Err(Error::NonFinite { step: t, state: s });
        }
        visits.set(s, joint.a, joint.b, n + 1.0);
        s = out.next;
        steps = t + 1;

        if steps % config.epoch == 0 {
            let delta = q.sup_dist(&snapshot);
            snapshot.clone_from(&q);
            diagnostics.push(EpochDiagnostic {
                step: steps,
                sup_norm_delta: delta,
                dist_to_qhat: reference.map(|r| reachable_distance(&*env, &q, r, &visits, 1)),
                epsilon: eps,
                seed: config.seed,
            });
            if config.stop_tol.is_some_and(|tol| delta <= tol) {
                break;
            }
        }
    }
    Ok(LearnOutcome {
        q,
        visits,
        steps,
        diagnostics,
    })
}

/// Writes the diagnostics stream as CSV.
pub fn write_diagnostics_csv(path: impl AsRef<Path>, diagnostics: &[EpochDiagnostic]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for d in diagnostics {
        w.serialize(d)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

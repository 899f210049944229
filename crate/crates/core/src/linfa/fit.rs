use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::basis::{project, project_weights, weighted_norm, FeatureBasis};
use super::{apply_operator, Combinator};
use crate::envs::ImpulseEnv;
use crate::error::{Error, Result};
use crate::game::{GameStructure, ImpulseGame, JointAction};
use crate::solver::{solve, Intervention, StatePolicy, StageTerms, ValueField};

/// Weight norm past which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Number of weight updates.
    pub samples: usize,
    pub combinator: Combinator,
    /// Next-state draws per branch when estimating the stage terms.
    pub branch_samples: usize,
    /// Exploration rate of the behaviour policy.
    pub epsilon: f64,
    /// Step-size exponent in `α_t = 1/(1 + t)^ω`.
    pub omega: f64,
    pub episode_len: usize,
    pub seed: u64,
    /// Updates between convergence checks.
    pub epoch: usize,
    /// Stop once `‖r_t − r_{t−epoch}‖ ≤ tol`.
    pub stop_tol: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            combinator: Combinator::F,
            branch_samples: 8,
            epsilon: 0.1,
            omega: 0.85,
            episode_len: 1_000,
            seed: 0,
            epoch: 1_000,
            stop_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    /// Fitted weights `r̂`.
    pub weights: Vec<f64>,
    /// `Φr̂`.
    pub value: ValueField,
    /// Updates actually performed.
    pub samples: usize,
    /// Whether the epoch-to-epoch stopping rule fired.
    pub converged: bool,
}

/// Sampled estimate of `R(s,e) + γ·(Φr)(s')` for one branch.
fn branch_estimate<E: ImpulseEnv>(
    env: &mut E,
    basis: &FeatureBasis,
    r: &[f64],
    s: usize,
    joint: JointAction,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, usize) {
    let gamma = env.discount();
    let mut total = 0.0;
    let mut first = None;
    for _ in 0..k {
        let out = env.step(s, joint, rng);
        total += out.reward + gamma * basis.eval_at(out.next, r);
        first.get_or_insert(out.next);
    }
    (total / k as f64, first.unwrap_or(s))
}

/// Stochastic approximation of the projected fixed point
/// `Φr = Π 𝔉(Φr)` along a single behaviour trajectory.
///
/// At each visited state every branch (each available intervention and the
/// idle action) is sampled generatively, the sampled stage terms are combined
/// into a target, and `r ← r + α_t φ(s)(target − φ(s)ᵀr)`. The trajectory
/// continues along the branch the intervention rule picks on the sampled
/// terms, ε-greedily.
pub fn fit<E: ImpulseEnv>(env: &mut E, basis: &FeatureBasis, config: &FitConfig) -> Result<FitReport> {
    if basis.num_states() != env.num_states() {
        return Err(Error::InvalidArgument(format!(
            "basis has {} rows but the game has {} states",
            basis.num_states(),
            env.num_states()
        )));
    }
    if !(config.omega > 0.5 && config.omega <= 1.0) {
        return Err(Error::InvalidArgument(format!("omega must lie in (0.5, 1], got {}", config.omega)));
    }
    if config.branch_samples == 0 || config.episode_len == 0 || config.epoch == 0 || !(0.0..=1.0).contains(&config.epsilon) {
        return Err(Error::InvalidArgument("bad fit configuration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let p = basis.num_features();
    let mut r = vec![0.0; p];
    let mut s = env.reset(&mut rng);
    let k = config.branch_samples;
    let mut snapshot = r.clone();
    let mut done = 0;
    let mut converged = false;

    for t in 0..config.samples {
        if t > 0 && t % config.episode_len == 0 {
            s = env.reset(&mut rng);
        }
        let (noop, idle_next) = branch_estimate(env, basis, &r, s, JointAction::NOOP, k, &mut rng);
        let mut m1 = Intervention::NONE1;
        let mut next1 = Vec::new();
        for a in env.actions1_at(s) {
            let (q, nx) = branch_estimate(env, basis, &r, s, JointAction::player1(a), k, &mut rng);
            next1.push((a, nx));
            let x = q - env.cost1(s, a);
            if m1.action.is_none() || x > m1.value {
                m1 = Intervention { value: x, action: Some(a) };
            }
        }
        let mut m2 = Intervention::NONE2;
        let mut next2 = Vec::new();
        for b in env.actions2_at(s) {
            let (q, nx) = branch_estimate(env, basis, &r, s, JointAction::player2(b), k, &mut rng);
            next2.push((b, nx));
            let x = q + env.cost2(s, b);
            if m2.action.is_none() || x < m2.value {
                m2 = Intervention { value: x, action: Some(b) };
            }
        }
        let terms = StageTerms { m1, noop, m2 };
        let target = config.combinator.combine(&terms);

        let alpha = (1.0 + t as f64).powf(-config.omega);
        let err = target - basis.eval_at(s, &r);
        for (w, f) in r.iter_mut().zip(basis.features(s)) {
            *w += alpha * f * err;
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Diverged { samples: t + 1, norm });
        }

        let joint = if config.epsilon > 0.0 && rng.gen::<f64>() < config.epsilon {
            let mut slots = vec![0u8];
            if !next1.is_empty() {
                slots.push(1);
            }
            if !next2.is_empty() {
                slots.push(2);
            }
            match slots[rng.gen_range(0..slots.len())] {
                1 => JointAction::player1(next1[rng.gen_range(0..next1.len())].0),
                2 => JointAction::player2(next2[rng.gen_range(0..next2.len())].0),
                _ => JointAction::NOOP,
            }
        } else {
            StatePolicy::from_terms(&terms).executed()
        };
        s = if joint.b != 0 {
            next2.iter().find(|x| x.0 == joint.b).map_or(idle_next, |x| x.1)
        } else if joint.a != 0 {
            next1.iter().find(|x| x.0 == joint.a).map_or(idle_next, |x| x.1)
        } else {
            idle_next
        };
        done = t + 1;
        if done % config.epoch == 0 {
            let moved = r.iter().zip(&snapshot).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            snapshot.clone_from(&r);
            if config.stop_tol.is_some_and(|tol| moved <= tol) {
                converged = true;
                break;
            }
        }
    }
    Ok(FitReport {
        value: basis.eval(&r),
        weights: r,
        samples: done,
        converged,
    })
}

/// Deterministic iteration `r ← argmin_r ‖Φr − 𝔉(Φr_k)‖_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectedIteration {
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Successive ratios `‖Φr_{k+1} − Φr_k‖_w / ‖Φr_k − Φr_{k−1}‖_w`.
    pub ratios: Vec<f64>,
}

pub fn projected_fixed_point(
    game: &ImpulseGame,
    basis: &FeatureBasis,
    weights: &[f64],
    combinator: Combinator,
    tol: f64,
    max_iter: usize,
) -> Result<ProjectedIteration> {
    let mut r = vec![0.0; basis.num_features()];
    let mut prev_step = f64::NAN;
    let mut ratios = Vec::new();
    for k in 0..max_iter {
        let v = basis.eval(&r);
        let target = apply_operator(game, &v, combinator);
        let next = project_weights(basis, weights, &target)?;
        let diff: Vec<f64> = basis.eval(&next).iter().zip(v.iter()).map(|(a, b)| a - b).collect();
        let step = weighted_norm(&diff, weights);
        if prev_step > 1e-12 {
            ratios.push(step / prev_step);
        }
        prev_step = step;
        r = next;
        if step <= tol {
            return Ok(ProjectedIteration {
                weights: r,
                iterations: k + 1,
                converged: true,
                ratios,
            });
        }
        if r.iter().any(|x| !x.is_finite() || x.abs() > DIVERGENCE_NORM) {
            return Err(Error::Diverged {
                samples: k + 1,
                norm: r.iter().map(|x| x * x).sum::<f64>().sqrt(),
            });
        }
    }
    Ok(ProjectedIteration {
        weights: r,
        iterations: max_iter,
        converged: false,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryWeights {
    pub weights: Vec<f64>,
    /// False when the chain has transient states (or power iteration stalled)
    /// and uniform weights were substituted.
    pub ergodic: bool,
}

/// Stationary distribution of the chain under `policy`'s executed actions,
/// by power iteration on the lazy chain `(P + I)/2`.
pub fn stationary_distribution(game: &ImpulseGame, executed: &[JointAction]) -> StationaryWeights {
    let n = game.num_states();
    let mut d = vec![1.0 / n as f64; n];
    let mut converged = false;
    for _ in 0..1_000_000 {
        let mut next: Vec<f64> = d.iter().map(|x| 0.5 * x).collect();
        for (s, &x) in d.iter().enumerate() {
            let e = executed[s];
            for (t, p) in game.kernel_row(s, e.a, e.b).iter().enumerate() {
                next[t] += 0.5 * x * p;
            }
        }
        let delta = next.iter().zip(&d).map(|(a, b)| (a - b).abs()).sum::<f64>();
        d = next;
        if delta < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged || d.iter().any(|&x| x < 1e-12) {
        log::warn!("equilibrium chain is not ergodic; using uniform weights");
        return StationaryWeights {
            weights: vec![1.0 / n as f64; n],
            ergodic: false,
        };
    }
    let total: f64 = d.iter().sum();
    StationaryWeights {
        weights: d.into_iter().map(|x| x / total).collect(),
        ergodic: true,
    }
}

/// `‖Φr̂ − v̂‖_w` against `(1−γ²)^{-1/2}‖Πv̂ − v̂‖_w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub multiplier: f64,
    pub projection_error: f64,
    pub weights: Vec<f64>,
    pub ergodic: bool,
}

/// Slack allowed on top of the bound.
pub const BOUND_SLACK: f64 = 1e-8;

/// Checks the approximation bound for weights `r`, with `v̂` computed exactly
/// and `w` the stationary distribution of the equilibrium chain.
pub fn verify_bound(game: &ImpulseGame, basis: &FeatureBasis, r: &[f64]) -> Result<BoundCheck> {
    if basis.num_states() != game.num_states() || r.len() != basis.num_features() {
        return Err(Error::InvalidArgument("basis/weights do not match the game".into()));
    }
    let exact = solve(game, 1e-12, 1_000_000);
    let executed: Vec<JointAction> = (0..game.num_states()).map(|s| exact.policy.executed(s)).collect();
    let StationaryWeights { weights, ergodic } = stationary_distribution(game, &executed);
    let approx = basis.eval(r);
    let err: Vec<f64> = approx.iter().zip(exact.value.iter()).map(|(a, b)| a - b).collect();
    let lhs = weighted_norm(&err, &weights);
    let proj = project(basis, &weights, &exact.value)?;
    let perr: Vec<f64> = proj.iter().zip(exact.value.iter()).map(|(a, b)| a - b).collect();
    let projection_error = weighted_norm(&perr, &weights);
    let gamma = game.gamma();
    let multiplier = 1.0 / (1.0 - gamma * gamma).sqrt();
    let rhs = multiplier * projection_error;
    Ok(BoundCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_SLACK,
        multiplier,
        projection_error,
        weights,
        ergodic,
    })
}

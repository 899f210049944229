//! Brute-force minimax over deterministic stationary policies.

use serde::Serialize;

use super::{evaluate_policies, solve, EquilibriumPolicy, ValueField};
use crate::error::{Error, Result};
use crate::game::{GameStructure, ImpulseGame};

/// Agreement required between upper value, lower value and `v̂`.
pub const CERTIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Per-state `min_σ² max_σ¹ v`.
    pub upper: ValueField,
    /// Per-state `max_σ¹ min_σ² v`.
    pub lower: ValueField,
    /// Value-iteration solution the bounds are checked against.
    pub value: ValueField,
    /// `‖upper − lower‖∞`.
    pub gap: f64,
    /// `max(‖upper − v̂‖∞, ‖lower − v̂‖∞)`.
    pub solver_gap: f64,
    pub certified: bool,
    pub pairs_evaluated: usize,
}

fn choices<F: Fn(usize) -> Vec<usize>>(num_states: usize, actions_at: F) -> Vec<Vec<usize>> {
    (0..num_states).map(|s| {
        let mut c = vec![0];
        c.extend(actions_at(s));
        c
    }).collect()
}

fn count(choices: &[Vec<usize>]) -> u128 {
    choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX)
}

/// All deterministic stationary maps drawing `s -> choices[s][k]`.
fn enumerate(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(choices.len())];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

/// Enumerates every deterministic stationary policy pair and returns the
/// per-state upper and lower values. Declines when the pair count exceeds
/// `max_enumeration`.
pub fn minimax_oracle(game: &ImpulseGame, max_enumeration: u128) -> Result<OracleReport> {
    let n = game.num_states();
    let c1 = choices(n, |s| game.actions1_at(s));
    let c2 = choices(n, |s| game.actions2_at(s));
    let needed = count(&c1).saturating_mul(count(&c2));
    if needed > max_enumeration {
        return Err(Error::EnumerationBudget {
            needed,
            budget: max_enumeration,
        });
    }
    let pols1 = enumerate(&c1);
    let pols2 = enumerate(&c2);

    // values[i1][i2]
    let mut values = Vec::with_capacity(pols1.len());
    for p1 in &pols1 {
        let row: Vec<ValueField> = pols2
            .iter()
            .map(|p2| evaluate_policies(game, p1, p2))
            .collect::<Result<_>>()?;
        values.push(row);
    }

    let mut upper = vec![f64::INFINITY; n];
    let mut lower = vec![f64::NEG_INFINITY; n];
    for s in 0..n {
        for i2 in 0..pols2.len() {
            let best1 = (0..pols1.len())
                .map(|i1| values[i1][i2][s])
                .fold(f64::NEG_INFINITY, f64::max);
            upper[s] = upper[s].min(best1);
        }
        for row in &values {
            let best2 = row.iter().map(|v| v[s]).fold(f64::INFINITY, f64::min);
            lower[s] = lower[s].max(best2);
        }
    }
    let upper = ValueField(upper);
    let lower = ValueField(lower);
    let value = solve(game, 1e-12, 1_000_000).value;
    let gap = upper.sup_dist(&lower);
    let solver_gap = upper.sup_dist(&value).max(lower.sup_dist(&value));
    Ok(OracleReport {
        certified: gap <= CERTIFY_TOL && solver_gap <= CERTIFY_TOL,
        upper,
        lower,
        value,
        gap,
        solver_gap,
        pairs_evaluated: pols1.len() * pols2.len(),
    })
}

/// Largest improvement any unilateral deterministic deviation achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationGains {
    /// `max_{σ'¹, s} v(σ'¹, σ̂²)(s) − v̂(s)`; non-positive at a saddle point.
    pub player1: f64,
    /// `max_{σ'², s} v̂(s) − v(σ̂¹, σ'²)(s)`; non-positive at a saddle point.
    pub player2: f64,
}

pub fn deviation_gains(
    game: &ImpulseGame,
    policy: &EquilibriumPolicy,
    value: &ValueField,
    max_enumeration: u128,
) -> Result<DeviationGains> {
    let n = game.num_states();
    let c1 = choices(n, |s| game.actions1_at(s));
    let c2 = choices(n, |s| game.actions2_at(s));
    let needed = count(&c1).saturating_add(count(&c2));
    if needed > max_enumeration {
        return Err(Error::EnumerationBudget {
            needed,
            budget: max_enumeration,
        });
    }
    let hat1 = policy.player1_map();
    let hat2 = policy.player2_map();
    let mut player1 = f64::NEG_INFINITY;
    for p1 in enumerate(&c1) {
        let v = evaluate_policies(game, &p1, &hat2)?;
        for s in 0..n {
            player1 = player1.max(v[s] - value[s]);
        }
    }
    let mut player2 = f64::NEG_INFINITY;
    for p2 in enumerate(&c2) {
        let v = evaluate_policies(game, &hat1, &p2)?;
        for s in 0..n {
            player2 = player2.max(value[s] - v[s]);
        }
    }
    Ok(DeviationGains { player1, player2 })
}

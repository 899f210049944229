use nalgebra::{DMatrix, DVector};

use super::ValueField;
use crate::error::{Error, Result};
use crate::game::{GameStructure, ImpulseGame, JointAction};

fn check_policy(game: &ImpulseGame, pol: &[usize], player: u8) -> Result<()> {
    let n = game.num_states();
    if pol.len() != n {
        return Err(Error::InvalidArgument(format!(
            "player {player} policy has {} entries for {n} states",
            pol.len()
        )));
    }
    for (s, &x) in pol.iter().enumerate() {
        let (len, ok) = if player == 1 {
            (game.num_actions1(), x < game.num_actions1() && game.available1(s, x))
        } else {
            (game.num_actions2(), x < game.num_actions2() && game.available2(s, x))
        };
        if x >= len {
            return Err(Error::IndexOutOfRange {
                what: if player == 1 { "player 1 action" } else { "player 2 action" },
                index: x,
                len,
            });
        }
        if !ok {
            return Err(Error::MaskedAction {
                player,
                state: s,
                action: x,
            });
        }
    }
    Ok(())
}

/// Exact value of a pair of deterministic stationary policies.
///
/// At each state the executed pair applies Player 2 precedence, then
/// `(I − γ P_π) v = r_π` is solved directly with `r_π` the effective reward.
pub fn evaluate_policies(game: &ImpulseGame, pol1: &[usize], pol2: &[usize]) -> Result<ValueField> {
    check_policy(game, pol1, 1)?;
    check_policy(game, pol2, 2)?;
    let n = game.num_states();
    let g = game.gamma();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for s in 0..n {
        let joint = JointAction::new(pol1[s], pol2[s]).with_precedence();
        r[s] = game.effective_reward_unchecked(s, joint);
        for (next, p) in game.kernel_row(s, joint.a, joint.b).iter().enumerate() {
            m[(s, next)] -= g * p;
        }
    }
    let v = m
        .lu()
        .solve(&r)
        .expect("I - γP is nonsingular for γ < 1");
    Ok(ValueField(v.iter().copied().collect()))
}

/// Discounted value of the chain where nobody ever acts.
pub fn uncontrolled_value(game: &ImpulseGame) -> ValueField {
    let zeros = vec![0; game.num_states()];
    evaluate_policies(game, &zeros, &zeros).expect("null policies are always valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::*;
    use crate::game::random_game;

    #[test]
    fn geometric_series_examples() {
        let v = evaluate_policies(&g2(), &[1], &[0]).unwrap();
        assert!((v[0] - 3.0).abs() < 1e-12);
        let v = evaluate_policies(&g1(), &[0], &[1]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
        // Player 1's action is suppressed by precedence
        let v = evaluate_policies(&g1(), &[1], &[1]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn null_policies_match_power_series() {
        let g = random_game(5, 1, 1, 2).unwrap();
        let v = uncontrolled_value(&g);
        // truncated series Σ γ^t P^t r
        let mut w = vec![0.0; 5];
        for s in 0..5 {
            let mut dist = vec![0.0; 5];
            dist[s] = 1.0;
            let mut disc = 1.0;
            for _ in 0..600 {
                w[s] += disc * (0..5).map(|i| dist[i] * g.reward(i, 0, 0)).sum::<f64>();
                let mut next = vec![0.0; 5];
                for i in 0..5 {
                    for (j, p) in g.kernel_row(i, 0, 0).iter().enumerate() {
                        next[j] += dist[i] * p;
                    }
                }
                dist = next;
                disc *= g.gamma();
            }
        }
        for s in 0..5 {
            assert!((v[s] - w[s]).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_policies() {
        let mut g = g1();
        assert!(evaluate_policies(&g, &[2], &[0]).is_err());
        assert!(evaluate_policies(&g, &[0, 0], &[0]).is_err());
        g.set_available1(0, 1, false);
        assert!(matches!(
            evaluate_policies(&g, &[1], &[0]),
            Err(Error::MaskedAction { player: 1, .. })
        ));
    }
}

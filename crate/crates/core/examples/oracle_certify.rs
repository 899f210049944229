//! Certifies value iteration on small random games by enumerating stationary policies.
use impulse_games::game::random_game;
use impulse_games::solver::{deviation_gains, minimax_oracle, solve};

fn main() -> impulse_games::Result<()> {
    for seed in 0..5 {
        let game = random_game(3, 1, 1, seed)?;
        let oracle = minimax_oracle(&game, 1 << 20)?;
        let report = solve(&game, 1e-12, 100_000);
        let gains = deviation_gains(&game, &report.policy, &report.value, 1 << 20)?;
        println!(
            "seed {seed}: gap {:.1e}  solver gap {:.1e}  pairs {}  certified {}  deviation gains ({:.1e}, {:.1e})",
            oracle.gap, oracle.solver_gap, oracle.pairs_evaluated, oracle.certified, gains.player1, gains.player2
        );
    }
    Ok(())
}

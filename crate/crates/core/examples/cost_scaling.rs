//! Shows how intervention regions shrink as intervention costs grow.
use impulse_games::game::random_game;
use impulse_games::solver::solve;

fn main() -> impulse_games::Result<()> {
    let base = random_game(8, 2, 2, 11)?;
    for factor in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let mut game = base.clone();
        game.scale_costs(factor);
        let report = solve(&game, 1e-12, 100_000);
        let (mut p1, mut p2) = (0, 0);
        for s in 0..8 {
            let e = report.policy.executed(s);
            p1 += usize::from(e.a != 0);
            p2 += usize::from(e.b != 0);
        }
        println!("cost x{factor:<4}  P1 acts in {p1} states  P2 acts in {p2} states  v(0) = {:.4}", report.value[0]);
    }
    Ok(())
}

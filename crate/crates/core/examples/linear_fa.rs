//! Fits a two-feature linear value function and checks the projection error bound.
use impulse_games::envs::sampling_env;
use impulse_games::game::random_game;
use impulse_games::linfa::{fit, verify_bound, Combinator, FeatureBasis, FitConfig};
use impulse_games::solver::solve;

fn main() -> impulse_games::Result<()> {
    let game = random_game(4, 2, 2, 705)?;
    let basis = FeatureBasis::from_rows(&[
        vec![1.0, -0.8],
        vec![1.0, -0.1],
        vec![1.0, 0.4],
        vec![1.0, 0.9],
    ])?;
    let exact = solve(&game, 1e-12, 100_000);
    for samples in [100_000, 1_000_000] {
        let config = FitConfig { samples, combinator: Combinator::T, ..Default::default() };
        let report = fit(&mut sampling_env(&game), &basis, &config)?;
        let check = verify_bound(&game, &basis, &report.weights)?;
        println!(
            "{samples:>8} samples: r = {:?}  lhs {:.4}  rhs {:.4}  holds {}",
            report.weights, check.lhs, check.rhs, check.holds
        );
    }
    println!("exact v = {:?}", exact.value.0);
    Ok(())
}

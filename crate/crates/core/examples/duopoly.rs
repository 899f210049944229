//! Advertising duopoly on an 11 x 11 sales lattice: equilibrium and a Monte Carlo check.
use impulse_games::envs::{build_duopoly_game, DuopolyParams};
use impulse_games::solver::{simulate, solve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> impulse_games::Result<()> {
    let params = DuopolyParams::default();
    let game = build_duopoly_game(&params)?;
    let report = solve(&game, 1e-8, 1_000_000);
    let s0 = params.state_index(5, 5);
    println!("sweeps {}  v(5,5) = {:.4}", report.sweeps, report.value[s0]);

    for i in (0..params.grid).step_by(2) {
        let row: Vec<String> = (0..params.grid)
            .step_by(2)
            .map(|j| {
                let e = report.policy.executed(params.state_index(i, j));
                format!("{}:{}", e.a, e.b)
            })
            .collect();
        println!("s1 = {i:>2}: {}", row.join(" "));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let returns: Vec<f64> = (0..1000)
        .map(|_| simulate(&game, &report.policy, s0, 400, &mut rng).discounted_return())
        .collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let se = (returns.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    println!("Monte Carlo return {mean:.4} ± {se:.4}");
    Ok(())
}

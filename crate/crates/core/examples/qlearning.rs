//! Model-free Q-learning on a random game, compared with the exact solution.
use impulse_games::envs::sampling_env;
use impulse_games::game::random_game;
use impulse_games::qlearn::{learn, reachable_distance, LearnConfig};
use impulse_games::solver::{extract_policy, solve};

fn main() -> impulse_games::Result<()> {
    let game = random_game(3, 1, 1, 42)?;
    let exact = solve(&game, 1e-12, 100_000);
    let config = LearnConfig { steps: 1_000_000, epoch: 100_000, seed: 7, ..Default::default() };
    let out = learn(&mut sampling_env(&game), &config, Some(&exact.q))?;
    for d in &out.diagnostics {
        println!("step {:>8}  delta {:.4}  dist {:.4}", d.step, d.sup_norm_delta, d.dist_to_qhat.unwrap_or(f64::NAN));
    }
    let dist = reachable_distance(&game, &out.q, &exact.q, &out.visits, 1);
    println!("final distance {dist:.4}  (|Q̂|∞ = {:.4})", exact.q.sup_norm());
    let learned = extract_policy(&game, &out.q);
    for s in 0..3 {
        let (l, e) = (learned.executed(s), exact.policy.executed(s));
        println!("state {s}: learned ({}, {})  exact ({}, {})", l.a, l.b, e.a, e.b);
    }
    Ok(())
}

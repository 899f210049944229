//! Solves a game where each player may intervene a limited number of times.
use impulse_games::budget::{simulate_budgeted, solve_budgeted, value_table};
use impulse_games::game::load;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> impulse_games::Result<()> {
    let base = load(concat!(env!("CARGO_MANIFEST_DIR"), "/data/g2.json"))?;
    let (aug, report) = solve_budgeted(&base, 3, 0, 1e-12, 100_000)?;
    for row in value_table(&aug, &report.value.0) {
        println!("{}  v = {:.6}", row.state, row.value);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let run = simulate_budgeted(&aug, &report.policy, 0, 8, &mut rng)?;
    for (step, (s, y, z)) in run.trajectory.steps.iter().zip(&run.states) {
        println!("t {}  (s,y,z) = ({s},{y},{z})  a {}  reward {:.3}", step.t, step.executed_a, step.reward);
    }
    println!("interventions: {} / {}", run.interventions1, run.interventions2);
    Ok(())
}

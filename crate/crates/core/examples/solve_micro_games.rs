//! Solves the three single-state micro games and prints value and policy.
use impulse_games::game::load;
use impulse_games::solver::solve;

fn main() -> impulse_games::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    for name in ["g1", "g2", "g3"] {
        let game = load(format!("{dir}/{name}.json"))?;
        let report = solve(&game, 1e-12, 100_000);
        let joint = report.policy.executed(0);
        println!(
            "{name}: v = {:.10}  sweeps = {}  executed (a, b) = ({}, {})",
            report.value[0], report.sweeps, joint.a, joint.b
        );
    }
    Ok(())
}

//! The `impulse` command line.
//!
//! Every subcommand reads a game (from a file, a generator spec or duopoly
//! parameters), validates it before touching the output directory, and
//! writes its results under `--out`. Exit codes: 0 ok, 1 input error,
//! 2 non-convergence or failed certification.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::budget::{simulate_budgeted, solve_budgeted, value_table};
use crate::envs::{build_duopoly_game, sampling_env, DuopolyParams};
use crate::error::{Error, Result};
use crate::game::{random_game_with, GameSpecFile, GameStructure, ImpulseGame, RandomGameConfig};
use crate::linfa::{fit, verify_bound, Combinator, FeatureBasis, FitConfig};
use crate::qlearn::{learn, write_diagnostics_csv, LearnConfig};
use crate::solver::{minimax_oracle, simulate, solve, SolveReport};

#[derive(Debug, Parser)]
#[command(name = "impulse", version, about = "Two-player zero-sum stochastic games with impulse control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct GameSource {
    /// Game-spec JSON file.
    #[arg(long, value_name = "PATH")]
    pub game: Option<PathBuf>,
    /// Random game `S,A,B,SEED` (A, B count non-null actions).
    #[arg(long, value_name = "S,A,B,SEED")]
    pub gen: Option<String>,
    /// Duopoly parameter block (JSON or TOML), or `default`.
    #[arg(long, value_name = "PATH")]
    pub duopoly: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[command(flatten)]
    pub source: GameSource,
    /// Override the discount factor.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_sweeps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RolloutArgs {
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Start state (base state for budgeted runs).
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent rollouts; the first one is written out step by step.
    #[arg(long, default_value_t = 1)]
    pub rollouts: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value iteration; writes report.json and policy.csv.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Model-free Q-learning; writes q.json and diagnostics.csv.
    Learn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200_000)]
        steps: usize,
        /// Initial exploration rate.
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.01)]
        epsilon_end: f64,
        #[arg(long, default_value_t = 0.85)]
        omega: f64,
        #[arg(long, default_value_t = 200)]
        episode_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Solve, then roll out the equilibrium policy; writes trajectory.csv and intervention_times.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        rollout: RolloutArgs,
    },
    /// Brute-force minimax certification; writes oracle.json.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Largest number of policy pairs to enumerate.
        #[arg(long, default_value_t = 10_000_000)]
        max_enum: u128,
    },
    /// Solve and simulate under intervention budgets; writes budget_report.json and budget_trajectory.csv.
    Budget {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        n1: usize,
        #[arg(long, default_value_t = 1)]
        n2: usize,
        #[command(flatten)]
        solve: SolveArgs,
        #[command(flatten)]
        rollout: RolloutArgs,
    },
    /// Writes the selected game as game.json.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Cost floor for generated games.
        #[arg(long)]
        cost_floor: Option<f64>,
    },
    /// Linear value approximation; writes fit.json.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "F")]
        combinator: Combinator,
        /// Weight updates.
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        branch_samples: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.85)]
        omega: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A loaded game plus the optional feature basis from its file.
struct Loaded {
    game: ImpulseGame,
    basis: Option<Vec<Vec<f64>>>,
}

fn parse_gen(spec: &str) -> Result<(usize, usize, usize, u64)> {
    let bad = || Error::InvalidArgument(format!("--gen expects S,A,B,SEED, got `{spec}`"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let n = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
    let seed = parts[3].parse::<u64>().map_err(|_| bad())?;
    let ns = n(0)?;
    if ns == 0 {
        return Err(bad());
    }
    Ok((ns, n(1)?, n(2)?, seed))
}

fn load(common: &Common, cost_floor: Option<f64>) -> Result<Loaded> {
    let src = &common.source;
    let mut loaded = if let Some(path) = &src.game {
        let file = GameSpecFile::read(path)?;
        Loaded {
            game: file.to_game()?,
            basis: file.basis,
        }
    } else if let Some(spec) = &src.gen {
        let (ns, a, b, seed) = parse_gen(spec)?;
        let mut config = RandomGameConfig::default();
        if let Some(g) = common.gamma {
            config.gamma = g;
        }
        if let Some(k) = cost_floor {
            config.cost_floor = k;
        }
        Loaded {
            game: random_game_with(ns, a, b, seed, config)?,
            basis: None,
        }
    } else if let Some(path) = &src.duopoly {
        let mut params = if path.as_os_str() == "default" {
            DuopolyParams::default()
        } else {
            DuopolyParams::read(path)?
        };
        if let Some(g) = common.gamma {
            params.gamma = g;
        }
        Loaded {
            game: build_duopoly_game(&params)?,
            basis: None,
        }
    } else {
        return Err(Error::InvalidArgument("no game source given".into()));
    };
    if let Some(g) = common.gamma {
        if src.game.is_some() {
            loaded.game.set_gamma(g);
            loaded.game = loaded.game.validated()?;
        }
    }
    Ok(loaded)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Serialize)]
struct PolicyRow {
    state: usize,
    value: f64,
    p1_acts: bool,
    p1_action: usize,
    p2_acts: bool,
    p2_action: usize,
    executed_a: usize,
    executed_b: usize,
}

fn policy_rows(report: &SolveReport) -> Vec<PolicyRow> {
    report
        .policy
        .states
        .iter()
        .enumerate()
        .map(|(s, p)| {
            let e = p.executed();
            PolicyRow {
                state: s,
                value: report.value[s],
                p1_acts: p.p1_acts,
                p1_action: p.p1_action.unwrap_or(0),
                p2_acts: p.p2_acts,
                p2_action: p.p2_action.unwrap_or(0),
                executed_a: e.a,
                executed_b: e.b,
            }
        })
        .collect()
}

fn check_solve_args(a: &SolveArgs) -> Result<()> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(Error::InvalidArgument("--tol must be a positive number".into()));
    }
    Ok(())
}

fn check_rollouts(a: &RolloutArgs, num_states: usize) -> Result<()> {
    if a.start >= num_states {
        return Err(Error::IndexOutOfRange {
            what: "start state",
            index: a.start,
            len: num_states,
        });
    }
    if a.rollouts == 0 {
        return Err(Error::InvalidArgument("--rollouts must be >= 1".into()));
    }
    Ok(())
}

/// Mean and standard error.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn cmd_solve(common: &Common, args: &SolveArgs) -> Result<i32> {
    check_solve_args(args)?;
    let Loaded { game, .. } = load(common, None)?;
    let report = solve(&game, args.tol, args.max_sweeps);
    prepare_out(&common.out)?;
    write_json(&common.out.join("report.json"), &report.to_json(None))?;
    write_csv(&common.out.join("policy.csv"), policy_rows(&report))?;
    if !report.converged {
        eprintln!(
            "warning: stopped after {} sweeps, residual {:.3e}",
            report.sweeps, report.residual
        );
        return Ok(2);
    }
    Ok(0)
}

pub fn cmd_learn(common: &Common, config: &LearnConfig) -> Result<i32> {
    let Loaded { game, .. } = load(common, None)?;
    let reference = solve(&game, 1e-10, 1_000_000);
    let out = learn(&mut sampling_env(&game), config, Some(&reference.q))?;
    prepare_out(&common.out)?;
    write_json(
        &common.out.join("q.json"),
        &json!({
            "q": out.q,
            "visits": out.visits,
            "steps": out.steps,
            "seed": config.seed,
        }),
    )?;
    write_diagnostics_csv(common.out.join("diagnostics.csv"), &out.diagnostics)?;
    Ok(0)
}

pub fn cmd_simulate(common: &Common, solve_args: &SolveArgs, ro: &RolloutArgs) -> Result<i32> {
    check_solve_args(solve_args)?;
    let Loaded { game, .. } = load(common, None)?;
    check_rollouts(ro, game.num_states())?;
    let report = solve(&game, solve_args.tol, solve_args.max_sweeps);
    let mut rng = ChaCha8Rng::seed_from_u64(ro.seed);
    let mut returns = Vec::with_capacity(ro.rollouts);
    let mut first = None;
    for _ in 0..ro.rollouts {
        let tr = simulate(&game, &report.policy, ro.start, ro.steps, &mut rng);
        returns.push(tr.discounted_return());
        first.get_or_insert(tr);
    }
    let first = first.expect("at least one rollout");
    let (mean, se) = mean_se(&returns);
    prepare_out(&common.out)?;
    write_csv(&common.out.join("trajectory.csv"), &first.steps)?;
    write_json(
        &common.out.join("intervention_times.json"),
        &json!({
            "tau": first.taus,
            "rho": first.rhos,
            "start": ro.start,
            "steps": ro.steps,
            "seed": ro.seed,
            "discounted_return": first.discounted_return(),
            "value_at_start": report.value[ro.start],
            "rollouts": ro.rollouts,
            "mean_return": mean,
            "standard_error": se,
        }),
    )?;
    Ok(if report.converged { 0 } else { 2 })
}

pub fn cmd_oracle(common: &Common, max_enum: u128) -> Result<i32> {
    let Loaded { game, .. } = load(common, None)?;
    let report = match minimax_oracle(&game, max_enum) {
        Ok(r) => r,
        Err(e @ Error::EnumerationBudget { .. }) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
        Err(e) => return Err(e),
    };
    prepare_out(&common.out)?;
    write_json(&common.out.join("oracle.json"), &report)?;
    Ok(if report.certified { 0 } else { 2 })
}

#[derive(Serialize)]
struct BudgetStep {
    t: usize,
    state: String,
    s: usize,
    y: usize,
    z: usize,
    executed_a: usize,
    executed_b: usize,
    reward: f64,
    cumulative_return: f64,
}

pub fn cmd_budget(
    common: &Common,
    n1: usize,
    n2: usize,
    solve_args: &SolveArgs,
    ro: &RolloutArgs,
) -> Result<i32> {
    check_solve_args(solve_args)?;
    let Loaded { game, .. } = load(common, None)?;
    check_rollouts(ro, game.num_states())?;
    let (aug, report) = solve_budgeted(&game, n1, n2, solve_args.tol, solve_args.max_sweeps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ro.seed);
    let mut returns = Vec::with_capacity(ro.rollouts);
    let mut max_used = (0, 0);
    let mut first = None;
    for _ in 0..ro.rollouts {
        let tr = simulate_budgeted(&aug, &report.policy, ro.start, ro.steps, &mut rng)?;
        returns.push(tr.trajectory.discounted_return());
        max_used = (max_used.0.max(tr.interventions1), max_used.1.max(tr.interventions2));
        first.get_or_insert(tr);
    }
    let first = first.expect("at least one rollout");
    let (mean, se) = mean_se(&returns);
    let labels = aug.labels();
    let mut doc = report.to_json(Some(&labels));
    doc["n1"] = json!(n1);
    doc["n2"] = json!(n2);
    doc["value_table"] = json!(value_table(&aug, &report.value));
    doc["simulation"] = json!({
        "start": labels[aug.index(ro.start, n1, n2)],
        "steps": ro.steps,
        "rollouts": ro.rollouts,
        "seed": ro.seed,
        "max_interventions1": max_used.0,
        "max_interventions2": max_used.1,
        "mean_return": mean,
        "standard_error": se,
        "value_at_start": report.value[aug.index(ro.start, n1, n2)],
    });
    prepare_out(&common.out)?;
    write_json(&common.out.join("budget_report.json"), &doc)?;
    let rows = first.trajectory.steps.iter().zip(&first.states).map(|(step, &(s, y, z))| BudgetStep {
        t: step.t,
        state: labels[step.s].clone(),
        s,
        y,
        z,
        executed_a: step.executed_a,
        executed_b: step.executed_b,
        reward: step.reward,
        cumulative_return: step.cumulative_return,
    });
    write_csv(&common.out.join("budget_trajectory.csv"), rows)?;
    Ok(if report.converged { 0 } else { 2 })
}

pub fn cmd_gen(common: &Common, cost_floor: Option<f64>) -> Result<i32> {
    if cost_floor.is_some() && common.source.gen.is_none() {
        return Err(Error::InvalidArgument("--cost-floor only applies to --gen".into()));
    }
    let Loaded { game, basis } = load(common, cost_floor)?;
    let mut file = GameSpecFile::from_game(&game);
    file.basis = basis;
    prepare_out(&common.out)?;
    file.write(common.out.join("game.json"))?;
    Ok(0)
}

pub fn cmd_fit(common: &Common, config: &FitConfig) -> Result<i32> {
    let Loaded { game, basis } = load(common, None)?;
    let basis = match basis {
        Some(rows) => {
            if rows.len() != game.num_states() {
                return Err(Error::InvalidArgument(format!(
                    "basis has {} rows but the game has {} states",
                    rows.len(),
                    game.num_states()
                )));
            }
            FeatureBasis::from_rows(&rows)?
        }
        None => FeatureBasis::identity(game.num_states()),
    };
    let report = match fit(&mut sampling_env(&game), &basis, config) {
        Ok(r) => r,
        Err(e @ Error::Diverged { .. }) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
        Err(e) => return Err(e),
    };
    let bound = verify_bound(&game, &basis, &report.weights)?;
    prepare_out(&common.out)?;
    write_json(
        &common.out.join("fit.json"),
        &json!({
            "r_hat": report.weights,
            "value": report.value,
            "samples": report.samples,
            "combinator": config.combinator,
            "lhs": bound.lhs,
            "rhs": bound.rhs,
            "holds": bound.holds,
            "multiplier": bound.multiplier,
            "projection_error": bound.projection_error,
            "stationary_weights": bound.weights,
            "ergodic": bound.ergodic,
            "seed": config.seed,
        }),
    )?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { common, solve } => cmd_solve(&common, &solve),
        Command::Learn {
            common,
            steps,
            epsilon,
            epsilon_end,
            omega,
            episode_len,
            seed,
        } => {
            let config = LearnConfig {
                steps,
                episode_len,
                epsilon_start: epsilon,
                epsilon_end,
                omega,
                seed,
                ..Default::default()
            };
            cmd_learn(&common, &config)
        }
        Command::Simulate { common, solve, rollout } => cmd_simulate(&common, &solve, &rollout),
        Command::Oracle { common, max_enum } => cmd_oracle(&common, max_enum),
        Command::Budget {
            common,
            n1,
            n2,
            solve,
            rollout,
        } => cmd_budget(&common, n1, n2, &solve, &rollout),
        Command::Gen { common, cost_floor } => cmd_gen(&common, cost_floor),
        Command::Fit {
            common,
            combinator,
            steps,
            branch_samples,
            epsilon,
            omega,
            seed,
        } => {
            let config = FitConfig {
                samples: steps,
                combinator,
                branch_samples,
                epsilon,
                omega,
                seed,
                ..Default::default()
            };
            cmd_fit(&common, &config)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_spec_parsing() {
        assert_eq!(parse_gen("3, 1,2,7").unwrap(), (3, 1, 2, 7));
        assert!(parse_gen("3,1,2").is_err());
        assert!(parse_gen("0,1,1,1").is_err());
        assert!(parse_gen("a,1,1,1").is_err());
    }

    #[test]
    fn sources_are_exclusive() {
        assert!(Cli::try_parse_from(["impulse", "solve", "--gen", "2,1,1,0", "--game", "x.json"]).is_err());
        assert!(Cli::try_parse_from(["impulse", "solve"]).is_err());
        assert!(Cli::try_parse_from(["impulse", "solve", "--gen", "2,1,1,0"]).is_ok());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
    }
}

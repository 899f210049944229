use std::path::PathBuf;

use thiserror::Error;

use crate::game::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid game: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration of {needed} policy pairs exceeds budget of {budget}")]
    EnumerationBudget { needed: u128, budget: u128 },

    #[error("feature basis is rank deficient (rank {rank} < {columns})")]
    RankDeficient { rank: usize, columns: usize },

    #[error("weight iteration diverged after {samples} samples (|r| = {norm:e})")]
    Diverged { samples: usize, norm: f64 },

    #[error("non-finite update at step {step} (state {state})")]
    NonFinite { step: usize, state: usize },

    #[error("policy requested unavailable action {action} for player {player} at state {state}")]
    MaskedAction {
        player: u8,
        state: usize,
        action: usize,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    let mut out = shown.join("; ");
    if violations.len() > 5 {
        out.push_str(&format!("; ... ({} more)", violations.len() - 5));
    }
    out
}

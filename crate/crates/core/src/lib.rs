pub mod budget;
pub mod cli;
pub mod envs;
pub mod error;
pub mod game;
pub mod linfa;
pub mod qlearn;
pub mod solver;

pub use error::{Error, Result};

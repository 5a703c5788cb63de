//! Simulation and equilibrium analysis of EWL-quantized prisoner's dilemma
//! games: the two-player game and a three-player Bayesian variant in which
//! player A faces one of two types of player B.

pub mod circuit;
pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod game;
pub mod grid;
pub mod io;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};

#![allow(clippy::needless_range_loop)] // index loops mirror the matrix algebra

//! Solver library for constrained stochastic games.
//!
//! Two game classes are supported:
//!
//! * two-player single-controller games (player 2 drives the transitions,
//!   player 1 carries subscription constraints, player 2 carries realization
//!   constraints) under the average or discounted cost criterion, and
//! * N-player games with independent Markov chains and jointly-coupled costs
//!   under the average cost criterion.
//!
//! Stationary Nash equilibria of both classes are characterized as the
//! zero-objective global minima of assembled mathematical programs. The crate
//! provides the game model, a dense primal/dual simplex engine, occupation
//! measure algebra, best-response LP builders, program assembly, an
//! equilibrium search with independent certification, and Monte-Carlo
//! validation.

pub mod br;
pub mod chain;
mod dense;
pub mod game;
pub mod lp;
pub mod mp;
mod randutil;
pub mod sim;
pub mod solver;

pub use game::{
    builtin_example, parse_game, Criterion, Game, IndependentGame, SingleControllerGame,
    StationaryStrategy, ValidationReport,
};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use solver::{
    grid_oracle, refine_equilibrium, solve_nash, verify_nash, NashCertificate, SolverConfig,
    SolverError, Verdict,
};

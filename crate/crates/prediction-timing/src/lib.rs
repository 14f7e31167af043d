//! When should an expert commit to a prediction?
//!
//! A forecaster watches a symmetric random walk `S_t` and may, exactly once,
//! predict its final resting point. Predicting when `t` rounds remain and the
//! walk sits at `c` earns `c^2/t` relative to always predicting at the start.
//! Waiting is free but the chance to predict at the current excursion is
//! gone. This crate computes the optimal timing rule, simulates it, and
//! cross-checks it against analytic growth bounds.
//!
//! The optimal rule is a time-varying threshold: predict as soon as
//! `|S_t| >= theta(t)`. The value of the game grows like `2 log log T`,
//! the same iterated logarithm that governs the walk's extreme excursions.
//!
//! Modules:
//!
//! * [`solver`]: value iteration on a grid; produces a [`solver::PolicyTable`]
//!   with thresholds, values at the origin, and game values per horizon.
//! * [`sim`]: deterministic Monte Carlo over shared path ensembles; competing
//!   stopping rules, tail statistics, drift checks, and a market-scoring
//!   scenario with partial foresight.
//! * [`bounds`]: closed-form upper/lower envelopes for the game value at
//!   horizons no solver can reach.
//! * [`model`]: Gaussian primitives, tail sandwich, log-score rewards.
//! * [`runner`]: the artifact pipeline behind the CLI; writes CSV/JSON with
//!   byte-identical reruns, plus the self-verification battery.
//!
//! Each capability has a runnable demo under `examples/`; start with
//! `cargo run --example solve_policy`.
//!
//! ```
//! use prediction_timing::solver::{solve, SolverConfig};
//!
//! let cfg = SolverConfig::with_grid(2, 0.1, 0.01).unwrap();
//! let table = solve(&cfg).unwrap();
//! // with one round left never wait; with two, wait inside |c| < sqrt(2)
//! assert_eq!(table.theta(1).unwrap(), 0.0);
//! assert!((table.theta(2).unwrap() - 1.4142).abs() < 0.02);
//! assert!((table.capital_psi(2).unwrap() - 1.242).abs() < 0.01);
//! ```

pub mod bounds;
pub mod error;
pub mod model;
pub mod runner;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};

//! Symbolic regression with genetic programming, guided by description
//! length and classic information criteria.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`expr`] — immutable expression trees with an infix reader/printer.
//! * [`eval`] — batch evaluation over datasets and exact parameter
//!   Jacobians via forward-mode differentiation.
//! * [`fit`] — Levenberg-Marquardt parameter fitting with profiled
//!   Gaussian noise variance.
//! * [`criteria`] — AIC, BIC, BIC-SR, description length (function +
//!   parameter complexity), and fractional Bayes factors.
//! * [`nsga`] — nondominated sorting and crowding distances.
//! * [`gp`] — the evolutionary search engine (multi- and single-objective
//!   variants) producing per-generation selection traces.
//! * [`data`] — CSV ingestion, split protocols, and synthetic benchmark
//!   generators.
//! * [`stats`] — pairwise win/tie tallies and a Bayesian Bradley-Terry
//!   posterior over method abilities.
//!
//! Population evaluation is data-parallel when the `parallel` feature is
//! enabled (the default); disabling it yields a fully sequential build with
//! identical results.

pub mod criteria;
pub mod data;
pub mod eval;
pub mod expr;
pub mod fit;
pub mod gp;
pub mod nsga;
pub mod par;
pub mod rng;
pub mod stats;

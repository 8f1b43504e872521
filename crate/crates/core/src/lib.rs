//! Finite-difference + embedded Runge-Kutta Cash-Karp solver for semilinear
//! evolution equations
//!
//! ```text
//! u_t = u_xx + L(u, u_x) + N(u, u_x),   x in [a, b],  t in [0, tau]
//! ```
//!
//! with Dirichlet data, together with a computable after-the-fact estimate of
//! the absolute global error of the numerical solution, and a Bayesian
//! inverse-problem layer that refines the forward-map mesh until that error
//! estimate stays below the expected-Bayes-factor budget.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command line live in the `fdrk` companion crate.
#![no_std]

extern crate alloc;

pub mod band;
pub mod bayes;
pub mod discretize;
pub mod error;
pub mod estimate;
pub mod model;
pub mod rkck;


pub use discretize::{Linearization, Mesh1D, Semidiscrete};
pub use error::{Error, Result};
pub use estimate::{solve_with_error, SolveConfig, SolveResult, TePolicy};
pub use model::{Benchmark, BurgersFisher, Fisher, FitzhughNagumo, PdeModel, PureDiffusion};
pub use rkck::{ButcherTableau, TimeGrid, CASH_KARP};

/// Infinity norm of a slice; `0.0` for an empty slice.
pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(num_traits::Float::abs(*x)))
}

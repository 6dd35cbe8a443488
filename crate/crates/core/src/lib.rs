//! Numerical laboratory for the coupled singular reaction-diffusion system
//!
//! ```text
//! u_t - Δu = λ α(x) f(v),   v_t - Δv = μ β(x) g(u)   in Ω,   u = v = 0 on ∂Ω,
//! ```
//!
//! with `f`, `g` blowing up at level 1 (MEMS-type), and its stationary
//! counterpart. The crate computes minimal stationary solutions by monotone
//! iteration, traces the critical curve separating existence from
//! nonexistence in the `(λ, μ)` plane, computes the principal eigenvalue of
//! the linearized coupled operator, integrates the evolution with quench
//! detection, and evaluates the closed-form quench-time and convergence-rate
//! certificates against simulations.

pub mod certificates;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod output;
pub mod problem;
pub mod spectra;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{Domain, Field, Grid, Laplacian};
pub use model::{InitialData, Model, Nonlinearity, PairField, ParamPoint, Profile};
pub use problem::Problem;

//! Stein-method certificates for Wasserstein distances.
//!
//! The crate evaluates upper bounds on `W_p(nu, mu)` from samples of a
//! same-marginal pair process `(X_0, X_t)`, and checks them against exact
//! empirical transport distances. Alongside the bound engines it ships the
//! three stochastic constructions the bounds are exercised on: exchangeable
//! pairs for normalized sums, random walks on k-nearest-neighbour graphs of
//! the flat torus, and a coordinate-wise Langevin sampler.
//!
//! Everything that draws random numbers takes an explicit seed and derives
//! per-task substreams from it, so results do not depend on thread count.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clt;
pub mod error;
pub mod graph;
pub mod hermite;
pub mod lmc;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod stein;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use hermite::MultiIndex;
pub use stein::{BoundConfig, BoundReport, DiffusionSpec, PairSampler};
pub use tensor::SymmetricTensor;
pub use transport::EmpiricalMeasure;

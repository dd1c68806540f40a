//! Numerical laboratory for excess-risk bounds of Gibbs empirical risk minimization.
//!
//! The crate evaluates the bound formulas for Gibbs-ERM on analytic landscapes
//! (quadratics, double-wells, a C² spline double-well and a least-squares data
//! model) and checks them against independent oracles: tensor and polar
//! quadrature of the Gibbs measure, exact and Markov-chain samplers, and
//! closed-form truncated-Gaussian calculus.
//!
//! Modules are layered bottom-up: [`specfun`] and [`linalg`] have no
//! dependencies, [`landscape`] builds on them, [`bounds`] and [`sampler`]
//! consume minima descriptors, and [`oracle`] provides the ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod exec;
pub mod landscape;
pub mod linalg;
pub mod lowdisc;
pub mod oracle;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
pub use exec::ExecPolicy;

//! Simulation and nonparametric Bayesian inference for scalar-noise jump diffusions
//!
//! ```text
//! dX_t = b(X_t) dt + dW_t + dJ_t
//! ```
//!
//! where `b` is a drift field built from a Dirichlet-Laplacian sine series on a
//! box with a confining tail, and `J` is a compound-Poisson process whose jump
//! intensity measure is a finite mixture of box-truncated Gaussian kernels.
//!
//! The crate provides
//!
//! * model types with validity checks: commutativity of a diffusion field with
//!   itself (reducibility to unit noise), Lipschitz/growth/confinement constants
//!   and their violation witnesses, and the integro-differential generator;
//! * an Euler-Maruyama simulator with exact jump-time insertion, deterministic
//!   per-replicate noise streams, Monte Carlo semigroup estimates and a weak
//!   (semigroup) distance between models;
//! * priors: a truncated Karhunen-Loeve Gaussian law over drift coefficients and
//!   a stick-breaking Dirichlet-process mixture over jump measures;
//! * likelihood machinery: path Girsanov log-weights, a computable upper bound
//!   on the per-unit-time Kullback-Leibler divergence between path laws, and
//!   kernel transition-density estimates;
//! * pseudo-marginal Metropolis-Hastings over drift and jump parameters, and an
//!   empirical posterior-contraction metric in the weak topology.

pub mod error;
pub mod inference;
pub mod likelihood;
pub mod model;
pub mod priors;
pub mod quad;
pub(crate) mod rng;
pub mod sim;
pub(crate) mod vecops;

pub use error::Error;
pub use model::{DomainSpec, DriftSpec, JumpDiffusionModel, LevyAtom, LevyMixture};

/// Crate version, for embedding in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Bethe free energy for binary pairwise (Ising-type) graphical models.
//!
//! The crate works on the *Bethe box*: every pairwise pseudo-marginal is
//! eliminated in favour of its stationary value, so the free energy becomes
//! a function of the singleton vector `q ∈ (0,1)^N` alone. On top of that
//! representation it provides
//!
//! - the free energy, its analytic gradient and Hessian ([`bethe`]),
//! - two sufficient convexity certificates and the critical inverse
//!   temperatures they imply ([`convexity`]),
//! - a projected quasi-Newton minimizer with a Wolfe line search
//!   ([`optimizer`]),
//! - brute-force exact inference as ground truth ([`exact`]) and the error
//!   measures comparing both ([`metrics`]),
//! - the per-cell logic of the phase-transition sweeps ([`experiments`]).
//!
//! Everything here is `no_std` + `alloc`; file formats, the CLI and the
//! parallel sweep driver live in the `bethe` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bethe;
pub mod convexity;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod optimizer;
pub mod poly;
pub mod rng;

pub use bethe::{BetheHessian, BethePoint, EdgeAux, PairTable, XiDerivatives};
pub use convexity::{ConvexityReport, PsiPolynomial, ThresholdTable};
pub use error::{Error, Result};
pub use exact::ExactSolution;
pub use graph::{Edge, GraphFamily, Model, Topology};
pub use metrics::ErrorRecord;
pub use optimizer::{MinimizationResult, OptimizerConfig, RestartSummary};

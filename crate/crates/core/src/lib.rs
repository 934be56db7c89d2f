//! Suboptimal LQ regulator design with asymmetric Lyapunov-like matrices.
//!
//! The pipeline: assemble the design LMIs ([`lmi`]), solve them
//! ([`sdpsolve`]), recover `P = Y X^-1` and the gain `K = R^-1 B^T P`
//! ([`design`]), and check every certificate against independent oracles
//! ([`verify`], [`lyapunov`]). [`consensus`] applies the structured design to
//! scalar agents on a path graph.

pub mod consensus;
pub mod design;
pub mod lmi;
pub mod lyapunov;
pub mod matops;
pub mod sdpsolve;
pub mod system;
pub mod verify;

pub use design::{DesignCertificate, DesignError, DesignOptions, DesignProblem};
pub use matops::{Matrix, Vector};
pub use system::{LtiSystem, QuadraticCost};

//! Boundary integral solver for two-dimensional time-harmonic elastic scattering.
//!
//! Second-kind integral equations are discretized by a Nyström scheme on Gauss–Legendre
//! panels with kernel-split product integration. Corners are handled by recursively
//! compressed inverse preconditioning on dyadically graded local meshes.

pub mod assembly;
pub mod cli;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod rcip;
pub mod special;

pub use error::{Error, Result};

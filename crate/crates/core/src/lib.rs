//! Consecutive random subdivision of convex polygons: flatness rates,
//! Lyapunov spectra of the transfer matrices and triangle shape laws.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod lyapunov;
pub mod matrices;
pub mod parallel;
pub mod quadrature;
pub mod shapedist;
pub mod rng;
pub mod splitdist;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{EdgeChain, TriangleShape};
pub use rng::RngStream;
pub use splitdist::{SplitKind, SplitSpec};

//! Potential-weighted connective constants and Gibbs uniqueness thresholds
//! for repulsive pair-potential point processes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod connective;
pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod potentials;
pub mod quadrature;
pub mod recursion;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Norm, Space};
pub use potentials::{DisplacementSampler, Energy, MayerWeight, Potential, PotentialKind, RadialTable};

//! Exact finite-volume Gibbs sampling by Poisson rejection, and estimators
//! for the density identities of repulsive point processes.
//!
//! Against a Poisson process of intensity `lambda` the Gibbs measure has
//! density proportional to `e^{-H} <= 1`, so accepting a Poisson proposal
//! with probability `e^{-H}` yields exact, independent draws.

mod estimators;
mod grid;
mod region;
mod sampler;

pub use estimators::{
    check_domination, check_ruelle, estimate_density, estimate_partition, estimate_tilted_density,
    poisson_count_test, verify_kpoint_product, verify_recursion_identity, ChiSquareReport, DominationReport,
    Estimate, IdentityReport, PartitionEstimate, ProductReport, RuelleCheck, MIN_WEIGHT_MASS,
};
pub use grid::{GridKind, QuadGrid, MIN_RESOLUTION};
pub use region::{Boundary, BoxRegion, GibbsModel, MAX_EXPECTED_POINTS};
pub use sampler::{
    acceptance_sweep, sample_gibbs, GibbsSampleBatch, PointConfiguration, BLOCK_CONFIGS, MIN_ACCEPTANCE,
    PROPOSAL_PATIENCE,
};

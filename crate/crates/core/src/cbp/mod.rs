//! Controlled branching processes
//! `Z_n = Σ_{j=1}^{φ_{n−1}(Z_{n−1})} X_{n−1,j}` with i.i.d. offspring `X`
//! and a random control `φ` choosing the number of progenitors.

mod control;
mod initial;
mod model;
mod offspring;
mod simulate;

pub use control::{
    BernoulliRounding, ControlLaw, ControlMechanism, IdentityControl, LinearControl,
    PoissonImmigration, A2_CHECK_RANGE,
};
pub use initial::{FixedInitial, InitialLaw, InitialSampler, PoissonInitial};
pub use model::{CbpModel, Criticality, ModelBuilder, VarianceBound, A1_CHECK_RANGE};
pub use offspring::{
    DeterministicOffspring, GeometricOffspring, OffspringLaw, OffspringSampler, PoissonOffspring,
};
pub use simulate::{sample_generation, GenerationOverflow, Trajectory};

/// `|observed − expected| ≤ z·se`, with a round-off floor so zero-variance
/// laws compare exactly.
pub(crate) fn within_se(observed: f64, expected: f64, se: f64, z: f64) -> bool {
    (observed - expected).abs() <= z * se + 1e-9 * expected.abs().max(1.0)
}

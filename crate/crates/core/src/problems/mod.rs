//! Objectives with value / subgradient oracles, and their synthesis from a
//! seed: LAD matrix sensing, LAD matrix regression and hinge-loss matrix
//! classification.

mod hinge;
mod operator;
mod power;
mod regression;
mod sensing;
mod spec;

pub use hinge::HingeProblem;
pub use operator::MeasurementOperator;
pub use power::{
    top_singular_pair, top_singular_pair_from, top_singular_pair_lanczos, truncated_direction,
    truncated_direction_warm, PowerPair, LANCZOS_TOL, POWER_MAX_SWEEPS, POWER_TOL,
};
pub use regression::LadRegressionProblem;
pub use sensing::{
    make_observations, rip_estimate, rip_ratio, surrogate_direction, surrogate_dual,
    synth_low_rank, LadSensingProblem, Observations, RipEstimate,
};
pub use spec::{Problem, ProblemSpec};

use crate::error::Result;
use crate::mat::Mat;

/// Value and subgradient oracle for a convex matrix objective.
pub trait Objective {
    /// Shape of the decision variable.
    fn shape(&self) -> (usize, usize);

    fn value(&self, x: &Mat) -> Result<f64>;

    fn subgradient(&self, x: &Mat) -> Result<Mat>;

    /// Value and subgradient together; implementations share the forward pass.
    fn evaluate(&self, x: &Mat) -> Result<(f64, Mat)> {
        Ok((self.value(x)?, self.subgradient(x)?))
    }

    /// Value and a subgradient selected from a computable surrogate of the
    /// ε-neighbourhood subdifferential, as required by the weight-decay
    /// variants. `None` when the objective has no such provider.
    fn surrogate(&self, _x: &Mat, _eps: f64) -> Result<Option<(f64, Mat)>> {
        Ok(None)
    }

    /// Number of residual terms, used by tolerance schedules scaled by `m`.
    fn num_terms(&self) -> usize;
}

/// `sign` with `sign(0) = 0`.
#[inline]
pub(crate) fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Derives an independent sub-seed (SplitMix64 finalizer over `seed ⊕ tag`).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        ^ tag
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

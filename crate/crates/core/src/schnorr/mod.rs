//! Exact dyadic cube sets in `[0,1]^n`, Schnorr tests, and the refined test
//! whose alternating sum fails to have cube averages converging at points of
//! the original test.

mod approx;
mod cube;
mod refine;
mod tree;

pub use approx::{
    char_approx, check_l1_to_lp, l1_to_lp_threshold, lp_norm, CharApprox, L1ToLp, LpNorm,
};
pub use cube::{interval_set, DyadicCube, DyadicCubeSet, StepField};
pub use refine::{refine_test, source_index, GModulus, ProvenanceCube, RefinedTest};
pub use test::{ExplicitTest, PointTest, SchnorrTest, Sigma01Enum, Target};

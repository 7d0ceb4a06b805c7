// SPDX-License-Identifier: Apache-2.0

//! Ring capacity inequalities and the capacity set function.

pub mod evaluator;
pub mod families;
pub mod ring;
pub mod sampler;
pub mod setfunc;

pub use evaluator::{CapacityEvaluator, CapacityMode, CapacitySource, CapacityValue};
pub use families::{default_rings, parse_family};
pub use ring::{
    distortion_constant, verify_ring_pp, verify_ring_pq, write_ledger, RingInequalityRecord,
    RingVerification, VerifyOptions,
};
pub use sampler::{CandidateShape, CondenserSampler};
pub use setfunc::{
    density_quotients, psi_estimate, variation_estimate, variation_refinement, PsiContext,
    RefinementReport, SetFunctionEstimate, VariationEstimate,
};

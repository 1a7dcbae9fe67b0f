//! Pietrzak verifiable delay function over an RSA modulus.
//!
//! Evaluation is `T` sequential squarings; the proof publishes one midpoint
//! per halving round and verification folds them with Fiat–Shamir challenges,
//! costing `2·log2(T)` short exponentiations plus one final squaring.

mod checkpoint;
mod params;
mod pietrzak;

pub use checkpoint::{
    checkpoint_binding, create_checkpoint, hash_to_group, verify_checkpoint, CheckpointJob, CheckpointWorker,
    VdfCheckpoint,
};
pub use params::{lookup_params, VdfParams, DEFAULT_2048, REGISTRY, TEST_256};
pub use pietrzak::{
    vdf_eval, vdf_eval_and_prove, vdf_prove, vdf_verify, VdfProof, VerifyStats, CHALLENGE_BYTES,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VdfError {
    #[error("time parameter {0} must be a power of two and at least 4")]
    BadTime(u64),
    #[error("modulus must be odd and greater than 3")]
    BadModulus,
    #[error("input must satisfy 0 < x < modulus")]
    InputOutOfRange,
    #[error("unknown VDF parameter set {0:?}")]
    UnknownParams(String),
}

/// Why a proof or checkpoint was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum VdfRejection {
    #[error("wrong number of midpoints")]
    MidpointCount,
    #[error("group element out of range")]
    ElementOutOfRange,
    #[error("final squaring check failed")]
    FinalCheck,
    #[error("unknown parameter set")]
    UnknownParams,
    #[error("input does not match the checkpoint binding")]
    InputMismatch,
}

impl VdfRejection {
    pub fn code(self) -> &'static str {
        match self {
            VdfRejection::MidpointCount => "midpoint-count",
            VdfRejection::ElementOutOfRange => "element-out-of-range",
            VdfRejection::FinalCheck => "final-check",
            VdfRejection::UnknownParams => "unknown-params",
            VdfRejection::InputMismatch => "input-mismatch",
        }
    }
}

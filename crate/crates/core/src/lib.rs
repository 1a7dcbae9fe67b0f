//! Proof-of-process evidence toolkit.
//!
//! Keystrokes are sealed with HMAC-derived jitter values chained by SHA-256
//! ([`jitter_seal`]), committed to an append-only Merkle Mountain Range
//! ([`evidence_log`]), checkpointed with a Pietrzak VDF ([`vdf`]) and
//! anchored to external time sources ([`anchors`]). [`packet`] bundles all
//! layers into one verifiable artifact, and [`adversary`] runs attack trials
//! against the seal.

pub mod adversary;
pub mod anchors;
pub mod evidence_log;
mod hash;
pub mod input_model;
pub mod jitter_seal;
pub mod packet;
pub mod par;
pub mod perf;
pub mod recorder;
pub mod vdf;

pub use hash::{sha256, Hash32};
pub use par::Exec;

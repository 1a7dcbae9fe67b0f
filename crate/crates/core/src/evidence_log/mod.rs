//! Append-only Merkle Mountain Range over evidence leaves.
//!
//! Three hash uses, separated by a one-byte prefix:
//! leaf `0x00 ‖ content ‖ metadata`, internal node `0x01 ‖ left ‖ right`,
//! and root bagging `0x02 ‖ peak ‖ acc` folded right to left.

mod file;
mod mmr;

pub use file::{LogFile, LOG_MAGIC, RECORD_LEN};
pub use mmr::{mmr_prove, mmr_verify, peak_layout, InclusionProof, MmrLog, MmrState, PathStep, Peak, PeakSlot, Side};

use serde::Serialize;
use thiserror::Error;

use crate::hash::{hex_bytes, sha256_parts};
use crate::jitter_seal::JitterSample;
use crate::Hash32;

pub const LEAF_PREFIX: u8 = 0x00;
pub const NODE_PREFIX: u8 = 0x01;
pub const BAG_PREFIX: u8 = 0x02;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("the log is empty")]
    Empty,
    #[error("leaf index {index} out of range for {leaf_count} leaves")]
    IndexOutOfRange { index: u64, leaf_count: u64 },
    #[error("leaf sequence has {leaves} entries but state records {leaf_count}")]
    LeafCountMismatch { leaves: u64, leaf_count: u64 },
    #[error("bad log file magic")]
    BadMagic,
    #[error("log file ends with a partial record ({0} stray bytes)")]
    TruncatedRecord(usize),
    #[error("rebuilt root {actual} does not match expected {expected}")]
    RootMismatch { expected: String, actual: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why an inclusion proof was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ProofRejection {
    #[error("leaf index out of range")]
    IndexOutOfRange,
    #[error("path length does not match the peak height")]
    PathLength,
    #[error("path sides disagree with the leaf index")]
    SideMismatch,
    #[error("peak lists do not match the leaf count")]
    PeakLayout,
    #[error("recomputed root differs")]
    RootMismatch,
}

/// One evidence leaf: a content hash and a hash of everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LeafRecord {
    #[serde(with = "hex_bytes")]
    pub content_hash: Hash32,
    #[serde(with = "hex_bytes")]
    pub metadata_hash: Hash32,
}

impl LeafRecord {
    /// Leaf for a sealed sample: content is the document hash, metadata covers
    /// every other serialized field.
    pub fn for_sample(s: &JitterSample) -> Self {
        let metadata_hash = sha256_parts(&[
            &s.ordinal.to_be_bytes(),
            &s.timestamp_us.to_be_bytes(),
            &[s.zone_code, s.bucket],
            &s.jitter_us.to_be_bytes(),
            &s.chain_hash,
        ]);
        Self {
            content_hash: s.doc_hash,
            metadata_hash,
        }
    }

    pub fn leaf_hash(&self) -> Hash32 {
        leaf_hash(self)
    }

    pub fn to_bytes(&self) -> [u8; 64] {
        let mut out = [0u8; 64];
        out[..32].copy_from_slice(&self.content_hash);
        out[32..].copy_from_slice(&self.metadata_hash);
        out
    }

    pub fn from_bytes(b: &[u8; 64]) -> Self {
        Self {
            content_hash: b[..32].try_into().unwrap(),
            metadata_hash: b[32..].try_into().unwrap(),
        }
    }
}

pub fn leaf_hash(record: &LeafRecord) -> Hash32 {
    sha256_parts(&[&[LEAF_PREFIX], &record.content_hash, &record.metadata_hash])
}

pub fn node_hash(left: &Hash32, right: &Hash32) -> Hash32 {
    sha256_parts(&[&[NODE_PREFIX], left, right])
}

pub fn bag_hash(peak: &Hash32, acc: &Hash32) -> Hash32 {
    sha256_parts(&[&[BAG_PREFIX], peak, acc])
}

/// Leaf hashes for a run of samples, in order.
pub fn sample_leaves(samples: &[JitterSample]) -> Vec<Hash32> {
    samples.iter().map(|s| LeafRecord::for_sample(s).leaf_hash()).collect()
}

//! The self-contained evidence packet: assembly, the `WTNSPKT1` binary
//! encoding and layered verification.

mod verify;
mod wire;

pub use verify::{verify_packet, verify_packet_with, Layer, LayerVerdict, Location, Rejection, TrustConfig, VerificationReport};
pub use wire::{deserialize, serialize, FORMAT_VERSION, PACKET_MAGIC};

use serde::Serialize;
use thiserror::Error;

use crate::anchors::AnchorSet;
use crate::evidence_log::{sample_leaves, MmrState};
use crate::hash::{hex_bytes, sha256_parts};
use crate::input_model::MatchSummary;
use crate::jitter_seal::{JitterSample, SealChain, SessionParams};
use crate::vdf::{checkpoint_binding, VdfCheckpoint};
use crate::{sha256, Hash32};

/// `content_kind` for UTF-8 text documents.
pub const CONTENT_TEXT: u8 = 1;
const ROOT_TAG: &[u8] = b"WTNSROOT";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("bad packet magic")]
    BadMagic,
    #[error("unknown packet version {0}")]
    UnknownVersion(u8),
    #[error("packet is truncated")]
    Truncated,
    #[error("{0} trailing bytes after packet")]
    TrailingBytes(usize),
    #[error("malformed packet: {0}")]
    Malformed(&'static str),
    #[error("unknown VDF parameter set {0:?}")]
    UnknownParams(String),
    #[error("VDF element wider than the modulus")]
    ElementTooWide,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot assemble packet: {layer} layer: {reason}")]
pub struct AssemblyError {
    pub layer: Layer,
    pub reason: String,
}

fn assembly(layer: Layer, reason: impl Into<String>) -> AssemblyError {
    AssemblyError {
        layer,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PacketHeader {
    #[serde(with = "hex_bytes")]
    pub session_id: [u8; 16],
    /// Absolute time (µs since the Unix epoch) that sample timestamps count from.
    pub session_epoch_us: u64,
    pub params: SessionParams,
    /// Empty when the session carries no VDF checkpoints.
    pub vdf_params_id: String,
    pub zone_map_version: u16,
    pub content_kind: u8,
}

/// Hardware attestation record. Only the unattested form exists.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attestation {
    #[default]
    Unattested,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvidencePacket {
    pub header: PacketHeader,
    pub samples: Vec<JitterSample>,
    pub checkpoints: Vec<VdfCheckpoint>,
    #[serde(with = "hex_bytes")]
    pub mmr_root: Hash32,
    pub leaf_count: u64,
    #[serde(with = "hex_bytes")]
    pub final_doc_hash: Hash32,
    pub anchors: AnchorSet,
    pub dual_source: Option<MatchSummary>,
    pub attestation: Attestation,
}

/// Root of an MMR state, with the all-zero hash standing for the empty log.
pub fn log_root(state: &MmrState) -> Hash32 {
    state.root().unwrap_or([0; 32])
}

/// Document hash after the last sample; the hash of the empty document if none.
pub fn final_doc_hash(samples: &[JitterSample]) -> Hash32 {
    samples.last().map_or_else(|| sha256(b""), |s| s.doc_hash)
}

/// The digest external anchors commit to.
pub fn packet_root(header: &PacketHeader, mmr_root: &Hash32, leaf_count: u64, final_doc_hash: &Hash32) -> Hash32 {
    sha256_parts(&[
        ROOT_TAG,
        &header.session_id,
        &header.session_epoch_us.to_be_bytes(),
        mmr_root,
        &leaf_count.to_be_bytes(),
        final_doc_hash,
    ])
}

impl EvidencePacket {
    pub fn root(&self) -> Hash32 {
        packet_root(&self.header, &self.mmr_root, self.leaf_count, &self.final_doc_hash)
    }

    pub fn chain(&self) -> SealChain {
        SealChain {
            params: self.header.params,
            session_id: self.header.session_id,
            samples: self.samples.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("packet serializes to JSON")
    }
}

/// MMR roots after each prefix length in `counts` (which must be ascending).
pub(crate) fn prefix_roots(leaves: &[Hash32], counts: impl IntoIterator<Item = u64>) -> Vec<Option<Hash32>> {
    let mut state = MmrState::new();
    let mut out = Vec::new();
    for count in counts {
        if count > leaves.len() as u64 || count < state.leaf_count {
            out.push(None);
            continue;
        }
        while state.leaf_count < count {
            state.append(leaves[state.leaf_count as usize]);
        }
        out.push(Some(log_root(&state)));
    }
    out
}

/// Expected binding of a checkpoint over the first `sample_count` samples.
pub(crate) fn expected_binding(samples: &[JitterSample], prefix_root: &Hash32, cp: &VdfCheckpoint) -> Option<Hash32> {
    let last = samples.get((cp.sample_count as usize).checked_sub(1)?)?;
    Some(checkpoint_binding(prefix_root, &last.chain_hash, cp.index))
}

/// Bundles the layers of one session, checking they describe the same state.
pub fn assemble_packet(
    header: PacketHeader,
    chain: &SealChain,
    checkpoints: Vec<VdfCheckpoint>,
    log: &MmrState,
    anchors: AnchorSet,
    dual_source: Option<MatchSummary>,
) -> Result<EvidencePacket, AssemblyError> {
    if chain.params != header.params || chain.session_id != header.session_id {
        return Err(assembly(Layer::Seal, "chain parameters differ from header"));
    }
    header
        .params
        .validate()
        .map_err(|e| assembly(Layer::Seal, e.to_string()))?;

    let leaves = sample_leaves(&chain.samples);
    let mmr_root = log_root(log);
    if log.leaf_count != leaves.len() as u64 {
        return Err(assembly(Layer::Mmr, "leaf count differs from sample count"));
    }
    if prefix_roots(&leaves, [log.leaf_count])[0] != Some(mmr_root) {
        return Err(assembly(Layer::Mmr, "log root does not match samples"));
    }

    let mut counts: Vec<u64> = checkpoints.iter().map(|c| c.sample_count).collect();
    counts.sort_unstable();
    let roots = prefix_roots(&leaves, counts.iter().copied());
    for cp in &checkpoints {
        if cp.params_id != header.vdf_params_id {
            return Err(assembly(Layer::Vdf, format!("checkpoint {} uses other parameters", cp.index)));
        }
        let prefix = counts
            .binary_search(&cp.sample_count)
            .ok()
            .and_then(|i| roots[i]);
        let expected = prefix.and_then(|root| expected_binding(&chain.samples, &root, cp));
        if expected != Some(cp.chain_binding) {
            return Err(assembly(Layer::Vdf, format!("checkpoint {} binding mismatch", cp.index)));
        }
    }

    let final_doc_hash = final_doc_hash(&chain.samples);
    let root = packet_root(&header, &mmr_root, log.leaf_count, &final_doc_hash);
    let foreign_tsa = anchors.tsa.iter().any(|a| a.request.message_imprint != root);
    let foreign_cal = anchors.calendar.iter().any(|c| c.digest != root);
    if foreign_tsa || foreign_cal {
        return Err(assembly(Layer::Anchors, "anchor does not commit to the packet root"));
    }

    Ok(EvidencePacket {
        header,
        samples: chain.samples.clone(),
        checkpoints,
        mmr_root,
        leaf_count: log.leaf_count,
        final_doc_hash,
        anchors,
        dual_source,
        attestation: Attestation::Unattested,
    })
}

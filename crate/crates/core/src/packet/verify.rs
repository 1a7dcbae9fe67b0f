use std::fmt;

use ed25519_dalek::VerifyingKey;
use serde::{Deserialize, Serialize};

use super::{expected_binding, final_doc_hash, prefix_roots, EvidencePacket, PacketError};
use crate::anchors::{verify_anchor_set, AnchorBounds, AnchorFailure};
use crate::evidence_log::sample_leaves;
use crate::jitter_seal::{verify_chain_with, ChainVerdict, SessionSecret};
use crate::par::{self, Exec};
use crate::vdf::verify_checkpoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layer {
    Seal,
    Vdf,
    Mmr,
    Anchors,
    DualSource,
    Attestation,
}

impl Layer {
    pub const ALL: [Layer; 6] = [
        Layer::Seal,
        Layer::Vdf,
        Layer::Mmr,
        Layer::Anchors,
        Layer::DualSource,
        Layer::Attestation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Seal => "seal",
            Layer::Vdf => "vdf",
            Layer::Mmr => "mmr",
            Layer::Anchors => "anchors",
            Layer::DualSource => "dual-source",
            Layer::Attestation => "attestation",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where in the packet a rejection was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "at")]
pub enum Location {
    Ordinal(u64),
    Checkpoint(u64),
    Leaf(u64),
    Anchor(usize),
    Packet,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Ordinal(o) => write!(f, "ordinal {o}"),
            Location::Checkpoint(i) => write!(f, "checkpoint {i}"),
            Location::Leaf(i) => write!(f, "leaf {i}"),
            Location::Anchor(i) => write!(f, "anchor {i}"),
            Location::Packet => f.write_str("packet"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub reason: &'static str,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum LayerVerdict {
    Accept,
    Reject(Rejection),
    Absent,
}

impl LayerVerdict {
    fn reject(reason: &'static str, location: Location) -> Self {
        LayerVerdict::Reject(Rejection { reason, location })
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, LayerVerdict::Reject(_))
    }
}

impl fmt::Display for LayerVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerVerdict::Accept => f.write_str("accept"),
            LayerVerdict::Absent => f.write_str("absent"),
            LayerVerdict::Reject(r) => write!(f, "REJECT {} at {}", r.reason, r.location),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub seal: LayerVerdict,
    pub vdf: LayerVerdict,
    pub mmr: LayerVerdict,
    pub anchors: LayerVerdict,
    pub dual_source: LayerVerdict,
    pub attestation: LayerVerdict,
    pub anchor_bounds: AnchorBounds,
}

impl VerificationReport {
    pub fn verdict(&self, layer: Layer) -> &LayerVerdict {
        match layer {
            Layer::Seal => &self.seal,
            Layer::Vdf => &self.vdf,
            Layer::Mmr => &self.mmr,
            Layer::Anchors => &self.anchors,
            Layer::DualSource => &self.dual_source,
            Layer::Attestation => &self.attestation,
        }
    }

    /// Accepts iff no present layer rejected.
    pub fn accepted(&self) -> bool {
        self.rejected_layers().is_empty()
    }

    pub fn rejected_layers(&self) -> Vec<Layer> {
        Layer::ALL.into_iter().filter(|&l| self.verdict(l).is_reject()).collect()
    }

    pub fn absent_layers(&self) -> Vec<Layer> {
        Layer::ALL
            .into_iter()
            .filter(|&l| *self.verdict(l) == LayerVerdict::Absent)
            .collect()
    }

    /// Machine-readable summary.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["accepted"] = self.accepted().into();
        v["rejected_layers"] = serde_json::to_value(self.rejected_layers()).expect("layers serialize");
        v["absent_layers"] = serde_json::to_value(self.absent_layers()).expect("layers serialize");
        v
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for layer in Layer::ALL {
            writeln!(f, "{:<12} {}", layer.name(), self.verdict(layer))?;
        }
        match self.anchor_bounds {
            AnchorBounds::Unanchored => writeln!(f, "{:<12} unanchored", "window")?,
            AnchorBounds::Anchored { window: (lo, hi), .. } => writeln!(f, "{:<12} [{lo}, {hi}] µs", "window")?,
        }
        write!(f, "{:<12} {}", "overall", if self.accepted() { "ACCEPT" } else { "REJECT" })
    }
}

/// Verifier-side policy: trusted TSA keys and the injection tolerance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrustConfig {
    pub tsa_keys: Vec<VerifyingKey>,
    pub injection_threshold: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrustFile {
    #[serde(default)]
    tsa_keys: Vec<String>,
    #[serde(default)]
    injection_threshold: u64,
}

impl TrustConfig {
    /// Parses `tsa_keys = ["<hex>", ...]` and `injection_threshold = N`.
    pub fn from_toml(text: &str) -> Result<Self, PacketError> {
        let file: TrustFile = toml::from_str(text).map_err(|_| PacketError::Malformed("trust config"))?;
        let tsa_keys = file
            .tsa_keys
            .iter()
            .map(|k| {
                let bytes: [u8; 32] = hex::decode(k.trim())
                    .ok()
                    .and_then(|b| b.try_into().ok())
                    .ok_or(PacketError::Malformed("TSA key is not 32 hex bytes"))?;
                VerifyingKey::from_bytes(&bytes).map_err(|_| PacketError::Malformed("TSA key is not a valid point"))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            tsa_keys,
            injection_threshold: file.injection_threshold,
        })
    }

    pub fn to_toml(&self) -> String {
        let keys: Vec<String> = self.tsa_keys.iter().map(|k| format!("\"{}\"", hex::encode(k.as_bytes()))).collect();
        format!(
            "tsa_keys = [{}]\ninjection_threshold = {}\n",
            keys.join(", "),
            self.injection_threshold
        )
    }
}

fn seal_layer(secret: &SessionSecret, p: &EvidencePacket, exec: Exec) -> LayerVerdict {
    match verify_chain_with(secret, &p.chain(), exec) {
        ChainVerdict::Accept => LayerVerdict::Accept,
        ChainVerdict::Reject { ordinal, failure } => LayerVerdict::reject(failure.code(), Location::Ordinal(ordinal)),
    }
}

fn vdf_layer(p: &EvidencePacket) -> LayerVerdict {
    if p.checkpoints.is_empty() {
        return LayerVerdict::Absent;
    }
    for cp in &p.checkpoints {
        if let Err(r) = verify_checkpoint(cp) {
            return LayerVerdict::reject(r.code(), Location::Checkpoint(cp.index));
        }
    }
    LayerVerdict::Accept
}

fn mmr_layer(p: &EvidencePacket) -> LayerVerdict {
    let leaves = sample_leaves(&p.samples);
    if p.leaf_count != leaves.len() as u64 {
        return LayerVerdict::reject("leaf-count-mismatch", Location::Packet);
    }
    if prefix_roots(&leaves, [p.leaf_count])[0] != Some(p.mmr_root) {
        return LayerVerdict::reject("root-mismatch", Location::Packet);
    }
    if p.final_doc_hash != final_doc_hash(&p.samples) {
        return LayerVerdict::reject("final-doc-hash-mismatch", Location::Leaf(p.leaf_count.saturating_sub(1)));
    }
    let mut order: Vec<usize> = (0..p.checkpoints.len()).collect();
    order.sort_by_key(|&i| p.checkpoints[i].sample_count);
    let roots = prefix_roots(&leaves, order.iter().map(|&i| p.checkpoints[i].sample_count));
    let mut bad: Option<u64> = None;
    for (&i, root) in order.iter().zip(&roots) {
        let cp = &p.checkpoints[i];
        let expected = root.and_then(|r| expected_binding(&p.samples, &r, cp));
        if expected != Some(cp.chain_binding) {
            bad = Some(bad.map_or(cp.index, |b| b.min(cp.index)));
        }
    }
    match bad {
        Some(index) => LayerVerdict::reject("binding-mismatch", Location::Checkpoint(index)),
        None => LayerVerdict::Accept,
    }
}

fn anchors_layer(p: &EvidencePacket, trust: &TrustConfig) -> (LayerVerdict, AnchorBounds) {
    if p.anchors.is_empty() {
        return (LayerVerdict::Absent, AnchorBounds::Unanchored);
    }
    let tsa_count = p.anchors.tsa.len();
    match verify_anchor_set(&p.anchors, &p.root(), &trust.tsa_keys) {
        Ok(bounds) => (LayerVerdict::Accept, bounds),
        Err(failure) => {
            let location = match failure {
                AnchorFailure::Tsa { index, .. } | AnchorFailure::TsaRootMismatch { index } => Location::Anchor(index),
                AnchorFailure::Calendar { index, .. } | AnchorFailure::CalendarRootMismatch { index } => {
                    Location::Anchor(tsa_count + index)
                }
                AnchorFailure::AnchorPrecedesClaim { .. } => Location::Packet,
            };
            (
                LayerVerdict::reject(failure.code(), location),
                crate::anchors::anchor_bounds(&p.anchors),
            )
        }
    }
}

fn dual_source_layer(p: &EvidencePacket, trust: &TrustConfig) -> LayerVerdict {
    match &p.dual_source {
        None => LayerVerdict::Absent,
        Some(s) if s.injected_suspect > trust.injection_threshold => {
            LayerVerdict::reject("injected-events", Location::Packet)
        }
        Some(_) => LayerVerdict::Accept,
    }
}

/// Runs every layer independently; one layer's failure never masks another's.
pub fn verify_packet(secret: &SessionSecret, packet: &EvidencePacket, trust: &TrustConfig) -> VerificationReport {
    verify_packet_with(secret, packet, trust, Exec::default())
}

pub fn verify_packet_with(
    secret: &SessionSecret,
    packet: &EvidencePacket,
    trust: &TrustConfig,
    exec: Exec,
) -> VerificationReport {
    let ((seal, vdf), (mmr, (anchors, anchor_bounds))) = par::join(
        exec,
        || par::join(exec, || seal_layer(secret, packet, exec), || vdf_layer(packet)),
        || par::join(exec, || mmr_layer(packet), || anchors_layer(packet, trust)),
    );
    VerificationReport {
        seal,
        vdf,
        mmr,
        anchors,
        dual_source: dual_source_layer(packet, trust),
        attestation: LayerVerdict::Absent,
        anchor_bounds,
    }
}

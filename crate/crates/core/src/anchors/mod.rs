//! External time anchors: RFC 3161-style TSA receipts and a calendar
//! aggregator that commits batches of digests under a pseudo-anchor.
//!
//! The two kinds verify with disjoint material: TSA receipts need only the
//! signer's public key, calendar proofs only hash recomputation.

mod calendar;
mod http;
mod tsa;

pub use calendar::{verify_calendar_proof, CalendarAggregator, CalendarProof, CalendarRejection, PendingHandle};
pub use http::{TsaClient, TsaServer, TSA_URL_ENV};
pub use tsa::{
    build_tsa_request, verify_tsa_receipt, MockTsa, TimestampAuthority, TsaRejection, TsaReceipt, TsaRequest,
    RECEIPT_LEN, RECEIPT_MAGIC, REQUEST_MAGIC,
};

use serde::Serialize;
use thiserror::Error;

use crate::Hash32;

#[derive(Debug, Error)]
pub enum AnchorError {
    #[error("anchored root must be 32 bytes, got {0}")]
    ImprintWidth(usize),
    #[error("calendar batch is empty")]
    EmptyBatch,
    #[error("malformed tsa-lite message: {0}")]
    Malformed(&'static str),
    #[error("TSA transport: {0}")]
    Transport(String),
}

/// A TSA receipt together with the request it answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TsaAnchor {
    pub request: TsaRequest,
    pub receipt: TsaReceipt,
}

/// All external anchors attached to one packet.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnchorSet {
    pub tsa: Vec<TsaAnchor>,
    pub calendar: Vec<CalendarProof>,
    /// When the evidence claims to have been completed (absolute µs).
    pub local_claim_time_us: u64,
}

impl AnchorSet {
    pub fn new(local_claim_time_us: u64) -> Self {
        Self {
            local_claim_time_us,
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tsa.is_empty() && self.calendar.is_empty()
    }

    /// Times claimed by every external anchor.
    pub fn external_times(&self) -> impl Iterator<Item = u64> + '_ {
        self.tsa
            .iter()
            .map(|a| a.receipt.gen_time_us)
            .chain(self.calendar.iter().map(|c| c.anchor_time_us))
    }
}

/// Requests a receipt over `root` and pairs it with its request.
pub fn request_anchor(
    authority: &dyn TimestampAuthority,
    root: &Hash32,
    rng: &mut impl rand::RngCore,
) -> Result<TsaAnchor, AnchorError> {
    let request = build_tsa_request(root, rng)?;
    let receipt = authority.timestamp(&request)?;
    Ok(TsaAnchor { request, receipt })
}

/// Interval in which any clock manipulation must have happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorBounds {
    Unanchored,
    Anchored {
        earliest_external_us: u64,
        /// `[T_l, T_b]`: local claim to earliest external anchor.
        window: (u64, u64),
    },
}

pub fn anchor_bounds(set: &AnchorSet) -> AnchorBounds {
    match set.external_times().min() {
        None => AnchorBounds::Unanchored,
        Some(t_b) => AnchorBounds::Anchored {
            earliest_external_us: t_b,
            window: (set.local_claim_time_us, t_b),
        },
    }
}

/// Why an anchor set failed, and which anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorFailure {
    Tsa { index: usize, reason: TsaRejection },
    TsaRootMismatch { index: usize },
    Calendar { index: usize, reason: CalendarRejection },
    CalendarRootMismatch { index: usize },
    /// An anchor predates the time the evidence claims to be complete.
    AnchorPrecedesClaim { earliest_external_us: u64 },
}

impl AnchorFailure {
    pub fn code(&self) -> &'static str {
        match self {
            AnchorFailure::Tsa { reason, .. } => reason.code(),
            AnchorFailure::TsaRootMismatch { .. } | AnchorFailure::CalendarRootMismatch { .. } => "root-mismatch",
            AnchorFailure::Calendar { reason, .. } => reason.code(),
            AnchorFailure::AnchorPrecedesClaim { .. } => "anchor-precedes-claim",
        }
    }
}

/// Verifies every anchor against `root` and checks the time window is ordered.
pub fn verify_anchor_set(
    set: &AnchorSet,
    root: &Hash32,
    trusted: &[ed25519_dalek::VerifyingKey],
) -> Result<AnchorBounds, AnchorFailure> {
    for (index, a) in set.tsa.iter().enumerate() {
        if &a.request.message_imprint != root {
            return Err(AnchorFailure::TsaRootMismatch { index });
        }
        verify_tsa_receipt(&a.request, &a.receipt, trusted).map_err(|reason| AnchorFailure::Tsa { index, reason })?;
    }
    for (index, c) in set.calendar.iter().enumerate() {
        if &c.digest != root {
            return Err(AnchorFailure::CalendarRootMismatch { index });
        }
        verify_calendar_proof(c).map_err(|reason| AnchorFailure::Calendar { index, reason })?;
    }
    let bounds = anchor_bounds(set);
    if let AnchorBounds::Anchored {
        earliest_external_us, ..
    } = bounds
    {
        if earliest_external_us < set.local_claim_time_us {
            return Err(AnchorFailure::AnchorPrecedesClaim { earliest_external_us });
        }
    }
    Ok(bounds)
}

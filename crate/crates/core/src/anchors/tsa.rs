//! tsa-lite: a compact RFC 3161-style request/receipt pair signed with Ed25519.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::RngCore;
use serde::Serialize;

use super::AnchorError;
use crate::hash::hex_bytes;
use crate::{sha256, Hash32};

pub const REQUEST_MAGIC: &[u8; 4] = b"TSQ1";
pub const RECEIPT_MAGIC: &[u8; 4] = b"TSR1";
/// magic ‖ imprint ‖ gen_time ‖ nonce ‖ serial ‖ signer_id ‖ signature
pub const RECEIPT_LEN: usize = 4 + 32 + 8 + 8 + 8 + 32 + 64;
const SIGNED_LEN: usize = RECEIPT_LEN - 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TsaRequest {
    #[serde(with = "hex_bytes")]
    pub message_imprint: Hash32,
    #[serde(with = "hex_bytes")]
    pub nonce: [u8; 8],
    pub policy_id: Option<String>,
}

/// Builds a request over a 32-byte root with a fresh random nonce.
pub fn build_tsa_request(root: &[u8], rng: &mut impl RngCore) -> Result<TsaRequest, AnchorError> {
    let message_imprint: Hash32 = root.try_into().map_err(|_| AnchorError::ImprintWidth(root.len()))?;
    let mut nonce = [0u8; 8];
    rng.fill_bytes(&mut nonce);
    Ok(TsaRequest {
        message_imprint,
        nonce,
        policy_id: None,
    })
}

impl TsaRequest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 32 + 8 + 1);
        out.extend_from_slice(REQUEST_MAGIC);
        out.extend_from_slice(&self.message_imprint);
        out.extend_from_slice(&self.nonce);
        match &self.policy_id {
            None => out.push(0),
            Some(p) => {
                let p = &p.as_bytes()[..p.len().min(255)];
                out.push(1);
                out.push(p.len() as u8);
                out.extend_from_slice(p);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AnchorError> {
        let rest = bytes
            .strip_prefix(REQUEST_MAGIC.as_slice())
            .ok_or(AnchorError::Malformed("request magic"))?;
        if rest.len() < 41 {
            return Err(AnchorError::Malformed("request truncated"));
        }
        let message_imprint: Hash32 = rest[..32].try_into().unwrap();
        let nonce: [u8; 8] = rest[32..40].try_into().unwrap();
        let policy_id = match (rest[40], &rest[41..]) {
            (0, []) => None,
            (1, [len, p @ ..]) if p.len() == *len as usize => Some(
                String::from_utf8(p.to_vec()).map_err(|_| AnchorError::Malformed("policy is not UTF-8"))?,
            ),
            _ => return Err(AnchorError::Malformed("policy field")),
        };
        Ok(Self {
            message_imprint,
            nonce,
            policy_id,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TsaReceipt {
    #[serde(with = "hex_bytes")]
    pub message_imprint: Hash32,
    pub gen_time_us: u64,
    #[serde(with = "hex_bytes")]
    pub nonce: [u8; 8],
    pub serial: u64,
    /// SHA-256 of the signer's public key.
    #[serde(with = "hex_bytes")]
    pub signer_id: Hash32,
    #[serde(with = "hex_bytes")]
    pub signature: [u8; 64],
}

impl TsaReceipt {
    fn signed_bytes(&self) -> [u8; SIGNED_LEN] {
        let mut out = [0u8; SIGNED_LEN];
        out[..4].copy_from_slice(RECEIPT_MAGIC);
        out[4..36].copy_from_slice(&self.message_imprint);
        out[36..44].copy_from_slice(&self.gen_time_us.to_be_bytes());
        out[44..52].copy_from_slice(&self.nonce);
        out[52..60].copy_from_slice(&self.serial.to_be_bytes());
        out[60..92].copy_from_slice(&self.signer_id);
        out
    }

    pub fn to_bytes(&self) -> [u8; RECEIPT_LEN] {
        let mut out = [0u8; RECEIPT_LEN];
        out[..SIGNED_LEN].copy_from_slice(&self.signed_bytes());
        out[SIGNED_LEN..].copy_from_slice(&self.signature);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AnchorError> {
        if bytes.len() != RECEIPT_LEN {
            return Err(AnchorError::Malformed("receipt length"));
        }
        if &bytes[..4] != RECEIPT_MAGIC {
            return Err(AnchorError::Malformed("receipt magic"));
        }
        let u64_at = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().unwrap());
        Ok(Self {
            message_imprint: bytes[4..36].try_into().unwrap(),
            gen_time_us: u64_at(36),
            nonce: bytes[44..52].try_into().unwrap(),
            serial: u64_at(52),
            signer_id: bytes[60..92].try_into().unwrap(),
            signature: bytes[SIGNED_LEN..].try_into().unwrap(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsaRejection {
    UnknownSigner,
    BadSignature,
    ImprintMismatch,
    NonceMismatch,
}

impl TsaRejection {
    pub fn code(&self) -> &'static str {
        match self {
            TsaRejection::UnknownSigner => "unknown-signer",
            TsaRejection::BadSignature => "bad-signature",
            TsaRejection::ImprintMismatch => "imprint-mismatch",
            TsaRejection::NonceMismatch => "nonce-mismatch",
        }
    }
}

/// Checks signer, signature, imprint and nonce in that order.
pub fn verify_tsa_receipt(
    request: &TsaRequest,
    receipt: &TsaReceipt,
    trusted: &[VerifyingKey],
) -> Result<(), TsaRejection> {
    let key = trusted
        .iter()
        .find(|k| sha256(k.as_bytes()) == receipt.signer_id)
        .ok_or(TsaRejection::UnknownSigner)?;
    let signature = Signature::from_bytes(&receipt.signature);
    key.verify(&receipt.signed_bytes(), &signature)
        .map_err(|_| TsaRejection::BadSignature)?;
    if receipt.message_imprint != request.message_imprint {
        return Err(TsaRejection::ImprintMismatch);
    }
    if receipt.nonce != request.nonce {
        return Err(TsaRejection::NonceMismatch);
    }
    Ok(())
}

pub trait TimestampAuthority {
    fn timestamp(&self, request: &TsaRequest) -> Result<TsaReceipt, AnchorError>;
}

type Clock = Box<dyn Fn() -> u64 + Send + Sync>;

fn system_time_us() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(0)
}

/// An in-process TSA for tests and the local `tsa-serve` endpoint.
pub struct MockTsa {
    key: SigningKey,
    serial: AtomicU64,
    clock: Clock,
}

impl std::fmt::Debug for MockTsa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MockTsa")
            .field("signer_id", &hex::encode(self.signer_id()))
            .finish_non_exhaustive()
    }
}

impl MockTsa {
    pub fn new(key: SigningKey) -> Self {
        Self {
            key,
            serial: AtomicU64::new(1),
            clock: Box::new(system_time_us),
        }
    }

    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self::new(SigningKey::from_bytes(&seed))
    }

    pub fn with_clock(mut self, clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        self.clock = Box::new(clock);
        self
    }

    pub fn public_key(&self) -> VerifyingKey {
        self.key.verifying_key()
    }

    pub fn signer_id(&self) -> Hash32 {
        sha256(self.public_key().as_bytes())
    }

    pub fn stamp(&self, request: &TsaRequest) -> TsaReceipt {
        let mut receipt = TsaReceipt {
            message_imprint: request.message_imprint,
            gen_time_us: (self.clock)(),
            nonce: request.nonce,
            serial: self.serial.fetch_add(1, Ordering::Relaxed),
            signer_id: self.signer_id(),
            signature: [0; 64],
        };
        receipt.signature = self.key.sign(&receipt.signed_bytes()).to_bytes();
        receipt
    }
}

impl TimestampAuthority for MockTsa {
    fn timestamp(&self, request: &TsaRequest) -> Result<TsaReceipt, AnchorError> {
        Ok(self.stamp(request))
    }
}

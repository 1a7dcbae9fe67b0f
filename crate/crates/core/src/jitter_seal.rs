//! Jitter seals: HMAC-derived microsecond delays bound to keystroke and
//! document state, linked into a SHA-256 hash chain.
//!
//! Every integer in the derivation and the chain hash is big-endian. The
//! chain starts from a 32-byte all-zero predecessor hash and a previous
//! jitter of 0; the first sample has ordinal 1.

use std::fmt;

use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hash::hex_bytes;
use crate::par::{self, Exec};
use crate::Hash32;

type HmacSha256 = Hmac<Sha256>;

/// Domain tag prepended to every chain-hash preimage.
pub const CHAIN_PREFIX: &[u8; 8] = b"WTNSSEAL";

/// Predecessor hash of the first sample.
pub const GENESIS_HASH: Hash32 = [0u8; 32];

/// Largest legal interval bucket.
pub const MAX_BUCKET: u8 = 9;

pub const DEFAULT_JITTER_MIN_US: u32 = 500;
pub const DEFAULT_JITTER_MAX_US: u32 = 3000;
pub const DEFAULT_SAMPLE_INTERVAL: u64 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SealError {
    #[error("invalid jitter range: min {min} must be below max {max} by at least 2")]
    InvalidRange { min: u32, max: u32 },
    #[error("sample interval must be positive")]
    ZeroInterval,
    #[error("interval bucket {0} out of range 0..=9")]
    BucketOutOfRange(u8),
    #[error("timestamp regression at ordinal {ordinal}: {timestamp_us} < {previous_us}")]
    TimestampRegression {
        ordinal: u64,
        timestamp_us: u64,
        previous_us: u64,
    },
    #[error("ordinal overflow")]
    OrdinalOverflow,
}

/// 256-bit session secret keying the jitter HMAC.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionSecret([u8; 32]);

impl SessionSecret {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 32];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub const fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        let bytes = hex::decode(text.trim()).ok()?;
        Some(Self(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for SessionSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SessionSecret(..)")
    }
}

/// Sampling interval and jitter range for one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionParams {
    pub sample_interval: u64,
    pub jitter_min_us: u32,
    pub jitter_max_us: u32,
}

impl Default for SessionParams {
    fn default() -> Self {
        Self {
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
            jitter_min_us: DEFAULT_JITTER_MIN_US,
            jitter_max_us: DEFAULT_JITTER_MAX_US,
        }
    }
}

impl SessionParams {
    pub fn new(sample_interval: u64, jitter_min_us: u32, jitter_max_us: u32) -> Result<Self, SealError> {
        let params = Self {
            sample_interval,
            jitter_min_us,
            jitter_max_us,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), SealError> {
        if self.sample_interval == 0 {
            return Err(SealError::ZeroInterval);
        }
        if self.jitter_min_us >= self.jitter_max_us || self.jitter_max_us - self.jitter_min_us < 2 {
            return Err(SealError::InvalidRange {
                min: self.jitter_min_us,
                max: self.jitter_max_us,
            });
        }
        Ok(())
    }

    /// Width `R` of the jitter range.
    pub fn range(&self) -> u32 {
        self.jitter_max_us - self.jitter_min_us
    }
}

/// Partial parameter set applied over the defaults by [`setup`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParamOverrides {
    pub sample_interval: Option<u64>,
    pub jitter_min_us: Option<u32>,
    pub jitter_max_us: Option<u32>,
}

/// Draws a fresh session secret and resolves the session parameters.
pub fn setup<R: RngCore + CryptoRng>(
    rng: &mut R,
    overrides: Option<ParamOverrides>,
) -> Result<(SessionSecret, SessionParams), SealError> {
    let defaults = SessionParams::default();
    let o = overrides.unwrap_or_default();
    let params = SessionParams::new(
        o.sample_interval.unwrap_or(defaults.sample_interval),
        o.jitter_min_us.unwrap_or(defaults.jitter_min_us),
        o.jitter_max_us.unwrap_or(defaults.jitter_max_us),
    )?;
    Ok((SessionSecret::generate(rng), params))
}

/// The six per-keystroke values the jitter is bound to (besides the secret).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JitterInputs {
    pub ordinal: u64,
    pub doc_hash: Hash32,
    pub timestamp_us: u64,
    pub zone_code: u8,
    pub bucket: u8,
    pub prev_jitter_us: u32,
}

impl JitterInputs {
    /// Serialized MAC input: ordinal(8) ‖ doc_hash(32) ‖ timestamp(8) ‖ zone(1) ‖ bucket(1) ‖ prev_jitter(4).
    pub fn to_bytes(&self) -> [u8; 54] {
        let mut out = [0u8; 54];
        out[0..8].copy_from_slice(&self.ordinal.to_be_bytes());
        out[8..40].copy_from_slice(&self.doc_hash);
        out[40..48].copy_from_slice(&self.timestamp_us.to_be_bytes());
        out[48] = self.zone_code;
        out[49] = self.bucket;
        out[50..54].copy_from_slice(&self.prev_jitter_us.to_be_bytes());
        out
    }
}

/// Derives the jitter value in `[jitter_min_us, jitter_max_us)`.
pub fn derive_jitter(secret: &SessionSecret, inputs: &JitterInputs, params: &SessionParams) -> u32 {
    let mut mac = HmacSha256::new_from_slice(secret.as_bytes()).expect("HMAC accepts any key size");
    mac.update(&inputs.to_bytes());
    let tag = mac.finalize().into_bytes();
    let raw = u32::from_be_bytes([tag[0], tag[1], tag[2], tag[3]]);
    params.jitter_min_us + raw % params.range()
}

/// One sealed keystroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JitterSample {
    pub ordinal: u64,
    pub timestamp_us: u64,
    #[serde(with = "hex_bytes")]
    pub doc_hash: Hash32,
    pub zone_code: u8,
    pub bucket: u8,
    pub jitter_us: u32,
    #[serde(with = "hex_bytes")]
    pub chain_hash: Hash32,
}

/// Serialized width of one sample.
pub const SAMPLE_LEN: usize = 8 + 8 + 32 + 1 + 1 + 4 + 32;

impl JitterSample {
    pub fn compute_chain_hash(
        ordinal: u64,
        timestamp_us: u64,
        doc_hash: &Hash32,
        jitter_us: u32,
        previous: &Hash32,
    ) -> Hash32 {
        let mut hasher = Sha256::new();
        hasher.update(CHAIN_PREFIX);
        hasher.update(ordinal.to_be_bytes());
        hasher.update(timestamp_us.to_be_bytes());
        hasher.update(doc_hash);
        hasher.update(jitter_us.to_be_bytes());
        hasher.update(previous);
        hasher.finalize().into()
    }

    pub fn inputs(&self, prev_jitter_us: u32) -> JitterInputs {
        JitterInputs {
            ordinal: self.ordinal,
            doc_hash: self.doc_hash,
            timestamp_us: self.timestamp_us,
            zone_code: self.zone_code,
            bucket: self.bucket,
            prev_jitter_us,
        }
    }

    pub fn to_bytes(&self) -> [u8; SAMPLE_LEN] {
        let mut out = [0u8; SAMPLE_LEN];
        out[0..8].copy_from_slice(&self.ordinal.to_be_bytes());
        out[8..16].copy_from_slice(&self.timestamp_us.to_be_bytes());
        out[16..48].copy_from_slice(&self.doc_hash);
        out[48] = self.zone_code;
        out[49] = self.bucket;
        out[50..54].copy_from_slice(&self.jitter_us.to_be_bytes());
        out[54..86].copy_from_slice(&self.chain_hash);
        out
    }

    pub fn from_bytes(b: &[u8; SAMPLE_LEN]) -> Self {
        let u64_at = |i: usize| u64::from_be_bytes(b[i..i + 8].try_into().unwrap());
        Self {
            ordinal: u64_at(0),
            timestamp_us: u64_at(8),
            doc_hash: b[16..48].try_into().unwrap(),
            zone_code: b[48],
            bucket: b[49],
            jitter_us: u32::from_be_bytes(b[50..54].try_into().unwrap()),
            chain_hash: b[54..86].try_into().unwrap(),
        }
    }
}

/// An ordered, hash-linked sequence of samples for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SealChain {
    pub params: SessionParams,
    pub session_id: [u8; 16],
    pub samples: Vec<JitterSample>,
}

impl SealChain {
    pub fn new(params: SessionParams, session_id: [u8; 16]) -> Self {
        Self {
            params,
            session_id,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&JitterSample> {
        self.samples.last()
    }

    /// Hash of the latest sample, or the genesis hash.
    pub fn head_hash(&self) -> Hash32 {
        self.samples.last().map_or(GENESIS_HASH, |s| s.chain_hash)
    }

    /// Ordinal the next sealed keystroke will receive.
    pub fn next_ordinal(&self) -> Result<u64, SealError> {
        match self.samples.last() {
            None => Ok(1),
            Some(s) => s
                .ordinal
                .checked_add(self.params.sample_interval)
                .ok_or(SealError::OrdinalOverflow),
        }
    }

    /// Seals one keystroke and appends the resulting sample.
    pub fn seal_keystroke(
        &mut self,
        secret: &SessionSecret,
        timestamp_us: u64,
        doc_hash: Hash32,
        zone_code: u8,
        bucket: u8,
    ) -> Result<&JitterSample, SealError> {
        if bucket > MAX_BUCKET {
            return Err(SealError::BucketOutOfRange(bucket));
        }
        let ordinal = self.next_ordinal()?;
        let (prev_jitter_us, prev_hash) = match self.samples.last() {
            Some(prev) => {
                if timestamp_us < prev.timestamp_us {
                    return Err(SealError::TimestampRegression {
                        ordinal,
                        timestamp_us,
                        previous_us: prev.timestamp_us,
                    });
                }
                (prev.jitter_us, prev.chain_hash)
            }
            None => (0, GENESIS_HASH),
        };
        let inputs = JitterInputs {
            ordinal,
            doc_hash,
            timestamp_us,
            zone_code,
            bucket,
            prev_jitter_us,
        };
        let jitter_us = derive_jitter(secret, &inputs, &self.params);
        let chain_hash = JitterSample::compute_chain_hash(ordinal, timestamp_us, &doc_hash, jitter_us, &prev_hash);
        self.samples.push(JitterSample {
            ordinal,
            timestamp_us,
            doc_hash,
            zone_code,
            bucket,
            jitter_us,
            chain_hash,
        });
        Ok(self.samples.last().expect("just pushed"))
    }

    /// Recomputes every chain hash from the current sample fields.
    ///
    /// This needs no secret; it is what an attacker who edits samples would do
    /// to keep the unkeyed hash chain consistent.
    pub fn rehash(&mut self) {
        let mut prev = GENESIS_HASH;
        for s in &mut self.samples {
            s.chain_hash = JitterSample::compute_chain_hash(s.ordinal, s.timestamp_us, &s.doc_hash, s.jitter_us, &prev);
            prev = s.chain_hash;
        }
    }
}

/// Which check rejected a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SealFailure {
    InvalidParams,
    Ordinal,
    TimestampRegression,
    Bucket,
    JitterRange,
    Jitter,
    ChainHash,
}

impl SealFailure {
    pub fn code(self) -> &'static str {
        match self {
            SealFailure::InvalidParams => "invalid-params",
            SealFailure::Ordinal => "ordinal",
            SealFailure::TimestampRegression => "timestamp-regression",
            SealFailure::Bucket => "bucket",
            SealFailure::JitterRange => "jitter-range",
            SealFailure::Jitter => "jitter-mismatch",
            SealFailure::ChainHash => "chain-hash-mismatch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainVerdict {
    Accept,
    Reject { ordinal: u64, failure: SealFailure },
}

impl ChainVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, ChainVerdict::Accept)
    }
}

/// Checks every sample's jitter and chain hash. Runs in parallel when available.
pub fn verify_chain(secret: &SessionSecret, chain: &SealChain) -> ChainVerdict {
    verify_chain_with(secret, chain, Exec::default())
}

pub fn verify_chain_with(secret: &SessionSecret, chain: &SealChain, exec: Exec) -> ChainVerdict {
    if chain.params.validate().is_err() {
        return ChainVerdict::Reject {
            ordinal: chain.samples.first().map_or(0, |s| s.ordinal),
            failure: SealFailure::InvalidParams,
        };
    }
    let samples = &chain.samples;
    // Each sample records its own inputs and the predecessor is recorded too,
    // so samples can be checked independently; the first failure wins.
    let check = |i: usize| check_sample(secret, chain, i);
    match par::find_first(samples.len(), exec, |i| check(i).is_some()) {
        None => ChainVerdict::Accept,
        Some(i) => ChainVerdict::Reject {
            ordinal: samples[i].ordinal,
            failure: check(i).expect("index reported as failing"),
        },
    }
}

fn check_sample(secret: &SessionSecret, chain: &SealChain, i: usize) -> Option<SealFailure> {
    let params = &chain.params;
    let s = &chain.samples[i];
    let prev = i.checked_sub(1).map(|p| &chain.samples[p]);
    match prev {
        None if s.ordinal != 1 => return Some(SealFailure::Ordinal),
        Some(p) if p.ordinal.checked_add(params.sample_interval) != Some(s.ordinal) => {
            return Some(SealFailure::Ordinal)
        }
        Some(p) if s.timestamp_us < p.timestamp_us => return Some(SealFailure::TimestampRegression),
        _ => {}
    }
    if s.bucket > MAX_BUCKET {
        return Some(SealFailure::Bucket);
    }
    if s.jitter_us < params.jitter_min_us || s.jitter_us >= params.jitter_max_us {
        return Some(SealFailure::JitterRange);
    }
    let prev_jitter = prev.map_or(0, |p| p.jitter_us);
    if derive_jitter(secret, &s.inputs(prev_jitter), params) != s.jitter_us {
        return Some(SealFailure::Jitter);
    }
    let prev_hash = prev.map_or(GENESIS_HASH, |p| p.chain_hash);
    let expected = JitterSample::compute_chain_hash(s.ordinal, s.timestamp_us, &s.doc_hash, s.jitter_us, &prev_hash);
    if expected != s.chain_hash {
        return Some(SealFailure::ChainHash);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn sealed_chain(secret: &SessionSecret, n: usize) -> SealChain {
        let mut chain = SealChain::new(SessionParams::default(), [7u8; 16]);
        for k in 0..n {
            let doc = crate::sha256(format!("doc state {k}").as_bytes());
            chain
                .seal_keystroke(secret, 1_000 * k as u64, doc, (k % 72) as u8, (k % 10) as u8)
                .unwrap();
        }
        chain
    }

    #[test]
    fn setup_defaults_and_overrides() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (_, params) = setup(&mut rng, None).unwrap();
        assert_eq!((params.jitter_min_us, params.jitter_max_us, params.sample_interval), (500, 3000, 1));
        assert_eq!(params.range(), 2500);

        let o = ParamOverrides {
            sample_interval: Some(1),
            jitter_min_us: Some(1000),
            jitter_max_us: Some(1002),
        };
        let (_, params) = setup(&mut rng, Some(o)).unwrap();
        assert_eq!(params.range(), 2);

        let bad = ParamOverrides {
            jitter_min_us: Some(3000),
            jitter_max_us: Some(500),
            ..Default::default()
        };
        assert_eq!(
            setup(&mut rng, Some(bad)).unwrap_err(),
            SealError::InvalidRange { min: 3000, max: 500 }
        );
    }

    #[test]
    fn setup_secrets_are_fresh() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (a, _) = setup(&mut rng, None).unwrap();
        let (b, _) = setup(&mut rng, None).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn derive_jitter_matches_hmac_oracle() {
        // Expected values computed with Python's hmac/hashlib over the
        // documented big-endian layout.
        let params = SessionParams::default();
        let zero = JitterInputs {
            ordinal: 1,
            doc_hash: [0; 32],
            timestamp_us: 0,
            zone_code: 0,
            bucket: 0,
            prev_jitter_us: 0,
        };
        assert_eq!(derive_jitter(&SessionSecret::from_bytes([0; 32]), &zero, &params), 2336);

        let mut secret = [0u8; 32];
        for (i, b) in secret.iter_mut().enumerate() {
            *b = i as u8;
        }
        let inputs = JitterInputs {
            ordinal: 42,
            doc_hash: crate::sha256(b"hello"),
            timestamp_us: 123_456,
            zone_code: 69,
            bucket: 2,
            prev_jitter_us: 1700,
        };
        assert_eq!(derive_jitter(&SessionSecret::from_bytes(secret), &inputs, &params), 1280);
    }

    #[test]
    fn genesis_chain_hash_matches_oracle() {
        let secret = SessionSecret::from_bytes([0; 32]);
        let mut chain = SealChain::new(SessionParams::default(), [0; 16]);
        let s = *chain.seal_keystroke(&secret, 0, [0; 32], 0, 0).unwrap();
        assert_eq!(s.ordinal, 1);
        assert_eq!(s.jitter_us, 2336);
        assert_eq!(
            hex::encode(s.chain_hash),
            "66026997445373b5ba2a2424b1b96e4c2b675524fa6401f16f9207d819fc265b"
        );
    }

    #[test]
    fn derive_jitter_is_deterministic() {
        let secret = SessionSecret::from_bytes([3; 32]);
        let inputs = JitterInputs {
            ordinal: 5,
            doc_hash: [9; 32],
            timestamp_us: 77,
            zone_code: 12,
            bucket: 4,
            prev_jitter_us: 900,
        };
        let p = SessionParams::default();
        assert_eq!(derive_jitter(&secret, &inputs, &p), derive_jitter(&secret, &inputs, &p));
    }

    #[test]
    fn one_bit_secret_difference_collides_at_about_one_in_r() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let params = SessionParams::default();
        let trials = 10_000;
        let mut collisions = 0;
        for _ in 0..trials {
            let mut a = [0u8; 32];
            rng.fill(&mut a);
            let mut b = a;
            let bit = rng.gen_range(0..256);
            b[bit / 8] ^= 1 << (bit % 8);
            let inputs = JitterInputs {
                ordinal: rng.gen(),
                doc_hash: rng.gen(),
                timestamp_us: rng.gen(),
                zone_code: rng.gen_range(0..72),
                bucket: rng.gen_range(0..10),
                prev_jitter_us: rng.gen_range(500..3000),
            };
            let ja = derive_jitter(&SessionSecret::from_bytes(a), &inputs, &params);
            let jb = derive_jitter(&SessionSecret::from_bytes(b), &inputs, &params);
            collisions += u32::from(ja == jb);
        }
        // Expected 4 collisions (binomial, p = 1/2500); sd = 2.
        assert!(collisions <= 14, "collisions = {collisions}");
    }

    #[test]
    fn sealing_counts_and_links() {
        let secret = SessionSecret::from_bytes([1; 32]);
        let chain = sealed_chain(&secret, 100);
        assert_eq!(chain.len(), 100);
        for w in chain.samples.windows(2) {
            assert_eq!(w[1].ordinal, w[0].ordinal + 1);
        }
        assert_eq!(chain.samples[0].ordinal, 1);
        assert!(verify_chain(&secret, &chain).is_accept());
    }

    #[test]
    fn sample_interval_spaces_ordinals() {
        let secret = SessionSecret::from_bytes([1; 32]);
        let mut chain = SealChain::new(SessionParams::new(5, 500, 3000).unwrap(), [0; 16]);
        for k in 0..4 {
            chain.seal_keystroke(&secret, k, [0; 32], 64, 0).unwrap();
        }
        let ords: Vec<u64> = chain.samples.iter().map(|s| s.ordinal).collect();
        assert_eq!(ords, vec![1, 6, 11, 16]);
        assert!(verify_chain(&secret, &chain).is_accept());
    }

    #[test]
    fn timestamp_regression_is_rejected_at_seal_time() {
        let secret = SessionSecret::from_bytes([1; 32]);
        let mut chain = SealChain::new(SessionParams::default(), [0; 16]);
        chain.seal_keystroke(&secret, 500, [0; 32], 64, 0).unwrap();
        let err = chain.seal_keystroke(&secret, 499, [0; 32], 0, 0).unwrap_err();
        assert_eq!(
            err,
            SealError::TimestampRegression {
                ordinal: 2,
                timestamp_us: 499,
                previous_us: 500
            }
        );
        assert_eq!(chain.len(), 1);
        assert_eq!(
            chain.seal_keystroke(&secret, 600, [0; 32], 0, 10).unwrap_err(),
            SealError::BucketOutOfRange(10)
        );
    }

    #[test]
    fn empty_chain_verifies() {
        let chain = SealChain::new(SessionParams::default(), [0; 16]);
        assert!(verify_chain(&SessionSecret::from_bytes([0; 32]), &chain).is_accept());
    }

    #[test]
    fn wrong_secret_rejects_first_sample() {
        let chain = sealed_chain(&SessionSecret::from_bytes([1; 32]), 20);
        let verdict = verify_chain(&SessionSecret::from_bytes([2; 32]), &chain);
        assert_eq!(
            verdict,
            ChainVerdict::Reject {
                ordinal: 1,
                failure: SealFailure::Jitter
            }
        );
    }

    #[test]
    fn reject_pinpoints_first_failure() {
        let secret = SessionSecret::from_bytes([1; 32]);
        let mut chain = sealed_chain(&secret, 30);
        chain.samples[17].chain_hash[3] ^= 0x10;
        chain.samples[25].jitter_us = if chain.samples[25].jitter_us == 500 { 501 } else { 500 };
        assert_eq!(
            verify_chain_with(&secret, &chain, Exec::Sequential),
            ChainVerdict::Reject {
                ordinal: 18,
                failure: SealFailure::ChainHash
            }
        );
        assert_eq!(
            verify_chain_with(&secret, &chain, Exec::Parallel),
            verify_chain_with(&secret, &chain, Exec::Sequential)
        );
    }

    #[test]
    fn fabricated_jitter_rejects_even_with_rehash() {
        let secret = SessionSecret::from_bytes([4; 32]);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let honest = sealed_chain(&secret, 10);
        let mut accepts = 0;
        for _ in 0..2_000 {
            let mut forged = honest.clone();
            let k = rng.gen_range(0..forged.len());
            forged.samples[k].jitter_us = rng.gen_range(500..3000);
            forged.rehash();
            if forged != honest && verify_chain(&secret, &forged).is_accept() {
                accepts += 1;
            }
        }
        assert_eq!(accepts, 0);
    }

    #[test]
    fn document_binding() {
        let secret = SessionSecret::from_bytes([8; 32]);
        let mut chain = sealed_chain(&secret, 12);
        for (k, s) in chain.samples.iter_mut().enumerate() {
            s.doc_hash = crate::sha256(format!("other document {k}").as_bytes());
        }
        chain.rehash();
        assert!(!verify_chain(&secret, &chain).is_accept());
    }

    #[test]
    fn sample_bytes_round_trip() {
        let secret = SessionSecret::from_bytes([8; 32]);
        let chain = sealed_chain(&secret, 3);
        for s in &chain.samples {
            assert_eq!(JitterSample::from_bytes(&s.to_bytes()), *s);
        }
    }

    #[test]
    fn secret_hex_round_trip_and_redacted_debug() {
        let s = SessionSecret::from_bytes([0xab; 32]);
        assert_eq!(SessionSecret::from_hex(&s.to_hex()), Some(s.clone()));
        assert_eq!(SessionSecret::from_hex("abcd"), None);
        assert!(!format!("{s:?}").contains("ab"));
    }
}

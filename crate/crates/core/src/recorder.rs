//! End-to-end session recording over the simulator: match the two input
//! streams, seal every sampled keystroke, log it and checkpoint the state.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::anchors::AnchorSet;
use crate::evidence_log::{LeafRecord, MmrLog};
use crate::input_model::{
    encode_zone_transition, interval_bucket, match_streams, simulate_session, InputError, MatchSummary,
    SimulatedSession, TimingProfile, ZoneMap, DEFAULT_WINDOW_US,
};
use crate::jitter_seal::{JitterSample, SealChain, SealError, SessionParams, SessionSecret};
use crate::packet::{
    assemble_packet, final_doc_hash, log_root, packet_root, AssemblyError, EvidencePacket, PacketHeader, CONTENT_TEXT,
};
use crate::vdf::{checkpoint_binding, CheckpointJob, CheckpointWorker, VdfCheckpoint, VdfError};
use crate::Hash32;

/// Default checkpoint cadence: one per 50 ms of session time.
pub const DEFAULT_CHECKPOINT_INTERVAL_US: u64 = 50_000;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Seal(#[from] SealError),
    #[error(transparent)]
    Vdf(#[from] VdfError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

#[derive(Debug, Clone)]
pub struct RecordOptions {
    pub seed: u64,
    pub profile: TimingProfile,
    pub params: SessionParams,
    /// VDF parameter set; `None` records no checkpoints.
    pub vdf_params_id: Option<String>,
    pub checkpoint_interval_us: u64,
    pub session_epoch_us: u64,
    pub window_us: u64,
    /// Fail on keys outside the zone map instead of skipping them.
    pub strict: bool,
}

impl RecordOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            profile: TimingProfile::default(),
            params: SessionParams::default(),
            vdf_params_id: None,
            checkpoint_interval_us: DEFAULT_CHECKPOINT_INTERVAL_US,
            session_epoch_us: 0,
            window_us: DEFAULT_WINDOW_US,
            strict: false,
        }
    }
}

/// Everything a recording produced, before anchoring.
#[derive(Debug)]
pub struct Recording {
    pub secret: SessionSecret,
    pub header: PacketHeader,
    pub session: SimulatedSession,
    pub chain: SealChain,
    pub log: MmrLog,
    pub checkpoints: Vec<VdfCheckpoint>,
    pub dual_source: MatchSummary,
}

impl Recording {
    /// The digest anchors must commit to.
    pub fn root(&self) -> Hash32 {
        packet_root(
            &self.header,
            &log_root(self.log.state()),
            self.log.len(),
            &final_doc_hash(&self.chain.samples),
        )
    }

    /// Time the evidence claims to be complete: epoch plus the last sample.
    pub fn local_claim_time_us(&self) -> u64 {
        let last = self.chain.last().map_or(0, |s| s.timestamp_us);
        self.header.session_epoch_us.saturating_add(last)
    }

    pub fn packet(&self, anchors: AnchorSet) -> Result<EvidencePacket, AssemblyError> {
        assemble_packet(
            self.header.clone(),
            &self.chain,
            self.checkpoints.clone(),
            self.log.state(),
            anchors,
            Some(self.dual_source),
        )
    }
}

/// Seals every `sample_interval`-th mapped keystroke of `session`.
///
/// Zone transitions and interval buckets are taken relative to the previous
/// mapped keystroke, sealed or not. Keys outside the zone map are skipped
/// unless `strict`. `on_sample` sees each sample as it is appended.
pub fn seal_session(
    session: &SimulatedSession,
    secret: &SessionSecret,
    params: SessionParams,
    session_id: [u8; 16],
    strict: bool,
    mut on_sample: impl FnMut(&JitterSample),
) -> Result<SealChain, RecordError> {
    let zones = ZoneMap::qwerty();
    let mut chain = SealChain::new(params, session_id);
    let mut prev: Option<(u8, u64)> = None;
    let mut mapped = 0u64;
    for (k, doc_hash) in session.keystrokes.iter().zip(&session.doc_hashes) {
        let zone = match zones.zone_of(k.key) {
            Ok(z) => z,
            Err(e) if strict => return Err(e.into()),
            Err(_) => continue,
        };
        let t = k.app_timestamp_us;
        let zone_code = encode_zone_transition(prev.map(|(z, _)| z), zone)?;
        let bucket = prev.map_or(0, |(_, pt)| interval_bucket(t.saturating_sub(pt)));
        prev = Some((zone, t));
        mapped += 1;
        if !(mapped - 1).is_multiple_of(params.sample_interval) {
            continue;
        }
        on_sample(chain.seal_keystroke(secret, t, *doc_hash, zone_code, bucket)?);
    }
    Ok(chain)
}

/// Records `text` as if typed under `opts.profile`. Deterministic in `opts.seed`.
pub fn record_session(text: &str, opts: &RecordOptions) -> Result<Recording, RecordError> {
    opts.params.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let secret = SessionSecret::generate(&mut rng);
    let mut session_id = [0u8; 16];
    rng.fill_bytes(&mut session_id);

    let session = simulate_session(text, &opts.profile, opts.seed)?;
    let (_, dual_source) = match_streams(&session.app, &session.dev, opts.window_us)?;

    let zones = ZoneMap::qwerty();
    let worker = opts.vdf_params_id.as_deref().map(CheckpointWorker::spawn).transpose()?;
    let mut log = MmrLog::new();
    let mut next_checkpoint = 0u64;
    let mut last_checkpoint: Option<u64> = None;
    let chain = seal_session(&session, &secret, opts.params, session_id, opts.strict, |sample| {
        log.append(LeafRecord::for_sample(sample).leaf_hash());
        let Some(w) = &worker else { return };
        let t = sample.timestamp_us;
        if last_checkpoint.is_none_or(|l| t >= l.saturating_add(opts.checkpoint_interval_us)) {
            let mmr_root = log_root(log.state());
            w.submit(CheckpointJob {
                index: next_checkpoint,
                sample_count: log.len(),
                chain_binding: checkpoint_binding(&mmr_root, &sample.chain_hash, next_checkpoint),
            });
            next_checkpoint += 1;
            last_checkpoint = Some(t);
        }
    })?;

    let checkpoints = worker.map(CheckpointWorker::finish).transpose()?.unwrap_or_default();
    let header = PacketHeader {
        session_id,
        session_epoch_us: opts.session_epoch_us,
        params: opts.params,
        vdf_params_id: opts.vdf_params_id.clone().unwrap_or_default(),
        zone_map_version: zones.version(),
        content_kind: CONTENT_TEXT,
    };
    Ok(Recording {
        secret,
        header,
        session,
        chain,
        log,
        checkpoints,
        dual_source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jitter_seal::verify_chain;
    use crate::packet::{verify_packet, TrustConfig};
    use crate::vdf::TEST_256;

    #[test]
    fn honest_recording_verifies() {
        let rec = record_session("The quick brown fox.", &RecordOptions::new(1)).unwrap();
        assert!(verify_chain(&rec.secret, &rec.chain).is_accept());
        // Digits and punctuation outside the map are skipped.
        assert_eq!(rec.chain.len(), "The quick brown fox.".len());
        let packet = rec.packet(AnchorSet::new(rec.local_claim_time_us())).unwrap();
        assert!(verify_packet(&rec.secret, &packet, &TrustConfig::default()).accepted());
    }

    #[test]
    fn unmapped_keys_are_skipped_or_rejected() {
        let rec = record_session("a1b2c", &RecordOptions::new(1)).unwrap();
        assert_eq!(rec.chain.len(), 3);
        let strict = RecordOptions {
            strict: true,
            ..RecordOptions::new(1)
        };
        assert!(matches!(
            record_session("a1b", &strict),
            Err(RecordError::Input(InputError::UnmappedKey('1')))
        ));
    }

    #[test]
    fn sample_interval_seals_every_nth_keystroke() {
        let opts = RecordOptions {
            params: SessionParams::new(3, 500, 3000).unwrap(),
            ..RecordOptions::new(2)
        };
        let rec = record_session("abcdefghij", &opts).unwrap();
        let ordinals: Vec<u64> = rec.chain.samples.iter().map(|s| s.ordinal).collect();
        assert_eq!(ordinals, [1, 4, 7, 10]);
        assert!(verify_chain(&rec.secret, &rec.chain).is_accept());
    }

    #[test]
    fn checkpoints_follow_cadence() {
        let opts = RecordOptions {
            vdf_params_id: Some(TEST_256.into()),
            checkpoint_interval_us: 400_000,
            ..RecordOptions::new(3)
        };
        let rec = record_session("checkpoint cadence test", &opts).unwrap();
        assert!(!rec.checkpoints.is_empty());
        let times: Vec<u64> = rec
            .checkpoints
            .iter()
            .map(|c| rec.chain.samples[c.sample_count as usize - 1].timestamp_us)
            .collect();
        assert!(times.windows(2).all(|w| w[1] >= w[0] + 400_000));
        let packet = rec.packet(AnchorSet::default()).unwrap();
        let report = verify_packet(&rec.secret, &packet, &TrustConfig::default());
        assert!(report.accepted(), "{report}");
        assert_eq!(report.vdf, crate::packet::LayerVerdict::Accept);
    }

    #[test]
    fn same_seed_same_recording() {
        let a = record_session("determinism", &RecordOptions::new(7)).unwrap();
        let b = record_session("determinism", &RecordOptions::new(7)).unwrap();
        assert_eq!(a.secret, b.secret);
        assert_eq!(a.chain, b.chain);
        let c = record_session("determinism", &RecordOptions::new(8)).unwrap();
        assert_ne!(a.chain, c.chain);
    }
}

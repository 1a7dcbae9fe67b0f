use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{InputError, Key, KeyEvent, Origin};
use crate::Hash32;

/// Inter-key timing model for the simulator.
///
/// Read from a small `key = value` file; every key is optional:
///
/// ```text
/// mean_interval_ms = 180
/// stddev_ms = 60
/// injection_rate = 0.0
/// lead_ms_min = 1
/// lead_ms_max = 8
/// min_interval_ms = 60
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingProfile {
    pub mean_interval_ms: f64,
    pub stddev_ms: f64,
    /// Probability that a keystroke is software-injected (application stream only).
    pub injection_rate: f64,
    /// Device-to-application delivery lead, in milliseconds.
    pub lead_ms_min: f64,
    pub lead_ms_max: f64,
    /// Floor on sampled inter-key intervals.
    pub min_interval_ms: f64,
}

impl Default for TimingProfile {
    fn default() -> Self {
        Self {
            mean_interval_ms: 180.0,
            stddev_ms: 60.0,
            injection_rate: 0.0,
            lead_ms_min: 1.0,
            lead_ms_max: 8.0,
            min_interval_ms: 60.0,
        }
    }
}

impl TimingProfile {
    pub fn with_injection_rate(mut self, rate: f64) -> Self {
        self.injection_rate = rate;
        self
    }

    pub fn parse(text: &str) -> Result<Self, InputError> {
        let profile: Self = toml::from_str(text).map_err(|e| InputError::InvalidProfile(e.message().to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::InvalidProfile(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |msg: &str| Err(InputError::InvalidProfile(msg.to_string()));
        let finite = [
            self.mean_interval_ms,
            self.stddev_ms,
            self.injection_rate,
            self.lead_ms_min,
            self.lead_ms_max,
            self.min_interval_ms,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("values must be finite");
        }
        if self.mean_interval_ms <= 0.0 || self.stddev_ms < 0.0 {
            return bad("mean_interval_ms must be positive and stddev_ms non-negative");
        }
        if !(0.0..=1.0).contains(&self.injection_rate) {
            return bad("injection_rate must lie in [0, 1]");
        }
        if self.lead_ms_min < 0.0 || self.lead_ms_min > self.lead_ms_max {
            return bad("need 0 <= lead_ms_min <= lead_ms_max");
        }
        // Keeps the application stream time-ordered.
        if self.min_interval_ms <= self.lead_ms_max {
            return bad("min_interval_ms must exceed lead_ms_max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulatedKeystroke {
    pub key: Key,
    /// When the application (and so the document) saw the keystroke.
    pub app_timestamp_us: u64,
    /// Hardware timestamp; `None` for injected keystrokes.
    pub device_timestamp_us: Option<u64>,
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedSession {
    pub app: Vec<KeyEvent>,
    pub dev: Vec<KeyEvent>,
    /// `doc_hashes[k]` is the SHA-256 of the first `k + 1` characters.
    pub doc_hashes: Vec<Hash32>,
    pub keystrokes: Vec<SimulatedKeystroke>,
}

impl SimulatedSession {
    pub fn injected_count(&self) -> usize {
        self.keystrokes.iter().filter(|k| k.injected).count()
    }
}

/// Types `text` one character per keystroke under `profile`.
///
/// Deterministic for a given seed. Device events precede their application
/// counterparts by a lead drawn from `[lead_ms_min, lead_ms_max]`; injected
/// keystrokes appear only in the application stream.
pub fn simulate_session(text: &str, profile: &TimingProfile, seed: u64) -> Result<SimulatedSession, InputError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals = Normal::new(profile.mean_interval_ms, profile.stddev_ms)
        .map_err(|e| InputError::InvalidProfile(e.to_string()))?;

    let n = text.chars().count();
    let mut session = SimulatedSession {
        app: Vec::with_capacity(n),
        dev: Vec::with_capacity(n),
        doc_hashes: Vec::with_capacity(n),
        keystrokes: Vec::with_capacity(n),
    };
    let mut doc = Sha256::new();
    let mut nominal_us = 0u64;
    let mut buf = [0u8; 4];

    for key in text.chars() {
        let interval_ms = intervals.sample(&mut rng).max(profile.min_interval_ms);
        nominal_us += (interval_ms * 1000.0).round() as u64;
        // Always draw both values so the stream layout does not depend on
        // which branch a keystroke takes.
        let injected = rng.gen::<f64>() < profile.injection_rate;
        let lead_ms = rng.gen_range(profile.lead_ms_min..=profile.lead_ms_max);

        doc.update(key.encode_utf8(&mut buf).as_bytes());
        session.doc_hashes.push(doc.clone().finalize().into());

        if injected {
            session.app.push(KeyEvent {
                timestamp_us: nominal_us,
                key,
                origin: Origin::Application,
            });
            session.keystrokes.push(SimulatedKeystroke {
                key,
                app_timestamp_us: nominal_us,
                device_timestamp_us: None,
                injected: true,
            });
        } else {
            let app_us = nominal_us + (lead_ms * 1000.0).round() as u64;
            session.dev.push(KeyEvent {
                timestamp_us: nominal_us,
                key,
                origin: Origin::Device,
            });
            session.app.push(KeyEvent {
                timestamp_us: app_us,
                key,
                origin: Origin::Application,
            });
            session.keystrokes.push(SimulatedKeystroke {
                key,
                app_timestamp_us: app_us,
                device_timestamp_us: Some(nominal_us),
                injected: false,
            });
        }
    }
    Ok(session)
}

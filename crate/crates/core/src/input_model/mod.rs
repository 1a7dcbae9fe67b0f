//! Keyboard zones, interval buckets, dual-source stream matching and a
//! deterministic typing simulator.

mod simulator;
mod streams;
mod zones;

pub use simulator::{simulate_session, SimulatedKeystroke, SimulatedSession, TimingProfile};
pub use streams::{match_streams, KeyEvent, MatchSummary, Origin, ValidatedEvent, Verdict, DEFAULT_WINDOW_US};
pub use zones::{
    encode_zone_transition, interval_bucket, Key, ZoneMap, BUCKET_WIDTH_US, KEY_BACKSPACE, KEY_ENTER, KEY_SPACE,
    ZONE_COUNT, ZONE_MAP_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InputError {
    #[error("key {0:?} is not in the zone map")]
    UnmappedKey(char),
    #[error("zone {0} out of range 0..=7")]
    ZoneOutOfRange(u8),
    #[error("{origin:?} stream is not time-ordered at index {index}")]
    Unordered { origin: Origin, index: usize },
    #[error("invalid timing profile: {0}")]
    InvalidProfile(String),
}

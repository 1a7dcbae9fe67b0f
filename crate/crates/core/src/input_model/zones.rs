use std::collections::BTreeMap;

use super::InputError;

/// Key identifier: the character a key produces, with control characters
/// standing in for space, enter and backspace.
pub type Key = char;

pub const KEY_SPACE: Key = ' ';
pub const KEY_ENTER: Key = '\n';
pub const KEY_BACKSPACE: Key = '\u{8}';

pub const ZONE_COUNT: u8 = 8;

/// Version tag of the canonical table, recorded in packet headers.
pub const ZONE_MAP_VERSION: u16 = 1;

/// Interval bucket width (50 ms).
pub const BUCKET_WIDTH_US: u64 = 50_000;

// Base key caps per zone, QWERTY touch-typing fingers:
// L-pinky, L-ring, L-middle, L-index, R-index, R-middle, R-ring, R-pinky.
const ZONE_KEYS: [&str; 8] = ["qaz", "wsx", "edc", "rtfgvb", "yuhjnm", "ik,", "ol.", "p;/"];

// Shifted symbols share the physical key of their base character.
const SHIFTED: [(char, char); 4] = [('<', ','), ('>', '.'), (':', ';'), ('?', '/')];

/// Mapping from keys to the eight keyboard zones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZoneMap {
    table: BTreeMap<Key, u8>,
}

impl Default for ZoneMap {
    fn default() -> Self {
        Self::qwerty()
    }
}

impl ZoneMap {
    /// The canonical QWERTY table. Space sits with the right index finger
    /// (zone 4); enter and backspace with the right pinky (zone 7).
    pub fn qwerty() -> Self {
        let mut table = BTreeMap::new();
        for (zone, keys) in ZONE_KEYS.iter().enumerate() {
            for c in keys.chars() {
                table.insert(c, zone as u8);
                if c.is_ascii_lowercase() {
                    table.insert(c.to_ascii_uppercase(), zone as u8);
                }
            }
        }
        for (shifted, base) in SHIFTED {
            let zone = table[&base];
            table.insert(shifted, zone);
        }
        table.insert(KEY_SPACE, 4);
        table.insert(KEY_ENTER, 7);
        table.insert(KEY_BACKSPACE, 7);
        Self { table }
    }

    pub fn zone_of(&self, key: Key) -> Result<u8, InputError> {
        self.table.get(&key).copied().ok_or(InputError::UnmappedKey(key))
    }

    pub fn contains(&self, key: Key) -> bool {
        self.table.contains_key(&key)
    }

    /// Base key caps of one zone, excluding shifted forms and the
    /// space/enter/backspace assignments.
    pub fn base_keys(zone: u8) -> Vec<Key> {
        ZONE_KEYS.get(zone as usize).map(|k| k.chars().collect()).unwrap_or_default()
    }

    pub fn version(&self) -> u16 {
        ZONE_MAP_VERSION
    }
}

/// One-byte zone transition code: `prev * 8 + cur`, or `64 + cur` for the
/// first key of a session.
pub fn encode_zone_transition(prev: Option<u8>, cur: u8) -> Result<u8, InputError> {
    if cur >= ZONE_COUNT {
        return Err(InputError::ZoneOutOfRange(cur));
    }
    match prev {
        Some(p) if p >= ZONE_COUNT => Err(InputError::ZoneOutOfRange(p)),
        Some(p) => Ok(p * ZONE_COUNT + cur),
        None => Ok(64 + cur),
    }
}

/// `min(floor(delta / 50 ms), 9)`.
pub fn interval_bucket(delta_us: u64) -> u8 {
    (delta_us / BUCKET_WIDTH_US).min(9) as u8
}

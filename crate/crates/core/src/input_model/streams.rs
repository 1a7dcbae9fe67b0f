use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{InputError, Key};

/// Default dual-source matching window (50 ms).
pub const DEFAULT_WINDOW_US: u64 = 50_000;

/// Which layer of the input stack observed an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Window-server level; includes software-injected events.
    Application,
    /// HID device level.
    Device,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEvent {
    pub timestamp_us: u64,
    pub key: Key,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Validated,
    InjectedSuspect,
    DeviceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatedEvent {
    pub timestamp_us: u64,
    pub key: Key,
    pub verdict: Verdict,
}

/// Verdict counts of one matching run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub validated: u64,
    pub injected_suspect: u64,
    pub device_only: u64,
}

fn check_ordered(events: &[KeyEvent], origin: Origin) -> Result<(), InputError> {
    match events.windows(2).position(|w| w[1].timestamp_us < w[0].timestamp_us) {
        Some(i) => Err(InputError::Unordered { origin, index: i + 1 }),
        None => Ok(()),
    }
}

/// Pairs application and device events on identical keys within `window_us`.
///
/// Application events are taken in time order and each claims the earliest
/// unclaimed device event for the same key inside the window. Validated events
/// carry the device timestamp. Output is sorted by timestamp.
pub fn match_streams(
    app: &[KeyEvent],
    dev: &[KeyEvent],
    window_us: u64,
) -> Result<(Vec<ValidatedEvent>, MatchSummary), InputError> {
    check_ordered(app, Origin::Application)?;
    check_ordered(dev, Origin::Device)?;

    let mut pending: HashMap<Key, VecDeque<usize>> = HashMap::new();
    for (i, e) in dev.iter().enumerate() {
        pending.entry(e.key).or_default().push_back(i);
    }
    let mut dev_matched = vec![false; dev.len()];
    let mut out = Vec::with_capacity(app.len().max(dev.len()));
    let mut summary = MatchSummary::default();

    for a in app {
        let lower = a.timestamp_us.saturating_sub(window_us);
        let upper = a.timestamp_us.saturating_add(window_us);
        let mut hit = None;
        if let Some(queue) = pending.get_mut(&a.key) {
            // Device events older than the window can never match a later
            // application event either.
            while queue.front().is_some_and(|&d| dev[d].timestamp_us < lower) {
                queue.pop_front();
            }
            if queue.front().is_some_and(|&d| dev[d].timestamp_us <= upper) {
                hit = queue.pop_front();
            }
        }
        match hit {
            Some(d) => {
                dev_matched[d] = true;
                summary.validated += 1;
                out.push(ValidatedEvent {
                    timestamp_us: dev[d].timestamp_us,
                    key: a.key,
                    verdict: Verdict::Validated,
                });
            }
            None => {
                summary.injected_suspect += 1;
                out.push(ValidatedEvent {
                    timestamp_us: a.timestamp_us,
                    key: a.key,
                    verdict: Verdict::InjectedSuspect,
                });
            }
        }
    }
    for (e, _) in dev.iter().zip(&dev_matched).filter(|(_, matched)| !**matched) {
        summary.device_only += 1;
        out.push(ValidatedEvent {
            timestamp_us: e.timestamp_us,
            key: e.key,
            verdict: Verdict::DeviceOnly,
        });
    }
    out.sort_by_key(|e| e.timestamp_us);
    Ok((out, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(t: u64, key: char, origin: Origin) -> KeyEvent {
        KeyEvent {
            timestamp_us: t,
            key,
            origin,
        }
    }

    #[test]
    fn ten_ms_apart_validates() {
        let app = [ev(110_000, 'a', Origin::Application)];
        let dev = [ev(100_000, 'a', Origin::Device)];
        let (events, s) = match_streams(&app, &dev, DEFAULT_WINDOW_US).unwrap();
        assert_eq!(s, MatchSummary { validated: 1, injected_suspect: 0, device_only: 0 });
        assert_eq!(events[0].timestamp_us, 100_000);
        assert_eq!(events[0].verdict, Verdict::Validated);
    }

    #[test]
    fn application_only_is_injected_and_device_only_is_flagged() {
        let app = [ev(0, 'x', Origin::Application)];
        let dev = [ev(500_000, 'y', Origin::Device)];
        let (events, s) = match_streams(&app, &dev, DEFAULT_WINDOW_US).unwrap();
        assert_eq!(s, MatchSummary { validated: 0, injected_suspect: 1, device_only: 1 });
        assert_eq!(events[0].verdict, Verdict::InjectedSuspect);
        assert_eq!(events[1].verdict, Verdict::DeviceOnly);
    }

    #[test]
    fn window_boundary_is_inclusive() {
        let app = [ev(150_000, 'q', Origin::Application), ev(300_001, 'q', Origin::Application)];
        let dev = [ev(100_000, 'q', Origin::Device), ev(250_000, 'q', Origin::Device)];
        let (_, s) = match_streams(&app, &dev, 50_000).unwrap();
        assert_eq!(s.validated, 1);
        assert_eq!(s.injected_suspect, 1);
        assert_eq!(s.device_only, 1);
    }

    #[test]
    fn greedy_takes_earliest_candidate() {
        let app = [ev(40_000, 'e', Origin::Application)];
        let dev = [ev(10_000, 'e', Origin::Device), ev(39_000, 'e', Origin::Device)];
        let (events, _) = match_streams(&app, &dev, 50_000).unwrap();
        let validated = events.iter().find(|e| e.verdict == Verdict::Validated).unwrap();
        assert_eq!(validated.timestamp_us, 10_000);
    }

    #[test]
    fn unsorted_input_is_an_error() {
        let app = [ev(10, 'a', Origin::Application), ev(5, 'a', Origin::Application)];
        assert_eq!(
            match_streams(&app, &[], 50_000).unwrap_err(),
            InputError::Unordered { origin: Origin::Application, index: 1 }
        );
        let dev = [ev(10, 'a', Origin::Device), ev(9, 'b', Origin::Device)];
        assert!(matches!(
            match_streams(&[], &dev, 50_000),
            Err(InputError::Unordered { origin: Origin::Device, .. })
        ));
    }

    fn stream(origin: Origin) -> impl Strategy<Value = Vec<KeyEvent>> {
        prop::collection::vec((0u64..200_000, prop::sample::select(vec!['a', 'b', 'c'])), 0..40).prop_map(
            move |mut v| {
                v.sort_by_key(|(t, _)| *t);
                v.into_iter().map(|(t, k)| ev(t, k, origin)).collect()
            },
        )
    }

    proptest! {
        #[test]
        fn verdict_counts_are_consistent(app in stream(Origin::Application), dev in stream(Origin::Device), window in 0u64..100_000) {
            let (events, s) = match_streams(&app, &dev, window).unwrap();
            prop_assert!(s.validated <= app.len().min(dev.len()) as u64);
            prop_assert_eq!(s.injected_suspect + s.validated, app.len() as u64);
            prop_assert_eq!(s.device_only + s.validated, dev.len() as u64);
            prop_assert_eq!(events.len() as u64, s.validated + s.injected_suspect + s.device_only);
            prop_assert!(events.windows(2).all(|w| w[0].timestamp_us <= w[1].timestamp_us));
        }
    }
}

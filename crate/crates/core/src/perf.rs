//! Micro-timings of the per-keystroke primitives.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use serde::Serialize;

use crate::evidence_log::MmrState;
use crate::jitter_seal::{derive_jitter, JitterInputs, SessionParams, SessionSecret};
use crate::sha256;
use crate::vdf::{checkpoint_binding, create_checkpoint, TEST_256};

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub name: &'static str,
    pub median_ns: f64,
    pub samples: usize,
    pub batch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerfReport {
    pub timings: Vec<Timing>,
}

impl PerfReport {
    pub fn get(&self, name: &str) -> Option<&Timing> {
        self.timings.iter().find(|t| t.name == name)
    }
}

impl fmt::Display for PerfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24}{:>16}", "primitive", "median")?;
        for t in &self.timings {
            let (v, unit) = match t.median_ns {
                n if n >= 1e6 => (n / 1e6, "ms"),
                n if n >= 1e3 => (n / 1e3, "µs"),
                n => (n, "ns"),
            };
            writeln!(f, "{:<24}{:>13.2} {unit}", t.name, v)?;
        }
        Ok(())
    }
}

/// Median per-op time over `samples` batches of `batch` calls.
pub fn measure(name: &'static str, samples: usize, batch: usize, mut op: impl FnMut(usize)) -> Timing {
    for i in 0..batch {
        op(i);
    }
    let mut per_op: Vec<f64> = (0..samples)
        .map(|s| {
            let start = Instant::now();
            for i in 0..batch {
                op(s * batch + i);
            }
            start.elapsed().as_nanos() as f64 / batch as f64
        })
        .collect();
    per_op.sort_by(f64::total_cmp);
    Timing {
        name,
        median_ns: per_op[per_op.len() / 2],
        samples,
        batch,
    }
}

pub const JITTER: &str = "jitter derivation";
pub const DOC_HASH: &str = "SHA-256 of 10 KB";
pub const MMR_APPEND: &str = "MMR append";
pub const VDF_CHECKPOINT: &str = "VDF checkpoint";

pub fn run_benchmarks() -> PerfReport {
    let secret = SessionSecret::from_bytes([7; 32]);
    let params = SessionParams::default();
    let jitter = measure(JITTER, 51, 2_000, |i| {
        let inputs = JitterInputs {
            ordinal: i as u64 + 1,
            doc_hash: [3; 32],
            timestamp_us: i as u64 * 1_000,
            zone_code: 12,
            bucket: 3,
            prev_jitter_us: 1_700,
        };
        black_box(derive_jitter(&secret, black_box(&inputs), &params));
    });

    let doc = vec![b'x'; 10 * 1024];
    let hash = measure(DOC_HASH, 51, 200, |_| {
        black_box(sha256(black_box(&doc)));
    });

    let mut state = MmrState::new();
    let append = measure(MMR_APPEND, 51, 2_000, |i| {
        state.append(black_box(sha256(&(i as u64).to_be_bytes())));
    });

    let vdf = measure(VDF_CHECKPOINT, 11, 1, |i| {
        let binding = checkpoint_binding(&[1; 32], &[2; 32], i as u64);
        black_box(create_checkpoint(TEST_256, i as u64, 1, binding).expect("registered params"));
    });

    PerfReport {
        timings: vec![jitter, hash, append, vdf],
    }
}

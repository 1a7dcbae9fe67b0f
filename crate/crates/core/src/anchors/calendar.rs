//! Batching calendar: many digests share one aggregate commitment.

use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::AnchorError;
use crate::evidence_log::{node_hash, PathStep, Side, LEAF_PREFIX};
use crate::hash::{hex_bytes, sha256_parts};
use crate::Hash32;

const ANCHOR_TAG: &[u8] = b"WTNSCAL1";

/// Position of a submitted digest in the batch that will commit it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingHandle {
    pub batch: u64,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CalendarProof {
    #[serde(with = "hex_bytes")]
    pub digest: Hash32,
    pub path: Vec<PathStep>,
    #[serde(with = "hex_bytes")]
    pub pseudo_anchor_id: Hash32,
    pub anchor_time_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalendarRejection {
    AnchorMismatch,
}

impl CalendarRejection {
    pub fn code(&self) -> &'static str {
        match self {
            CalendarRejection::AnchorMismatch => "calendar-mismatch",
        }
    }
}

fn calendar_leaf(digest: &Hash32) -> Hash32 {
    sha256_parts(&[&[LEAF_PREFIX], digest])
}

/// The pseudo-anchor commits to both the aggregate root and the anchor time.
fn anchor_id(root: &Hash32, anchor_time_us: u64) -> Hash32 {
    sha256_parts(&[ANCHOR_TAG, root, &anchor_time_us.to_be_bytes()])
}

pub fn verify_calendar_proof(proof: &CalendarProof) -> Result<(), CalendarRejection> {
    let root = proof
        .path
        .iter()
        .fold(calendar_leaf(&proof.digest), |acc, step| match step.side {
            Side::Left => node_hash(&step.hash, &acc),
            Side::Right => node_hash(&acc, &step.hash),
        });
    if anchor_id(&root, proof.anchor_time_us) == proof.pseudo_anchor_id {
        Ok(())
    } else {
        Err(CalendarRejection::AnchorMismatch)
    }
}

struct Queue {
    batch: u64,
    digests: Vec<Hash32>,
}

/// Collects digests from concurrent submitters and commits them in batches.
pub struct CalendarAggregator {
    queue: Mutex<Queue>,
    clock: Box<dyn Fn() -> u64 + Send + Sync>,
}

impl Default for CalendarAggregator {
    fn default() -> Self {
        Self::with_clock(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_micros() as u64)
                .unwrap_or(0)
        })
    }
}

impl CalendarAggregator {
    pub fn with_clock(clock: impl Fn() -> u64 + Send + Sync + 'static) -> Self {
        Self {
            queue: Mutex::new(Queue {
                batch: 0,
                digests: Vec::new(),
            }),
            clock: Box::new(clock),
        }
    }

    pub fn submit(&self, digest: Hash32) -> PendingHandle {
        let mut q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
        q.digests.push(digest);
        PendingHandle {
            batch: q.batch,
            position: q.digests.len() - 1,
        }
    }

    pub fn pending(&self) -> usize {
        self.queue.lock().unwrap_or_else(|e| e.into_inner()).digests.len()
    }

    /// Drains the queue and returns one proof per digest, in submission order.
    pub fn finalize(&self) -> Result<Vec<CalendarProof>, AnchorError> {
        let digests = {
            let mut q = self.queue.lock().unwrap_or_else(|e| e.into_inner());
            if q.digests.is_empty() {
                return Err(AnchorError::EmptyBatch);
            }
            q.batch += 1;
            std::mem::take(&mut q.digests)
        };

        let mut paths = vec![Vec::new(); digests.len()];
        // Each entry: (node hash, indices of leaves beneath it).
        let mut level: Vec<(Hash32, Vec<usize>)> = digests
            .iter()
            .enumerate()
            .map(|(i, d)| (calendar_leaf(d), vec![i]))
            .collect();
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            let mut it = level.into_iter();
            while let Some((left, mut left_ix)) = it.next() {
                match it.next() {
                    Some((right, right_ix)) => {
                        for &i in &left_ix {
                            paths[i].push(PathStep { side: Side::Right, hash: right });
                        }
                        for &i in &right_ix {
                            paths[i].push(PathStep { side: Side::Left, hash: left });
                        }
                        left_ix.extend(right_ix);
                        next.push((node_hash(&left, &right), left_ix));
                    }
                    // Odd node is promoted unchanged.
                    None => next.push((left, left_ix)),
                }
            }
            level = next;
        }
        let root = level[0].0;
        let anchor_time_us = (self.clock)();
        let pseudo_anchor_id = anchor_id(&root, anchor_time_us);
        Ok(digests
            .into_iter()
            .zip(paths)
            .map(|(digest, path)| CalendarProof {
                digest,
                path,
                pseudo_anchor_id,
                anchor_time_us,
            })
            .collect())
    }
}

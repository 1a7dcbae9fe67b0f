use serde::Serialize;

use super::{bag_hash, node_hash, LogError, ProofRejection};
use crate::hash::hex_bytes;
use crate::jitter_seal::JitterSample;
use crate::Hash32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Peak {
    pub height: u32,
    #[serde(with = "hex_bytes")]
    pub hash: Hash32,
}

/// Leaf count plus the current peaks, tallest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MmrState {
    pub leaf_count: u64,
    pub peaks: Vec<Peak>,
}

impl MmrState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, leaf: Hash32) {
        self.peaks.push(Peak { height: 0, hash: leaf });
        while let [.., left, right] = self.peaks.as_slice() {
            if left.height != right.height {
                break;
            }
            let merged = Peak {
                height: left.height + 1,
                hash: node_hash(&left.hash, &right.hash),
            };
            self.peaks.truncate(self.peaks.len() - 2);
            self.peaks.push(merged);
        }
        self.leaf_count += 1;
    }

    /// Functional form of [`append`](Self::append).
    pub fn appended(&self, leaf: Hash32) -> Self {
        let mut next = self.clone();
        next.append(leaf);
        next
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count == 0
    }

    pub fn root(&self) -> Result<Hash32, LogError> {
        let (last, rest) = self.peaks.split_last().ok_or(LogError::Empty)?;
        Ok(bag_right_to_left(rest.iter().map(|p| &p.hash), last.hash))
    }
}

fn bag_right_to_left<'a, I>(left_of_acc: I, acc: Hash32) -> Hash32
where
    I: DoubleEndedIterator<Item = &'a Hash32>,
{
    left_of_acc.rev().fold(acc, |acc, peak| bag_hash(peak, &acc))
}

/// Position of one peak in the leaf sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeakSlot {
    pub start: u64,
    pub height: u32,
}

/// Peaks implied by a leaf count, tallest (leftmost) first.
pub fn peak_layout(leaf_count: u64) -> Vec<PeakSlot> {
    let mut slots = Vec::with_capacity(leaf_count.count_ones() as usize);
    let mut start = 0;
    for height in (0..64).rev() {
        if leaf_count & (1 << height) != 0 {
            slots.push(PeakSlot { start, height });
            start += 1 << height;
        }
    }
    slots
}

fn locate(leaf_count: u64, index: u64) -> Option<(usize, PeakSlot)> {
    if index >= leaf_count {
        return None;
    }
    peak_layout(leaf_count)
        .into_iter()
        .enumerate()
        .find(|(_, slot)| index < slot.start + (1u64 << slot.height))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Sibling hash and which side of the running node it sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub side: Side,
    #[serde(with = "hex_bytes")]
    pub hash: Hash32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InclusionProof {
    pub leaf_index: u64,
    pub leaf_count: u64,
    /// Siblings from the leaf up to its peak.
    pub path: Vec<PathStep>,
    /// Peaks to the left of the leaf's peak, in order.
    #[serde(serialize_with = "hex_list")]
    pub left_peaks: Vec<Hash32>,
    /// Peaks to the right of the leaf's peak, in order.
    #[serde(serialize_with = "hex_list")]
    pub right_peaks: Vec<Hash32>,
}

fn hex_list<S: serde::Serializer>(v: &[Hash32], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(hex::encode))
}

/// MMR state together with the leaf hashes needed for proofs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MmrLog {
    leaves: Vec<Hash32>,
    state: MmrState,
}

impl MmrLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_leaves(leaves: impl IntoIterator<Item = Hash32>) -> Self {
        let mut log = Self::new();
        for leaf in leaves {
            log.append(leaf);
        }
        log
    }

    pub fn from_samples(samples: &[JitterSample]) -> Self {
        Self::from_leaves(super::sample_leaves(samples))
    }

    pub fn append(&mut self, leaf: Hash32) {
        self.leaves.push(leaf);
        self.state.append(leaf);
    }

    pub fn state(&self) -> &MmrState {
        &self.state
    }

    pub fn leaves(&self) -> &[Hash32] {
        &self.leaves
    }

    pub fn len(&self) -> u64 {
        self.state.leaf_count
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn root(&self) -> Result<Hash32, LogError> {
        self.state.root()
    }

    pub fn prove(&self, index: u64) -> Result<InclusionProof, LogError> {
        mmr_prove(&self.state, &self.leaves, index)
    }
}

/// Builds the inclusion proof for `index` from the full leaf sequence.
pub fn mmr_prove(state: &MmrState, leaves: &[Hash32], index: u64) -> Result<InclusionProof, LogError> {
    if leaves.len() as u64 != state.leaf_count {
        return Err(LogError::LeafCountMismatch {
            leaves: leaves.len() as u64,
            leaf_count: state.leaf_count,
        });
    }
    let (pos, slot) = locate(state.leaf_count, index).ok_or(LogError::IndexOutOfRange {
        index,
        leaf_count: state.leaf_count,
    })?;
    let start = slot.start as usize;
    let mut level: Vec<Hash32> = leaves[start..start + (1usize << slot.height)].to_vec();
    let mut offset = (index - slot.start) as usize;
    let mut path = Vec::with_capacity(slot.height as usize);
    while level.len() > 1 {
        let (side, sibling) = if offset.is_multiple_of(2) {
            (Side::Right, level[offset + 1])
        } else {
            (Side::Left, level[offset - 1])
        };
        path.push(PathStep { side, hash: sibling });
        level = level.chunks_exact(2).map(|pair| node_hash(&pair[0], &pair[1])).collect();
        offset /= 2;
    }
    debug_assert_eq!(level[0], state.peaks[pos].hash);
    Ok(InclusionProof {
        leaf_index: index,
        leaf_count: state.leaf_count,
        path,
        left_peaks: state.peaks[..pos].iter().map(|p| p.hash).collect(),
        right_peaks: state.peaks[pos + 1..].iter().map(|p| p.hash).collect(),
    })
}

/// Recomputes the root from `leaf` and `proof` and compares it with `root`.
///
/// The proof's shape (path length, sides, number of peaks on either side) must
/// agree with what `leaf_index` and `leaf_count` imply.
pub fn mmr_verify(root: &Hash32, leaf: &Hash32, proof: &InclusionProof) -> Result<(), ProofRejection> {
    let (pos, slot) = locate(proof.leaf_count, proof.leaf_index).ok_or(ProofRejection::IndexOutOfRange)?;
    if proof.path.len() != slot.height as usize {
        return Err(ProofRejection::PathLength);
    }
    let peak_count = proof.leaf_count.count_ones() as usize;
    if proof.left_peaks.len() != pos || proof.right_peaks.len() != peak_count - pos - 1 {
        return Err(ProofRejection::PeakLayout);
    }
    let offset = proof.leaf_index - slot.start;
    let mut acc = *leaf;
    for (level, step) in proof.path.iter().enumerate() {
        let expected = if (offset >> level) & 1 == 0 { Side::Right } else { Side::Left };
        if step.side != expected {
            return Err(ProofRejection::SideMismatch);
        }
        acc = match step.side {
            Side::Right => node_hash(&acc, &step.hash),
            Side::Left => node_hash(&step.hash, &acc),
        };
    }
    if let Some((last, rest)) = proof.right_peaks.split_last() {
        let right = bag_right_to_left(rest.iter(), *last);
        acc = bag_hash(&acc, &right);
    }
    acc = bag_right_to_left(proof.left_peaks.iter(), acc);
    if &acc == root {
        Ok(())
    } else {
        Err(ProofRejection::RootMismatch)
    }
}

use std::sync::mpsc;
use std::thread;

use num_bigint::BigUint;
use serde::Serialize;

use super::{lookup_params, vdf_eval_and_prove, vdf_verify, VdfError, VdfParams, VdfProof, VdfRejection};
use crate::hash::{hex_bytes, sha256_parts};
use crate::{sha256, Hash32};

/// A VDF proof bound to the evidence state at one point of the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VdfCheckpoint {
    pub index: u64,
    /// Number of samples in the prefix the binding commits to.
    pub sample_count: u64,
    /// SHA-256(mmr_root ‖ chain_hash ‖ index).
    #[serde(with = "hex_bytes")]
    pub chain_binding: Hash32,
    pub params_id: String,
    pub proof: VdfProof,
}

pub fn checkpoint_binding(mmr_root: &Hash32, chain_hash: &Hash32, index: u64) -> Hash32 {
    sha256_parts(&[mmr_root, chain_hash, &index.to_be_bytes()])
}

/// SHA-256 of the binding, reduced mod N and squared into the quadratic residues.
pub fn hash_to_group(binding: &Hash32, params: &VdfParams) -> BigUint {
    let n = params.modulus();
    let h = BigUint::from_bytes_be(&sha256(binding)) % n;
    &h * &h % n
}

pub fn create_checkpoint(
    params_id: &str,
    index: u64,
    sample_count: u64,
    chain_binding: Hash32,
) -> Result<VdfCheckpoint, VdfError> {
    let params = lookup_params(params_id)?;
    let x = hash_to_group(&chain_binding, &params);
    let (_, proof) = vdf_eval_and_prove(&params, &x)?;
    Ok(VdfCheckpoint {
        index,
        sample_count,
        chain_binding,
        params_id: params_id.to_string(),
        proof,
    })
}

/// Checks the proof and that its input derives from the recorded binding.
pub fn verify_checkpoint(cp: &VdfCheckpoint) -> Result<(), VdfRejection> {
    let params = lookup_params(&cp.params_id).map_err(|_| VdfRejection::UnknownParams)?;
    if hash_to_group(&cp.chain_binding, &params) != cp.proof.input_x {
        return Err(VdfRejection::InputMismatch);
    }
    vdf_verify(&params, &cp.proof).map(|_| ())
}

#[derive(Debug, Clone)]
pub struct CheckpointJob {
    pub index: u64,
    pub sample_count: u64,
    pub chain_binding: Hash32,
}

/// Background thread evaluating checkpoints so sealing never waits on the VDF.
pub struct CheckpointWorker {
    tx: Option<mpsc::Sender<CheckpointJob>>,
    handle: Option<thread::JoinHandle<Result<Vec<VdfCheckpoint>, VdfError>>>,
}

impl CheckpointWorker {
    pub fn spawn(params_id: &str) -> Result<Self, VdfError> {
        lookup_params(params_id)?;
        let id = params_id.to_string();
        let (tx, rx) = mpsc::channel::<CheckpointJob>();
        let handle = thread::Builder::new()
            .name("vdf-checkpoints".into())
            .spawn(move || {
                rx.into_iter()
                    .map(|job| create_checkpoint(&id, job.index, job.sample_count, job.chain_binding))
                    .collect()
            })
            .expect("spawn checkpoint thread");
        Ok(Self {
            tx: Some(tx),
            handle: Some(handle),
        })
    }

    /// Queues a job; never blocks on evaluation.
    pub fn submit(&self, job: CheckpointJob) {
        if let Some(tx) = &self.tx {
            // The receiver only disappears if the worker panicked, which
            // `finish` reports.
            let _ = tx.send(job);
        }
    }

    /// Waits for all queued jobs and returns their checkpoints in order.
    pub fn finish(mut self) -> Result<Vec<VdfCheckpoint>, VdfError> {
        self.tx.take();
        self.handle
            .take()
            .expect("joined once")
            .join()
            .expect("checkpoint worker panicked")
    }
}

impl Drop for CheckpointWorker {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

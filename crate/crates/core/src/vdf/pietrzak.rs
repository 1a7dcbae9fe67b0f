use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{VdfError, VdfParams, VdfRejection};

/// Fiat–Shamir challenge width (128 bits).
pub const CHALLENGE_BYTES: usize = 16;

const CHALLENGE_TAG: &[u8; 8] = b"WTNSVDF1";

// Squarings per modpow call during evaluation.
const EVAL_CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VdfProof {
    #[serde(serialize_with = "hex_big")]
    pub input_x: BigUint,
    #[serde(serialize_with = "hex_big")]
    pub output_y: BigUint,
    /// One μ per halving round.
    #[serde(serialize_with = "hex_big_list")]
    pub midpoints: Vec<BigUint>,
}

fn hex_big<S: serde::Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_str_radix(16))
}

fn hex_big_list<S: serde::Serializer>(v: &[BigUint], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_str_radix(16)))
}

/// `x^(2^n) mod m`, computed as `n` squarings.
fn square_n(x: &BigUint, n: u64, modulus: &BigUint) -> BigUint {
    let mut acc = x.clone();
    let mut left = n;
    while left > 0 {
        let step = left.min(EVAL_CHUNK);
        acc = acc.modpow(&(BigUint::one() << step), modulus);
        left -= step;
    }
    acc
}

fn check_input(params: &VdfParams, x: &BigUint) -> Result<(), VdfError> {
    if x.is_zero() || x >= params.modulus() {
        return Err(VdfError::InputOutOfRange);
    }
    Ok(())
}

/// `y = x^(2^T) mod N`.
pub fn vdf_eval(params: &VdfParams, x: &BigUint) -> Result<BigUint, VdfError> {
    check_input(params, x)?;
    Ok(square_n(x, params.time_t(), params.modulus()))
}

fn fixed_width(v: &BigUint, width: usize) -> Vec<u8> {
    let bytes = v.to_bytes_be();
    let mut out = vec![0u8; width.saturating_sub(bytes.len())];
    out.extend_from_slice(&bytes);
    out
}

fn challenge(params: &VdfParams, round: u32, remaining_t: u64, x: &BigUint, y: &BigUint, mu: &BigUint) -> BigUint {
    let w = params.element_len();
    let mut h = Sha256::new();
    h.update(CHALLENGE_TAG);
    h.update(round.to_be_bytes());
    h.update(remaining_t.to_be_bytes());
    h.update(fixed_width(x, w));
    h.update(fixed_width(y, w));
    h.update(fixed_width(mu, w));
    BigUint::from_bytes_be(&h.finalize()[..CHALLENGE_BYTES])
}

/// Powers of the input kept from evaluation: `points[j] = x^(2^(j·stride))`.
struct Trace {
    stride: u64,
    points: Vec<BigUint>,
}

/// Runs the halving rounds, asking `midpoint` for each μ. The callback gets
/// the round, the folded input, the half time and the previous challenge.
fn fold_rounds<F>(params: &VdfParams, x: &BigUint, y: &BigUint, mut midpoint: F) -> VdfProof
where
    F: FnMut(u32, &BigUint, u64, Option<&BigUint>) -> BigUint,
{
    let n = params.modulus();
    let mut cur_x = x.clone();
    let mut cur_y = y.clone();
    let mut midpoints = Vec::with_capacity(params.rounds() as usize);
    let mut remaining = params.time_t();
    let mut prev_r = None;
    for round in 0..params.rounds() {
        let half = remaining / 2;
        let mu = midpoint(round, &cur_x, half, prev_r.as_ref());
        let r = challenge(params, round, remaining, &cur_x, &cur_y, &mu);
        cur_x = cur_x.modpow(&r, n) * &mu % n;
        cur_y = mu.modpow(&r, n) * &cur_y % n;
        midpoints.push(mu);
        prev_r = Some(r);
        remaining = half;
    }
    VdfProof {
        input_x: x.clone(),
        output_y: y.clone(),
        midpoints,
    }
}

/// Builds a proof for a claimed `(x, y)` by recomputing each midpoint.
///
/// Costs about `T` further squarings. The prover does not check `y`; an
/// inconsistent pair yields a proof that verification rejects.
pub fn vdf_prove(params: &VdfParams, x: &BigUint, y: &BigUint) -> VdfProof {
    let n = params.modulus().clone();
    fold_rounds(params, x, y, |_, cur_x, half, _| square_n(cur_x, half, &n))
}

/// Number of leading rounds whose midpoints are cheaper to assemble from an
/// evaluation trace than to recompute by squaring.
fn trace_depth(params: &VdfParams) -> u32 {
    let challenge_bits = 8 * CHALLENGE_BYTES as u64;
    let mut depth = 0;
    for k in 1..=params.rounds().min(12) {
        // Round k combines 2^(k-1) trace points with exponents of about
        // 128·(k-1) bits; recomputing costs T/2^k squarings.
        let combine = (1u64 << (k - 1)) * (challenge_bits * u64::from(k - 1) * 3 / 2 + 1);
        let direct = params.time_t() >> k;
        if combine >= direct {
            break;
        }
        depth = k;
    }
    depth
}

fn eval_traced(params: &VdfParams, x: &BigUint, depth: u32) -> Trace {
    let stride = params.time_t() >> depth;
    let mut points = Vec::with_capacity((1usize << depth) + 1);
    let mut acc = x.clone();
    points.push(acc.clone());
    for _ in 0..(1u64 << depth) {
        acc = square_n(&acc, stride, params.modulus());
        points.push(acc.clone());
    }
    Trace { stride, points }
}

/// Evaluates and proves in one pass, reusing evaluation checkpoints to
/// shortcut the early proof rounds.
pub fn vdf_eval_and_prove(params: &VdfParams, x: &BigUint) -> Result<(BigUint, VdfProof), VdfError> {
    check_input(params, x)?;
    let depth = trace_depth(params);
    let trace = eval_traced(params, x, depth);
    let y = trace.points.last().expect("trace has endpoints").clone();
    let n = params.modulus().clone();

    // The folded input of the current round as a product of x^(2^offset)
    // powers: (offset, exponent).
    let mut terms: Vec<(u64, BigUint)> = vec![(0, BigUint::one())];
    let proof = fold_rounds(params, x, &y, |round, cur_x, half, prev_r| {
        if round >= depth {
            return square_n(cur_x, half, &n);
        }
        if let Some(r) = prev_r {
            // x_k = x_{k-1}^r · μ_k, with μ_k = x_{k-1}^(2^(2·half)).
            let prev_half = half * 2;
            let mut next = Vec::with_capacity(terms.len() * 2);
            for (off, e) in &terms {
                next.push((*off, e * r));
                next.push((off + prev_half, e.clone()));
            }
            terms = next;
        }
        terms.iter().fold(BigUint::one(), |acc, (off, e)| {
            let point = &trace.points[((off + half) / trace.stride) as usize];
            acc * point.modpow(e, &n) % &n
        })
    });
    Ok((y, proof))
}

/// Work done by one verification.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyStats {
    pub exponentiations: u32,
    /// Square-and-multiply multiplication count for the same exponents.
    pub multiplications: u64,
}

/// Checks a proof with `log2(T)` folding rounds and one final squaring.
pub fn vdf_verify(params: &VdfParams, proof: &VdfProof) -> Result<VerifyStats, VdfRejection> {
    if proof.midpoints.len() != params.rounds() as usize {
        return Err(VdfRejection::MidpointCount);
    }
    let n = params.modulus();
    let in_group = |v: &BigUint| !v.is_zero() && v < n;
    if !in_group(&proof.input_x) || !in_group(&proof.output_y) || !proof.midpoints.iter().all(in_group) {
        return Err(VdfRejection::ElementOutOfRange);
    }
    let mut stats = VerifyStats::default();
    let mut x = proof.input_x.clone();
    let mut y = proof.output_y.clone();
    let mut remaining = params.time_t();
    for (round, mu) in proof.midpoints.iter().enumerate() {
        let r = challenge(params, round as u32, remaining, &x, &y, mu);
        let cost = r.bits() + u64::from(r.count_ones() as u32);
        x = x.modpow(&r, n) * mu % n;
        y = mu.modpow(&r, n) * &y % n;
        stats.exponentiations += 2;
        stats.multiplications += 2 * cost;
        remaining /= 2;
    }
    stats.multiplications += 1;
    if &x * &x % n == y {
        Ok(stats)
    } else {
        Err(VdfRejection::FinalCheck)
    }
}

//! Attack trials against the jitter seal and tamper tests against packets.
//!
//! Each trial draws its own RNG from the run seed, scenario and trial index,
//! so reports are identical across runs and execution modes.

use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anchors::{build_tsa_request, MockTsa, TsaAnchor};
use crate::hash::sha256_parts;
use crate::input_model::{simulate_session, TimingProfile};
use crate::jitter_seal::{derive_jitter, verify_chain_with, SealChain, SessionParams, SessionSecret};
use crate::packet::{verify_packet_with, EvidencePacket, Layer, LayerVerdict, TrustConfig};
use crate::par::{self, Exec};
use crate::recorder::seal_session;

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz    ";
const COLLISION_CHUNK: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Honest,
    FabricatedJitter,
    MismatchedDocument,
    WrongSecret,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Honest,
        Scenario::FabricatedJitter,
        Scenario::MismatchedDocument,
        Scenario::WrongSecret,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Honest => "honest",
            Scenario::FabricatedJitter => "fabricated-jitter",
            Scenario::MismatchedDocument => "mismatched-document",
            Scenario::WrongSecret => "wrong-secret",
        }
    }

    fn tag(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub honest: usize,
    pub fabricated_jitter: usize,
    pub mismatched_document: usize,
    pub wrong_secret: usize,
    /// Keystrokes per session.
    pub length: usize,
    pub seed: u64,
    pub params: SessionParams,
    pub profile: TimingProfile,
    pub exec: Exec,
}

impl Default for TrialConfig {
    /// 100 honest sessions and 1,000 of each attack, 200 keystrokes each.
    fn default() -> Self {
        Self {
            honest: 100,
            fabricated_jitter: 1_000,
            mismatched_document: 1_000,
            wrong_secret: 1_000,
            length: 200,
            seed: 0,
            params: SessionParams::default(),
            profile: TimingProfile::default(),
            exec: Exec::default(),
        }
    }
}

impl TrialConfig {
    /// 1,000 honest sessions and 10,000 of each attack.
    pub fn paper_scale() -> Self {
        Self {
            honest: 1_000,
            fabricated_jitter: 10_000,
            mismatched_document: 10_000,
            wrong_secret: 10_000,
            ..Self::default()
        }
    }

    pub fn trials(&self, scenario: Scenario) -> usize {
        match scenario {
            Scenario::Honest => self.honest,
            Scenario::FabricatedJitter => self.fabricated_jitter,
            Scenario::MismatchedDocument => self.mismatched_document,
            Scenario::WrongSecret => self.wrong_secret,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub trials: u64,
    pub accepted: u64,
    pub rejected: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub scenarios: Vec<ScenarioResult>,
    /// Fabricated samples whose guessed jitter matched the keyed value.
    pub collision_samples: u64,
    pub collision_hits: u64,
    pub collision_rate: f64,
    #[serde(serialize_with = "secs")]
    pub wall_time: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl TrialReport {
    pub fn result(&self, scenario: Scenario) -> Option<&ScenarioResult> {
        self.scenarios.iter().find(|r| r.scenario == scenario)
    }

    /// Honest sessions all accepted and every attack rejected.
    pub fn passed(&self) -> bool {
        self.scenarios.iter().all(|r| match r.scenario {
            Scenario::Honest => r.accepted == r.trials,
            _ => r.accepted == 0,
        })
    }

    /// Everything but wall time, for determinism checks.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.scenarios == other.scenarios
            && self.collision_samples == other.collision_samples
            && self.collision_hits == other.collision_hits
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for TrialReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22}{:>10}{:>10}{:>10}", "scenario", "trials", "accepted", "rejected")?;
        for r in &self.scenarios {
            writeln!(f, "{:<22}{:>10}{:>10}{:>10}", r.scenario.name(), r.trials, r.accepted, r.rejected)?;
        }
        writeln!(
            f,
            "per-sample collisions: {}/{} ({:.6})",
            self.collision_hits, self.collision_samples, self.collision_rate
        )?;
        write!(f, "wall time: {:.2} s", self.wall_time.as_secs_f64())
    }
}

fn trial_rng(seed: u64, scenario: Scenario, index: usize) -> ChaCha8Rng {
    let digest = sha256_parts(&[
        b"WTNSTRIAL",
        &seed.to_be_bytes(),
        &[scenario.tag()],
        &(index as u64).to_be_bytes(),
    ]);
    ChaCha8Rng::from_seed(digest)
}

fn random_text(rng: &mut impl Rng, length: usize) -> String {
    (0..length)
        .map(|_| *ALPHABET.choose(rng).expect("non-empty") as char)
        .collect()
}

/// An honest chain of `config.length` keystrokes and its secret.
fn honest_chain(config: &TrialConfig, rng: &mut ChaCha8Rng) -> (SessionSecret, SealChain) {
    let secret = SessionSecret::generate(rng);
    let text = random_text(rng, config.length);
    let session = simulate_session(&text, &config.profile, rng.next_u64()).expect("valid profile");
    let mut session_id = [0u8; 16];
    rng.fill_bytes(&mut session_id);
    let chain = seal_session(&session, &secret, config.params, session_id, false, |_| {}).expect("alphabet is mapped");
    (secret, chain)
}

struct Outcome {
    accepted: bool,
    samples: u64,
    hits: u64,
}

fn run_one(config: &TrialConfig, scenario: Scenario, index: usize) -> Outcome {
    let mut rng = trial_rng(config.seed, scenario, index);
    let (secret, mut chain) = honest_chain(config, &mut rng);
    let mut verifier_secret = secret.clone();
    let (mut samples, mut hits) = (0, 0);
    match scenario {
        Scenario::Honest => {}
        Scenario::FabricatedJitter => {
            let p = chain.params;
            for s in &mut chain.samples {
                s.jitter_us = rng.gen_range(p.jitter_min_us..p.jitter_max_us);
            }
            let mut prev = 0;
            for s in &chain.samples {
                samples += 1;
                hits += u64::from(derive_jitter(&secret, &s.inputs(prev), &p) == s.jitter_us);
                prev = s.jitter_us;
            }
            chain.rehash();
        }
        Scenario::MismatchedDocument => {
            let other = random_text(&mut rng, config.length);
            let other = simulate_session(&other, &config.profile, rng.next_u64()).expect("valid profile");
            for (s, h) in chain.samples.iter_mut().zip(&other.doc_hashes) {
                s.doc_hash = *h;
            }
            chain.rehash();
        }
        Scenario::WrongSecret => verifier_secret = SessionSecret::generate(&mut rng),
    }
    // Trials already run in parallel; each chain is checked sequentially.
    let accepted = verify_chain_with(&verifier_secret, &chain, Exec::Sequential).is_accept();
    Outcome {
        accepted,
        samples,
        hits,
    }
}

pub fn run_trials(config: &TrialConfig) -> TrialReport {
    let start = Instant::now();
    let mut scenarios = Vec::new();
    let (mut collision_samples, mut collision_hits) = (0, 0);
    for scenario in Scenario::ALL {
        let n = config.trials(scenario);
        let outcomes = par::map_indexed(n, config.exec, |i| run_one(config, scenario, i));
        let accepted = outcomes.iter().filter(|o| o.accepted).count() as u64;
        collision_samples += outcomes.iter().map(|o| o.samples).sum::<u64>();
        collision_hits += outcomes.iter().map(|o| o.hits).sum::<u64>();
        scenarios.push(ScenarioResult {
            scenario,
            trials: n as u64,
            accepted,
            rejected: n as u64 - accepted,
        });
    }
    TrialReport {
        scenarios,
        collision_samples,
        collision_hits,
        collision_rate: collision_hits as f64 / collision_samples.max(1) as f64,
        wall_time: start.elapsed(),
    }
}

/// Blind single-sample jitter guessing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionReport {
    pub trials: u64,
    /// Guesses equal to the keyed jitter.
    pub hits: u64,
    pub rate: f64,
    /// 1/R for the configured range.
    pub expected_rate: f64,
    /// Standard error of the rate under the expected probability.
    pub std_error: f64,
    /// Chains accepted by full verification after substitution and rehash.
    pub accepted: u64,
    /// Accepted chains whose jitter differs from the honest value.
    pub forged_accepts: u64,
}

impl CollisionReport {
    /// How many standard errors the observed rate sits from 1/R.
    pub fn deviation(&self) -> f64 {
        (self.rate - self.expected_rate).abs() / self.std_error
    }
}

/// Seals one keystroke, replaces its jitter with a uniform guess, rehashes,
/// and runs full verification; repeated `trials` times.
pub fn collision_trials(trials: u64, seed: u64, params: SessionParams, exec: Exec) -> CollisionReport {
    let chunks = (trials as usize).div_ceil(COLLISION_CHUNK);
    let per_chunk = par::map_indexed(chunks, exec, |c| {
        let mut rng = ChaCha8Rng::from_seed(sha256_parts(&[b"WTNSCOLL", &seed.to_be_bytes(), &(c as u64).to_be_bytes()]));
        let n = (trials as usize - c * COLLISION_CHUNK).min(COLLISION_CHUNK);
        let (mut hits, mut accepted, mut forged) = (0u64, 0u64, 0u64);
        for _ in 0..n {
            let secret = SessionSecret::generate(&mut rng);
            let mut chain = SealChain::new(params, [0; 16]);
            let honest = chain
                .seal_keystroke(&secret, rng.gen_range(0..1 << 40), rng.gen(), rng.gen_range(0..72), rng.gen_range(0..10))
                .expect("first sample")
                .jitter_us;
            let guess = rng.gen_range(params.jitter_min_us..params.jitter_max_us);
            chain.samples[0].jitter_us = guess;
            chain.rehash();
            hits += u64::from(guess == honest);
            if verify_chain_with(&secret, &chain, Exec::Sequential).is_accept() {
                accepted += 1;
                forged += u64::from(guess != honest);
            }
        }
        (hits, accepted, forged)
    });
    let (hits, accepted, forged_accepts) = per_chunk
        .into_iter()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    let p = 1.0 / f64::from(params.range());
    CollisionReport {
        trials,
        hits,
        rate: hits as f64 / trials.max(1) as f64,
        expected_rate: p,
        std_error: (p * (1.0 - p) / trials.max(1) as f64).sqrt(),
        accepted,
        forged_accepts,
    }
}

/// A single-field tamper applied to an otherwise valid packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketMutation {
    Jitter,
    DocHash,
    Midpoint,
    VdfOutput,
    Binding,
    MmrRoot,
    FinalDocHash,
    ForeignReceipt,
    CalendarPath,
    InjectedEvent,
    WrongSecret,
}

impl PacketMutation {
    pub const ALL: [PacketMutation; 11] = [
        PacketMutation::Jitter,
        PacketMutation::DocHash,
        PacketMutation::Midpoint,
        PacketMutation::VdfOutput,
        PacketMutation::Binding,
        PacketMutation::MmrRoot,
        PacketMutation::FinalDocHash,
        PacketMutation::ForeignReceipt,
        PacketMutation::CalendarPath,
        PacketMutation::InjectedEvent,
        PacketMutation::WrongSecret,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PacketMutation::Jitter => "jitter",
            PacketMutation::DocHash => "doc-hash",
            PacketMutation::Midpoint => "vdf-midpoint",
            PacketMutation::VdfOutput => "vdf-output",
            PacketMutation::Binding => "checkpoint-binding",
            PacketMutation::MmrRoot => "mmr-root",
            PacketMutation::FinalDocHash => "final-doc-hash",
            PacketMutation::ForeignReceipt => "foreign-receipt",
            PacketMutation::CalendarPath => "calendar-path",
            PacketMutation::InjectedEvent => "injected-event",
            PacketMutation::WrongSecret => "wrong-secret",
        }
    }

    /// Layers that must reject, when present.
    ///
    /// Sample fields feed the leaf hashes, so they also break the recorded
    /// root. The packet root the anchors sign covers the recorded log fields
    /// but not the samples themselves.
    pub fn expected_rejects(self) -> &'static [Layer] {
        match self {
            PacketMutation::Jitter | PacketMutation::DocHash => &[Layer::Seal, Layer::Mmr],
            PacketMutation::Midpoint | PacketMutation::VdfOutput => &[Layer::Vdf],
            PacketMutation::Binding => &[Layer::Vdf, Layer::Mmr],
            PacketMutation::MmrRoot | PacketMutation::FinalDocHash => &[Layer::Mmr, Layer::Anchors],
            PacketMutation::ForeignReceipt | PacketMutation::CalendarPath => &[Layer::Anchors],
            PacketMutation::InjectedEvent => &[Layer::DualSource],
            PacketMutation::WrongSecret => &[Layer::Seal],
        }
    }
}

fn flip(bytes: &mut [u8], rng: &mut impl Rng) {
    let bit = rng.gen_range(0..bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
}

fn other_element(v: &BigUint, modulus: &BigUint) -> BigUint {
    let next = (v + 1u32) % modulus;
    if next == BigUint::default() {
        BigUint::from(1u32)
    } else {
        next
    }
}

/// Applies `m` at a random position. `None` if the packet lacks the target.
pub fn mutate_packet(
    packet: &EvidencePacket,
    secret: &SessionSecret,
    m: PacketMutation,
    rng: &mut impl Rng,
) -> Option<(EvidencePacket, SessionSecret)> {
    let mut p = packet.clone();
    let mut secret = secret.clone();
    let sample = (!p.samples.is_empty()).then(|| rng.gen_range(0..p.samples.len()));
    let checkpoint = (!p.checkpoints.is_empty()).then(|| rng.gen_range(0..p.checkpoints.len()));
    match m {
        PacketMutation::Jitter => {
            let params = p.header.params;
            let s = &mut p.samples[sample?];
            s.jitter_us = params.jitter_min_us + (s.jitter_us - params.jitter_min_us + 1) % params.range();
        }
        PacketMutation::DocHash => flip(&mut p.samples[sample?].doc_hash, rng),
        PacketMutation::Midpoint | PacketMutation::VdfOutput => {
            let cp = &mut p.checkpoints[checkpoint?];
            let modulus = crate::vdf::lookup_params(&cp.params_id).ok()?.modulus().clone();
            let target = match m {
                PacketMutation::Midpoint => {
                    let i = rng.gen_range(0..cp.proof.midpoints.len());
                    &mut cp.proof.midpoints[i]
                }
                _ => &mut cp.proof.output_y,
            };
            *target = other_element(target, &modulus);
        }
        PacketMutation::Binding => flip(&mut p.checkpoints[checkpoint?].chain_binding, rng),
        PacketMutation::MmrRoot => flip(&mut p.mmr_root, rng),
        PacketMutation::FinalDocHash => flip(&mut p.final_doc_hash, rng),
        PacketMutation::ForeignReceipt => {
            if p.anchors.tsa.is_empty() {
                return None;
            }
            let foreign = MockTsa::from_seed(rng.gen());
            let mut root = p.root();
            flip(&mut root, rng);
            let request = build_tsa_request(&root, rng).ok()?;
            let receipt = foreign.stamp(&request);
            p.anchors.tsa[0] = TsaAnchor { request, receipt };
        }
        PacketMutation::CalendarPath => {
            let proof = p.anchors.calendar.iter_mut().find(|c| !c.path.is_empty())?;
            let i = rng.gen_range(0..proof.path.len());
            flip(&mut proof.path[i].hash, rng);
        }
        PacketMutation::InjectedEvent => p.dual_source.as_mut()?.injected_suspect += 1,
        PacketMutation::WrongSecret => secret = SessionSecret::generate(&mut ChaCha8Rng::from_seed(rng.gen())),
    }
    Some((p, secret))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MutationOutcome {
    pub mutation: PacketMutation,
    pub expected: Vec<Layer>,
    pub rejected: Vec<Layer>,
}

impl MutationOutcome {
    pub fn holds(&self) -> bool {
        self.expected == self.rejected
    }
}

/// Applies every mutation to `packet` and records which layers rejected.
///
/// Expected layers are limited to those the untouched packet carries.
/// Mutations whose target the packet lacks are skipped.
pub fn mutation_matrix(
    packet: &EvidencePacket,
    secret: &SessionSecret,
    trust: &TrustConfig,
    rng: &mut impl Rng,
) -> Vec<MutationOutcome> {
    let baseline = verify_packet_with(secret, packet, trust, Exec::Sequential);
    PacketMutation::ALL
        .into_iter()
        .filter_map(|m| {
            let (mutated, secret) = mutate_packet(packet, secret, m, rng)?;
            let report = verify_packet_with(&secret, &mutated, trust, Exec::Sequential);
            let expected = Layer::ALL
                .into_iter()
                .filter(|l| m.expected_rejects().contains(l) && *baseline.verdict(*l) != LayerVerdict::Absent)
                .collect();
            Some(MutationOutcome {
                mutation: m,
                expected,
                rejected: report.rejected_layers(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> TrialConfig {
        TrialConfig {
            honest: 10,
            fabricated_jitter: 20,
            mismatched_document: 20,
            wrong_secret: 20,
            length: 60,
            seed,
            ..TrialConfig::default()
        }
    }

    #[test]
    fn honest_accepts_and_attacks_reject() {
        let report = run_trials(&small(1));
        assert!(report.passed(), "{report}");
        assert_eq!(report.result(Scenario::Honest).unwrap().accepted, 10);
        for r in &report.scenarios {
            assert_eq!(r.accepted + r.rejected, r.trials);
        }
        assert_eq!(report.collision_samples, 20 * 60);
    }

    #[test]
    fn reports_are_deterministic_across_exec_modes() {
        let a = run_trials(&small(5));
        let b = run_trials(&TrialConfig {
            exec: Exec::Sequential,
            ..small(5)
        });
        assert!(a.same_outcome(&b));
    }

    #[test]
    fn collisions_only_reproduce_the_honest_sample() {
        let r = collision_trials(50_000, 3, SessionParams::default(), Exec::default());
        assert_eq!(r.trials, 50_000);
        assert_eq!(r.accepted, r.hits);
        assert_eq!(r.forged_accepts, 0);
        assert!(r.deviation() < 4.0, "{r:?}");
    }

    #[test]
    fn narrow_range_collides_often() {
        let params = SessionParams::new(1, 500, 502).unwrap();
        let r = collision_trials(20_000, 9, params, Exec::Sequential);
        assert!((r.rate - 0.5).abs() < 0.02, "{r:?}");
    }

    #[test]
    fn paper_scale_is_ten_times_larger() {
        let s = TrialConfig::default();
        let p = TrialConfig::paper_scale();
        for sc in Scenario::ALL {
            assert_eq!(p.trials(sc), 10 * s.trials(sc));
        }
    }
}

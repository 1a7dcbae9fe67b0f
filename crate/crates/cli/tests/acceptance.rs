//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//!
//! Timing criteria run under the test profile (optimized) and are upper
//! bounds measured on whatever machine runs the suite.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use witnessd::adversary::{collision_trials, mutation_matrix, run_trials, TrialConfig};
use witnessd::anchors::{request_anchor, AnchorSet, CalendarAggregator, MockTsa};
use witnessd::evidence_log::{mmr_verify, InclusionProof, MmrLog, MmrState};
use witnessd::input_model::{match_streams, simulate_session, TimingProfile, DEFAULT_WINDOW_US};
use witnessd::jitter_seal::{SessionParams, SessionSecret};
use witnessd::packet::{deserialize, serialize, verify_packet, EvidencePacket, TrustConfig};
use witnessd::perf::{run_benchmarks, DOC_HASH, JITTER, MMR_APPEND};
use witnessd::recorder::{record_session, RecordOptions};
use witnessd::vdf::{hash_to_group, vdf_eval, vdf_eval_and_prove, vdf_verify, VdfParams, VdfProof, TEST_256};
use witnessd::{sha256, Exec};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn attack_trials() -> Verdict {
    let report = run_trials(&TrialConfig::default());
    let counts: Vec<String> = report
        .scenarios
        .iter()
        .map(|r| format!("{} {}/{}", r.scenario.name(), r.accepted, r.trials))
        .collect();
    verdict(
        report.passed(),
        format!("accepted: {} in {:.1} s", counts.join(", "), report.wall_time.as_secs_f64()),
    )
}

fn blind_guessing() -> Verdict {
    let r = collision_trials(1_000_000, 2, SessionParams::default(), Exec::default());
    verdict(
        r.deviation() <= 3.0 && r.forged_accepts == 0,
        format!(
            "{} hits in {} guesses, rate {:.3e} vs {:.3e} ({:.2} SE), {} forged accepts",
            r.hits, r.trials, r.rate, r.expected_rate, r.deviation(), r.forged_accepts
        ),
    )
}

fn random_element(params: &VdfParams, rng: &mut impl RngCore) -> BigUint {
    let mut binding = [0u8; 32];
    rng.fill_bytes(&mut binding);
    hash_to_group(&binding, params)
}

fn mutate_proof(proof: &VdfProof, params: &VdfParams, rng: &mut impl RngCore) -> VdfProof {
    let mut p = proof.clone();
    let fresh = random_element(params, rng);
    match rng.next_u32() as usize % (p.midpoints.len() + 2) {
        0 => p.input_x = fresh,
        1 => p.output_y = fresh,
        i => p.midpoints[i - 2] = fresh,
    }
    p
}

fn vdf_criterion() -> Verdict {
    let params = VdfParams::rsa_2048(1 << 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let proofs: Vec<VdfProof> = (0..100)
        .map(|_| vdf_eval_and_prove(&params, &random_element(&params, &mut rng)).unwrap().1)
        .collect();

    let mut verify_times = Vec::new();
    let mut complete = 0;
    for proof in &proofs {
        let start = Instant::now();
        complete += usize::from(vdf_verify(&params, proof).is_ok());
        verify_times.push(start.elapsed());
    }
    let eval_times: Vec<Duration> = proofs[..5]
        .iter()
        .map(|p| {
            let start = Instant::now();
            vdf_eval(&params, &p.input_x).unwrap();
            start.elapsed()
        })
        .collect();
    let (eval, verify) = (median(eval_times), median(verify_times));
    let ratio = eval.as_secs_f64() / verify.as_secs_f64();

    let rejected = (0..100)
        .filter(|i| {
            let mutated = mutate_proof(&proofs[i % proofs.len()], &params, &mut rng);
            vdf_verify(&params, &mutated).is_err()
        })
        .count();

    // Same measurement at T = 2^20 for reference; it does not gate the result.
    let big = VdfParams::rsa_2048(1 << 20).unwrap();
    let x = random_element(&big, &mut rng);
    let start = Instant::now();
    vdf_eval(&big, &x).unwrap();
    let big_eval = start.elapsed();
    let (_, big_proof) = vdf_eval_and_prove(&big, &x).unwrap();
    let start = Instant::now();
    vdf_verify(&big, &big_proof).unwrap();
    let big_ratio = big_eval.as_secs_f64() / start.elapsed().as_secs_f64();

    verdict(
        complete == 100 && ratio >= 100.0 && rejected == 100,
        format!(
            "{complete}/100 verify; eval {:.1} ms, verify {:.2} ms, ratio {ratio:.1}x (need 100x); \
             {rejected}/100 mutations rejected; at T=2^20 ratio {big_ratio:.0}x",
            eval.as_secs_f64() * 1e3,
            verify.as_secs_f64() * 1e3
        ),
    )
}

fn primitive_timings() -> Verdict {
    let report = run_benchmarks();
    let ns = |name| report.get(name).expect("measured").median_ns;
    let (jitter, hash, append) = (ns(JITTER), ns(DOC_HASH), ns(MMR_APPEND));
    verdict(
        jitter <= 2_000.0 && hash <= 5.0 * 85_000.0 && append < 1_000_000.0,
        format!(
            "jitter {jitter:.0} ns (<= 2000), 10 KB hash {:.1} µs (<= 425), MMR append {:.2} µs (< 1000)",
            hash / 1e3,
            append / 1e3
        ),
    )
}

/// Flips one bit chosen uniformly over the leaf, root and every proof field.
fn flip_one_bit(leaf: &mut [u8; 32], root: &mut [u8; 32], proof: &mut InclusionProof, bit: usize) {
    fn flip(bytes: &mut [u8], bit: usize) {
        bytes[bit / 8] ^= 1 << (bit % 8);
    }
    let mut bit = bit;
    if bit < 256 {
        return flip(leaf, bit);
    }
    bit -= 256;
    if bit < 256 {
        return flip(root, bit);
    }
    bit -= 256;
    if bit < 64 {
        proof.leaf_index ^= 1 << bit;
        return;
    }
    bit -= 64;
    if bit < 64 {
        proof.leaf_count ^= 1 << bit;
        return;
    }
    bit -= 64;
    for step in &mut proof.path {
        if bit == 0 {
            step.side = match step.side {
                witnessd::evidence_log::Side::Left => witnessd::evidence_log::Side::Right,
                witnessd::evidence_log::Side::Right => witnessd::evidence_log::Side::Left,
            };
            return;
        }
        bit -= 1;
        if bit < 256 {
            return flip(&mut step.hash, bit);
        }
        bit -= 256;
    }
    for peak in proof.left_peaks.iter_mut().chain(proof.right_peaks.iter_mut()) {
        if bit < 256 {
            return flip(peak, bit);
        }
        bit -= 256;
    }
    unreachable!("bit index within proof size");
}

fn proof_bits(proof: &InclusionProof) -> usize {
    256 + 256 + 64 + 64 + proof.path.len() * 257 + (proof.left_peaks.len() + proof.right_peaks.len()) * 256
}

fn mmr_properties() -> Verdict {
    let mut state = MmrState::new();
    let mut peaks_ok = true;
    for n in 1..=4096u64 {
        state.append(sha256(&n.to_be_bytes()));
        peaks_ok &= state.peaks.len() as u32 == n.count_ones();
    }

    let log = MmrLog::from_leaves((0..1024u64).map(|i| sha256(&i.to_be_bytes())));
    let root = log.root().unwrap();
    let proofs: Vec<InclusionProof> = (0..1024).map(|i| log.prove(i).unwrap()).collect();
    let all_verify = proofs
        .iter()
        .zip(log.leaves())
        .all(|(p, leaf)| mmr_verify(&root, leaf, p).is_ok());

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rejected = 0;
    for _ in 0..10_000 {
        let i = rng.gen_range(0..1024);
        let (mut leaf, mut root, mut proof) = (log.leaves()[i], root, proofs[i].clone());
        let bit = rng.gen_range(0..proof_bits(&proof));
        flip_one_bit(&mut leaf, &mut root, &mut proof, bit);
        rejected += usize::from(mmr_verify(&root, &leaf, &proof).is_err());
    }
    verdict(
        peaks_ok && all_verify && rejected == 10_000,
        format!(
            "peaks = popcount for n <= 4096: {peaks_ok}; 1024/1024 proofs verify: {all_verify}; \
             {rejected}/10000 bit flips rejected"
        ),
    )
}

fn dual_source() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let text = |rng: &mut ChaCha8Rng| -> String { (0..300).map(|_| rng.gen_range(b'a'..=b'z') as char).collect() };
    let honest = TimingProfile::default();
    let (mut typed, mut validated) = (0, 0);
    for seed in 0..50 {
        let s = simulate_session(&text(&mut rng), &honest, seed).unwrap();
        let (_, summary) = match_streams(&s.app, &s.dev, DEFAULT_WINDOW_US).unwrap();
        typed += s.keystrokes.len() as u64;
        validated += summary.validated;
    }
    let injecting = honest.with_injection_rate(0.2);
    let (mut injected, mut flagged, mut false_flags) = (0, 0, 0);
    for seed in 100..150 {
        let s = simulate_session(&text(&mut rng), &injecting, seed).unwrap();
        let (events, summary) = match_streams(&s.app, &s.dev, DEFAULT_WINDOW_US).unwrap();
        injected += s.injected_count() as u64;
        flagged += summary.injected_suspect;
        false_flags += summary.device_only;
        debug_assert_eq!(events.len() as u64, summary.validated + summary.injected_suspect + summary.device_only);
    }
    verdict(
        validated == typed && flagged == injected && false_flags == 0,
        format!("{validated}/{typed} genuine keystrokes validated; {flagged}/{injected} injected events flagged"),
    )
}

fn random_packet(rng: &mut ChaCha8Rng) -> (EvidencePacket, SessionSecret, TrustConfig) {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCXYZ ,.;/?!0123\n";
    let len = rng.gen_range(0..48);
    let text: String = (0..len).map(|_| CHARS[rng.gen_range(0..CHARS.len())] as char).collect();
    let opts = RecordOptions {
        vdf_params_id: rng.gen_bool(0.3).then(|| TEST_256.to_string()),
        checkpoint_interval_us: rng.gen_range(200_000..2_000_000),
        session_epoch_us: rng.gen_range(0..1 << 52),
        params: SessionParams::new(rng.gen_range(1..3), 500, rng.gen_range(502..5000)).unwrap(),
        ..RecordOptions::new(rng.gen())
    };
    let rec = record_session(&text, &opts).unwrap();
    let claim = rec.local_claim_time_us();
    let tsa = MockTsa::from_seed(rng.gen()).with_clock(move || claim + 1_000_000);
    let mut anchors = AnchorSet::new(claim);
    if rng.gen_bool(0.5) {
        anchors.tsa.push(request_anchor(&tsa, &rec.root(), rng).unwrap());
    }
    if rng.gen_bool(0.5) {
        let calendar = CalendarAggregator::with_clock(move || claim + 2_000_000);
        let others = rng.gen_range(0..6);
        let position = rng.gen_range(0..=others);
        for i in 0..=others {
            calendar.submit(if i == position { rec.root() } else { rng.gen() });
        }
        anchors.calendar.push(calendar.finalize().unwrap().remove(position));
    }
    let mut packet = rec.packet(anchors).unwrap();
    if rng.gen_bool(0.2) {
        packet.dual_source = None;
    }
    let trust = TrustConfig {
        tsa_keys: vec![tsa.public_key()],
        injection_threshold: 0,
    };
    (packet, rec.secret, trust)
}

fn packet_canonicality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut identical = 0;
    let mut all_valid = true;
    let mut matrices = 0;
    let mut matrix_failures = Vec::new();
    for _ in 0..1_000 {
        let (packet, secret, trust) = random_packet(&mut rng);
        let bytes = serialize(&packet).unwrap();
        let back = deserialize(&bytes).unwrap();
        identical += usize::from(back == packet && serialize(&back).unwrap() == bytes);
        all_valid &= verify_packet(&secret, &packet, &trust).accepted();
        let full = !packet.samples.is_empty()
            && !packet.checkpoints.is_empty()
            && !packet.anchors.tsa.is_empty()
            && !packet.anchors.calendar.iter().all(|c| c.path.is_empty())
            && packet.dual_source.is_some();
        if full {
            matrices += 1;
            for o in mutation_matrix(&packet, &secret, &trust, &mut rng) {
                if !o.holds() {
                    matrix_failures.push(format!("{}: {:?} vs {:?}", o.mutation.name(), o.expected, o.rejected));
                }
            }
        }
    }
    verdict(
        identical == 1_000 && all_valid && matrices > 0 && matrix_failures.is_empty(),
        format!(
            "{identical}/1000 byte-identical round trips; all verify: {all_valid}; \
             mutation matrix on {matrices} full packets, {} mismatches{}",
            matrix_failures.len(),
            matrix_failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn record_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let words = ["evidence", "of", "process", "typing", "seal", "chain", "window", "anchor"];
    let mut text = String::new();
    while text.len() < 1024 {
        text.push_str(words[rng.gen_range(0..words.len())]);
        text.push(' ');
    }
    text.truncate(1024);
    let text_path = dir.path().join("input.txt");
    std::fs::write(&text_path, &text).unwrap();

    let record = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_witnessd"))
            .args(["record", "--seed", "7", "--text"])
            .arg(&text_path)
            .arg("--out")
            .arg(&out)
            .env_remove("WITNESSD_TSA_URL")
            .output()
            .unwrap();
        assert!(status.status.success(), "record failed: {}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (record("a.pkt"), record("b.pkt"));
    let verified = Command::new(env!("CARGO_BIN_EXE_witnessd"))
        .arg("verify")
        .arg("--packet")
        .arg(dir.path().join("a.pkt"))
        .arg("--secret")
        .arg(dir.path().join("a.pkt.secret"))
        .output()
        .unwrap()
        .status
        .success();
    verdict(
        a == b && verified,
        format!("{} and {} bytes, identical: {}; verifies: {verified}", a.len(), b.len(), a == b),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 attack trials (100 honest, 3x1000 attacks)", attack_trials),
        ("2 blind jitter guessing at 1/R", blind_guessing),
        ("3 VDF completeness, speed ratio, soundness", vdf_criterion),
        ("4 primitive timing bounds", primitive_timings),
        ("5 MMR peaks, proofs, mutations", mmr_properties),
        ("6 dual-source validation and injection", dual_source),
        ("7 packet canonicality and layer independence", packet_canonicality),
        ("8 record determinism", record_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "{} {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

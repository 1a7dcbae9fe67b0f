use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use witnessd::adversary::{run_trials, TrialConfig};
use witnessd::jitter_seal::{verify_chain_with, SealChain, SessionParams, SessionSecret};
use witnessd::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn long_chain(n: u64) -> (SessionSecret, SealChain) {
    let secret = SessionSecret::from_bytes([9; 32]);
    let mut chain = SealChain::new(SessionParams::default(), [0; 16]);
    for i in 0..n {
        chain
            .seal_keystroke(&secret, i * 150_000, [i as u8; 32], (i % 72) as u8, (i % 10) as u8)
            .unwrap();
    }
    (secret, chain)
}

fn verify_chain_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("verify_chain");
    for n in [1_000u64, 20_000] {
        let (secret, chain) = long_chain(n);
        group.throughput(Throughput::Elements(n));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &chain, |b, chain| {
                b.iter(|| assert!(verify_chain_with(&secret, chain, exec).is_accept()))
            });
        }
    }
    group.finish();
}

fn trials_bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = TrialConfig {
            honest: 20,
            fabricated_jitter: 20,
            mismatched_document: 20,
            wrong_secret: 20,
            exec,
            ..TrialConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| assert!(run_trials(&config).passed())));
    }
    group.finish();
}

criterion_group!(benches, verify_chain_bench, trials_bench);
criterion_main!(benches);

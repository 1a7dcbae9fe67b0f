use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rand::rngs::OsRng;
use rand::{Rng, RngCore, SeedableRng};
use witnessd::adversary::{collision_trials, run_trials, TrialConfig};
use witnessd::anchors::{request_anchor, AnchorSet, MockTsa, TsaClient, TsaServer};
use witnessd::input_model::TimingProfile;
use witnessd::jitter_seal::SessionSecret;
use witnessd::packet::{deserialize, serialize, verify_packet, TrustConfig};
use witnessd::perf::run_benchmarks;
use witnessd::recorder::{record_session, RecordOptions, DEFAULT_CHECKPOINT_INTERVAL_US};
use witnessd::{sha256, Exec};

/// Writes a line, ignoring a closed pipe.
macro_rules! emit {
    ($out:expr, $($arg:tt)*) => {{
        let _ = writeln!($out, $($arg)*);
    }};
}

/// Exit status for rejected evidence or failed trials.
const EXIT_REJECT: u8 = 1;
/// Exit status for usage, I/O and parse errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "witnessd", version, about = "Record and verify proof-of-process evidence packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate typing a text file and write a sealed evidence packet.
    Record(RecordArgs),
    /// Verify a packet and print a per-layer report.
    Verify {
        #[arg(long)]
        packet: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        /// Trusted TSA keys and injection threshold (TOML).
        #[arg(long)]
        trust: Option<PathBuf>,
    },
    /// Run the attack trials against the jitter seal.
    Attack {
        /// 1,000 honest and 10,000 trials per attack instead of 100/1,000.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keystrokes per session.
        #[arg(long, default_value_t = 200)]
        length: usize,
        /// Blind single-sample guesses for the collision estimate.
        #[arg(long, default_value_t = 1_000_000)]
        guesses: u64,
        /// Write the machine-readable summary here.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Time the per-keystroke primitives.
    Bench {
        #[arg(long)]
        json: bool,
    },
    /// Serve a mock timestamp authority over HTTP.
    TsaServe {
        #[arg(long, default_value_t = 3180)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Derive the signing key from this seed instead of at random.
        #[arg(long)]
        key_seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    ExitCode::from(run(cli, &mut io::stdout().lock()))
}

/// Runs one subcommand and returns the process exit status.
fn run(cli: Cli, out: &mut dyn Write) -> u8 {
    let result = match cli.command {
        Command::Record(args) => record(&args, out).map(|()| 0),
        Command::Verify { packet, secret, trust } => verify(&packet, &secret, trust.as_deref(), out),
        Command::Attack {
            paper_scale,
            seed,
            length,
            guesses,
            summary,
            sequential,
        } => attack(paper_scale, seed, length, guesses, summary.as_deref(), sequential, out),
        Command::Bench { json } => {
            let report = run_benchmarks();
            if json {
                emit!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                emit!(out, "{report}");
            }
            Ok(0)
        }
        Command::TsaServe { port, host, key_seed } => tsa_serve(&host, port, key_seed, out).map(|()| 0),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_USAGE
    })
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    text: PathBuf,
    /// Timing profile (TOML). Defaults to the built-in profile.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Seed for the simulator and session secret. Random if omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// TSA endpoint. Falls back to $WITNESSD_TSA_URL.
    #[arg(long)]
    anchor: Option<String>,
    /// VDF parameter set for checkpoints (test-256 or default-2048).
    #[arg(long)]
    vdf: Option<String>,
    #[arg(long, default_value_t = DEFAULT_CHECKPOINT_INTERVAL_US / 1000)]
    checkpoint_ms: u64,
    /// Absolute session start, µs since the Unix epoch.
    #[arg(long, default_value_t = 0)]
    epoch_us: u64,
    /// Fail on characters outside the zone map instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Also write a JSON rendering of the packet.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_private(path: &Path, contents: &str) -> Result<()> {
    let mut options = fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(path).with_context(|| format!("creating {}", path.display()))?;
    #[cfg(unix)]
    {
        // `mode` only applies on creation; tighten a pre-existing file too.
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(fs::Permissions::from_mode(0o600))?;
    }
    file.write_all(contents.as_bytes())?;
    Ok(())
}

fn record(args: &RecordArgs, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&args.text).with_context(|| format!("reading {}", args.text.display()))?;
    let profile = match &args.profile {
        Some(p) => TimingProfile::load(p).with_context(|| format!("loading profile {}", p.display()))?,
        None => TimingProfile::default(),
    };
    let seed = args.seed.unwrap_or_else(|| OsRng.gen());
    let opts = RecordOptions {
        profile,
        vdf_params_id: args.vdf.clone(),
        checkpoint_interval_us: args.checkpoint_ms.saturating_mul(1000),
        session_epoch_us: args.epoch_us,
        strict: args.strict,
        ..RecordOptions::new(seed)
    };
    let rec = record_session(&text, &opts)?;

    let mut anchors = AnchorSet::new(rec.local_claim_time_us());
    let client = args.anchor.clone().map(TsaClient::new).or_else(TsaClient::from_env);
    if let Some(client) = client {
        // Nonces come from the OS so anchored packets never repeat a request.
        let mut nonce_rng = os_seeded_rng();
        let stamped = client
            .fetch_public_key()
            .and_then(|key| request_anchor(&client, &rec.root(), &mut nonce_rng).map(|a| (key, a)));
        match stamped {
            Ok((key, anchor)) => {
                anchors.tsa.push(anchor);
                let trust = TrustConfig {
                    tsa_keys: vec![key],
                    ..TrustConfig::default()
                };
                let trust_path = sibling(&args.out, ".trust.toml");
                fs::write(&trust_path, trust.to_toml())?;
                info!("anchored at {}; signer key in {}", client.base_url(), trust_path.display());
            }
            Err(e) => warn!("anchoring via {} failed, packet left unanchored: {e}", client.base_url()),
        }
    }

    let packet = rec.packet(anchors)?;
    fs::write(&args.out, serialize(&packet)?).with_context(|| format!("writing {}", args.out.display()))?;
    let secret_path = sibling(&args.out, ".secret");
    write_private(&secret_path, &format!("{}\n", rec.secret.to_hex()))?;
    if let Some(json) = &args.json {
        fs::write(json, packet.to_json())?;
    }
    emit!(
        out,
        "recorded {} samples, {} checkpoints, {} anchors -> {}",
        packet.samples.len(),
        packet.checkpoints.len(),
        packet.anchors.tsa.len(),
        args.out.display()
    );
    emit!(out, "secret -> {}", secret_path.display());
    Ok(())
}

fn os_seeded_rng() -> rand::rngs::StdRng {
    rand::rngs::StdRng::from_rng(OsRng).expect("OS entropy")
}

fn verify(packet: &Path, secret: &Path, trust: Option<&Path>, out: &mut dyn Write) -> Result<u8> {
    let bytes = fs::read(packet).with_context(|| format!("reading {}", packet.display()))?;
    let packet = deserialize(&bytes).context("parsing packet")?;
    let secret_text = fs::read_to_string(secret).with_context(|| format!("reading {}", secret.display()))?;
    let secret = SessionSecret::from_hex(&secret_text).context("secret file must hold 32 hex-encoded bytes")?;
    let trust = match trust {
        Some(p) => TrustConfig::from_toml(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?,
        None => TrustConfig::default(),
    };
    let report = verify_packet(&secret, &packet, &trust);
    emit!(out, "{report}");
    emit!(out, "{}", report.to_json());
    Ok(if report.accepted() { 0 } else { EXIT_REJECT })
}

fn attack(
    paper_scale: bool,
    seed: u64,
    length: usize,
    guesses: u64,
    summary: Option<&Path>,
    sequential: bool,
    out: &mut dyn Write,
) -> Result<u8> {
    anyhow::ensure!(length >= 2, "sessions need at least 2 keystrokes");
    let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
    let base = if paper_scale {
        TrialConfig::paper_scale()
    } else {
        TrialConfig::default()
    };
    let config = TrialConfig {
        seed,
        length,
        exec,
        ..base
    };
    let report = run_trials(&config);
    emit!(out, "{report}");
    let collisions = collision_trials(guesses, seed, config.params, exec);
    emit!(
        out,
        "blind single-sample guesses: {}/{} hits (rate {:.6}, expected {:.6}, {:.2} SE), {} forged accepts",
        collisions.hits,
        collisions.trials,
        collisions.rate,
        collisions.expected_rate,
        collisions.deviation(),
        collisions.forged_accepts
    );
    if let Some(path) = summary {
        let json = serde_json::json!({ "trials": report, "collisions": collisions });
        fs::write(path, serde_json::to_string_pretty(&json)?)?;
    }
    Ok(if report.passed() && collisions.forged_accepts == 0 {
        0
    } else {
        EXIT_REJECT
    })
}

fn tsa_serve(host: &str, port: u16, key_seed: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let seed = match key_seed {
        Some(s) => sha256(&s.to_be_bytes()),
        None => {
            let mut s = [0u8; 32];
            OsRng.fill_bytes(&mut s);
            s
        }
    };
    let tsa = Arc::new(MockTsa::from_seed(seed));
    let server = TsaServer::start(Arc::clone(&tsa), &format!("{host}:{port}"))?;
    emit!(out, "mock TSA listening on {}", server.url());
    emit!(out, "public key {}", hex::encode(tsa.public_key().as_bytes()));
    server.join();
    Ok(())
}

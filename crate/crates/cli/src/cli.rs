//! Command-line surface: flag definitions, dispatch, and the exit-code
//! contract.
//!
//! Exit codes: 0 success, 2 detection ran but found nothing, 64 usage
//! error (bad flags or bad input data), 1 internal error (I/O failures,
//! failed benchmark or bound assertions).  Every subcommand that draws
//! randomness requires an explicit `--seed`; nothing falls back to the
//! clock, so identical invocations produce identical files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ddchirp_core::channel::apply_channel;
use ddchirp_core::detect::{
    combined_chirp, detect_cross, detect_incidence, detect_pseudorandom,
    detect_single_transmission,
};
use ddchirp_core::signal::{chirp, pseudorandom_sequence};
use ddchirp_core::{ChannelSpec, ChirpId, Method, Modulus, Sequence, Snr, Thresholds};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::formats::{
    parse_sequence_csv, read_json, read_text, sequence_csv, write_json, ChirpFile, FormatError,
    Manifest, ReportFile, SceneFile, Transmission,
};
use crate::harness::{
    bench_csv, benchmark_scaling, draw_chirps, measure_spreading, reproduce_figure, spreading_csv,
    verify_probability_bounds, BoundCheck, Figure, HarnessError, Pipeline,
};

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_NO_DETECTIONS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "ddchirp",
    about = "Sparse delay-Doppler channel estimation on prime-length grids",
    version = env!("CARGO_PKG_VERSION")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene plus transmitted waveforms and their echoes.
    Simulate(SimulateArgs),
    /// Run one detection method over a simulated directory.
    Detect(DetectArgs),
    /// Recompute a reference heatmap (CSV + SVG).
    Reproduce(ReproduceArgs),
    /// Monte Carlo check of the genericity and ghost-freeness bounds.
    VerifyBounds(VerifyBoundsArgs),
    /// Time a detection pipeline across ascending primes.
    Bench(BenchArgs),
    /// Measure spreading figures of seeded pseudo-random waveforms.
    MeasurePr(MeasurePrArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene JSON file ({"N", "targets", "noise_sigma"}).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["random", "sigma"])]
    scene: Option<PathBuf>,
    /// Random scene: N, r, then r attenuation magnitudes.
    #[arg(long, value_name = "N R MAGS...", num_args = 2..)]
    random: Option<Vec<String>>,
    /// Noise deviation per component (with --random).
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Base seed for the scene draw, chirp draws, and noise.
    #[arg(long)]
    seed: u64,
    /// Comma-separated transmissions to produce
    /// (pr, cross, incidence, cross1, incidence1).
    #[arg(long, value_delimiter = ',', default_value = "pr,cross,incidence")]
    chirps: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Detection method: pr, incidence, cross, cross1, or incidence1.
    #[arg(long)]
    method: String,
    /// Directory written by `simulate`.
    #[arg(long = "in", value_name = "DIR")]
    dir: PathBuf,
    /// Peak threshold: noise-floor factor for the chirp methods,
    /// absolute magnitude for pr.
    #[arg(long = "T", default_value_t = 2.0)]
    t: f64,
    /// First-stage peak factor for the cross method.
    #[arg(long = "T1", default_value_t = 2.0)]
    t1: f64,
    /// Pairing tolerance factor for the cross method.
    #[arg(long = "T2", default_value_t = 3.0)]
    t2: f64,
    /// Signal-to-noise ratio ("inf" allowed); defaults to the value
    /// implied by the scene's noise deviation.
    #[arg(long)]
    snr: Option<f64>,
    /// Estimate cap for pr (default: the scene's target count).
    #[arg(long = "r-max")]
    r_max: Option<usize>,
    /// Report path (default: report_<method>.json inside --in).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// One of PRM_FIG3, FLAGLIKE_FIG6, CHIRP_L_FIG8, CHIRP_M_FIG9,
    /// CHIRP_N_FIG10_INPUTS.
    #[arg(long)]
    figure: String,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "figures")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    #[arg(long = "N")]
    n: u32,
    /// Scene sparsity.
    #[arg(long)]
    r: u32,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated ascending primes.
    #[arg(long, value_delimiter = ',', value_name = "P1,P2,...")]
    primes: Vec<u32>,
    /// Targets per scene.
    #[arg(long, default_value_t = 4)]
    r: u32,
    /// Pipeline to time.
    #[arg(long, default_value = "cross")]
    method: String,
    #[arg(long)]
    seed: u64,
    /// Optional CSV output path (timing always prints to stdout).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeasurePrArgs {
    #[arg(long = "N")]
    n: u32,
    /// Number of independently seeded waveforms.
    #[arg(long)]
    seeds: u64,
    #[arg(long)]
    seed: u64,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses and runs one invocation; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here too; only real parse
            // problems use the usage code.
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Detect(args) => cmd_detect(&args),
        Command::Reproduce(args) => cmd_reproduce(&args),
        Command::VerifyBounds(args) => cmd_verify_bounds(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::MeasurePr(args) => cmd_measure_pr(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            failure_code(&error)
        }
    }
}

/// Maps an error to the exit-code contract: I/O and unexpected internal
/// failures are code 1, everything a caller can fix is usage (64).
fn failure_code(error: &HarnessError) -> i32 {
    match error {
        HarnessError::Format(FormatError::Io { .. }) | HarnessError::Signal(_) => EXIT_INTERNAL,
        _ => EXIT_USAGE,
    }
}

fn usage(context: impl Into<String>) -> HarnessError {
    HarnessError::BadConfig {
        context: context.into(),
    }
}

fn parse_modulus(n: u32) -> Result<Modulus, HarnessError> {
    Modulus::new(n).map_err(|_| usage(format!("N must be an odd prime (got {n})")))
}

fn parse_pipeline(token: &str) -> Result<Pipeline, HarnessError> {
    Pipeline::parse(token).ok_or_else(|| {
        usage(format!(
            "unknown method {token:?}; expected pr, incidence, cross, cross1, or incidence1"
        ))
    })
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, HarnessError> {
    let pipelines: Vec<Pipeline> = args
        .chirps
        .iter()
        .map(|token| parse_pipeline(token))
        .collect::<Result<_, _>>()?;
    if pipelines.is_empty() {
        return Err(usage("--chirps must name at least one method"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let spec = match (&args.scene, &args.random) {
        (Some(path), None) => read_json::<SceneFile>(path)?.to_spec()?,
        (None, Some(raw)) => random_spec_from_args(raw, args.sigma, &mut rng)?,
        _ => return Err(usage("exactly one of --scene and --random is required")),
    };

    let mut manifest = Manifest {
        scene: SceneFile::from_spec(&spec),
        transmissions: Default::default(),
    };
    let mut written: Vec<String> = Vec::new();
    for pipeline in pipelines {
        let token = pipeline.token();
        if manifest.transmissions.contains_key(token) {
            continue;
        }
        let tx = emit_transmission(&args.out, &spec, pipeline, &mut rng)?;
        written.extend(tx.sent.iter().chain(tx.echoes.iter()).cloned());
        manifest.transmissions.insert(token.to_string(), tx);
    }
    write_json(&args.out.join("scene.json"), &manifest.scene)?;
    write_json(&args.out.join("manifest.json"), &manifest)?;
    written.push("scene.json".to_string());
    written.push("manifest.json".to_string());
    written.sort();
    println!(
        "wrote {} files to {}: {}",
        written.len(),
        args.out.display(),
        written.join(", ")
    );
    Ok(EXIT_OK)
}

/// Parses the `--random N r mag...` argument list.
fn random_spec_from_args(
    raw: &[String],
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelSpec, HarnessError> {
    let n: u32 = raw[0]
        .parse()
        .map_err(|_| usage(format!("--random: bad N {:?}", raw[0])))?;
    let r: usize = raw[1]
        .parse()
        .map_err(|_| usage(format!("--random: bad target count {:?}", raw[1])))?;
    let m = parse_modulus(n)?;
    let magnitudes: Vec<f64> = raw[2..]
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|_| usage(format!("--random: bad magnitude {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    if magnitudes.len() != r {
        return Err(usage(format!(
            "--random: expected {r} magnitudes, got {}",
            magnitudes.len()
        )));
    }
    Ok(ddchirp_core::channel::random_scene(
        m, &magnitudes, sigma, rng,
    )?)
}

/// Draws one method's transmissions, writes the sequence CSVs, and
/// returns the manifest entry.
fn emit_transmission(
    out_dir: &Path,
    spec: &ChannelSpec,
    pipeline: Pipeline,
    rng: &mut ChaCha8Rng,
) -> Result<Transmission, HarnessError> {
    let m = spec.modulus();
    let token = pipeline.token();
    let mut tx = Transmission {
        chirps: Vec::new(),
        sent: Vec::new(),
        echoes: Vec::new(),
    };
    let emit = |name: String, s: &Sequence, tx_list: &mut Vec<String>| {
        tx_list.push(name.clone());
        crate::formats::write_text(&out_dir.join(name), &sequence_csv(s))
    };
    match pipeline {
        Pipeline::PseudoRandom => {
            let phi = pseudorandom_sequence(m, rng);
            let echo = apply_channel(spec, &phi, rng)?;
            emit(format!("{token}_sent.csv"), &phi, &mut tx.sent)?;
            emit(format!("{token}_echo.csv"), &echo, &mut tx.echoes)?;
        }
        Pipeline::Cross | Pipeline::Incidence => {
            let ids = draw_chirps(m, pipeline.chirp_count() as u32, rng)?;
            for (i, &id) in ids.iter().enumerate() {
                let sent = chirp(m, id);
                let echo = apply_channel(spec, &sent, rng)?;
                emit(format!("{token}_sent_{i}.csv"), &sent, &mut tx.sent)?;
                emit(format!("{token}_echo_{i}.csv"), &echo, &mut tx.echoes)?;
                tx.chirps.push(ChirpFile::from_id(id));
            }
        }
        Pipeline::Cross1 | Pipeline::Incidence1 => {
            let ids = draw_chirps(m, pipeline.chirp_count() as u32, rng)?;
            let sent = combined_chirp(m, &ids)?;
            let echo = apply_channel(spec, &sent, rng)?;
            emit(format!("{token}_sent.csv"), &sent, &mut tx.sent)?;
            emit(format!("{token}_echo.csv"), &echo, &mut tx.echoes)?;
            tx.chirps = ids.iter().map(|&id| ChirpFile::from_id(id)).collect();
        }
    }
    Ok(tx)
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

fn cmd_detect(args: &DetectArgs) -> Result<i32, HarnessError> {
    let pipeline = parse_pipeline(&args.method)?;
    let manifest: Manifest = read_json(&args.dir.join("manifest.json"))?;
    let spec = manifest.scene.to_spec()?;
    let m = spec.modulus();
    let tx = manifest.transmissions.get(pipeline.token()).ok_or_else(|| {
        usage(format!(
            "no {} transmission in {}; rerun simulate with --chirps {}",
            pipeline.token(),
            args.dir.display(),
            pipeline.token()
        ))
    })?;

    let expected_echoes = match pipeline {
        Pipeline::PseudoRandom | Pipeline::Cross1 | Pipeline::Incidence1 => 1,
        Pipeline::Cross => 2,
        Pipeline::Incidence => 3,
    };
    if tx.echoes.len() != expected_echoes {
        return Err(usage(format!(
            "{} expects {expected_echoes} echo(es), found {}",
            pipeline.token(),
            tx.echoes.len()
        )));
    }
    let chirps: Vec<ChirpId> = tx
        .chirps
        .iter()
        .map(|c| c.to_id(m))
        .collect::<Result<_, _>>()?;
    if chirps.len() != pipeline.chirp_count() {
        return Err(usage(format!(
            "{} expects {} chirps, found {}",
            pipeline.token(),
            pipeline.chirp_count(),
            chirps.len()
        )));
    }
    let echoes: Vec<Sequence> = tx
        .echoes
        .iter()
        .map(|name| parse_sequence_csv(&read_text(&args.dir.join(name))?, m))
        .collect::<Result<_, _>>()?;

    let snr = match args.snr {
        Some(value) => Snr::new(value)?,
        None => Snr::from_sigma(m, spec.noise_sigma()),
    };
    let thresholds = Thresholds {
        peak: args.t,
        cross_peak: args.t1,
        hypothesis: args.t2,
    };
    let report = match pipeline {
        Pipeline::PseudoRandom => {
            let sent = parse_sequence_csv(&read_text(&args.dir.join(&tx.sent[0]))?, m)?;
            let r_max = args.r_max.unwrap_or_else(|| spec.sparsity());
            detect_pseudorandom(&sent, &echoes[0], r_max, args.t)?
        }
        Pipeline::Cross => detect_cross(
            [chirps[0], chirps[1]],
            [&echoes[0], &echoes[1]],
            thresholds,
            snr,
        )?,
        Pipeline::Incidence => detect_incidence(
            [chirps[0], chirps[1], chirps[2]],
            [&echoes[0], &echoes[1], &echoes[2]],
            thresholds,
            snr,
        )?,
        Pipeline::Cross1 => {
            detect_single_transmission(&chirps, &echoes[0], Method::Cross, thresholds, snr)?
        }
        Pipeline::Incidence1 => {
            detect_single_transmission(&chirps, &echoes[0], Method::Incidence, thresholds, snr)?
        }
    };

    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.dir.join(format!("report_{}.json", pipeline.token())));
    write_json(&out, &ReportFile::from_report(&report))?;
    println!(
        "{}: {} estimate(s) -> {}",
        pipeline.token(),
        report.estimates.len(),
        out.display()
    );
    Ok(if report.estimates.is_empty() {
        EXIT_NO_DETECTIONS
    } else {
        EXIT_OK
    })
}

// ---------------------------------------------------------------------------
// reproduce / verify-bounds / bench / measure-pr / experiment
// ---------------------------------------------------------------------------

fn cmd_reproduce(args: &ReproduceArgs) -> Result<i32, HarnessError> {
    let figure = Figure::parse(&args.figure).ok_or_else(|| {
        usage(format!(
            "unknown figure {:?}; expected one of {}",
            args.figure,
            Figure::ALL.map(|f| f.token()).join(", ")
        ))
    })?;
    let paths = reproduce_figure(figure, &args.out)?;
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(EXIT_OK)
}

fn bound_line(name: &str, check: &BoundCheck) -> String {
    let verdict = if check.vacuous {
        "PASS (vacuous bound)"
    } else if check.pass {
        "PASS"
    } else {
        "FAIL"
    };
    format!(
        "{name}: empirical {:.6} vs bound {:.6} (SE {:.6}) {verdict}",
        check.empirical, check.bound, check.std_error
    )
}

fn cmd_verify_bounds(args: &VerifyBoundsArgs) -> Result<i32, HarnessError> {
    let m = parse_modulus(args.n)?;
    let report = verify_probability_bounds(m, args.r, args.trials, args.seed)?;
    println!(
        "N={} r={} trials={}",
        report.n, report.r, report.trials
    );
    println!("{}", bound_line("genericity ", &report.generic));
    println!("{}", bound_line("ghost-free ", &report.perfect));
    Ok(if report.pass() { EXIT_OK } else { EXIT_INTERNAL })
}

fn cmd_bench(args: &BenchArgs) -> Result<i32, HarnessError> {
    let pipeline = parse_pipeline(&args.method)?;
    let report = benchmark_scaling(&args.primes, args.r, pipeline, args.seed)?;
    let csv = bench_csv(&report);
    print!("{csv}");
    for (pair, factor) in report.rows.windows(2).zip(&report.growth) {
        println!("growth {} -> {}: {factor:.2}x", pair[0].n, pair[1].n);
    }
    let expectation = if pipeline == Pipeline::PseudoRandom {
        format!(">= {:.1}x over the last doubling", report.min_last_growth)
    } else {
        format!("<= {:.1}x per doubling", report.max_growth)
    };
    println!(
        "{}: {} (expected {expectation})",
        pipeline.token(),
        if report.pass { "PASS" } else { "FAIL" }
    );
    if let Some(path) = &args.out {
        crate::formats::write_text(path, &csv)?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_INTERNAL })
}

fn cmd_measure_pr(args: &MeasurePrArgs) -> Result<i32, HarnessError> {
    let m = parse_modulus(args.n)?;
    let report = measure_spreading(m, args.seeds, args.seed)?;
    print!("{}", spreading_csv(&report));
    println!("mean B {:.4}, max B {:.4}", report.mean, report.max);
    Ok(EXIT_OK)
}

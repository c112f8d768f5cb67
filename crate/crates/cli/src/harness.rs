//! Monte Carlo harness: seeded experiment runs with per-trial metrics,
//! probability-bound verification, figure reproduction, waveform
//! spreading measurement, and runtime scaling benchmarks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ddchirp_core::ambiguity::ambiguity_full;
use ddchirp_core::channel::{
    apply_channel, is_generic, is_perfect, noiseless_channel, random_scene, ChannelError,
};
use ddchirp_core::detect::{
    combined_chirp, detect_cross, detect_incidence, detect_pseudorandom,
    detect_single_transmission, DetectError,
};
use ddchirp_core::modarith::{random_distinct_lines, random_line, GeometryError, ModulusError};
use ddchirp_core::signal::{chirp, measure_pseudorandomness, pseudorandom_sequence, SignalError};
use ddchirp_core::{
    ChannelSpec, ChirpId, DetectionReport, Method, Modulus, PlaneLine, Sequence, Snr, Target,
    Thresholds,
};
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

use crate::formats::{heatmap_csv, heatmap_svg, write_text, FormatError, Heatmap};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from harness operations.
#[derive(Debug)]
pub enum HarnessError {
    BadConfig { context: String },
    Modulus(ModulusError),
    Channel(ChannelError),
    Detect(DetectError),
    Signal(SignalError),
    Geometry(GeometryError),
    Format(FormatError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::BadConfig { context } => write!(f, "bad config: {context}"),
            HarnessError::Modulus(e) => write!(f, "{e}"),
            HarnessError::Channel(e) => write!(f, "{e}"),
            HarnessError::Detect(e) => write!(f, "{e}"),
            HarnessError::Signal(e) => write!(f, "{e}"),
            HarnessError::Geometry(e) => write!(f, "{e}"),
            HarnessError::Format(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl HarnessError {
    fn config(context: impl Into<String>) -> Self {
        HarnessError::BadConfig {
            context: context.into(),
        }
    }
}

macro_rules! wrap_error {
    ($variant:ident, $inner:ty) => {
        impl From<$inner> for HarnessError {
            fn from(e: $inner) -> Self {
                HarnessError::$variant(e)
            }
        }
    };
}

wrap_error!(Modulus, ModulusError);
wrap_error!(Channel, ChannelError);
wrap_error!(Detect, DetectError);
wrap_error!(Signal, SignalError);
wrap_error!(Geometry, GeometryError);
wrap_error!(Format, FormatError);

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// Derives the seed of one trial from the base seed by index hashing
/// (splitmix-style finalizer), so trials are independent and any one can
/// be reproduced without replaying its predecessors.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_rng(base: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(base, trial))
}

/// Rejection-sampled uniform draw in `0..bound`.
fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u32) -> u32 {
    debug_assert!(bound > 0);
    let zone = u32::MAX - u32::MAX % bound;
    loop {
        let raw = rng.next_u32();
        if raw < zone {
            return raw % bound;
        }
    }
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

/// A runnable detection pipeline: the three estimators plus the
/// single-transmission variants of the two chirp methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    PseudoRandom,
    Incidence,
    Cross,
    /// Incidence logic over one echo of the combined three-chirp waveform.
    Incidence1,
    /// Cross logic over one echo of the combined two-chirp waveform.
    Cross1,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::PseudoRandom,
        Pipeline::Incidence,
        Pipeline::Cross,
        Pipeline::Incidence1,
        Pipeline::Cross1,
    ];

    /// The command-line token.
    pub fn token(self) -> &'static str {
        match self {
            Pipeline::PseudoRandom => "pr",
            Pipeline::Incidence => "incidence",
            Pipeline::Cross => "cross",
            Pipeline::Incidence1 => "incidence1",
            Pipeline::Cross1 => "cross1",
        }
    }

    pub fn parse(token: &str) -> Option<Pipeline> {
        Pipeline::ALL.into_iter().find(|p| p.token() == token)
    }

    /// Number of chirps transmitted (0 for the pseudo-random baseline).
    pub fn chirp_count(self) -> usize {
        match self {
            Pipeline::PseudoRandom => 0,
            Pipeline::Cross | Pipeline::Cross1 => 2,
            Pipeline::Incidence | Pipeline::Incidence1 => 3,
        }
    }

    /// Whether the pipeline sends one combined waveform instead of one
    /// chirp per echo.
    pub fn is_single_transmission(self) -> bool {
        matches!(self, Pipeline::Incidence1 | Pipeline::Cross1)
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

/// One Monte Carlo experiment: `trials` independent random scenes pushed
/// through one pipeline.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub modulus: Modulus,
    pub pipeline: Pipeline,
    pub trials: u64,
    /// Attenuation magnitudes, one target per entry.
    pub magnitudes: Vec<f64>,
    pub noise_sigma: f64,
    /// Peak/pairing thresholds for the chirp pipelines.
    pub thresholds: Thresholds,
    /// Magnitude threshold for the pseudo-random baseline.
    pub pr_threshold: f64,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::config("trials must be at least 1"));
        }
        if self.magnitudes.is_empty() {
            return Err(HarnessError::config("at least one target is required"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(HarnessError::config(format!(
                "noise sigma {} must be finite and nonnegative",
                self.noise_sigma
            )));
        }
        if !(self.pr_threshold >= 0.0 && self.pr_threshold.is_finite()) {
            return Err(HarnessError::config(format!(
                "baseline threshold {} must be finite and nonnegative",
                self.pr_threshold
            )));
        }
        Thresholds::new(
            self.thresholds.peak,
            self.thresholds.cross_peak,
            self.thresholds.hypothesis,
        )
        .map_err(HarnessError::Detect)?;
        // Fail magnitude problems eagerly rather than on trial 1.
        ChannelSpec::new(
            self.modulus,
            self.magnitudes
                .iter()
                .enumerate()
                .map(|(i, &mag)| Target::new(self.modulus, i as i64, 0, Complex64::new(mag, 0.0)))
                .collect(),
            self.noise_sigma,
        )?;
        Ok(())
    }
}

/// Per-trial outcome, one metrics CSV row.
#[derive(Clone, Debug)]
pub struct MetricsRow {
    pub trial: u64,
    pub pipeline: Pipeline,
    pub n: u32,
    pub r: usize,
    pub sigma: f64,
    pub detected: usize,
    pub tp: usize,
    pub fp: usize,
    pub miss: usize,
    /// Whether the scene was generic for every line the detector used
    /// (vacuously true for the baseline, which uses none).
    pub generic: bool,
    /// Whether the scene was ghost-free for the detector's line family
    /// (vacuously true for the baseline).
    pub perfect: bool,
    pub ms: f64,
}

/// Aggregates over one experiment, serialized as the summary JSON.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub method: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub r: usize,
    pub sigma: f64,
    pub trials: u64,
    /// Mean over trials of (true positives) / r.
    pub detection_rate: f64,
    /// False detections as a fraction of all detections (0 when nothing
    /// was detected).
    pub false_alarm_rate: f64,
    pub mean_ms: f64,
}

/// Runs every trial sequentially (trials are independent, so the rows
/// would be identical under any schedule) and summarizes.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Vec<MetricsRow>, Summary), HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.trials as usize);
    for trial in 0..cfg.trials {
        rows.push(run_trial(cfg, trial)?);
    }
    let summary = summarize(cfg, &rows);
    Ok((rows, summary))
}

/// One seeded trial: scene draw, transmission, detection, scoring.  The
/// RNG stream is consumed in a fixed order (scene, chirp lines and
/// indices or baseline phases, then channel noise per echo).
fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<MetricsRow, HarnessError> {
    let m = cfg.modulus;
    let mut rng = trial_rng(cfg.base_seed, trial);
    let spec = random_scene(m, &cfg.magnitudes, cfg.noise_sigma, &mut rng)?;
    let snr = Snr::from_sigma(m, cfg.noise_sigma);
    let (report, ms) = match cfg.pipeline {
        Pipeline::PseudoRandom => {
            let phi = pseudorandom_sequence(m, &mut rng);
            let echo = apply_channel(&spec, &phi, &mut rng)?;
            let r_max = cfg.magnitudes.len();
            timed(|| detect_pseudorandom(&phi, &echo, r_max, cfg.pr_threshold))?
        }
        Pipeline::Incidence => {
            let ids = draw_chirps(m, 3, &mut rng)?;
            let echoes = echo_each(&spec, &ids, &mut rng)?;
            timed(|| {
                detect_incidence(
                    [ids[0], ids[1], ids[2]],
                    [&echoes[0], &echoes[1], &echoes[2]],
                    cfg.thresholds,
                    snr,
                )
            })?
        }
        Pipeline::Cross => {
            let ids = draw_chirps(m, 2, &mut rng)?;
            let echoes = echo_each(&spec, &ids, &mut rng)?;
            timed(|| {
                detect_cross(
                    [ids[0], ids[1]],
                    [&echoes[0], &echoes[1]],
                    cfg.thresholds,
                    snr,
                )
            })?
        }
        Pipeline::Incidence1 | Pipeline::Cross1 => {
            let method = if cfg.pipeline == Pipeline::Cross1 {
                Method::Cross
            } else {
                Method::Incidence
            };
            let ids = draw_chirps(m, cfg.pipeline.chirp_count() as u32, &mut rng)?;
            let sent = combined_chirp(m, &ids)?;
            let echo = apply_channel(&spec, &sent, &mut rng)?;
            timed(|| detect_single_transmission(&ids, &echo, method, cfg.thresholds, snr))?
        }
    };
    Ok(score(cfg, trial, &spec, &report, ms))
}

/// Distinct random lines, each carrying an independent uniform chirp
/// index.
pub(crate) fn draw_chirps<R: RngCore + ?Sized>(
    m: Modulus,
    count: u32,
    rng: &mut R,
) -> Result<Vec<ChirpId>, HarnessError> {
    let lines = random_distinct_lines(m, count, rng)?;
    Ok(lines
        .into_iter()
        .map(|line| ChirpId::new(line, uniform_below(rng, m.n())))
        .collect())
}

/// One echo per chirp, each with a fresh noise draw.
fn echo_each<R: RngCore + ?Sized>(
    spec: &ChannelSpec,
    ids: &[ChirpId],
    rng: &mut R,
) -> Result<Vec<Sequence>, HarnessError> {
    ids.iter()
        .map(|&id| Ok(apply_channel(spec, &chirp(spec.modulus(), id), rng)?))
        .collect()
}

/// Runs a detector call and reports its wall time in milliseconds.
fn timed<F>(call: F) -> Result<(DetectionReport, f64), DetectError>
where
    F: FnOnce() -> Result<DetectionReport, DetectError>,
{
    let start = Instant::now();
    let report = call()?;
    Ok((report, start.elapsed().as_secs_f64() * 1e3))
}

fn score(
    cfg: &ExperimentConfig,
    trial: u64,
    spec: &ChannelSpec,
    report: &DetectionReport,
    ms: f64,
) -> MetricsRow {
    let m = spec.modulus();
    let support = spec.support();
    let points = report.points();
    let tp = points.iter().filter(|p| support.contains(p)).count();
    MetricsRow {
        trial,
        pipeline: cfg.pipeline,
        n: m.n(),
        r: support.len(),
        sigma: spec.noise_sigma(),
        detected: points.len(),
        tp,
        fp: points.len() - tp,
        miss: support.len() - tp,
        generic: report
            .lines_used
            .iter()
            .all(|&line| is_generic(m, &support, line)),
        perfect: is_perfect(m, &support, &report.lines_used),
        ms,
    }
}

fn summarize(cfg: &ExperimentConfig, rows: &[MetricsRow]) -> Summary {
    let trials = rows.len() as f64;
    let detection_rate = rows
        .iter()
        .map(|row| row.tp as f64 / row.r as f64)
        .sum::<f64>()
        / trials;
    let total_detected: usize = rows.iter().map(|row| row.detected).sum();
    let total_fp: usize = rows.iter().map(|row| row.fp).sum();
    let false_alarm_rate = if total_detected == 0 {
        0.0
    } else {
        total_fp as f64 / total_detected as f64
    };
    Summary {
        method: cfg.pipeline.token().to_string(),
        n: cfg.modulus.n(),
        r: cfg.magnitudes.len(),
        sigma: cfg.noise_sigma,
        trials: rows.len() as u64,
        detection_rate,
        false_alarm_rate,
        mean_ms: rows.iter().map(|row| row.ms).sum::<f64>() / trials,
    }
}

// ---------------------------------------------------------------------------
// Metrics CSV
// ---------------------------------------------------------------------------

/// Renders metrics rows in trial order.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("trial,method,N,r,sigma,detected,tp,fp,miss,generic,perfect,ms\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.trial,
            row.pipeline,
            row.n,
            row.r,
            row.sigma,
            row.detected,
            row.tp,
            row.fp,
            row.miss,
            u8::from(row.generic),
            u8::from(row.perfect),
            row.ms,
        ));
    }
    out
}

/// Drops the trailing wall-time column from a metrics CSV, leaving the
/// part that must be byte-identical across reruns of the same seed.
pub fn strip_timing(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    for line in csv.lines() {
        let kept = line.rsplit_once(',').map_or(line, |(head, _)| head);
        out.push_str(kept);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Probability bounds
// ---------------------------------------------------------------------------

/// One empirical-versus-bound comparison.
#[derive(Clone, Copy, Debug)]
pub struct BoundCheck {
    pub empirical: f64,
    pub bound: f64,
    pub std_error: f64,
    /// True when the empirical rate clears `bound - 3 * std_error` (or
    /// the bound is vacuous).
    pub pass: bool,
    /// True when the bound is nonpositive, so any rate clears it.
    pub vacuous: bool,
}

/// Monte Carlo check of the two scene-probability lower bounds.
#[derive(Clone, Copy, Debug)]
pub struct BoundsReport {
    pub n: u32,
    pub r: u32,
    pub trials: u64,
    /// P(random scene is generic for one random line), against
    /// `1 - (r^2 - r) / (2 (N + 1))`.
    pub generic: BoundCheck,
    /// P(random scene is ghost-free for three random distinct lines),
    /// against `1 - r (r^2 - r) / N`.
    pub perfect: BoundCheck,
}

impl BoundsReport {
    pub fn pass(&self) -> bool {
        self.generic.pass && self.perfect.pass
    }
}

/// Estimates both scene probabilities over `trials` seeded draws —
/// uniform distinct support points, uniform lines — and compares each
/// with its lower bound at three standard errors of slack.
pub fn verify_probability_bounds(
    m: Modulus,
    r: u32,
    trials: u64,
    base_seed: u64,
) -> Result<BoundsReport, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::config("trials must be at least 1"));
    }
    if r == 0 {
        return Err(HarnessError::config("sparsity must be at least 1"));
    }
    let magnitudes = vec![1.0 / (2.0 * f64::from(r)).sqrt(); r as usize];
    let mut generic_hits = 0u64;
    let mut perfect_hits = 0u64;
    for trial in 0..trials {
        let mut rng = trial_rng(base_seed, trial);
        let spec = random_scene(m, &magnitudes, 0.0, &mut rng)?;
        let support = spec.support();
        let line = random_line(m, &mut rng);
        if is_generic(m, &support, line) {
            generic_hits += 1;
        }
        let lines = random_distinct_lines(m, 3, &mut rng)?;
        if is_perfect(m, &support, &lines) {
            perfect_hits += 1;
        }
    }
    let rf = f64::from(r);
    let nf = f64::from(m.n());
    let generic_bound = 1.0 - (rf * rf - rf) / (2.0 * (nf + 1.0));
    let perfect_bound = 1.0 - rf * (rf * rf - rf) / nf;
    Ok(BoundsReport {
        n: m.n(),
        r,
        trials,
        generic: check_bound(generic_hits, trials, generic_bound),
        perfect: check_bound(perfect_hits, trials, perfect_bound),
    })
}

fn check_bound(hits: u64, trials: u64, bound: f64) -> BoundCheck {
    let empirical = hits as f64 / trials as f64;
    let std_error = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    let vacuous = bound <= 0.0;
    BoundCheck {
        empirical,
        bound,
        std_error,
        pass: vacuous || empirical >= bound - 3.0 * std_error,
        vacuous,
    }
}

// ---------------------------------------------------------------------------
// Figures
// ---------------------------------------------------------------------------

/// The reproducible heatmaps, named by their command-line tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Full ambiguity matrix of a pseudo-random transmission through the
    /// three-target scene (two strong targets, one weak).
    PrmFig3,
    /// Self-ambiguity of one chirp: a flag-like surface supported on its
    /// line.
    FlaglikeFig6,
    /// Matched-filter surface of the first chirp through the two-target
    /// crossing scene.
    ChirpLFig8,
    /// Same for the second chirp.
    ChirpMFig9,
    /// Same for the confirmation chirp.
    ChirpNFig10Inputs,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::PrmFig3,
        Figure::FlaglikeFig6,
        Figure::ChirpLFig8,
        Figure::ChirpMFig9,
        Figure::ChirpNFig10Inputs,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Figure::PrmFig3 => "PRM_FIG3",
            Figure::FlaglikeFig6 => "FLAGLIKE_FIG6",
            Figure::ChirpLFig8 => "CHIRP_L_FIG8",
            Figure::ChirpMFig9 => "CHIRP_M_FIG9",
            Figure::ChirpNFig10Inputs => "CHIRP_N_FIG10_INPUTS",
        }
    }

    pub fn parse(token: &str) -> Option<Figure> {
        Figure::ALL.into_iter().find(|f| f.token() == token)
    }
}

/// Modulus shared by every figure.
const FIGURE_MODULUS: u32 = 199;

/// Seed of the pseudo-random waveform behind [`Figure::PrmFig3`],
/// chosen so the weak target sits far below the interference texture.
pub const FIGURE_PR_SEED: u64 = 57;

/// The three-target scene: two strong targets and one at a tenth of
/// their amplitude, which full-matrix thresholding at 0.2 misses.
pub fn three_target_scene(m: Modulus) -> Result<ChannelSpec, ChannelError> {
    ChannelSpec::new(
        m,
        vec![
            Target::new(m, 50, 150, Complex64::new(0.7, 0.0)),
            Target::new(m, 100, 100, Complex64::new(0.7, 0.0)),
            Target::new(m, 150, 50, Complex64::new(0.1, 0.0)),
        ],
        0.0,
    )
}

/// The two-target crossing scene whose line translates intersect in two
/// ghost points, exercising the confirmation and pairing stages.
pub fn crossing_scene(m: Modulus) -> Result<ChannelSpec, ChannelError> {
    ChannelSpec::new(
        m,
        vec![
            Target::new(m, 50, 130, Complex64::new(0.7, 0.0)),
            Target::new(m, 100, 60, Complex64::new(0.7, 0.0)),
        ],
        0.0,
    )
}

/// The chirp triple used by the crossing-scene figures: horizontal,
/// vertical, and slope-one lines.
pub fn crossing_chirps() -> [ChirpId; 3] {
    [
        ChirpId::new(PlaneLine::Finite(0), 0),
        ChirpId::new(PlaneLine::Infinite, 0),
        ChirpId::new(PlaneLine::Finite(1), 0),
    ]
}

/// Computes the surface behind one figure.
pub fn figure_heatmap(figure: Figure) -> Result<Heatmap, HarnessError> {
    let m = Modulus::new(FIGURE_MODULUS)?;
    let matrix = match figure {
        Figure::PrmFig3 => {
            let spec = three_target_scene(m)?;
            let mut rng = ChaCha8Rng::seed_from_u64(FIGURE_PR_SEED);
            let phi = pseudorandom_sequence(m, &mut rng);
            let echo = noiseless_channel(&spec, &phi)?;
            ambiguity_full(&phi, &echo)?
        }
        Figure::FlaglikeFig6 => {
            let c = chirp(m, ChirpId::new(PlaneLine::Finite(1), 1));
            ambiguity_full(&c, &c)?
        }
        Figure::ChirpLFig8 | Figure::ChirpMFig9 | Figure::ChirpNFig10Inputs => {
            let spec = crossing_scene(m)?;
            let chirps = crossing_chirps();
            let id = match figure {
                Figure::ChirpLFig8 => chirps[0],
                Figure::ChirpMFig9 => chirps[1],
                _ => chirps[2],
            };
            let c = chirp(m, id);
            let echo = noiseless_channel(&spec, &c)?;
            ambiguity_full(&c, &echo)?
        }
    };
    Ok(Heatmap::from_matrix(&matrix))
}

/// Writes one figure's CSV and SVG into `out_dir`; returns the paths.
pub fn reproduce_figure(figure: Figure, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let map = figure_heatmap(figure)?;
    let stem = figure.token().to_ascii_lowercase();
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let svg_path = out_dir.join(format!("{stem}.svg"));
    write_text(&csv_path, &heatmap_csv(&map))?;
    write_text(&svg_path, &heatmap_svg(&map))?;
    Ok(vec![csv_path, svg_path])
}

// ---------------------------------------------------------------------------
// Waveform spreading
// ---------------------------------------------------------------------------

/// Spreading figures of seeded pseudo-random waveforms.
#[derive(Clone, Debug)]
pub struct SpreadingReport {
    pub n: u32,
    /// (waveform index, spreading figure B).
    pub rows: Vec<(u64, f64)>,
    pub mean: f64,
    pub max: f64,
}

/// Measures `count` independently seeded waveforms.
pub fn measure_spreading(
    m: Modulus,
    count: u64,
    base_seed: u64,
) -> Result<SpreadingReport, HarnessError> {
    if count == 0 {
        return Err(HarnessError::config("need at least one waveform"));
    }
    let mut rows = Vec::with_capacity(count as usize);
    for index in 0..count {
        let mut rng = trial_rng(base_seed, index);
        let phi = pseudorandom_sequence(m, &mut rng);
        rows.push((index, measure_pseudorandomness(&phi)));
    }
    let mean = rows.iter().map(|(_, b)| b).sum::<f64>() / rows.len() as f64;
    let max = rows.iter().map(|(_, b)| *b).fold(0.0f64, f64::max);
    Ok(SpreadingReport {
        n: m.n(),
        rows,
        mean,
        max,
    })
}

/// `index,B` rows for the spreading table.
pub fn spreading_csv(report: &SpreadingReport) -> String {
    let mut out = String::from("index,B\n");
    for (index, b) in &report.rows {
        out.push_str(&format!("{index},{b}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Benchmarks
// ---------------------------------------------------------------------------

/// Representative per-call time at one modulus.
#[derive(Clone, Copy, Debug)]
pub struct BenchRow {
    pub n: u32,
    pub ms: f64,
}

/// Timing rows plus the growth factors between consecutive primes.
#[derive(Clone, Debug)]
pub struct BenchReport {
    pub pipeline: Pipeline,
    pub r: u32,
    pub rows: Vec<BenchRow>,
    /// `rows[i + 1].ms / rows[i].ms`.
    pub growth: Vec<f64>,
    /// Quasilinear pipelines must stay at or below this per doubling.
    pub max_growth: f64,
    /// The baseline must exceed this between the two largest primes.
    pub min_last_growth: f64,
    pub pass: bool,
}

/// Growth ceiling per prime doubling for the line-restriction pipelines.
const QUASILINEAR_MAX_GROWTH: f64 = 2.4;
/// Growth floor for the full-matrix baseline between the largest primes.
const QUADRATIC_MIN_GROWTH: f64 = 3.4;

/// Shortest timing window accepted for one measurement, in seconds.
const BENCH_WINDOW: f64 = 0.05;
/// Windows measured per prime; the median is reported.
const BENCH_WINDOWS: usize = 5;

/// Times one pipeline across ascending primes on seeded random scenes
/// and checks the expected growth: at most [`QUASILINEAR_MAX_GROWTH`]
/// per doubling for the chirp pipelines, at least
/// [`QUADRATIC_MIN_GROWTH`] between the two largest primes for the
/// baseline.  Only the detector call is timed; scene and waveform
/// construction happen outside the clock.
pub fn benchmark_scaling(
    primes: &[u32],
    r: u32,
    pipeline: Pipeline,
    base_seed: u64,
) -> Result<BenchReport, HarnessError> {
    if primes.len() < 2 {
        return Err(HarnessError::config("need at least two primes"));
    }
    if primes.windows(2).any(|pair| pair[0] >= pair[1]) {
        return Err(HarnessError::config("primes must be strictly ascending"));
    }
    if r == 0 {
        return Err(HarnessError::config("sparsity must be at least 1"));
    }
    let mut rows = Vec::with_capacity(primes.len());
    for (index, &p) in primes.iter().enumerate() {
        let m = Modulus::new(p)?;
        let ms = time_pipeline(m, r, pipeline, trial_seed(base_seed, index as u64))?;
        rows.push(BenchRow { n: p, ms });
    }
    let growth: Vec<f64> = rows
        .windows(2)
        .map(|pair| pair[1].ms / pair[0].ms)
        .collect();
    let pass = match pipeline {
        Pipeline::PseudoRandom => growth
            .last()
            .is_some_and(|&factor| factor >= QUADRATIC_MIN_GROWTH),
        _ => growth
            .iter()
            .all(|&factor| factor <= QUASILINEAR_MAX_GROWTH),
    };
    Ok(BenchReport {
        pipeline,
        r,
        rows,
        growth,
        max_growth: QUASILINEAR_MAX_GROWTH,
        min_last_growth: QUADRATIC_MIN_GROWTH,
        pass,
    })
}

/// `N,ms` timing rows.
pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("N,ms\n");
    for row in &report.rows {
        out.push_str(&format!("{},{}\n", row.n, row.ms));
    }
    out
}

/// Builds a noiseless scene and transmissions for one modulus, then
/// times the detector call alone.
fn time_pipeline(m: Modulus, r: u32, pipeline: Pipeline, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitudes = vec![1.0 / (2.0 * f64::from(r)).sqrt(); r as usize];
    let spec = random_scene(m, &magnitudes, 0.0, &mut rng)?;
    let snr = Snr::from_sigma(m, 0.0);
    let thresholds = Thresholds::default();
    match pipeline {
        Pipeline::PseudoRandom => {
            let phi = pseudorandom_sequence(m, &mut rng);
            let echo = noiseless_channel(&spec, &phi)?;
            let r_max = r as usize;
            median_call_ms(|| {
                detect_pseudorandom(&phi, &echo, r_max, 0.3)?;
                Ok(())
            })
        }
        Pipeline::Incidence => {
            let ids = draw_chirps(m, 3, &mut rng)?;
            let echoes = echo_each(&spec, &ids, &mut rng)?;
            median_call_ms(|| {
                detect_incidence(
                    [ids[0], ids[1], ids[2]],
                    [&echoes[0], &echoes[1], &echoes[2]],
                    thresholds,
                    snr,
                )?;
                Ok(())
            })
        }
        Pipeline::Cross => {
            let ids = draw_chirps(m, 2, &mut rng)?;
            let echoes = echo_each(&spec, &ids, &mut rng)?;
            median_call_ms(|| {
                detect_cross([ids[0], ids[1]], [&echoes[0], &echoes[1]], thresholds, snr)?;
                Ok(())
            })
        }
        Pipeline::Incidence1 | Pipeline::Cross1 => {
            let method = if pipeline == Pipeline::Cross1 {
                Method::Cross
            } else {
                Method::Incidence
            };
            let ids = draw_chirps(m, pipeline.chirp_count() as u32, &mut rng)?;
            let sent = combined_chirp(m, &ids)?;
            let echo = noiseless_channel(&spec, &sent)?;
            median_call_ms(|| {
                detect_single_transmission(&ids, &echo, method, thresholds, snr)?;
                Ok(())
            })
        }
    }
}

/// Per-call milliseconds: repetitions per window grow until a window
/// lasts at least [`BENCH_WINDOW`]; the median over [`BENCH_WINDOWS`]
/// fresh windows is returned.
fn median_call_ms<F>(mut call: F) -> Result<f64, HarnessError>
where
    F: FnMut() -> Result<(), HarnessError>,
{
    let mut reps = 1u64;
    loop {
        let window = run_window(&mut call, reps)?;
        if window >= BENCH_WINDOW {
            break;
        }
        reps = reps.saturating_mul(2);
    }
    let mut samples = Vec::with_capacity(BENCH_WINDOWS);
    for _ in 0..BENCH_WINDOWS {
        let window = run_window(&mut call, reps)?;
        samples.push(window / reps as f64);
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[BENCH_WINDOWS / 2] * 1e3)
}

fn run_window<F>(call: &mut F, reps: u64) -> Result<f64, HarnessError>
where
    F: FnMut() -> Result<(), HarnessError>,
{
    let start = Instant::now();
    for _ in 0..reps {
        call()?;
    }
    Ok(start.elapsed().as_secs_f64())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn m(n: u32) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn config(pipeline: Pipeline) -> ExperimentConfig {
        ExperimentConfig {
            modulus: m(199),
            pipeline,
            trials: 4,
            magnitudes: vec![0.5, 0.4, 0.3],
            noise_sigma: 0.0,
            thresholds: Thresholds::default(),
            pr_threshold: 0.2,
            base_seed: 11,
        }
    }

    #[test]
    fn trial_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..64).map(|t| trial_seed(99, t)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 64, "no collisions in a small range");
        assert_eq!(trial_seed(99, 7), trial_seed(99, 7), "pure function");
        assert_ne!(trial_seed(98, 7), trial_seed(99, 7), "base matters");
    }

    #[test]
    fn pipeline_tokens_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(Pipeline::parse(p.token()), Some(p));
        }
        assert_eq!(Pipeline::parse("prr"), None);
    }

    #[test]
    fn noiseless_cross_experiment_detects_everything() {
        let cfg = config(Pipeline::Cross);
        let (rows, summary) = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.tp + row.miss, row.r, "tp + miss covers the scene");
            assert_eq!(row.detected, row.tp + row.fp);
            assert!(row.generic, "line draws at N=199, r=3 are a.s. generic");
        }
        assert!(
            summary.detection_rate > 0.99,
            "noiseless cross finds every target: rate {}",
            summary.detection_rate
        );
        assert_eq!(summary.false_alarm_rate, 0.0);
    }

    #[test]
    fn every_pipeline_runs_and_scores_consistently() {
        for pipeline in Pipeline::ALL {
            let mut cfg = config(pipeline);
            cfg.trials = 2;
            let (rows, summary) = run_experiment(&cfg).unwrap();
            let mean = rows.iter().map(|r| r.tp as f64 / r.r as f64).sum::<f64>() / 2.0;
            assert!(
                (summary.detection_rate - mean).abs() < 1e-15,
                "{pipeline}: summary rate equals the row mean"
            );
        }
    }

    #[test]
    fn reruns_reproduce_rows_exactly_and_timing_is_the_only_difference() {
        let cfg = config(Pipeline::Incidence);
        let (rows_a, _) = run_experiment(&cfg).unwrap();
        let (rows_b, _) = run_experiment(&cfg).unwrap();
        let csv_a = metrics_csv(&rows_a);
        let csv_b = metrics_csv(&rows_b);
        assert_eq!(
            strip_timing(&csv_a),
            strip_timing(&csv_b),
            "same seed, same metrics"
        );
        assert!(
            strip_timing(&csv_a).lines().next().unwrap().ends_with("perfect"),
            "strip removes exactly the wall-time column"
        );
    }

    #[test]
    fn experiment_config_validation_rejects_bad_inputs() {
        let mut cfg = config(Pipeline::Cross);
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err(), "zero trials");
        let mut cfg = config(Pipeline::Cross);
        cfg.magnitudes = vec![];
        assert!(run_experiment(&cfg).is_err(), "no targets");
        let mut cfg = config(Pipeline::Cross);
        cfg.magnitudes = vec![0.9, 0.9];
        assert!(run_experiment(&cfg).is_err(), "energy budget");
        let mut cfg = config(Pipeline::PseudoRandom);
        cfg.pr_threshold = f64::NAN;
        assert!(run_experiment(&cfg).is_err(), "bad threshold");
    }

    #[test]
    fn bound_report_matches_closed_forms_and_trivial_sparsity() {
        let report = verify_probability_bounds(m(199), 1, 50, 5).unwrap();
        assert_eq!(report.generic.empirical, 1.0, "single points are generic");
        assert_eq!(report.perfect.empirical, 1.0);
        assert_eq!(report.generic.bound, 1.0);
        assert_eq!(report.perfect.bound, 1.0);
        assert!(report.pass());

        let report = verify_probability_bounds(m(199), 5, 60, 5).unwrap();
        assert!((report.generic.bound - 0.95).abs() < 1e-12, "1 - 20/400");
        assert!(
            (report.perfect.bound - (1.0 - 100.0 / 199.0)).abs() < 1e-12,
            "1 - 5*20/199"
        );
        assert!(!report.generic.vacuous && !report.perfect.vacuous);

        let report = verify_probability_bounds(m(199), 8, 40, 5).unwrap();
        assert!(report.perfect.vacuous, "1 - 8*56/199 < 0");
        assert!(report.perfect.pass, "vacuous bounds pass by definition");
    }

    #[test]
    fn figure_tokens_round_trip_and_all_maps_have_the_same_size() {
        for figure in Figure::ALL {
            assert_eq!(Figure::parse(figure.token()), Some(figure));
            let map = figure_heatmap(figure).unwrap();
            assert_eq!(map.n, FIGURE_MODULUS);
        }
        assert_eq!(Figure::parse("FIG99"), None);
    }

    #[test]
    fn three_target_figure_shows_two_strong_peaks_and_hides_the_weak_one() {
        let map = figure_heatmap(Figure::PrmFig3).unwrap();
        assert!(
            map.at(50, 150).norm() >= 0.6 && map.at(100, 100).norm() >= 0.6,
            "strong targets stand out: {} and {}",
            map.at(50, 150).norm(),
            map.at(100, 100).norm()
        );
        // The weak target is indistinguishable: interference cells beat
        // it, so nothing marks (150, 50) as special in the surface.
        let weak = map.at(150, 50).norm();
        let mut max_interference = 0.0f64;
        for tau in 0..map.n {
            for omega in 0..map.n {
                if (tau, omega) == (50, 150) || (tau, omega) == (100, 100) {
                    continue;
                }
                if (tau, omega) == (150, 50) {
                    continue;
                }
                max_interference = max_interference.max(map.at(tau, omega).norm());
            }
        }
        let scale = 3.0 / f64::from(FIGURE_MODULUS).sqrt();
        assert!(
            weak < max_interference,
            "weak target ({weak}) does not rise above interference ({max_interference})"
        );
        assert!(
            max_interference < 2.0 * scale,
            "interference stays at the r/sqrt(N) scale: {max_interference} vs {scale}"
        );
    }

    #[test]
    fn flag_figure_is_supported_exactly_on_its_line() {
        let map = figure_heatmap(Figure::FlaglikeFig6).unwrap();
        let modulus = m(FIGURE_MODULUS);
        let line = PlaneLine::Finite(1);
        for tau in 0..map.n {
            for omega in 0..map.n {
                let on = line.contains(
                    modulus,
                    ddchirp_core::PlanePoint { tau, omega },
                );
                let magnitude = map.at(tau, omega).norm();
                if on {
                    assert!(
                        (magnitude - 1.0).abs() < 1e-10,
                        "unit magnitude on the line at ({tau},{omega})"
                    );
                } else {
                    assert!(
                        magnitude < 1e-10,
                        "zero off the line at ({tau},{omega}): {magnitude}"
                    );
                }
            }
        }
    }

    #[test]
    fn crossing_figure_is_supported_on_two_translates() {
        let map = figure_heatmap(Figure::ChirpLFig8).unwrap();
        let modulus = m(FIGURE_MODULUS);
        let line = PlaneLine::Finite(0);
        let spec = crossing_scene(modulus).unwrap();
        let translates: Vec<ddchirp_core::ShiftedLine> = spec
            .support()
            .iter()
            .map(|&u| ddchirp_core::ShiftedLine::through(modulus, line, u))
            .collect();
        for tau in 0..map.n {
            for omega in 0..map.n {
                let p = ddchirp_core::PlanePoint { tau, omega };
                let expected = translates.iter().any(|t| t.contains(modulus, p));
                let magnitude = map.at(tau, omega).norm();
                if expected {
                    assert!(
                        magnitude > 0.69,
                        "attenuation-strength magnitude on translates: {magnitude}"
                    );
                } else {
                    assert!(magnitude < 1e-10, "silence off the translates: {magnitude}");
                }
            }
        }
    }

    #[test]
    fn spreading_statistics_are_consistent_and_modest() {
        let report = measure_spreading(m(101), 6, 3).unwrap();
        assert_eq!(report.rows.len(), 6);
        let mean = report.rows.iter().map(|(_, b)| b).sum::<f64>() / 6.0;
        assert!((report.mean - mean).abs() < 1e-12);
        assert!(report.max >= report.mean);
        assert!(
            report.rows.iter().all(|&(_, b)| b > 1.0 && b < 8.0),
            "spreading figures of random phases stay within a few units"
        );
        let csv = spreading_csv(&report);
        assert!(csv.starts_with("index,B\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn bench_measures_positive_times_and_consecutive_growth() {
        let report = benchmark_scaling(&[31, 61], 2, Pipeline::Cross, 77).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.growth.len(), 1);
        assert!(
            report.rows.iter().all(|row| row.ms > 0.0),
            "windows resolve to positive per-call times"
        );
        assert!(report.growth[0] > 0.0);
    }

    #[test]
    fn bench_validation_and_csv_shape() {
        assert!(
            benchmark_scaling(&[101], 2, Pipeline::Cross, 1).is_err(),
            "one prime is not a scaling study"
        );
        assert!(
            benchmark_scaling(&[101, 101], 2, Pipeline::Cross, 1).is_err(),
            "must ascend"
        );
        let report = BenchReport {
            pipeline: Pipeline::Cross,
            r: 2,
            rows: vec![BenchRow { n: 101, ms: 1.5 }, BenchRow { n: 199, ms: 3.0 }],
            growth: vec![2.0],
            max_growth: QUASILINEAR_MAX_GROWTH,
            min_last_growth: QUADRATIC_MIN_GROWTH,
            pass: true,
        };
        assert_eq!(bench_csv(&report), "N,ms\n101,1.5\n199,3\n");
    }
}

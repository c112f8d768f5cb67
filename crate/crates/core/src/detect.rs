//! Delay-Doppler detectors: the pseudo-random baseline, the incidence
//! method, and the cross method, plus their single-transmission variants.
//!
//! The line methods transmit chirps, restrict each echo's ambiguity
//! function to a line through the origin, and read off peaks:
//!
//! - *incidence*: peaks from three chirps are triangulated — a candidate
//!   `l + m` survives only if a translate of the third line through a
//!   third-chirp peak passes through it;
//! - *cross*: peaks from two chirps are paired, and a phase-exact
//!   cancellation test (the hypothesis function) separates true pairs
//!   from ghosts;
//! - *pseudo-random baseline*: one full ambiguity matrix, thresholded.
//!
//! Peak thresholds scale off a noise floor derived from the
//! signal-to-noise ratio; in the noiseless limit the floor vanishes and a
//! small fixed guard keeps floating-point residue out of the peak sets.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::ambiguity::{
    AmbiguityLineProfile, ambiguity_full, ambiguity_on_line_with, dft::DftPlan,
};
use crate::channel::{Snr, is_generic};
use crate::modarith::{Modulus, PlaneLine, PlanePoint, ShiftedLine, symplectic};
use crate::signal::{Character, ChirpId, Sequence, SignalError, chirp, root_of_unity};

/// Absolute lower bound for effective thresholds and acceptance
/// tolerances, so that floating-point residue (~1e-14 after transforms)
/// never counts as signal when the noise floor is exactly zero.
pub const ROUNDOFF_GUARD: f64 = 1e-9;

/// Sparsity budget assumed when bounding cross-chirp leakage in
/// single-transmission thresholds (leakage grows like sqrt(r/N)).
const LEAK_SPARSITY_CAP: f64 = 8.0;

// ---------------------------------------------------------------------------
// Thresholds and the noise floor
// ---------------------------------------------------------------------------

/// Multiplicative threshold factors applied to the noise floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Peak factor for the incidence method's three line restrictions.
    pub peak: f64,
    /// Peak factor for the cross method's two line restrictions.
    pub cross_peak: f64,
    /// Acceptance factor for the cross method's hypothesis test.
    pub hypothesis: f64,
}

impl Thresholds {
    pub fn new(peak: f64, cross_peak: f64, hypothesis: f64) -> Result<Self, DetectError> {
        let t = Thresholds {
            peak,
            cross_peak,
            hypothesis,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<(), DetectError> {
        for value in [self.peak, self.cross_peak, self.hypothesis] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DetectError::BadThreshold { value });
            }
        }
        Ok(())
    }
}

impl Default for Thresholds {
    /// One unit above the detectability margin for peaks, a little looser
    /// for the cancellation test.
    fn default() -> Self {
        Thresholds {
            peak: 2.0,
            cross_peak: 2.0,
            hypothesis: 3.0,
        }
    }
}

/// The amplitude scale of ambiguity noise for a unit-energy transmission:
/// `sqrt(2 ln ln N) / sqrt(N snr)`, with `ln ln N` clamped below at 0.25
/// so the formula stays meaningful at desk-scale N.  A noiseless ratio
/// gives exactly 0.
pub fn noise_floor(m: Modulus, snr: Snr) -> f64 {
    let loglog = libm::log(libm::log(m.nf())).max(0.25);
    libm::sqrt(2.0 * loglog / (m.nf() * snr.value()))
}

#[inline]
fn guarded(threshold: f64) -> f64 {
    threshold.max(ROUNDOFF_GUARD)
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from detector configuration and input mismatches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DetectError {
    /// The supplied chirps do not sit on pairwise-distinct lines.
    DuplicateLines,
    /// A threshold factor is non-positive or non-finite.
    BadThreshold { value: f64 },
    /// The chirp count does not match the requested method.
    WrongChirpCount { expected: usize, got: usize },
    /// The requested method has no single-transmission form.
    UnsupportedMethod { method: Method },
    /// An underlying sequence operation failed (modulus mismatch, ...).
    Signal(SignalError),
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::DuplicateLines => write!(f, "chirp lines must be pairwise distinct"),
            DetectError::BadThreshold { value } => {
                write!(f, "threshold factor {value} is not a positive finite real")
            }
            DetectError::WrongChirpCount { expected, got } => {
                write!(f, "method needs {expected} chirps, got {got}")
            }
            DetectError::UnsupportedMethod { method } => {
                write!(f, "method {method} has no single-transmission form")
            }
            DetectError::Signal(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DetectError {}

impl From<SignalError> for DetectError {
    fn from(e: SignalError) -> Self {
        DetectError::Signal(e)
    }
}

// ---------------------------------------------------------------------------
// Peaks
// ---------------------------------------------------------------------------

/// One above-threshold entry of a line-restricted ambiguity function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub point: PlanePoint,
    pub value: Complex64,
}

/// All peaks of one line restriction, with the line they live on.
#[derive(Clone, Debug)]
pub struct PeakSet {
    pub line: ShiftedLine,
    pub peaks: Vec<Peak>,
}

/// Entries of `profile` whose magnitude strictly exceeds `threshold`;
/// ties at the threshold are excluded, ties among themselves are all
/// retained.
pub fn peaks_on_line(profile: &AmbiguityLineProfile, threshold: f64) -> PeakSet {
    let peaks = profile
        .points()
        .filter(|(_, v)| v.norm() > threshold)
        .map(|(point, value)| Peak { point, value })
        .collect();
    PeakSet {
        line: profile.line(),
        peaks,
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Which detector produced a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    PseudoRandom,
    Incidence,
    Cross,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::PseudoRandom => write!(f, "pr"),
            Method::Incidence => write!(f, "incidence"),
            Method::Cross => write!(f, "cross"),
        }
    }
}

/// One estimated target: a delay-Doppler point and the first-stage peak
/// value that witnessed it (its magnitude approximates the attenuation).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub point: PlanePoint,
    pub value: Complex64,
}

/// Run statistics attached to a report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// Peaks in the first stage (for the baseline: candidates above
    /// threshold before truncation).
    pub r1: usize,
    /// Peaks in the second stage (line methods only).
    pub r2: Option<usize>,
    /// Peaks in the third stage (incidence only).
    pub r3: Option<usize>,
    /// The noise floor the thresholds were scaled from (0 for the
    /// direct-threshold baseline and in the noiseless limit).
    pub noise_floor: f64,
    /// Threshold factors used (line methods only).
    pub thresholds: Option<Thresholds>,
    /// Whether the estimate set itself is pairwise generic with respect
    /// to every line used (line methods only).
    pub estimates_generic: Option<bool>,
}

/// Detector output: distinct estimated targets plus diagnostics.
#[derive(Clone, Debug)]
pub struct DetectionReport {
    pub method: Method,
    pub lines_used: Vec<PlaneLine>,
    pub estimates: Vec<Estimate>,
    pub diagnostics: Diagnostics,
}

impl DetectionReport {
    /// The estimated support, in report order.
    pub fn points(&self) -> Vec<PlanePoint> {
        self.estimates.iter().map(|e| e.point).collect()
    }
}

// ---------------------------------------------------------------------------
// Pseudo-random baseline
// ---------------------------------------------------------------------------

/// Thresholds the full ambiguity matrix of a pseudo-random transmission:
/// returns up to `r_max` entries with `|A(phi, echo)| > threshold`,
/// sorted by descending magnitude.  Costs a full matrix — N line
/// restrictions — unlike the chirp methods' constant count.
pub fn detect_pseudorandom(
    phi: &Sequence,
    echo: &Sequence,
    r_max: usize,
    threshold: f64,
) -> Result<DetectionReport, DetectError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(DetectError::BadThreshold { value: threshold });
    }
    let matrix = ambiguity_full(phi, echo)?;
    let mut candidates: Vec<Estimate> = matrix
        .entries()
        .filter(|(_, v)| v.norm() > threshold)
        .map(|(point, value)| Estimate { point, value })
        .collect();
    candidates.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(a.point.cmp(&b.point))
    });
    let r1 = candidates.len();
    candidates.truncate(r_max);
    Ok(DetectionReport {
        method: Method::PseudoRandom,
        lines_used: Vec::new(),
        estimates: candidates,
        diagnostics: Diagnostics {
            r1,
            r2: None,
            r3: None,
            noise_floor: 0.0,
            thresholds: None,
            estimates_generic: None,
        },
    })
}

// ---------------------------------------------------------------------------
// Shared line-method plumbing
// ---------------------------------------------------------------------------

fn require_distinct_lines(lines: &[PlaneLine]) -> Result<(), DetectError> {
    for i in 1..lines.len() {
        if lines[..i].contains(&lines[i]) {
            return Err(DetectError::DuplicateLines);
        }
    }
    Ok(())
}

fn require_same_modulus(m: Modulus, echoes: &[&Sequence]) -> Result<(), DetectError> {
    for e in echoes {
        if e.modulus() != m {
            return Err(SignalError::ModulusMismatch {
                left: m.n(),
                right: e.modulus().n(),
            }
            .into());
        }
    }
    Ok(())
}

/// Restricts `A(chirp(id), echo)` to `on_line` through the origin and
/// extracts peaks.
fn stage_peaks(
    plan: &DftPlan,
    m: Modulus,
    id: ChirpId,
    echo: &Sequence,
    on_line: PlaneLine,
    threshold: f64,
) -> Result<PeakSet, DetectError> {
    let transmitted = chirp(m, id);
    let profile = ambiguity_on_line_with(plan, &transmitted, echo, on_line.through_origin())?;
    Ok(peaks_on_line(&profile, threshold))
}

fn finish_report(
    m: Modulus,
    method: Method,
    lines_used: Vec<PlaneLine>,
    accepted: BTreeMap<PlanePoint, Complex64>,
    diagnostics: Diagnostics,
) -> DetectionReport {
    let estimates: Vec<Estimate> = accepted
        .into_iter()
        .map(|(point, value)| Estimate { point, value })
        .collect();
    let points: Vec<PlanePoint> = estimates.iter().map(|e| e.point).collect();
    let generic = lines_used.iter().all(|&l| is_generic(m, &points, l));
    DetectionReport {
        method,
        lines_used,
        estimates,
        diagnostics: Diagnostics {
            estimates_generic: Some(generic),
            ..diagnostics
        },
    }
}

/// Incidence triangulation: keep `l + m` iff some third-stage peak's
/// translate of the third line covers it.
fn triangulate(
    m: Modulus,
    third_line: PlaneLine,
    ls: &PeakSet,
    ms: &PeakSet,
    confirmations: &PeakSet,
) -> BTreeMap<PlanePoint, Complex64> {
    let mut accepted = BTreeMap::new();
    for l in &ls.peaks {
        for mm in &ms.peaks {
            let v = l.point.add(m, mm.point);
            let confirmed = confirmations
                .peaks
                .iter()
                .any(|c| third_line.contains(m, v.sub(m, c.point)));
            if confirmed {
                accepted.entry(v).or_insert(l.value);
            }
        }
    }
    accepted
}

/// Cross pairing: keep `l + m` iff the hypothesis function cancels
/// within tolerance.
fn pair_by_hypothesis(
    m: Modulus,
    psi_l: &Character,
    psi_m: &Character,
    ls: &PeakSet,
    ms: &PeakSet,
    tolerance: f64,
) -> Result<BTreeMap<PlanePoint, Complex64>, DetectError> {
    let mut accepted = BTreeMap::new();
    for l in &ls.peaks {
        for mm in &ms.peaks {
            let h = hypothesis(m, mm.value, l.value, l.point, mm.point, psi_l, psi_m)?;
            if h.norm() <= tolerance {
                let v = l.point.add(m, mm.point);
                accepted.entry(v).or_insert(l.value);
            }
        }
    }
    Ok(accepted)
}

// ---------------------------------------------------------------------------
// Incidence method
// ---------------------------------------------------------------------------

/// Three-chirp detection by triangulation.  `chirps` and `echoes` are
/// associated pairwise: `echoes[i]` must be the channel's response to
/// `chirp(chirps[i])`.  Costs three line restrictions plus `O(r^3)`
/// membership checks.
pub fn detect_incidence(
    chirps: [ChirpId; 3],
    echoes: [&Sequence; 3],
    thresholds: Thresholds,
    snr: Snr,
) -> Result<DetectionReport, DetectError> {
    thresholds.validate()?;
    let lines = [chirps[0].line, chirps[1].line, chirps[2].line];
    require_distinct_lines(&lines)?;
    let m = echoes[0].modulus();
    require_same_modulus(m, &echoes)?;

    let plan = DftPlan::new(m.n() as usize);
    let floor = noise_floor(m, snr);
    let threshold = guarded(thresholds.peak * floor);

    let ls = stage_peaks(&plan, m, chirps[1], echoes[1], lines[0], threshold)?;
    let ms = stage_peaks(&plan, m, chirps[0], echoes[0], lines[1], threshold)?;
    let confirmations = stage_peaks(&plan, m, chirps[2], echoes[2], lines[0], threshold)?;

    let accepted = triangulate(m, lines[2], &ls, &ms, &confirmations);
    let diagnostics = Diagnostics {
        r1: ls.peaks.len(),
        r2: Some(ms.peaks.len()),
        r3: Some(confirmations.peaks.len()),
        noise_floor: floor,
        thresholds: Some(thresholds),
        estimates_generic: None,
    };
    Ok(finish_report(
        m,
        Method::Incidence,
        lines.into(),
        accepted,
        diagnostics,
    ))
}

// ---------------------------------------------------------------------------
// Cross method
// ---------------------------------------------------------------------------

/// Two-chirp detection by phase cancellation.  Costs two line
/// restrictions plus `O(r^2)` hypothesis evaluations.
pub fn detect_cross(
    chirps: [ChirpId; 2],
    echoes: [&Sequence; 2],
    thresholds: Thresholds,
    snr: Snr,
) -> Result<DetectionReport, DetectError> {
    thresholds.validate()?;
    let lines = [chirps[0].line, chirps[1].line];
    require_distinct_lines(&lines)?;
    let m = echoes[0].modulus();
    require_same_modulus(m, &echoes)?;

    let plan = DftPlan::new(m.n() as usize);
    let floor = noise_floor(m, snr);
    let threshold = guarded(thresholds.cross_peak * floor);
    let tolerance = guarded(thresholds.hypothesis * floor);

    let ls = stage_peaks(&plan, m, chirps[1], echoes[1], lines[0], threshold)?;
    let ms = stage_peaks(&plan, m, chirps[0], echoes[0], lines[1], threshold)?;

    let psi_l = Character::of(chirps[0]);
    let psi_m = Character::of(chirps[1]);
    let accepted = pair_by_hypothesis(m, &psi_l, &psi_m, &ls, &ms, tolerance)?;
    let diagnostics = Diagnostics {
        r1: ls.peaks.len(),
        r2: Some(ms.peaks.len()),
        r3: None,
        noise_floor: floor,
        thresholds: Some(thresholds),
        estimates_generic: None,
    };
    Ok(finish_report(
        m,
        Method::Cross,
        lines.into(),
        accepted,
        diagnostics,
    ))
}

/// The cross method's cancellation statistic for a candidate pair
/// `(l, m)`:
///
/// ```text
///   h = valL * psi_L(l) - valM * e(Omega[l, m]) * psi_M(m)
/// ```
///
/// where `valL` is the ambiguity value at `m` of the first chirp's echo
/// and `valM` the value at `l` of the second's.  For a true pair the two
/// terms agree exactly in the noiseless case.
pub fn hypothesis(
    m: Modulus,
    val_l: Complex64,
    val_m: Complex64,
    l: PlanePoint,
    mm: PlanePoint,
    psi_l: &Character,
    psi_m: &Character,
) -> Result<Complex64, SignalError> {
    let twist = root_of_unity(m, i64::from(symplectic(m, l, mm)));
    Ok(val_l * psi_l.eval(m, l)? - val_m * twist * psi_m.eval(m, mm)?)
}

// ---------------------------------------------------------------------------
// Single transmission
// ---------------------------------------------------------------------------

/// The normalized chirp sum `(C_1 + ... + C_d) / sqrt(d)` transmitted in
/// the single-shot variants.  Cross-chirp overlaps keep the norm within
/// `2/sqrt(N)` of 1 rather than exactly 1.
pub fn combined_chirp(m: Modulus, ids: &[ChirpId]) -> Result<Sequence, DetectError> {
    if ids.len() < 2 {
        return Err(DetectError::WrongChirpCount {
            expected: 2,
            got: ids.len(),
        });
    }
    let lines: Vec<PlaneLine> = ids.iter().map(|id| id.line).collect();
    require_distinct_lines(&lines)?;
    let scale = 1.0 / libm::sqrt(ids.len() as f64);
    let mut sum = Sequence::zeros(m);
    for &id in ids {
        let c = chirp(m, id);
        for (acc, v) in sum.values_mut().iter_mut().zip(c.values()) {
            *acc += scale * v;
        }
    }
    Ok(sum)
}

/// Amplitude allowance for the off-line chirp components leaking into a
/// line restriction of the combined transmission.
fn leak_allowance(m: Modulus, d: usize) -> f64 {
    (d as f64 - 1.0) * libm::sqrt(LEAK_SPARSITY_CAP / m.nf()) / libm::sqrt(d as f64)
}

/// Runs the incidence or cross logic against one echo of the combined
/// chirp [`combined_chirp`]`(ids)`.  Peak values scale by `1/sqrt(d)`
/// and thresholds shrink accordingly, widened by a cross-chirp leakage
/// allowance; estimates keep the scaled values.
pub fn detect_single_transmission(
    ids: &[ChirpId],
    echo: &Sequence,
    method: Method,
    thresholds: Thresholds,
    snr: Snr,
) -> Result<DetectionReport, DetectError> {
    thresholds.validate()?;
    let expected = match method {
        Method::Incidence => 3,
        Method::Cross => 2,
        Method::PseudoRandom => return Err(DetectError::UnsupportedMethod { method }),
    };
    if ids.len() != expected {
        return Err(DetectError::WrongChirpCount {
            expected,
            got: ids.len(),
        });
    }
    let lines: Vec<PlaneLine> = ids.iter().map(|id| id.line).collect();
    require_distinct_lines(&lines)?;
    let m = echo.modulus();

    let d = ids.len();
    let scale = 1.0 / libm::sqrt(d as f64);
    let plan = DftPlan::new(m.n() as usize);
    let floor = noise_floor(m, snr);
    let peak_factor = match method {
        Method::Incidence => thresholds.peak,
        _ => thresholds.cross_peak,
    };
    let threshold = guarded(peak_factor * floor * scale + leak_allowance(m, d));

    let ls = stage_peaks(&plan, m, ids[1], echo, lines[0], threshold)?;
    let ms = stage_peaks(&plan, m, ids[0], echo, lines[1], threshold)?;

    match method {
        Method::Incidence => {
            let confirmations = stage_peaks(&plan, m, ids[2], echo, lines[0], threshold)?;
            let accepted = triangulate(m, lines[2], &ls, &ms, &confirmations);
            let diagnostics = Diagnostics {
                r1: ls.peaks.len(),
                r2: Some(ms.peaks.len()),
                r3: Some(confirmations.peaks.len()),
                noise_floor: floor,
                thresholds: Some(thresholds),
                estimates_generic: None,
            };
            Ok(finish_report(m, method, lines, accepted, diagnostics))
        }
        Method::Cross => {
            // Both ambiguity values in the pair test carry leakage of the
            // non-matching chirp components, so the cancellation
            // tolerance widens by twice the per-value allowance, budgeted
            // by the observed peak counts.
            let r_hat = ls.peaks.len().max(ms.peaks.len()).max(1);
            let pair_leak =
                2.0 * (d as f64 - 1.0) * libm::sqrt(r_hat as f64 / m.nf()) / libm::sqrt(d as f64);
            let tolerance = guarded(thresholds.hypothesis * floor * scale + pair_leak);
            let psi_l = Character::of(ids[0]);
            let psi_m = Character::of(ids[1]);
            let accepted = pair_by_hypothesis(m, &psi_l, &psi_m, &ls, &ms, tolerance)?;
            let diagnostics = Diagnostics {
                r1: ls.peaks.len(),
                r2: Some(ms.peaks.len()),
                r3: None,
                noise_floor: floor,
                thresholds: Some(thresholds),
                estimates_generic: None,
            };
            Ok(finish_report(m, method, lines, accepted, diagnostics))
        }
        Method::PseudoRandom => unreachable!("rejected above"),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

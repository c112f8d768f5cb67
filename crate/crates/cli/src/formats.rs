//! File formats: scene and report JSON, sequence / heatmap / metrics CSV,
//! and the native SVG heatmap renderer.
//!
//! Everything renders to strings deterministically (floats through the
//! shortest round-trip formatting) so byte-level reproducibility can be
//! asserted; thin wrappers do the actual IO.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use ddchirp_core::ambiguity::AmbiguityMatrix;
use ddchirp_core::channel::ChannelError;
use ddchirp_core::detect::DetectionReport;
use ddchirp_core::{ChannelSpec, ChirpId, Modulus, PlaneLine, Sequence, Target};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from reading and validating external files.
#[derive(Debug)]
pub enum FormatError {
    Io { path: String, error: std::io::Error },
    Parse { context: String },
    Invalid { context: String },
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatError::Io { path, error } => write!(f, "{path}: {error}"),
            FormatError::Parse { context } => write!(f, "parse error: {context}"),
            FormatError::Invalid { context } => write!(f, "invalid input: {context}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl FormatError {
    fn io(path: &Path, error: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            error,
        }
    }

    fn parse(context: impl Into<String>) -> Self {
        FormatError::Parse {
            context: context.into(),
        }
    }
}

impl From<ChannelError> for FormatError {
    fn from(e: ChannelError) -> Self {
        FormatError::Invalid {
            context: e.to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// Scene JSON
// ---------------------------------------------------------------------------

/// On-disk scene: `{"N": ..., "targets": [...], "noise_sigma": ...}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(rename = "N")]
    pub n: u32,
    pub targets: Vec<TargetFile>,
    pub noise_sigma: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetFile {
    pub tau: u32,
    pub omega: u32,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

impl SceneFile {
    pub fn from_spec(spec: &ChannelSpec) -> Self {
        SceneFile {
            n: spec.modulus().n(),
            targets: spec
                .targets()
                .iter()
                .map(|t| TargetFile {
                    tau: t.point.tau,
                    omega: t.point.omega,
                    alpha_re: t.attenuation.re,
                    alpha_im: t.attenuation.im,
                })
                .collect(),
            noise_sigma: spec.noise_sigma(),
        }
    }

    /// Validates back into a channel spec (odd-prime modulus, energy
    /// budget, distinct targets).
    pub fn to_spec(&self) -> Result<ChannelSpec, FormatError> {
        let m = Modulus::new(self.n).map_err(|e| FormatError::Invalid {
            context: format!("N = {}: {e}", self.n),
        })?;
        let targets = self
            .targets
            .iter()
            .map(|t| {
                Target::new(
                    m,
                    i64::from(t.tau),
                    i64::from(t.omega),
                    Complex64::new(t.alpha_re, t.alpha_im),
                )
            })
            .collect();
        Ok(ChannelSpec::new(m, targets, self.noise_sigma)?)
    }
}

// ---------------------------------------------------------------------------
// Report JSON
// ---------------------------------------------------------------------------

/// On-disk detection report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub method: String,
    pub lines: Vec<String>,
    pub thresholds: Option<ThresholdsFile>,
    pub estimates: Vec<EstimateFile>,
    pub diagnostics: DiagnosticsFile,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThresholdsFile {
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EstimateFile {
    pub tau: u32,
    pub omega: u32,
    pub value_re: f64,
    pub value_im: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiagnosticsFile {
    pub r1: usize,
    pub r2: Option<usize>,
    pub r3: Option<usize>,
    pub floor: f64,
}

impl ReportFile {
    pub fn from_report(report: &DetectionReport) -> Self {
        ReportFile {
            method: report.method.to_string(),
            lines: report.lines_used.iter().map(line_label).collect(),
            thresholds: report.diagnostics.thresholds.map(|t| ThresholdsFile {
                t: t.peak,
                t1: t.cross_peak,
                t2: t.hypothesis,
            }),
            estimates: report
                .estimates
                .iter()
                .map(|e| EstimateFile {
                    tau: e.point.tau,
                    omega: e.point.omega,
                    value_re: e.value.re,
                    value_im: e.value.im,
                })
                .collect(),
            diagnostics: DiagnosticsFile {
                r1: report.diagnostics.r1,
                r2: report.diagnostics.r2,
                r3: report.diagnostics.r3,
                floor: report.diagnostics.noise_floor,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Line labels
// ---------------------------------------------------------------------------

/// "0".."N-1" for finite slopes, "inf" for the vertical line.
pub fn line_label(line: &PlaneLine) -> String {
    line.to_string()
}

pub fn parse_line(label: &str, m: Modulus) -> Result<PlaneLine, FormatError> {
    if label == "inf" {
        return Ok(PlaneLine::Infinite);
    }
    let slope: u32 = label
        .parse()
        .map_err(|_| FormatError::parse(format!("line label {label:?}")))?;
    if slope >= m.n() {
        return Err(FormatError::Invalid {
            context: format!("slope {slope} is not reduced mod {}", m.n()),
        });
    }
    Ok(PlaneLine::Finite(slope))
}

// ---------------------------------------------------------------------------
// Transmission manifest
// ---------------------------------------------------------------------------

/// Everything a later `detect` invocation needs: the scene and, per
/// method, the chirps used and the file names of the transmitted and
/// echoed sequences.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub scene: SceneFile,
    pub transmissions: BTreeMap<String, Transmission>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Transmission {
    /// Chirp ids, in transmission order; empty for the pseudo-random
    /// baseline.
    pub chirps: Vec<ChirpFile>,
    /// CSV files of the transmitted sequences.
    pub sent: Vec<String>,
    /// CSV files of the received echoes (one per transmission; a single
    /// entry for the combined-chirp variants).
    pub echoes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChirpFile {
    pub line: String,
    pub b: u32,
}

impl ChirpFile {
    pub fn from_id(id: ChirpId) -> Self {
        ChirpFile {
            line: line_label(&id.line),
            b: id.b,
        }
    }

    pub fn to_id(&self, m: Modulus) -> Result<ChirpId, FormatError> {
        Ok(ChirpId {
            line: parse_line(&self.line, m)?,
            b: self.b,
        })
    }
}

// ---------------------------------------------------------------------------
// Sequence CSV
// ---------------------------------------------------------------------------

/// `index,re,im` rows, one per sample.
pub fn sequence_csv(s: &Sequence) -> String {
    let mut out = String::from("index,re,im\n");
    for (i, v) in s.values().iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", v.re, v.im));
    }
    out
}

pub fn parse_sequence_csv(text: &str, m: Modulus) -> Result<Sequence, FormatError> {
    let mut values = vec![Complex64::new(0.0, 0.0); m.n() as usize];
    let mut seen = 0usize;
    for (row, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let index: usize = next_field(&mut fields, row, "index")?;
        let re: f64 = next_field(&mut fields, row, "re")?;
        let im: f64 = next_field(&mut fields, row, "im")?;
        if index >= values.len() {
            return Err(FormatError::Invalid {
                context: format!("row {row}: index {index} out of range for N = {}", m.n()),
            });
        }
        values[index] = Complex64::new(re, im);
        seen += 1;
    }
    if seen != values.len() {
        return Err(FormatError::Invalid {
            context: format!("expected {} samples, found {seen}", values.len()),
        });
    }
    Sequence::new(m, values).map_err(|e| FormatError::Invalid {
        context: e.to_string(),
    })
}

fn next_field<T: std::str::FromStr>(
    fields: &mut std::str::Split<'_, char>,
    row: usize,
    name: &str,
) -> Result<T, FormatError> {
    let raw = fields
        .next()
        .ok_or_else(|| FormatError::parse(format!("row {row}: missing {name}")))?;
    raw.parse()
        .map_err(|_| FormatError::parse(format!("row {row}: bad {name} {raw:?}")))
}

// ---------------------------------------------------------------------------
// Heatmap CSV and SVG
// ---------------------------------------------------------------------------

/// A full delay-Doppler surface, row-major in tau.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub n: u32,
    pub cells: Vec<Complex64>,
}

impl Heatmap {
    pub fn from_matrix(matrix: &AmbiguityMatrix) -> Self {
        Heatmap {
            n: matrix.modulus().n(),
            cells: matrix.values().to_vec(),
        }
    }

    pub fn at(&self, tau: u32, omega: u32) -> Complex64 {
        self.cells[(tau * self.n + omega) as usize]
    }
}

/// `tau,omega,re,im,abs` rows covering the whole plane.
pub fn heatmap_csv(map: &Heatmap) -> String {
    let mut out = String::from("tau,omega,re,im,abs\n");
    for tau in 0..map.n {
        for omega in 0..map.n {
            let v = map.at(tau, omega);
            out.push_str(&format!("{tau},{omega},{},{},{}\n", v.re, v.im, v.norm()));
        }
    }
    out
}

pub fn parse_heatmap_csv(text: &str) -> Result<Heatmap, FormatError> {
    let mut rows: Vec<(u32, u32, Complex64)> = Vec::new();
    let mut max_coord = 0u32;
    for (row, line) in text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let tau: u32 = next_field(&mut fields, row, "tau")?;
        let omega: u32 = next_field(&mut fields, row, "omega")?;
        let re: f64 = next_field(&mut fields, row, "re")?;
        let im: f64 = next_field(&mut fields, row, "im")?;
        max_coord = max_coord.max(tau).max(omega);
        rows.push((tau, omega, Complex64::new(re, im)));
    }
    let n = max_coord + 1;
    if rows.len() != (n * n) as usize {
        return Err(FormatError::Invalid {
            context: format!("expected {} cells for N = {n}, found {}", n * n, rows.len()),
        });
    }
    let mut cells = vec![Complex64::new(0.0, 0.0); rows.len()];
    for (tau, omega, v) in rows {
        cells[(tau * n + omega) as usize] = v;
    }
    Ok(Heatmap { n, cells })
}

/// Renders magnitudes as an N-by-N grid of unit squares, linearly mapped
/// to grayscale (white = 0, black = the maximum).  Delay runs right,
/// Doppler runs down.  Pure function of the heatmap, so re-rendering
/// from a parsed CSV reproduces the SVG byte for byte.
pub fn heatmap_svg(map: &Heatmap) -> String {
    let n = map.n;
    let peak = map.cells.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" \
         viewBox=\"0 0 {n} {n}\" shape-rendering=\"crispEdges\">\n\
         <rect width=\"{n}\" height=\"{n}\" fill=\"#ffffff\"/>\n",
        w = n * 4
    );
    for tau in 0..n {
        for omega in 0..n {
            let magnitude = map.at(tau, omega).norm();
            let shade = if peak > 0.0 {
                255.0 - (magnitude / peak * 255.0).round()
            } else {
                255.0
            } as u8;
            if shade == 255 {
                continue; // already the background
            }
            out.push_str(&format!(
                "<rect x=\"{tau}\" y=\"{omega}\" width=\"1\" height=\"1\" \
                 fill=\"#{shade:02x}{shade:02x}{shade:02x}\"/>\n"
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

// ---------------------------------------------------------------------------
// IO wrappers
// ---------------------------------------------------------------------------

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| FormatError::io(path, e))?;
    }
    fs::write(path, text).map_err(|e| FormatError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FormatError::Invalid {
        context: e.to_string(),
    })?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, FormatError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| FormatError::parse(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use ddchirp_core::signal::pseudorandom_sequence;
    use rand_core::SeedableRng;

    fn m(n: u32) -> Modulus {
        Modulus::new(n).unwrap()
    }

    #[test]
    fn scene_json_round_trips_through_the_spec() {
        let modulus = m(199);
        let spec = ChannelSpec::new(
            modulus,
            vec![
                Target::new(modulus, 50, 150, Complex64::new(0.7, 0.0)),
                Target::new(modulus, 100, 100, Complex64::new(0.0, 0.7)),
            ],
            0.05,
        )
        .unwrap();
        let file = SceneFile::from_spec(&spec);
        let json = serde_json::to_string(&file).unwrap();
        assert!(json.contains("\"N\":199"), "capital-N key: {json}");
        let back: SceneFile = serde_json::from_str(&json).unwrap();
        let spec_back = back.to_spec().unwrap();
        assert_eq!(spec_back.support(), spec.support());
        assert_eq!(spec_back.noise_sigma(), spec.noise_sigma());
    }

    #[test]
    fn scene_validation_surfaces_bad_moduli_and_budgets() {
        let bad_n = SceneFile {
            n: 6,
            targets: vec![],
            noise_sigma: 0.0,
        };
        assert!(matches!(
            bad_n.to_spec().unwrap_err(),
            FormatError::Invalid { .. }
        ));
        let hot = SceneFile {
            n: 7,
            targets: vec![
                TargetFile { tau: 0, omega: 0, alpha_re: 1.0, alpha_im: 0.0 },
                TargetFile { tau: 1, omega: 0, alpha_re: 0.5, alpha_im: 0.0 },
            ],
            noise_sigma: 0.0,
        };
        assert!(hot.to_spec().is_err(), "energy budget enforced");
    }

    #[test]
    fn sequence_csv_round_trips_exactly() {
        let modulus = m(101);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let s = pseudorandom_sequence(modulus, &mut rng);
        let text = sequence_csv(&s);
        let back = parse_sequence_csv(&text, modulus).unwrap();
        assert_eq!(back.values(), s.values(), "shortest round-trip floats");
        assert_eq!(sequence_csv(&back), text, "re-rendering is byte-identical");
    }

    #[test]
    fn sequence_csv_rejects_truncation_and_junk() {
        let modulus = m(5);
        let text = "index,re,im\n0,1.0,0.0\n1,0.0,0.0\n";
        assert!(matches!(
            parse_sequence_csv(text, modulus).unwrap_err(),
            FormatError::Invalid { .. }
        ));
        let junk = "index,re,im\n0,one,0.0\n";
        assert!(matches!(
            parse_sequence_csv(junk, modulus).unwrap_err(),
            FormatError::Parse { .. }
        ));
    }

    #[test]
    fn heatmap_csv_and_svg_round_trip() {
        let n = 5u32;
        let cells: Vec<Complex64> = (0..25)
            .map(|i| Complex64::new(f64::from(i) * 0.11, -f64::from(i) * 0.07))
            .collect();
        let map = Heatmap { n, cells };
        let csv = heatmap_csv(&map);
        let parsed = parse_heatmap_csv(&csv).unwrap();
        assert_eq!(parsed, map);
        assert_eq!(
            heatmap_svg(&parsed),
            heatmap_svg(&map),
            "SVG from parsed CSV is pixel-identical"
        );
        assert!(heatmap_svg(&map).starts_with("<svg "));
    }

    #[test]
    fn line_labels_round_trip() {
        let modulus = m(13);
        for line in PlaneLine::enumerate_all(modulus) {
            let label = line_label(&line);
            assert_eq!(parse_line(&label, modulus).unwrap(), line);
        }
        assert!(parse_line("13", modulus).is_err(), "unreduced slope");
        assert!(parse_line("x", modulus).is_err());
    }
}

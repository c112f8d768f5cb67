//! Sparse delay-Doppler channels and the geometric conditions detection
//! relies on.
//!
//! A channel applies `r` delay-Doppler shifts with complex attenuations,
//! `H(S)[n] = sum_k alpha_k e(omega_k n) S[n - tau_k]`, then adds
//! circularly-symmetric complex Gaussian noise.  The attenuation energy is
//! capped at 1 so that signal-to-noise bookkeeping stays meaningful.
//!
//! Two properties of a channel's support govern line-based detection:
//!
//! - *generic* with respect to a line `L`: no two targets differ by a
//!   vector of `L`, so the `r` translates `L + target` are distinct and a
//!   transversal line meets them in `r` distinct points;
//! - *perfect* with respect to a line family: the targets are the only
//!   points lying on one translate per family member, so triangulating the
//!   translates yields no ghosts.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::modarith::{Intersection, Modulus, PlaneLine, PlanePoint, ShiftedLine, intersect};
use crate::randext::{uniform_below, unit_f64};
use crate::signal::{RootTable, Sequence};

/// Slack applied to the unit energy budget so channels built from floats
/// that sum to 1 are not rejected over rounding.
const ENERGY_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Targets and channel descriptions
// ---------------------------------------------------------------------------

/// One reflector: a delay-Doppler point and its complex attenuation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Target {
    pub point: PlanePoint,
    pub attenuation: Complex64,
}

impl Target {
    pub fn new(m: Modulus, tau: i64, omega: i64, attenuation: Complex64) -> Self {
        Target {
            point: PlanePoint::new(m, tau, omega),
            attenuation,
        }
    }
}

/// Errors from channel construction and scene sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelError {
    /// Total attenuation energy `sum |alpha_k|^2` exceeds the unit budget.
    EnergyBudgetExceeded { total: f64 },
    /// Two targets share a delay-Doppler point.
    DuplicateTarget { point: PlanePoint },
    /// A target has zero attenuation (it would be undetectable by
    /// definition and poisons per-target accounting).
    ZeroAttenuation { index: usize },
    /// A target attenuation is NaN or infinite.
    NonFiniteAttenuation { index: usize },
    /// A target coordinate is out of canonical range.
    TargetOutOfRange { index: usize },
    /// More targets than plane points.
    TooManyTargets { requested: usize, capacity: u64 },
    /// Noise deviation is negative, NaN, or infinite.
    BadSigma { sigma: f64 },
    /// A requested magnitude is not strictly positive and finite.
    BadMagnitude { index: usize },
    /// Operand moduli disagree.
    ModulusMismatch { left: u32, right: u32 },
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::EnergyBudgetExceeded { total } => {
                write!(f, "attenuation energy {total} exceeds the unit budget")
            }
            ChannelError::DuplicateTarget { point } => {
                write!(f, "duplicate target at {point}")
            }
            ChannelError::ZeroAttenuation { index } => {
                write!(f, "target {index} has zero attenuation")
            }
            ChannelError::NonFiniteAttenuation { index } => {
                write!(f, "target {index} has non-finite attenuation")
            }
            ChannelError::TargetOutOfRange { index } => {
                write!(f, "target {index} has coordinates outside [0, N)")
            }
            ChannelError::TooManyTargets { requested, capacity } => {
                write!(f, "{requested} targets requested but the plane has {capacity} points")
            }
            ChannelError::BadSigma { sigma } => {
                write!(f, "noise deviation {sigma} is not a finite nonnegative real")
            }
            ChannelError::BadMagnitude { index } => {
                write!(f, "magnitude {index} is not strictly positive and finite")
            }
            ChannelError::ModulusMismatch { left, right } => {
                write!(f, "modulus mismatch: {left} vs {right}")
            }
        }
    }
}

impl core::error::Error for ChannelError {}

/// A validated sparse channel: distinct targets, attenuation energy at most
/// 1, and a per-component Gaussian noise deviation `sigma >= 0`.
#[derive(Clone, Debug)]
pub struct ChannelSpec {
    m: Modulus,
    targets: Vec<Target>,
    noise_sigma: f64,
}

impl ChannelSpec {
    pub fn new(m: Modulus, targets: Vec<Target>, noise_sigma: f64) -> Result<Self, ChannelError> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(ChannelError::BadSigma { sigma: noise_sigma });
        }
        let capacity = u64::from(m.n()) * u64::from(m.n());
        if targets.len() as u64 > capacity {
            return Err(ChannelError::TooManyTargets {
                requested: targets.len(),
                capacity,
            });
        }
        let mut seen = BTreeSet::new();
        let mut energy = 0.0f64;
        for (index, t) in targets.iter().enumerate() {
            if t.point.tau >= m.n() || t.point.omega >= m.n() {
                return Err(ChannelError::TargetOutOfRange { index });
            }
            if !t.attenuation.re.is_finite() || !t.attenuation.im.is_finite() {
                return Err(ChannelError::NonFiniteAttenuation { index });
            }
            if t.attenuation.norm_sqr() == 0.0 {
                return Err(ChannelError::ZeroAttenuation { index });
            }
            if !seen.insert(t.point) {
                return Err(ChannelError::DuplicateTarget { point: t.point });
            }
            energy += t.attenuation.norm_sqr();
        }
        if energy > 1.0 + ENERGY_SLACK {
            return Err(ChannelError::EnergyBudgetExceeded { total: energy });
        }
        Ok(ChannelSpec {
            m,
            targets,
            noise_sigma,
        })
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.m
    }

    #[inline]
    pub fn targets(&self) -> &[Target] {
        &self.targets
    }

    #[inline]
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    /// Number of targets.
    #[inline]
    pub fn sparsity(&self) -> usize {
        self.targets.len()
    }

    /// The delay-Doppler support, in target order.
    pub fn support(&self) -> Vec<PlanePoint> {
        self.targets.iter().map(|t| t.point).collect()
    }

    /// Total attenuation energy `sum |alpha_k|^2`.
    pub fn energy(&self) -> f64 {
        self.targets.iter().map(|t| t.attenuation.norm_sqr()).sum()
    }

    /// The signal-to-noise ratio a unit-energy transmission sees through
    /// this channel's noise.
    pub fn snr(&self) -> Snr {
        Snr::from_sigma(self.m, self.noise_sigma)
    }
}

// ---------------------------------------------------------------------------
// Signal-to-noise ratio
// ---------------------------------------------------------------------------

/// Linear signal-to-noise ratio for unit-energy transmissions:
/// `SNR = 1 / (2 N sigma^2)`, with `sigma = 0` mapping to infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Snr(f64);

impl Snr {
    /// Wraps an explicit linear ratio; must be positive (infinity allowed,
    /// meaning "noiseless").
    pub fn new(value: f64) -> Result<Self, ChannelError> {
        if value.is_nan() || value <= 0.0 {
            return Err(ChannelError::BadSigma { sigma: value });
        }
        Ok(Snr(value))
    }

    /// The ratio implied by per-component noise deviation `sigma`: the
    /// expected noise energy over `N` samples is `2 N sigma^2`.
    pub fn from_sigma(m: Modulus, sigma: f64) -> Self {
        debug_assert!(sigma >= 0.0);
        if sigma == 0.0 {
            Snr(f64::INFINITY)
        } else {
            Snr(1.0 / (2.0 * m.nf() * sigma * sigma))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

// ---------------------------------------------------------------------------
// Channel action
// ---------------------------------------------------------------------------

/// The deterministic part of the channel:
/// `H(S)[n] = sum_k alpha_k e(omega_k n) S[n - tau_k]`.
pub fn noiseless_channel(spec: &ChannelSpec, s: &Sequence) -> Result<Sequence, ChannelError> {
    let m = spec.m;
    if m != s.modulus() {
        return Err(ChannelError::ModulusMismatch {
            left: m.n(),
            right: s.modulus().n(),
        });
    }
    let table = RootTable::new(m);
    let mut out = Sequence::zeros(m);
    for t in &spec.targets {
        let (tau, omega) = (t.point.tau, t.point.omega);
        for n in 0..m.n() {
            let term = t.attenuation * table.at(m.mul(omega, n)) * s.get(m.sub(n, tau));
            out.values_mut()[n as usize] += term;
        }
    }
    Ok(out)
}

/// The full channel: deterministic part plus one fresh draw of
/// circularly-symmetric complex Gaussian noise with per-component
/// deviation `sigma`.
pub fn apply_channel<R: RngCore + ?Sized>(
    spec: &ChannelSpec,
    s: &Sequence,
    rng: &mut R,
) -> Result<Sequence, ChannelError> {
    let mut out = noiseless_channel(spec, s)?;
    if spec.noise_sigma > 0.0 {
        for v in out.values_mut() {
            let (g_re, g_im) = gaussian_pair(rng);
            *v += Complex64::new(spec.noise_sigma * g_re, spec.noise_sigma * g_im);
        }
    }
    Ok(out)
}

/// One Box-Muller draw: two independent standard normal deviates.
fn gaussian_pair<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    // 1 - u keeps the log argument in (0, 1]; the angle draw may be 0.
    let u = 1.0 - unit_f64(rng);
    let theta = core::f64::consts::TAU * unit_f64(rng);
    let radius = libm::sqrt(-2.0 * libm::log(u));
    (radius * libm::cos(theta), radius * libm::sin(theta))
}

// ---------------------------------------------------------------------------
// Genericity and perfectness
// ---------------------------------------------------------------------------

/// Whether no two distinct support points differ by a vector of `line`.
pub fn is_generic(m: Modulus, support: &[PlanePoint], line: PlaneLine) -> bool {
    for (i, &u) in support.iter().enumerate() {
        for &v in &support[i + 1..] {
            if line.contains(m, u.sub(m, v)) {
                return false;
            }
        }
    }
    true
}

/// Outcome of the ghost-freeness check for a support and a line family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perfectness {
    /// The support points are the only points covered by one translate per
    /// family line.
    Perfect,
    /// Some off-support point lies on translates of every family line.
    Imperfect,
    /// The support is not generic with respect to every family line, so
    /// the translate family itself is degenerate.
    DegenerateSupport,
}

/// Classifies `support` against the family of translates
/// `{ support[i] + lines[j] }`: a point is a full incidence point if it
/// lies on a translate of every family line; the support is perfect when
/// its points are the only such points.  `lines` must be pairwise
/// distinct.
pub fn perfectness(m: Modulus, support: &[PlanePoint], lines: &[PlaneLine]) -> Perfectness {
    debug_assert!(
        (1..lines.len()).all(|i| !lines[..i].contains(&lines[i])),
        "family lines must be pairwise distinct"
    );
    for &line in lines {
        if !is_generic(m, support, line) {
            return Perfectness::DegenerateSupport;
        }
    }
    if support.len() <= 1 || lines.is_empty() {
        return Perfectness::Perfect;
    }
    let family: Vec<ShiftedLine> = support
        .iter()
        .flat_map(|&v| lines.iter().map(move |&l| ShiftedLine::through(m, l, v)))
        .collect();

    // Candidate incidence points are pairwise intersections of
    // non-parallel family members; count how many family lines pass
    // through each (genericity caps the count per direction at one, so a
    // count of `lines.len()` means one translate of every direction).
    let mut candidates: BTreeSet<PlanePoint> = BTreeSet::new();
    for (i, &x) in family.iter().enumerate() {
        for &y in &family[i + 1..] {
            if let Intersection::Point(p) = intersect(m, x, y) {
                candidates.insert(p);
            }
        }
    }
    let needed = lines.len();
    for &p in &candidates {
        if support.contains(&p) {
            continue;
        }
        let count = family.iter().filter(|sl| sl.contains(m, p)).count();
        if count >= needed {
            return Perfectness::Imperfect;
        }
    }
    Perfectness::Perfect
}

/// Boolean view of [`perfectness`]; degenerate supports count as not
/// perfect.
#[inline]
pub fn is_perfect(m: Modulus, support: &[PlanePoint], lines: &[PlaneLine]) -> bool {
    perfectness(m, support, lines) == Perfectness::Perfect
}

// ---------------------------------------------------------------------------
// Random scenes
// ---------------------------------------------------------------------------

/// Draws a scene with one target per requested magnitude: delay-Doppler
/// points uniform over the plane (duplicates are redrawn), attenuation
/// phases uniform on the circle.
pub fn random_scene<R: RngCore + ?Sized>(
    m: Modulus,
    magnitudes: &[f64],
    noise_sigma: f64,
    rng: &mut R,
) -> Result<ChannelSpec, ChannelError> {
    for (index, &mag) in magnitudes.iter().enumerate() {
        if !(mag > 0.0 && mag.is_finite()) {
            return Err(ChannelError::BadMagnitude { index });
        }
    }
    let capacity = u64::from(m.n()) * u64::from(m.n());
    if magnitudes.len() as u64 > capacity {
        return Err(ChannelError::TooManyTargets {
            requested: magnitudes.len(),
            capacity,
        });
    }
    let mut used = BTreeSet::new();
    let mut targets = Vec::with_capacity(magnitudes.len());
    for &mag in magnitudes {
        let point = loop {
            let p = PlanePoint {
                tau: uniform_below(rng, m.n()),
                omega: uniform_below(rng, m.n()),
            };
            if used.insert(p) {
                break p;
            }
        };
        let theta = core::f64::consts::TAU * unit_f64(rng);
        targets.push(Target {
            point,
            attenuation: Complex64::new(mag * libm::cos(theta), mag * libm::sin(theta)),
        });
    }
    ChannelSpec::new(m, targets, noise_sigma)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::heisenberg_apply;
    use crate::signal::pseudorandom_sequence;
    use rand_core::SeedableRng;
    use std::vec;

    const EXACT: f64 = 1e-12;

    fn m(n: u32) -> Modulus {
        Modulus::new(n).unwrap()
    }

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn one(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    // ---- validation tests ----

    #[test]
    fn rejects_overfull_energy_budget() {
        let modulus = m(7);
        let targets = vec![
            Target::new(modulus, 0, 0, one(1.0)),
            Target::new(modulus, 1, 0, one(0.1)),
        ];
        assert!(matches!(
            ChannelSpec::new(modulus, targets, 0.0),
            Err(ChannelError::EnergyBudgetExceeded { .. })
        ));
    }

    #[test]
    fn rejects_duplicate_zero_and_nonfinite_targets() {
        let modulus = m(7);
        let dup = vec![
            Target::new(modulus, 2, 3, one(0.5)),
            Target::new(modulus, 2, 3, one(0.5)),
        ];
        assert_eq!(
            ChannelSpec::new(modulus, dup, 0.0).unwrap_err(),
            ChannelError::DuplicateTarget {
                point: PlanePoint { tau: 2, omega: 3 }
            }
        );
        let zero = vec![Target::new(modulus, 1, 1, one(0.0))];
        assert_eq!(
            ChannelSpec::new(modulus, zero, 0.0).unwrap_err(),
            ChannelError::ZeroAttenuation { index: 0 }
        );
        let nan = vec![Target::new(modulus, 1, 1, Complex64::new(f64::NAN, 0.0))];
        assert_eq!(
            ChannelSpec::new(modulus, nan, 0.0).unwrap_err(),
            ChannelError::NonFiniteAttenuation { index: 0 }
        );
        assert!(matches!(
            ChannelSpec::new(modulus, vec![], -0.5),
            Err(ChannelError::BadSigma { .. })
        ));
    }

    #[test]
    fn unit_energy_scene_is_accepted() {
        let modulus = m(199);
        let targets = vec![
            Target::new(modulus, 50, 150, one(0.7)),
            Target::new(modulus, 100, 100, one(0.7)),
            Target::new(modulus, 150, 50, one(0.1)),
        ];
        let spec = ChannelSpec::new(modulus, targets, 0.0).unwrap();
        assert!((spec.energy() - 0.99).abs() < EXACT);
        assert_eq!(spec.sparsity(), 3);
    }

    // ---- channel action tests ----

    #[test]
    fn trivial_scene_is_identity() {
        let modulus = m(17);
        let spec = ChannelSpec::new(
            modulus,
            vec![Target::new(modulus, 0, 0, one(1.0))],
            0.0,
        )
        .unwrap();
        let s = pseudorandom_sequence(modulus, &mut rng(1));
        let out = noiseless_channel(&spec, &s).unwrap();
        assert!(out.max_abs_diff(&s) < EXACT);
    }

    #[test]
    fn pure_delay_and_pure_doppler() {
        let modulus = m(11);
        let delay = ChannelSpec::new(
            modulus,
            vec![Target::new(modulus, 4, 0, one(1.0))],
            0.0,
        )
        .unwrap();
        let d0 = Sequence::delta(modulus, 0);
        let moved = noiseless_channel(&delay, &d0).unwrap();
        assert!(moved.max_abs_diff(&Sequence::delta(modulus, 4)) < EXACT);

        let doppler = ChannelSpec::new(
            modulus,
            vec![Target::new(modulus, 0, 3, one(1.0))],
            0.0,
        )
        .unwrap();
        let s = pseudorandom_sequence(modulus, &mut rng(2));
        let modulated = noiseless_channel(&doppler, &s).unwrap();
        for n in 0..11u32 {
            let expect = crate::signal::root_of_unity(modulus, i64::from(3 * n)) * s.get(n);
            assert!((modulated.get(n) - expect).norm() < EXACT, "n={n}");
        }
    }

    #[test]
    fn channel_matches_shift_operator_route() {
        // H(S) = sum_k alpha_k e(2^{-1} tau_k omega_k) pi(tau_k, omega_k) S,
        // an independent evaluation through the operator algebra.
        let modulus = m(17);
        let spec = random_scene(modulus, &[0.5, 0.4, 0.3], 0.0, &mut rng(3)).unwrap();
        let s = pseudorandom_sequence(modulus, &mut rng(4));
        let direct = noiseless_channel(&spec, &s).unwrap();

        let mut via_ops = Sequence::zeros(modulus);
        for t in spec.targets() {
            let lead = crate::signal::root_of_unity(
                modulus,
                i64::from(modulus.halve(modulus.mul(t.point.tau, t.point.omega))),
            );
            let shifted = heisenberg_apply(t.point, &s);
            for (acc, v) in via_ops.values_mut().iter_mut().zip(shifted.values()) {
                *acc += t.attenuation * lead * v;
            }
        }
        assert!(direct.max_abs_diff(&via_ops) < EXACT);
    }

    #[test]
    fn zero_sigma_adds_no_noise_and_rng_is_untouched() {
        let modulus = m(13);
        let spec = random_scene(modulus, &[0.6], 0.0, &mut rng(5)).unwrap();
        let s = pseudorandom_sequence(modulus, &mut rng(6));
        let mut noise_rng = rng(7);
        let noisy = apply_channel(&spec, &s, &mut noise_rng).unwrap();
        let clean = noiseless_channel(&spec, &s).unwrap();
        assert_eq!(noisy.values(), clean.values());
        assert_eq!(noise_rng.next_u64(), rng(7).next_u64());
    }

    #[test]
    fn noise_energy_matches_its_deviation() {
        let modulus = m(101);
        let spec = ChannelSpec::new(modulus, vec![], 0.05).unwrap();
        let zero = Sequence::zeros(modulus);
        let mut noise_rng = rng(8);
        let trials = 400;
        let mut mean_energy = 0.0;
        for _ in 0..trials {
            let w = apply_channel(&spec, &zero, &mut noise_rng).unwrap();
            mean_energy += w.energy();
        }
        mean_energy /= f64::from(trials);
        let expect = 2.0 * modulus.nf() * 0.05 * 0.05; // 2 N sigma^2
        assert!(
            (mean_energy - expect).abs() < 0.05 * expect,
            "mean noise energy {mean_energy} vs expected {expect}"
        );
    }

    #[test]
    fn noisy_echo_is_deterministic_per_seed() {
        let modulus = m(31);
        let spec = random_scene(modulus, &[0.5, 0.5], 0.1, &mut rng(9)).unwrap();
        let s = pseudorandom_sequence(modulus, &mut rng(10));
        let a = apply_channel(&spec, &s, &mut rng(11)).unwrap();
        let b = apply_channel(&spec, &s, &mut rng(11)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    // ---- SNR tests ----

    #[test]
    fn snr_follows_the_noise_deviation() {
        let modulus = m(199);
        let snr = Snr::from_sigma(modulus, 0.05);
        assert!((snr.value() - 1.0 / (2.0 * 199.0 * 0.0025)).abs() < EXACT);
        assert!(Snr::from_sigma(modulus, 0.0).is_infinite());
        assert!(Snr::new(0.0).is_err());
        assert!(Snr::new(-1.0).is_err());
        assert!(Snr::new(f64::INFINITY).unwrap().is_infinite());
    }

    // ---- genericity tests ----

    #[test]
    fn genericity_depends_on_the_line() {
        let modulus = m(199);
        let support = [
            PlanePoint { tau: 50, omega: 150 },
            PlanePoint { tau: 100, omega: 100 },
            PlanePoint { tau: 150, omega: 50 },
        ];
        // Differences are multiples of (50, -50), which lie on the line of
        // slope -1 but on no other line.
        assert!(is_generic(modulus, &support, PlaneLine::Finite(0)));
        assert!(is_generic(modulus, &support, PlaneLine::Infinite));
        assert!(!is_generic(modulus, &support, PlaneLine::Finite(198)));
    }

    #[test]
    fn small_supports_are_always_generic() {
        let modulus = m(7);
        for line in PlaneLine::enumerate_all(modulus) {
            assert!(is_generic(modulus, &[], line));
            assert!(is_generic(modulus, &[PlanePoint { tau: 3, omega: 5 }], line));
        }
    }

    // ---- perfectness tests ----

    #[test]
    fn two_separated_targets_are_perfect_for_the_standard_family() {
        let modulus = m(199);
        let support = [
            PlanePoint { tau: 50, omega: 130 },
            PlanePoint { tau: 100, omega: 60 },
        ];
        let lines = [PlaneLine::Finite(0), PlaneLine::Infinite, PlaneLine::Finite(1)];
        assert_eq!(perfectness(modulus, &support, &lines), Perfectness::Perfect);
    }

    #[test]
    fn constructed_ghost_point_is_reported_imperfect() {
        // At N=13 with lines {slope 0, vertical, slope 1}: the point (3, 5)
        // inherits omega=5 from (0,5), tau=3 from (3,9), and omega-tau=2
        // from (1,3) — a full incidence point off the support.
        let modulus = m(13);
        let support = [
            PlanePoint { tau: 0, omega: 5 },
            PlanePoint { tau: 3, omega: 9 },
            PlanePoint { tau: 1, omega: 3 },
        ];
        let lines = [PlaneLine::Finite(0), PlaneLine::Infinite, PlaneLine::Finite(1)];
        for &line in &lines {
            assert!(is_generic(modulus, &support, line), "premise: generic");
        }
        assert_eq!(perfectness(modulus, &support, &lines), Perfectness::Imperfect);
        assert!(!is_perfect(modulus, &support, &lines));
    }

    #[test]
    fn non_generic_support_is_flagged_degenerate() {
        let modulus = m(13);
        let support = [PlanePoint { tau: 0, omega: 0 }, PlanePoint { tau: 1, omega: 0 }];
        let lines = [PlaneLine::Finite(0), PlaneLine::Infinite];
        assert_eq!(
            perfectness(modulus, &support, &lines),
            Perfectness::DegenerateSupport
        );
        assert!(!is_perfect(modulus, &support, &lines));
    }

    #[test]
    fn single_targets_are_perfect() {
        let modulus = m(13);
        let lines = [PlaneLine::Finite(2), PlaneLine::Finite(7), PlaneLine::Infinite];
        assert_eq!(
            perfectness(modulus, &[PlanePoint { tau: 4, omega: 11 }], &lines),
            Perfectness::Perfect
        );
    }

    #[test]
    fn perfectness_agrees_with_exhaustive_plane_scan() {
        let modulus = m(13);
        let mut sample_rng = rng(12);
        for trial in 0..60 {
            let spec = random_scene(modulus, &[0.5, 0.5, 0.5], 0.0, &mut sample_rng).unwrap();
            let support = spec.support();
            let lines =
                crate::modarith::random_distinct_lines(modulus, 3, &mut sample_rng).unwrap();

            // Oracle: count, for every plane point, how many family lines
            // cover it, with no shortcuts.
            let family: Vec<ShiftedLine> = support
                .iter()
                .flat_map(|&v| lines.iter().map(move |&l| ShiftedLine::through(modulus, l, v)))
                .collect();
            let generic = lines.iter().all(|&l| is_generic(modulus, &support, l));
            let expect = if !generic {
                Perfectness::DegenerateSupport
            } else {
                let mut ghost = false;
                for tau in 0..13u32 {
                    for omega in 0..13u32 {
                        let p = PlanePoint { tau, omega };
                        if support.contains(&p) {
                            continue;
                        }
                        let count = family.iter().filter(|sl| sl.contains(modulus, p)).count();
                        if count >= lines.len() {
                            ghost = true;
                        }
                    }
                }
                if ghost {
                    Perfectness::Imperfect
                } else {
                    Perfectness::Perfect
                }
            };
            assert_eq!(
                perfectness(modulus, &support, &lines),
                expect,
                "trial {trial}: support {support:?} lines {lines:?}"
            );
        }
    }

    // ---- random scene tests ----

    #[test]
    fn random_scene_preserves_magnitudes_and_avoids_duplicates() {
        let modulus = m(3);
        // 8 targets in a 9-point plane: the duplicate-resampling path is
        // guaranteed to run.
        let mags = [0.3f64; 8];
        let spec = random_scene(modulus, &mags, 0.0, &mut rng(13)).unwrap();
        assert_eq!(spec.sparsity(), 8);
        let support = spec.support();
        let distinct: BTreeSet<_> = support.iter().collect();
        assert_eq!(distinct.len(), 8);
        for t in spec.targets() {
            assert!((t.attenuation.norm() - 0.3).abs() < EXACT);
        }
    }

    #[test]
    fn random_scene_is_deterministic_and_validates() {
        let modulus = m(101);
        let a = random_scene(modulus, &[0.6, 0.3], 0.01, &mut rng(14)).unwrap();
        let b = random_scene(modulus, &[0.6, 0.3], 0.01, &mut rng(14)).unwrap();
        assert_eq!(a.support(), b.support());
        assert!(matches!(
            random_scene(modulus, &[1.0, 0.5], 0.0, &mut rng(15)),
            Err(ChannelError::EnergyBudgetExceeded { .. })
        ));
        assert!(matches!(
            random_scene(modulus, &[0.0], 0.0, &mut rng(16)),
            Err(ChannelError::BadMagnitude { index: 0 })
        ));
    }
}

//! Sequences in `C[Z_N]` and the chirp transmission dictionary.
//!
//! For each line `L` through the origin and each `b` in `Z_N` there is a
//! unit-norm chirp: finite slope `a` gives
//! `C[n] = e(2^{-1} a n^2 - b n) / sqrt(N)` and the vertical line gives the
//! delta `C = delta_b`, where `e(t) = exp(2*pi*i*t/N)`.  The `N` chirps of a
//! fixed line form an orthonormal basis; chirps from different lines have
//! constant pairwise overlap `1/sqrt(N)`.
//!
//! Integer phases are looked up in a precomputed table of the `N` roots of
//! unity after reduction mod `N`, so phase evaluation is exactly periodic
//! and long chirps accumulate no drift.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::modarith::{Modulus, PlaneLine, PlanePoint};
use crate::randext::unit_f64;

// ---------------------------------------------------------------------------
// Roots of unity
// ---------------------------------------------------------------------------

#[inline]
fn unit_root(n: u32, k: u32) -> Complex64 {
    debug_assert!(k < n);
    let angle = TAU * f64::from(k) / f64::from(n);
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// `e(t) = exp(2*pi*i*t/N)` for an integer exponent, reduced mod `N` before
/// any floating-point work so that `e(t + N) == e(t)` exactly.
#[inline]
pub fn root_of_unity(m: Modulus, t: i64) -> Complex64 {
    unit_root(m.n(), m.reduce_i64(t))
}

/// `e(t)` for a real exponent (used for non-lattice phases only).
#[inline]
pub fn root_of_unity_real(m: Modulus, t: f64) -> Complex64 {
    let reduced = t - (t / m.nf()).floor() * m.nf();
    let angle = TAU * reduced / m.nf();
    Complex64::new(libm::cos(angle), libm::sin(angle))
}

/// Precomputed table of all `N` roots of unity; `eval(t)` is a reduction
/// plus a lookup and agrees bit-for-bit with [`root_of_unity`].
pub struct RootTable {
    m: Modulus,
    powers: Vec<Complex64>,
}

impl RootTable {
    pub fn new(m: Modulus) -> Self {
        let powers = (0..m.n()).map(|k| unit_root(m.n(), k)).collect();
        RootTable { m, powers }
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.m
    }

    /// `e(t)` for a residue already in `[0, N)`.
    #[inline]
    pub fn at(&self, k: u32) -> Complex64 {
        self.powers[k as usize]
    }

    /// `e(t)` for an arbitrary signed integer exponent.
    #[inline]
    pub fn eval(&self, t: i64) -> Complex64 {
        self.powers[self.m.reduce_i64(t) as usize]
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Errors from sequence and character operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalError {
    /// Two operands live over different moduli.
    ModulusMismatch { left: u32, right: u32 },
    /// A sequence body has the wrong number of samples.
    LengthMismatch { expected: usize, got: usize },
    /// A sequence entry is NaN or infinite.
    NonFiniteEntry { index: usize },
    /// A character was evaluated off its line.
    PointOffLine { point: PlanePoint },
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::ModulusMismatch { left, right } => {
                write!(f, "modulus mismatch: {left} vs {right}")
            }
            SignalError::LengthMismatch { expected, got } => {
                write!(f, "expected {expected} samples, got {got}")
            }
            SignalError::NonFiniteEntry { index } => {
                write!(f, "non-finite sample at index {index}")
            }
            SignalError::PointOffLine { point } => {
                write!(f, "point {point} does not lie on the character's line")
            }
        }
    }
}

impl core::error::Error for SignalError {}

// ---------------------------------------------------------------------------
// Sequences
// ---------------------------------------------------------------------------

/// A finite signal: `N` complex samples indexed by `Z_N`.
#[derive(Clone, Debug)]
pub struct Sequence {
    m: Modulus,
    values: Vec<Complex64>,
}

impl Sequence {
    /// Wraps a sample vector, checking length and finiteness.
    pub fn new(m: Modulus, values: Vec<Complex64>) -> Result<Self, SignalError> {
        if values.len() != m.n() as usize {
            return Err(SignalError::LengthMismatch {
                expected: m.n() as usize,
                got: values.len(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(SignalError::NonFiniteEntry { index });
            }
        }
        Ok(Sequence { m, values })
    }

    /// The all-zero sequence.
    pub fn zeros(m: Modulus) -> Self {
        Sequence {
            m,
            values: vec![Complex64::new(0.0, 0.0); m.n() as usize],
        }
    }

    /// The delta sequence supported at `b`.
    pub fn delta(m: Modulus, b: u32) -> Self {
        debug_assert!(b < m.n());
        let mut s = Sequence::zeros(m);
        s.values[b as usize] = Complex64::new(1.0, 0.0);
        s
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.m
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Sample at index `n` (a canonical residue).
    #[inline]
    pub fn get(&self, n: u32) -> Complex64 {
        self.values[n as usize]
    }

    /// Sample at an arbitrary signed index, reduced mod `N`.
    #[inline]
    pub fn get_wrapped(&self, n: i64) -> Complex64 {
        self.values[self.m.reduce_i64(n) as usize]
    }

    /// Hermitian inner product, conjugating the second argument:
    /// `<f, g> = sum_n f[n] * conj(g[n])`.
    pub fn inner(&self, other: &Sequence) -> Result<Complex64, SignalError> {
        if self.m != other.m {
            return Err(SignalError::ModulusMismatch {
                left: self.m.n(),
                right: other.m.n(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc += a * b.conj();
        }
        Ok(acc)
    }

    /// Signal energy `<f, f>` (real, nonnegative).
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.energy())
    }

    /// Largest entrywise distance to another sequence (test helper, also
    /// used by verification suites).
    pub fn max_abs_diff(&self, other: &Sequence) -> f64 {
        debug_assert_eq!(self.m, other.m);
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Chirps and characters
// ---------------------------------------------------------------------------

/// Names one chirp: the line it belongs to and the index `b` within that
/// line's orthonormal family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChirpId {
    pub line: PlaneLine,
    pub b: u32,
}

impl ChirpId {
    #[inline]
    pub fn new(line: PlaneLine, b: u32) -> Self {
        ChirpId { line, b }
    }
}

impl fmt::Display for ChirpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C[{};{}]", self.line, self.b)
    }
}

/// Builds the unit-norm chirp named by `id`.
pub fn chirp(m: Modulus, id: ChirpId) -> Sequence {
    debug_assert!(id.b < m.n());
    match id.line {
        PlaneLine::Finite(a) => {
            let table = RootTable::new(m);
            let scale = 1.0 / libm::sqrt(m.nf());
            let values = (0..m.n())
                .map(|n| {
                    let quad = m.halve(m.mul(a, m.mul(n, n)));
                    let exponent = m.sub(quad, m.mul(id.b, n));
                    table.at(exponent) * scale
                })
                .collect();
            Sequence { m, values }
        }
        PlaneLine::Infinite => Sequence::delta(m, id.b),
    }
}

/// A multiplicative character of a line: on a finite-slope line it sends
/// `(t, a*t)` to `e(b*t)`; on the vertical line it sends `(0, w)` to
/// `e(b*w)`.  Each chirp is an eigenfunction of the delay-Doppler shifts
/// along its line with eigenvalues given by this character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Character {
    pub line: PlaneLine,
    pub b: u32,
}

impl Character {
    #[inline]
    pub fn new(line: PlaneLine, b: u32) -> Self {
        Character { line, b }
    }

    /// The eigenvalue character associated with a chirp.
    #[inline]
    pub fn of(id: ChirpId) -> Self {
        Character {
            line: id.line,
            b: id.b,
        }
    }

    /// Evaluates the character at a point of its line.
    pub fn eval(&self, m: Modulus, p: PlanePoint) -> Result<Complex64, SignalError> {
        if !self.line.contains(m, p) {
            return Err(SignalError::PointOffLine { point: p });
        }
        let t = match self.line {
            PlaneLine::Finite(_) => p.tau,
            PlaneLine::Infinite => p.omega,
        };
        Ok(root_of_unity(m, i64::from(m.mul(self.b, t))))
    }
}

// ---------------------------------------------------------------------------
// Pseudo-random waveforms
// ---------------------------------------------------------------------------

/// A random-phase waveform: `phi[n] = exp(i*theta_n) / sqrt(N)` with each
/// `theta_n` uniform on `[0, 2*pi)`.  Such signals have uniformly small
/// self-ambiguity away from the origin, at the cost of carrying no line
/// structure to exploit.
pub fn pseudorandom_sequence<R: RngCore + ?Sized>(m: Modulus, rng: &mut R) -> Sequence {
    let scale = 1.0 / libm::sqrt(m.nf());
    let values = (0..m.n())
        .map(|_| {
            let theta = TAU * unit_f64(rng);
            Complex64::new(libm::cos(theta) * scale, libm::sin(theta) * scale)
        })
        .collect();
    Sequence { m, values }
}

/// The spreading figure `B` of a waveform: `sqrt(N)` times the largest
/// self-ambiguity magnitude away from the origin.  Small `B` (a few units)
/// is what makes a waveform usable for full-matrix detection.
pub fn measure_pseudorandomness(phi: &Sequence) -> f64 {
    let matrix = crate::ambiguity::ambiguity_full(phi, phi)
        .expect("self-ambiguity cannot mismatch");
    let m = phi.modulus();
    let mut max_off = 0.0f64;
    for tau in 0..m.n() {
        for omega in 0..m.n() {
            if tau == 0 && omega == 0 {
                continue;
            }
            max_off = max_off.max(matrix.entry(PlanePoint { tau, omega }).norm());
        }
    }
    libm::sqrt(m.nf()) * max_off
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

//! The delay-Doppler shift operators and the ambiguity function.
//!
//! The shift at `p = (tau, omega)` acts on a sequence by
//! `[pi(p) f][n] = e(-2^{-1} tau omega) * e(omega n) * f[n - tau]`,
//! with the symmetric phase factor making `pi(p)^-1 = pi(-p)` exactly.  The
//! ambiguity function pairs a transmitted `f` against a received `g`:
//! `A(f, g)[p] = <pi(p) f, g>`.
//!
//! The point of this module is the fast restriction: the `N` values of
//! `A(f, g)` along any shifted line cost one cyclic correlation of
//! chirp-premultiplied copies of `f` and `g` — `O(N log N)` via the
//! prime-length DFT in [`dft`] — instead of `O(N^2)` entrywise sums.  The
//! full `N x N` matrix is assembled from the `N` constant-Doppler rows in
//! `O(N^2 log N)`.

pub mod dft;

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::modarith::{Modulus, PlaneLine, PlanePoint, ShiftedLine, symplectic};
use crate::signal::{Character, ChirpId, RootTable, Sequence, SignalError, chirp};
use dft::DftPlan;

// ---------------------------------------------------------------------------
// Shift operators and entrywise ambiguity
// ---------------------------------------------------------------------------

/// Applies the delay-Doppler shift `pi(p)` to `f`.
pub fn heisenberg_apply(p: PlanePoint, f: &Sequence) -> Sequence {
    let m = f.modulus();
    let table = RootTable::new(m);
    let lead = table.at(m.neg(m.halve(m.mul(p.tau, p.omega))));
    let values: Vec<Complex64> = (0..m.n())
        .map(|n| {
            let phase = lead * table.at(m.mul(p.omega, n));
            phase * f.get(m.sub(n, p.tau))
        })
        .collect();
    Sequence::new(m, values).expect("shift of a finite sequence is finite")
}

/// One ambiguity value `A(f, g)[p] = <pi(p) f, g>`, evaluated as a direct
/// O(N) sum.  This is the reference route the fast restriction is tested
/// against.
pub fn ambiguity_entry(
    f: &Sequence,
    g: &Sequence,
    p: PlanePoint,
) -> Result<Complex64, SignalError> {
    let m = f.modulus();
    if m != g.modulus() {
        return Err(SignalError::ModulusMismatch {
            left: m.n(),
            right: g.modulus().n(),
        });
    }
    let table = RootTable::new(m);
    let lead = table.at(m.neg(m.halve(m.mul(p.tau, p.omega))));
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..m.n() {
        acc += table.at(m.mul(p.omega, n)) * f.get(m.sub(n, p.tau)) * g.get(n).conj();
    }
    Ok(lead * acc)
}

// ---------------------------------------------------------------------------
// Fast line restriction
// ---------------------------------------------------------------------------

/// The ambiguity function restricted to one shifted line; `values[t]`
/// belongs to `line.point_at(t)`.
#[derive(Clone, Debug)]
pub struct AmbiguityLineProfile {
    m: Modulus,
    line: ShiftedLine,
    values: Vec<Complex64>,
}

impl AmbiguityLineProfile {
    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.m
    }

    #[inline]
    pub fn line(&self) -> ShiftedLine {
        self.line
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The profile as `(point, value)` pairs in enumeration order.
    pub fn points(&self) -> impl Iterator<Item = (PlanePoint, Complex64)> + '_ {
        let m = self.m;
        let line = self.line;
        self.values
            .iter()
            .enumerate()
            .map(move |(t, &v)| (line.point_at(m, t as u32), v))
    }

    /// Value at a specific point of the line, if it lies on the line.
    pub fn value_at(&self, p: PlanePoint) -> Option<Complex64> {
        self.line
            .index_of(self.m, p)
            .map(|t| self.values[t as usize])
    }
}

/// Restricts `A(f, g)` to a shifted line in `O(N log N)`, building a
/// throwaway DFT plan.  Prefer [`ambiguity_on_line_with`] when several
/// restrictions share a modulus.
pub fn ambiguity_on_line(
    f: &Sequence,
    g: &Sequence,
    line: ShiftedLine,
) -> Result<AmbiguityLineProfile, SignalError> {
    let plan = DftPlan::new(f.modulus().n() as usize);
    ambiguity_on_line_with(&plan, f, g, line)
}

/// Restricts `A(f, g)` to a shifted line, reusing a caller-provided plan.
///
/// For a finite slope `a` with canonical shift `(0, w0)` the points are
/// `(t, a t + w0)` and
///
/// ```text
///   A[t] = e(-2^{-1} w0 t) * sum_n v[n] u[n - t],
///   u[m] = f[m] e(-2^{-1} a m^2),   v[n] = conj(g[n]) e(w0 n + 2^{-1} a n^2),
/// ```
///
/// a cyclic cross-correlation computed with three DFTs.  For the vertical
/// line the restriction is a single DFT of `f[n - t0] conj(g[n])`.
pub fn ambiguity_on_line_with(
    plan: &DftPlan,
    f: &Sequence,
    g: &Sequence,
    line: ShiftedLine,
) -> Result<AmbiguityLineProfile, SignalError> {
    let m = f.modulus();
    if m != g.modulus() {
        return Err(SignalError::ModulusMismatch {
            left: m.n(),
            right: g.modulus().n(),
        });
    }
    if plan.len() != m.n() as usize {
        return Err(SignalError::LengthMismatch {
            expected: m.n() as usize,
            got: plan.len(),
        });
    }
    let table = RootTable::new(m);
    let values = match line.line() {
        PlaneLine::Finite(a) => {
            let w0 = line.shift().omega;
            let kernel_fft = reversed_premultiplied_fft(plan, &table, f, a);
            finite_slope_row(plan, &table, g, a, w0, &kernel_fft)
        }
        PlaneLine::Infinite => {
            let t0 = line.shift().tau;
            let n = m.n();
            let mut s = vec![Complex64::new(0.0, 0.0); n as usize];
            for nn in 0..n {
                s[nn as usize] = f.get(m.sub(nn, t0)) * g.get(nn).conj();
            }
            // sum_n s[n] e(w n) = N * inverse-DFT of s at w.
            let spectrum = plan.inverse(&s);
            (0..n)
                .map(|w| {
                    let lead = table.at(m.neg(m.halve(m.mul(t0, w))));
                    lead * spectrum[w as usize] * m.nf()
                })
                .collect()
        }
    };
    Ok(AmbiguityLineProfile { m, line, values })
}

/// Forward DFT of the index-reversed, chirp-premultiplied copy of `f`:
/// the fixed factor of every correlation row of slope `a`.
fn reversed_premultiplied_fft(
    plan: &DftPlan,
    table: &RootTable,
    f: &Sequence,
    a: u32,
) -> Vec<Complex64> {
    let m = table.modulus();
    let n = m.n();
    let mut w = vec![Complex64::new(0.0, 0.0); n as usize];
    for mm in 0..n {
        let u = f.get(mm) * table.at(m.neg(m.halve(m.mul(a, m.mul(mm, mm)))));
        w[m.neg(mm) as usize] = u;
    }
    plan.forward(&w)
}

/// One finite-slope restriction given the precomputed kernel spectrum.
fn finite_slope_row(
    plan: &DftPlan,
    table: &RootTable,
    g: &Sequence,
    a: u32,
    w0: u32,
    kernel_fft: &[Complex64],
) -> Vec<Complex64> {
    let m = table.modulus();
    let n = m.n();
    let mut v = vec![Complex64::new(0.0, 0.0); n as usize];
    for nn in 0..n {
        let phase = table.at(m.add(m.mul(w0, nn), m.halve(m.mul(a, m.mul(nn, nn)))));
        v[nn as usize] = g.get(nn).conj() * phase;
    }
    let mut spectrum = plan.forward(&v);
    for (s, k) in spectrum.iter_mut().zip(kernel_fft.iter()) {
        *s *= k;
    }
    let corr = plan.inverse(&spectrum);
    (0..n)
        .map(|t| table.at(m.neg(m.halve(m.mul(w0, t)))) * corr[t as usize])
        .collect()
}

// ---------------------------------------------------------------------------
// Full matrix
// ---------------------------------------------------------------------------

/// The full `N x N` ambiguity matrix, indexed by `(tau, omega)`.
#[derive(Clone, Debug)]
pub struct AmbiguityMatrix {
    m: Modulus,
    /// Row-major by `tau`: `values[tau * N + omega]`.
    values: Vec<Complex64>,
}

impl AmbiguityMatrix {
    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.m
    }

    #[inline]
    pub fn entry(&self, p: PlanePoint) -> Complex64 {
        self.values[(p.tau as usize) * self.m.n() as usize + p.omega as usize]
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// All entries as `(point, value)` pairs, `tau`-major.
    pub fn entries(&self) -> impl Iterator<Item = (PlanePoint, Complex64)> + '_ {
        let n = self.m.n();
        self.values.iter().enumerate().map(move |(i, &v)| {
            (
                PlanePoint {
                    tau: i as u32 / n,
                    omega: i as u32 % n,
                },
                v,
            )
        })
    }
}

/// Computes every ambiguity value in `O(N^2 log N)` by sweeping the `N`
/// constant-Doppler rows (the slope-0 shifted lines, which tile the plane),
/// sharing one DFT plan and one kernel spectrum across rows.
pub fn ambiguity_full(f: &Sequence, g: &Sequence) -> Result<AmbiguityMatrix, SignalError> {
    let m = f.modulus();
    if m != g.modulus() {
        return Err(SignalError::ModulusMismatch {
            left: m.n(),
            right: g.modulus().n(),
        });
    }
    let n = m.n() as usize;
    let plan = DftPlan::new(n);
    let table = RootTable::new(m);
    let kernel_fft = reversed_premultiplied_fft(&plan, &table, f, 0);
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    for w0 in 0..m.n() {
        let row = finite_slope_row(&plan, &table, g, 0, w0, &kernel_fft);
        for (t, v) in row.into_iter().enumerate() {
            values[t * n + w0 as usize] = v;
        }
    }
    Ok(AmbiguityMatrix { m, values })
}

// ---------------------------------------------------------------------------
// Algebraic self-checks
// ---------------------------------------------------------------------------

/// Residual of the exchange rule
/// `pi(p) pi(q) = e(omega_p tau_q - tau_p omega_q) pi(q) pi(p)`
/// applied to `f`: the largest entrywise deviation between the two sides.
pub fn commutation_check(p: PlanePoint, q: PlanePoint, f: &Sequence) -> f64 {
    let m = f.modulus();
    let lhs = heisenberg_apply(p, &heisenberg_apply(q, f));
    let mut rhs = heisenberg_apply(q, &heisenberg_apply(p, f));
    let phase = crate::signal::root_of_unity(m, i64::from(symplectic(m, q, p)));
    for v in rhs.values_mut() {
        *v *= phase;
    }
    lhs.max_abs_diff(&rhs)
}

/// Residual of the eigenfunction law: for `l` on the chirp's line,
/// `pi(l) C = psi(l) C` where `psi` is the chirp's character.  Errors if
/// `l` is off the line.
pub fn eigenfunction_check(m: Modulus, id: ChirpId, l: PlanePoint) -> Result<f64, SignalError> {
    let psi = Character::of(id);
    let eig = psi.eval(m, l)?;
    let c = chirp(m, id);
    let shifted = heisenberg_apply(l, &c);
    let mut scaled = c;
    for v in scaled.values_mut() {
        *v *= eig;
    }
    Ok(shifted.max_abs_diff(&scaled))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

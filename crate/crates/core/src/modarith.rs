//! Arithmetic mod an odd prime `N` and the incidence geometry of the
//! delay-Doppler plane `Z_N x Z_N`.
//!
//! Through the origin there are exactly `N + 1` lines: one of finite slope
//! `a` for each `a` in `Z_N`, written `{(t, a*t)}`, plus the vertical line
//! `{(0, w)}` of infinite slope.  Every plane translate of such a line has a
//! canonical description — finite-slope lines are shifted vertically, the
//! vertical line horizontally — which makes equality, membership, and
//! intersection O(1) checks.

use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::randext::uniform_below;

// ---------------------------------------------------------------------------
// Modulus
// ---------------------------------------------------------------------------

/// Errors from [`Modulus::new`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModulusError {
    /// The proposed modulus is not an odd prime.
    NotOddPrime(u32),
    /// The proposed modulus does not fit the supported range (`< 2^31`).
    TooLarge(u32),
}

impl fmt::Display for ModulusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulusError::NotOddPrime(n) => write!(f, "modulus {n} is not an odd prime"),
            ModulusError::TooLarge(n) => write!(f, "modulus {n} exceeds the supported range (< 2^31)"),
        }
    }
}

impl core::error::Error for ModulusError {}

/// An odd prime modulus `N`, validated at construction.
///
/// All residues handled by this type are canonical, i.e. in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Modulus {
    n: u32,
}

impl Modulus {
    /// Validates that `n` is an odd prime below `2^31` (deterministic
    /// Miller-Rabin; the witness set {2, 3, 5, 7} is exact in this range).
    pub fn new(n: u32) -> Result<Self, ModulusError> {
        if n >= 1 << 31 {
            return Err(ModulusError::TooLarge(n));
        }
        if !is_odd_prime(n) {
            return Err(ModulusError::NotOddPrime(n));
        }
        Ok(Modulus { n })
    }

    /// The modulus value `N`.
    #[inline]
    pub fn n(self) -> u32 {
        self.n
    }

    /// `N` as a float, for threshold formulas.
    #[inline]
    pub fn nf(self) -> f64 {
        f64::from(self.n)
    }

    /// The inverse of 2 mod `N`, namely `(N + 1) / 2`.
    #[inline]
    pub fn inv_two(self) -> u32 {
        (self.n + 1) / 2
    }

    /// Canonical residue of an arbitrary signed integer.
    #[inline]
    pub fn reduce_i64(self, t: i64) -> u32 {
        let n = i64::from(self.n);
        (((t % n) + n) % n) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.n && b < self.n);
        let s = u64::from(a) + u64::from(b);
        (s % u64::from(self.n)) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.n && b < self.n);
        let s = u64::from(a) + u64::from(self.n) - u64::from(b);
        (s % u64::from(self.n)) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        debug_assert!(a < self.n);
        if a == 0 {
            0
        } else {
            self.n - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.n && b < self.n);
        (u64::from(a) * u64::from(b) % u64::from(self.n)) as u32
    }

    /// `a^e mod N` by square-and-multiply.
    pub fn pow(self, a: u32, mut e: u32) -> u32 {
        debug_assert!(a < self.n);
        let n = u64::from(self.n);
        let mut base = u64::from(a);
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % n;
            }
            base = base * base % n;
            e >>= 1;
        }
        acc as u32
    }

    /// Multiplicative inverse of a nonzero residue (Fermat: `a^(N-2)`).
    #[inline]
    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(a != 0, "zero has no multiplicative inverse");
        self.pow(a, self.n - 2)
    }

    /// `2^{-1} * a mod N`, the halving that appears in chirp phases.
    #[inline]
    pub fn halve(self, a: u32) -> u32 {
        self.mul(self.inv_two(), a)
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.n)
    }
}

fn is_odd_prime(n: u32) -> bool {
    if n < 3 || n % 2 == 0 {
        return false;
    }
    let n64 = u64::from(n);
    let mut d = n64 - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7] {
        if a % n64 == 0 {
            continue;
        }
        let mut x = pow_mod_u64(a, d, n64);
        if x == 1 || x == n64 - 1 {
            continue;
        }
        for _ in 1..s {
            x = x * x % n64;
            if x == n64 - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pow_mod_u64(mut base: u64, mut e: u64, m: u64) -> u64 {
    base %= m;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// A point `(tau, omega)` of the delay-Doppler plane, stored as canonical
/// residues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlanePoint {
    pub tau: u32,
    pub omega: u32,
}

impl PlanePoint {
    /// Builds a point, reducing both coordinates mod `N`.
    #[inline]
    pub fn new(m: Modulus, tau: i64, omega: i64) -> Self {
        PlanePoint {
            tau: m.reduce_i64(tau),
            omega: m.reduce_i64(omega),
        }
    }

    #[inline]
    pub fn origin() -> Self {
        PlanePoint { tau: 0, omega: 0 }
    }

    #[inline]
    pub fn is_origin(self) -> bool {
        self.tau == 0 && self.omega == 0
    }

    #[inline]
    pub fn add(self, m: Modulus, other: PlanePoint) -> PlanePoint {
        PlanePoint {
            tau: m.add(self.tau, other.tau),
            omega: m.add(self.omega, other.omega),
        }
    }

    #[inline]
    pub fn sub(self, m: Modulus, other: PlanePoint) -> PlanePoint {
        PlanePoint {
            tau: m.sub(self.tau, other.tau),
            omega: m.sub(self.omega, other.omega),
        }
    }

    #[inline]
    pub fn neg(self, m: Modulus) -> PlanePoint {
        PlanePoint {
            tau: m.neg(self.tau),
            omega: m.neg(self.omega),
        }
    }
}

impl fmt::Display for PlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.tau, self.omega)
    }
}

/// The symplectic form `Omega[u, v] = tau_u * omega_v - omega_u * tau_v`
/// mod `N`.  Antisymmetric; zero exactly when `u` and `v` are collinear
/// with the origin.
#[inline]
pub fn symplectic(m: Modulus, u: PlanePoint, v: PlanePoint) -> u32 {
    m.sub(m.mul(u.tau, v.omega), m.mul(u.omega, v.tau))
}

// ---------------------------------------------------------------------------
// Lines through the origin
// ---------------------------------------------------------------------------

/// One of the `N + 1` lines through the origin: finite slope `a` gives
/// `{(t, a*t) : t in Z_N}`, infinite slope gives `{(0, w) : w in Z_N}`.
///
/// The derived ordering sorts finite slopes ascending with the vertical
/// line last, matching the `0..=N` slope indexing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlaneLine {
    Finite(u32),
    Infinite,
}

impl PlaneLine {
    /// Line for slope index `k` in `0..=N` (`k == N` selects the vertical
    /// line).
    #[inline]
    pub fn from_index(m: Modulus, k: u32) -> Self {
        debug_assert!(k <= m.n());
        if k == m.n() {
            PlaneLine::Infinite
        } else {
            PlaneLine::Finite(k)
        }
    }

    /// Slope index in `0..=N`, inverse of [`PlaneLine::from_index`].
    #[inline]
    pub fn index(self, m: Modulus) -> u32 {
        match self {
            PlaneLine::Finite(a) => a,
            PlaneLine::Infinite => m.n(),
        }
    }

    /// All `N + 1` lines through the origin, in slope-index order.
    pub fn enumerate_all(m: Modulus) -> Vec<PlaneLine> {
        (0..=m.n()).map(|k| PlaneLine::from_index(m, k)).collect()
    }

    /// Whether the vector `p` lies on this line through the origin.
    #[inline]
    pub fn contains(self, m: Modulus, p: PlanePoint) -> bool {
        match self {
            PlaneLine::Finite(a) => p.omega == m.mul(a, p.tau),
            PlaneLine::Infinite => p.tau == 0,
        }
    }

    /// This line viewed as a shifted line with zero shift.
    #[inline]
    pub fn through_origin(self) -> ShiftedLine {
        ShiftedLine {
            line: self,
            shift: PlanePoint::origin(),
        }
    }
}

impl fmt::Display for PlaneLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneLine::Finite(a) => write!(f, "{a}"),
            PlaneLine::Infinite => write!(f, "inf"),
        }
    }
}

/// Uniform draw over the `N + 1` lines through the origin.
pub fn random_line<R: RngCore + ?Sized>(m: Modulus, rng: &mut R) -> PlaneLine {
    PlaneLine::from_index(m, uniform_below(rng, m.n() + 1))
}

/// Errors from line sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryError {
    /// More distinct lines were requested than exist (`N + 1`).
    TooManyLines { requested: u32, available: u32 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::TooManyLines { requested, available } => {
                write!(f, "requested {requested} distinct lines but only {available} exist")
            }
        }
    }
}

impl core::error::Error for GeometryError {}

/// Draws `count` distinct lines, uniformly over all such subsets (order is
/// the draw order).  Uses rejection for small counts and a partial shuffle
/// when `count` is a large fraction of `N + 1`.
pub fn random_distinct_lines<R: RngCore + ?Sized>(
    m: Modulus,
    count: u32,
    rng: &mut R,
) -> Result<Vec<PlaneLine>, GeometryError> {
    let available = m.n() + 1;
    if count > available {
        return Err(GeometryError::TooManyLines {
            requested: count,
            available,
        });
    }
    if u64::from(count) * 2 > u64::from(available) {
        // Dense request: partial Fisher-Yates over all slope indices.
        let mut indices: Vec<u32> = (0..available).collect();
        for i in 0..count {
            let j = i + uniform_below(rng, available - i);
            indices.swap(i as usize, j as usize);
        }
        return Ok(indices[..count as usize]
            .iter()
            .map(|&k| PlaneLine::from_index(m, k))
            .collect());
    }
    let mut picked: Vec<PlaneLine> = Vec::with_capacity(count as usize);
    while (picked.len() as u32) < count {
        let candidate = random_line(m, rng);
        if !picked.contains(&candidate) {
            picked.push(candidate);
        }
    }
    Ok(picked)
}

// ---------------------------------------------------------------------------
// Shifted lines
// ---------------------------------------------------------------------------

/// A plane translate `L + v` of a line through the origin, stored in
/// canonical form: finite-slope lines carry a shift `(0, w0)`, the vertical
/// line a shift `(t0, 0)`.  Two translates of the same line by vectors that
/// differ by a line element compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftedLine {
    line: PlaneLine,
    shift: PlanePoint,
}

impl ShiftedLine {
    /// The translate of `line` by `shift`, canonicalized.
    pub fn new(m: Modulus, line: PlaneLine, shift: PlanePoint) -> Self {
        let canonical = match line {
            PlaneLine::Finite(a) => PlanePoint {
                tau: 0,
                omega: m.sub(shift.omega, m.mul(a, shift.tau)),
            },
            PlaneLine::Infinite => PlanePoint {
                tau: shift.tau,
                omega: 0,
            },
        };
        ShiftedLine {
            line,
            shift: canonical,
        }
    }

    /// The shifted line with direction `line` passing through `point`.
    /// (Same as [`ShiftedLine::new`]; the name documents intent at call
    /// sites that think of `point` as lying on the result.)
    #[inline]
    pub fn through(m: Modulus, line: PlaneLine, point: PlanePoint) -> Self {
        ShiftedLine::new(m, line, point)
    }

    #[inline]
    pub fn line(self) -> PlaneLine {
        self.line
    }

    /// The canonical shift vector.
    #[inline]
    pub fn shift(self) -> PlanePoint {
        self.shift
    }

    /// O(1) membership test.
    #[inline]
    pub fn contains(self, m: Modulus, p: PlanePoint) -> bool {
        match self.line {
            PlaneLine::Finite(a) => p.omega == m.add(m.mul(a, p.tau), self.shift.omega),
            PlaneLine::Infinite => p.tau == self.shift.tau,
        }
    }

    /// The `t`-th point in the stable enumeration used by [`line_points`]:
    /// finite slope `a` yields `(t, a*t + w0)`, the vertical line `(t0, t)`.
    #[inline]
    pub fn point_at(self, m: Modulus, t: u32) -> PlanePoint {
        debug_assert!(t < m.n());
        match self.line {
            PlaneLine::Finite(a) => PlanePoint {
                tau: t,
                omega: m.add(m.mul(a, t), self.shift.omega),
            },
            PlaneLine::Infinite => PlanePoint {
                tau: self.shift.tau,
                omega: t,
            },
        }
    }

    /// Index of `p` in the [`line_points`] enumeration, if `p` lies on the
    /// line: the delay coordinate for finite slopes, the Doppler coordinate
    /// for the vertical line.
    #[inline]
    pub fn index_of(self, m: Modulus, p: PlanePoint) -> Option<u32> {
        if !self.contains(m, p) {
            return None;
        }
        Some(match self.line {
            PlaneLine::Finite(_) => p.tau,
            PlaneLine::Infinite => p.omega,
        })
    }
}

impl fmt::Display for ShiftedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L[{}]+{}", self.line, self.shift)
    }
}

/// The `N` points of a shifted line, in the stable order of
/// [`ShiftedLine::point_at`].
pub fn line_points(m: Modulus, sl: ShiftedLine) -> Vec<PlanePoint> {
    (0..m.n()).map(|t| sl.point_at(m, t)).collect()
}

/// Result of intersecting two shifted lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Intersection {
    /// Distinct directions: exactly one common point.
    Point(PlanePoint),
    /// Same direction, different translates: no common point.
    Disjoint,
    /// The same shifted line.
    Identical,
}

/// Intersects two shifted lines in O(1).
pub fn intersect(m: Modulus, x: ShiftedLine, y: ShiftedLine) -> Intersection {
    use PlaneLine::{Finite, Infinite};
    match (x.line, y.line) {
        (Finite(a), Finite(b)) if a == b => {
            if x.shift == y.shift {
                Intersection::Identical
            } else {
                Intersection::Disjoint
            }
        }
        (Infinite, Infinite) => {
            if x.shift == y.shift {
                Intersection::Identical
            } else {
                Intersection::Disjoint
            }
        }
        (Finite(a), Finite(b)) => {
            // a*t + w0x = b*t + w0y  =>  t = (w0y - w0x) / (a - b)
            let t = m.mul(
                m.sub(y.shift.omega, x.shift.omega),
                m.inv(m.sub(a, b)),
            );
            Intersection::Point(x.point_at(m, t))
        }
        (Finite(_), Infinite) => Intersection::Point(x.point_at(m, y.shift.tau)),
        (Infinite, Finite(_)) => match intersect(m, y, x) {
            Intersection::Point(p) => Intersection::Point(p),
            other => other,
        },
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

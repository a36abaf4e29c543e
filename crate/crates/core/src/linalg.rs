//! Fixed-size 3×3 complex algebra and density-matrix checks.
//!
//! Basis convention, used by every other module: index 0 is level 1 (the
//! lower hyperfine level that the optical pulse couples to), index 1 is
//! level 2 (the other RF level), index 2 is level 3 (the short-lived
//! optically excited level, which decays only to level 1).

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// Tolerance applied to the Hermiticity precondition of
/// [`min_eigenvalue_hermitian`].
pub const HERMITIAN_PRECONDITION_TOL: f64 = 1e-10;

/// Acceptance thresholds for [`DensityMatrix3`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-9,
            positivity: 1e-9,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Matrix3 {
    pub entries: [[Complex; 3]; 3],
}

impl Matrix3 {
    pub const fn zero() -> Self {
        Self { entries: [[ZERO; 3]; 3] }
    }

    pub fn identity() -> Self {
        Self::diag([1.0, 1.0, 1.0])
    }

    pub fn new(entries: [[Complex; 3]; 3]) -> Self {
        Self { entries }
    }

    pub fn from_real(entries: [[f64; 3]; 3]) -> Self {
        let mut m = Self::zero();
        for (i, row) in entries.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.entries[i][j] = Complex::new(x, 0.0);
            }
        }
        m
    }

    pub fn diag(d: [f64; 3]) -> Self {
        let mut m = Self::zero();
        for (i, &x) in d.iter().enumerate() {
            m.entries[i][i] = Complex::new(x, 0.0);
        }
        m
    }

    /// The outer product `|i⟩⟨j|` (zero-based indices).
    pub fn ket_bra(i: usize, j: usize) -> Self {
        let mut m = Self::zero();
        m.entries[i][j] = ONE;
        m
    }

    pub fn adjoint(&self) -> Self {
        adjoint(self)
    }

    pub fn trace(&self) -> Complex {
        trace(self)
    }

    pub fn scale(&self, s: Complex) -> Self {
        let mut out = *self;
        out.entries.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        let mut out = *self;
        out.entries.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise `|m[i][j] − conj(m[j][i])|`.
    pub fn hermitian_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in i..3 {
                let d = (self.entries[i][j] - self.entries[j][i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn determinant(&self) -> Complex {
        let m = &self.entries;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

impl fmt::Debug for Matrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix3 [")?;
        for row in &self.entries {
            writeln!(f, "  {:?}", row)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.entries[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.entries[i][j]
    }
}

impl Add for Matrix3 {
    type Output = Matrix3;
    fn add(self, rhs: Matrix3) -> Matrix3 {
        mat_add(&self, &rhs)
    }
}

impl Sub for Matrix3 {
    type Output = Matrix3;
    fn sub(self, rhs: Matrix3) -> Matrix3 {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.entries[i][j] -= rhs.entries[i][j];
            }
        }
        out
    }
}

impl Neg for Matrix3 {
    type Output = Matrix3;
    fn neg(self) -> Matrix3 {
        self.scale_re(-1.0)
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: Matrix3) -> Matrix3 {
        mat_mul(&self, &rhs)
    }
}

pub fn mat_add(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out.entries[i][j] += b.entries[i][j];
        }
    }
    out
}

pub fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = Matrix3::zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = ZERO;
            for k in 0..3 {
                acc += a.entries[i][k] * b.entries[k][j];
            }
            out.entries[i][j] = acc;
        }
    }
    out
}

pub fn adjoint(a: &Matrix3) -> Matrix3 {
    let mut out = Matrix3::zero();
    for i in 0..3 {
        for j in 0..3 {
            out.entries[j][i] = a.entries[i][j].conj();
        }
    }
    out
}

pub fn trace(a: &Matrix3) -> Complex {
    a.entries[0][0] + a.entries[1][1] + a.entries[2][2]
}

/// All three eigenvalues of a Hermitian matrix, ascending.
///
/// Trigonometric solution of the characteristic cubic: shift by the mean
/// eigenvalue `q`, scale by `p` so the shifted matrix `B` has eigenvalues
/// `2cos(φ + 2πk/3)` with `cos 3φ = det(B)/2`. Only the root farthest from
/// the middle one is taken from the cubic; near a double root `acos` loses
/// half the digits, so the remaining pair comes from the 2×2 block of `A`
/// on the complement of the isolated eigenvector.
pub fn eigenvalues_hermitian(a: &Matrix3) -> Result<[f64; 3]> {
    let residual = a.hermitian_residual();
    if !(residual <= HERMITIAN_PRECONDITION_TOL) {
        return Err(Error::NotHermitian { residual });
    }
    let h = a.hermitian_part();
    let m = &h.entries;
    let d = [m[0][0].re, m[1][1].re, m[2][2].re];
    let off = m[0][1].norm_sqr() + m[0][2].norm_sqr() + m[1][2].norm_sqr();
    let scale = d.iter().map(|x| x.abs()).fold(0.0, f64::max) + off.sqrt();
    if off <= (f64::EPSILON * scale).powi(2) {
        let mut ev = d;
        ev.sort_by(f64::total_cmp);
        return Ok(ev);
    }
    let q = (d[0] + d[1] + d[2]) / 3.0;
    let p2 = d.iter().map(|x| (x - q).powi(2)).sum::<f64>() + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let b = (h - Matrix3::diag([q, q, q])).scale_re(1.0 / p);
    let r = (0.5 * b.determinant().re).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    // r ≥ 0: the largest root is isolated; otherwise the smallest is
    let isolated = if r >= 0.0 {
        q + 2.0 * p * phi.cos()
    } else {
        q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
    };
    let (lo, hi) = match complement_pair(&h, isolated) {
        Some(pair) => pair,
        None => {
            let other = if r >= 0.0 {
                q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
            } else {
                q + 2.0 * p * phi.cos()
            };
            let third = 3.0 * q - isolated - other;
            (other.min(third), other.max(third))
        }
    };
    let mut ev = [isolated, lo, hi];
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

type Vec3 = [Complex; 3];

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(v: &Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `u† H w`.
fn form(h: &Matrix3, u: &Vec3, w: &Vec3) -> Complex {
    let mut acc = ZERO;
    for i in 0..3 {
        for j in 0..3 {
            acc += u[i].conj() * h.entries[i][j] * w[j];
        }
    }
    acc
}

/// Eigenvalues of `h` restricted to the orthogonal complement of the
/// eigenvector belonging to `lambda`, which must be a simple eigenvalue.
fn complement_pair(h: &Matrix3, lambda: f64) -> Option<(f64, f64)> {
    let shifted = *h - Matrix3::diag([lambda; 3]);
    let rows = shifted.entries;
    // null vector of (H − λ): any row pair's cross product, take the largest
    let v = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| cross(&rows[i], &rows[j]))
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))?;
    let nv = norm(&v);
    let row_scale = rows.iter().map(norm).fold(0.0, f64::max);
    if !(nv > 1e3 * f64::EPSILON * row_scale * row_scale) {
        return None;
    }
    let v = v.map(|z| z / nv);

    // u1: the basis vector least aligned with v, orthogonalized
    let k = (0..3).min_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm()))?;
    let mut u1 = [ZERO; 3];
    u1[k] = ONE;
    let overlap = v[k].conj();
    for i in 0..3 {
        u1[i] -= v[i] * overlap;
    }
    let n1 = norm(&u1);
    let u1 = u1.map(|z| z / n1);
    let u2 = cross(&v, &u1).map(|z| z.conj());

    let a11 = form(h, &u1, &u1).re;
    let a22 = form(h, &u2, &u2).re;
    let a12 = form(h, &u1, &u2);
    let mean = 0.5 * (a11 + a22);
    let radius = (0.25 * (a11 - a22).powi(2) + a12.norm_sqr()).sqrt();
    Some((mean - radius, mean + radius))
}

pub fn min_eigenvalue_hermitian(a: &Matrix3) -> Result<f64> {
    eigenvalues_hermitian(a).map(|ev| ev[0])
}

/// Outcome of [`validate_density`]. Never aborts; every field is filled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityReport {
    pub hermitian: bool,
    pub unit_trace: bool,
    pub positive: bool,
    pub hermitian_residual: f64,
    pub trace_residual: f64,
    /// `max(0, −λ_min)`.
    pub positivity_residual: f64,
    pub min_eigenvalue: f64,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.hermitian && self.unit_trace && self.positive
    }
}

pub fn validate_density(rho: &DensityMatrix3) -> ValidityReport {
    validate_matrix(rho.matrix(), &Tolerances::default())
}

pub fn validate_matrix(m: &Matrix3, tol: &Tolerances) -> ValidityReport {
    let hermitian_residual = m.hermitian_residual();
    let trace_residual = (m.trace() - ONE).norm();
    // positivity is judged on the Hermitian part so the report is total
    let min_eigenvalue = eigenvalues_hermitian(&m.hermitian_part())
        .map(|ev| ev[0])
        .unwrap_or(f64::NAN);
    ValidityReport {
        hermitian: hermitian_residual <= tol.hermitian,
        unit_trace: trace_residual <= tol.trace,
        positive: min_eigenvalue >= -tol.positivity,
        hermitian_residual,
        trace_residual,
        positivity_residual: (-min_eigenvalue).max(0.0),
        min_eigenvalue,
    }
}

/// A 3×3 density matrix ρ. Construction through [`DensityMatrix3::new`]
/// enforces Hermiticity, unit trace and positivity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix3 {
    m: Matrix3,
}

impl DensityMatrix3 {
    pub fn new(m: Matrix3) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: Matrix3, tol: &Tolerances) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFinite);
        }
        let report = validate_matrix(&m, tol);
        if report.is_valid() {
            Ok(Self { m })
        } else {
            Err(Error::InvalidDensity(report))
        }
    }

    /// Wraps `m` without checks; use [`validate_density`] to inspect it.
    pub fn from_matrix_unchecked(m: Matrix3) -> Self {
        Self { m }
    }

    /// The pure state `|level⟩⟨level|` (zero-based).
    pub fn pure(level: usize) -> Self {
        Self { m: Matrix3::ket_bra(level, level) }
    }

    /// `(|0⟩ + |1⟩)/√2`, the equal superposition of levels 1 and 2.
    pub fn rf_superposition() -> Self {
        Self {
            m: Matrix3::from_real([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]]),
        }
    }

    pub fn matrix(&self) -> &Matrix3 {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix3 {
        self.m
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.m.entries[0][0].re, self.m.entries[1][1].re, self.m.entries[2][2].re]
    }

    pub fn element(&self, i: usize, j: usize) -> Complex {
        self.m.entries[i][j]
    }

    pub fn trace_error(&self) -> f64 {
        (self.m.trace() - ONE).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        eigenvalues_hermitian(&self.m.hermitian_part())
            .map(|ev| ev[0])
            .unwrap_or(f64::NAN)
    }
}

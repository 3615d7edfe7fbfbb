//! Dense 2×2 complex linear algebra for two-level systems.
//!
//! Basis convention: `|1⟩ = (1, 0)ᵀ` and `|0⟩ = (0, 1)ᵀ`, so that
//! `σ_z|1⟩ = |1⟩`. Every other module is built on [`ComplexMat2`] and
//! [`ComplexVec2`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance on |b| − 1 accepted by [`state_of`].
pub const BLOCH_RADIUS_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("Bloch vector length {0} exceeds 1")]
    BlochOutsideBall(f64),
    #[error("density matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace {0} differs from 1")]
    BadTrace(f64),
}

/// Two-component complex vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexVec2 {
    pub c1: C64,
    pub c2: C64,
}

impl ComplexVec2 {
    pub const fn new(c1: C64, c2: C64) -> Self {
        Self { c1, c2 }
    }

    pub fn real(a: f64, b: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    /// `|1⟩`
    pub fn up() -> Self {
        Self::real(1.0, 0.0)
    }

    /// `|0⟩`
    pub fn down() -> Self {
        Self::real(0.0, 1.0)
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &ComplexVec2) -> C64 {
        self.c1.conj() * other.c1 + self.c2.conj() * other.c2
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.c1 * s, self.c2 * s)
    }

    /// |self⟩⟨other|
    pub fn outer(&self, other: &ComplexVec2) -> ComplexMat2 {
        ComplexMat2::new(
            self.c1 * other.c1.conj(),
            self.c1 * other.c2.conj(),
            self.c2 * other.c1.conj(),
            self.c2 * other.c2.conj(),
        )
    }

    /// |self⟩⟨self|
    pub fn projector(&self) -> ComplexMat2 {
        self.outer(self)
    }
}

impl Add for ComplexVec2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.c1 + o.c1, self.c2 + o.c2)
    }
}

impl Sub for ComplexVec2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.c1 - o.c1, self.c2 - o.c2)
    }
}

/// Dense 2×2 complex matrix, entries stored row-major as `[[a, b], [c, d]]`.
#[derive(Clone, Copy, PartialEq)]
pub struct ComplexMat2 {
    pub m: [[C64; 2]; 2],
}

impl fmt::Debug for ComplexMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

pub const IDENTITY: ComplexMat2 = ComplexMat2 {
    m: [[ONE, ZERO], [ZERO, ONE]],
};
pub const SIGMA_X: ComplexMat2 = ComplexMat2 {
    m: [[ZERO, ONE], [ONE, ZERO]],
};
pub const SIGMA_Y: ComplexMat2 = ComplexMat2 {
    m: [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]],
};
pub const SIGMA_Z: ComplexMat2 = ComplexMat2 {
    m: [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]],
};

impl ComplexMat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    /// `x σ_x + y σ_y + z σ_z`
    pub fn pauli_combination(x: f64, y: f64, z: f64) -> Self {
        Self::new(
            C64::new(z, 0.0),
            C64::new(x, -y),
            C64::new(x, y),
            C64::new(-z, 0.0),
        )
    }

    pub fn dagger(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, v: &ComplexVec2) -> ComplexVec2 {
        ComplexVec2::new(
            self.m[0][0] * v.c1 + self.m[0][1] * v.c2,
            self.m[1][0] * v.c1 + self.m[1][1] * v.c2,
        )
    }

    /// Columns as vectors.
    pub fn column(&self, j: usize) -> ComplexVec2 {
        ComplexVec2::new(self.m[0][j], self.m[1][j])
    }

    pub fn from_columns(a: &ComplexVec2, b: &ComplexVec2) -> Self {
        Self::new(a.c1, b.c1, a.c2, b.c2)
    }

    /// ⟨u|self|v⟩
    pub fn sandwich(&self, u: &ComplexVec2, v: &ComplexVec2) -> C64 {
        u.inner(&self.apply(v))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMat2) -> f64 {
        let mut out = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                out = out.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        out
    }

    /// ‖m − m†‖_F
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.dagger()).frobenius_norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// ‖m†m − I‖_F
    pub fn unitarity_defect(&self) -> f64 {
        (self.dagger() * *self - IDENTITY).frobenius_norm()
    }

    /// Eigen-decomposition of the Hermitian part of `self`. Eigenvalues are
    /// returned in ascending order together with orthonormal eigenvectors.
    pub fn hermitian_eigen(&self) -> ([f64; 2], [ComplexVec2; 2]) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let half_gap = 0.5 * (a - d);
        let r = (half_gap * half_gap + b.norm_sqr()).sqrt();
        let vals = [mean - r, mean + r];
        if r == 0.0 {
            return (vals, [ComplexVec2::up(), ComplexVec2::down()]);
        }
        // Bloch direction of the upper eigenvector: n = (Re b, −Im b, (a−d)/2)/r
        let nz = half_gap / r;
        let phase = if b.norm() > 0.0 {
            b.conj() / b.norm()
        } else {
            ONE
        };
        let upper = if nz >= 0.0 {
            let c = ((1.0 + nz) / 2.0).sqrt();
            ComplexVec2::new(C64::new(c, 0.0), phase * (b.norm() / (2.0 * r * c)))
        } else {
            let s = ((1.0 - nz) / 2.0).sqrt();
            ComplexVec2::new(phase.conj() * (b.norm() / (2.0 * r * s)), C64::new(s, 0.0))
        };
        let upper = upper.normalized();
        let lower = ComplexVec2::new(-upper.c2.conj(), upper.c1.conj());
        (vals, [lower, upper])
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = 0.5 * (self.m[0][1] + self.m[1][0].conj());
        let mean = 0.5 * (a + d);
        let half_gap = 0.5 * (a - d);
        let r = (half_gap * half_gap + b.norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
}

impl Add for ComplexMat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut out = self;
        out += o;
        out
    }
}

impl AddAssign for ComplexMat2 {
    fn add_assign(&mut self, o: Self) {
        for i in 0..2 {
            for j in 0..2 {
                self.m[i][j] += o.m[i][j];
            }
        }
    }
}

impl Sub for ComplexMat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= o.m[i][j];
            }
        }
        out
    }
}

impl Neg for ComplexMat2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_real(-1.0)
    }
}

impl Mul for ComplexMat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

pub fn dagger(m: &ComplexMat2) -> ComplexMat2 {
    m.dagger()
}

/// `ab − ba`
pub fn commutator(a: &ComplexMat2, b: &ComplexMat2) -> ComplexMat2 {
    *a * *b - *b * *a
}

/// `ab + ba`
pub fn anticommutator(a: &ComplexMat2, b: &ComplexMat2) -> ComplexMat2 {
    *a * *b + *b * *a
}

/// Density matrix of a two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub mat: ComplexMat2,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-10) and unit trace (1e-8).
    pub fn new(mat: ComplexMat2) -> Result<Self, LinalgError> {
        let herm = mat.hermiticity_defect();
        if herm > 1e-10 {
            return Err(LinalgError::NotHermitian(herm));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(LinalgError::BadTrace(tr.re));
        }
        Ok(Self { mat })
    }

    /// Wraps without validation; used for integrator output that is
    /// monitored rather than enforced.
    pub fn from_raw(mat: ComplexMat2) -> Self {
        Self { mat }
    }

    pub fn pure(psi: &ComplexVec2) -> Self {
        Self {
            mat: psi.normalized().projector(),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            mat: IDENTITY.scale_real(0.5),
        }
    }

    /// ⟨1|ρ|1⟩
    pub fn rho11(&self) -> f64 {
        self.mat.m[0][0].re
    }

    pub fn trace_error(&self) -> f64 {
        (self.mat.trace() - ONE).norm()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.mat.hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.mat.hermitian_eigenvalues()[0]
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let d = self.mat - other.mat;
        let ev = d.hermitian_eigenvalues();
        0.5 * (ev[0].abs() + ev[1].abs())
    }

    pub fn to_array(&self) -> [f64; 8] {
        let m = &self.mat.m;
        [
            m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im, m[1][0].re, m[1][0].im, m[1][1].re,
            m[1][1].im,
        ]
    }

    pub fn from_array(y: &[f64; 8]) -> Self {
        Self::from_raw(ComplexMat2::new(
            C64::new(y[0], y[1]),
            C64::new(y[2], y[3]),
            C64::new(y[4], y[5]),
            C64::new(y[6], y[7]),
        ))
    }
}

/// Bloch vector `r_n = Tr(ρ σ_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl BlochVector {
    pub const fn new(rx: f64, ry: f64, rz: f64) -> Self {
        Self { rx, ry, rz }
    }

    pub fn norm(&self) -> f64 {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }

    pub fn max_abs_diff(&self, other: &BlochVector) -> f64 {
        (self.rx - other.rx)
            .abs()
            .max((self.ry - other.ry).abs())
            .max((self.rz - other.rz).abs())
    }
}

pub fn bloch_of(rho: &DensityMatrix) -> BlochVector {
    let t = |s: &ComplexMat2| (rho.mat * *s).trace().re;
    BlochVector::new(t(&SIGMA_X), t(&SIGMA_Y), t(&SIGMA_Z))
}

/// `ρ = ½(I + b·σ)`; rejects |b| > 1 + 1e-7.
pub fn state_of(b: &BlochVector) -> Result<DensityMatrix, LinalgError> {
    let n = b.norm();
    if n > 1.0 + BLOCH_RADIUS_TOL {
        return Err(LinalgError::BlochOutsideBall(n));
    }
    Ok(DensityMatrix::from_raw(
        (IDENTITY + ComplexMat2::pauli_combination(b.rx, b.ry, b.rz)).scale_real(0.5),
    ))
}

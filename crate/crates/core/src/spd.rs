//! Pointwise kernels for symmetric 3x3 matrices.
//!
//! Everything here is a pure function of its inputs. Matrix functions
//! (inverse, real powers, logarithm, exponential) are evaluated spectrally
//! through [`eig_sym3`].

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::SpdError;

/// Symmetric 3x3 real matrix stored by its six independent entries.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymTensor3 {
    pub a11: f64,
    pub a22: f64,
    pub a33: f64,
    pub a12: f64,
    pub a13: f64,
    pub a23: f64,
}

/// General (not necessarily symmetric) 3x3 matrix, row-major.
///
/// Used for velocity gradients `G[i][j] = d v_i / d x_j` and for products of
/// symmetric matrices that are only symmetric in exact arithmetic.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

/// Eigen-decomposition of a [`SymTensor3`]: ascending eigenvalues with the
/// matching orthonormal eigenvectors stored as columns of `vectors`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectrum3 {
    pub values: [f64; 3],
    /// `vectors[r][c]` is component `r` of eigenvector `c`.
    pub vectors: [[f64; 3]; 3],
}

impl SymTensor3 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Self = Self::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(a11: f64, a22: f64, a33: f64, a12: f64, a13: f64, a23: f64) -> Self {
        Self {
            a11,
            a22,
            a33,
            a12,
            a13,
            a23,
        }
    }

    #[inline]
    pub const fn diag(d1: f64, d2: f64, d3: f64) -> Self {
        Self::new(d1, d2, d3, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Entries in the fixed order `(a11, a22, a33, a12, a13, a23)`.
    #[inline]
    pub fn to_array(&self) -> [f64; 6] {
        [self.a11, self.a22, self.a33, self.a12, self.a13, self.a23]
    }

    #[inline]
    pub fn from_array(c: [f64; 6]) -> Self {
        Self::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            (2, 2) => self.a33,
            (0, 1) | (1, 0) => self.a12,
            (0, 2) | (2, 0) => self.a13,
            (1, 2) | (2, 1) => self.a23,
            _ => panic!("index ({i}, {j}) out of range for a 3x3 matrix"),
        }
    }

    /// Symmetric part `(M + M^T) / 2` of a general matrix.
    #[inline]
    pub fn sym_part(m: &Mat3) -> Self {
        let m = &m.0;
        Self::new(
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        )
    }

    #[inline]
    pub fn to_mat(&self) -> Mat3 {
        Mat3([
            [self.a11, self.a12, self.a13],
            [self.a12, self.a22, self.a23],
            [self.a13, self.a23, self.a33],
        ])
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22 + self.a33
    }

    /// Squared Frobenius norm `|A|^2`.
    #[inline]
    pub fn norm_sq(&self) -> f64 {
        frob(self, self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a11 * (self.a22 * self.a33 - self.a23 * self.a23)
            - self.a12 * (self.a12 * self.a33 - self.a23 * self.a13)
            + self.a13 * (self.a12 * self.a23 - self.a22 * self.a13)
    }

    #[inline]
    pub fn mul_vec(&self, z: [f64; 3]) -> [f64; 3] {
        [
            self.a11 * z[0] + self.a12 * z[1] + self.a13 * z[2],
            self.a12 * z[0] + self.a22 * z[1] + self.a23 * z[2],
            self.a13 * z[0] + self.a23 * z[1] + self.a33 * z[2],
        ]
    }

    /// Quadratic form `A z . z`.
    #[inline]
    pub fn quad_form(&self, z: [f64; 3]) -> f64 {
        let az = self.mul_vec(z);
        az[0] * z[0] + az[1] * z[1] + az[2] * z[2]
    }

    /// `A A`, which is symmetric for symmetric `A`.
    #[inline]
    pub fn square(&self) -> Self {
        Self::sym_part(&self.matmul(self))
    }

    /// Full product `A B` (symmetric only when `A` and `B` commute).
    #[inline]
    pub fn matmul(&self, other: &SymTensor3) -> Mat3 {
        self.to_mat().mul(&other.to_mat())
    }

    /// `(A B + B A) / 2`, the symmetrized product.
    #[inline]
    pub fn sym_product(&self, other: &SymTensor3) -> Self {
        Self::sym_part(&self.matmul(other))
    }

    /// `A B A` for symmetric `A`, `B`; re-symmetrized.
    #[inline]
    pub fn congruence(&self, inner: &SymTensor3) -> Self {
        let a = self.to_mat();
        Self::sym_part(&a.mul(&inner.to_mat()).mul(&a))
    }

    /// Reassembles `Q diag(f(lambda)) Q^T` from a spectrum.
    pub fn from_spectrum(values: [f64; 3], q: &[[f64; 3]; 3]) -> Self {
        let mut out = [0.0; 6];
        let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        for (slot, &(r, c)) in pairs.iter().enumerate() {
            out[slot] = (0..3).map(|k| q[r][k] * values[k] * q[c][k]).sum();
        }
        Self::from_array(out)
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    #[inline]
    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl Add for SymTensor3 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(
            self.a11 + o.a11,
            self.a22 + o.a22,
            self.a33 + o.a33,
            self.a12 + o.a12,
            self.a13 + o.a13,
            self.a23 + o.a23,
        )
    }
}

impl Sub for SymTensor3 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.a11 - o.a11,
            self.a22 - o.a22,
            self.a33 - o.a33,
            self.a12 - o.a12,
            self.a13 - o.a13,
            self.a23 - o.a23,
        )
    }
}

impl Neg for SymTensor3 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor3 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(
            self.a11 * s,
            self.a22 * s,
            self.a33 * s,
            self.a12 * s,
            self.a13 * s,
            self.a23 * s,
        )
    }
}

impl Mul<SymTensor3> for f64 {
    type Output = SymTensor3;
    #[inline]
    fn mul(self, t: SymTensor3) -> SymTensor3 {
        t * self
    }
}

impl AddAssign for SymTensor3 {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for SymTensor3 {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl MulAssign<f64> for SymTensor3 {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        *self = *self * s;
    }
}

impl Mat3 {
    pub const ZERO: Self = Mat3([[0.0; 3]; 3]);

    #[inline]
    pub fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = m[j][i];
            }
        }
        Mat3(t)
    }

    #[inline]
    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        Mat3(r)
    }

    #[inline]
    pub fn add(&self, o: &Mat3) -> Mat3 {
        let mut r = self.0;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += o.0[i][j];
            }
        }
        Mat3(r)
    }

    #[inline]
    pub fn sub(&self, o: &Mat3) -> Mat3 {
        self.add(&o.scale(-1.0))
    }

    #[inline]
    pub fn scale(&self, s: f64) -> Mat3 {
        let mut r = self.0;
        r.iter_mut().flatten().for_each(|v| *v *= s);
        Mat3(r)
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// `sum_ij M_ij N_ij`.
    #[inline]
    pub fn frob(&self, o: &Mat3) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(o.0.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.frob(self)
    }

    /// Antisymmetric part `(M - M^T) / 2`.
    #[inline]
    pub fn antisym_part(&self) -> Mat3 {
        self.sub(&self.transpose()).scale(0.5)
    }
}

/// Frobenius inner product `sum_ij A_ij B_ij`.
#[inline]
pub fn frob(a: &SymTensor3, b: &SymTensor3) -> f64 {
    a.a11 * b.a11
        + a.a22 * b.a22
        + a.a33 * b.a33
        + 2.0 * (a.a12 * b.a12 + a.a13 * b.a13 + a.a23 * b.a23)
}

const JACOBI_DISCRIMINANT_RATIO: f64 = 1e-14;

/// Eigen-decomposition of a symmetric 3x3 matrix.
///
/// The closed-form trigonometric root of the characteristic cubic locates the
/// best-separated eigenvalue; its eigenvector comes from the largest cross
/// product of rows of `A - lambda I`, and the remaining pair is resolved by an
/// exact plane rotation in the orthogonal complement. When the discriminant
/// `|(l1-l2)(l2-l3)(l1-l3)|` drops below `1e-14 |A|_F^3` the cyclic Jacobi
/// iteration takes over.
pub fn eig_sym3(a: &SymTensor3) -> Spectrum3 {
    let scale = a.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return Spectrum3 {
            values: [scale * 0.0; 3],
            vectors: Mat3::identity().0,
        };
    }
    let off = a.a12 * a.a12 + a.a13 * a.a13 + a.a23 * a.a23;
    if off == 0.0 {
        return diagonal_spectrum(a);
    }

    let m = *a * (1.0 / scale);
    let q = m.trace() / 3.0;
    let (b11, b22, b33) = (m.a11 - q, m.a22 - q, m.a33 - q);
    let off_s = m.a12 * m.a12 + m.a13 * m.a13 + m.a23 * m.a23;
    let p = ((b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * off_s) / 6.0).sqrt();
    let shifted = SymTensor3::new(b11, b22, b33, m.a12, m.a13, m.a23) * (1.0 / p);
    let r = (0.5 * shifted.det()).clamp(-1.0, 1.0);
    let discriminant = p.powi(3) * (108.0 * (1.0 - r * r)).max(0.0).sqrt();
    if discriminant < JACOBI_DISCRIMINANT_RATIO * m.norm_sq().powf(1.5) {
        return jacobi_eigen(a);
    }

    let phi = r.acos() / 3.0;
    // r >= 0: the largest root is the isolated one; otherwise the smallest.
    let isolated = if r >= 0.0 {
        q + 2.0 * p * phi.cos()
    } else {
        q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos()
    };

    let v = null_vector(&m, isolated);
    let (u, w) = complement_basis(v);
    let mu = m.mul_vec(u);
    let mw = m.mul_vec(w);
    let m_uu = dot(u, mu);
    let m_ww = dot(w, mw);
    let m_uw = dot(u, mw);
    let ((l_a, e_a), (l_b, e_b)) = rotate_2x2(m_uu, m_uw, m_ww, u, w);
    let l_iso = dot(v, m.mul_vec(v));

    let mut pairs = [(l_iso, v), (l_a, e_a), (l_b, e_b)];
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut vectors = [[0.0; 3]; 3];
    for (c, (_, vec)) in pairs.iter().enumerate() {
        for r in 0..3 {
            vectors[r][c] = vec[r];
        }
    }
    Spectrum3 {
        values: [pairs[0].0 * scale, pairs[1].0 * scale, pairs[2].0 * scale],
        vectors,
    }
}

fn diagonal_spectrum(a: &SymTensor3) -> Spectrum3 {
    let mut idx = [0usize, 1, 2];
    let d = [a.a11, a.a22, a.a33];
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let mut vectors = [[0.0; 3]; 3];
    for (c, &i) in idx.iter().enumerate() {
        vectors[i][c] = 1.0;
    }
    Spectrum3 {
        values: [d[idx[0]], d[idx[1]], d[idx[2]]],
        vectors,
    }
}

#[inline]
fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit vector spanning the (numerical) null space of `M - lambda I` for a
/// simple eigenvalue.
fn null_vector(m: &SymTensor3, lambda: f64) -> [f64; 3] {
    let r0 = [m.a11 - lambda, m.a12, m.a13];
    let r1 = [m.a12, m.a22 - lambda, m.a23];
    let r2 = [m.a13, m.a23, m.a33 - lambda];
    let c = [cross(r0, r1), cross(r0, r2), cross(r1, r2)];
    let best = c
        .iter()
        .copied()
        .max_by(|x, y| dot(*x, *x).total_cmp(&dot(*y, *y)))
        .expect("three candidates");
    if dot(best, best) == 0.0 {
        [1.0, 0.0, 0.0]
    } else {
        normalize(best)
    }
}

fn complement_basis(v: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let u = if v[0].abs() > v[1].abs() {
        normalize([-v[2], 0.0, v[0]])
    } else {
        normalize([0.0, v[2], -v[1]])
    };
    (u, cross(v, u))
}

/// Diagonalizes the 2x2 block `[[m_uu, m_uw], [m_uw, m_ww]]` expressed in the
/// basis `(u, w)` by one exact Jacobi rotation.
#[allow(clippy::type_complexity)]
fn rotate_2x2(
    m_uu: f64,
    m_uw: f64,
    m_ww: f64,
    u: [f64; 3],
    w: [f64; 3],
) -> ((f64, [f64; 3]), (f64, [f64; 3])) {
    if m_uw == 0.0 {
        return ((m_uu, u), (m_ww, w));
    }
    let tau = (m_ww - m_uu) / (2.0 * m_uw);
    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let e1 = [
        c * u[0] - s * w[0],
        c * u[1] - s * w[1],
        c * u[2] - s * w[2],
    ];
    let e2 = [
        s * u[0] + c * w[0],
        s * u[1] + c * w[1],
        s * u[2] + c * w[2],
    ];
    ((m_uu - t * m_uw, e1), (m_ww + t * m_uw, e2))
}

/// Cyclic Jacobi eigenvalue iteration. Slow but accurate for (nearly)
/// repeated eigenvalues; also used as an independent oracle in tests.
pub fn jacobi_eigen(a: &SymTensor3) -> Spectrum3 {
    let mut m = a.to_mat().0;
    let mut v = Mat3::identity().0;
    let norm_sq = a.norm_sq();
    for _sweep in 0..64 {
        let off = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
        if off <= 1e-36 * norm_sq || off == 0.0 {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let tau = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
            let t = if tau == 0.0 { 1.0 } else { t };
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = t * c;
            for row in m.iter_mut() {
                let (mp, mq) = (row[p], row[q]);
                row[p] = c * mp - s * mq;
                row[q] = s * mp + c * mq;
            }
            for k in 0..3 {
                let (mp, mq) = (m[p][k], m[q][k]);
                m[p][k] = c * mp - s * mq;
                m[q][k] = s * mp + c * mq;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let mut vectors = [[0.0; 3]; 3];
    for (c, &i) in idx.iter().enumerate() {
        for r in 0..3 {
            vectors[r][c] = v[r][i];
        }
    }
    Spectrum3 {
        values: [m[idx[0]][idx[0]], m[idx[1]][idx[1]], m[idx[2]][idx[2]]],
        vectors,
    }
}

/// Minimal eigenvalue, the `Lambda(A)` used by the cut-off and the positivity
/// monitor.
#[inline]
pub fn lambda_min(a: &SymTensor3) -> f64 {
    eig_sym3(a).values[0]
}

impl Spectrum3 {
    /// `Q diag(f(lambda_i)) Q^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymTensor3 {
        let v = self.values;
        SymTensor3::from_spectrum([f(v[0]), f(v[1]), f(v[2])], &self.vectors)
    }

    fn require_positive(&self) -> Result<(), SpdError> {
        if self.values[0] > 0.0 {
            Ok(())
        } else {
            Err(SpdError::SingularMatrix {
                lambda_min: self.values[0],
            })
        }
    }

    /// `A^p`; fails for nonpositive spectra.
    pub fn pow(&self, p: f64) -> Result<SymTensor3, SpdError> {
        self.require_positive()?;
        Ok(self.map(|l| l.powf(p)))
    }

    pub fn inv(&self) -> Result<SymTensor3, SpdError> {
        self.require_positive()?;
        Ok(self.map(|l| 1.0 / l))
    }

    pub fn log(&self) -> Result<SymTensor3, SpdError> {
        self.require_positive()?;
        Ok(self.map(f64::ln))
    }

    /// `ln det A = sum ln lambda_i`.
    pub fn ln_det(&self) -> Result<f64, SpdError> {
        self.require_positive()?;
        Ok(self.values.iter().map(|l| l.ln()).sum())
    }
}

/// Inverse of a positive definite matrix.
pub fn inv(a: &SymTensor3) -> Result<SymTensor3, SpdError> {
    eig_sym3(a).inv()
}

/// Spectral power `A^p`. Integer exponents `p >= 0` accept any symmetric
/// input; `p = 0` and `p = 1` return `I` and `A` exactly.
pub fn pow_sym(a: &SymTensor3, p: f64) -> Result<SymTensor3, SpdError> {
    if p == 0.0 {
        return Ok(SymTensor3::IDENTITY);
    }
    if p == 1.0 {
        return Ok(*a);
    }
    let spec = eig_sym3(a);
    if p.fract() == 0.0 && p > 0.0 {
        let n = p as i32;
        return Ok(spec.map(|l| l.powi(n)));
    }
    spec.pow(p)
}

/// Hencky logarithm: the symmetric `L` with `exp(L) = A`.
pub fn hencky_log(a: &SymTensor3) -> Result<SymTensor3, SpdError> {
    eig_sym3(a).log()
}

/// Spectral matrix exponential of a symmetric matrix.
pub fn exp_sym(a: &SymTensor3) -> SymTensor3 {
    eig_sym3(a).map(f64::exp)
}

/// Re-symmetrizes an almost-symmetric product: `(M + M^T) / 2`.
#[inline]
pub fn resym(m: &Mat3) -> SymTensor3 {
    SymTensor3::sym_part(m)
}

/// Orthonormal rotation from a unit quaternion-like 4-vector; used by the
/// random SPD sampler.
pub fn rotation_from_quaternion(q: [f64; 4]) -> [[f64; 3]; 3] {
    let n = (q.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reconstruction_error(a: &SymTensor3, s: &Spectrum3) -> f64 {
        (SymTensor3::from_spectrum(s.values, &s.vectors) - *a).norm()
    }

    fn orthonormality_error(s: &Spectrum3) -> f64 {
        let q = Mat3(s.vectors);
        q.transpose()
            .mul(&q)
            .sub(&Mat3::identity())
            .norm_sq()
            .sqrt()
    }

    fn spd_from(l: [f64; 3], quat: [f64; 4]) -> SymTensor3 {
        SymTensor3::from_spectrum(l, &rotation_from_quaternion(quat))
    }

    #[test]
    fn diagonal_input_is_exact() {
        let s = eig_sym3(&SymTensor3::diag(1.0, 2.0, 3.0));
        assert_eq!(s.values, [1.0, 2.0, 3.0]);
        assert_eq!(s.vectors, Mat3::identity().0);
        let s = eig_sym3(&SymTensor3::IDENTITY);
        assert_eq!(s.values, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn hand_computed_spectrum() {
        // char poly of [[2,1,0],[1,2,0],[0,0,5]]: (5-l)((2-l)^2-1) -> 1, 3, 5
        let a = SymTensor3::new(2.0, 2.0, 5.0, 1.0, 0.0, 0.0);
        let s = eig_sym3(&a);
        assert_relative_eq!(s.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.values[1], 3.0, epsilon = 1e-14);
        assert_relative_eq!(s.values[2], 5.0, epsilon = 1e-14);
        assert_relative_eq!(lambda_min(&a), 1.0, epsilon = 1e-14);
        assert!(reconstruction_error(&a, &s) < 1e-13);
    }

    #[test]
    fn lambda_min_of_simple_inputs() {
        assert_eq!(lambda_min(&SymTensor3::IDENTITY), 1.0);
        assert_eq!(lambda_min(&SymTensor3::diag(4.0, 1.0, 1.0)), 1.0);
    }

    #[test]
    fn repeated_eigenvalues_use_fallback_and_stay_accurate() {
        let a = spd_from([2.0, 2.0, 2.0 + 1e-13], [0.3, -0.2, 0.9, 0.1]);
        let s = eig_sym3(&a);
        assert!(reconstruction_error(&a, &s) <= 1e-12 * (1.0 + a.norm()));
        assert!(orthonormality_error(&s) < 1e-12);
        let a = spd_from([1.0, 5.0, 5.0], [0.5, 0.5, -0.1, 0.2]);
        let s = eig_sym3(&a);
        assert!(reconstruction_error(&a, &s) <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn inverse_and_powers_on_diagonal() {
        let d = SymTensor3::diag(4.0, 1.0, 1.0);
        assert_eq!(inv(&SymTensor3::IDENTITY).unwrap(), SymTensor3::IDENTITY);
        assert_relative_eq!(inv(&d).unwrap().a11, 0.25, epsilon = 1e-15);
        let h = pow_sym(&d, 0.5).unwrap();
        assert_relative_eq!(h.a11, 2.0, epsilon = 1e-15);
        assert_relative_eq!(h.a22, 1.0, epsilon = 1e-15);
        let m = pow_sym(&SymTensor3::IDENTITY, -0.5).unwrap();
        assert_relative_eq!((m - SymTensor3::IDENTITY).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(pow_sym(&d, 1.0).unwrap(), d);
        assert_eq!(pow_sym(&d, 0.0).unwrap(), SymTensor3::IDENTITY);
    }

    #[test]
    fn singular_inputs_are_rejected() {
        let bad = SymTensor3::diag(-1.0, 1.0, 1.0);
        assert!(matches!(inv(&bad), Err(SpdError::SingularMatrix { .. })));
        assert!(pow_sym(&bad, 0.5).is_err());
        assert!(hencky_log(&SymTensor3::diag(0.0, 1.0, 1.0)).is_err());
        // integer powers are fine for indefinite input
        let sq = pow_sym(&bad, 2.0).unwrap();
        assert_relative_eq!(sq.a11, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hencky_log_known_values() {
        let l = hencky_log(&SymTensor3::IDENTITY).unwrap();
        assert_eq!(l, SymTensor3::ZERO);
        let l = hencky_log(&SymTensor3::diag(std::f64::consts::E, 1.0, 1.0)).unwrap();
        assert_relative_eq!(l.a11, 1.0, epsilon = 1e-15);
        assert_eq!(l.a22, 0.0);
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frob(&SymTensor3::IDENTITY, &SymTensor3::IDENTITY), 3.0);
        assert_eq!(
            frob(&SymTensor3::diag(1.0, 2.0, 3.0), &SymTensor3::IDENTITY),
            6.0
        );
        let a = SymTensor3::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let b = SymTensor3::new(0.0, 0.0, 0.0, 2.0, 0.0, 0.0);
        assert_eq!(frob(&a, &b), 4.0);
        // cross-check against the full-matrix sum
        assert_eq!(a.to_mat().frob(&b.to_mat()), 4.0);
    }

    fn sym_strategy() -> impl Strategy<Value = SymTensor3> {
        prop::array::uniform6(-50.0f64..50.0).prop_map(SymTensor3::from_array)
    }

    fn spd_strategy() -> impl Strategy<Value = SymTensor3> {
        (
            prop::array::uniform3(-6.0f64..6.0),
            prop::array::uniform4(-1.0f64..1.0),
        )
            .prop_filter("nonzero quaternion", |(_, q)| {
                q.iter().map(|x| x * x).sum::<f64>() > 1e-3
            })
            .prop_map(|(logs, q)| spd_from([logs[0].exp(), logs[1].exp(), logs[2].exp()], q))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn reconstruction_and_orthonormality(a in sym_strategy()) {
            let s = eig_sym3(&a);
            prop_assert!(s.values[0] <= s.values[1] && s.values[1] <= s.values[2]);
            prop_assert!(reconstruction_error(&a, &s) <= 1e-12 * (1.0 + a.norm()));
            prop_assert!(orthonormality_error(&s) <= 1e-12);
        }

        #[test]
        fn closed_form_agrees_with_jacobi(a in sym_strategy()) {
            let s = eig_sym3(&a);
            let j = jacobi_eigen(&a);
            for k in 0..3 {
                prop_assert!((s.values[k] - j.values[k]).abs() <= 1e-12 * (1.0 + a.norm()));
            }
        }

        #[test]
        fn positivity_matches_sylvester(a in sym_strategy()) {
            // leading principal minors as an independent positivity oracle
            let m1 = a.a11;
            let m2 = a.a11 * a.a22 - a.a12 * a.a12;
            let m3 = a.det();
            let sylvester = m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
            let lmin = lambda_min(&a);
            // skip draws within roundoff of the boundary
            prop_assume!(lmin.abs() > 1e-9 * (1.0 + a.norm()));
            prop_assert_eq!(lmin > 0.0, sylvester);
        }

        #[test]
        fn lambda_min_is_rayleigh_infimum(a in sym_strategy(), z in prop::array::uniform3(-1.0f64..1.0)) {
            let zz = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
            prop_assume!(zz > 1e-6);
            prop_assert!(a.quad_form(z) / zz >= lambda_min(&a) - 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn inverse_multiplies_back(a in spd_strategy()) {
            let spec = eig_sym3(&a);
            let cond = spec.values[2] / spec.values[0];
            let ai = inv(&a).unwrap();
            let err = a.matmul(&ai).sub(&Mat3::identity()).norm_sq().sqrt();
            prop_assert!(err <= 1e-14 * cond.max(1.0) * 10.0, "err {err} cond {cond}");
        }

        #[test]
        fn square_root_squares_back(a in spd_strategy()) {
            let spec = eig_sym3(&a);
            prop_assume!(spec.values[2] / spec.values[0] <= 1e6);
            let r = pow_sym(&a, 0.5).unwrap();
            let back = pow_sym(&r, 2.0).unwrap();
            prop_assert!((back - a).norm() <= 1e-12 * a.norm());
            let direct = r.square();
            prop_assert!((direct - a).norm() <= 1e-12 * a.norm());
        }

        #[test]
        fn log_of_inverse_is_negated_log(a in spd_strategy()) {
            let l = hencky_log(&a).unwrap();
            let li = hencky_log(&inv(&a).unwrap()).unwrap();
            // the inverse itself carries a condition-number-sized error
            let w = eig_sym3(&a).values;
            let cond = w[2] / w[0];
            prop_assert!((l + li).norm() <= 1e-14 * cond * (1.0 + l.norm()));
        }

        #[test]
        fn exp_log_round_trip(a in spd_strategy()) {
            let back = exp_sym(&hencky_log(&a).unwrap());
            prop_assert!((back - a).norm() <= 1e-12 * a.norm());
        }

        #[test]
        fn commutator_is_orthogonal_to_commuting_pair(
            l in prop::array::uniform3(0.1f64..10.0),
            m in prop::array::uniform3(-3.0f64..3.0),
            q in prop::array::uniform4(-1.0f64..1.0),
            w in prop::array::uniform3(-5.0f64..5.0),
        ) {
            prop_assume!(q.iter().map(|x| x * x).sum::<f64>() > 1e-3);
            let rot = rotation_from_quaternion(q);
            // A and B share eigenvectors, hence commute
            let a = SymTensor3::from_spectrum(l, &rot);
            let b = SymTensor3::from_spectrum(m, &rot);
            let wm = Mat3([[0.0, w[0], w[1]], [-w[0], 0.0, w[2]], [-w[1], -w[2], 0.0]]);
            let bm = b.to_mat();
            let comm = wm.mul(&bm).sub(&bm.mul(&wm));
            let val = a.to_mat().frob(&comm);
            prop_assert!(val.abs() <= 1e-12 * (1.0 + a.norm() * b.norm() * 10.0));
        }
    }
}

use std::ops::{Add, Mul, Sub};

use super::array::Array3;
use super::{GradientField, Grid, ScalarField, TensorField, VelocityField};
use crate::spd::{Mat3, SymTensor3};

/// Values the linear stencils act on componentwise.
pub trait Lattice:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    const ZERO: Self;
    /// `u ∂q` along one axis, upwind-biased MUSCL with minmod limiting, from
    /// the five values `q[i-2..=i+2]`.
    fn upwind(q: [Self; 5], u: f64, h: f64) -> Self;
}

impl Lattice for f64 {
    const ZERO: Self = 0.0;
    #[inline]
    fn upwind(q: [f64; 5], u: f64, h: f64) -> f64 {
        upwind_scalar(q, u, h)
    }
}

impl Lattice for SymTensor3 {
    const ZERO: Self = SymTensor3::ZERO;
    #[inline]
    fn upwind(q: [SymTensor3; 5], u: f64, h: f64) -> SymTensor3 {
        let a = q.map(|t| t.to_array());
        SymTensor3::from_array(std::array::from_fn(|k| {
            upwind_scalar([a[0][k], a[1][k], a[2][k], a[3][k], a[4][k]], u, h)
        }))
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

#[inline]
fn upwind_scalar(q: [f64; 5], u: f64, h: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let d = [q[1] - q[0], q[2] - q[1], q[3] - q[2], q[4] - q[3]];
    let (right, left) = if u > 0.0 {
        (
            q[2] + 0.5 * minmod(d[2], d[1]),
            q[1] + 0.5 * minmod(d[1], d[0]),
        )
    } else {
        (
            q[3] - 0.5 * minmod(d[3], d[2]),
            q[2] - 0.5 * minmod(d[2], d[1]),
        )
    };
    u * (right - left) / h
}

#[inline]
fn unit(d: usize) -> [isize; 3] {
    let mut e = [0; 3];
    e[d] = 1;
    e
}

#[inline]
fn shift(p: [usize; 3], d: usize, s: isize) -> [isize; 3] {
    let mut q = [p[0] as isize, p[1] as isize, p[2] as isize];
    q[d] += s;
    q
}

#[inline]
fn get<T: Copy + Send + Sync>(a: &Array3<T>, q: [isize; 3]) -> T {
    a.get(q[0], q[1], q[2])
}

/// Componentwise 7-point Laplacian on any lattice whose ghosts are filled.
/// Axes with a single point contribute nothing.
pub fn laplacian<T: Lattice>(a: &Array3<T>, h: [f64; 3]) -> Array3<T> {
    let mut out = Array3::new(a.dims(), T::ZERO);
    let dims = a.dims();
    let stride = a.strides();
    let raw = a.raw();
    let axes: Vec<(usize, f64)> = (0..3)
        .filter(|&d| dims[d] > 1)
        .map(|d| (stride[d], 1.0 / (h[d] * h[d])))
        .collect();
    out.par_fill(|p| {
        let i = a.idx(p);
        let c = raw[i];
        let mut acc = T::ZERO;
        for &(s, w) in &axes {
            acc = acc + (raw[i + s] + raw[i - s] - c * 2.0) * w;
        }
        acc
    });
    out
}

/// Componentwise Laplacian of a tensor field (ghosts filled).
pub fn laplacian_tensor(b: &TensorField, grid: &Grid) -> TensorField {
    laplacian(b, grid.h)
}

/// Split of a velocity gradient into rate of strain and spin.
pub fn sym_antisym_split(g: &Mat3) -> (SymTensor3, Mat3) {
    (SymTensor3::sym_part(g), g.antisym_part())
}

/// Velocity interpolated to a cell center (ghosts filled).
#[inline]
pub fn cell_velocity(v: &VelocityField, p: [usize; 3]) -> [f64; 3] {
    std::array::from_fn(|c| 0.5 * (v.c[c].at(p) + get(&v.c[c], shift(p, c, 1))))
}

/// Cell-centered `∇v` with `G[i][j] = ∂ⱼvᵢ` (ghosts filled). Diagonal entries
/// are exact MAC differences; off-diagonal ones average the centered
/// differences on the two faces bounding the cell.
pub fn grad_velocity(v: &VelocityField, grid: &Grid) -> GradientField {
    let mut g = Array3::new(grid.n, Mat3::ZERO);
    g.par_fill(|p| grad_at(v, grid, p));
    g
}

#[inline]
pub(crate) fn grad_at(v: &VelocityField, grid: &Grid, p: [usize; 3]) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for c in 0..3 {
        let a = &v.c[c];
        for d in 0..3 {
            if !grid.is_resolved(d) {
                continue;
            }
            m[c][d] = if d == c {
                (get(a, shift(p, c, 1)) - a.at(p)) / grid.h[c]
            } else {
                let hi = shift(p, c, 1);
                let e = unit(d);
                let add =
                    |q: [isize; 3], s: isize| [q[0] + s * e[0], q[1] + s * e[1], q[2] + s * e[2]];
                let lo = [p[0] as isize, p[1] as isize, p[2] as isize];
                (get(a, add(lo, 1)) - get(a, add(lo, -1)) + get(a, add(hi, 1))
                    - get(a, add(hi, -1)))
                    / (4.0 * grid.h[d])
            };
        }
    }
    Mat3(m)
}

/// Discrete divergence per cell (ghosts filled).
pub fn divergence(v: &VelocityField, grid: &Grid) -> ScalarField {
    let mut out = grid.scalar();
    out.par_fill(|p| {
        (0..3)
            .filter(|&c| grid.is_resolved(c))
            .map(|c| (get(&v.c[c], shift(p, c, 1)) - v.c[c].at(p)) / grid.h[c])
            .sum()
    });
    out
}

/// `∇φ` on faces from a cell scalar (ghosts filled); wall nodes get 0.
pub fn grad_scalar_to_faces(phi: &ScalarField, grid: &Grid) -> VelocityField {
    let mut out = grid.velocity();
    for c in 0..3 {
        if !grid.is_resolved(c) {
            continue;
        }
        out.c[c].par_fill(|p| {
            if grid.is_wall_node(c, p) {
                0.0
            } else {
                (phi.at(p) - get(phi, shift(p, c, -1))) / grid.h[c]
            }
        });
    }
    out
}

/// `div τ` on faces for a cell-centered symmetric stress (ghosts filled).
///
/// This is minus the transpose of [`grad_velocity`] under the cell/face
/// inner products, so `Σ τ:∇v` and `Σ v·div τ` cancel up to boundary terms.
pub fn elastic_force(tau: &TensorField, grid: &Grid) -> VelocityField {
    let mut out = grid.velocity();
    for c in 0..3 {
        out.c[c].par_fill(|p| {
            if grid.is_wall_node(c, p) {
                return 0.0;
            }
            let mut f = 0.0;
            for d in 0..3 {
                if !grid.is_resolved(d) {
                    continue;
                }
                if d == c {
                    f += (tau.at(p).get(c, c) - get(tau, shift(p, c, -1)).get(c, c)) / grid.h[c];
                } else {
                    let avg = |s: isize| {
                        let q = shift(p, d, s);
                        let mut qm = q;
                        qm[c] -= 1;
                        0.5 * (get(tau, q).get(c, d) + get(tau, qm).get(c, d))
                    };
                    f += (avg(1) - avg(-1)) / (2.0 * grid.h[d]);
                }
            }
            f
        });
    }
    out
}

/// `(v·∇)B` per cell (ghosts of both fields filled).
pub fn advect_tensor(v: &VelocityField, b: &TensorField, grid: &Grid) -> TensorField {
    let mut out = grid.tensor(SymTensor3::ZERO);
    out.par_fill(|p| {
        let u = cell_velocity(v, p);
        let mut acc = SymTensor3::ZERO;
        for d in 0..3 {
            if grid.is_resolved(d) && u[d] != 0.0 {
                let q = std::array::from_fn(|m| get(b, shift(p, d, m as isize - 2)));
                acc += SymTensor3::upwind(q, u[d], grid.h[d]);
            }
        }
        acc
    });
    out
}

/// `(v·∇)v` on the faces of every component (ghosts filled); wall nodes 0.
pub fn advect_velocity(v: &VelocityField, grid: &Grid) -> VelocityField {
    let mut out = grid.velocity();
    for c in 0..3 {
        let a = &v.c[c];
        out.c[c].par_fill(|p| {
            if grid.is_wall_node(c, p) {
                return 0.0;
            }
            let mut acc = 0.0;
            for d in 0..3 {
                if !grid.is_resolved(d) {
                    continue;
                }
                let u = if d == c {
                    a.at(p)
                } else {
                    let lo = shift(p, c, -1);
                    let mut lo_up = lo;
                    lo_up[d] += 1;
                    let here = shift(p, d, 0);
                    let up = shift(p, d, 1);
                    0.25 * (get(&v.c[d], lo)
                        + get(&v.c[d], lo_up)
                        + get(&v.c[d], here)
                        + get(&v.c[d], up))
                };
                if u != 0.0 {
                    let q = std::array::from_fn(|m| get(a, shift(p, d, m as isize - 2)));
                    acc += upwind_scalar(q, u, grid.h[d]);
                }
            }
            acc
        });
    }
    out
}

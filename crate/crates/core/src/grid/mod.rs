//! Staggered structured grid on a box: cell-centered tensors and scalars,
//! face-centered (MAC) velocity, ghost-layer boundary handling, discrete
//! operators and the pressure / implicit-diffusion solvers.
//!
//! A direction with a single cell is unresolved: it must be periodic and all
//! derivatives along it vanish, which turns a 3-D grid into a 2-D slab.

mod array;
mod boundary;
mod helmholtz;
mod ops;
mod poisson;

pub use array::{par_sum_box, Array3, GHOST};
pub use boundary::{fill_cell_ghosts, fill_component_ghosts, fill_velocity_ghosts, SlipGhosts};
pub use helmholtz::{solve_helmholtz, HelmholtzOptions};
pub use ops::{
    advect_tensor, advect_velocity, cell_velocity, divergence, elastic_force, grad_scalar_to_faces,
    grad_velocity, laplacian, laplacian_tensor, sym_antisym_split,
};
pub use poisson::{pressure_project, PoissonSolver, Projection};

use crate::error::GridError;
use crate::spd::{Mat3, SymTensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceBc {
    Periodic,
    NavierSlip,
    NoSlip,
}

impl FaceBc {
    pub fn name(self) -> &'static str {
        match self {
            FaceBc::Periodic => "periodic",
            FaceBc::NavierSlip => "navier_slip",
            FaceBc::NoSlip => "no_slip",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(FaceBc::Periodic),
            "navier_slip" => Some(FaceBc::NavierSlip),
            "no_slip" => Some(FaceBc::NoSlip),
            _ => None,
        }
    }
}

pub type ScalarField = Array3<f64>;
pub type TensorField = Array3<SymTensor3>;
pub type GradientField = Array3<Mat3>;

/// MAC velocity: component `c` lives on the faces normal to axis `c`.
///
/// Along a periodic axis the component has `n` faces; along a walled axis it
/// has `n + 1`, the first and last lying on the walls where it stays 0.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityField {
    pub c: [Array3<f64>; 3],
}

impl VelocityField {
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|a| a.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.c
            .iter()
            .all(|a| a.par_fold(true, |ok, _, v| ok && v.is_finite(), |x, y| x && y))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub n: [usize; 3],
    pub h: [f64; 3],
    /// `bc[axis][0]` is the low face, `bc[axis][1]` the high face.
    pub bc: [[FaceBc; 2]; 3],
    /// Tangential velocity of each wall (zero unless set with
    /// [`Grid::with_wall_velocity`]); the slip law acts on the relative velocity.
    pub wall_velocity: [[[f64; 3]; 2]; 3],
}

impl Grid {
    pub fn new(n: [usize; 3], lengths: [f64; 3], bc: [[FaceBc; 2]; 3]) -> Result<Self, GridError> {
        for axis in 0..3 {
            let bad = |reason: &str| GridError::InvalidAxis {
                axis,
                reason: reason.to_string(),
            };
            if !(lengths[axis].is_finite() && lengths[axis] > 0.0) {
                return Err(bad("length must be positive"));
            }
            let [lo, hi] = bc[axis];
            if (lo == FaceBc::Periodic) != (hi == FaceBc::Periodic) {
                return Err(bad("periodic faces must come in pairs"));
            }
            if n[axis] == 1 {
                if lo != FaceBc::Periodic {
                    return Err(bad("an unresolved direction must be periodic"));
                }
            } else if n[axis] < 4 {
                return Err(bad("a resolved direction needs at least 4 cells"));
            }
        }
        Ok(Self {
            n,
            h: std::array::from_fn(|d| lengths[d] / n[d] as f64),
            bc,
            wall_velocity: [[[0.0; 3]; 2]; 3],
        })
    }

    /// Sets the velocity of the wall at `side` (0 low, 1 high) of `axis`.
    /// The wall must exist and the velocity must be tangential.
    pub fn with_wall_velocity(
        mut self,
        axis: usize,
        side: usize,
        u: [f64; 3],
    ) -> Result<Self, GridError> {
        let bad = |reason: &str| GridError::InvalidAxis {
            axis,
            reason: reason.to_string(),
        };
        if self.is_periodic(axis) {
            return Err(bad("a periodic direction has no wall to move"));
        }
        if u[axis] != 0.0 || !u.iter().all(|x| x.is_finite()) {
            return Err(bad("wall velocity must be finite and tangential"));
        }
        self.wall_velocity[axis][side] = u;
        Ok(self)
    }

    pub fn has_moving_walls(&self) -> bool {
        self.wall_velocity
            .iter()
            .flatten()
            .flatten()
            .any(|&x| x != 0.0)
    }

    pub fn periodic(n: [usize; 3], lengths: [f64; 3]) -> Result<Self, GridError> {
        Self::new(n, lengths, [[FaceBc::Periodic; 2]; 3])
    }

    pub fn lengths(&self) -> [f64; 3] {
        std::array::from_fn(|d| self.h[d] * self.n[d] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.n.iter().product()
    }

    #[inline]
    pub fn is_periodic(&self, axis: usize) -> bool {
        self.bc[axis][0] == FaceBc::Periodic
    }

    #[inline]
    pub fn is_resolved(&self, axis: usize) -> bool {
        self.n[axis] > 1
    }

    pub fn all_periodic(&self) -> bool {
        (0..3).all(|d| self.is_periodic(d))
    }

    pub fn min_spacing(&self) -> f64 {
        (0..3)
            .filter(|&d| self.is_resolved(d))
            .map(|d| self.h[d])
            .fold(f64::INFINITY, f64::min)
    }

    /// Lattice dimensions of velocity component `c`.
    pub fn face_dims(&self, c: usize) -> [usize; 3] {
        let mut dims = self.n;
        if !self.is_periodic(c) {
            dims[c] += 1;
        }
        dims
    }

    /// True for the wall-normal nodes of component `c`, where it is pinned to 0.
    #[inline]
    pub fn is_wall_node(&self, c: usize, p: [usize; 3]) -> bool {
        !self.is_periodic(c) && (p[c] == 0 || p[c] == self.n[c])
    }

    pub fn cell_center(&self, p: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|d| (p[d] as f64 + 0.5) * self.h[d])
    }

    pub fn face_center(&self, c: usize, p: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|d| {
            if d == c {
                p[d] as f64 * self.h[d]
            } else {
                (p[d] as f64 + 0.5) * self.h[d]
            }
        })
    }

    /// Maps a possibly out-of-range cell index onto the interior cell that its
    /// ghost copies (periodic wrap or mirror).
    #[inline]
    pub fn source_cell(&self, axis: usize, i: isize) -> usize {
        let n = self.n[axis] as isize;
        let j = if self.is_periodic(axis) {
            i.rem_euclid(n)
        } else if i < 0 {
            -1 - i
        } else if i >= n {
            2 * n - 1 - i
        } else {
            i
        };
        j.clamp(0, n - 1) as usize
    }

    pub fn scalar(&self) -> ScalarField {
        Array3::new(self.n, 0.0)
    }

    pub fn tensor(&self, fill: SymTensor3) -> TensorField {
        Array3::new(self.n, fill)
    }

    pub fn velocity(&self) -> VelocityField {
        VelocityField {
            c: std::array::from_fn(|c| Array3::new(self.face_dims(c), 0.0)),
        }
    }

    /// Velocity sampled from an analytic field at face centers (wall nodes
    /// are left at 0).
    pub fn velocity_from<F>(&self, f: F) -> VelocityField
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let mut v = self.velocity();
        for c in 0..3 {
            v.c[c].par_fill(|p| {
                if self.is_wall_node(c, p) {
                    0.0
                } else {
                    f(self.face_center(c, p))[c]
                }
            });
        }
        v
    }

    /// Discrete curl of a vector potential sampled on cell edges, so the
    /// result is divergence free to roundoff. The potential's tangential
    /// components must vanish on walls for `v·n = 0` to be consistent.
    pub fn velocity_from_potential<F>(&self, a: F) -> VelocityField
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        let mut v = self.velocity();
        for c in 0..3 {
            let (d, e) = ((c + 1) % 3, (c + 2) % 3);
            v.c[c].par_fill(|p| {
                if self.is_wall_node(c, p) {
                    return 0.0;
                }
                // A_k sits on edges parallel to k: center along k, node
                // along c and along the differencing direction s
                let at = |k: usize, s: usize, up: bool| -> f64 {
                    let x: [f64; 3] = std::array::from_fn(|m| {
                        let i = p[m] as f64;
                        if m == k {
                            (i + 0.5) * self.h[m]
                        } else if m == s && up {
                            (i + 1.0) * self.h[m]
                        } else {
                            i * self.h[m]
                        }
                    });
                    a(x)[k]
                };
                let dd = (at(e, d, true) - at(e, d, false)) / self.h[d];
                let de = (at(d, e, true) - at(d, e, false)) / self.h[e];
                dd - de
            });
        }
        v
    }

    pub fn tensor_from<F>(&self, f: F) -> TensorField
    where
        F: Fn([f64; 3]) -> SymTensor3 + Sync,
    {
        let mut b = self.tensor(SymTensor3::IDENTITY);
        b.par_fill(|p| f(self.cell_center(p)));
        b
    }

    pub fn scalar_from<F>(&self, f: F) -> ScalarField
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let mut s = self.scalar();
        s.par_fill(|p| f(self.cell_center(p)));
        s
    }

    /// Stable 64-bit fingerprint of the grid geometry (FNV-1a).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for d in 0..3 {
            eat(&(self.n[d] as u64).to_le_bytes());
            eat(&self.h[d].to_bits().to_le_bytes());
            for s in 0..2 {
                eat(self.bc[d][s].name().as_bytes());
                for u in self.wall_velocity[d][s] {
                    eat(&u.to_bits().to_le_bytes());
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        let p = [[FaceBc::Periodic; 2]; 3];
        assert!(Grid::new([8, 8, 1], [1.0; 3], p).is_ok());
        assert!(Grid::new([3, 8, 8], [1.0; 3], p).is_err());
        assert!(Grid::new([8, 8, 8], [0.0, 1.0, 1.0], p).is_err());
        let mut mixed = p;
        mixed[1] = [FaceBc::Periodic, FaceBc::NavierSlip];
        assert!(Grid::new([8, 8, 8], [1.0; 3], mixed).is_err());
        let mut slab = p;
        slab[2] = [FaceBc::NoSlip; 2];
        assert!(Grid::new([8, 8, 1], [1.0; 3], slab).is_err());
    }

    #[test]
    fn layout() {
        let mut bc = [[FaceBc::Periodic; 2]; 3];
        bc[1] = [FaceBc::NavierSlip; 2];
        let g = Grid::new([8, 4, 1], [2.0, 1.0, 0.5], bc).unwrap();
        assert_eq!(g.h, [0.25, 0.25, 0.5]);
        assert_eq!(g.face_dims(0), [8, 4, 1]);
        assert_eq!(g.face_dims(1), [8, 5, 1]);
        assert!(g.is_wall_node(1, [0, 4, 0]));
        assert!(!g.is_wall_node(0, [0, 0, 0]));
        assert_eq!(g.source_cell(1, -1), 0);
        assert_eq!(g.source_cell(1, -2), 1);
        assert_eq!(g.source_cell(1, 5), 2);
        assert_eq!(g.source_cell(0, -1), 7);
        assert_ne!(
            g.fingerprint(),
            Grid::periodic([8, 4, 1], [2.0, 1.0, 0.5])
                .unwrap()
                .fingerprint()
        );
    }

    #[test]
    fn potential_velocity_is_discretely_solenoidal() {
        use std::f64::consts::PI;
        let g = Grid::periodic([8, 6, 5], [1.0, 2.0, 1.5]).unwrap();
        let v = g.velocity_from_potential(|x| {
            [
                (PI * x[1]).sin(),
                (4.0 * PI * x[2] / 3.0).cos() * (2.0 * PI * x[0]).sin(),
                (2.0 * PI * x[0]).cos(),
            ]
        });
        let mut v = v;
        fill_velocity_ghosts(&mut v, &g, &SlipGhosts::homogeneous(1.0, 0.0));
        let div = divergence(&v, &g);
        assert!(div.max_abs() < 1e-12 && v.max_abs() > 1.0);

        let mut bc = [[FaceBc::NavierSlip; 2]; 3];
        bc[2] = [FaceBc::Periodic; 2];
        let g = Grid::new([8, 8, 1], [1.0; 3], bc).unwrap();
        let mut v =
            g.velocity_from_potential(|x| [0.0, 0.0, (PI * x[0]).sin() * (PI * x[1]).sin()]);
        fill_velocity_ghosts(&mut v, &g, &SlipGhosts::homogeneous(1.0, 0.0));
        assert!(divergence(&v, &g).max_abs() < 1e-12);
        // v_x = ∂_y ψ at the face (0.25, 0.4375), second-order accurate
        let exact = PI * (PI * 0.25).sin() * (PI * 0.4375).cos();
        assert!((v.c[0].at([2, 3, 0]) - exact).abs() < 0.02 * exact.abs());
    }
}

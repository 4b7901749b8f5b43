use super::array::{Array3, GHOST};
use super::{FaceBc, Grid, TensorField, VelocityField};

const G: isize = GHOST as isize;

fn for_each_line(dims: [usize; 3], axis: usize, mut f: impl FnMut([isize; 3])) {
    let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
    for ib in -G..dims[b] as isize + G {
        for ia in -G..dims[a] as isize + G {
            let mut p = [0isize; 3];
            p[a] = ia;
            p[b] = ib;
            f(p);
        }
    }
}

#[inline]
fn with(mut p: [isize; 3], axis: usize, v: isize) -> [isize; 3] {
    p[axis] = v;
    p
}

/// Fills cell-centered ghost layers: periodic wrap, or even reflection
/// (homogeneous Neumann) across walls.
pub fn fill_cell_ghosts<T: Copy + Send + Sync>(a: &mut Array3<T>, grid: &Grid) {
    let dims = a.dims();
    for axis in 0..3 {
        let n = dims[axis] as isize;
        for_each_line(dims, axis, |p| {
            for m in 1..=G {
                for i in [-m, n - 1 + m] {
                    let src = grid.source_cell(axis, i) as isize;
                    let q = with(p, axis, src);
                    let v = a.get(q[0], q[1], q[2]);
                    let t = with(p, axis, i);
                    a.set(t[0], t[1], t[2], v);
                }
            }
        });
    }
}

/// Parameters of the tangential ghost rule at slip walls.
///
/// Balancing `ν ∂ₙv_τ + E = −σ v_τ` (E the elastic traction) at the wall
/// midpoint gives `v_ghost = α v_in + β` with
/// `α = (ν/h − σ/2)/(ν/h + σ/2)` and `β = ∓E/(ν/h + σ/2)`. A moving wall adds
/// `σU/(ν/h + σ/2)` to `β` (`2U` for no-slip).
#[derive(Clone, Copy)]
pub struct SlipGhosts<'a> {
    pub nu: f64,
    pub sigma: f64,
    /// Elastic stress `2aμρS(B)` per cell; `None` with `moving_walls` off
    /// gives the homogeneous rule.
    pub traction: Option<&'a TensorField>,
    /// Whether wall velocities enter the ghost values.
    pub moving_walls: bool,
}

impl<'a> SlipGhosts<'a> {
    pub fn homogeneous(nu: f64, sigma: f64) -> Self {
        Self {
            nu,
            sigma,
            traction: None,
            moving_walls: false,
        }
    }

    /// Full rule: elastic traction plus wall motion.
    pub fn with_traction(nu: f64, sigma: f64, traction: &'a TensorField) -> Self {
        Self {
            nu,
            sigma,
            traction: Some(traction),
            moving_walls: true,
        }
    }

    fn alpha_denominator(&self, bc: FaceBc, h: f64) -> (f64, f64) {
        match bc {
            FaceBc::NoSlip => (-1.0, f64::INFINITY),
            _ => {
                let den = self.nu / h + 0.5 * self.sigma;
                ((self.nu / h - 0.5 * self.sigma) / den, den)
            }
        }
    }
}

/// Fills every ghost layer of a MAC velocity field.
///
/// The wall-normal component is reflected oddly about the wall node, so
/// `v·n = 0` holds exactly; tangential components follow [`SlipGhosts`].
pub fn fill_velocity_ghosts(v: &mut VelocityField, grid: &Grid, slip: &SlipGhosts) {
    for c in 0..3 {
        fill_component_ghosts(&mut v.c[c], c, grid, slip);
    }
}

/// Ghost fill of velocity component `c` alone (see [`fill_velocity_ghosts`]).
pub fn fill_component_ghosts(a: &mut Array3<f64>, c: usize, grid: &Grid, slip: &SlipGhosts) {
    let dims = a.dims();
    for axis in 0..3 {
        let n = dims[axis] as isize;
        if grid.is_periodic(axis) {
            for_each_line(dims, axis, |p| {
                for m in 1..=G {
                    for (i, src) in [(-m, n - m), (n - 1 + m, m - 1)] {
                        let q = with(p, axis, src);
                        let val = a.get(q[0], q[1], q[2]);
                        let t = with(p, axis, i);
                        a.set(t[0], t[1], t[2], val);
                    }
                }
            });
        } else if axis == c {
            // nodes 0..=n_c, walls at both ends
            let nc = n - 1;
            for_each_line(dims, axis, |p| {
                for m in 1..=G {
                    for (i, src) in [(-m, m), (nc + m, nc - m)] {
                        let q = with(p, axis, src);
                        let val = -a.get(q[0], q[1], q[2]);
                        let t = with(p, axis, i);
                        a.set(t[0], t[1], t[2], val);
                    }
                }
            });
        } else {
            let h = grid.h[axis];
            for side in 0..2 {
                let (alpha, den) = slip.alpha_denominator(grid.bc[axis][side], h);
                let sign = if side == 0 { -1.0 } else { 1.0 };
                let layer = if side == 0 { 0 } else { grid.n[axis] - 1 };
                let drive = if slip.moving_walls {
                    let u = grid.wall_velocity[axis][side][c];
                    if den.is_finite() {
                        slip.sigma * u / den
                    } else {
                        2.0 * u
                    }
                } else {
                    0.0
                };
                for_each_line(dims, axis, |p| {
                    let pinned = !grid.is_periodic(c) && (p[c] <= 0 || p[c] >= grid.n[c] as isize);
                    let beta = match slip.traction {
                        Some(tau) if !pinned && den.is_finite() => {
                            let e = 3 - c - axis;
                            let mut cell = [0usize; 3];
                            cell[axis] = layer;
                            cell[e] = grid.source_cell(e, p[e]);
                            cell[c] = grid.source_cell(c, p[c] - 1);
                            let t0 = tau.at(cell).get(c, axis);
                            cell[c] = grid.source_cell(c, p[c]);
                            let t1 = tau.at(cell).get(c, axis);
                            -sign * 0.5 * (t0 + t1) / den
                        }
                        _ => 0.0,
                    } + if pinned { 0.0 } else { drive };
                    for m in 0..G {
                        let (ghost, src) = if side == 0 {
                            (-1 - m, m)
                        } else {
                            (n + m, n - 1 - m)
                        };
                        let val = if pinned {
                            0.0
                        } else {
                            let q = with(p, axis, src);
                            alpha * a.get(q[0], q[1], q[2]) + beta
                        };
                        let t = with(p, axis, ghost);
                        a.set(t[0], t[1], t[2], val);
                    }
                });
            }
        }
    }
}

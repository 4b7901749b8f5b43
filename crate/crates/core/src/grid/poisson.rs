use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::boundary::{fill_cell_ghosts, fill_velocity_ghosts, SlipGhosts};
use super::ops::{divergence, grad_scalar_to_faces};
use super::{Grid, ScalarField, VelocityField};
use crate::error::SolverDivergence;

/// One multigrid level of the cell-centered Laplacian with homogeneous
/// Neumann walls and periodic wrap. Unknowns are stored densely, axis 0
/// fastest, without ghosts.
struct Level {
    n: [usize; 3],
    w: [f64; 3],
    /// Neighbor coordinates along each axis; `None` marks a wall.
    nbr: [Vec<(Option<usize>, Option<usize>)>; 3],
    active: [bool; 3],
    /// Axes halved when building the next coarser level.
    coarsen: [bool; 3],
}

impl Level {
    fn new(n: [usize; 3], h: [f64; 3], periodic: [bool; 3]) -> Self {
        let nbr = std::array::from_fn(|d| {
            (0..n[d])
                .map(|i| {
                    if periodic[d] {
                        (Some((i + n[d] - 1) % n[d]), Some((i + 1) % n[d]))
                    } else {
                        (i.checked_sub(1), (i + 1 < n[d]).then_some(i + 1))
                    }
                })
                .collect()
        });
        Self {
            n,
            w: std::array::from_fn(|d| 1.0 / (h[d] * h[d])),
            nbr,
            active: std::array::from_fn(|d| n[d] > 1),
            coarsen: [false; 3],
        }
    }

    fn len(&self) -> usize {
        self.n.iter().product()
    }

    #[inline]
    fn at(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    /// Off-diagonal sum and diagonal magnitude of row `(i,j,k)`.
    #[inline]
    fn row(&self, x: &[f64], c: [usize; 3]) -> (f64, f64) {
        let mut off = 0.0;
        let mut diag = 0.0;
        for d in 0..3 {
            if !self.active[d] {
                continue;
            }
            let (lo, hi) = self.nbr[d][c[d]];
            for nb in [lo, hi].into_iter().flatten() {
                let mut q = c;
                q[d] = nb;
                off += self.w[d] * x[self.at(q[0], q[1], q[2])];
                diag += self.w[d];
            }
        }
        (off, diag)
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.n[2] {
            for j in 0..self.n[1] {
                for i in 0..self.n[0] {
                    let ix = self.at(i, j, k);
                    let (off, diag) = self.row(x, [i, j, k]);
                    out[ix] = off - diag * x[ix];
                }
            }
        }
    }

    /// One Gauss–Seidel pass over the cells of one parity; `reverse` runs
    /// them in the opposite order (the adjoint sweep).
    fn smooth(&self, x: &mut [f64], b: &[f64], parity: usize, reverse: bool) {
        let n = self.n;
        let mut visit = |i: usize, j: usize, k: usize| {
            if (i + j + k) % 2 != parity {
                return;
            }
            let (off, diag) = self.row(x, [i, j, k]);
            if diag > 0.0 {
                x[self.at(i, j, k)] = (off - b[self.at(i, j, k)]) / diag;
            }
        };
        if reverse {
            for k in (0..n[2]).rev() {
                for j in (0..n[1]).rev() {
                    for i in (0..n[0]).rev() {
                        visit(i, j, k);
                    }
                }
            }
        } else {
            for k in 0..n[2] {
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        visit(i, j, k);
                    }
                }
            }
        }
    }

    fn parent(&self, c: [usize; 3]) -> [usize; 3] {
        std::array::from_fn(|d| if self.coarsen[d] { c[d] / 2 } else { c[d] })
    }
}

struct Fft3 {
    n: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
    eig: [Vec<f64>; 3],
}

impl Fft3 {
    fn new(n: [usize; 3], h: [f64; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: std::array::from_fn(|d| planner.plan_fft_forward(n[d])),
            inv: std::array::from_fn(|d| planner.plan_fft_inverse(n[d])),
            eig: std::array::from_fn(|d| {
                (0..n[d])
                    .map(|k| {
                        let t = 2.0 * std::f64::consts::PI * k as f64 / n[d] as f64;
                        (2.0 * t.cos() - 2.0) / (h[d] * h[d])
                    })
                    .collect()
            }),
        }
    }

    fn transform(&self, buf: &mut [Complex<f64>], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let n = self.n;
        plans[0].process(buf);
        for d in 1..3 {
            if n[d] == 1 {
                continue;
            }
            let stride = if d == 1 { n[0] } else { n[0] * n[1] };
            let lines = buf.len() / n[d];
            let mut tmp = vec![Complex::new(0.0, 0.0); buf.len()];
            // gather each line along axis d contiguously
            let mut l = 0;
            for outer in 0..buf.len() / (stride * n[d]) {
                for inner in 0..stride {
                    let base = outer * stride * n[d] + inner;
                    for m in 0..n[d] {
                        tmp[l * n[d] + m] = buf[base + m * stride];
                    }
                    l += 1;
                }
            }
            debug_assert_eq!(l, lines);
            plans[d].process(&mut tmp);
            let mut l = 0;
            for outer in 0..buf.len() / (stride * n[d]) {
                for inner in 0..stride {
                    let base = outer * stride * n[d] + inner;
                    for m in 0..n[d] {
                        buf[base + m * stride] = tmp[l * n[d] + m];
                    }
                    l += 1;
                }
            }
        }
    }

    fn solve(&self, rhs: &[f64], phi: &mut [f64]) {
        let n = self.n;
        let mut buf: Vec<Complex<f64>> = rhs.iter().map(|&r| Complex::new(r, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let ix = i + n[0] * (j + n[1] * k);
                    let lam = self.eig[0][i] + self.eig[1][j] + self.eig[2][k];
                    buf[ix] = if ix == 0 {
                        Complex::new(0.0, 0.0)
                    } else {
                        buf[ix] / lam
                    };
                }
            }
        }
        self.transform(&mut buf, &self.inv);
        let scale = 1.0 / buf.len() as f64;
        for (p, c) in phi.iter_mut().zip(&buf) {
            *p = c.re * scale;
        }
    }
}

/// Solver for the discrete pressure Poisson problem `Lφ = b` (zero-mean φ):
/// FFT when every direction is periodic, otherwise CG preconditioned by one
/// multigrid V-cycle with red–black Gauss–Seidel smoothing.
pub struct PoissonSolver {
    levels: Vec<Level>,
    fft: Option<Fft3>,
    /// Stop when `‖r‖∞ ≤ max(rel_tol ‖b‖∞, abs_floor)`.
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_iter: usize,
    pub force_multigrid: bool,
}

/// Outcome of one projection.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Projection {
    pub iterations: usize,
    pub max_divergence: f64,
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Self {
        let periodic = std::array::from_fn(|d| grid.is_periodic(d));
        let mut levels = vec![Level::new(grid.n, grid.h, periodic)];
        let mut h = grid.h;
        loop {
            let last = levels.last_mut().unwrap();
            let can: [bool; 3] = std::array::from_fn(|d| last.n[d] >= 4 && last.n[d] % 2 == 0);
            let hmin = (0..3)
                .filter(|&d| can[d])
                .map(|d| h[d])
                .fold(f64::INFINITY, f64::min);
            let coarsen: [bool; 3] = std::array::from_fn(|d| can[d] && h[d] <= 1.5 * hmin);
            if !coarsen.iter().any(|&c| c) {
                break;
            }
            last.coarsen = coarsen;
            let n = std::array::from_fn(|d| if coarsen[d] { last.n[d] / 2 } else { last.n[d] });
            h = std::array::from_fn(|d| if coarsen[d] { 2.0 * h[d] } else { h[d] });
            levels.push(Level::new(n, h, periodic));
        }
        Self {
            levels,
            fft: grid.all_periodic().then(|| Fft3::new(grid.n, grid.h)),
            rel_tol: 1e-12,
            abs_floor: 1e-14,
            max_iter: 200,
            force_multigrid: false,
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn vcycle(&self, l: usize, x: &mut [f64], b: &[f64]) {
        let lev = &self.levels[l];
        if l + 1 == self.levels.len() {
            for _ in 0..30 {
                lev.smooth(x, b, 0, false);
                lev.smooth(x, b, 1, false);
                lev.smooth(x, b, 1, true);
                lev.smooth(x, b, 0, true);
            }
            return;
        }
        lev.smooth(x, b, 0, false);
        lev.smooth(x, b, 1, false);
        let mut r = vec![0.0; lev.len()];
        lev.apply(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let coarse = &self.levels[l + 1];
        let mut bc = vec![0.0; coarse.len()];
        let children = lev.coarsen.iter().filter(|&&c| c).count();
        let w = 1.0 / (1 << children) as f64;
        for k in 0..lev.n[2] {
            for j in 0..lev.n[1] {
                for i in 0..lev.n[0] {
                    let p = lev.parent([i, j, k]);
                    bc[coarse.at(p[0], p[1], p[2])] += w * r[lev.at(i, j, k)];
                }
            }
        }
        let mut xc = vec![0.0; coarse.len()];
        self.vcycle(l + 1, &mut xc, &bc);
        for k in 0..lev.n[2] {
            for j in 0..lev.n[1] {
                for i in 0..lev.n[0] {
                    let p = lev.parent([i, j, k]);
                    x[lev.at(i, j, k)] += xc[coarse.at(p[0], p[1], p[2])];
                }
            }
        }
        lev.smooth(x, b, 1, true);
        lev.smooth(x, b, 0, true);
    }

    fn remove_mean(x: &mut [f64]) {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= m);
    }

    /// Solves `Lφ = b` for zero-mean `φ` (the mean of `b` is removed first).
    /// Returns the iteration count (0 for the direct FFT path).
    pub fn solve(&self, b: &[f64], phi: &mut [f64]) -> Result<usize, SolverDivergence> {
        let mut b = b.to_vec();
        Self::remove_mean(&mut b);
        let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let target = (self.rel_tol * bmax).max(self.abs_floor);
        if bmax <= self.abs_floor {
            phi.iter_mut().for_each(|v| *v = 0.0);
            return Ok(0);
        }
        if let (Some(fft), false) = (&self.fft, self.force_multigrid) {
            fft.solve(&b, phi);
            return Ok(0);
        }
        let lev = &self.levels[0];
        let len = lev.len();
        phi.iter_mut().for_each(|v| *v = 0.0);
        let mut r = b;
        let mut z = vec![0.0; len];
        self.vcycle(0, &mut z, &r);
        Self::remove_mean(&mut z);
        let mut p = z.clone();
        let mut q = vec![0.0; len];
        let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(x, y)| x * y).sum::<f64>();
        let mut rz = dot(&r, &z);
        let mut rmax = bmax;
        for it in 1..=self.max_iter {
            lev.apply(&p, &mut q);
            // CG on −L written in terms of L: both r·z and p·Lp are
            // negative, so the step lengths come out positive.
            let alpha = rz / dot(&p, &q);
            for i in 0..len {
                phi[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rmax <= target {
                Self::remove_mean(phi);
                return Ok(it);
            }
            z.iter_mut().for_each(|v| *v = 0.0);
            self.vcycle(0, &mut z, &r);
            Self::remove_mean(&mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..len {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(SolverDivergence {
            solver: "poisson-mgcg",
            iterations: self.max_iter,
            residual: rmax / bmax,
            tolerance: self.rel_tol,
        })
    }
}

/// Projects `v` onto discretely divergence-free fields in place:
/// `v ← v − ∇φ` with `Lφ = div v`. Returns the pressure increment `φ/dt`.
pub fn pressure_project(
    v: &mut VelocityField,
    grid: &Grid,
    dt: f64,
    solver: &PoissonSolver,
) -> Result<(ScalarField, Projection), SolverDivergence> {
    let ghosts = SlipGhosts::homogeneous(1.0, 0.0);
    fill_velocity_ghosts(v, grid, &ghosts);
    let div = divergence(v, grid);
    let rhs: Vec<f64> = div.interior().map(|p| div.at(p)).collect();
    let mut phi_flat = vec![0.0; rhs.len()];
    let iterations = solver.solve(&rhs, &mut phi_flat)?;
    let mut phi = grid.scalar();
    let n = grid.n;
    phi.par_fill(|p| phi_flat[p[0] + n[0] * (p[1] + n[1] * p[2])]);
    fill_cell_ghosts(&mut phi, grid);
    let g = grad_scalar_to_faces(&phi, grid);
    for c in 0..3 {
        v.c[c].axpy(-1.0, &g.c[c]);
    }
    fill_velocity_ghosts(v, grid, &ghosts);
    let max_divergence = divergence(v, grid).max_abs();
    phi.par_update(|_, x| x / dt);
    Ok((
        phi,
        Projection {
            iterations,
            max_divergence,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FaceBc;
    use std::f64::consts::PI;

    fn walled(n: [usize; 3]) -> Grid {
        let mut bc = [[FaceBc::Periodic; 2]; 3];
        bc[0] = [FaceBc::NavierSlip; 2];
        bc[1] = [FaceBc::NoSlip; 2];
        Grid::new(n, [1.0, 1.0, 1.0], bc).unwrap()
    }

    fn random_velocity(g: &Grid, seed: u64) -> VelocityField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut v = g.velocity();
        for c in 0..3 {
            let pts: Vec<[usize; 3]> = v.c[c].interior().collect();
            for p in pts {
                if !g.is_wall_node(c, p) {
                    *v.c[c].at_mut(p) = rng.random_range(-1.0..1.0);
                }
            }
        }
        v
    }

    #[test]
    fn random_field_is_projected_multigrid() {
        let g = walled([16, 16, 8]);
        let solver = PoissonSolver::new(&g);
        assert!(solver.level_count() >= 3);
        let mut v = random_velocity(&g, 3);
        let (_, pr) = pressure_project(&mut v, &g, 0.1, &solver).unwrap();
        assert!(pr.max_divergence <= 1e-10, "{pr:?}");
        assert!(pr.iterations > 0 && pr.iterations < 60, "{pr:?}");
    }

    #[test]
    fn random_field_is_projected_fft_and_matches_multigrid() {
        let g = Grid::periodic([16, 8, 8], [1.0, 0.5, 0.5]).unwrap();
        let mut solver = PoissonSolver::new(&g);
        let v0 = random_velocity(&g, 5);
        let mut v = v0.clone();
        let (p_fft, pr) = pressure_project(&mut v, &g, 1.0, &solver).unwrap();
        assert!(pr.max_divergence <= 1e-10, "{pr:?}");
        solver.force_multigrid = true;
        let mut w = v0;
        let (p_mg, pr) = pressure_project(&mut w, &g, 1.0, &solver).unwrap();
        assert!(pr.max_divergence <= 1e-10, "{pr:?}");
        let d = p_fft.par_fold(0.0, |m, p, x| m.max((x - p_mg.at(p)).abs()), f64::max);
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn solenoidal_field_is_unchanged_and_gradient_is_removed() {
        let g = Grid::periodic([16, 16, 1], [1.0; 3]).unwrap();
        let solver = PoissonSolver::new(&g);
        let k = 2.0 * PI;
        let sol = |x: [f64; 3]| [(k * x[1]).sin(), (k * x[0]).cos(), 0.0];
        let mut v = g.velocity_from(sol);
        let before = v.clone();
        let (phi, _) = pressure_project(&mut v, &g, 0.5, &solver).unwrap();
        assert_eq!(phi.max_abs(), 0.0);
        for c in 0..2 {
            assert_eq!(v.c[c].max_abs(), before.c[c].max_abs());
        }
        // discrete gradient of a cell field is removed to solver precision
        let mut phi0 = g.scalar_from(|x| (k * x[0]).cos());
        fill_cell_ghosts(&mut phi0, &g);
        let mut gv = grad_scalar_to_faces(&phi0, &g);
        pressure_project(&mut gv, &g, 1.0, &solver).unwrap();
        assert!(gv.max_abs() < 1e-12, "{}", gv.max_abs());
    }
}

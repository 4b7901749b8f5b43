//! Discrete energy budget, positivity margins and weak-form residuals.
//!
//! The dissipation terms are assembled on the same stencils the stepper uses,
//! so for a first-order step the budget closes up to `O(dt)`:
//!
//! * strain on cells (diagonal) and on cell edges (off-diagonal), with wall
//!   edges at half weight and wall ghosts taken from the slip rule;
//! * slip friction from the wall value `½(v_in + v_ghost)`;
//! * stress diffusion on cell faces, where `δ(B⁻¹) = −B_L⁻¹ δB B_R⁻¹` makes the
//!   inverse-weighted term exact: `δJ:δB = μγ|δB|² + μ(1−γ)|B_L^{-½} δB B_R^{-½}|²`.
//!
//! Nothing here mutates the state; ghost layers are refreshed on a copy.

use crate::constitutive::{free_energy, grad_identity_residual, relaxation_terms, ModelParams};
use crate::error::{MonitorError, SpdError};
use crate::grid::{
    advect_tensor, advect_velocity, divergence, fill_cell_ghosts, fill_velocity_ghosts,
    grad_velocity, par_sum_box, Array3, Grid, SlipGhosts, TensorField, VelocityField,
};
use crate::spd::{eig_sym3, frob, SymTensor3};
use crate::stepper::{
    b_source, cutoff_factor, elastic_stress_field, scan_tensor, Forcing, SimState,
};

/// Every term of the energy inequality at one instant, in energy units
/// (rates for the dissipation and work fields).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBudget {
    pub t: f64,
    pub kinetic: f64,
    pub free_energy: f64,
    pub viscous_diss: f64,
    pub slip_diss: f64,
    pub diff_diss_gamma: f64,
    pub diff_diss_inv: f64,
    pub relax_diss_1: f64,
    pub relax_diss_2: f64,
    pub relax_diss_3: f64,
    pub work: f64,
    /// Cumulative budget residual, filled by [`BudgetTracker`].
    pub residual: f64,
}

impl EnergyBudget {
    pub const FIELDS: [&'static str; 12] = [
        "t",
        "kinetic",
        "free_energy",
        "viscous_diss",
        "slip_diss",
        "diff_diss_gamma",
        "diff_diss_inv",
        "relax_diss_1",
        "relax_diss_2",
        "relax_diss_3",
        "work",
        "residual",
    ];

    pub fn values(&self) -> [f64; 12] {
        [
            self.t,
            self.kinetic,
            self.free_energy,
            self.viscous_diss,
            self.slip_diss,
            self.diff_diss_gamma,
            self.diff_diss_inv,
            self.relax_diss_1,
            self.relax_diss_2,
            self.relax_diss_3,
            self.work,
            self.residual,
        ]
    }

    /// Total energy `E = ½∫|v|² + ∫ψ(B)`.
    pub fn energy(&self) -> f64 {
        self.kinetic + self.free_energy
    }

    pub fn dissipation(&self) -> f64 {
        self.viscous_diss
            + self.slip_diss
            + self.diff_diss_gamma
            + self.diff_diss_inv
            + self.relax_diss_1
            + self.relax_diss_2
            + self.relax_diss_3
    }
}

#[inline]
fn offset(p: [usize; 3], d: usize, s: isize) -> [isize; 3] {
    let mut q = p.map(|x| x as isize);
    q[d] += s;
    q
}

#[inline]
fn get<T: Copy + Send + Sync>(a: &Array3<T>, q: [isize; 3]) -> T {
    a.get(q[0], q[1], q[2])
}

/// `Σ 2 D(v):D(w) dV`, diagonal strain on cells and off-diagonal strain on
/// edges. Both fields need their ghosts filled.
pub fn strain_product(v: &VelocityField, w: &VelocityField, grid: &Grid) -> f64 {
    let dv = grid.cell_volume();
    let mut total = 0.0;
    for c in 0..3 {
        if !grid.is_resolved(c) {
            continue;
        }
        let h2 = grid.h[c] * grid.h[c];
        total += par_sum_box(grid.n, |p| {
            let q = offset(p, c, 1);
            let a = get(&v.c[c], q) - v.c[c].at(p);
            let b = get(&w.c[c], q) - w.c[c].at(p);
            2.0 * a * b / h2
        });
    }
    for c in 0..3 {
        for d in c + 1..3 {
            let mut dims = grid.n;
            dims[c] = grid.face_dims(c)[c];
            dims[d] = grid.face_dims(d)[d];
            let walled =
                |axis: usize, i: usize| !grid.is_periodic(axis) && (i == 0 || i == grid.n[axis]);
            total += par_sum_box(dims, |p| {
                // ∂_d u_c + ∂_c u_d at the edge
                let shear = |u: &VelocityField| {
                    (u.c[c].at(p) - get(&u.c[c], offset(p, d, -1))) / grid.h[d]
                        + (u.c[d].at(p) - get(&u.c[d], offset(p, c, -1))) / grid.h[c]
                };
                let mut weight = 1.0;
                if walled(c, p[c]) {
                    weight *= 0.5;
                }
                if walled(d, p[d]) {
                    weight *= 0.5;
                }
                weight * shear(v) * shear(w)
            });
        }
    }
    total * dv
}

/// `Σ_walls f(v_τ, w_τ, U_τ) dA` over tangential components, with wall
/// values `½(inner + ghost)` and `U` the wall velocity.
fn wall_sum<F>(v: &VelocityField, w: &VelocityField, grid: &Grid, f: F) -> f64
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let mut total = 0.0;
    for d in (0..3).filter(|&d| !grid.is_periodic(d)) {
        let area = grid.cell_volume() / grid.h[d];
        for c in (0..3).filter(|&c| c != d) {
            let mut dims = grid.face_dims(c);
            dims[d] = 1;
            for (side, layer, ghost) in [
                (0, 0isize, -1isize),
                (1, grid.n[d] as isize - 1, grid.n[d] as isize),
            ] {
                let u = grid.wall_velocity[d][side][c];
                total += area
                    * par_sum_box(dims, |p| {
                        if grid.is_wall_node(c, p) {
                            return 0.0;
                        }
                        let mut q = p.map(|x| x as isize);
                        q[d] = layer;
                        let mut g = q;
                        g[d] = ghost;
                        let wv = 0.5 * (get(&v.c[c], q) + get(&v.c[c], g));
                        let ww = 0.5 * (get(&w.c[c], q) + get(&w.c[c], g));
                        f(wv, ww, u)
                    });
            }
        }
    }
    total
}

/// `Σ_walls v_τ·w_τ dA` with wall values `½(inner + ghost)`.
pub fn wall_product(v: &VelocityField, w: &VelocityField, grid: &Grid) -> f64 {
    wall_sum(v, w, grid, |a, b, _| a * b)
}

/// `Σ_faces δA:δC / h² dV` over interior (and periodic) cell faces; walls
/// carry no flux. Ghosts must be filled.
pub fn face_gradient_product(a: &TensorField, b: &TensorField, grid: &Grid) -> f64 {
    let dv = grid.cell_volume();
    let mut total = 0.0;
    for d in (0..3).filter(|&d| grid.is_resolved(d)) {
        let h2 = grid.h[d] * grid.h[d];
        let periodic = grid.is_periodic(d);
        total += par_sum_box(grid.n, |p| {
            if !periodic && p[d] + 1 == grid.n[d] {
                return 0.0;
            }
            let q = offset(p, d, 1);
            frob(&(get(a, q) - a.at(p)), &(get(b, q) - b.at(p))) / h2
        });
    }
    total * dv
}

fn kinetic(v: &VelocityField, grid: &Grid) -> f64 {
    0.5 * grid.cell_volume() * v.c.iter().map(|a| a.par_sum(|_, x| x * x)).sum::<f64>()
}

fn face_dot(v: &VelocityField, w: &VelocityField, grid: &Grid) -> f64 {
    grid.cell_volume()
        * (0..3)
            .map(|c| v.c[c].par_sum(|p, x| x * w.c[c].at(p)))
            .sum::<f64>()
}

fn cell_dot(a: &TensorField, b: &TensorField, grid: &Grid) -> f64 {
    grid.cell_volume() * a.par_sum(|p, x| frob(&x, &b.at(p)))
}

fn ensure_positive(b: &TensorField) -> Result<(), MonitorError> {
    let scan = scan_tensor(b);
    if !scan.finite || scan.min_lambda <= 0.0 {
        let lambda_min = if scan.finite {
            scan.min_lambda
        } else {
            f64::NAN
        };
        return Err(SpdError::SingularMatrix { lambda_min }.into());
    }
    Ok(())
}

/// Evaluates every budget term on `s` at time `s.t`.
pub fn compute_budget(s: &SimState, forcing: &Forcing) -> Result<EnergyBudget, MonitorError> {
    ensure_positive(&s.b)?;
    let mut st = s.clone();
    st.refresh_ghosts();
    let grid = &st.grid;
    let prm = &st.params;
    let dv = grid.cell_volume();

    let mut inv_sqrt = grid.tensor(SymTensor3::ZERO);
    inv_sqrt.par_fill(|p| eig_sym3(&st.b.at(p)).map(|l| 1.0 / l.sqrt()));
    fill_cell_ghosts(&mut inv_sqrt, grid);

    let cells = st.b.par_fold(
        [0.0; 4],
        |mut acc, _, b| {
            let spec = eig_sym3(&b);
            let rho = cutoff_factor(&b, prm);
            let (r1, r2, r3) = relaxation_terms(&spec, prm);
            acc[0] += free_energy(&b, prm).unwrap_or(f64::NAN);
            acc[1] += rho * r1;
            acc[2] += rho * r2;
            acc[3] += rho * r3;
            acc
        },
        |x, y| std::array::from_fn(|i| x[i] + y[i]),
    );

    let grad_sq = face_gradient_product(&st.b, &st.b, grid);
    let mut inv_weighted = 0.0;
    for d in (0..3).filter(|&d| grid.is_resolved(d)) {
        let h2 = grid.h[d] * grid.h[d];
        let periodic = grid.is_periodic(d);
        inv_weighted += par_sum_box(grid.n, |p| {
            if !periodic && p[d] + 1 == grid.n[d] {
                return 0.0;
            }
            let q = offset(p, d, 1);
            let delta = get(&st.b, q) - st.b.at(p);
            let x = inv_sqrt
                .at(p)
                .matmul(&delta)
                .mul(&get(&inv_sqrt, q).to_mat());
            x.norm_sq() / h2
        });
    }
    inv_weighted *= dv;

    let mut work = match forcing.velocity_field(grid, st.t) {
        Some(f) => face_dot(&f, &st.v, grid),
        None => 0.0,
    };
    let mut slip_diss = 0.0;
    if prm.sigma > 0.0 {
        // friction acts on the velocity relative to the wall; a moving wall
        // also does work on the fluid
        slip_diss = prm.sigma * wall_sum(&st.v, &st.v, grid, |a, _, u| (a - u) * (a - u));
        if grid.has_moving_walls() {
            work += prm.sigma * wall_sum(&st.v, &st.v, grid, |a, _, u| (u - a) * u);
        }
    }
    let ml = prm.mu * prm.lambda_diff;
    Ok(EnergyBudget {
        t: st.t,
        kinetic: kinetic(&st.v, grid),
        free_energy: cells[0] * dv,
        viscous_diss: prm.nu * strain_product(&st.v, &st.v, grid),
        slip_diss,
        diff_diss_gamma: ml * prm.gamma * grad_sq,
        diff_diss_inv: ml * (1.0 - prm.gamma) * inv_weighted,
        relax_diss_1: cells[1] * dv,
        relax_diss_2: cells[2] * dv,
        relax_diss_3: cells[3] * dv,
        work,
        residual: 0.0,
    })
}

/// Residual of the discrete energy inequality at one entry.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BudgetResidual {
    pub signed: f64,
    /// `max(signed, 0)`: the part that would contradict the inequality.
    pub positive: f64,
}

impl BudgetResidual {
    fn new(signed: f64) -> Self {
        Self {
            signed,
            positive: signed.max(0.0),
        }
    }
}

/// `r_n = E_n − E_0 + Σ_{m=1..n} dt (dissipation_m − work_m)` for a history
/// sampled every `dt`. Entry 0 is always zero.
pub fn budget_residual(
    history: &[EnergyBudget],
    dt: f64,
) -> Result<Vec<BudgetResidual>, MonitorError> {
    if history.len() < 2 {
        return Err(MonitorError::ShortHistory {
            needed: 2,
            got: history.len(),
        });
    }
    let e0 = history[0].energy();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(history.len());
    out.push(BudgetResidual::default());
    for b in &history[1..] {
        acc += dt * (b.dissipation() - b.work);
        out.push(BudgetResidual::new(b.energy() - e0 + acc));
    }
    Ok(out)
}

/// Running form of [`budget_residual`] that tolerates a variable step (the
/// shortened last step of a run).
#[derive(Clone, Debug, Default)]
pub struct BudgetTracker {
    e0: Option<f64>,
    last_t: f64,
    acc: f64,
}

impl BudgetTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fills `b.residual` and returns the residual pair.
    pub fn record(&mut self, b: &mut EnergyBudget) -> BudgetResidual {
        let r = match self.e0 {
            None => {
                self.e0 = Some(b.energy());
                BudgetResidual::default()
            }
            Some(e0) => {
                self.acc += (b.t - self.last_t) * (b.dissipation() - b.work);
                BudgetResidual::new(b.energy() - e0 + self.acc)
            }
        };
        self.last_t = b.t;
        b.residual = r.signed;
        r
    }
}

/// Minimal-eigenvalue statistics of a tensor field.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub min_lambda: f64,
    pub argmin: [usize; 3],
    pub min_det: f64,
    /// Cells with `Λ ≤ 0`.
    pub nonpositive: usize,
    /// `(k, count)`: cells with `10^k ≤ Λ < 10^(k+1)`, clamped to
    /// `k ∈ [HIST_LO, HIST_HI]`.
    pub histogram: Vec<(i32, usize)>,
    /// `eps − 1e-10` when the regularized system is active.
    pub floor: Option<f64>,
    pub floor_ok: bool,
}

pub const HIST_LO: i32 = -8;
pub const HIST_HI: i32 = 4;

pub fn positivity_report(b: &TensorField, eps: f64) -> PositivityReport {
    let scan = scan_tensor(b);
    let bins = (HIST_HI - HIST_LO + 1) as usize;
    let mut counts = vec![0usize; bins];
    let mut nonpositive = 0;
    for p in b.interior() {
        let l = crate::spd::lambda_min(&b.at(p));
        if !(l > 0.0) {
            nonpositive += 1;
            continue;
        }
        let k = (l.log10().floor() as i32).clamp(HIST_LO, HIST_HI);
        counts[(k - HIST_LO) as usize] += 1;
    }
    let floor = (eps > 0.0).then(|| eps - 1e-10);
    PositivityReport {
        min_lambda: scan.min_lambda,
        argmin: scan.argmin,
        min_det: scan.min_det,
        nonpositive,
        histogram: (HIST_LO..=HIST_HI).zip(counts).collect(),
        floor,
        floor_ok: floor.map_or(true, |f| scan.min_lambda >= f),
    }
}

/// Test function for [`weak_residual`].
#[derive(Clone, Copy, Debug)]
pub enum TestField<'a> {
    /// Discretely divergence free and tangent to walls.
    Velocity(&'a VelocityField),
    Tensor(&'a TensorField),
}

const TEST_TOL: f64 = 1e-8;

/// Absolute residual of the weak momentum or conformation equation for the
/// pair `(prev, cur)`: backward difference in time, every other integral at
/// `cur`.
pub fn weak_residual(
    prev: &SimState,
    cur: &SimState,
    test: TestField,
    forcing: &Forcing,
) -> Result<f64, MonitorError> {
    let dt = cur.t - prev.t;
    if !(dt > 0.0) {
        return Err(MonitorError::NonIncreasingTime(dt));
    }
    let mut st = cur.clone();
    st.refresh_ghosts();
    let grid = &st.grid;
    let prm = &st.params;
    let dv = grid.cell_volume();
    match test {
        TestField::Velocity(phi) => {
            let mut phi = phi.clone();
            check_velocity_test(&mut phi, grid, prm)?;
            let time = dv
                * (0..3)
                    .map(|c| {
                        st.v.c[c].par_sum(|p, x| (x - prev.v.c[c].at(p)) / dt * phi.c[c].at(p))
                    })
                    .sum::<f64>();
            let adv = face_dot(&advect_velocity(&st.v, grid), &phi, grid);
            let viscous = prm.nu * strain_product(&st.v, &phi, grid);
            let slip = prm.sigma * wall_sum(&st.v, &phi, grid, |a, b, u| (a - u) * b);
            let tau = elastic_stress_field(&st.b, prm, grid);
            let grad_phi = grad_velocity(&phi, grid);
            let elastic = dv * tau.par_sum(|p, t| t.to_mat().frob(&grad_phi.at(p)));
            let work = match forcing.velocity_field(grid, st.t) {
                Some(f) => face_dot(&f, &phi, grid),
                None => 0.0,
            };
            Ok((time + adv + viscous + slip + elastic - work).abs())
        }
        TestField::Tensor(a) => {
            if !a.par_fold(true, |ok, _, t| ok && t.is_finite(), |x, y| x && y) {
                return Err(MonitorError::InvalidTestField(
                    "non-finite tensor test field".into(),
                ));
            }
            let mut a = a.clone();
            fill_cell_ghosts(&mut a, grid);
            let time = dv
                * st.b
                    .par_sum(|p, b| frob(&((b - prev.b.at(p)) * (1.0 / dt)), &a.at(p)));
            let adv = cell_dot(&advect_tensor(&st.v, &st.b, grid), &a, grid);
            let grad = grad_velocity(&st.v, grid);
            let source = dv
                * st.b
                    .par_sum(|p, b| frob(&b_source(&b, &grad.at(p), prm), &a.at(p)));
            let diffusion = prm.lambda_diff * face_gradient_product(&st.b, &a, grid);
            let external = match forcing.tensor.as_ref() {
                Some(g) => dv * a.par_sum(|p, x| frob(&g(st.t, grid.cell_center(p)), &x)),
                None => 0.0,
            };
            Ok((time + adv - source + diffusion - external).abs())
        }
    }
}

fn check_velocity_test(
    phi: &mut VelocityField,
    grid: &Grid,
    prm: &ModelParams,
) -> Result<(), MonitorError> {
    if !phi.is_finite() {
        return Err(MonitorError::InvalidTestField(
            "non-finite velocity test field".into(),
        ));
    }
    for c in 0..3 {
        let wall = phi.c[c].par_fold(
            0.0,
            |m, p, x| {
                if grid.is_wall_node(c, p) {
                    m.max(x.abs())
                } else {
                    m
                }
            },
            f64::max,
        );
        if wall > TEST_TOL {
            return Err(MonitorError::InvalidTestField(format!(
                "normal component {c} is {wall:e} on a wall"
            )));
        }
    }
    // mirror ghosts: a test function carries no boundary condition beyond v·n = 0
    fill_velocity_ghosts(phi, grid, &SlipGhosts::homogeneous(prm.nu, 0.0));
    let div = divergence(phi, grid).max_abs();
    if div > TEST_TOL {
        return Err(MonitorError::InvalidTestField(format!(
            "divergence {div:e} exceeds {TEST_TOL:e}"
        )));
    }
    Ok(())
}

/// Largest relative residual over cells of the gradient identity
/// `∇B·∇J = μγ|∇B|² + μ(1−γ)|B^{-½}∇B B^{-½}|²`, with `∇B` from centered
/// differences.
pub fn gradient_identity_check(
    b: &TensorField,
    grid: &Grid,
    p: &ModelParams,
) -> Result<f64, MonitorError> {
    ensure_positive(b)?;
    let mut b = b.clone();
    fill_cell_ghosts(&mut b, grid);
    let worst = b.par_fold(
        0.0f64,
        |m, q, bq| {
            let grad: [SymTensor3; 3] = std::array::from_fn(|d| {
                if !grid.is_resolved(d) {
                    return SymTensor3::ZERO;
                }
                (get(&b, offset(q, d, 1)) - get(&b, offset(q, d, -1))) * (0.5 / grid.h[d])
            });
            match grad_identity_residual(&bq, &grad, p) {
                Ok((_, rel)) => m.max(rel),
                Err(_) => f64::INFINITY,
            }
        },
        f64::max,
    );
    Ok(worst)
}

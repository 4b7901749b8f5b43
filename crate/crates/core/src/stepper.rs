//! First-order operator-split time integration of the coupled system.
//!
//! One step: explicit advection, objective-derivative source and relaxation
//! for `B`, then implicit diffusion; explicit advection, elastic force and
//! pressure gradient for `v`, then implicit viscosity with slip ghosts, then
//! an incremental pressure projection. With `eps > 0` the source and the
//! relaxation of `B` and the elastic stress are all scaled by the cut-off
//! `ρ_ε(B)`.

use std::ops::ControlFlow;
use std::sync::Arc;

use crate::constitutive::{cutoff_rho_with_lambda, relax_r, stress_s, ModelParams};
use crate::error::{RunError, StepError};
use crate::grid::{advect_tensor, grad_velocity, sym_antisym_split};
use crate::grid::{
    advect_velocity, elastic_force, fill_cell_ghosts, fill_component_ghosts, fill_velocity_ghosts,
    grad_scalar_to_faces, laplacian, pressure_project, solve_helmholtz, Array3, Grid,
    HelmholtzOptions, PoissonSolver, ScalarField, SlipGhosts, TensorField, VelocityField,
};
use crate::spd::{lambda_min, Mat3, SymTensor3};

pub type VectorFn = Arc<dyn Fn(f64, [f64; 3]) -> [f64; 3] + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(f64, [f64; 3]) -> SymTensor3 + Send + Sync>;

/// Body force on the momentum equation and an optional source added to the
/// right side of the `B` equation (used only by manufactured solutions).
#[derive(Clone, Default)]
pub struct Forcing {
    pub velocity: Option<VectorFn>,
    pub tensor: Option<TensorFn>,
}

impl Forcing {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn constant(f: [f64; 3]) -> Self {
        Self {
            velocity: Some(Arc::new(move |_, _| f)),
            tensor: None,
        }
    }

    /// Body force sampled on the faces at time `t`; `None` when absent.
    pub fn velocity_field(&self, grid: &Grid, t: f64) -> Option<VelocityField> {
        let f = self.velocity.as_ref()?;
        Some(grid.velocity_from(|x| f(t, x)))
    }
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forcing")
            .field("velocity", &self.velocity.is_some())
            .field("tensor", &self.tensor.is_some())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub v: VelocityField,
    pub b: TensorField,
    pub p: ScalarField,
    pub params: ModelParams,
    pub grid: Grid,
}

impl SimState {
    /// True when the fields (not time or step counters) agree bitwise.
    pub fn same_fields(&self, other: &SimState) -> bool {
        let bits = |a: &Array3<f64>, b: &Array3<f64>| {
            a.interior().all(|p| a.at(p).to_bits() == b.at(p).to_bits())
        };
        (0..3).all(|c| bits(&self.v.c[c], &other.v.c[c]))
            && bits(&self.p, &other.p)
            && self.b.interior().all(|p| {
                let (x, y) = (self.b.at(p).to_array(), other.b.at(p).to_array());
                x.iter().zip(&y).all(|(u, w)| u.to_bits() == w.to_bits())
            })
    }

    /// Refreshes every ghost layer (tensor mirror, velocity slip rule with the
    /// current elastic traction).
    pub fn refresh_ghosts(&mut self) {
        fill_cell_ghosts(&mut self.b, &self.grid);
        fill_cell_ghosts(&mut self.p, &self.grid);
        let tau = elastic_stress_field(&self.b, &self.params, &self.grid);
        let slip = SlipGhosts::with_traction(self.params.nu, self.params.sigma, &tau);
        fill_velocity_ghosts(&mut self.v, &self.grid, &slip);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub cfl: f64,
    pub poisson_iterations: usize,
    pub diffusion_iterations: usize,
    pub viscous_iterations: usize,
    pub min_lambda: f64,
    pub min_lambda_cell: [usize; 3],
    pub min_det: f64,
    pub max_b_norm: f64,
    pub max_divergence: f64,
    pub wall_seconds: f64,
}

/// Pointwise extrema of a tensor field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorScan {
    pub min_lambda: f64,
    pub argmin: [usize; 3],
    pub min_det: f64,
    pub max_norm: f64,
    pub finite: bool,
}

pub fn scan_tensor(b: &TensorField) -> TensorScan {
    let init = TensorScan {
        min_lambda: f64::INFINITY,
        argmin: [0; 3],
        min_det: f64::INFINITY,
        max_norm: 0.0,
        finite: true,
    };
    b.par_fold(
        init,
        |mut acc, p, t| {
            if !t.is_finite() {
                acc.finite = false;
                return acc;
            }
            let l = lambda_min(&t);
            if l < acc.min_lambda {
                acc.min_lambda = l;
                acc.argmin = p;
            }
            acc.min_det = acc.min_det.min(t.det());
            acc.max_norm = acc.max_norm.max(t.norm());
            acc
        },
        |x, y| TensorScan {
            // ties resolve to the earlier row, which keeps argmin deterministic
            min_lambda: x.min_lambda.min(y.min_lambda),
            argmin: if y.min_lambda < x.min_lambda {
                y.argmin
            } else {
                x.argmin
            },
            min_det: x.min_det.min(y.min_det),
            max_norm: x.max_norm.max(y.max_norm),
            finite: x.finite && y.finite,
        },
    )
}

/// `ρ_ε(B)`, identically 1 when the regularization is off.
#[inline]
pub fn cutoff_factor(b: &SymTensor3, p: &ModelParams) -> f64 {
    if p.eps > 0.0 {
        cutoff_rho_with_lambda(b, lambda_min(b), p.eps)
    } else {
        1.0
    }
}

/// Objective-derivative source `a(DB + BD) + (WB − BW)`.
#[inline]
pub fn objective_source(b: &SymTensor3, d: &SymTensor3, w: &Mat3, a: f64) -> SymTensor3 {
    let bm = b.to_mat();
    let spin = SymTensor3::sym_part(&w.mul(&bm).sub(&bm.mul(w)));
    let mut out = spin;
    if a != 0.0 {
        out += d.sym_product(b) * (2.0 * a);
    }
    out
}

/// Local right side of the `B` equation without transport and diffusion:
/// `ρ_ε(B) [a(DB + BD) + (WB − BW) − R(B)]`.
#[inline]
pub fn b_source(b: &SymTensor3, grad_v: &Mat3, p: &ModelParams) -> SymTensor3 {
    let rho = cutoff_factor(b, p);
    if rho == 0.0 {
        return SymTensor3::ZERO;
    }
    let (d, w) = sym_antisym_split(grad_v);
    let src = objective_source(b, &d, &w, p.a) - relax_r(b, p);
    if rho == 1.0 {
        src
    } else {
        src * rho
    }
}

/// Elastic part of the Cauchy stress, `2aμ ρ_ε(B) S(B)`.
#[inline]
pub fn elastic_stress(b: &SymTensor3, p: &ModelParams) -> SymTensor3 {
    if p.a == 0.0 {
        return SymTensor3::ZERO;
    }
    let rho = cutoff_factor(b, p);
    if rho == 0.0 {
        return SymTensor3::ZERO;
    }
    stress_s(b, p) * (2.0 * p.a * p.mu * rho)
}

/// Elastic stress per cell with ghosts filled.
pub fn elastic_stress_field(b: &TensorField, p: &ModelParams, grid: &Grid) -> TensorField {
    let mut tau = grid.tensor(SymTensor3::ZERO);
    tau.par_fill(|q| elastic_stress(&b.at(q), p));
    fill_cell_ghosts(&mut tau, grid);
    tau
}

/// Regularized initial datum: cells with `Λ(B₀) ≤ eps` are replaced by `I`.
pub fn regularize_initial_b(b0: &TensorField, eps: f64) -> TensorField {
    let mut out = b0.clone();
    out.par_update(|_, t| {
        if lambda_min(&t) > eps {
            t
        } else {
            SymTensor3::IDENTITY
        }
    });
    out
}

/// `max_c max|v_c| dt / h_c` over resolved directions.
pub fn cfl_number(v: &VelocityField, grid: &Grid, dt: f64) -> f64 {
    (0..3)
        .filter(|&c| grid.is_resolved(c))
        .map(|c| v.c[c].max_abs() * dt / grid.h[c])
        .fold(0.0, f64::max)
}

/// Final state of [`Stepper::run`]: the last valid state and, if the run
/// stopped on a failure, the error.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: SimState,
    pub error: Option<RunError>,
}

/// Seconds since the call. Browsers expose no monotonic clock to plain
/// wasm, so it reads zero there.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> f64 {
    let start = std::time::Instant::now();
    move || start.elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> f64 {
    || 0.0
}

/// Time integrator bound to one grid. Holds the pressure solver setup.
pub struct Stepper {
    pub grid: Grid,
    pub forcing: Forcing,
    pub cfl_limit: f64,
    pub helmholtz: HelmholtzOptions,
    poisson: PoissonSolver,
}

impl Stepper {
    pub fn new(grid: Grid, forcing: Forcing) -> Self {
        Self {
            poisson: PoissonSolver::new(&grid),
            grid,
            forcing,
            cfl_limit: 0.5,
            helmholtz: HelmholtzOptions::default(),
        }
    }

    pub fn poisson(&self) -> &PoissonSolver {
        &self.poisson
    }

    pub fn poisson_mut(&mut self) -> &mut PoissonSolver {
        &mut self.poisson
    }

    /// Builds the initial state: `v₀` is projected onto discretely
    /// divergence-free fields, `B₀` is checked for positivity, or replaced
    /// by its regularization when `eps > 0`.
    pub fn init_state(
        &self,
        v0: VelocityField,
        b0: TensorField,
        params: ModelParams,
    ) -> Result<SimState, StepError> {
        let grid = &self.grid;
        let b = if params.eps > 0.0 {
            regularize_initial_b(&b0, params.eps)
        } else {
            let scan = scan_tensor(&b0);
            if !scan.finite {
                return Err(StepError::NonFinite { field: "B0" });
            }
            if scan.min_lambda <= 0.0 {
                return Err(StepError::InadmissibleInitialData {
                    cell: scan.argmin,
                    lambda_min: scan.min_lambda,
                });
            }
            b0
        };
        let mut v = v0;
        if !v.is_finite() {
            return Err(StepError::NonFinite { field: "v0" });
        }
        pressure_project(&mut v, grid, 1.0, &self.poisson)?;
        let mut s = SimState {
            t: 0.0,
            step: 0,
            v,
            b,
            p: grid.scalar(),
            params,
            grid: grid.clone(),
        };
        s.refresh_ghosts();
        Ok(s)
    }

    /// One time step. The input state is never modified.
    pub fn step(&self, s: &SimState, dt: f64) -> Result<(SimState, StepReport), StepError> {
        let elapsed = stopwatch();
        if !(dt.is_finite() && dt > 0.0) {
            return Err(StepError::InvalidTimeStep(dt));
        }
        let grid = &self.grid;
        let prm = &s.params;
        let t1 = s.t + dt;

        let mut b = s.b.clone();
        fill_cell_ghosts(&mut b, grid);
        let tau = elastic_stress_field(&b, prm, grid);
        let slip = SlipGhosts::with_traction(prm.nu, prm.sigma, &tau);
        let mut v = s.v.clone();
        fill_velocity_ghosts(&mut v, grid, &slip);

        let cfl = cfl_number(&v, grid, dt);
        if cfl > self.cfl_limit {
            return Err(StepError::CflViolation {
                cfl,
                limit: self.cfl_limit,
            });
        }

        // conformation tensor: explicit part
        let adv_b = advect_tensor(&v, &b, grid);
        let grad = grad_velocity(&v, grid);
        let gb = self.forcing.tensor.as_ref();
        let mut b_star = grid.tensor(SymTensor3::IDENTITY);
        b_star.par_fill(|p| {
            let bp = b.at(p);
            let mut rate = b_source(&bp, &grad.at(p), prm) - adv_b.at(p);
            if let Some(g) = gb {
                rate += g(t1, grid.cell_center(p));
            }
            bp + rate * dt
        });

        // conformation tensor: implicit diffusion
        let (b_new, diffusion_iterations) = if prm.lambda_diff > 0.0 {
            self.implicit_tensor_diffusion(&b_star, dt * prm.lambda_diff)?
        } else {
            (b_star, 0)
        };
        let scan = scan_tensor(&b_new);
        if !scan.finite {
            return Err(StepError::NonFinite { field: "B" });
        }
        if scan.min_lambda <= 0.0 {
            return Err(StepError::PositivityLoss {
                cell: scan.argmin,
                lambda_min: scan.min_lambda,
            });
        }

        // velocity: explicit part
        let adv_v = advect_velocity(&v, grid);
        let force = elastic_force(&tau, grid);
        let mut p_old = s.p.clone();
        fill_cell_ghosts(&mut p_old, grid);
        let grad_p = grad_scalar_to_faces(&p_old, grid);
        let body = self.forcing.velocity_field(grid, t1);
        let mut v_star = grid.velocity();
        for c in 0..3 {
            let (vc, ac, fc, gc) = (&v.c[c], &adv_v.c[c], &force.c[c], &grad_p.c[c]);
            let bc = body.as_ref().map(|f| &f.c[c]);
            v_star.c[c].par_fill(|p| {
                if grid.is_wall_node(c, p) {
                    return 0.0;
                }
                let mut rate = fc.at(p) - ac.at(p) - gc.at(p);
                if let Some(f) = bc {
                    rate += f.at(p);
                }
                vc.at(p) + dt * rate
            });
        }

        // velocity: implicit viscosity, slip traction moved to the right side
        let kappa = dt * prm.nu;
        let mut wall = grid.velocity();
        fill_velocity_ghosts(&mut wall, grid, &slip);
        let homogeneous = SlipGhosts::homogeneous(prm.nu, prm.sigma);
        let mut v_new = grid.velocity();
        let mut viscous_iterations = 0;
        for c in 0..3 {
            let affine = laplacian(&wall.c[c], grid.h);
            let mut rhs = v_star.c[c].clone();
            rhs.par_update(|p, x| {
                if grid.is_wall_node(c, p) {
                    0.0
                } else {
                    x + kappa * affine.at(p)
                }
            });
            let mut x = v_star.c[c].clone();
            let fill = |a: &mut Array3<f64>| fill_component_ghosts(a, c, grid, &homogeneous);
            let active = |p: [usize; 3]| !grid.is_wall_node(c, p);
            viscous_iterations +=
                solve_helmholtz(&mut x, &rhs, kappa, grid.h, &fill, &active, self.helmholtz)?;
            v_new.c[c] = x;
        }

        let (phi, proj) = pressure_project(&mut v_new, grid, dt, &self.poisson)?;
        if !v_new.is_finite() {
            return Err(StepError::NonFinite { field: "v" });
        }
        let mut p_new = s.p.clone();
        p_new.axpy(1.0, &phi);

        let mut out = SimState {
            t: t1,
            step: s.step + 1,
            v: v_new,
            b: b_new,
            p: p_new,
            params: *prm,
            grid: grid.clone(),
        };
        out.refresh_ghosts();
        let report = StepReport {
            step: out.step,
            t: t1,
            dt,
            cfl,
            poisson_iterations: proj.iterations,
            diffusion_iterations,
            viscous_iterations,
            min_lambda: scan.min_lambda,
            min_lambda_cell: scan.argmin,
            min_det: scan.min_det,
            max_b_norm: scan.max_norm,
            max_divergence: proj.max_divergence,
            wall_seconds: elapsed(),
        };
        Ok((out, report))
    }

    /// Solves `(I − κΔ)B = B*` componentwise with Neumann/periodic ghosts.
    fn implicit_tensor_diffusion(
        &self,
        b_star: &TensorField,
        kappa: f64,
    ) -> Result<(TensorField, usize), StepError> {
        let grid = &self.grid;
        let mut out = b_star.clone();
        let mut iterations = 0;
        let fill = |a: &mut Array3<f64>| fill_cell_ghosts(a, grid);
        for k in 0..6 {
            let mut rhs = grid.scalar();
            rhs.par_fill(|p| b_star.at(p).to_array()[k]);
            let mut x = rhs.clone();
            iterations += solve_helmholtz(
                &mut x,
                &rhs,
                kappa,
                grid.h,
                &fill,
                &|_| true,
                self.helmholtz,
            )?;
            out.par_update(|p, t| {
                let mut a = t.to_array();
                a[k] = x.at(p);
                SymTensor3::from_array(a)
            });
        }
        Ok((out, iterations))
    }

    /// Steps from `s0` to `t_end` (the last step is shortened to land on it)
    /// and calls `monitor` after every step. Stops at the first error or when
    /// the monitor breaks, returning the last valid state.
    pub fn run<F>(&self, s0: SimState, t_end: f64, dt: f64, mut monitor: F) -> RunOutcome
    where
        F: FnMut(&SimState, &StepReport) -> ControlFlow<()>,
    {
        let mut s = s0;
        let tol = 1e-12 * t_end.abs().max(1.0);
        while s.t < t_end - tol {
            let h = dt.min(t_end - s.t);
            match self.step(&s, h) {
                Ok((next, report)) => {
                    s = next;
                    if monitor(&s, &report).is_break() {
                        break;
                    }
                }
                Err(source) => {
                    let step = s.step + 1;
                    return RunOutcome {
                        state: s,
                        error: Some(RunError { step, source }),
                    };
                }
            }
        }
        RunOutcome {
            state: s,
            error: None,
        }
    }
}

/// Integrates the cell-local `B` system under a frozen velocity gradient
/// with classical RK4 (reference for single-cell checks).
pub fn integrate_local(
    b0: SymTensor3,
    grad_v: &Mat3,
    p: &ModelParams,
    t: f64,
    steps: usize,
) -> SymTensor3 {
    let h = t / steps as f64;
    let f = |b: &SymTensor3| b_source(b, grad_v, p);
    let mut b = b0;
    for _ in 0..steps {
        let k1 = f(&b);
        let k2 = f(&(b + k1 * (0.5 * h)));
        let k3 = f(&(b + k2 * (0.5 * h)));
        let k4 = f(&(b + k3 * h));
        b += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    b
}

//! Verification and regularization studies built on the stepper:
//! manufactured-solution ladders, the steady slip channel, and the ε and γ
//! sweeps.

use std::ops::ControlFlow;

use crate::constitutive::{cutoff_rho, ModelParams};
use crate::error::{GridError, RunError, StepError};
use crate::grid::{FaceBc, Grid, TensorField, VelocityField};
use crate::manufactured::{Manufactured, TimeProfile};
use crate::monitor::{compute_budget, BudgetTracker};
use crate::spd::{Mat3, SymTensor3};
use crate::stepper::{integrate_local, regularize_initial_b, Forcing, SimState, Stepper};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("{0}")]
    Setup(String),
}

/// Observed order `log2(e_coarse / e_fine)` for a factor-2 refinement.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn run_to(stepper: &Stepper, s0: SimState, t_end: f64, dt: f64) -> Result<SimState, RunError> {
    let out = stepper.run(s0, t_end, dt, |_, _| ControlFlow::Continue(()));
    match out.error {
        Some(e) => Err(e),
        None => Ok(out.state),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsSetup {
    /// Coarsest cells per side; the ladder doubles it `levels − 1` times.
    pub base_n: usize,
    pub levels: usize,
    pub lengths: [f64; 2],
    pub velocity_amplitude: f64,
    pub beta: f64,
    pub cfl: f64,
    pub t_end: f64,
    pub params: ModelParams,
}

impl Default for MmsSetup {
    fn default() -> Self {
        Self {
            base_n: 16,
            levels: 3,
            lengths: [1.0, 1.0],
            velocity_amplitude: 0.25,
            beta: 0.25,
            cfl: 0.3,
            t_end: 1.0,
            params: ModelParams::oldroyd_b(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MmsRow {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub err_v: f64,
    pub err_b: f64,
    /// Orders against the previous row (NaN on the first).
    pub order_v: f64,
    pub order_b: f64,
}

impl MmsSetup {
    fn grid(&self, n: usize) -> Result<Grid, GridError> {
        Grid::periodic([n, n, 1], [self.lengths[0], self.lengths[1], 1.0])
    }

    fn solution(&self, time: TimeProfile) -> Manufactured {
        Manufactured::standard(
            [self.lengths[0], self.lengths[1], 1.0],
            self.velocity_amplitude,
            self.beta,
            time,
            self.params,
        )
    }

    fn run_one(&self, m: &Manufactured, n: usize, dt: f64) -> Result<(f64, f64), StudyError> {
        if self.params.eps != 0.0 {
            return Err(StudyError::Setup(
                "manufactured solutions need eps = 0".into(),
            ));
        }
        let grid = self.grid(n)?;
        let stepper = Stepper::new(grid.clone(), m.forcing());
        let s0 = stepper.init_state(
            m.sample_velocity(&grid, 0.0),
            m.sample_tensor(&grid, 0.0),
            self.params,
        )?;
        let s = run_to(&stepper, s0, self.t_end, dt)?;
        Ok(m.errors(&grid, &s.v, &s.b, s.t))
    }

    fn dt_for(&self, n: usize) -> f64 {
        let h = self.lengths[0].min(self.lengths[1]) / n as f64;
        let umax = self.velocity_amplitude * (1.0f64).max(self.lengths[1] / self.lengths[0]);
        self.cfl * h / umax.max(1e-12)
    }

    /// Stationary pair on the ladder `base_n · 2^i`; the discrete steady
    /// state carries no time-splitting error, so the errors are spatial.
    pub fn spatial(&self) -> Result<Vec<MmsRow>, StudyError> {
        let m = self.solution(TimeProfile::Stationary);
        let mut rows: Vec<MmsRow> = Vec::new();
        for i in 0..self.levels {
            let n = self.base_n << i;
            let dt = self.dt_for(n);
            let (err_v, err_b) = self.run_one(&m, n, dt)?;
            let (order_v, order_b) = match rows.last() {
                Some(prev) => (
                    observed_order(prev.err_v, err_v),
                    observed_order(prev.err_b, err_b),
                ),
                None => (f64::NAN, f64::NAN),
            };
            rows.push(MmsRow {
                n,
                h: self.lengths[0] / n as f64,
                dt,
                err_v,
                err_b,
                order_v,
                order_b,
            });
        }
        Ok(rows)
    }

    /// Oscillating pair at fixed `n` on the ladder `dt0 / 2^i`. Orders come
    /// from successive differences of the final states, which cancels the
    /// spatial error shared by all runs; the errors against the exact
    /// solution are reported alongside.
    pub fn temporal(
        &self,
        n: usize,
        dt0: f64,
        levels: usize,
        omega: f64,
    ) -> Result<Vec<MmsRow>, StudyError> {
        let m = self.solution(TimeProfile::Oscillating { omega });
        let grid = self.grid(n)?;
        let stepper = Stepper::new(grid.clone(), m.forcing());
        let mut finals: Vec<SimState> = Vec::new();
        let mut rows = Vec::new();
        for i in 0..levels.max(3) {
            let dt = dt0 / (1u64 << i) as f64;
            let s0 = stepper.init_state(
                m.sample_velocity(&grid, 0.0),
                m.sample_tensor(&grid, 0.0),
                self.params,
            )?;
            let s = run_to(&stepper, s0, self.t_end, dt)?;
            let (err_v, err_b) = m.errors(&grid, &s.v, &s.b, s.t);
            finals.push(s);
            rows.push(MmsRow {
                n,
                h: self.lengths[0] / n as f64,
                dt,
                err_v,
                err_b,
                order_v: f64::NAN,
                order_b: f64::NAN,
            });
        }
        for i in 2..rows.len() {
            let (dv1, db1) = state_distance(&finals[i - 2], &finals[i - 1]);
            let (dv2, db2) = state_distance(&finals[i - 1], &finals[i]);
            rows[i].order_v = observed_order(dv1, dv2);
            rows[i].order_b = observed_order(db1, db2);
        }
        Ok(rows)
    }
}

/// L² distances `(‖v₁ − v₂‖, ‖B₁ − B₂‖)` between states on the same grid.
pub fn state_distance(a: &SimState, b: &SimState) -> (f64, f64) {
    (
        velocity_distance(&a.v, &b.v, &a.grid),
        tensor_distance(&a.b, &b.b, &a.grid),
    )
}

pub fn velocity_distance(a: &VelocityField, b: &VelocityField, grid: &Grid) -> f64 {
    let s: f64 = (0..3)
        .map(|c| a.c[c].par_sum(|p, x| (x - b.c[c].at(p)).powi(2)))
        .sum();
    (s * grid.cell_volume()).sqrt()
}

pub fn tensor_distance(a: &TensorField, b: &TensorField, grid: &Grid) -> f64 {
    (a.par_sum(|p, x| (x - b.at(p)).norm_sq()) * grid.cell_volume()).sqrt()
}

/// Steady plane Couette flow between a wall at rest (`y = 0`) and a wall
/// moving at `u_wall` (`y = L`), both with Navier slip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouetteResult {
    pub shear_rate: f64,
    pub slip_exact: f64,
    pub slip_numeric: f64,
    /// Max relative deviation of the computed profile from the exact one.
    pub profile_error: f64,
    /// Max relative deviation from the no-slip profile `U y / L`.
    pub noslip_deviation: f64,
}

/// Homogeneous steady conformation under simple shear `γ̇ e_x ⊗ e_y`,
/// integrated with the cell-local ODE until it stops changing.
pub fn steady_shear_conformation(shear_rate: f64, p: &ModelParams) -> SymTensor3 {
    let g = Mat3([[0.0, shear_rate, 0.0], [0.0; 3], [0.0; 3]]);
    let mut b = SymTensor3::IDENTITY;
    for _ in 0..200 {
        let next = integrate_local(b, &g, p, 1.0, 200);
        let done = (next - b).norm() < 1e-14 * next.norm();
        b = next;
        if done {
            break;
        }
    }
    b
}

/// Total shear stress `νγ̇ + τ_xy` of the homogeneous steady state.
fn shear_stress(shear_rate: f64, p: &ModelParams) -> f64 {
    let b = steady_shear_conformation(shear_rate, p);
    let tau = crate::stepper::elastic_stress(&b, p);
    p.nu * shear_rate + tau.get(0, 1)
}

/// Exact shear rate and slip velocity: the stress `Σ(γ̇)` is uniform, each
/// wall slips by `Σ/σ`, so `2Σ/σ + γ̇L = U`. Solved by bisection (Σ is
/// increasing in γ̇ for the admissible models).
pub fn couette_exact(length: f64, u_wall: f64, p: &ModelParams) -> (f64, f64) {
    let f = |g: f64| {
        let sigma_term = if p.sigma.is_finite() && p.sigma > 0.0 {
            2.0 * shear_stress(g, p) / p.sigma
        } else {
            0.0
        };
        sigma_term + g * length - u_wall
    };
    let (mut lo, mut hi) = (0.0, u_wall / length);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    let slip = if p.sigma > 0.0 {
        shear_stress(g, p) / p.sigma
    } else {
        f64::INFINITY
    };
    (g, slip)
}

/// Runs the slip channel to steady state on `n` cells across.
pub fn couette(
    n: usize,
    u_wall: f64,
    p: ModelParams,
    t_end: f64,
    dt: f64,
) -> Result<CouetteResult, StudyError> {
    let mut bc = [[FaceBc::Periodic; 2]; 3];
    bc[1] = [FaceBc::NavierSlip; 2];
    let grid =
        Grid::new([1, n, 1], [1.0, 1.0, 1.0], bc)?.with_wall_velocity(1, 1, [u_wall, 0.0, 0.0])?;
    let stepper = Stepper::new(grid.clone(), Forcing::none());
    let s0 = stepper.init_state(grid.velocity(), grid.tensor(SymTensor3::IDENTITY), p)?;
    let s = run_to(&stepper, s0, t_end, dt)?;
    let (shear_rate, slip_exact) = couette_exact(1.0, u_wall, &p);
    let h = grid.h[1];
    // wall value is the mean of the first node and its ghost
    let slip_numeric = 0.5 * (s.v.c[0].get(0, 0, 0) + s.v.c[0].get(0, -1, 0));
    let mut profile_error: f64 = 0.0;
    let mut noslip_deviation: f64 = 0.0;
    for j in 0..n {
        let y = (j as f64 + 0.5) * h;
        let v = s.v.c[0].at([0, j, 0]);
        profile_error = profile_error.max((v - slip_exact - shear_rate * y).abs() / u_wall.abs());
        noslip_deviation = noslip_deviation.max((v - u_wall * y).abs() / u_wall.abs());
    }
    Ok(CouetteResult {
        shear_rate,
        slip_exact,
        slip_numeric,
        profile_error,
        noslip_deviation,
    })
}

/// Runs the scenario once per `eps` (plus the reference `eps = 0`) and
/// compares final states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsRow {
    pub eps: f64,
    pub dist_v: f64,
    pub dist_b: f64,
    /// `sqrt(dist_v² + dist_b²)`.
    pub dist: f64,
    /// `‖B₀^ε − B₀‖`.
    pub initial_replacement: f64,
    /// `min ρ_ε(B₀)` over cells.
    pub min_rho0: f64,
    pub min_lambda: f64,
}

/// Initial data and forcing of a study run.
#[derive(Clone)]
pub struct Case {
    pub grid: Grid,
    pub v0: VelocityField,
    pub b0: TensorField,
    pub forcing: Forcing,
    pub params: ModelParams,
    pub dt: f64,
    pub t_end: f64,
}

fn run_case(case: &Case, params: ModelParams) -> Result<(SimState, f64), StudyError> {
    let stepper = Stepper::new(case.grid.clone(), case.forcing.clone());
    let s0 = stepper.init_state(case.v0.clone(), case.b0.clone(), params)?;
    let mut min_lambda = crate::stepper::scan_tensor(&s0.b).min_lambda;
    let out = stepper.run(s0, case.t_end, case.dt, |_, r| {
        min_lambda = min_lambda.min(r.min_lambda);
        ControlFlow::Continue(())
    });
    match out.error {
        Some(e) => Err(e.into()),
        None => Ok((out.state, min_lambda)),
    }
}

pub fn sweep_eps(case: &Case, eps_list: &[f64]) -> Result<Vec<EpsRow>, StudyError> {
    let reference = ModelParams {
        eps: 0.0,
        ..case.params
    };
    let (s_ref, _) = run_case(case, reference)?;
    let mut rows = Vec::new();
    for &eps in eps_list {
        if eps <= 0.0 {
            continue;
        }
        let params = ModelParams { eps, ..case.params };
        let (s, min_lambda) = run_case(case, params)?;
        let (dist_v, dist_b) = state_distance(&s, &s_ref);
        let b0e = regularize_initial_b(&case.b0, eps);
        let min_rho0 = case
            .b0
            .par_fold(1.0f64, |m, _, b| m.min(cutoff_rho(&b, eps)), f64::min);
        rows.push(EpsRow {
            eps,
            dist_v,
            dist_b,
            dist: dist_v.hypot(dist_b),
            initial_replacement: tensor_distance(&b0e, &case.b0, &case.grid),
            min_rho0,
            min_lambda,
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    pub energy0: f64,
    pub energy: f64,
    pub free_energy: f64,
    pub max_residual: f64,
    pub min_lambda: f64,
}

/// Runs the scenario once per `gamma` and reports the energy budget.
pub fn sweep_gamma(case: &Case, gammas: &[f64]) -> Result<Vec<GammaRow>, StudyError> {
    let mut rows = Vec::new();
    for &gamma in gammas {
        let params = ModelParams {
            gamma,
            ..case.params
        };
        let stepper = Stepper::new(case.grid.clone(), case.forcing.clone());
        let s0 = stepper.init_state(case.v0.clone(), case.b0.clone(), params)?;
        let mut tracker = BudgetTracker::new();
        let mut b0 =
            compute_budget(&s0, &case.forcing).map_err(|e| StudyError::Setup(e.to_string()))?;
        tracker.record(&mut b0);
        let mut last = b0;
        let mut max_residual: f64 = 0.0;
        let mut min_lambda = crate::stepper::scan_tensor(&s0.b).min_lambda;
        let mut failure = None;
        let out = stepper.run(s0, case.t_end, case.dt, |s, r| {
            min_lambda = min_lambda.min(r.min_lambda);
            match compute_budget(s, &case.forcing) {
                Ok(mut b) => {
                    max_residual = max_residual.max(tracker.record(&mut b).signed.abs());
                    last = b;
                    ControlFlow::Continue(())
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    ControlFlow::Break(())
                }
            }
        });
        if let Some(e) = out.error {
            return Err(e.into());
        }
        if let Some(msg) = failure {
            return Err(StudyError::Setup(msg));
        }
        rows.push(GammaRow {
            gamma,
            energy0: b0.energy(),
            energy: last.energy(),
            free_energy: last.free_energy,
            max_residual,
            min_lambda,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_convected_shear_state_has_closed_form() {
        let p = ModelParams::oldroyd_b();
        let g = 0.7;
        let b = steady_shear_conformation(g, &p);
        assert!((b.get(0, 1) - g).abs() < 1e-10);
        assert!((b.get(0, 0) - (1.0 + 2.0 * g * g)).abs() < 1e-10);
        assert!((b.get(1, 1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn newtonian_couette_has_closed_form() {
        let p = ModelParams {
            a: 0.0,
            sigma: 2.0,
            nu: 0.5,
            ..ModelParams::oldroyd_b()
        };
        let (g, slip) = couette_exact(1.0, 1.0, &p);
        // γ̇ = σU/(2ν + σL), slip = νγ̇/σ
        assert!((g - 2.0 / 3.0).abs() < 1e-12);
        assert!((slip - 0.5 * g / 2.0).abs() < 1e-12);
    }
}

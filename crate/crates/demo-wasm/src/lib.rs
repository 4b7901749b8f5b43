//! Browser demo: cut-off and free-energy curves, a pointwise tensor probe
//! and a small two-dimensional run with a live minimal-eigenvalue map.

use wasm_bindgen::prelude::*;

use viscoflow::constitutive::{bj_identity_residual, cutoff_rho, free_energy};
use viscoflow::monitor::compute_budget;
use viscoflow::scenario::{ScenarioKind, ScenarioSpec};
use viscoflow::spd::{eig_sym3, lambda_min};
use viscoflow::stepper::{Forcing, SimState, Stepper};
use viscoflow::{ModelParams, SymTensor3};

fn params(gamma: f64, eps: f64) -> ModelParams {
    ModelParams {
        gamma,
        eps,
        ..ModelParams::oldroyd_b()
    }
}

/// Samples the uniaxial family `B = diag(s, 1, 1)` for `s` in
/// `[s_min, s_max]`. Returns `samples` rows of `(s, ρ_ε(B), ψ(B))`
/// flattened; `ψ` is NaN where `B` is not positive definite.
#[wasm_bindgen]
pub fn curves(eps: f64, gamma: f64, s_min: f64, s_max: f64, samples: usize) -> Vec<f64> {
    let p = params(gamma, eps);
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(3 * samples);
    for i in 0..samples {
        let s = s_min + (s_max - s_min) * i as f64 / (samples - 1) as f64;
        let b = SymTensor3::new(s, 1.0, 1.0, 0.0, 0.0, 0.0);
        out.push(s);
        out.push(cutoff_rho(&b, eps));
        out.push(free_energy(&b, &p).unwrap_or(f64::NAN));
    }
    out
}

fn json_array(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(","))
}

fn json_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "null".into()
    }
}

/// Pointwise diagnostics of one conformation tensor, as a JSON object:
/// eigenvalues, determinant, cut-off factor, free energy and the residual
/// of `B J = μ S(B)` (the last two are null off the positive cone).
#[wasm_bindgen]
pub fn inspect(entries: &[f64], gamma: f64, eps: f64) -> Result<String, JsError> {
    let e: [f64; 6] = entries
        .try_into()
        .map_err(|_| JsError::new("expected six entries: b11 b22 b33 b12 b13 b23"))?;
    let b = SymTensor3::from_array(e);
    if !b.is_finite() {
        return Err(JsError::new("entries must be finite"));
    }
    let p = params(gamma, eps);
    let spec = eig_sym3(&b);
    let psi = free_energy(&b, &p).unwrap_or(f64::NAN);
    let bj = bj_identity_residual(&b, &p)
        .map(|r| r.1)
        .unwrap_or(f64::NAN);
    Ok(format!(
        "{{\"eigenvalues\":{},\"det\":{},\"positive_definite\":{},\"rho\":{},\"free_energy\":{},\"bj_residual\":{}}}",
        json_array(&spec.values),
        json_number(b.det()),
        spec.values[0] > 0.0,
        json_number(cutoff_rho(&b, eps)),
        json_number(psi),
        json_number(bj),
    ))
}

/// A periodic or walled 2D run on an `n × n` slab.
#[wasm_bindgen]
pub struct Run {
    stepper: Stepper,
    state: SimState,
    forcing: Forcing,
    dt: f64,
    last_error: Option<String>,
}

#[wasm_bindgen]
impl Run {
    /// `scenario` is one of `taylor_green`, `shear_decay`,
    /// `lid_slip_cavity`, `rest_state`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        scenario: &str,
        n: usize,
        perturbation: f64,
        gamma: f64,
        eps: f64,
    ) -> Result<Run, JsError> {
        let kind = ScenarioKind::parse(scenario).ok_or_else(|| JsError::new("unknown scenario"))?;
        let p = params(gamma, eps);
        p.validate().map_err(|e| JsError::new(&e.to_string()))?;
        let spec = ScenarioSpec {
            kind,
            n: [n, n, 1],
            perturbation,
            ..Default::default()
        };
        let sc = spec.build().map_err(|e| JsError::new(&e.to_string()))?;
        let dt = sc.auto_dt(0.3);
        let stepper = Stepper::new(sc.grid.clone(), sc.forcing.clone());
        let state = stepper
            .init_state(sc.v0, sc.b0, p)
            .map_err(|e| JsError::new(&e.to_string()))?;
        Ok(Run {
            stepper,
            state,
            forcing: sc.forcing,
            dt,
            last_error: None,
        })
    }

    /// Advances up to `steps` steps; stops early on a numerical failure,
    /// which is then reported by `error()`.
    pub fn advance(&mut self, steps: usize) -> usize {
        for k in 0..steps {
            if self.last_error.is_some() {
                return k;
            }
            match self.stepper.step(&self.state, self.dt) {
                Ok((next, _)) => self.state = next,
                Err(e) => {
                    self.last_error = Some(e.to_string());
                    return k;
                }
            }
        }
        steps
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn error(&self) -> Option<String> {
        self.last_error.clone()
    }

    /// Kinetic energy plus the integrated free energy.
    pub fn energy(&self) -> f64 {
        compute_budget(&self.state, &self.forcing).map_or(f64::NAN, |b| b.energy())
    }

    /// Minimal eigenvalue of `B` per cell, row-major with `x` fastest.
    pub fn lambda_field(&self) -> Vec<f64> {
        let b = &self.state.b;
        b.interior().map(|c| lambda_min(&b.at(c))).collect()
    }
}

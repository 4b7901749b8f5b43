//! Manufactured solutions: exact fields built from trigonometric products,
//! differentiated symbolically, and the body forces that make them solve the
//! coupled system.

use std::sync::Arc;

use crate::constitutive::ModelParams;
use crate::grid::{Grid, TensorField, VelocityField};
use crate::spd::{Mat3, SymTensor3};
use crate::stepper::{b_source, elastic_stress, Forcing};

/// `coeff · Π_d f_d(k_d x_d)` with `f_d` cosine or sine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub coeff: f64,
    pub k: [f64; 3],
    pub cos: [bool; 3],
}

impl TrigTerm {
    fn eval(&self, x: [f64; 3]) -> f64 {
        let mut v = self.coeff;
        for d in 0..3 {
            let a = self.k[d] * x[d];
            v *= if self.cos[d] { a.cos() } else { a.sin() };
        }
        v
    }

    fn deriv(&self, d: usize) -> TrigTerm {
        let mut t = *self;
        t.coeff *= if self.cos[d] { -self.k[d] } else { self.k[d] };
        t.cos[d] = !self.cos[d];
        t
    }
}

/// Finite sum of [`TrigTerm`]s, closed under differentiation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trig {
    pub terms: Vec<TrigTerm>,
}

impl Trig {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::term(c, [0.0; 3], [true; 3])
    }

    pub fn term(coeff: f64, k: [f64; 3], cos: [bool; 3]) -> Self {
        Self {
            terms: vec![TrigTerm { coeff, k, cos }],
        }
    }

    pub fn plus(mut self, other: &Trig) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for t in &mut self.terms {
            t.coeff *= s;
        }
        self
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    pub fn deriv(&self, d: usize) -> Trig {
        Trig {
            terms: self
                .terms
                .iter()
                .filter(|t| t.k[d] != 0.0)
                .map(|t| t.deriv(d))
                .collect(),
        }
    }

    pub fn laplacian(&self) -> Trig {
        (0..3).fold(Trig::zero(), |acc, d| acc.plus(&self.deriv(d).deriv(d)))
    }
}

/// Amplitude modulation in time, shared by the velocity and the tensor
/// perturbation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeProfile {
    Stationary,
    /// `1 + ½ sin(ωt)`.
    Oscillating {
        omega: f64,
    },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Stationary => 1.0,
            TimeProfile::Oscillating { omega } => 1.0 + 0.5 * (omega * t).sin(),
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Stationary => 0.0,
            TimeProfile::Oscillating { omega } => 0.5 * omega * (omega * t).cos(),
        }
    }
}

/// Exact pair `v* = T(t) curl(0, 0, ψ)`, `B* = I + β T(t) M(x)` on a periodic
/// box; the entries of `M` are bounded so that every Gershgorin row sum is at
/// most 2, hence `Λ(B*) ≥ 1 − 2β·max T`.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub psi: Trig,
    pub v: [Trig; 3],
    /// Components of `M` in [`SymTensor3::to_array`] order.
    pub m: [Trig; 6],
    pub beta: f64,
    pub time: TimeProfile,
    pub params: ModelParams,
}

impl Manufactured {
    /// Standard pair on `[0,Lx]×[0,Ly]×[0,Lz]` with one wavelength per box
    /// side in x and y, velocity amplitude `u`.
    pub fn standard(
        lengths: [f64; 3],
        u: f64,
        beta: f64,
        time: TimeProfile,
        params: ModelParams,
    ) -> Self {
        let kx = 2.0 * std::f64::consts::PI / lengths[0];
        let ky = 2.0 * std::f64::consts::PI / lengths[1];
        let k = [kx, ky, 0.0];
        let sc = |c: f64, cx: bool, cy: bool| Trig::term(c, k, [cx, cy, true]);
        // ψ = (u/ky) sin(kx x) sin(ky y): v = u (sin cos, −(kx/ky) cos sin, 0)
        let psi = sc(u / ky, false, false);
        let v = [psi.deriv(1), psi.deriv(0).scaled(-1.0), Trig::zero()];
        let only_x = |c: f64, cx: bool| Trig::term(c, [kx, 0.0, 0.0], [cx, true, true]);
        let only_y = |c: f64, cy: bool| Trig::term(c, [0.0, ky, 0.0], [true, cy, true]);
        let m = [
            sc(1.0, false, false),
            sc(1.0, true, true),
            sc(1.0, false, true),
            sc(0.5, true, false),
            only_x(0.5, false),
            only_y(0.5, true),
        ];
        Self {
            psi,
            v,
            m,
            beta,
            time,
            params,
        }
    }

    pub fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let s = self.time.value(t);
        std::array::from_fn(|c| s * self.v[c].eval(x))
    }

    pub fn tensor(&self, t: f64, x: [f64; 3]) -> SymTensor3 {
        let s = self.beta * self.time.value(t);
        let m: [f64; 6] = std::array::from_fn(|i| s * self.m[i].eval(x));
        SymTensor3::IDENTITY + SymTensor3::from_array(m)
    }

    fn tensor_deriv(&self, t: f64, x: [f64; 3], d: usize) -> SymTensor3 {
        let s = self.beta * self.time.value(t);
        SymTensor3::from_array(std::array::from_fn(|i| s * self.m[i].deriv(d).eval(x)))
    }

    /// `G_ij = ∂_j v_i`.
    fn grad_v(&self, t: f64, x: [f64; 3]) -> Mat3 {
        let s = self.time.value(t);
        Mat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| s * self.v[i].deriv(j).eval(x))
        }))
    }

    /// Momentum forcing `∂_t v + (v·∇)v − νΔv − div τ(B)`; its gradient part is
    /// absorbed by the pressure.
    pub fn velocity_force(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let p = &self.params;
        let s = self.time.value(t);
        let ds = self.time.rate(t);
        let v = self.velocity(t, x);
        let g = self.grad_v(t, x);
        let b = self.tensor(t, x);
        let db: [SymTensor3; 3] = std::array::from_fn(|d| self.tensor_deriv(t, x, d));
        // div τ with τ = 2aμ[(1−γ)(B − I) + γ(B² − B)]
        let c = 2.0 * p.a * p.mu;
        let div_tau: [f64; 3] = std::array::from_fn(|i| {
            (0..3)
                .map(|j| {
                    let dbij = db[j].get(i, j);
                    let dsq: f64 = (0..3)
                        .map(|k| db[j].get(i, k) * b.get(k, j) + b.get(i, k) * db[j].get(k, j))
                        .sum();
                    c * ((1.0 - p.gamma) * dbij + p.gamma * (dsq - dbij))
                })
                .sum()
        });
        std::array::from_fn(|i| {
            let adv: f64 = (0..3).map(|j| v[j] * g.0[i][j]).sum();
            let lap = s * self.v[i].laplacian().eval(x);
            ds * self.v[i].eval(x) + adv - p.nu * lap - div_tau[i]
        })
    }

    /// Conformation forcing `∂_t B + (v·∇)B − ρ[a(DB + BD) + WB − BW − R(B)] − λΔB`.
    pub fn tensor_force(&self, t: f64, x: [f64; 3]) -> SymTensor3 {
        let p = &self.params;
        let s = self.beta * self.time.value(t);
        let ds = self.beta * self.time.rate(t);
        let v = self.velocity(t, x);
        let b = self.tensor(t, x);
        let g = self.grad_v(t, x);
        let dt_b = SymTensor3::from_array(std::array::from_fn(|i| ds * self.m[i].eval(x)));
        let adv = (0..3).fold(SymTensor3::ZERO, |acc, d| {
            acc + self.tensor_deriv(t, x, d) * v[d]
        });
        let lap =
            SymTensor3::from_array(std::array::from_fn(|i| s * self.m[i].laplacian().eval(x)));
        dt_b + adv - b_source(&b, &g, p) - lap * p.lambda_diff
    }

    /// Forcing for the stepper (velocity on faces, tensor at cell centers).
    pub fn forcing(&self) -> Forcing {
        let a = Arc::new(self.clone());
        let b = a.clone();
        Forcing {
            velocity: Some(Arc::new(move |t, x| a.velocity_force(t, x))),
            tensor: Some(Arc::new(move |t, x| b.tensor_force(t, x))),
        }
    }

    /// Discretely solenoidal velocity at time `t` (curl of the sampled stream
    /// function).
    pub fn sample_velocity(&self, grid: &Grid, t: f64) -> VelocityField {
        let s = self.time.value(t);
        grid.velocity_from_potential(|x| [0.0, 0.0, s * self.psi.eval(x)])
    }

    pub fn sample_tensor(&self, grid: &Grid, t: f64) -> TensorField {
        grid.tensor_from(|x| self.tensor(t, x))
    }

    /// L² errors `(‖v − v*‖, ‖B − B*‖)` at time `t`.
    pub fn errors(&self, grid: &Grid, v: &VelocityField, b: &TensorField, t: f64) -> (f64, f64) {
        let dv = grid.cell_volume();
        let ev: f64 = (0..3)
            .map(|c| {
                v.c[c].par_sum(|p, x| {
                    let e = x - self.velocity(t, grid.face_center(c, p))[c];
                    e * e
                })
            })
            .sum();
        let eb = b.par_sum(|p, x| (x - self.tensor(t, grid.cell_center(p))).norm_sq());
        ((ev * dv).sqrt(), (eb * dv).sqrt())
    }

    /// Elastic stress of the exact tensor (for diagnostics).
    pub fn stress(&self, t: f64, x: [f64; 3]) -> SymTensor3 {
        elastic_stress(&self.tensor(t, x), &self.params)
    }
}

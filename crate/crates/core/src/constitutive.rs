//! Closed-form constitutive maps: free energy, its derivative, stresses,
//! entropy production and the eigenvalue cut-off.

use crate::error::{ParamsError, SpdError};
use crate::spd::{eig_sym3, frob, pow_sym, Mat3, Spectrum3, SymTensor3};

/// Material and regularization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Elastic modulus.
    pub mu: f64,
    /// Stress-diffusion coefficient.
    pub lambda_diff: f64,
    /// Navier slip friction.
    pub sigma: f64,
    /// Linear relaxation rate.
    pub delta1: f64,
    /// Quadratic relaxation rate.
    pub delta2: f64,
    /// Objective-derivative parameter (`1` upper convected, `0` corotational).
    pub a: f64,
    /// Free-energy interpolation weight.
    pub gamma: f64,
    /// Cut-off level; `0` disables the regularization.
    pub eps: f64,
    /// Permits `gamma = 0` (classical Oldroyd-B energy) for diagnostics.
    pub classical: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::oldroyd_b()
    }
}

/// Where the objective-derivative parameter sits relative to the
/// Gordon-Schowalter family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    GordonSchowalter,
    Extrapolated,
}

impl ModelParams {
    /// Diffusive Oldroyd-B preset with unit coefficients.
    pub fn oldroyd_b() -> Self {
        Self {
            nu: 1.0,
            mu: 1.0,
            lambda_diff: 1.0,
            sigma: 1.0,
            delta1: 1.0,
            delta2: 0.0,
            a: 1.0,
            gamma: 0.5,
            eps: 0.0,
            classical: false,
        }
    }

    /// Diffusive Giesekus preset.
    pub fn giesekus() -> Self {
        Self {
            delta1: 0.0,
            delta2: 1.0,
            ..Self::oldroyd_b()
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        fn positive(key: &'static str, v: f64) -> Result<(), ParamsError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    constraint: format!("must be positive and finite, got {v}"),
                })
            }
        }
        fn nonneg(key: &'static str, v: f64) -> Result<(), ParamsError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ParamsError::Invalid {
                    key,
                    constraint: format!("must be nonnegative and finite, got {v}"),
                })
            }
        }
        positive("nu", self.nu)?;
        positive("mu", self.mu)?;
        positive("lambda", self.lambda_diff)?;
        nonneg("sigma", self.sigma)?;
        nonneg("delta1", self.delta1)?;
        nonneg("delta2", self.delta2)?;
        if !self.a.is_finite() {
            return Err(ParamsError::Invalid {
                key: "a",
                constraint: format!("must be finite, got {}", self.a),
            });
        }
        if !(self.eps.is_finite() && (0.0..1.0).contains(&self.eps)) {
            return Err(ParamsError::Invalid {
                key: "eps",
                constraint: format!("must lie in [0,1), got {}", self.eps),
            });
        }
        let gamma_ok = if self.classical {
            (0.0..1.0).contains(&self.gamma)
        } else {
            self.gamma > 0.0 && self.gamma < 1.0
        };
        if !gamma_ok {
            let range = if self.classical { "[0,1)" } else { "(0,1)" };
            return Err(ParamsError::Invalid {
                key: "gamma",
                constraint: format!("gamma must lie in {range}, got {}", self.gamma),
            });
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if (-1.0..=1.0).contains(&self.a) {
            Regime::GordonSchowalter
        } else {
            Regime::Extrapolated
        }
    }
}

/// `lambda - 1 - ln(lambda)` without cancellation near `lambda = 1`.
#[inline]
fn log_barrier_term(l: f64) -> f64 {
    let x = l - 1.0;
    x - x.ln_1p()
}

/// `tr A - 3 - ln det A` from a spectrum; nonnegative by construction.
fn psi_log_from_spectrum(s: &Spectrum3) -> Result<f64, SpdError> {
    if s.values[0] <= 0.0 {
        return Err(SpdError::SingularMatrix {
            lambda_min: s.values[0],
        });
    }
    Ok(s.values.iter().map(|&l| log_barrier_term(l)).sum())
}

/// Quadratic part of the free energy, `|A - I|^2 / 2`.
pub fn psi_quadratic(b: &SymTensor3) -> f64 {
    0.5 * (*b - SymTensor3::IDENTITY).norm_sq()
}

/// Logarithmic part of the free energy, `tr A - 3 - ln det A`.
pub fn psi_log(b: &SymTensor3) -> Result<f64, SpdError> {
    psi_log_from_spectrum(&eig_sym3(b))
}

/// Helmholtz free energy density
/// `mu ((1-gamma)(tr B - 3 - ln det B) + gamma |B - I|^2 / 2)`.
///
/// `ln det B` is summed from the spectrum, never taken from the assembled
/// determinant.
pub fn free_energy(b: &SymTensor3, p: &ModelParams) -> Result<f64, SpdError> {
    let log_part = if p.gamma < 1.0 { psi_log(b)? } else { 0.0 };
    Ok(p.mu * ((1.0 - p.gamma) * log_part + p.gamma * psi_quadratic(b)))
}

/// `J = d psi / dB = mu (1-gamma)(I - B^-1) + mu gamma (B - I)`.
pub fn free_energy_deriv(b: &SymTensor3, p: &ModelParams) -> Result<SymTensor3, SpdError> {
    let binv = eig_sym3(b).inv()?;
    let id = SymTensor3::IDENTITY;
    Ok((id - binv) * (p.mu * (1.0 - p.gamma)) + (*b - id) * (p.mu * p.gamma))
}

/// `S(A) = (1-gamma)(A - I) + gamma (A^2 - A)`.
#[inline]
pub fn stress_s(b: &SymTensor3, p: &ModelParams) -> SymTensor3 {
    let id = SymTensor3::IDENTITY;
    (*b - id) * (1.0 - p.gamma) + (b.square() - *b) * p.gamma
}

/// `R(A) = delta1 (A - I) + delta2 (A^2 - A)`.
#[inline]
pub fn relax_r(b: &SymTensor3, p: &ModelParams) -> SymTensor3 {
    let id = SymTensor3::IDENTITY;
    let mut out = (*b - id) * p.delta1;
    if p.delta2 != 0.0 {
        out += (b.square() - *b) * p.delta2;
    }
    out
}

/// Cauchy stress `T = -p I + 2 nu D + 2 a mu S(B)`. `D` is expected to be
/// trace free.
pub fn cauchy_stress(b: &SymTensor3, d: &SymTensor3, pressure: f64, p: &ModelParams) -> SymTensor3 {
    debug_assert!(
        d.trace().abs() <= 1e-10 * (1.0 + d.norm()),
        "rate of strain must be trace free"
    );
    let mut t = SymTensor3::IDENTITY * (-pressure) + *d * (2.0 * p.nu);
    if p.a != 0.0 {
        t += stress_s(b, p) * (2.0 * p.a * p.mu);
    }
    t
}

/// The individual (nonnegative) contributions to the entropy production.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EntropyTerms {
    /// `mu lambda gamma |grad B|^2`
    pub diff_gamma: f64,
    /// `mu lambda (1-gamma) |B^-1/2 grad B B^-1/2|^2`
    pub diff_inv: f64,
    /// `2 nu |D|^2`
    pub viscous: f64,
    /// `mu (1-gamma) delta1 |B^1/2 - B^-1/2|^2`
    pub relax_1: f64,
    /// `mu gamma delta2 |B^3/2 - B^1/2|^2`
    pub relax_2: f64,
    /// `mu ((1-gamma) delta2 + gamma delta1) |B - I|^2`
    pub relax_3: f64,
}

impl EntropyTerms {
    pub fn total(&self) -> f64 {
        self.diff_gamma + self.diff_inv + self.viscous + self.relax_1 + self.relax_2 + self.relax_3
    }
}

/// Relaxation contributions from a spectrum of `B` (no rate-of-strain or
/// gradient terms).
pub(crate) fn relaxation_terms(s: &Spectrum3, p: &ModelParams) -> (f64, f64, f64) {
    let mut half = 0.0;
    let mut three_half = 0.0;
    let mut lin = 0.0;
    for &l in &s.values {
        let x = l - 1.0;
        // (sqrt l - 1/sqrt l)^2 = (l-1)^2 / l ; (l^3/2 - l^1/2)^2 = l (l-1)^2
        half += x * x / l;
        three_half += l * x * x;
        lin += x * x;
    }
    (
        p.mu * (1.0 - p.gamma) * p.delta1 * half,
        p.mu * p.gamma * p.delta2 * three_half,
        p.mu * ((1.0 - p.gamma) * p.delta2 + p.gamma * p.delta1) * lin,
    )
}

/// `|B^-1/2 G B^-1/2|^2` evaluated in the eigenbasis of `B`:
/// `sum_ij G'_ij^2 / (l_i l_j)` with `G' = Q^T G Q`.
pub(crate) fn inv_weighted_norm_sq(s: &Spectrum3, g: &SymTensor3) -> f64 {
    let q = Mat3(s.vectors);
    let gp = q.transpose().mul(&g.to_mat()).mul(&q).0;
    let l = s.values;
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += gp[i][j] * gp[i][j] / (l[i] * l[j]);
        }
    }
    acc
}

/// Term-by-term entropy production at one point (temperature fixed to one).
pub fn entropy_terms(
    b: &SymTensor3,
    grad_b: &[SymTensor3; 3],
    d: &SymTensor3,
    p: &ModelParams,
) -> Result<EntropyTerms, SpdError> {
    let s = eig_sym3(b);
    if s.values[0] <= 0.0 {
        return Err(SpdError::SingularMatrix {
            lambda_min: s.values[0],
        });
    }
    let grad_sq: f64 = grad_b.iter().map(|g| g.norm_sq()).sum();
    let grad_inv: f64 = grad_b.iter().map(|g| inv_weighted_norm_sq(&s, g)).sum();
    let (relax_1, relax_2, relax_3) = relaxation_terms(&s, p);
    Ok(EntropyTerms {
        diff_gamma: p.mu * p.lambda_diff * p.gamma * grad_sq,
        diff_inv: p.mu * p.lambda_diff * (1.0 - p.gamma) * grad_inv,
        viscous: 2.0 * p.nu * d.norm_sq(),
        relax_1,
        relax_2,
        relax_3,
    })
}

/// Rate of entropy production `theta xi` (with `theta = 1`).
pub fn entropy_production(
    b: &SymTensor3,
    grad_b: &[SymTensor3; 3],
    d: &SymTensor3,
    p: &ModelParams,
) -> Result<f64, SpdError> {
    entropy_terms(b, grad_b, d, p).map(|t| t.total())
}

/// Cut-off `rho_eps(A) = max(0, Lambda - eps) / (Lambda (1 + eps |A|^3))`,
/// set to zero when `Lambda <= 0`.
pub fn cutoff_rho(a: &SymTensor3, eps: f64) -> f64 {
    cutoff_rho_with_lambda(a, super::spd::lambda_min(a), eps)
}

/// Same as [`cutoff_rho`] with a precomputed minimal eigenvalue.
#[inline]
pub fn cutoff_rho_with_lambda(a: &SymTensor3, lambda: f64, eps: f64) -> f64 {
    if lambda <= 0.0 || !lambda.is_finite() {
        return 0.0;
    }
    let num = (lambda - eps).max(0.0);
    if num == 0.0 {
        return 0.0;
    }
    let norm3 = a.norm().powi(3);
    (num / (lambda * (1.0 + eps * norm3))).min(1.0)
}

/// Residuals of the three pointwise dissipation identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityResiduals {
    /// `(B - I) . J` versus `mu(1-gamma)|B^1/2 - B^-1/2|^2 + mu gamma |B - I|^2`.
    pub linear: f64,
    /// `(B^2 - B) . J` versus `mu(1-gamma)|B - I|^2 + mu gamma |B^3/2 - B^1/2|^2`.
    pub quadratic: f64,
    /// `a (BD + DB) . J` versus `2 a mu S(B) . D`.
    pub objective: f64,
    /// Each residual divided by its natural scale (product of the factor norms).
    pub linear_rel: f64,
    pub quadratic_rel: f64,
    pub objective_rel: f64,
}

impl IdentityResiduals {
    pub fn max_abs(&self) -> f64 {
        self.linear.max(self.quadratic).max(self.objective)
    }

    pub fn max_rel(&self) -> f64 {
        self.linear_rel
            .max(self.quadratic_rel)
            .max(self.objective_rel)
    }
}

#[inline]
fn rel(res: f64, scale: f64) -> f64 {
    if res == 0.0 {
        0.0
    } else {
        res / scale.max(f64::MIN_POSITIVE)
    }
}

/// Evaluates both sides of the dissipation identities independently.
///
/// The left sides contract with `J` built from the spectral inverse; the right
/// sides are assembled from fractional powers `B^1/2`, `B^-1/2`, `B^3/2`.
/// `d` must be trace free.
pub fn dissipation_identities_check(
    b: &SymTensor3,
    d: &SymTensor3,
    p: &ModelParams,
) -> Result<IdentityResiduals, SpdError> {
    let j = free_energy_deriv(b, p)?;
    identities_given_j(b, d, p, &j)
}

pub(crate) fn identities_given_j(
    b: &SymTensor3,
    d: &SymTensor3,
    p: &ModelParams,
    j: &SymTensor3,
) -> Result<IdentityResiduals, SpdError> {
    let id = SymTensor3::IDENTITY;
    let j = *j;
    let bm = *b - id;
    let b2m = b.square() - *b;

    let sqrt_b = pow_sym(b, 0.5)?;
    let inv_sqrt_b = pow_sym(b, -0.5)?;
    let b32 = pow_sym(b, 1.5)?;

    let lhs1 = frob(&bm, &j);
    let rhs1 =
        p.mu * (1.0 - p.gamma) * (sqrt_b - inv_sqrt_b).norm_sq() + p.mu * p.gamma * bm.norm_sq();
    let lhs2 = frob(&b2m, &j);
    let rhs2 = p.mu * (1.0 - p.gamma) * bm.norm_sq() + p.mu * p.gamma * (b32 - sqrt_b).norm_sq();

    let bd = b.matmul(d);
    let bd_db = bd.add(&bd.transpose());
    let lhs3 = p.a * bd_db.frob(&j.to_mat());
    let rhs3 = 2.0 * p.a * p.mu * frob(&stress_s(b, p), d);

    let (r1, r2, r3) = (
        (lhs1 - rhs1).abs(),
        (lhs2 - rhs2).abs(),
        (lhs3 - rhs3).abs(),
    );
    let jn = j.norm();
    Ok(IdentityResiduals {
        linear: r1,
        quadratic: r2,
        objective: r3,
        linear_rel: rel(r1, bm.norm() * jn),
        quadratic_rel: rel(r2, b2m.norm() * jn),
        objective_rel: rel(r3, p.a.abs() * bd_db.norm_sq().sqrt() * jn),
    })
}

/// Residual of `B J = mu S(B)` (absolute, relative to `|B| |J|`).
pub fn bj_identity_residual(b: &SymTensor3, p: &ModelParams) -> Result<(f64, f64), SpdError> {
    let j = free_energy_deriv(b, p)?;
    let bj = b.matmul(&j);
    let target = stress_s(b, p).to_mat().scale(p.mu);
    let r = bj.sub(&target).norm_sq().sqrt();
    Ok((r, rel(r, b.norm() * j.norm())))
}

/// Residual of the gradient identity
/// `grad B . grad J = mu gamma |grad B|^2 + mu (1-gamma) |B^-1/2 grad B B^-1/2|^2`,
/// with `grad J` assembled by the chain rule `d(B^-1) = -B^-1 dB B^-1`.
pub fn grad_identity_residual(
    b: &SymTensor3,
    grad_b: &[SymTensor3; 3],
    p: &ModelParams,
) -> Result<(f64, f64), SpdError> {
    let binv = eig_sym3(b).inv()?;
    let inv_sqrt = pow_sym(b, -0.5)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    for g in grad_b {
        let dj = binv.congruence(g) * (p.mu * (1.0 - p.gamma)) + *g * (p.mu * p.gamma);
        lhs += frob(g, &dj);
        scale += g.norm() * dj.norm();
        rhs += p.mu * p.gamma * g.norm_sq()
            + p.mu * (1.0 - p.gamma) * inv_sqrt.congruence(g).norm_sq();
    }
    let r = (lhs - rhs).abs();
    Ok((r, rel(r, scale)))
}

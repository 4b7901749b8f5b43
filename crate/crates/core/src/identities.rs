//! Randomized sweep over the pointwise algebraic identities, the
//! nonnegativity of the entropy production, convexity of the free energy and
//! its two parts, and the Hencky-logarithm expansion near the identity.

use std::fmt;

use thiserror::Error;

use crate::constitutive::{
    bj_identity_residual, entropy_terms, free_energy, grad_identity_residual, identities_given_j,
    psi_log, psi_quadratic, ModelParams,
};
use crate::error::SpdError;
use crate::sampling::SpdSampler;
use crate::spd::{eig_sym3, exp_sym, SymTensor3};

/// Deliberate defects used to prove the sweep can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// Flips the sign of the `mu gamma (B - I)` term of `J`.
    NegateGammaTerm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub samples: usize,
    pub convexity_samples: usize,
    pub seed: u64,
    /// Every n-th draw carries a nearly repeated eigenvalue pair.
    pub degenerate_every: u64,
    pub identity_tol: f64,
    pub entropy_floor: f64,
    pub convexity_slack: f64,
    pub hencky_gammas: Vec<f64>,
    pub hencky_steps: Vec<f64>,
    pub hencky_min_ratio: f64,
    pub mutation: Mutation,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            convexity_samples: 10_000,
            seed: 42,
            degenerate_every: 10,
            identity_tol: 1e-10,
            entropy_floor: -1e-12,
            convexity_slack: -1e-12,
            hencky_gammas: vec![0.1, 0.5, 0.9],
            hencky_steps: vec![1e-1, 1e-2, 1e-3],
            hencky_min_ratio: 500.0,
            mutation: Mutation::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HenckyRow {
    pub gamma: f64,
    /// `|psi(exp(hH))/mu - |hH|^2/2|` per step size.
    pub residuals: Vec<f64>,
    /// Ratio of consecutive residuals.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentityReport {
    pub samples: usize,
    pub near_degenerate: usize,
    pub max_rel_linear: f64,
    pub max_rel_quadratic: f64,
    pub max_rel_objective: f64,
    pub max_rel_grad: f64,
    pub max_rel_bj: f64,
    pub min_entropy: f64,
    pub min_slack_psi: f64,
    pub min_slack_psi_quadratic: f64,
    pub min_slack_psi_log: f64,
    pub hencky: Vec<HenckyRow>,
}

impl IdentityReport {
    pub fn max_identity_residual(&self) -> f64 {
        [
            self.max_rel_linear,
            self.max_rel_quadratic,
            self.max_rel_objective,
            self.max_rel_grad,
            self.max_rel_bj,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples                 {}", self.samples)?;
        writeln!(f, "near-degenerate draws   {}", self.near_degenerate)?;
        writeln!(f, "(B-I).J identity        {:.3e}", self.max_rel_linear)?;
        writeln!(f, "(B^2-B).J identity      {:.3e}", self.max_rel_quadratic)?;
        writeln!(f, "a(BD+DB).J identity     {:.3e}", self.max_rel_objective)?;
        writeln!(f, "grad B . grad J         {:.3e}", self.max_rel_grad)?;
        writeln!(f, "B J = mu S(B)           {:.3e}", self.max_rel_bj)?;
        writeln!(f, "min entropy production  {:.3e}", self.min_entropy)?;
        writeln!(f, "min convexity slack psi {:.3e}", self.min_slack_psi)?;
        writeln!(
            f,
            "  quadratic part        {:.3e}",
            self.min_slack_psi_quadratic
        )?;
        writeln!(f, "  logarithmic part      {:.3e}", self.min_slack_psi_log)?;
        for row in &self.hencky {
            write!(f, "hencky gamma={:<4} residuals", row.gamma)?;
            for r in &row.residuals {
                write!(f, " {r:.3e}")?;
            }
            write!(f, " ratios")?;
            for r in &row.ratios {
                write!(f, " {r:.1}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityViolation {
    #[error("{check}: value {value:e} violates bound {bound:e} for B = {matrix}")]
    Check {
        check: &'static str,
        value: f64,
        bound: f64,
        matrix: String,
    },
    #[error("hencky expansion at gamma = {gamma}: decay ratio {ratio:.1} below {bound}")]
    Hencky { gamma: f64, ratio: f64, bound: f64 },
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] SpdError),
}

/// Serializes a matrix with full round-trip precision.
pub fn serialize_matrix(b: &SymTensor3) -> String {
    let c = b.to_array();
    format!(
        "[a11={:e}, a22={:e}, a33={:e}, a12={:e}, a13={:e}, a23={:e}]",
        c[0], c[1], c[2], c[3], c[4], c[5]
    )
}

fn mutated_j(b: &SymTensor3, p: &ModelParams, m: Mutation) -> Result<SymTensor3, SpdError> {
    let binv = eig_sym3(b).inv()?;
    let id = SymTensor3::IDENTITY;
    let sign = match m {
        Mutation::None => 1.0,
        Mutation::NegateGammaTerm => -1.0,
    };
    Ok((id - binv) * (p.mu * (1.0 - p.gamma)) + (*b - id) * (sign * p.mu * p.gamma))
}

fn check(
    name: &'static str,
    value: f64,
    bound: f64,
    upper: bool,
    b: &SymTensor3,
) -> Result<(), IdentityViolation> {
    let bad = if upper {
        !(value <= bound)
    } else {
        !(value >= bound)
    };
    if bad {
        Err(IdentityViolation::Check {
            check: name,
            value,
            bound,
            matrix: serialize_matrix(b),
        })
    } else {
        Ok(())
    }
}

/// Residuals of the Hencky expansion for one unit direction and one `gamma`.
pub fn hencky_residuals(dir: &SymTensor3, gamma: f64, steps: &[f64]) -> Result<Vec<f64>, SpdError> {
    let p = ModelParams {
        mu: 1.0,
        gamma,
        classical: true,
        ..ModelParams::default()
    };
    let unit = *dir * (1.0 / dir.norm());
    steps
        .iter()
        .map(|&h| {
            let log = unit * h;
            let b = exp_sym(&log);
            Ok((free_energy(&b, &p)? - 0.5 * log.norm_sq()).abs())
        })
        .collect()
}

/// Runs the full randomized identity sweep.
pub fn check_identities(
    p: &ModelParams,
    cfg: &SweepConfig,
) -> Result<IdentityReport, IdentityViolation> {
    let mut sampler = SpdSampler::new(cfg.seed).with_degenerate_every(cfg.degenerate_every);
    let mut report = IdentityReport {
        samples: cfg.samples,
        min_entropy: f64::INFINITY,
        min_slack_psi: f64::INFINITY,
        min_slack_psi_quadratic: f64::INFINITY,
        min_slack_psi_log: f64::INFINITY,
        ..Default::default()
    };
    let tol = cfg.identity_tol;

    for _ in 0..cfg.samples {
        let b = sampler.spd();
        let spec = eig_sym3(&b);
        if (spec.values[1] - spec.values[0]) <= 1e-9 * spec.values[1]
            || (spec.values[2] - spec.values[1]) <= 1e-9 * spec.values[2]
        {
            report.near_degenerate += 1;
        }
        let bscale = b.norm();
        let d = sampler.trace_free(bscale.max(1.0));
        let grad: [SymTensor3; 3] = std::array::from_fn(|_| sampler.symmetric(bscale));

        let j = mutated_j(&b, p, cfg.mutation)?;
        let r = identities_given_j(&b, &d, p, &j)?;
        check("(B-I).J identity", r.linear_rel, tol, true, &b)?;
        check("(B^2-B).J identity", r.quadratic_rel, tol, true, &b)?;
        check("a(BD+DB).J identity", r.objective_rel, tol, true, &b)?;
        report.max_rel_linear = report.max_rel_linear.max(r.linear_rel);
        report.max_rel_quadratic = report.max_rel_quadratic.max(r.quadratic_rel);
        report.max_rel_objective = report.max_rel_objective.max(r.objective_rel);

        let (_, g) = grad_identity_residual(&b, &grad, p)?;
        check("grad B . grad J identity", g, tol, true, &b)?;
        report.max_rel_grad = report.max_rel_grad.max(g);

        let (_, bj) = if cfg.mutation == Mutation::None {
            bj_identity_residual(&b, p)?
        } else {
            let bjm = b.matmul(&j);
            let target = crate::constitutive::stress_s(&b, p).to_mat().scale(p.mu);
            let res = bjm.sub(&target).norm_sq().sqrt();
            (res, res / (b.norm() * j.norm()).max(f64::MIN_POSITIVE))
        };
        check("B J = mu S(B)", bj, tol, true, &b)?;
        report.max_rel_bj = report.max_rel_bj.max(bj);

        let terms = entropy_terms(&b, &grad, &d, p)?;
        let xi = terms.total();
        check("entropy production", xi, cfg.entropy_floor, false, &b)?;
        report.min_entropy = report.min_entropy.min(xi);
    }

    for _ in 0..cfg.convexity_samples {
        let a = sampler.spd();
        let b = sampler.spd();
        let mid = (a + b) * 0.5;
        let slack = |f: &dyn Fn(&SymTensor3) -> Result<f64, SpdError>| -> Result<f64, SpdError> {
            Ok(0.5 * (f(&a)? + f(&b)?) - f(&mid)?)
        };
        let s_psi = slack(&|x| free_energy(x, p))?;
        let s_quad = slack(&|x| Ok(psi_quadratic(x)))?;
        let s_log = slack(&|x| psi_log(x))?;
        check("convexity of psi", s_psi, cfg.convexity_slack, false, &mid)?;
        check(
            "convexity of psi_1",
            s_quad,
            cfg.convexity_slack,
            false,
            &mid,
        )?;
        check(
            "convexity of psi_2",
            s_log,
            cfg.convexity_slack,
            false,
            &mid,
        )?;
        report.min_slack_psi = report.min_slack_psi.min(s_psi);
        report.min_slack_psi_quadratic = report.min_slack_psi_quadratic.min(s_quad);
        report.min_slack_psi_log = report.min_slack_psi_log.min(s_log);
    }

    // one fixed direction with a nonzero cubic invariant, shared by all gammas
    let dir = loop {
        let d = sampler.unit_symmetric();
        let cubic = d.square().to_mat().mul(&d.to_mat()).trace();
        if cubic.abs() > 0.05 {
            break d;
        }
    };
    for &gamma in &cfg.hencky_gammas {
        let residuals = hencky_residuals(&dir, gamma, &cfg.hencky_steps)?;
        let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
        for &ratio in &ratios {
            if !(ratio >= cfg.hencky_min_ratio) {
                return Err(IdentityViolation::Hencky {
                    gamma,
                    ratio,
                    bound: cfg.hencky_min_ratio,
                });
            }
        }
        report.hencky.push(HenckyRow {
            gamma,
            residuals,
            ratios,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            samples: 3_000,
            convexity_samples: 1_000,
            ..Default::default()
        }
    }

    #[test]
    fn sweep_passes_with_fixed_seed() {
        let r = check_identities(&ModelParams::default(), &small()).unwrap();
        assert!(r.max_identity_residual() <= 1e-10, "{r}");
        assert!(r.min_entropy >= -1e-12);
        assert!(r.near_degenerate > 0);
        assert_eq!(r.hencky.len(), 3);
    }

    #[test]
    fn negated_gamma_term_is_caught() {
        let cfg = SweepConfig {
            mutation: Mutation::NegateGammaTerm,
            ..small()
        };
        let err = check_identities(&ModelParams::default(), &cfg).unwrap_err();
        match err {
            IdentityViolation::Check { matrix, .. } => assert!(matrix.starts_with("[a11=")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn giesekus_preset_passes_too() {
        let r = check_identities(&ModelParams::giesekus(), &small()).unwrap();
        assert!(r.max_identity_residual() <= 1e-10);
    }
}

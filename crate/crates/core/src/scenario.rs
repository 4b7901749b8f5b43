//! The fixed scenario library: initial velocity, initial conformation, body
//! force and boundary tags for each named case.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::GridError;
use crate::grid::{FaceBc, Grid, TensorField, VelocityField};
use crate::spd::SymTensor3;
use crate::stepper::Forcing;
use crate::study::Case;
use crate::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    RestState,
    TaylorGreen,
    LidSlipCavity,
    ShearDecay,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::RestState,
        ScenarioKind::TaylorGreen,
        ScenarioKind::LidSlipCavity,
        ScenarioKind::ShearDecay,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::RestState => "rest_state",
            ScenarioKind::TaylorGreen => "taylor_green",
            ScenarioKind::LidSlipCavity => "lid_slip_cavity",
            ScenarioKind::ShearDecay => "shear_decay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Scenario parameters. Unused fields are ignored by kinds that do not read
/// them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: [usize; 3],
    pub lengths: [f64; 3],
    /// Tag used on every walled face.
    pub wall: FaceBc,
    /// Velocity scale of `taylor_green` and `shear_decay`.
    pub amplitude: f64,
    /// Size of the trace-free bump added to `B₀ = I`; `B₀` stays positive
    /// definite for values below √2.
    pub perturbation: f64,
    /// Peak tangential force under the cavity lid.
    pub lid_force: f64,
    /// Wavenumber multiplier of the initial velocity.
    pub modes: usize,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::RestState,
            n: [16, 16, 16],
            lengths: [1.0; 3],
            wall: FaceBc::NavierSlip,
            amplitude: 1.0,
            perturbation: 0.0,
            lid_force: 1.0,
            modes: 1,
        }
    }
}

#[derive(Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub grid: Grid,
    pub v0: VelocityField,
    pub b0: TensorField,
    pub forcing: Forcing,
}

impl ScenarioSpec {
    fn boundary(&self) -> [[FaceBc; 2]; 3] {
        let walled: [bool; 3] = match self.kind {
            ScenarioKind::RestState | ScenarioKind::LidSlipCavity => [true; 3],
            ScenarioKind::TaylorGreen => [false; 3],
            ScenarioKind::ShearDecay => [false, true, false],
        };
        std::array::from_fn(|d| {
            if walled[d] && self.n[d] > 1 {
                [self.wall; 2]
            } else {
                [FaceBc::Periodic; 2]
            }
        })
    }

    /// Builds the grid and the initial data. Admissibility of `B₀` is
    /// checked when the stepper initializes the state, where the cut-off
    /// level is known.
    pub fn build(&self) -> Result<Scenario, GridError> {
        if self.wall == FaceBc::Periodic {
            return Err(GridError::InvalidAxis {
                axis: 1,
                reason: "wall tag must be navier_slip or no_slip".into(),
            });
        }
        let grid = Grid::new(self.n, self.lengths, self.boundary())?;
        let l = self.lengths;
        let k = self.modes.max(1) as f64;
        let amp = self.amplitude;
        let v0 = match self.kind {
            ScenarioKind::RestState | ScenarioKind::LidSlipCavity => grid.velocity(),
            ScenarioKind::TaylorGreen => {
                let third = if self.n[2] > 1 { 1.0 } else { 0.0 };
                grid.velocity_from(|x| {
                    let (a, b, c) = (
                        2.0 * PI * k * x[0] / l[0],
                        2.0 * PI * k * x[1] / l[1],
                        2.0 * PI * k * x[2] / l[2] * third,
                    );
                    [
                        amp * a.sin() * b.cos() * c.cos(),
                        -amp * a.cos() * b.sin() * c.cos() * l[1] / l[0],
                        0.0,
                    ]
                })
            }
            ScenarioKind::ShearDecay => {
                grid.velocity_from(|x| [amp * (PI * k * x[1] / l[1]).cos(), 0.0, 0.0])
            }
        };
        let eta = self.perturbation;
        let b0 = match self.kind {
            ScenarioKind::ShearDecay => grid.tensor_from(|x| {
                let phi = PI * x[1] / l[1];
                bump(eta, phi.cos(), (2.0 * phi).cos())
            }),
            _ => grid.tensor_from(|x| {
                let (a, b) = (2.0 * PI * x[0] / l[0], 2.0 * PI * x[1] / l[1]);
                bump(eta, a.sin() * b.sin(), a.cos() * b.cos())
            }),
        };
        let forcing = match self.kind {
            ScenarioKind::LidSlipCavity => {
                let (lid, ly) = (self.lid_force, l[1]);
                Forcing {
                    velocity: Some(Arc::new(move |_, x| {
                        [lid * (-(ly - x[1]) / (0.1 * ly)).exp(), 0.0, 0.0]
                    })),
                    tensor: None,
                }
            }
            _ => Forcing::none(),
        };
        Ok(Scenario {
            spec: *self,
            grid,
            v0,
            b0,
            forcing,
        })
    }
}

/// `I + η M` with `M = ½[[s, c, 0], [c, −s, 0], [0, 0, 0]]`, whose
/// eigenvalues are `±½√(s² + c²)`, so `Λ ≥ 1 − η/√2` for `|s|, |c| ≤ 1`.
fn bump(eta: f64, s: f64, c: f64) -> SymTensor3 {
    if eta == 0.0 {
        // exactly I, without the signed zeros of 0·c
        return SymTensor3::IDENTITY;
    }
    SymTensor3::new(
        1.0 + 0.5 * eta * s,
        1.0 - 0.5 * eta * s,
        1.0,
        0.5 * eta * c,
        0.0,
        0.0,
    )
}

impl Scenario {
    /// Time step giving Courant number `cfl` for the initial velocity (or a
    /// unit velocity scale if the fluid starts at rest).
    pub fn auto_dt(&self, cfl: f64) -> f64 {
        cfl * self.grid.min_spacing() / self.v0.max_abs().max(1.0)
    }

    pub fn case(&self, params: ModelParams, dt: f64, t_end: f64) -> Case {
        Case {
            grid: self.grid.clone(),
            v0: self.v0.clone(),
            b0: self.b0.clone(),
            forcing: self.forcing.clone(),
            params,
            dt,
            t_end,
        }
    }
}

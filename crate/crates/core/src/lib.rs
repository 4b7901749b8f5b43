//! Solver and verification toolkit for a diffusive viscoelastic rate-type
//! fluid: incompressible Navier-Stokes coupled to a positive definite
//! conformation tensor with Oldroyd-B/Giesekus relaxation, a Gordon-Schowalter
//! objective derivative, stress diffusion and a two-part free energy.

pub mod constitutive;
pub mod error;
pub mod grid;
pub mod identities;
pub mod manufactured;
pub mod monitor;
pub mod sampling;
pub mod scenario;
pub mod spd;
pub mod stepper;
pub mod study;

pub use constitutive::ModelParams;
pub use spd::{Mat3, Spectrum3, SymTensor3};

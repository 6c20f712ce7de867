//! Projective integration of discrete-velocity kinetic equations in the
//! diffusion limit.
//!
//! The inner integrator is forward Euler with a small step `dt ~ eps^2` on a
//! finite-volume grid; the outer projective step extrapolates the last two
//! inner states over a macroscopic step `Dt ~ dx^2`. The [`spectral`] module
//! decides how many inner steps make the combination stable.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod inner;
pub mod io;
pub mod projective;
pub mod reference;
pub mod spectral;
pub mod state;
pub mod velocity;

pub use error::{Error, Result};
pub use grid::{BoundaryCondition, Grid};
pub use inner::{FluxKind, InnerParams, InnerStepper, LinearScheme, SuOlsonScheme};
pub use projective::{advise_params, run_projective, Advice, ProjectiveParams, Trajectory};
pub use state::{KineticState, PhaseState, SuOlsonState};
pub use velocity::VelocitySpace;

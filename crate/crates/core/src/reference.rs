//! Reference solutions: the explicit heat equation on the kinetic grid and
//! plain fine-step kinetic integration.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::inner::{run_inner_to, step_partition, InnerStepper};
use crate::state::PhaseState;

/// Largest number of inner steps a reference run may take unless overridden.
pub const DEFAULT_COST_CEILING: u64 = 100_000_000;

#[derive(Debug, Clone)]
pub struct HeatParams {
    pub diffusivity: f64,
    pub dt: f64,
    pub grid: Grid,
}

impl HeatParams {
    pub fn new(diffusivity: f64, dt: f64, grid: Grid) -> Result<Self> {
        let hp = Self {
            diffusivity,
            dt,
            grid,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// Largest stable step `dx^2 / (2 d)`.
    pub fn max_dt(&self) -> f64 {
        self.grid.dx().powi(2) / (2.0 * self.diffusivity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diffusivity > 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "heat diffusivity and dt must be positive (d = {}, dt = {})",
                self.diffusivity, self.dt
            )));
        }
        if self.dt > self.max_dt() * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "explicit heat step needs dt <= dx^2 / (2 d) = {} (dt = {})",
                self.max_dt(),
                self.dt
            )));
        }
        Ok(())
    }
}

/// One explicit three-point step `rho + (d dt / dx^2)(rho_{i+1} - 2 rho_i + rho_{i-1})`.
pub fn heat_step(rho: &[f64], hp: &HeatParams) -> Result<Vec<f64>> {
    hp.validate()?;
    heat_step_with(rho, &hp.grid, hp.diffusivity, hp.dt)
}

fn heat_step_with(rho: &[f64], grid: &Grid, d: f64, dt: f64) -> Result<Vec<f64>> {
    if rho.len() != grid.n_cells() {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells(),
            got: rho.len(),
        });
    }
    let mu = d * dt / grid.dx().powi(2);
    Ok((0..rho.len())
        .map(|i| rho[i] + mu * (rho[grid.right(i)] - 2.0 * rho[i] + rho[grid.left(i)]))
        .collect())
}

/// Advances the heat equation over `duration`, shortening the final step.
pub fn run_heat(rho: &[f64], hp: &HeatParams, duration: f64) -> Result<Vec<f64>> {
    hp.validate()?;
    let (full, partial) = step_partition(duration, hp.dt);
    let mut r = rho.to_vec();
    for _ in 0..full {
        r = heat_step_with(&r, &hp.grid, hp.diffusivity, hp.dt)?;
    }
    if partial > 0.0 {
        r = heat_step_with(&r, &hp.grid, hp.diffusivity, partial)?;
    }
    Ok(r)
}

/// Inner step used by a reference run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceStep {
    EpsCubed,
    EpsSquared,
    Explicit(f64),
}

impl ReferenceStep {
    pub fn dt(&self, eps: f64) -> f64 {
        match *self {
            ReferenceStep::EpsCubed => eps.powi(3),
            ReferenceStep::EpsSquared => eps * eps,
            ReferenceStep::Explicit(dt) => dt,
        }
    }
}

impl std::fmt::Display for ReferenceStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReferenceStep::EpsCubed => write!(f, "eps3"),
            ReferenceStep::EpsSquared => write!(f, "eps2"),
            ReferenceStep::Explicit(dt) => write!(f, "dt{dt:e}"),
        }
    }
}

/// Inner steps needed to cover `duration` with step `dt`.
pub fn estimated_steps(duration: f64, dt: f64) -> u64 {
    let (full, partial) = step_partition(duration, dt);
    full + u64::from(partial > 0.0)
}

/// Refuses runs that would take more than `ceiling` inner steps.
pub fn check_cost(duration: f64, dt: f64, ceiling: u64) -> Result<u64> {
    let estimated = estimated_steps(duration, dt);
    if estimated > ceiling {
        return Err(Error::CostCeiling { estimated, ceiling });
    }
    Ok(estimated)
}

/// Plain inner integration to each of `times` (ascending, all after the
/// initial time). Returns the state at every requested time.
pub fn kinetic_reference<S: InnerStepper>(
    stepper: &S,
    initial: &S::State,
    times: &[f64],
    ceiling: u64,
) -> Result<Vec<S::State>> {
    let t0 = initial.time();
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::InvalidParameter(
            "reference times must be ascending and not before the initial time".into(),
        ));
    }
    if let Some(&last) = times.last() {
        check_cost(last - t0, stepper.dt(), ceiling)?;
    }
    let mut out = Vec::with_capacity(times.len());
    let mut current = initial.clone();
    for &t in times {
        current = run_inner_to(stepper, &current, t)?;
        out.push(current.clone());
    }
    Ok(out)
}

//! Finite-volume transport operator and the explicit inner stepper.
//!
//! One inner step of size `dt` applies
//!
//! ```text
//! f' = f - (dt/eps) Phi(f) + (dt/eps^2) (rho - f)
//! ```
//!
//! with `rho` taken from the pre-update state. The Su-Olson variant adds
//! `dt (sigma_a (Theta - rho) + S)` to every velocity and advances
//! `Theta' = Theta + dt sigma_a (rho - Theta)`.

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::state::{KineticState, PhaseState, SuOlsonState};
use crate::velocity::VelocitySpace;

/// Smallest accepted mean-free-path ratio.
pub const MIN_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxKind {
    Upwind,
    Centered,
}

impl std::fmt::Display for FluxKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FluxKind::Upwind => "upwind",
            FluxKind::Centered => "centered",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerParams {
    pub eps: f64,
    pub dt: f64,
    pub flux: FluxKind,
    /// Su-Olson absorption coefficient.
    pub sigma_a: f64,
    /// Su-Olson source per cell; unused by the linear model.
    pub source: Vec<f64>,
}

impl InnerParams {
    pub fn new(eps: f64, dt: f64, flux: FluxKind) -> Self {
        Self {
            eps,
            dt,
            flux,
            sigma_a: 1.0,
            source: Vec::new(),
        }
    }

    pub fn with_sigma_a(mut self, sigma_a: f64) -> Self {
        self.sigma_a = sigma_a;
        self
    }

    pub fn with_source(mut self, source: Vec<f64>) -> Self {
        self.source = source;
        self
    }

    /// Checks the step against the relaxation ceiling `dt <= 2 eps^2` and,
    /// for the centered flux at `dt = eps^2`, the mesh bound `dx >= v_max eps`.
    pub fn validate(&self, grid: &Grid, vs: &VelocitySpace) -> Result<()> {
        if !(self.eps >= MIN_EPS) || !self.eps.is_finite() {
            return Err(invalid(format!(
                "eps must be at least {MIN_EPS:e}, got {}",
                self.eps
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!(
                "inner step must be positive, got {}",
                self.dt
            )));
        }
        let eps2 = self.eps * self.eps;
        if self.dt > 2.0 * eps2 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "inner step {} exceeds the relaxation stability ceiling 2 eps^2 = {}",
                self.dt,
                2.0 * eps2
            )));
        }
        if self.flux == FluxKind::Centered
            && (self.dt - eps2).abs() <= 1e-12 * eps2
            && grid.dx() < vs.v_max() * self.eps * (1.0 - 1e-12)
        {
            return Err(Error::Config(format!(
                "centered inner scheme with dt = eps^2 requires dx >= v_max * eps \
                 (dx = {}, v_max * eps = {})",
                grid.dx(),
                vs.v_max() * self.eps
            )));
        }
        if !(self.sigma_a >= 0.0) {
            return Err(invalid(format!(
                "sigma_a must be nonnegative, got {}",
                self.sigma_a
            )));
        }
        Ok(())
    }
}

/// Default Su-Olson source: unit strength on `|x| <= 1/2`.
pub fn default_source(grid: &Grid) -> Vec<f64> {
    grid.centers()
        .iter()
        .map(|x| if x.abs() <= 0.5 + 1e-12 { 1.0 } else { 0.0 })
        .collect()
}

/// Spatial operator `Phi(f)_{i,j} = (phi_{i+1/2,j} - phi_{i-1/2,j}) / dx`.
pub fn phi(
    grid: &Grid,
    vs: &VelocitySpace,
    state: &KineticState,
    flux: FluxKind,
) -> Result<Vec<f64>> {
    if !state.matches(grid, vs) {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells() * vs.len(),
            got: state.as_slice().len(),
        });
    }
    let nv = vs.len();
    let mut out = vec![0.0; grid.n_cells() * nv];
    for i in 0..grid.n_cells() {
        let (fl, fi, fr) = (
            state.row(grid.left(i)),
            state.row(i),
            state.row(grid.right(i)),
        );
        for (j, &v) in vs.velocities().iter().enumerate() {
            out[i * nv + j] = transport_difference(flux, v, fl[j], fi[j], fr[j]) / grid.dx();
        }
    }
    Ok(out)
}

/// Flux difference `phi_{i+1/2} - phi_{i-1/2}` for one velocity.
#[inline(always)]
fn transport_difference(flux: FluxKind, v: f64, left: f64, centre: f64, right: f64) -> f64 {
    match flux {
        FluxKind::Centered => 0.5 * v * (right - left),
        FluxKind::Upwind => {
            if v > 0.0 {
                v * (centre - left)
            } else {
                v * (right - centre)
            }
        }
    }
}

/// Explicit stepper for a kinetic model.
pub trait InnerStepper: Sync {
    type State: PhaseState;

    /// Nominal inner step.
    fn dt(&self) -> f64;

    /// Writes the state advanced by `dt` into `dst`. Returns `false` if any
    /// output value is non-finite.
    fn advance(&self, src: &Self::State, dst: &mut Self::State, dt: f64) -> bool;

    fn grid(&self) -> &Grid;

    fn velocities(&self) -> &VelocitySpace;
}

/// Forward Euler stepper for the linear relaxation model.
#[derive(Debug, Clone)]
pub struct LinearScheme {
    grid: Grid,
    vs: VelocitySpace,
    params: InnerParams,
}

impl LinearScheme {
    pub fn new(grid: &Grid, vs: &VelocitySpace, params: InnerParams) -> Result<Self> {
        params.validate(grid, vs)?;
        Ok(Self {
            grid: grid.clone(),
            vs: vs.clone(),
            params,
        })
    }

    pub fn params(&self) -> &InnerParams {
        &self.params
    }

    pub fn step(&self, state: &KineticState) -> Result<KineticState> {
        checked_step(self, state)
    }
}

impl InnerStepper for LinearScheme {
    type State = KineticState;

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn advance(&self, src: &KineticState, dst: &mut KineticState, dt: f64) -> bool {
        let finite = kinetic_update(
            &self.grid,
            &self.vs,
            self.params.flux,
            self.params.eps,
            dt,
            src,
            dst,
            |_, _| 0.0,
        );
        dst.set_t(src.t() + dt);
        finite
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn velocities(&self) -> &VelocitySpace {
        &self.vs
    }
}

/// Forward Euler stepper for the Su-Olson system.
#[derive(Debug, Clone)]
pub struct SuOlsonScheme {
    grid: Grid,
    vs: VelocitySpace,
    params: InnerParams,
}

impl SuOlsonScheme {
    pub fn new(grid: &Grid, vs: &VelocitySpace, params: InnerParams) -> Result<Self> {
        params.validate(grid, vs)?;
        if params.source.len() != grid.n_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.n_cells(),
                got: params.source.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            vs: vs.clone(),
            params,
        })
    }

    pub fn params(&self) -> &InnerParams {
        &self.params
    }

    pub fn step(&self, state: &SuOlsonState) -> Result<SuOlsonState> {
        checked_step(self, state)
    }
}

impl InnerStepper for SuOlsonScheme {
    type State = SuOlsonState;

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn advance(&self, src: &SuOlsonState, dst: &mut SuOlsonState, dt: f64) -> bool {
        let sigma = self.params.sigma_a;
        let source = &self.params.source;
        let theta = &src.theta;
        let mut finite = kinetic_update(
            &self.grid,
            &self.vs,
            self.params.flux,
            self.params.eps,
            dt,
            &src.kinetic,
            &mut dst.kinetic,
            |i, rho| dt * (sigma * (theta[i] - rho) + source[i]),
        );
        for i in 0..self.grid.n_cells() {
            let rho = self.vs.moment_unchecked(src.kinetic.row(i));
            let next = theta[i] + dt * sigma * (rho - theta[i]);
            finite &= next.is_finite();
            dst.theta[i] = next;
        }
        dst.kinetic.set_t(src.kinetic.t() + dt);
        finite
    }

    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn velocities(&self) -> &VelocitySpace {
        &self.vs
    }
}

/// Shared transport-relaxation update; `extra(i, rho_i)` is added to every
/// velocity of cell `i`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn kinetic_update(
    grid: &Grid,
    vs: &VelocitySpace,
    flux: FluxKind,
    eps: f64,
    dt: f64,
    src: &KineticState,
    dst: &mut KineticState,
    extra: impl Fn(usize, f64) -> f64,
) -> bool {
    let nv = vs.len();
    let transport = dt / (eps * grid.dx());
    let relax = dt / (eps * eps);
    let velocities = vs.velocities();
    let out = dst.as_mut_slice();
    let mut finite = true;
    for i in 0..grid.n_cells() {
        let (fl, fi, fr) = (src.row(grid.left(i)), src.row(i), src.row(grid.right(i)));
        let rho = vs.moment_unchecked(fi);
        let add = extra(i, rho);
        let row = &mut out[i * nv..(i + 1) * nv];
        for j in 0..nv {
            let diff = transport_difference(flux, velocities[j], fl[j], fi[j], fr[j]);
            let next = fi[j] - transport * diff + relax * (rho - fi[j]) + add;
            finite &= next.is_finite();
            row[j] = next;
        }
    }
    finite
}

fn checked_step<S: InnerStepper>(stepper: &S, state: &S::State) -> Result<S::State> {
    let mut out = state.clone();
    if !stepper.advance(state, &mut out, stepper.dt()) {
        return Err(Error::Diverged {
            step: 1,
            t: out.time(),
        });
    }
    Ok(out)
}

/// One inner step of the linear model.
pub fn step_linear(
    grid: &Grid,
    vs: &VelocitySpace,
    state: &KineticState,
    params: &InnerParams,
) -> Result<KineticState> {
    LinearScheme::new(grid, vs, params.clone())?.step(state)
}

/// One inner step of the Su-Olson system.
pub fn step_suolson(
    grid: &Grid,
    vs: &VelocitySpace,
    state: &SuOlsonState,
    params: &InnerParams,
) -> Result<SuOlsonState> {
    SuOlsonScheme::new(grid, vs, params.clone())?.step(state)
}

/// Applies `n_steps` inner steps. Divergence is reported with the 1-based step index.
pub fn run_inner<S: InnerStepper>(stepper: &S, state: &S::State, n_steps: u64) -> Result<S::State> {
    let mut current = state.clone();
    let mut scratch = state.clone();
    for step in 1..=n_steps {
        if !stepper.advance(&current, &mut scratch, stepper.dt()) {
            return Err(Error::Diverged {
                step,
                t: scratch.time(),
            });
        }
        std::mem::swap(&mut current, &mut scratch);
    }
    Ok(current)
}

/// Number of full inner steps that fit in `span` and the length of the
/// trailing partial step (zero if `span` is a multiple of `dt` to rounding).
pub fn step_partition(span: f64, dt: f64) -> (u64, f64) {
    if span <= 0.0 {
        return (0, 0.0);
    }
    let ratio = span / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        return (nearest as u64, 0.0);
    }
    let full = ratio.floor();
    (full as u64, span - full * dt)
}

/// Integrates with plain inner steps from `state.time()` to `t_end`, landing
/// exactly on `t_end` (the last step is shortened when needed).
pub fn run_inner_to<S: InnerStepper>(
    stepper: &S,
    state: &S::State,
    t_end: f64,
) -> Result<S::State> {
    let t0 = state.time();
    let dt = stepper.dt();
    let (full, partial) = step_partition(t_end - t0, dt);
    let mut current = state.clone();
    let mut scratch = state.clone();
    for step in 1..=full {
        if !stepper.advance(&current, &mut scratch, dt) {
            return Err(Error::Diverged {
                step,
                t: scratch.time(),
            });
        }
        // Avoid drift from repeated addition.
        scratch.set_time(t0 + step as f64 * dt);
        std::mem::swap(&mut current, &mut scratch);
    }
    if partial > 0.0 {
        if !stepper.advance(&current, &mut scratch, partial) {
            return Err(Error::Diverged {
                step: full + 1,
                t: t_end,
            });
        }
        std::mem::swap(&mut current, &mut scratch);
    }
    if t_end > t0 {
        current.set_time(t_end);
    }
    Ok(current)
}

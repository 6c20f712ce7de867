//! Projective forward Euler outer integrator.
//!
//! Each outer step takes `K + 1` inner steps of size `dt_inner` and then
//! extrapolates along the chord through the last two inner iterates:
//!
//! ```text
//! f^{N+1} = f^{N,K+1} + (dt_outer - (K+1) dt_inner) (f^{N,K+1} - f^{N,K}) / dt_inner
//! ```

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::inner::{run_inner_to, FluxKind, InnerParams, InnerStepper};
use crate::spectral;
use crate::state::PhaseState;
use crate::velocity::VelocitySpace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveParams {
    pub dt_inner: f64,
    /// `K`; every outer step takes `K + 1` inner steps.
    pub k_inner: usize,
    pub dt_outer: f64,
    pub t_end: f64,
}

impl ProjectiveParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("dt_inner", self.dt_inner),
            ("dt_outer", self.dt_outer),
            ("t_end", self.t_end),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(invalid(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.k_inner == 0 {
            return Err(invalid("K must be at least 1"));
        }
        if self.dt_outer < self.inner_span() * (1.0 - 1e-12) {
            return Err(invalid(format!(
                "outer step {} is shorter than the {} inner steps it contains ({})",
                self.dt_outer,
                self.k_inner + 1,
                self.inner_span()
            )));
        }
        Ok(())
    }

    /// Time covered by the `K + 1` inner steps.
    pub fn inner_span(&self) -> f64 {
        (self.k_inner + 1) as f64 * self.dt_inner
    }

    /// Chord multiplier `(dt_outer - (K+1) dt_inner) / dt_inner`.
    pub fn extrapolation_factor(&self) -> f64 {
        (self.dt_outer - self.inner_span()) / self.dt_inner
    }
}

/// One line of the outer-step run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub mass: f64,
}

impl StepRecord {
    pub fn of<S: PhaseState>(step: u64, state: &S, vs: &VelocitySpace, grid: &Grid) -> Self {
        let rho = state.kinetic().density(vs);
        let (rho_min, rho_max) = rho
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            });
        Self {
            step,
            t: state.time(),
            rho_min,
            rho_max,
            mass: rho.iter().sum::<f64>() * grid.dx(),
        }
    }
}

/// Result of a projective run.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    /// States at the requested snapshot times, in increasing time order.
    pub snapshots: Vec<S>,
    pub log: Vec<StepRecord>,
    pub final_state: S,
    pub outer_steps: u64,
}

fn check_inner_matches<S: InnerStepper>(stepper: &S, pp: &ProjectiveParams) -> Result<()> {
    pp.validate()?;
    let dt = stepper.dt();
    if (dt - pp.dt_inner).abs() > 1e-12 * dt {
        return Err(invalid(format!(
            "inner scheme step {dt} differs from projective dt_inner {}",
            pp.dt_inner
        )));
    }
    Ok(())
}

/// Advances by `dt_outer`; assumes `dt_outer >= (K+1) dt_inner`.
fn outer_step<S: InnerStepper>(
    stepper: &S,
    state: &S::State,
    dt_inner: f64,
    k: usize,
    dt_outer: f64,
    index: u64,
) -> Result<S::State> {
    let t0 = state.time();
    let mut previous = state.clone();
    let mut current = state.clone();
    for _ in 0..=k {
        std::mem::swap(&mut previous, &mut current);
        if !stepper.advance(&previous, &mut current, dt_inner) {
            return Err(Error::Diverged { step: index, t: t0 });
        }
    }
    let factor = (dt_outer - (k + 1) as f64 * dt_inner) / dt_inner;
    // Outer step equal to the inner span up to rounding: no extrapolation.
    if factor.abs() > 1e-9 {
        current.extrapolate_from(&previous, factor);
    }
    current.set_time(t0 + dt_outer);
    if !current.is_finite() {
        return Err(Error::Diverged {
            step: index,
            t: t0 + dt_outer,
        });
    }
    Ok(current)
}

/// One projective forward Euler step of length `pp.dt_outer`.
pub fn projective_step<S: InnerStepper>(
    stepper: &S,
    state: &S::State,
    pp: &ProjectiveParams,
) -> Result<S::State> {
    check_inner_matches(stepper, pp)?;
    outer_step(stepper, state, stepper.dt(), pp.k_inner, pp.dt_outer, 1)
}

/// Repeats projective steps until `pp.t_end`.
///
/// Each snapshot time and `t_end` is hit exactly: the last outer step before
/// a target is shortened, and when the shortened step would hold fewer than
/// `K + 1` inner steps the remainder is covered by plain inner steps.
pub fn run_projective<S: InnerStepper>(
    stepper: &S,
    state: &S::State,
    pp: &ProjectiveParams,
    snapshot_times: &[f64],
) -> Result<Trajectory<S::State>> {
    check_inner_matches(stepper, pp)?;
    let t_start = state.time();
    if pp.t_end < t_start - 1e-12 {
        return Err(invalid(format!(
            "t_end {} precedes the state time {t_start}",
            pp.t_end
        )));
    }

    let mut targets: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&t| t > t_start && t < pp.t_end)
        .collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let snapshot_count = targets.len();
    let include_start = snapshot_times.iter().any(|&t| (t - t_start).abs() <= 1e-12);
    let include_end = snapshot_times
        .iter()
        .any(|&t| (t - pp.t_end).abs() <= 1e-12);
    targets.push(pp.t_end);

    let vs = stepper.velocities();
    let grid = stepper.grid();
    let mut snapshots = Vec::new();
    if include_start {
        snapshots.push(state.clone());
    }
    let mut log = vec![StepRecord::of(0, state, vs, grid)];
    let mut current = state.clone();
    let mut step = 0u64;

    for (n, &target) in targets.iter().enumerate() {
        let tol = 1e-12 * target.abs().max(1.0);
        while target - current.time() > tol {
            let remaining = target - current.time();
            step += 1;
            current = if remaining >= pp.dt_outer * (1.0 + 1e-10) {
                outer_step(
                    stepper,
                    &current,
                    stepper.dt(),
                    pp.k_inner,
                    pp.dt_outer,
                    step,
                )?
            } else if remaining >= pp.inner_span() {
                let mut next =
                    outer_step(stepper, &current, stepper.dt(), pp.k_inner, remaining, step)?;
                next.set_time(target);
                next
            } else {
                run_inner_to(stepper, &current, target).map_err(|e| match e {
                    Error::Diverged { t, .. } => Error::Diverged { step, t },
                    other => other,
                })?
            };
            log.push(StepRecord::of(step, &current, vs, grid));
        }
        if n < snapshot_count || include_end {
            snapshots.push(current.clone());
        }
    }

    Ok(Trajectory {
        snapshots,
        log,
        final_state: current,
        outer_steps: step,
    })
}

/// Parameters chosen by [`advise_params`].
#[derive(Debug, Clone)]
pub struct Advice {
    pub inner: InnerParams,
    pub dt_outer: f64,
    /// Smallest stable `K` from the exact mode-by-mode check.
    pub k_inner: usize,
    /// Sufficient `K` from the closed-form bound, for comparison.
    pub k_closed_form: f64,
    /// `eps / dx`.
    pub r: f64,
    /// `d_p dt_outer / dx^2`.
    pub nu: f64,
}

impl Advice {
    pub fn projective_params(&self, t_end: f64) -> ProjectiveParams {
        ProjectiveParams {
            dt_inner: self.inner.dt,
            k_inner: self.k_inner,
            dt_outer: self.dt_outer,
            t_end,
        }
    }
}

/// Chooses `dt_inner = eps^2`, `dt_outer = nu dx^2 / d_p`, the centered flux,
/// and the smallest `K` (up to 64) for which every grid mode is stable.
pub fn advise_params(vs: &VelocitySpace, grid: &Grid, eps: f64, nu: f64) -> Result<Advice> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if !(nu > 0.0 && nu <= 2.0) {
        return Err(invalid(format!("nu must lie in (0, 2], got {nu}")));
    }
    let dx = grid.dx();
    if dx < vs.v_max() * eps * (1.0 - 1e-12) {
        return Err(Error::Config(format!(
            "dt = eps^2 needs dx >= v_max * eps for a stable inner scheme \
             (dx = {dx}, v_max * eps = {})",
            vs.v_max() * eps
        )));
    }
    let dt_inner = eps * eps;
    let dt_outer = nu * dx * dx / vs.d_p();
    let search = spectral::min_inner_steps(
        vs,
        grid,
        eps,
        dt_inner,
        dt_outer,
        FluxKind::Centered,
        spectral::DEFAULT_K_MAX,
    );
    let k_inner = search.min_k.ok_or_else(|| {
        Error::Config(format!(
            "no K <= {} stabilizes the projective scheme at nu = {nu}",
            spectral::DEFAULT_K_MAX
        ))
    })?;
    if dt_outer < (k_inner + 1) as f64 * dt_inner {
        return Err(Error::Config(format!(
            "outer step {dt_outer} is shorter than K + 1 = {} inner steps of {dt_inner}",
            k_inner + 1
        )));
    }
    Ok(Advice {
        inner: InnerParams::new(eps, dt_inner, FluxKind::Centered),
        dt_outer,
        k_inner,
        k_closed_form: search.closed_form_bound,
        r: eps / dx,
        nu,
    })
}

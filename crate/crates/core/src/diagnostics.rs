use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::inner::{phi, FluxKind};
use crate::state::KineticState;
use crate::velocity::VelocitySpace;

/// One row of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub label: String,
    pub eps: f64,
    pub dx: f64,
    /// `None` for runs without an outer step.
    pub dt_outer: Option<f64>,
    pub t: f64,
    pub err_rho: f64,
    pub err_flux: f64,
}

impl ErrorRecord {
    /// Density and flux errors of `state` against `reference`.
    pub fn compare(
        label: impl Into<String>,
        state: &KineticState,
        reference: &KineticState,
        vs: &VelocitySpace,
        grid: &Grid,
        eps: f64,
        dt_outer: Option<f64>,
    ) -> Result<Self> {
        Self::from_moments(
            label,
            (&state.density(vs), &state.flux(vs, eps)?),
            (&reference.density(vs), &reference.flux(vs, eps)?),
            grid,
            eps,
            dt_outer,
            state.t(),
        )
    }

    pub fn from_moments(
        label: impl Into<String>,
        (rho, flux): (&[f64], &[f64]),
        (rho_ref, flux_ref): (&[f64], &[f64]),
        grid: &Grid,
        eps: f64,
        dt_outer: Option<f64>,
        t: f64,
    ) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            eps,
            dx: grid.dx(),
            dt_outer,
            t,
            err_rho: l2_error(rho, rho_ref, grid.dx())?,
            err_flux: l2_error(flux, flux_ref, grid.dx())?,
        })
    }
}

/// `sqrt(dx sum_i (a_i - b_i)^2)`.
pub fn l2_error(a: &[f64], b: &[f64], dx: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((dx * s).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(invalid("slope needs at least two points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("slope needs finite, strictly positive data"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope needs at least two distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// `min_i (v_max rho_i - eps |J_i|)`; negative where the limited-flux bound fails.
pub fn limited_flux_margin(state: &KineticState, vs: &VelocitySpace, eps: f64) -> Result<f64> {
    let rho = state.density(vs);
    let flux = state.flux(vs, eps)?;
    Ok(rho
        .iter()
        .zip(&flux)
        .map(|(r, j)| vs.v_max() * r - eps * j.abs())
        .fold(f64::INFINITY, f64::min))
}

/// L2 norm over cells and velocities of `f - rho + eps Phi(rho)`, with the
/// centered operator applied to the velocity-independent state `rho`.
pub fn hilbert_residual(
    state: &KineticState,
    eps: f64,
    vs: &VelocitySpace,
    grid: &Grid,
) -> Result<f64> {
    if !state.matches(grid, vs) {
        return Err(Error::LengthMismatch {
            expected: grid.n_cells() * vs.len(),
            got: state.as_slice().len(),
        });
    }
    let rho = state.density(vs);
    let equilibrium = KineticState::from_vec(
        grid,
        vs,
        rho.iter()
            .flat_map(|&r| std::iter::repeat_n(r, vs.len()))
            .collect(),
        state.t(),
    )?;
    let ph = phi(grid, vs, &equilibrium, FluxKind::Centered)?;
    let n = vs.len();
    let mut total = 0.0;
    for i in 0..grid.n_cells() {
        for j in 0..n {
            let r = state.get(i, j) - rho[i] + eps * ph[i * n + j];
            total += vs.weight() * r * r;
        }
    }
    Ok((grid.dx() * total).sqrt())
}

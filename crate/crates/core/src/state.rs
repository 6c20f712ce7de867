//! Distribution-state containers and macroscopic observables.

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::velocity::VelocitySpace;

/// Cell-averaged distribution `f[i][j]`, row-major by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    n_cells: usize,
    n_vel: usize,
    f: Vec<f64>,
    t: f64,
}

impl KineticState {
    pub fn zeros(grid: &Grid, vs: &VelocitySpace) -> Self {
        Self {
            n_cells: grid.n_cells(),
            n_vel: vs.len(),
            f: vec![0.0; grid.n_cells() * vs.len()],
            t: 0.0,
        }
    }

    /// State with `f[i][j] = init(x_i, v_j)` sampled at cell centers.
    pub fn from_fn(grid: &Grid, vs: &VelocitySpace, init: impl Fn(f64, f64) -> f64) -> Self {
        let mut f = Vec::with_capacity(grid.n_cells() * vs.len());
        for &x in grid.centers() {
            f.extend(vs.velocities().iter().map(|&v| init(x, v)));
        }
        Self {
            n_cells: grid.n_cells(),
            n_vel: vs.len(),
            f,
            t: 0.0,
        }
    }

    pub fn from_vec(grid: &Grid, vs: &VelocitySpace, f: Vec<f64>, t: f64) -> Result<Self> {
        let expected = grid.n_cells() * vs.len();
        if f.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: f.len(),
            });
        }
        Ok(Self {
            n_cells: grid.n_cells(),
            n_vel: vs.len(),
            f,
            t,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_velocities(&self) -> usize {
        self.n_vel
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.f
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.f
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.n_vel + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.f[i * self.n_vel + j] = value;
    }

    /// Velocity values in cell `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.f[i * self.n_vel..(i + 1) * self.n_vel]
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|x| x.is_finite())
    }

    pub fn matches(&self, grid: &Grid, vs: &VelocitySpace) -> bool {
        self.n_cells == grid.n_cells() && self.n_vel == vs.len()
    }

    /// `rho_i = <f_i>`.
    pub fn density(&self, vs: &VelocitySpace) -> Vec<f64> {
        (0..self.n_cells)
            .map(|i| vs.moment_unchecked(self.row(i)))
            .collect()
    }

    /// `J_i = <v f_i> / eps`.
    pub fn flux(&self, vs: &VelocitySpace, eps: f64) -> Result<Vec<f64>> {
        if !(eps > 0.0) {
            return Err(invalid(format!("eps must be positive, got {eps}")));
        }
        let v = vs.velocities();
        Ok((0..self.n_cells)
            .map(|i| {
                let row = self.row(i);
                row.iter().zip(v).map(|(f, v)| v * f).sum::<f64>() * vs.weight() / eps
            })
            .collect())
    }

    /// Total mass `sum_i rho_i dx`.
    pub fn mass(&self, vs: &VelocitySpace, grid: &Grid) -> f64 {
        self.density(vs).iter().sum::<f64>() * grid.dx()
    }
}

/// Kinetic state coupled to the material field `Theta = T^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuOlsonState {
    pub kinetic: KineticState,
    pub theta: Vec<f64>,
}

impl SuOlsonState {
    pub fn new(kinetic: KineticState, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != kinetic.n_cells() {
            return Err(Error::LengthMismatch {
                expected: kinetic.n_cells(),
                got: theta.len(),
            });
        }
        Ok(Self { kinetic, theta })
    }

    pub fn t(&self) -> f64 {
        self.kinetic.t()
    }
}

/// State that the projective integrator can advance and extrapolate.
pub trait PhaseState: Clone + Send {
    fn time(&self) -> f64;
    fn set_time(&mut self, t: f64);
    fn kinetic(&self) -> &KineticState;
    /// `self <- self + coef * (self - previous)`, applied to every field.
    fn extrapolate_from(&mut self, previous: &Self, coef: f64);
    fn is_finite(&self) -> bool;
}

impl PhaseState for KineticState {
    fn time(&self) -> f64 {
        self.t
    }

    fn set_time(&mut self, t: f64) {
        self.t = t;
    }

    fn kinetic(&self) -> &KineticState {
        self
    }

    fn extrapolate_from(&mut self, previous: &Self, coef: f64) {
        for (x, &y) in self.f.iter_mut().zip(&previous.f) {
            *x += coef * (*x - y);
        }
    }

    fn is_finite(&self) -> bool {
        KineticState::is_finite(self)
    }
}

impl PhaseState for SuOlsonState {
    fn time(&self) -> f64 {
        self.kinetic.t
    }

    fn set_time(&mut self, t: f64) {
        self.kinetic.t = t;
    }

    fn kinetic(&self) -> &KineticState {
        &self.kinetic
    }

    fn extrapolate_from(&mut self, previous: &Self, coef: f64) {
        self.kinetic.extrapolate_from(&previous.kinetic, coef);
        for (x, &y) in self.theta.iter_mut().zip(&previous.theta) {
            *x += coef * (*x - y);
        }
    }

    fn is_finite(&self) -> bool {
        self.kinetic.is_finite() && self.theta.iter().all(|x| x.is_finite())
    }
}

/// Square pulse in phase space: `f = 2` on `|x| <= 1/2` and `-3/4 <= v <= 1/4`,
/// `f = 1` elsewhere, averaged exactly over each cell in `x` and evaluated
/// pointwise in `v`.
pub fn init_linear_benchmark(grid: &Grid, vs: &VelocitySpace) -> KineticState {
    let mut state = KineticState::zeros(grid, vs);
    for i in 0..grid.n_cells() {
        let frac = grid.overlap_fraction(i, -0.5, 0.5);
        for (j, &v) in vs.velocities().iter().enumerate() {
            let raised = v >= -0.75 - 1e-12 && v <= 0.25 + 1e-12;
            state.set(i, j, if raised { 1.0 + frac } else { 1.0 });
        }
    }
    state
}

/// Uniform Su-Olson initial datum `f = Theta = a`.
pub fn init_suolson(grid: &Grid, vs: &VelocitySpace, a: f64) -> Result<SuOlsonState> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid(format!(
            "initial amplitude must be positive, got {a}"
        )));
    }
    let kinetic = KineticState::from_fn(grid, vs, |_, _| a);
    SuOlsonState::new(kinetic, vec![a; grid.n_cells()])
}

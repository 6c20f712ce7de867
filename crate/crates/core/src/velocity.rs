//! Symmetric discrete velocity space.
//!
//! The space holds the `2p` velocities `±(2j-1)/(2p)`, `j = 1..p`, with the
//! uniform measure `1/(2p)`. Every per-velocity vector in the crate uses the
//! ordering `(v_p, ..., v_1, -v_1, ..., -v_p)`, which is also the diagonal
//! ordering of the Fourier symbols in [`crate::spectral`].

use crate::error::{invalid, Error, Result};

/// Moments of a normalized, symmetric velocity measure.
///
/// Only the discrete space implements this; continuous measures (an interval
/// with normalized Lebesgue measure, a Gaussian) would plug in here.
pub trait VelocityMoments {
    /// Second moment `<v^2>`, the diffusion coefficient of the limit equation.
    fn second_moment(&self) -> f64;
    /// Supremum of `|v|` over the support.
    fn max_speed(&self) -> f64;
    /// First absolute moment `<|v|>`.
    fn abs_mean(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySpace {
    p: usize,
    velocities: Vec<f64>,
    weight: f64,
    d_p: f64,
    v_max: f64,
    abs_mean: f64,
}

impl VelocitySpace {
    /// Builds the space with `2p` velocities. Moments are summed from the
    /// stored velocities.
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("velocity half-count p must be at least 1"));
        }
        let two_p = (2 * p) as f64;
        let positive = (1..=p).rev().map(|j| (2 * j - 1) as f64 / two_p);
        let negative = (1..=p).map(|j| -((2 * j - 1) as f64) / two_p);
        let velocities: Vec<f64> = positive.chain(negative).collect();
        let weight = 1.0 / two_p;

        let d_p = velocities.iter().map(|v| v * v).sum::<f64>() * weight;
        let abs_mean = velocities.iter().map(|v| v.abs()).sum::<f64>() * weight;
        let v_max = velocities[0];

        Ok(Self {
            p,
            velocities,
            weight,
            d_p,
            v_max,
            abs_mean,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of discrete velocities, `2p`.
    pub fn len(&self) -> usize {
        2 * self.p
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    /// Uniform quadrature weight `1/(2p)`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `<v^2>` computed by summation.
    pub fn d_p(&self) -> f64 {
        self.d_p
    }

    /// Largest velocity `v_p = (2p-1)/(2p)`.
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn abs_mean(&self) -> f64 {
        self.abs_mean
    }

    /// Closed form `(4p^2 - 1)/(12 p^2)` of the second moment.
    pub fn d_p_closed_form(p: usize) -> f64 {
        let p2 = (p * p) as f64;
        (4.0 * p2 - 1.0) / (12.0 * p2)
    }

    /// Average `(1/(2p)) sum_j g_j` over the velocity measure.
    pub fn moment(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: g.len(),
            });
        }
        Ok(self.moment_unchecked(g))
    }

    /// Index of the velocity `-v_j` paired with index `j`.
    pub fn mirror(&self, j: usize) -> usize {
        self.len() - 1 - j
    }

    #[inline]
    pub(crate) fn moment_unchecked(&self, g: &[f64]) -> f64 {
        g.iter().sum::<f64>() * self.weight
    }
}

impl VelocityMoments for VelocitySpace {
    fn second_moment(&self) -> f64 {
        self.d_p
    }

    fn max_speed(&self) -> f64 {
        self.v_max
    }

    fn abs_mean(&self) -> f64 {
        self.abs_mean
    }
}

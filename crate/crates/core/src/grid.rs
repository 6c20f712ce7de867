use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-gradient: the ghost cell copies the adjacent boundary cell.
    NeumannHomogeneous,
}

/// Uniform 1D cell mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    dx: f64,
    bc: BoundaryCondition,
    centers: Vec<f64>,
}

impl Grid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize, bc: BoundaryCondition) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_right <= x_left {
            return Err(invalid(format!(
                "domain [{x_left}, {x_right}] must be a finite, nonempty interval"
            )));
        }
        if n_cells < 3 {
            return Err(invalid("grid needs at least 3 cells"));
        }
        let dx = (x_right - x_left) / n_cells as f64;
        let centers = (0..n_cells)
            .map(|i| x_left + (i as f64 + 0.5) * dx)
            .collect();
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            dx,
            bc,
            centers,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Left and right edges of cell `i`.
    pub fn cell_edges(&self, i: usize) -> (f64, f64) {
        (
            self.x_left + i as f64 * self.dx,
            self.x_left + (i + 1) as f64 * self.dx,
        )
    }

    /// Index holding the value of the left neighbour of cell `i`, ghost cells resolved.
    #[inline]
    pub fn left(&self, i: usize) -> usize {
        match (i, self.bc) {
            (0, BoundaryCondition::Periodic) => self.n_cells - 1,
            (0, BoundaryCondition::NeumannHomogeneous) => 0,
            _ => i - 1,
        }
    }

    /// Index holding the value of the right neighbour of cell `i`, ghost cells resolved.
    #[inline]
    pub fn right(&self, i: usize) -> usize {
        if i + 1 < self.n_cells {
            i + 1
        } else {
            match self.bc {
                BoundaryCondition::Periodic => 0,
                BoundaryCondition::NeumannHomogeneous => self.n_cells - 1,
            }
        }
    }

    /// Discrete Fourier wavenumbers `2 pi m / N_x`, `m = 0..N_x`.
    pub fn mode_wavenumbers(&self) -> Vec<f64> {
        let n = self.n_cells as f64;
        (0..self.n_cells)
            .map(|m| 2.0 * std::f64::consts::PI * m as f64 / n)
            .collect()
    }

    /// Average over cell `i` of the indicator of `[a, b]`.
    pub fn overlap_fraction(&self, i: usize, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.cell_edges(i);
        let len = (hi.min(b) - lo.max(a)).max(0.0);
        let frac = len / self.dx;
        // Edges that coincide with a, b up to rounding.
        if frac < 1e-12 {
            0.0
        } else if frac > 1.0 - 1e-12 {
            1.0
        } else {
            frac
        }
    }
}

//! Model constants, the cell grid, and discrete densities.
//!
//! Sizes are dimensionless with the maximal size normalized to `M(t) = t`
//! and the total mass to one. Cell `i` (1-based) covers `(ε(i-1), εi]` and is
//! represented by its midpoint `x_i = ε(i - 1/2)`.

use crate::error::{Error, Result};
use crate::quad::{interp_linear, neumaier_sum};

/// Model constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    k0: f64,
}

impl Params {
    /// Normalized total mass.
    pub const TOTAL_MASS: f64 = 1.0;

    pub fn new(k0: f64) -> Result<Self> {
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::invalid(format!("k0 must be positive, got {k0}")));
        }
        Ok(Params { k0 })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn total_mass(&self) -> f64 {
        Self::TOTAL_MASS
    }
}

/// Uniform cell grid starting at size zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    cell_width: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(cell_width: f64, n_cells: usize) -> Result<Self> {
        if !(cell_width > 0.0 && cell_width.is_finite()) {
            return Err(Error::invalid(format!(
                "cell width must be positive, got {cell_width}"
            )));
        }
        if n_cells == 0 {
            return Err(Error::invalid("grid needs at least one cell"));
        }
        Ok(Grid1D {
            cell_width,
            n_cells,
        })
    }

    /// `n_cells` cells covering `[0, 1]`.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(1.0 / n_cells.max(1) as f64, n_cells)
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Representative size of the cell with 0-based index `idx`.
    pub fn midpoint(&self, idx: usize) -> f64 {
        self.cell_width * (idx as f64 + 0.5)
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.midpoint(i)).collect()
    }

    /// Right edge of the last cell.
    pub fn extent(&self) -> f64 {
        self.cell_width * self.n_cells as f64
    }
}

/// Number density per unit size, one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDensity {
    grid: Grid1D,
    values: Vec<f64>,
}

impl DiscreteDensity {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "density values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(DiscreteDensity { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        DiscreteDensity {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    /// Samples a function of size on `[0, 1]` at the cell midpoints of an
    /// `n_cells` grid and rescales it to unit discrete mass.
    pub fn from_fn_normalized(n_cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let grid = Grid1D::unit(n_cells)?;
        let values = grid.midpoints().into_iter().map(f).collect();
        Self::new(grid, values)?.normalized()
    }

    /// Samples a profile given at sorted abscissae on `[0, 1]` (linear
    /// interpolation, constant beyond the ends) and normalizes the mass.
    pub fn from_samples_normalized(n_cells: usize, ys: &[f64], gs: &[f64]) -> Result<Self> {
        if ys.is_empty() || ys.len() != gs.len() {
            return Err(Error::invalid("profile samples are empty or ragged"));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("profile abscissae must be increasing"));
        }
        Self::from_fn_normalized(n_cells, |x| interp_linear(ys, gs, x))
    }

    /// Rescales the values so that the discrete mass is exactly one.
    pub fn normalized(mut self) -> Result<Self> {
        let mass = discrete_mass(&self);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::invalid(format!(
                "cannot normalize a density with mass {mass}"
            )));
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Piecewise-linear interpolant through the cell midpoints, constant
    /// beyond the outermost midpoints and zero past the grid extent.
    pub fn eval(&self, x: f64) -> f64 {
        if x > self.grid.extent() || x < 0.0 {
            return 0.0;
        }
        let eps = self.grid.cell_width();
        let n = self.values.len();
        let s = x / eps - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let k = s.floor() as usize;
        let w = s - k as f64;
        self.values[k] * (1.0 - w) + self.values[k + 1] * w
    }
}

/// Truncated Gaussian on `[0, 1]` normalized to unit discrete mass.
pub fn make_gaussian_initial(center: f64, dispersion: f64, n_cells: usize) -> Result<DiscreteDensity> {
    if !(center > 0.0 && center < 1.0) {
        return Err(Error::invalid(format!("center must lie in (0, 1), got {center}")));
    }
    if !(dispersion > 0.0 && dispersion.is_finite()) {
        return Err(Error::invalid(format!(
            "dispersion must be positive, got {dispersion}"
        )));
    }
    if n_cells < 2 {
        return Err(Error::invalid("need at least two cells"));
    }
    let two_s2 = 2.0 * dispersion * dispersion;
    DiscreteDensity::from_fn_normalized(n_cells, |x| (-(x - center).powi(2) / two_s2).exp())
}

/// `ε Σ x_i g_i`.
pub fn discrete_mass(d: &DiscreteDensity) -> f64 {
    let g = &d.grid;
    g.cell_width() * neumaier_sum(d.values.iter().enumerate().map(|(i, v)| g.midpoint(i) * v))
}

/// `ε Σ g_i`.
pub fn discrete_number(d: &DiscreteDensity) -> f64 {
    d.grid.cell_width() * neumaier_sum(d.values.iter().copied())
}

/// A function sampled at increasing abscissae, e.g. a rescaled snapshot or
/// a self-similar profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    pub ys: Vec<f64>,
    pub vals: Vec<f64>,
}

impl SampledProfile {
    pub fn new(ys: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if ys.is_empty() || ys.len() != vals.len() {
            return Err(Error::invalid("sampled profile is empty or ragged"));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sample abscissae must be strictly increasing"));
        }
        Ok(SampledProfile { ys, vals })
    }

    /// Linear interpolation, constant extrapolation.
    pub fn eval(&self, y: f64) -> f64 {
        interp_linear(&self.ys, &self.vals, y)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.ys[0], self.ys[self.ys.len() - 1])
    }
}

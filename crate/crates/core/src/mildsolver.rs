//! Mild solutions by Picard iteration.
//!
//! A mild solution is a fixed point of
//!
//! ```text
//! Γ[g](t,x) = g_ini(x) · exp(-k0 ∫₁ᵗ g(s,s-x)/N(s) ds)      x < 1
//!             B[g](x)  · exp(-k0 ∫ₓᵗ g(s,s-x)/N(s) ds)      1 ≤ x ≤ t
//!             0                                             x > t
//! B[g](t)   = k0/(2N(t)) ∫₀ᵗ g(t,x) g(t,t-x) dx
//! ```
//!
//! The grid uses one spacing `h = 1/m` in both time and size, with rows at
//! `t_a = 1 + a h` and nodes at `x_b = b h`. The characteristics `s ↦ s - x`
//! then run through grid nodes, and both discontinuity lines `x = 1` and
//! `x = t` lie on nodes. Each row stores the piece on `[0, 1]` and the piece
//! on `[1, t]` separately so that quadratures never average across the jump
//! at `x = 1`. Everything is integrated with the trapezoid rule.

use crate::error::{Error, Result};
use crate::model::{discrete_mass, DiscreteDensity};
use crate::quad::neumaier_sum;

/// Initial data sampled at the nodes `x_b = b/m`, `b = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialNodes {
    cells_per_unit: usize,
    values: Vec<f64>,
}

impl InitialNodes {
    pub fn from_fn(cells_per_unit: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if cells_per_unit < 2 {
            return Err(Error::invalid("need at least two cells per unit size"));
        }
        let h = 1.0 / cells_per_unit as f64;
        let values: Vec<f64> = (0..=cells_per_unit).map(|b| f(b as f64 * h)).collect();
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("initial data must be finite and nonnegative, found {v}")));
        }
        Ok(InitialNodes { cells_per_unit, values })
    }

    /// Interpolates a cell density on `[0, 1]` onto the nodes.
    pub fn from_density(d: &DiscreteDensity, cells_per_unit: usize) -> Result<Self> {
        if (d.grid().extent() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("initial density must cover [0, 1]"));
        }
        Self::from_fn(cells_per_unit, |x| d.eval(x))
    }

    pub fn cells_per_unit(&self) -> usize {
        self.cells_per_unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// `g(t, ·)` on `[0, t]` as two node-sampled pieces meeting at the jump node
/// `split` (`x = 1` in a [`MildGrid`]). `left` covers nodes `0..=split`,
/// `right` covers `split..=last`; `right[last-split]` is the boundary value
/// `g(t, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    h: f64,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl TimeSlice {
    pub fn new(h: f64, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("slice spacing must be positive"));
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::invalid("slice pieces must be nonempty"));
        }
        Ok(TimeSlice { h, left, right })
    }

    /// A slice without an interior jump, sampled at `x_b = b h`, `b = 0..=n`.
    pub fn continuous(h: f64, values: Vec<f64>) -> Result<Self> {
        let last = *values
            .last()
            .ok_or_else(|| Error::invalid("slice needs at least one node"))?;
        Self::new(h, values, vec![last])
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    fn split(&self) -> usize {
        self.left.len() - 1
    }

    /// Index of the node at `x = t`.
    pub fn last(&self) -> usize {
        self.split() + self.right.len() - 1
    }

    /// `t` of this slice, i.e. the position of the last node.
    pub fn extent(&self) -> f64 {
        self.last() as f64 * self.h
    }

    /// One-sided node value; zero beyond `x = t`.
    pub fn value(&self, node: usize, side: Side) -> f64 {
        let last = self.last();
        if node > last || (node == last && side == Side::Right) {
            return 0.0;
        }
        let split = self.split();
        match node.cmp(&split) {
            std::cmp::Ordering::Less => self.left[node],
            std::cmp::Ordering::Greater => self.right[node - split],
            std::cmp::Ordering::Equal => match side {
                Side::Left => self.left[split],
                Side::Right => self.right[0],
            },
        }
    }

    /// `g(t, t)`.
    pub fn boundary_value(&self) -> f64 {
        *self.right.last().expect("nonempty")
    }

    fn integrate(&self, f: impl Fn(usize, Side) -> f64) -> f64 {
        let half = 0.5 * self.h;
        neumaier_sum((0..self.last()).map(|k| half * (f(k, Side::Right) + f(k + 1, Side::Left))))
    }

    /// `N(t) = ∫₀ᵗ g`.
    pub fn number(&self) -> f64 {
        self.integrate(|k, s| self.value(k, s))
    }

    /// `∫₀ᵗ x g`.
    pub fn mass(&self) -> f64 {
        self.integrate(|k, s| k as f64 * self.h * self.value(k, s))
    }

    /// `∫₀ᵗ g(x) g(t-x)`; the partner of a right limit is a left limit.
    pub fn pair_integral(&self) -> f64 {
        let last = self.last();
        self.integrate(|k, s| self.value(k, s) * self.value(last - k, s.flip()))
    }

    /// Piecewise-linear evaluation inside the piece containing `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let split_x = self.split() as f64 * self.h;
        if x < 0.0 || x > self.extent() {
            return 0.0;
        }
        let (piece, offset) = if x < split_x || self.right.len() == 1 {
            (&self.left, 0.0)
        } else {
            (&self.right, split_x)
        };
        let s = (x - offset) / self.h;
        let k = (s.floor() as usize).min(piece.len().saturating_sub(2));
        if piece.len() == 1 {
            return piece[0];
        }
        let w = s - k as f64;
        piece[k] * (1.0 - w) + piece[k + 1] * w
    }
}

/// `B[g](t) = k0/(2N) ∫₀ᵗ g(t,x) g(t,t-x) dx` for one slice.
pub fn birth_operator(slice: &TimeSlice, k0: f64) -> Result<f64> {
    let n = slice.number();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Degenerate { step: 0, number: n });
    }
    Ok(k0 / (2.0 * n) * slice.pair_integral())
}

/// `g` on `[1, T] × [0, T]`, one [`TimeSlice`] per time row.
#[derive(Debug, Clone, PartialEq)]
pub struct MildGrid {
    cells_per_unit: usize,
    rows: Vec<TimeSlice>,
}

impl MildGrid {
    /// `g⁰(t, x) = g_ini(x) 1{x ≤ 1}` on `n_t + 1` time rows.
    pub fn seed(init: &InitialNodes, n_t: usize) -> Self {
        let h = 1.0 / init.cells_per_unit as f64;
        let rows = (0..=n_t)
            .map(|a| TimeSlice {
                h,
                left: init.values.clone(),
                right: vec![0.0; a + 1],
            })
            .collect();
        MildGrid {
            cells_per_unit: init.cells_per_unit,
            rows,
        }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    pub fn n_t(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn time(&self, a: usize) -> f64 {
        1.0 + a as f64 * self.spacing()
    }

    pub fn t_final(&self) -> f64 {
        self.time(self.n_t())
    }

    pub fn row(&self, a: usize) -> &TimeSlice {
        &self.rows[a]
    }

    pub fn rows(&self) -> &[TimeSlice] {
        &self.rows
    }

    /// Largest pointwise difference over all stored values.
    pub fn sup_distance(&self, other: &MildGrid) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| {
                a.left
                    .iter()
                    .zip(&b.left)
                    .chain(a.right.iter().zip(&b.right))
                    .map(|(x, y)| (x - y).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// One application of Γ.
pub fn gamma_apply(g: &MildGrid, init: &InitialNodes, k0: f64) -> Result<MildGrid> {
    if init.cells_per_unit != g.cells_per_unit {
        return Err(Error::invalid("initial data and grid use different spacings"));
    }
    let m = g.cells_per_unit;
    let h = g.spacing();
    let half = 0.5 * h;
    let numbers: Vec<f64> = g.rows.iter().map(TimeSlice::number).collect();
    if let Some((a, n)) = numbers.iter().enumerate().find(|(_, n)| !(**n > 0.0 && n.is_finite())) {
        return Err(Error::Degenerate { step: a, number: *n });
    }
    let births: Vec<f64> = g
        .rows
        .iter()
        .zip(&numbers)
        .map(|(row, n)| k0 / (2.0 * n) * row.pair_integral())
        .collect();
    let q = |c: usize, p: usize, side: Side| g.rows[c].value(p, side) / numbers[c];
    let q_diag = |c: usize| g.rows[c].boundary_value() / numbers[c];

    // Running time integrals ∫ g(s, s-x)/N(s) ds along each characteristic.
    let mut cum_left = vec![0.0; m + 1];
    let mut cum_right: Vec<f64> = Vec::with_capacity(g.rows.len());
    let mut rows = Vec::with_capacity(g.rows.len());
    for a in 0..g.rows.len() {
        if a > 0 {
            cum_left[0] += half * (q_diag(a - 1) + q_diag(a));
            for (b, cum) in cum_left.iter_mut().enumerate().skip(1) {
                let p0 = m + a - 1 - b;
                *cum += half * (q(a - 1, p0, Side::Right) + q(a, p0 + 1, Side::Left));
            }
            for (k, cum) in cum_right.iter_mut().enumerate() {
                let p0 = a - 1 - k;
                *cum += half * (q(a - 1, p0, Side::Right) + q(a, p0 + 1, Side::Left));
            }
        }
        cum_right.push(0.0);
        let left = init
            .values
            .iter()
            .zip(&cum_left)
            .map(|(g0, i)| g0 * (-k0 * i).exp())
            .collect();
        let right = births
            .iter()
            .zip(&cum_right)
            .map(|(b, i)| b * (-k0 * i).exp())
            .collect();
        rows.push(TimeSlice { h, left, right });
    }
    Ok(MildGrid {
        cells_per_unit: m,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub t_final: f64,
    pub cells_per_unit: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            t_final: 1.1,
            cells_per_unit: 400,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterates_used: usize,
    /// Sup-norm change per iterate.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `max_t |g(t,t) - B[g](t)|` on the returned grid.
    pub boundary_defect: f64,
    /// Range of `∫ x g(t,x) dx` over the time rows.
    pub mass_range: (f64, f64),
}

impl PicardReport {
    /// The first moment stays in `[1/2, 3/2]`.
    pub fn mass_within_bounds(&self) -> bool {
        self.mass_range.0 >= 0.5 && self.mass_range.1 <= 1.5
    }

    pub fn residuals_decreasing(&self) -> bool {
        self.residual_history.windows(2).all(|w| w[1] < w[0])
    }
}

/// Picard iteration `g ← Γ[g]` from the seed `g_ini(x) 1{x ≤ 1}`.
///
/// `T` is rounded to the nearest grid time. Γ is causal in time apart from
/// an `O(h)` same-time coupling, so the iteration converges on the whole
/// window without restarts.
pub fn picard_solve_nodes(init: &InitialNodes, k0: f64, opts: &PicardOptions) -> Result<(MildGrid, PicardReport)> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::invalid(format!("k0 must be positive, got {k0}")));
    }
    if !(opts.t_final >= 1.0 && opts.t_final.is_finite()) {
        return Err(Error::invalid(format!("final time must be at least 1, got {}", opts.t_final)));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("tolerance and iteration budget must be positive"));
    }
    if init.cells_per_unit != opts.cells_per_unit {
        return Err(Error::invalid("initial nodes do not match the grid resolution"));
    }
    let n_t = ((opts.t_final - 1.0) * opts.cells_per_unit as f64).round() as usize;
    let mut g = MildGrid::seed(init, n_t);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = gamma_apply(&g, init, k0)?;
        let r = next.sup_distance(&g);
        history.push(r);
        g = next;
        if r < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { residuals: history });
    }
    let mut defect = 0.0_f64;
    let mut mass_range = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &g.rows {
        let b = birth_operator(row, k0)?;
        defect = defect.max((row.boundary_value() - b).abs());
        let mass = row.mass();
        mass_range = (mass_range.0.min(mass), mass_range.1.max(mass));
    }
    let report = PicardReport {
        iterates_used: history.len(),
        residual_history: history,
        converged,
        boundary_defect: defect,
        mass_range,
    };
    Ok((g, report))
}

/// [`picard_solve_nodes`] for a unit-mass cell density.
pub fn picard_solve(g_ini: &DiscreteDensity, k0: f64, opts: &PicardOptions) -> Result<(MildGrid, PicardReport)> {
    let mass = discrete_mass(g_ini);
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("initial data must have unit mass, got {mass}")));
    }
    let init = InitialNodes::from_density(g_ini, opts.cells_per_unit)?;
    picard_solve_nodes(&init, k0, opts)
}

//! Self-similar profiles `g(t, x) = t⁻² G(x/t)`.
//!
//! Profiles solve `2G + yG' = D G(y) G(1-y)` on `(0, 1)` for a free coupling
//! `D > 0`; a solution maps to a mass-one self-similar profile for the rate
//! constant `k0 = D ∫G` (see [`to_normalized`]). Solutions are parametrized by
//! `G(1/2)`, and the map `G(1/2) ↦ ∫G` (the moment curve) has its minimum 2
//! at the constant solution `G ≡ 2`. Every `k0 > 2` is therefore hit twice:
//! once with `G(1/2) < 2` (subcritical) and once with `G(1/2) > 2`
//! (supercritical).

mod branches;
mod shape;
mod shoot;

pub use branches::{find_branches, scan_moment_curve, Branch, BranchPair, BranchSearch, MomentSample};
pub use shape::{classify_samples, shape_classify, Shape, SHAPE_TOL};
pub use shoot::{
    fit_tail_exponent, integrate_even_odd, rhs_even_odd, shoot, tail_exponent_check, to_normalized, TailCheck,
};

use crate::error::{Error, Result};
use crate::model::SampledProfile;

/// Inputs for one shooting run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootConfig {
    pub d: f64,
    pub g_half: f64,
    /// Endpoint cutoff; the profile is integrated on `[δ, 1-δ]`.
    pub delta: f64,
    pub rk_tol: f64,
    /// Approximate number of samples in the returned profile.
    pub n_output: usize,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            d: 1.0,
            g_half: 2.0,
            delta: 1e-6,
            rk_tol: 1e-10,
            n_output: 600,
        }
    }
}

impl ShootConfig {
    pub fn new(d: f64, g_half: f64) -> Self {
        ShootConfig {
            d,
            g_half,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::invalid(format!("D must be positive, got {}", self.d)));
        }
        if !(self.g_half > 0.0 && self.g_half.is_finite()) {
            return Err(Error::invalid(format!("G(1/2) must be positive, got {}", self.g_half)));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::invalid(format!("delta must lie in (0, 1/2), got {}", self.delta)));
        }
        if !(self.rk_tol > 0.0) {
            return Err(Error::invalid(format!("rk_tol must be positive, got {}", self.rk_tol)));
        }
        if self.n_output < 16 {
            return Err(Error::invalid("n_output must be at least 16"));
        }
        Ok(())
    }
}

/// A sampled solution of the profile equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// Strictly increasing samples in `[δ, 1-δ]`.
    pub ys: Vec<f64>,
    pub g_vals: Vec<f64>,
    /// Coupling constant the profile solves for.
    pub d: f64,
    pub g_half: f64,
    /// Extrapolated `G(1)`.
    pub g1: f64,
    /// Fitted `p` in `G(y) ≈ C y^p` near `y = δ`.
    pub tail_exp: f64,
    /// `∫₀¹ G`.
    pub n: f64,
    /// `∫₀¹ y G`.
    pub m: f64,
    pub delta: f64,
}

impl Profile {
    /// `F(y) = y² G(y)` at the sample points.
    pub fn f_vals(&self) -> Vec<f64> {
        self.ys.iter().zip(&self.g_vals).map(|(y, g)| y * y * g).collect()
    }

    pub fn value_at(&self, y: f64) -> f64 {
        crate::quad::interp_linear(&self.ys, &self.g_vals, y)
    }

    pub fn to_sampled(&self) -> SampledProfile {
        SampledProfile {
            ys: self.ys.clone(),
            vals: self.g_vals.clone(),
        }
    }
}

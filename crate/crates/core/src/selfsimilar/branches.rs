use rayon::prelude::*;

use crate::error::{Error, Result};

use super::shape::{shape_classify, Shape};
use super::shoot::{shoot, to_normalized};
use super::{Profile, ShootConfig};

/// One row of the moment curve `G(1/2) ↦ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSample {
    pub g_half: f64,
    pub n: Result<f64>,
}

/// Shoots once per `G(1/2)` value (concurrently) and records `N = ∫G`.
/// `base` supplies everything except `g_half` and `d`.
pub fn scan_moment_curve(g_half_values: &[f64], d: f64, base: &ShootConfig) -> Vec<MomentSample> {
    g_half_values
        .par_iter()
        .map(|&g_half| {
            let cfg = ShootConfig { d, g_half, ..*base };
            MomentSample {
                g_half,
                n: shoot(&cfg).map(|p| p.n),
            }
        })
        .collect()
}

/// Controls for [`find_branches`].
#[derive(Debug, Clone, Copy)]
pub struct BranchSearch {
    /// Tolerance on the rate constant `k0 = D N`.
    pub tol: f64,
    /// First upper bracket tried for the supercritical branch; doubled until
    /// `N` exceeds the target.
    pub upper_start: f64,
    pub upper_cap: f64,
    /// Smallest `G(1/2)` tried for the subcritical branch; the lower bracket
    /// halves from 1 down to this floor.
    pub lower_floor: f64,
    pub shoot: ShootConfig,
}

impl Default for BranchSearch {
    fn default() -> Self {
        BranchSearch {
            tol: 1e-8,
            upper_start: 4.0,
            upper_cap: 1e3,
            lower_floor: 1e-3,
            shoot: ShootConfig::default(),
        }
    }
}

/// A self-similar solution on one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// `G(1/2)` of the auxiliary solution (`D = 1`) before normalization.
    pub g_half: f64,
    /// Normalized profile, `∫ y G = 1`.
    pub profile: Profile,
    pub k0: f64,
    pub shape: Shape,
}

/// The two self-similar solutions for a rate constant `k0 > 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPair {
    pub k0: f64,
    pub subcritical: Branch,
    pub supercritical: Branch,
}

fn branch_from(raw: Profile) -> Result<Branch> {
    let g_half = raw.g_half;
    let (k0, profile) = to_normalized(&raw)?;
    let shape = shape_classify(&profile);
    Ok(Branch {
        g_half,
        profile,
        k0,
        shape,
    })
}

/// Bisection on `G(1/2)` for `D N(G(1/2)) = target` over `[lo, hi]`, where the
/// residual changes sign. Returns the raw (unnormalized) profile.
fn bisect(target: f64, mut lo: f64, mut hi: f64, search: &BranchSearch) -> Result<Profile> {
    let d = 1.0;
    let eval = |g_half: f64| -> Result<Profile> { shoot(&ShootConfig { d, g_half, ..search.shoot }) };
    let mut f_lo = eval(lo)?.n * d - target;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = eval(mid)?;
        let f_mid = p.n * d - target;
        if f_mid.abs() <= search.tol || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return Ok(p);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::BracketFailure {
        lo,
        hi,
        detail: "bisection did not reach tolerance".into(),
    })
}

fn supercritical(target: f64, search: &BranchSearch) -> Result<Branch> {
    let n_of = |g_half: f64| shoot(&ShootConfig { d: 1.0, g_half, ..search.shoot }).map(|p| p.n);
    let mut lo = 2.0;
    let mut hi = search.upper_start;
    while n_of(hi)? < target {
        if hi >= search.upper_cap {
            return Err(Error::BracketFailure {
                lo: 2.0,
                hi,
                detail: format!("N stays below {target} up to the cap"),
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(search.upper_cap);
    }
    branch_from(bisect(target, lo, hi, search)?)
}

fn subcritical(target: f64, search: &BranchSearch) -> Result<Branch> {
    let n_of = |g_half: f64| shoot(&ShootConfig { d: 1.0, g_half, ..search.shoot }).map(|p| p.n);
    let mut hi = 2.0;
    let mut lo = 1.0;
    while n_of(lo)? < target {
        if lo <= search.lower_floor {
            return Err(Error::BracketFailure {
                lo,
                hi: 2.0,
                detail: format!("N stays below {target} down to the floor"),
            });
        }
        hi = lo;
        lo = (0.5 * lo).max(search.lower_floor);
    }
    branch_from(bisect(target, lo, hi, search)?)
}

/// Finds the subcritical and supercritical self-similar profiles for
/// `k0_target` by bisection on the moment curve at `D = 1`.
pub fn find_branches(k0_target: f64, search: &BranchSearch) -> Result<BranchPair> {
    search.shoot.validate()?;
    if !k0_target.is_finite() {
        return Err(Error::invalid(format!("k0 must be finite, got {k0_target}")));
    }
    if (k0_target - 2.0).abs() <= search.tol {
        let trivial = shoot(&ShootConfig { d: 1.0, g_half: 2.0, ..search.shoot })?;
        let mut branch = branch_from(trivial)?;
        branch.shape = Shape::Trivial;
        return Ok(BranchPair {
            k0: k0_target,
            subcritical: branch.clone(),
            supercritical: branch,
        });
    }
    if k0_target < 2.0 {
        return Err(Error::NoBranch { k0: k0_target });
    }
    let (sub, sup) = rayon::join(|| subcritical(k0_target, search), || supercritical(k0_target, search));
    Ok(BranchPair {
        k0: k0_target,
        subcritical: sub?,
        supercritical: sup?,
    })
}

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions};
use crate::quad::{geomspace, linspace, ls_slope};

use super::{Profile, ShootConfig};

/// Right-hand side of the profile equation split into even and odd parts of
/// `F(y) = y² G(y)` about `y = 1/2`.
pub fn rhs_even_odd(y: f64, f_e: f64, f_o: f64, d: f64) -> Result<(f64, f64)> {
    if y == 0.0 || y == 1.0 {
        return Err(Error::SingularPoint { y });
    }
    if !(y > 0.0 && y < 1.0) {
        return Err(Error::invalid(format!("y must lie in (0, 1), got {y}")));
    }
    let w = y * y * (1.0 - y) * (1.0 - y);
    let prod = d * (f_e * f_e - f_o * f_o);
    Ok((prod / w * (y - 0.5), prod / (2.0 * w)))
}

/// Integrates the even/odd system from `y = 1/2` with `F_e(1/2) = G(1/2)/4`,
/// `F_o(1/2) = 0` to each point of `ys` (which must all lie on one side of
/// 1/2, ordered away from it). Returns `(F_e, F_o)` at each point.
///
/// This is the direct form of the split. It is accurate in the interior but
/// loses `F(y) = F_e - F_o` to cancellation as `y` approaches 0, which is why
/// [`shoot`] works with the logarithms of `F(y)` and `F(1-y)` instead.
pub fn integrate_even_odd(d: f64, g_half: f64, ys: &[f64], rk_tol: f64) -> Result<Vec<(f64, f64)>> {
    let opts = OdeOptions {
        rtol: rk_tol,
        atol: rk_tol,
        ..Default::default()
    };
    let rhs = |y: f64, s: &[f64; 2]| {
        let (a, b) = rhs_even_odd(y, s[0], s[1], d).unwrap_or((f64::NAN, f64::NAN));
        [a, b]
    };
    let (states, _) = integrate(rhs, 0.5, [g_half / 4.0, 0.0], ys, &opts).map_err(|f| {
        Error::ConvergenceFailure {
            reached_lo: f.reached.min(0.5),
            reached_hi: f.reached.max(0.5),
            reason: f.reason.to_string(),
        }
    })?;
    Ok(states.into_iter().map(|s| (s[0], s[1])).collect())
}

/// Distances `w` from the nearer endpoint at which the profile is sampled:
/// geometric near the endpoint, uniform towards the middle. Ascending, from
/// `delta` to `1/2` inclusive.
fn endpoint_offsets(delta: f64, n_output: usize) -> Vec<f64> {
    let half = (n_output / 2).max(2);
    let mut w = geomspace(delta, 0.5, half);
    w.extend(linspace(delta, 0.5, half));
    w.sort_by(f64::total_cmp);
    w.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    w
}

/// Solves `2G + yG' = D G(y) G(1-y)` from the datum `G(1/2)`.
///
/// The integration pairs every point `y > 1/2` with its mirror `1 - y`, so a
/// single sweep from `1/2` to `1 - δ` produces the whole profile on
/// `[δ, 1 - δ]`. The state is `(ln F(y), ln F(1-y))` together with running
/// integrals of `G` and `yG`; the logarithms keep `F` near the left endpoint,
/// where it decays like `y^{D G(1)}`, at full relative precision.
pub fn shoot(cfg: &ShootConfig) -> Result<Profile> {
    cfg.validate()?;
    let d = cfg.d;
    let delta = cfg.delta;
    let w = endpoint_offsets(delta, cfg.n_output);
    // y = 1 - w, ascending from 1/2 to 1 - delta
    let outputs: Vec<f64> = w.iter().rev().map(|w| 1.0 - w).collect();

    let rhs = |y: f64, s: &[f64; 4]| {
        let z = 1.0 - y;
        let (fy, fz) = (s[0].exp(), s[1].exp());
        let gy = fy / (y * y);
        let gz = fz / (z * z);
        [
            d * fz / (y * z * z),
            -d * fy / (z * y * y),
            gy + gz,
            fy / y + fz / z,
        ]
    };
    let ln_f0 = (cfg.g_half / 4.0).ln();
    let opts = OdeOptions {
        rtol: cfg.rk_tol,
        atol: cfg.rk_tol,
        ..Default::default()
    };
    let (states, _) = integrate(rhs, 0.5, [ln_f0, ln_f0, 0.0, 0.0], &outputs, &opts).map_err(|f| {
        Error::ConvergenceFailure {
            reached_lo: 1.0 - f.reached,
            reached_hi: f.reached,
            reason: f.reason.to_string(),
        }
    })?;

    // Assemble ascending samples: left half from the mirror component.
    let n = w.len();
    let mut ys = Vec::with_capacity(2 * n - 1);
    let mut g_vals = Vec::with_capacity(2 * n - 1);
    for k in (1..n).rev() {
        // outputs[k] = 1 - w[n-1-k]
        let wk = w[n - 1 - k];
        ys.push(wk);
        g_vals.push(states[k][1].exp() / (wk * wk));
    }
    for (k, y) in outputs.iter().enumerate() {
        ys.push(*y);
        g_vals.push(states[k][0].exp() / (y * y));
    }
    if let Some(bad) = g_vals.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::ConvergenceFailure {
            reached_lo: delta,
            reached_hi: 1.0 - delta,
            reason: format!("non-positive or non-finite profile value {bad}"),
        });
    }

    let tail_exp = fit_tail_exponent(&ys, &g_vals, delta)?;
    if tail_exp <= -1.0 {
        return Err(Error::ConvergenceFailure {
            reached_lo: delta,
            reached_hi: 1.0 - delta,
            reason: format!("non-integrable tail exponent {tail_exp}"),
        });
    }
    let g1 = extrapolate_right_end(&ys, &g_vals);

    let last = states[states.len() - 1];
    let (g_left, g_right) = (g_vals[0], g_vals[g_vals.len() - 1]);
    // Power-law completion on [0, δ], trapezoid on [1-δ, 1].
    let n_total = last[2] + g_left * delta / (tail_exp + 1.0) + 0.5 * delta * (g_right + g1);
    let m_total = last[3]
        + g_left * delta * delta / (tail_exp + 2.0)
        + 0.5 * delta * ((1.0 - delta) * g_right + g1);

    Ok(Profile {
        ys,
        g_vals,
        d,
        g_half: cfg.g_half,
        g1,
        tail_exp,
        n: n_total,
        m: m_total,
        delta,
    })
}

/// Least-squares slope of `ln G` against `ln y` over `[δ, 10δ]`.
pub fn fit_tail_exponent(ys: &[f64], g_vals: &[f64], delta: f64) -> Result<f64> {
    let upper = 10.0 * delta * (1.0 + 1e-12);
    let (lx, lg): (Vec<f64>, Vec<f64>) = ys
        .iter()
        .zip(g_vals)
        .take_while(|(y, _)| **y <= upper)
        .filter(|(y, g)| **y >= delta * (1.0 - 1e-12) && **g > 0.0)
        .map(|(y, g)| (y.ln(), g.ln()))
        .unzip();
    if lx.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} samples in the tail window [{delta:e}, {:e}]",
            lx.len(),
            10.0 * delta
        )));
    }
    ls_slope(&lx, &lg).ok_or_else(|| Error::InsufficientData("degenerate tail window".into()))
}

/// Quadratic extrapolation of the last three samples to `y = 1`.
fn extrapolate_right_end(ys: &[f64], g: &[f64]) -> f64 {
    let n = ys.len();
    let (x0, x1, x2) = (ys[n - 3], ys[n - 2], ys[n - 1]);
    let (f0, f1, f2) = (g[n - 3], g[n - 2], g[n - 1]);
    let x = 1.0;
    f0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + f1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + f2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

/// Maps a solution of the auxiliary equation onto a mass-one self-similar
/// profile. Returns the rate constant `k0 = D N` it corresponds to.
pub fn to_normalized(p: &Profile) -> Result<(f64, Profile)> {
    if !(p.m > 0.0 && p.m.is_finite()) {
        return Err(Error::invalid(format!("profile first moment must be positive, got {}", p.m)));
    }
    let k0 = p.d * p.n;
    let m = p.m;
    let normalized = Profile {
        ys: p.ys.clone(),
        g_vals: p.g_vals.iter().map(|g| g / m).collect(),
        d: p.d * m,
        g_half: p.g_half / m,
        g1: p.g1 / m,
        tail_exp: p.tail_exp,
        n: p.n / m,
        m: 1.0,
        delta: p.delta,
    };
    Ok((k0, normalized))
}

/// Fitted versus predicted power of `G(y) ~ y^p` at the left endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck {
    pub measured: f64,
    /// `D G(1) - 2`.
    pub predicted: f64,
}

pub fn tail_exponent_check(p: &Profile) -> Result<TailCheck> {
    if p.delta > 1e-3 {
        return Err(Error::invalid(format!(
            "tail check needs delta <= 1e-3, profile has {}",
            p.delta
        )));
    }
    let measured = fit_tail_exponent(&p.ys, &p.g_vals, p.delta)?;
    Ok(TailCheck {
        measured,
        predicted: p.d * p.g1 - 2.0,
    })
}

//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

use std::fmt;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step accepted before giving up.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-10,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    StepUnderflow,
    NonFinite,
    TooManySteps,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::StepUnderflow => write!(f, "step size underflow"),
            FailureReason::NonFinite => write!(f, "non-finite state"),
            FailureReason::TooManySteps => write!(f, "step budget exhausted"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeFailure {
    /// Last time successfully reached.
    pub reached: f64,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `(t0, y0)` and returns the state at each
/// point of `outputs`, which must be monotone in the direction of
/// integration. Steps are shortened to land exactly on output points.
pub fn integrate<const N: usize, F>(
    mut rhs: F,
    t0: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<[f64; N]>, OdeStats), OdeFailure>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut stats = OdeStats::default();
    let Some(&t_end) = outputs.last() else {
        return Ok((Vec::new(), stats));
    };
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = (0.01 * (t_end - t0).abs()).max(opts.h_min);
    let mut out = Vec::with_capacity(outputs.len());
    let fail = |t: f64, reason| OdeFailure { reached: t, reason };

    for &target in outputs {
        while dir * (target - t) > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(fail(t, FailureReason::TooManySteps));
            }
            let remaining = (target - t).abs();
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            let hs = dir * step;

            let k2 = rhs(t + C2 * hs, &combine(&y, hs, &[(A21, &k1)]));
            let k3 = rhs(t + C3 * hs, &combine(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = rhs(
                t + C4 * hs,
                &combine(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                t + C5 * hs,
                &combine(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                t + hs,
                &combine(
                    &y,
                    hs,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = combine(
                &y,
                hs,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let t_new = if clipped { target } else { t + hs };
            let k7 = rhs(t_new, &y_new);

            let mut err = 0.0_f64;
            let mut finite = true;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / scale).abs());
                finite &= y_new[i].is_finite() && k7[i].is_finite();
            }
            if !err.is_finite() || !finite {
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                stats.accepted += 1;
                t = t_new;
                y = y_new;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // A clipped step says nothing about the natural step size.
                h = if clipped { h.max(step * grow) } else { step * grow };
            } else {
                stats.rejected += 1;
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
                h = step * shrink;
                if h < opts.h_min {
                    let reason = if finite { FailureReason::StepUnderflow } else { FailureReason::NonFinite };
                    return Err(fail(t, reason));
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

//! Long-time analytics for box-model runs.

use crate::boxmodel::{rescaled_profile, BoxState, RunReport, SeriesRow};
use crate::error::{Error, Result};
use crate::mildsolver::MildGrid;
use crate::model::SampledProfile;
use crate::quad::{linspace, neumaier_sum, trapezoid};

/// Points of the common grid on `[0, 1]` used by [`l1_distance`].
pub const L1_GRID_POINTS: usize = 512;

/// Samples per rescaled snapshot before comparison.
pub const RESCALED_SAMPLES: usize = 512;

/// `∫₀¹ |a - b|`, both profiles resampled to [`L1_GRID_POINTS`] uniform
/// points by linear interpolation (constant beyond their sampled ranges).
pub fn l1_distance(a: &SampledProfile, b: &SampledProfile) -> Result<f64> {
    let (a_lo, a_hi) = a.range();
    let (b_lo, b_hi) = b.range();
    if a_hi < b_lo || b_hi < a_lo {
        return Err(Error::DisjointSupport);
    }
    let xs = linspace(0.0, 1.0, L1_GRID_POINTS);
    let diff: Vec<f64> = xs.iter().map(|&x| (a.eval(x) - b.eval(x)).abs()).collect();
    Ok(trapezoid(&xs, &diff))
}

/// Per-run time series with optional reference distances.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub n_vals: Vec<f64>,
    pub mass_vals: Vec<f64>,
    /// `(step, L1 distance)` of rescaled snapshots to a reference profile.
    pub l1_to_target: Option<Vec<(usize, f64)>>,
    /// Unscaled sup change over the trailing snapshot window.
    pub stationarity: Option<f64>,
}

impl ConvergenceSeries {
    pub fn from_rows(rows: &[SeriesRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("empty series".into()));
        }
        if rows.iter().any(|r| !(r.t.is_finite() && r.n.is_finite() && r.mass.is_finite())) {
            return Err(Error::invalid("series contains non-finite entries"));
        }
        if rows.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid("series times must increase"));
        }
        Ok(ConvergenceSeries {
            steps: rows.iter().map(|r| r.step).collect(),
            times: rows.iter().map(|r| r.t).collect(),
            n_vals: rows.iter().map(|r| r.n).collect(),
            mass_vals: rows.iter().map(|r| r.mass).collect(),
            l1_to_target: None,
            stationarity: None,
        })
    }

    /// Series of a run, with distances of every snapshot to `target` and the
    /// stationarity over the last `window` snapshots when available.
    pub fn from_report(report: &RunReport, target: Option<&SampledProfile>, window: usize) -> Result<Self> {
        let mut series = Self::from_rows(&report.series)?;
        if let Some(target) = target {
            let dists = report
                .snapshots
                .iter()
                .map(|(step, s)| Ok((*step, l1_distance(&rescaled_profile(s, RESCALED_SAMPLES), target)?)))
                .collect::<Result<Vec<_>>>()?;
            series.l1_to_target = Some(dists);
        }
        if window >= 2 && report.snapshots.len() >= window {
            let states: Vec<&BoxState> = report.snapshots.iter().map(|(_, s)| s).collect();
            series.stationarity = Some(stationarity_measure(&states, window)?);
        }
        Ok(series)
    }

    /// Indices `j` with `N(j+1) > N(j)`.
    pub fn n_violations(&self) -> Vec<usize> {
        self.n_vals
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0])
            .map(|(j, _)| j)
            .collect()
    }

    pub fn check_n_monotone(&self) -> Result<()> {
        let v = self.n_violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "N increased at {} steps, first at step {}",
                v.len(),
                self.steps[v[0]]
            )))
        }
    }

    /// `max_j |mass(j) - 1|`.
    pub fn mass_drift(&self) -> f64 {
        self.mass_vals.iter().fold(0.0_f64, |a, m| a.max((m - 1.0).abs()))
    }

    /// `min_j N(j) / N(0)`.
    pub fn min_n_ratio(&self) -> f64 {
        let n0 = self.n_vals[0];
        self.n_vals.iter().fold(f64::INFINITY, |a, &n| a.min(n)) / n0
    }

    /// True when the distances to the target strictly decrease across the
    /// given snapshot steps.
    pub fn l1_decreasing_over(&self, steps: &[usize]) -> Option<bool> {
        let dists = self.l1_to_target.as_ref()?;
        let picked: Option<Vec<f64>> = steps
            .iter()
            .map(|s| dists.iter().find(|(j, _)| j == s).map(|(_, d)| *d))
            .collect();
        Some(picked?.windows(2).all(|w| w[1] < w[0]))
    }
}

/// Outcome of the lower bound `N(t) > N(1)/2` check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NBoundReport {
    pub k0: f64,
    /// `min N / N(1)`.
    pub ratio: f64,
    /// The bound is only guaranteed for `k0 < 1/3`; otherwise it is reported
    /// without a verdict.
    pub asserted: bool,
    pub passed: Option<bool>,
}

pub fn n_bound_check(series: &ConvergenceSeries, k0: f64) -> NBoundReport {
    let ratio = series.min_n_ratio();
    let asserted = k0 < 1.0 / 3.0;
    NBoundReport {
        k0,
        ratio,
        asserted,
        passed: asserted.then_some(ratio > 0.5),
    }
}

fn window_ends<'a>(snapshots: &[&'a BoxState], window: usize) -> Result<(&'a BoxState, &'a BoxState)> {
    if window < 2 || snapshots.len() < window {
        return Err(Error::InsufficientData(format!(
            "need at least {} snapshots, have {}",
            window.max(2),
            snapshots.len()
        )));
    }
    let tail = &snapshots[snapshots.len() - window..];
    Ok((tail[0], tail[window - 1]))
}

/// `max_i |G(j_last, i) - G(j_first, i)|` over the cells common to the first
/// and last of the trailing `window` snapshots.
pub fn stationarity_measure(snapshots: &[&BoxState], window: usize) -> Result<f64> {
    let (first, last) = window_ends(snapshots, window)?;
    Ok(first
        .cells()
        .iter()
        .zip(last.cells())
        .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs())))
}

/// `L1` distance between the rescaled profiles of the first and last of the
/// trailing `window` snapshots.
pub fn rescaled_stationarity(snapshots: &[&BoxState], window: usize) -> Result<f64> {
    let (first, last) = window_ends(snapshots, window)?;
    l1_distance(
        &rescaled_profile(first, RESCALED_SAMPLES),
        &rescaled_profile(last, RESCALED_SAMPLES),
    )
}

/// Variables in which a run is expected to settle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Unscaled,
    Rescaled,
}

impl Regime {
    /// Unscaled below `k0 = 2`, rescaled above, both at `k0 = 2`.
    pub fn for_k0(k0: f64) -> &'static [Regime] {
        if k0 < 2.0 {
            &[Regime::Unscaled]
        } else if k0 > 2.0 {
            &[Regime::Rescaled]
        } else {
            &[Regime::Unscaled, Regime::Rescaled]
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Unscaled => "unscaled",
            Regime::Rescaled => "rescaled",
        }
    }

    pub fn measure(&self, snapshots: &[&BoxState], window: usize) -> Result<f64> {
        match self {
            Regime::Unscaled => stationarity_measure(snapshots, window),
            Regime::Rescaled => rescaled_stationarity(snapshots, window),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unscaled" => Ok(Regime::Unscaled),
            "rescaled" => Ok(Regime::Rescaled),
            other => Err(Error::invalid(format!("unknown regime {other:?}"))),
        }
    }
}

/// `∫₀ᵀ |g_box - g_mild|` at the common final time, with the mild solution
/// sampled at the box cell midpoints.
pub fn cross_check_l1(grid: &MildGrid, state: &BoxState) -> Result<f64> {
    let t = grid.t_final();
    if (t - state.time()).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "time mismatch: mild grid at {t}, box state at {}",
            state.time()
        )));
    }
    let row = grid.row(grid.n_t());
    let eps = state.eps();
    Ok(eps
        * neumaier_sum(
            state
                .cells()
                .iter()
                .enumerate()
                .map(|(i, g)| (g - row.eval(eps * (i as f64 + 0.5))).abs()),
        ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxmodel::{run, RunOptions};
    use crate::model::{make_gaussian_initial, Params};
    use proptest::prelude::*;

    fn constant(c: f64) -> SampledProfile {
        SampledProfile::new(vec![0.0, 1.0], vec![c, c]).unwrap()
    }

    #[test]
    fn l1_of_constants() {
        assert_eq!(l1_distance(&constant(2.0), &constant(2.0)).unwrap(), 0.0);
        assert!((l1_distance(&constant(2.0), &constant(0.0)).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn l1_rejects_disjoint_ranges() {
        let a = SampledProfile::new(vec![0.0, 0.3], vec![1.0, 1.0]).unwrap();
        let b = SampledProfile::new(vec![0.5, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(l1_distance(&a, &b), Err(Error::DisjointSupport));
    }

    fn profile_strategy() -> impl Strategy<Value = SampledProfile> {
        prop::collection::vec(0.0..5.0f64, 2..40).prop_map(|vals| {
            let ys = linspace(0.0, 1.0, vals.len());
            SampledProfile::new(ys, vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(a in profile_strategy(), b in profile_strategy(), c in profile_strategy()) {
            let ab = l1_distance(&a, &b).unwrap();
            let ba = l1_distance(&b, &a).unwrap();
            let ac = l1_distance(&a, &c).unwrap();
            let cb = l1_distance(&c, &b).unwrap();
            prop_assert_eq!(l1_distance(&a, &a).unwrap(), 0.0);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-14);
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }

    fn rows(ns: &[f64]) -> Vec<SeriesRow> {
        ns.iter()
            .enumerate()
            .map(|(j, &n)| SeriesRow {
                step: j,
                t: 1.0 + j as f64 * 0.01,
                n,
                mass: 1.0,
                birth: 0.0,
            })
            .collect()
    }

    #[test]
    fn constant_series_has_ratio_one() {
        let s = ConvergenceSeries::from_rows(&rows(&[2.0; 5])).unwrap();
        let r = n_bound_check(&s, 0.3);
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.passed, Some(true));
        assert!(s.check_n_monotone().is_ok());
    }

    #[test]
    fn bound_is_only_asserted_below_one_third() {
        let s = ConvergenceSeries::from_rows(&rows(&[2.0, 1.5, 0.9])).unwrap();
        assert_eq!(n_bound_check(&s, 0.3).passed, Some(false));
        let r = n_bound_check(&s, 1.0);
        assert!(!r.asserted);
        assert_eq!(r.passed, None);
        assert!((r.ratio - 0.45).abs() < 1e-15);
    }

    #[test]
    fn detects_n_increase() {
        let s = ConvergenceSeries::from_rows(&rows(&[2.0, 1.9, 1.95, 1.8])).unwrap();
        assert_eq!(s.n_violations(), vec![1]);
        assert!(s.check_n_monotone().is_err());
    }

    #[test]
    fn rejects_bad_series() {
        assert!(ConvergenceSeries::from_rows(&[]).is_err());
        let mut r = rows(&[1.0, 1.0]);
        r[1].n = f64::NAN;
        assert!(ConvergenceSeries::from_rows(&r).is_err());
    }

    #[test]
    fn identical_snapshots_are_stationary() {
        let d = make_gaussian_initial(0.5, 0.3, 20).unwrap();
        let s = BoxState::new(&d, &Params::new(1.0).unwrap()).unwrap();
        assert_eq!(stationarity_measure(&[&s, &s], 2).unwrap(), 0.0);
        assert_eq!(rescaled_stationarity(&[&s, &s], 2).unwrap(), 0.0);
        assert!(stationarity_measure(&[&s], 2).is_err());
    }

    #[test]
    fn regimes_by_k0() {
        assert_eq!(Regime::for_k0(1.0), &[Regime::Unscaled]);
        assert_eq!(Regime::for_k0(3.0), &[Regime::Rescaled]);
        assert_eq!(Regime::for_k0(2.0).len(), 2);
        assert_eq!("rescaled".parse::<Regime>().unwrap(), Regime::Rescaled);
    }

    #[test]
    fn report_series_tracks_snapshots() {
        let d = make_gaussian_initial(0.5, 0.3, 50).unwrap();
        let report = run(
            &d,
            &Params::new(3.0).unwrap(),
            &RunOptions {
                steps: 40,
                snapshot_schedule: vec![0, 20, 40],
                ..Default::default()
            },
        )
        .unwrap();
        let target = constant(2.0);
        let s = ConvergenceSeries::from_report(&report, Some(&target), 3).unwrap();
        assert_eq!(s.times.len(), 41);
        assert_eq!(s.l1_to_target.as_ref().unwrap().len(), 3);
        assert!(s.stationarity.unwrap() > 0.0);
        assert!(s.check_n_monotone().is_ok());
        assert!(s.l1_decreasing_over(&[0, 7]).is_none());
    }
}

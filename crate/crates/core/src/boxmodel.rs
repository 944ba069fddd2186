//! Explicit box model for the aggregation equation.
//!
//! Sizes are binned in cells of width `ε = 1/M_b`. At step `j` (time
//! `t = 1 + εj`) the state holds `M_b + j` cells. One step lets every cell `i`
//! lose particles against its partner cell `M_b + j + 1 - i`, whose sizes sum
//! to the current maximal size, and appends one new cell whose value follows
//! from mass conservation:
//!
//! ```text
//! G'(i)   = G(i) - ε (k0/N) G(i) G(M_b+j+1-i)          i ≤ M_b + j
//! G'(new) = (ε/2) Σ_i (k0/N) G(i) G(M_b+j+1-i)
//! ```

use crate::error::{Error, Result};
use crate::model::{discrete_mass, DiscreteDensity, Grid1D, Params, SampledProfile};
use crate::quad::{interp_linear, neumaier_sum};

/// How the value of the newly created cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BirthRule {
    /// The conservation-derived formula as written above. Mass is
    /// conserved up to `O(ε)`.
    #[default]
    Verbatim,
    /// Choose the new cell so the discrete mass equals its initial value.
    ExactMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxState {
    k0: f64,
    eps: f64,
    m_b: usize,
    j: usize,
    g: Vec<f64>,
    n: f64,
    target_mass: f64,
}

/// Bookkeeping for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    /// Value assigned to the new cell.
    pub birth: f64,
    /// Cells that went negative and were clamped to zero.
    pub clamped: usize,
}

impl BoxState {
    /// Initial state from a density on `[0, 1]`.
    pub fn new(initial: &DiscreteDensity, params: &Params) -> Result<Self> {
        Self::with_rate(initial, params.k0())
    }

    /// Like [`BoxState::new`] but admits `k0 = 0`, which freezes the
    /// dynamics; used for diagnostics.
    pub fn with_rate(initial: &DiscreteDensity, k0: f64) -> Result<Self> {
        if !(k0 >= 0.0 && k0.is_finite()) {
            return Err(Error::invalid(format!("k0 must be nonnegative, got {k0}")));
        }
        let grid = initial.grid();
        let m_b = grid.n_cells();
        let eps = grid.cell_width();
        if (eps * m_b as f64 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "initial density must cover [0, 1] with cells of width 1/M_b, got extent {}",
                grid.extent()
            )));
        }
        let g = initial.values().to_vec();
        let n = eps * neumaier_sum(g.iter().copied());
        if !(n > 0.0) {
            return Err(Error::Degenerate { step: 0, number: n });
        }
        Ok(BoxState {
            k0,
            eps,
            m_b,
            j: 0,
            target_mass: discrete_mass(initial),
            g,
            n,
        })
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn m_b(&self) -> usize {
        self.m_b
    }

    pub fn step_index(&self) -> usize {
        self.j
    }

    /// `t = 1 + εj`.
    pub fn time(&self) -> f64 {
        1.0 + self.eps * self.j as f64
    }

    pub fn cells(&self) -> &[f64] {
        &self.g
    }

    /// `N = ε Σ G`.
    pub fn number(&self) -> f64 {
        self.n
    }

    /// `ε Σ x_i G(i)` with midpoints `x_i = ε(i - 1/2)`.
    pub fn mass(&self) -> f64 {
        let eps = self.eps;
        eps * neumaier_sum(self.g.iter().enumerate().map(|(i, v)| eps * (i as f64 + 0.5) * v))
    }

    pub fn to_density(&self) -> DiscreteDensity {
        let grid = Grid1D::new(self.eps, self.g.len()).expect("state grid is valid");
        DiscreteDensity::new(grid, self.g.clone()).expect("state values are valid")
    }

    fn check_number(&self) -> Result<()> {
        if self.n > 0.0 && self.n.is_finite() {
            Ok(())
        } else {
            Err(Error::Degenerate {
                step: self.j,
                number: self.n,
            })
        }
    }

    /// `Σ_i G(i) G(mirror(i))` in a fixed pairing order.
    fn pair_sum(&self) -> f64 {
        let g = &self.g;
        let len = g.len();
        let half = neumaier_sum((0..len / 2).map(|i| g[i] * g[len - 1 - i]));
        let mid = if len % 2 == 1 { g[len / 2] * g[len / 2] } else { 0.0 };
        2.0 * half + mid
    }

    /// Value of the cell created by the next step under the verbatim rule.
    pub fn birth_value(&self) -> Result<f64> {
        self.check_number()?;
        Ok(0.5 * self.eps * self.k0 / self.n * self.pair_sum())
    }

    /// Advances the state in place by one step.
    pub fn advance(&mut self, rule: BirthRule) -> Result<StepStats> {
        self.check_number()?;
        let c = self.eps * self.k0 / self.n;
        let len = self.g.len();
        let mut clamped = 0usize;
        let mut update = |v: f64, loss: f64| {
            let out = v - loss;
            if out < 0.0 {
                clamped += 1;
                0.0
            } else {
                out
            }
        };

        // Partners lose the same amount c·G(i)·G(mirror).
        let mut pairs = Vec::with_capacity(len / 2 + 1);
        for i in 0..len / 2 {
            let (a, b) = (self.g[i], self.g[len - 1 - i]);
            let prod = a * b;
            pairs.push(prod);
            let loss = c * prod;
            self.g[i] = update(a, loss);
            self.g[len - 1 - i] = update(b, loss);
        }
        let mid = if len % 2 == 1 {
            let a = self.g[len / 2];
            let prod = a * a;
            self.g[len / 2] = update(a, c * prod);
            prod
        } else {
            0.0
        };
        let pair_sum = 2.0 * neumaier_sum(pairs) + mid;

        let birth = match rule {
            BirthRule::Verbatim => 0.5 * c * pair_sum,
            BirthRule::ExactMass => {
                let x_new = self.eps * (len as f64 + 0.5);
                let mass_old = self.mass();
                ((self.target_mass - mass_old) / (self.eps * x_new)).max(0.0)
            }
        };
        self.g.push(birth);
        self.j += 1;
        self.n = self.eps * neumaier_sum(self.g.iter().copied());
        Ok(StepStats { birth, clamped })
    }

    /// Returns the next state, leaving `self` untouched.
    pub fn step(&self, rule: BirthRule) -> Result<(BoxState, StepStats)> {
        let mut next = self.clone();
        let stats = next.advance(rule)?;
        Ok((next, stats))
    }
}

/// One row of the per-step series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub t: f64,
    pub n: f64,
    pub mass: f64,
    /// Verbatim birth value computed from this state, i.e. the discrete
    /// boundary value `B[g](t)`.
    pub birth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    Degenerate { step: usize, error: Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub snapshots: Vec<(usize, BoxState)>,
    pub series: Vec<SeriesRow>,
    pub steps_completed: usize,
    pub clamp_count: usize,
    pub termination: Termination,
    /// State after the last completed step.
    pub last: BoxState,
}

impl RunReport {
    pub fn snapshot(&self, step: usize) -> Option<&BoxState> {
        self.snapshots.iter().find(|(j, _)| *j == step).map(|(_, s)| s)
    }

    pub fn final_state(&self) -> &BoxState {
        &self.last
    }
}

/// Options for [`run`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    pub steps: usize,
    /// Step indices at which to keep a copy of the state.
    pub snapshot_schedule: Vec<usize>,
    pub birth_rule: BirthRule,
}

/// Runs the box model from `state` for `opts.steps` steps, recording the
/// series at every step and full snapshots on the schedule. A degenerate
/// state stops the run and is reported in `termination`.
pub fn run_from(mut state: BoxState, opts: &RunOptions) -> Result<RunReport> {
    let mut schedule = opts.snapshot_schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    if let Some(&bad) = schedule.iter().find(|&&s| s > opts.steps) {
        return Err(Error::invalid(format!(
            "snapshot step {bad} beyond the run length {}",
            opts.steps
        )));
    }
    let start = state.j;
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut series = Vec::with_capacity(opts.steps + 1);
    let mut steps_completed = 0;
    let mut clamp_count = 0;
    let mut termination = Termination::Completed;
    let mut next_snap = schedule.iter().peekable();
    for k in 0..=opts.steps {
        let birth = match state.birth_value() {
            Ok(b) => b,
            Err(error) => {
                termination = Termination::Degenerate { step: k, error };
                break;
            }
        };
        series.push(SeriesRow {
            step: start + k,
            t: state.time(),
            n: state.number(),
            mass: state.mass(),
            birth,
        });
        if next_snap.peek() == Some(&&k) {
            next_snap.next();
            snapshots.push((k, state.clone()));
        }
        if k == opts.steps {
            break;
        }
        match state.advance(opts.birth_rule) {
            Ok(stats) => {
                clamp_count += stats.clamped;
                steps_completed += 1;
            }
            Err(error) => {
                termination = Termination::Degenerate { step: k, error };
                break;
            }
        }
    }
    Ok(RunReport {
        snapshots,
        series,
        steps_completed,
        clamp_count,
        termination,
        last: state,
    })
}

/// Runs the box model from an initial density on `[0, 1]`.
pub fn run(initial: &DiscreteDensity, params: &Params, opts: &RunOptions) -> Result<RunReport> {
    run_from(BoxState::new(initial, params)?, opts)
}

/// Samples `t² G(y t)` at `n_samples` midpoints `y_k = (k + 1/2)/n` of
/// `(0, 1)`, with `G` interpolated linearly between cell midpoints.
pub fn rescaled_profile(s: &BoxState, n_samples: usize) -> SampledProfile {
    let t = s.time();
    let xs: Vec<f64> = (0..s.g.len()).map(|i| s.eps * (i as f64 + 0.5)).collect();
    let ys: Vec<f64> = (0..n_samples).map(|k| (k as f64 + 0.5) / n_samples as f64).collect();
    let vals = ys.iter().map(|y| t * t * interp_linear(&xs, &s.g, y * t)).collect();
    SampledProfile { ys, vals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_gaussian_initial;
    use proptest::prelude::*;

    fn state(values: Vec<f64>, k0: f64) -> BoxState {
        let n = values.len();
        let d = DiscreteDensity::new(Grid1D::unit(n).unwrap(), values).unwrap();
        BoxState::with_rate(&d, k0).unwrap()
    }

    /// Birth value straight from the displayed formula, 1-based indices.
    fn birth_oracle(s: &BoxState) -> f64 {
        let len = s.cells().len();
        let g = |i: usize| s.cells()[i - 1];
        let sum: f64 = (1..=len).map(|i| s.k0() / s.number() * g(i) * g(len + 1 - i)).sum();
        0.5 * s.eps() * sum
    }

    #[test]
    fn two_cell_birth_and_step() {
        let c = 1.3;
        let s = state(vec![c, c], 1.0);
        assert!((s.number() - c).abs() < 1e-15);
        assert!((s.birth_value().unwrap() - c / 2.0).abs() < 1e-15);
        let (next, stats) = s.step(BirthRule::Verbatim).unwrap();
        assert_eq!(next.cells().len(), 3);
        for v in next.cells() {
            assert!((v - c / 2.0).abs() < 1e-15);
        }
        assert_eq!(stats.clamped, 0);
        assert_eq!(next.step_index(), 1);
        assert!((next.time() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_only_appends_empty_cell() {
        let s = state(vec![0.3, 1.0, 2.0, 0.5], 0.0);
        let (next, stats) = s.step(BirthRule::Verbatim).unwrap();
        assert_eq!(&next.cells()[..4], s.cells());
        assert_eq!(next.cells()[4], 0.0);
        assert_eq!(stats.birth, 0.0);
    }

    #[test]
    fn no_partners_means_no_change() {
        // Mass only in the lower half: every mirror pair includes a zero.
        let s = state(vec![1.0, 2.0, 0.0, 0.0], 3.0);
        assert_eq!(s.birth_value().unwrap(), 0.0);
        let (next, _) = s.step(BirthRule::Verbatim).unwrap();
        assert_eq!(&next.cells()[..4], s.cells());
        assert_eq!(next.cells()[4], 0.0);
    }

    #[test]
    fn degenerate_state_is_rejected() {
        let d = DiscreteDensity::zeros(Grid1D::unit(4).unwrap());
        assert!(matches!(BoxState::with_rate(&d, 1.0), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn initial_grid_must_cover_unit_interval() {
        let d = DiscreteDensity::new(Grid1D::new(0.1, 5).unwrap(), vec![1.0; 5]).unwrap();
        assert!(BoxState::with_rate(&d, 1.0).is_err());
    }

    #[test]
    fn clamping_is_counted() {
        // ε k0 G/N > 1 drives the update negative.
        let s = state(vec![10.0, 0.01, 0.01, 10.0], 50.0);
        let (next, stats) = s.step(BirthRule::Verbatim).unwrap();
        assert_eq!(stats.clamped, 2);
        assert_eq!(next.cells()[0], 0.0);
        assert_eq!(next.cells()[3], 0.0);
    }

    #[test]
    fn run_with_zero_steps() {
        let d = make_gaussian_initial(0.5, 0.3, 200).unwrap();
        let opts = RunOptions {
            steps: 0,
            snapshot_schedule: vec![0],
            ..Default::default()
        };
        let r = run(&d, &Params::new(3.0).unwrap(), &opts).unwrap();
        assert_eq!(r.series.len(), 1);
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(r.snapshot(0).unwrap().cells(), d.values());
        assert_eq!(r.termination, Termination::Completed);
    }

    #[test]
    fn schedule_beyond_run_is_rejected() {
        let d = make_gaussian_initial(0.5, 0.3, 20).unwrap();
        let opts = RunOptions {
            steps: 5,
            snapshot_schedule: vec![6],
            ..Default::default()
        };
        assert!(run(&d, &Params::new(1.0).unwrap(), &opts).is_err());
    }

    #[test]
    fn rescaled_profile_at_start_is_the_density() {
        let d = make_gaussian_initial(0.5, 0.3, 200).unwrap();
        let s = BoxState::new(&d, &Params::new(3.0).unwrap()).unwrap();
        let r = rescaled_profile(&s, 200);
        for (k, v) in r.vals.iter().enumerate() {
            assert!((v - d.values()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_mass_rule_holds_mass() {
        let d = make_gaussian_initial(0.5, 0.3, 50).unwrap();
        let opts = RunOptions {
            steps: 2000,
            birth_rule: BirthRule::ExactMass,
            ..Default::default()
        };
        let r = run(&d, &Params::new(3.0).unwrap(), &opts).unwrap();
        for row in &r.series {
            assert!((row.mass - 1.0).abs() < 1e-12, "step {}: {}", row.step, row.mass);
        }
    }

    #[test]
    fn trivial_seed_drift_is_first_order_in_cell_width() {
        // G ≡ 2 on [0, 1] is the constant self-similar profile for k0 = 2;
        // the scheme leaves it by O(ε) at a fixed time.
        let drift = |m_b: usize| {
            let d = DiscreteDensity::new(Grid1D::unit(m_b).unwrap(), vec![2.0; m_b]).unwrap();
            let d = d.normalized().unwrap();
            let opts = RunOptions {
                steps: 10 * m_b,
                ..Default::default()
            };
            let r = run(&d, &Params::new(2.0).unwrap(), &opts).unwrap();
            let prof = rescaled_profile(r.final_state(), 100);
            prof.vals.iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (drift(100), drift(200));
        assert!(coarse < 0.25 && fine < 0.15, "{coarse} {fine}");
        let ratio = fine / coarse;
        assert!(ratio > 0.4 && ratio < 0.6, "ratio {ratio}");
    }

    proptest! {
        #[test]
        fn birth_matches_brute_force(values in proptest::collection::vec(0.01f64..5.0, 2..40), k0 in 0.1f64..5.0) {
            let s = state(values, k0);
            let b = s.birth_value().unwrap();
            prop_assert!((b - birth_oracle(&s)).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn symmetric_state_birth_identity(half in proptest::collection::vec(0.01f64..5.0, 1..20), k0 in 0.1f64..5.0) {
            let mut values = half.clone();
            values.extend(half.iter().rev());
            let s = state(values.clone(), k0);
            let sq: f64 = values.iter().map(|v| v * v).sum();
            let expected = s.eps() * k0 / (2.0 * s.number()) * sq;
            prop_assert!((s.birth_value().unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
        }

        #[test]
        fn step_decreases_number_and_cells(values in proptest::collection::vec(0.0f64..3.0, 4..30), k0 in 0.0f64..1.0) {
            // k0 ≤ 1 gives k0·G(mirror) ≤ ΣG, so no cell can be clamped.
            prop_assume!(values.iter().any(|v| *v > 0.0));
            let s = state(values, k0);
            let (next, stats) = s.step(BirthRule::Verbatim).unwrap();
            prop_assert_eq!(stats.clamped, 0);
            prop_assert!(next.number() <= s.number() * (1.0 + 1e-15));
            for (a, b) in s.cells().iter().zip(next.cells()) {
                prop_assert!(b <= a);
            }
        }
    }
}

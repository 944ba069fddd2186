//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p maxagg --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use maxagg::boxmodel::{self, BirthRule, BoxState, RunOptions, RunReport};
use maxagg::diagnostics::{
    cross_check_l1, l1_distance, n_bound_check, rescaled_stationarity, stationarity_measure, ConvergenceSeries,
};
use maxagg::mildsolver::{picard_solve, PicardOptions};
use maxagg::selfsimilar::{
    find_branches, scan_moment_curve, shoot, tail_exponent_check, to_normalized, BranchPair, BranchSearch, Shape,
    ShootConfig,
};
use maxagg::{make_gaussian_initial, DiscreteDensity, Params, SampledProfile};

const M_B: usize = 200;
const EPS: f64 = 1.0 / M_B as f64;

// Criterion 1
const TRIVIAL_SUP_TOL: f64 = 1e-8;
const TRIVIAL_K0_TOL: f64 = 1e-8;
const TRIVIAL_RUNTIME_S: f64 = 1.0;
// Criterion 2
const MOMENT_MIN_LOCATION_TOL: f64 = 0.05;
const MOMENT_MIN_VALUE_TOL: f64 = 1e-3;
const MOMENT_RUNTIME_S: f64 = 30.0;
// Criterion 3
const BRANCH_MASS_TOL: f64 = 1e-6;
const BRANCH_K0_TOL: f64 = 1e-6;
const BRANCH_RUNTIME_S: f64 = 60.0;
// Criterion 4
const TAIL_EXP_TOL: f64 = 0.05;
const BOUNDARY_MOMENT_TOL: f64 = 1e-3;
// Criterion 5
const FIG1_L1_FINAL: f64 = 0.05;
// Criterion 6
const STATIONARITY_FRACTION: f64 = 0.1;
const N_FLOOR_RATIO: f64 = 0.1;
const RESCALED_SPREAD_MIN: f64 = 0.2;
// Criterion 7
const N_BOUND_RATIO: f64 = 0.5;
// Criterion 8
const MASS_DRIFT_VERBATIM: f64 = 5.0 * EPS;
const MASS_DRIFT_EXACT: f64 = 1e-12;
// Criterion 10
const CROSS_L1: f64 = 5e-2;
const PICARD_TOL: f64 = 1e-10;
const PICARD_MAX_ITER: usize = 200;

struct Line {
    id: &'static str,
    pass: bool,
    text: String,
}

fn line(id: &'static str, pass: bool, text: String) -> Line {
    Line { id, pass, text }
}

fn run_box(initial: &DiscreteDensity, k0: f64, steps: usize, schedule: &[usize], rule: BirthRule) -> RunReport {
    let opts = RunOptions {
        steps,
        snapshot_schedule: schedule.to_vec(),
        birth_rule: rule,
    };
    boxmodel::run(initial, &Params::new(k0).unwrap(), &opts).expect("box run")
}

fn gaussian(center: f64) -> DiscreteDensity {
    make_gaussian_initial(center, 0.3, M_B).unwrap()
}

fn rescaled(s: &BoxState) -> SampledProfile {
    boxmodel::rescaled_profile(s, 512)
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let cfg = ShootConfig::new(1.0, 2.0);
    let p = shoot(&cfg).unwrap();
    let sup = p
        .ys
        .iter()
        .zip(&p.g_vals)
        .filter(|(y, _)| **y >= 1e-4 && **y <= 1.0 - 1e-4)
        .map(|(_, g)| (g - 2.0).abs())
        .fold(0.0_f64, f64::max);
    let (k0, _) = to_normalized(&p).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = sup < TRIVIAL_SUP_TOL && (k0 - 2.0).abs() < TRIVIAL_K0_TOL && secs < TRIVIAL_RUNTIME_S;
    line(
        "1",
        pass,
        format!("trivial profile: sup|G-2| = {sup:.2e}, k0 = {k0:.12}, {secs:.3}s"),
    )
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let values: Vec<f64> = (0..=76).map(|k| 0.2 + 0.05 * k as f64).collect();
    let samples = scan_moment_curve(&values, 1.0, &ShootConfig::default());
    let secs = start.elapsed().as_secs_f64();
    let ns: Vec<f64> = match samples.iter().map(|s| s.n.clone()).collect::<Result<Vec<_>, _>>() {
        Ok(ns) => ns,
        Err(e) => return line("2", false, format!("moment curve: shooting failed: {e}")),
    };
    let minima: Vec<usize> = (1..ns.len() - 1).filter(|&k| ns[k] < ns[k - 1] && ns[k] < ns[k + 1]).collect();
    let pass = minima.len() == 1 && {
        let k = minima[0];
        (values[k] - 2.0).abs() <= MOMENT_MIN_LOCATION_TOL
            && (ns[k] - 2.0).abs() <= MOMENT_MIN_VALUE_TOL
            && secs < MOMENT_RUNTIME_S
    };
    let desc = minima
        .iter()
        .map(|&k| format!("G(1/2) = {:.2}, N = {:.6}", values[k], ns[k]))
        .collect::<Vec<_>>()
        .join("; ");
    line(
        "2",
        pass,
        format!("moment curve: {} interior minima [{desc}], {secs:.2}s", minima.len()),
    )
}

/// Moments of a normalized branch, recomputed by shooting the normalized
/// equation afresh: `(m, D N)`.
fn reshoot_moments(b: &maxagg::selfsimilar::Branch) -> (f64, f64) {
    let p = &b.profile;
    let again = shoot(&ShootConfig::new(p.d, p.g_half)).unwrap();
    (again.m, again.d * again.n)
}

fn criterion_3(pair: &BranchPair, secs: f64) -> Line {
    let (sub, sup) = (&pair.subcritical, &pair.supercritical);
    let (m_sub, k_sub) = reshoot_moments(sub);
    let (m_sup, k_sup) = reshoot_moments(sup);
    let ok = |m: f64, k: f64| (m - 1.0).abs() <= BRANCH_MASS_TOL && (k - 3.0).abs() <= BRANCH_K0_TOL;
    let pass = sub.shape == Shape::Subcritical
        && sup.shape == Shape::Supercritical
        && ok(m_sub, k_sub)
        && ok(m_sup, k_sup)
        && secs < BRANCH_RUNTIME_S;
    line(
        "3",
        pass,
        format!(
            "k0 = 3 branches: {} (G(1/2) = {:.6}, m = {m_sub:.9}, k0 = {k_sub:.9}), {} (G(1/2) = {:.6}, m = {m_sup:.9}, k0 = {k_sup:.9}), {secs:.2}s",
            sub.shape, sub.g_half, sup.shape, sup.g_half
        ),
    )
}

fn criterion_4(pair: &BranchPair) -> Line {
    let p = &pair.supercritical.profile;
    let tail = tail_exponent_check(p).unwrap();
    let gap = (tail.measured - tail.predicted).abs();
    let moment = (p.g1 - p.n).abs() / p.n;
    let pass = gap < TAIL_EXP_TOL && moment < BOUNDARY_MOMENT_TOL;
    line(
        "4",
        pass,
        format!(
            "tail exponent {:.5} vs D G1 - 2 = {:.5} (gap {gap:.2e}); |G1 - N|/N = {moment:.2e}",
            tail.measured, tail.predicted
        ),
    )
}

/// Per-run bookkeeping shared by criteria 8 and 9.
struct RunStats {
    name: String,
    mass_drift: f64,
    n_violations: usize,
    completed: bool,
}

fn stats(name: &str, report: &RunReport) -> RunStats {
    let series = ConvergenceSeries::from_rows(&report.series).unwrap();
    RunStats {
        name: name.to_string(),
        mass_drift: series.mass_drift(),
        n_violations: series.n_violations().len(),
        completed: report.termination == boxmodel::Termination::Completed,
    }
}

fn criterion_5(pair: &BranchPair) -> (Line, RunStats) {
    let schedule = [0, 200, 1000, 5000, 25000];
    let report = run_box(&gaussian(0.5), 3.0, 25000, &schedule, BirthRule::Verbatim);
    let target = pair.supercritical.profile.to_sampled();
    let d: Vec<f64> = schedule
        .iter()
        .map(|&j| l1_distance(&rescaled(report.snapshot(j).unwrap()), &target).unwrap())
        .collect();
    let (d200, d1000, d25000) = (d[1], d[2], d[4]);
    let pass = d200 > d1000 && d1000 > d25000 && d25000 < FIG1_L1_FINAL;
    let text = format!(
        "k0 = 3 box run, L1 to supercritical at steps {schedule:?}: {}",
        d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
    );
    (line("5", pass, text), stats("fig1 k0=3 c=0.5", &report))
}

fn criterion_6() -> (Line, Vec<RunStats>) {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut all_stats = Vec::new();
    let reports: Vec<(f64, f64, RunReport)> = {
        use rayon::prelude::*;
        [0.25, 0.5, 0.75]
            .par_iter()
            .map(|&c| {
                let g0 = gaussian(c);
                let sup0 = g0.values().iter().fold(0.0_f64, |a, &v| a.max(v));
                (c, sup0, run_box(&g0, 1.0, 25000, &[5000, 25000], BirthRule::Verbatim))
            })
            .collect()
    };
    for (c, sup0, report) in &reports {
        let snaps: Vec<&BoxState> = report.snapshots.iter().map(|(_, s)| s).collect();
        let st = stationarity_measure(&snaps, 2).unwrap();
        let spread = rescaled_stationarity(&snaps, 2).unwrap();
        let series = ConvergenceSeries::from_rows(&report.series).unwrap();
        let ratio = series.min_n_ratio();
        let ok = st < STATIONARITY_FRACTION * sup0 && ratio > N_FLOOR_RATIO && spread >= RESCALED_SPREAD_MIN;
        pass &= ok;
        parts.push(format!(
            "c = {c}: sup change {st:.2e} (limit {:.3}), min N/N0 {ratio:.3}, rescaled L1 change {spread:.3}",
            STATIONARITY_FRACTION * sup0
        ));
        all_stats.push(stats(&format!("fig2 k0=1 c={c}"), report));
    }
    (line("6", pass, format!("k0 = 1 runs, steps 5000 -> 25000: {}", parts.join("; "))), all_stats)
}

fn criterion_7() -> (Line, RunStats) {
    let report = run_box(&gaussian(0.5), 0.3, 150000, &[], BirthRule::Verbatim);
    let series = ConvergenceSeries::from_rows(&report.series).unwrap();
    let check = n_bound_check(&series, 0.3);
    let pass = check.passed == Some(true) && check.ratio > N_BOUND_RATIO;
    (
        line("7", pass, format!("k0 = 0.3, 150000 steps: min N/N(0) = {:.4}", check.ratio)),
        stats("nbound k0=0.3", &report),
    )
}

fn criterion_8(runs: &[RunStats]) -> Line {
    let exact = run_box(&gaussian(0.5), 3.0, 25000, &[], BirthRule::ExactMass);
    let exact_drift = ConvergenceSeries::from_rows(&exact.series).unwrap().mass_drift();
    let worst = runs.iter().fold(0.0_f64, |a, r| a.max(r.mass_drift));
    let pass = worst <= MASS_DRIFT_VERBATIM && exact_drift <= MASS_DRIFT_EXACT;
    let per_run = runs
        .iter()
        .map(|r| format!("{} {:.2e}", r.name, r.mass_drift))
        .collect::<Vec<_>>()
        .join(", ");
    line(
        "8",
        pass,
        format!(
            "mass drift, verbatim birth (limit {MASS_DRIFT_VERBATIM:.1e}): {per_run}; exact-mass k0 = 3: {exact_drift:.2e}"
        ),
    )
}

fn criterion_9(runs: &[RunStats]) -> Line {
    let total: usize = runs.iter().map(|r| r.n_violations).sum();
    let all_completed = runs.iter().all(|r| r.completed);
    let per_run = runs
        .iter()
        .map(|r| format!("{} {}", r.name, r.n_violations))
        .collect::<Vec<_>>()
        .join(", ");
    line(
        "9",
        total == 0 && all_completed,
        format!("N increases over {} runs: {total} [{per_run}]", runs.len()),
    )
}

fn criterion_10() -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for k0 in [1.0, 3.0] {
        let g0 = gaussian(0.5);
        let opts = PicardOptions {
            t_final: 1.1,
            cells_per_unit: 2 * M_B,
            tol: PICARD_TOL,
            max_iter: PICARD_MAX_ITER,
        };
        let (grid, report) = match picard_solve(&g0, k0, &opts) {
            Ok(r) => r,
            Err(e) => {
                pass = false;
                parts.push(format!("k0 = {k0}: Picard failed: {e}"));
                continue;
            }
        };
        let boxed = run_box(&g0, k0, 20, &[], BirthRule::Verbatim);
        let l1 = cross_check_l1(&grid, boxed.final_state()).unwrap();
        let last = *report.residual_history.last().unwrap();
        let ok = l1 <= CROSS_L1
            && report.residuals_decreasing()
            && last < PICARD_TOL
            && report.iterates_used <= PICARD_MAX_ITER
            && report.mass_within_bounds();
        pass &= ok;
        parts.push(format!(
            "k0 = {k0}: L1 = {l1:.3e}, {} iterates, final residual {last:.1e}, boundary defect {:.1e}",
            report.iterates_used, report.boundary_defect
        ));
    }
    line("10", pass, format!("Picard vs box at T = 1.1: {}", parts.join("; ")))
}

fn criterion_11(pair: &BranchPair) -> (Line, RunStats) {
    let sub = &pair.subcritical.profile;
    let seed = DiscreteDensity::from_samples_normalized(M_B, &sub.ys, &sub.g_vals).unwrap();
    let mut values = seed.values().to_vec();
    values[M_B / 2] *= 1.01;
    let seed = DiscreteDensity::new(*seed.grid(), values).unwrap().normalized().unwrap();
    let schedule = [0, 1000, 5000, 25000];
    let report = run_box(&seed, pair.k0, 25000, &schedule, BirthRule::Verbatim);
    let sub_ref = sub.to_sampled();
    let sup_ref = pair.supercritical.profile.to_sampled();
    let first = rescaled(report.snapshot(0).unwrap());
    let last = rescaled(report.snapshot(25000).unwrap());
    let (s0, s1) = (l1_distance(&first, &sub_ref).unwrap(), l1_distance(&last, &sub_ref).unwrap());
    let (p0, p1) = (l1_distance(&first, &sup_ref).unwrap(), l1_distance(&last, &sup_ref).unwrap());
    let pass = s1 > s0 && p1 < p0;
    (
        line(
            "11",
            pass,
            format!("perturbed subcritical seed: L1 to subcritical {s0:.4} -> {s1:.4}, to supercritical {p0:.4} -> {p1:.4}"),
        ),
        stats("instability k0=3", &report),
    )
}

fn main() -> ExitCode {
    let suite = Instant::now();
    let mut lines = vec![criterion_1(), criterion_2()];

    let start = Instant::now();
    let pair = find_branches(3.0, &BranchSearch::default()).expect("k0 = 3 branches");
    let branch_secs = start.elapsed().as_secs_f64();
    lines.push(criterion_3(&pair, branch_secs));
    lines.push(criterion_4(&pair));

    // Long runs are independent; run them side by side.
    let ((l5, r5), ((l6, r6), ((l7, r7), (l11, r11)))) = rayon::join(
        || criterion_5(&pair),
        || rayon::join(criterion_6, || rayon::join(criterion_7, || criterion_11(&pair))),
    );
    let mut runs = vec![r5];
    runs.extend(r6);
    runs.push(r7);
    runs.push(r11);
    lines.push(l5);
    lines.push(l6);
    lines.push(l7);
    lines.push(criterion_8(&runs));
    lines.push(criterion_9(&runs));
    lines.push(criterion_10());
    lines.push(l11);

    lines.sort_by_key(|l| l.id.parse::<u32>().unwrap());
    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in &lines {
        println!("{} [{:>2}] {}", if l.pass { "PASS" } else { "FAIL" }, l.id, l.text);
    }
    println!(
        "acceptance: {} passed, {failed} failed ({:.1}s)",
        lines.len() - failed,
        suite.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

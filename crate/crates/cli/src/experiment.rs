//! Figure recipes. Each experiment writes one directory per run plus
//! `acceptance.csv` with a verdict per checked property.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use maxagg::boxmodel::{self, BoxState, RunOptions, RunReport, Termination};
use maxagg::diagnostics::{
    l1_distance, n_bound_check, rescaled_stationarity, stationarity_measure, ConvergenceSeries, Regime,
    RESCALED_SAMPLES,
};
use maxagg::selfsimilar::{find_branches, BranchPair, BranchSearch};
use maxagg::{make_gaussian_initial, DiscreteDensity, Params, SampledProfile};

use crate::commands::{self, keys, rescaled_shape, write_run};
use crate::config::Settings;
use crate::error::CliError;
use crate::output::{num, write_table};

pub const EXPERIMENTS: &[&str] = &["fig1", "fig2", "fig3", "moment-curve", "instability", "nbound"];

const FIG1_L1_FINAL: f64 = 0.05;
const MASS_DRIFT_CELLS: f64 = 5.0;
const STATIONARITY_FRACTION: f64 = 0.1;
const N_FLOOR_RATIO: f64 = 0.1;
const RESCALED_SPREAD_MIN: f64 = 0.2;
const N_BOUND_RATIO: f64 = 0.5;

/// One row of `acceptance.csv`; `pass = None` marks a reported-only metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: Option<bool>,
}

impl Verdict {
    fn new(id: impl Into<String>, value: f64, threshold: f64, pass: bool) -> Self {
        Verdict {
            id: id.into(),
            value,
            threshold,
            pass: Some(pass),
        }
    }

    fn info(id: impl Into<String>, value: f64) -> Self {
        Verdict {
            id: id.into(),
            value,
            threshold: f64::NAN,
            pass: None,
        }
    }
}

struct RunSpec {
    name: String,
    k0: f64,
    initial: DiscreteDensity,
    steps: usize,
    schedule: Vec<usize>,
}

struct Finished {
    name: String,
    k0: f64,
    initial: DiscreteDensity,
    report: Result<RunReport, CliError>,
}

fn cap_schedule(steps: usize, schedule: &[usize], cap: Option<usize>) -> (usize, Vec<usize>) {
    match cap {
        Some(cap) if cap < steps => {
            let mut s: Vec<usize> = schedule.iter().copied().filter(|&j| j < cap).collect();
            s.push(cap);
            (cap, s)
        }
        _ => (steps, schedule.to_vec()),
    }
}

fn execute(dir: &Path, specs: Vec<RunSpec>) -> Vec<Finished> {
    specs
        .into_par_iter()
        .map(|spec| {
            let run_dir = dir.join(&spec.name);
            let report = std::fs::create_dir_all(&run_dir)
                .map_err(CliError::from)
                .and_then(|_| {
                    let opts = RunOptions {
                        steps: spec.steps,
                        snapshot_schedule: spec.schedule.clone(),
                        ..Default::default()
                    };
                    Ok(boxmodel::run(&spec.initial, &Params::new(spec.k0)?, &opts)?)
                })
                .and_then(|report| {
                    write_run(&run_dir, &report)?;
                    Ok(report)
                });
            Finished {
                name: spec.name,
                k0: spec.k0,
                initial: spec.initial,
                report,
            }
        })
        .collect()
}

/// Mass drift, N monotonicity and completion for one run.
fn invariant_verdicts(f: &Finished, report: &RunReport) -> Result<Vec<Verdict>, CliError> {
    let series = ConvergenceSeries::from_rows(&report.series)?;
    let eps = report.final_state().eps();
    let drift = series.mass_drift();
    let violations = series.n_violations().len() as f64;
    let completed = report.termination == Termination::Completed;
    Ok(vec![
        Verdict::new(format!("{}_completed", f.name), completed as u8 as f64, 1.0, completed),
        Verdict::new(
            format!("{}_mass_drift", f.name),
            drift,
            MASS_DRIFT_CELLS * eps,
            drift <= MASS_DRIFT_CELLS * eps,
        ),
        Verdict::new(format!("{}_n_increases", f.name), violations, 0.0, violations == 0.0),
    ])
}

fn snapshots(report: &RunReport) -> Vec<&BoxState> {
    report.snapshots.iter().map(|(_, s)| s).collect()
}

/// `run,step,t,N,target,l1` for every snapshot and target.
fn write_l1_table(dir: &Path, rows: &[(String, usize, f64, f64, String, f64)]) -> Result<(), CliError> {
    write_table(
        &dir.join("l1.csv"),
        &["run", "step", "t", "N", "target", "l1"],
        rows.iter().map(|(run, step, t, n, target, l1)| {
            vec![run.clone(), step.to_string(), num(*t), num(*n), target.clone(), num(*l1)]
        }),
    )
}

fn l1_rows(
    f: &Finished,
    report: &RunReport,
    targets: &[(&str, &SampledProfile)],
) -> Result<Vec<(String, usize, f64, f64, String, f64)>, CliError> {
    let mut rows = Vec::new();
    for (step, state) in &report.snapshots {
        let prof = boxmodel::rescaled_profile(state, RESCALED_SAMPLES);
        for (name, target) in targets {
            rows.push((
                f.name.clone(),
                *step,
                state.time(),
                state.number(),
                name.to_string(),
                l1_distance(&prof, target)?,
            ));
        }
    }
    Ok(rows)
}

fn stationarity_rows(f: &Finished, report: &RunReport, regimes: &[Regime]) -> Vec<Vec<String>> {
    let snaps = snapshots(report);
    if snaps.len() < 2 {
        return Vec::new();
    }
    let (first, last) = (report.snapshots[snaps.len() - 2].0, report.snapshots[snaps.len() - 1].0);
    regimes
        .iter()
        .filter_map(|r| r.measure(&snaps, 2).ok().map(|v| (r, v)))
        .map(|(r, v)| {
            vec![
                f.name.clone(),
                r.as_str().to_string(),
                first.to_string(),
                last.to_string(),
                num(v),
                rescaled_shape(report.final_state()).to_string(),
            ]
        })
        .collect()
}

fn failed_run(f: &Finished, e: &CliError) -> Verdict {
    eprintln!("run {} failed: {e}", f.name);
    Verdict::new(format!("{}_completed", f.name), 0.0, 1.0, false)
}

fn gaussian(center: f64, m_b: usize) -> Result<DiscreteDensity, CliError> {
    Ok(make_gaussian_initial(center, 0.3, m_b)?)
}

fn branches_k0_3() -> Result<BranchPair, CliError> {
    Ok(find_branches(3.0, &BranchSearch::default())?)
}

struct Context {
    dir: PathBuf,
    m_b: usize,
    max_steps: Option<usize>,
    regime: Option<Regime>,
}

impl Context {
    fn spec(&self, name: String, k0: f64, initial: DiscreteDensity, steps: usize, schedule: &[usize]) -> RunSpec {
        let (steps, schedule) = cap_schedule(steps, schedule, self.max_steps);
        RunSpec {
            name,
            k0,
            initial,
            steps,
            schedule,
        }
    }

    fn regimes(&self, k0: f64) -> Vec<Regime> {
        match self.regime {
            Some(r) => vec![r],
            None => Regime::for_k0(k0).to_vec(),
        }
    }
}

fn write_stationarity(dir: &Path, rows: Vec<Vec<String>>) -> Result<(), CliError> {
    write_table(
        &dir.join("stationarity.csv"),
        &["run", "regime", "from_step", "to_step", "value", "final_rescaled_shape"],
        rows,
    )
}

fn fig1(ctx: &Context) -> Result<Vec<Verdict>, CliError> {
    let pair = branches_k0_3()?;
    let target = pair.supercritical.profile.to_sampled();
    let mut specs = Vec::new();
    for c in [0.25, 0.5, 0.75] {
        let (steps, schedule): (usize, &[usize]) = if c == 0.25 {
            (150000, &[0, 1000, 25000, 150000])
        } else {
            (25000, &[0, 200, 1000, 25000])
        };
        specs.push(ctx.spec(format!("k0_3_c{c}"), 3.0, gaussian(c, ctx.m_b)?, steps, schedule));
    }
    let mut verdicts = Vec::new();
    let mut l1 = Vec::new();
    let mut stat = Vec::new();
    for f in execute(&ctx.dir, specs) {
        let report = match &f.report {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(failed_run(&f, e));
                continue;
            }
        };
        let rows = l1_rows(&f, report, &[("supercritical", &target)])?;
        let d: Vec<f64> = rows.iter().skip(1).map(|r| r.5).collect();
        let decreasing = d.windows(2).all(|w| w[1] < w[0]);
        let last = *d.last().unwrap_or(&f64::NAN);
        verdicts.push(Verdict::new(format!("{}_l1_decreasing", f.name), decreasing as u8 as f64, 1.0, decreasing));
        verdicts.push(Verdict::new(format!("{}_final_l1", f.name), last, FIG1_L1_FINAL, last < FIG1_L1_FINAL));
        verdicts.extend(invariant_verdicts(&f, report)?);
        stat.extend(stationarity_rows(&f, report, &ctx.regimes(f.k0)));
        l1.extend(rows);
    }
    write_l1_table(&ctx.dir, &l1)?;
    write_stationarity(&ctx.dir, stat)?;
    Ok(verdicts)
}

fn fig2(ctx: &Context) -> Result<Vec<Verdict>, CliError> {
    let specs = [0.25, 0.5, 0.75]
        .iter()
        .map(|&c| Ok(ctx.spec(format!("k0_1_c{c}"), 1.0, gaussian(c, ctx.m_b)?, 25000, &[0, 200, 1000, 5000, 25000])))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut verdicts = Vec::new();
    let mut stat = Vec::new();
    for f in execute(&ctx.dir, specs) {
        let report = match &f.report {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(failed_run(&f, e));
                continue;
            }
        };
        let snaps = snapshots(report);
        let sup0 = f.initial.values().iter().fold(0.0_f64, |a, &v| a.max(v));
        // last two snapshots: steps 5000 -> 25000
        let st = stationarity_measure(&snaps, 2).unwrap_or(f64::NAN);
        let limit = STATIONARITY_FRACTION * sup0;
        verdicts.push(Verdict::new(format!("{}_stationarity", f.name), st, limit, st < limit));
        let spread = rescaled_stationarity(&snaps, 2).unwrap_or(f64::NAN);
        verdicts.push(Verdict::new(
            format!("{}_rescaled_change", f.name),
            spread,
            RESCALED_SPREAD_MIN,
            spread >= RESCALED_SPREAD_MIN,
        ));
        let ratio = ConvergenceSeries::from_rows(&report.series)?.min_n_ratio();
        verdicts.push(Verdict::new(format!("{}_min_n_ratio", f.name), ratio, N_FLOOR_RATIO, ratio > N_FLOOR_RATIO));
        verdicts.extend(invariant_verdicts(&f, report)?);
        stat.extend(stationarity_rows(&f, report, &ctx.regimes(f.k0)));
    }
    write_stationarity(&ctx.dir, stat)?;
    Ok(verdicts)
}

fn fig3(ctx: &Context) -> Result<Vec<Verdict>, CliError> {
    let trivial = SampledProfile::new(vec![0.0, 1.0], vec![2.0, 2.0])?;
    let specs = [0.25, 0.5, 0.75]
        .iter()
        .map(|&c| {
            Ok(ctx.spec(
                format!("k0_2_c{c}"),
                2.0,
                gaussian(c, ctx.m_b)?,
                150000,
                &[0, 1000, 5000, 25000, 150000],
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut verdicts = Vec::new();
    let mut l1 = Vec::new();
    let mut stat = Vec::new();
    for f in execute(&ctx.dir, specs) {
        let report = match &f.report {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(failed_run(&f, e));
                continue;
            }
        };
        let rows = l1_rows(&f, report, &[("trivial", &trivial)])?;
        if let Some(last) = rows.last() {
            verdicts.push(Verdict::info(format!("{}_final_l1_trivial", f.name), last.5));
        }
        let snaps = snapshots(report);
        for r in [Regime::Unscaled, Regime::Rescaled] {
            if let Ok(v) = r.measure(&snaps, 2) {
                verdicts.push(Verdict::info(format!("{}_{}_change", f.name, r.as_str()), v));
            }
        }
        verdicts.extend(invariant_verdicts(&f, report)?);
        stat.extend(stationarity_rows(&f, report, &[Regime::Unscaled, Regime::Rescaled]));
        l1.extend(rows);
    }
    write_l1_table(&ctx.dir, &l1)?;
    write_stationarity(&ctx.dir, stat)?;
    Ok(verdicts)
}

fn moment_curve(ctx: &Context, s: &Settings) -> Result<Vec<Verdict>, CliError> {
    let curve = commands::write_moment_curve(&ctx.dir, s)?;
    let minima: Vec<(f64, f64)> = curve
        .windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
        .map(|w| w[1])
        .collect();
    let mut v = vec![Verdict::new("interior_minima", minima.len() as f64, 1.0, minima.len() == 1)];
    if let [(g, n)] = minima[..] {
        v.push(Verdict::new("minimum_location", g, 2.0, (g - 2.0).abs() <= 0.05));
        v.push(Verdict::new("minimum_value", n, 2.0, (n - 2.0).abs() <= 1e-3));
    }
    Ok(v)
}

fn instability(ctx: &Context) -> Result<Vec<Verdict>, CliError> {
    let pair = branches_k0_3()?;
    let sub = &pair.subcritical.profile;
    let seed = DiscreteDensity::from_samples_normalized(ctx.m_b, &sub.ys, &sub.g_vals)?;
    let seed = commands::perturb(seed, Some(ctx.m_b / 2), 0.01)?;
    let spec = ctx.spec("k0_3_subcritical_seed".into(), pair.k0, seed, 25000, &[0, 1000, 5000, 25000]);
    let sub_ref = sub.to_sampled();
    let sup_ref = pair.supercritical.profile.to_sampled();
    let mut verdicts = Vec::new();
    for f in execute(&ctx.dir, vec![spec]) {
        let report = match &f.report {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(failed_run(&f, e));
                continue;
            }
        };
        let rows = l1_rows(&f, report, &[("subcritical", &sub_ref), ("supercritical", &sup_ref)])?;
        let series = |target: &str| -> Vec<f64> { rows.iter().filter(|r| r.4 == target).map(|r| r.5).collect() };
        let (to_sub, to_sup) = (series("subcritical"), series("supercritical"));
        let (s0, s1) = (to_sub[0], *to_sub.last().unwrap());
        let (p0, p1) = (to_sup[0], *to_sup.last().unwrap());
        verdicts.push(Verdict::new("l1_to_subcritical_growth", s1 - s0, 0.0, s1 > s0));
        verdicts.push(Verdict::new("l1_to_supercritical_change", p1 - p0, 0.0, p1 < p0));
        verdicts.extend(invariant_verdicts(&f, report)?);
        write_l1_table(&ctx.dir, &rows)?;
    }
    Ok(verdicts)
}

fn nbound(ctx: &Context) -> Result<Vec<Verdict>, CliError> {
    let spec = ctx.spec("k0_0.3_c0.5".into(), 0.3, gaussian(0.5, ctx.m_b)?, 150000, &[0, 150000]);
    let mut verdicts = Vec::new();
    for f in execute(&ctx.dir, vec![spec]) {
        let report = match &f.report {
            Ok(r) => r,
            Err(e) => {
                verdicts.push(failed_run(&f, e));
                continue;
            }
        };
        let check = n_bound_check(&ConvergenceSeries::from_rows(&report.series)?, f.k0);
        verdicts.push(Verdict::new(
            "min_n_ratio",
            check.ratio,
            N_BOUND_RATIO,
            check.passed == Some(true),
        ));
        verdicts.extend(invariant_verdicts(&f, report)?);
    }
    Ok(verdicts)
}

pub const EXPERIMENT_KEYS: &[&str] = &["m_b", "max_steps", "regime"];

pub fn experiment(name: &str, s: &Settings) -> Result<String, CliError> {
    let extra: &[&str] = if name == "moment-curve" {
        &["d", "g_half_min", "g_half_max", "g_half_step", "delta", "rk_tol", "n_output"]
    } else {
        &[]
    };
    s.check_keys(&keys(&[EXPERIMENT_KEYS, extra]))?;
    if !EXPERIMENTS.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown experiment {name:?}; expected one of {}",
            EXPERIMENTS.join(", ")
        )));
    }
    let ctx = Context {
        dir: commands::create_out_dir(s)?.join(name),
        m_b: commands::m_b(s)?,
        max_steps: s.get("max_steps")?,
        regime: s.get::<Regime>("regime")?,
    };
    std::fs::create_dir_all(&ctx.dir)?;
    let verdicts = match name {
        "fig1" => fig1(&ctx)?,
        "fig2" => fig2(&ctx)?,
        "fig3" => fig3(&ctx)?,
        "moment-curve" => moment_curve(&ctx, s)?,
        "instability" => instability(&ctx)?,
        "nbound" => nbound(&ctx)?,
        _ => unreachable!(),
    };
    write_table(
        &ctx.dir.join("acceptance.csv"),
        &["criterion_id", "value", "threshold", "pass"],
        verdicts.iter().map(|v| {
            vec![
                v.id.clone(),
                num(v.value),
                num(v.threshold),
                v.pass.map_or("n/a".to_string(), |p| p.to_string()),
            ]
        }),
    )?;
    let failed = verdicts.iter().filter(|v| v.pass == Some(false)).count();
    let checked = verdicts.iter().filter(|v| v.pass.is_some()).count();
    Ok(format!(
        "{name}: {} of {checked} checks passed; results in {}",
        checked - failed,
        ctx.dir.display()
    ))
}

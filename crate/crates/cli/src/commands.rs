use std::fs;
use std::path::{Path, PathBuf};

use maxagg::boxmodel::{self, BirthRule, BoxState, RunOptions, RunReport, Termination};
use maxagg::diagnostics::cross_check_l1;
use maxagg::mildsolver::{picard_solve, PicardOptions};
use maxagg::selfsimilar::{
    classify_samples, find_branches, scan_moment_curve, shape_classify, shoot, to_normalized, BranchSearch, Profile,
    Shape, ShootConfig,
};
use maxagg::{make_gaussian_initial, DiscreteDensity, Params};

use crate::config::Settings;
use crate::error::CliError;
use crate::output::{num, read_profile, write_profile, write_series, write_snapshot, write_table};

pub const DEFAULT_M_B: usize = 200;

pub const INITIAL_KEYS: &[&str] = &["m_b", "center", "dispersion", "profile", "perturb_cell", "perturb"];
const SHOOT_KEYS: &[&str] = &["delta", "rk_tol", "n_output"];

/// Allowed settings for a command: the given groups plus `out` and `workers`.
pub fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    let mut out = vec!["out", "workers"];
    for g in groups {
        out.extend_from_slice(g);
    }
    out
}

pub fn create_out_dir(s: &Settings) -> Result<PathBuf, CliError> {
    let dir = s.out_dir()?;
    fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

pub fn positive_k0(s: &Settings) -> Result<f64, CliError> {
    let k0: f64 = s.require("k0")?;
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(CliError::Config(format!("k0 must be positive, got {k0}")));
    }
    Ok(k0)
}

pub fn m_b(s: &Settings) -> Result<usize, CliError> {
    let m: usize = s.get_or("m_b", DEFAULT_M_B)?;
    if m < 2 {
        return Err(CliError::Config(format!("m_b must be at least 2, got {m}")));
    }
    Ok(m)
}

/// Initial density on `[0, 1]` with unit mass: a truncated Gaussian or a
/// `y,G` profile file, optionally with one cell scaled by `1 + perturb`.
pub fn initial_density(s: &Settings) -> Result<DiscreteDensity, CliError> {
    let m_b = m_b(s)?;
    let base = match s.get_str("profile") {
        Some(path) => {
            if s.contains("center") || s.contains("dispersion") {
                return Err(CliError::Config("give either profile or center/dispersion".into()));
            }
            let (ys, gs) = read_profile(Path::new(path))?;
            DiscreteDensity::from_samples_normalized(m_b, &ys, &gs)?
        }
        None => make_gaussian_initial(s.get_or("center", 0.5)?, s.get_or("dispersion", 0.3)?, m_b)?,
    };
    perturb(base, s.get("perturb_cell")?, s.get_or("perturb", 0.0)?)
}

pub fn perturb(d: DiscreteDensity, cell: Option<usize>, factor: f64) -> Result<DiscreteDensity, CliError> {
    let Some(cell) = cell else {
        return Ok(d);
    };
    if cell >= d.values().len() {
        return Err(CliError::Config(format!("perturb_cell {cell} outside the grid")));
    }
    let mut values = d.values().to_vec();
    values[cell] *= 1.0 + factor;
    Ok(DiscreteDensity::new(*d.grid(), values)?.normalized()?)
}

fn birth_rule(s: &Settings) -> Result<BirthRule, CliError> {
    match s.get_str("birth_rule").unwrap_or("verbatim") {
        "verbatim" => Ok(BirthRule::Verbatim),
        "exact-mass" | "exact_mass" => Ok(BirthRule::ExactMass),
        other => Err(CliError::Config(format!(
            "birth_rule must be verbatim or exact-mass, got {other:?}"
        ))),
    }
}

/// Shape of the rescaled profile `t² G(y t)` of a box state. Only `y ≥ 1/t`
/// is classified: below that lie the remains of the initial data.
pub fn rescaled_shape(state: &BoxState) -> Shape {
    let n = 512;
    let p = boxmodel::rescaled_profile(state, n);
    let start = p.ys.partition_point(|&y| y * state.time() < 1.0);
    classify_samples(&p.ys[start..], &p.vals[start..], 0.5 / n as f64)
}

/// Writes `series.csv` and one `snapshot_<step>.csv` per recorded snapshot.
pub fn write_run(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    write_series(&dir.join("series.csv"), &report.series)?;
    for (step, state) in &report.snapshots {
        write_snapshot(&dir.join(format!("snapshot_{step}.csv")), state)?;
    }
    Ok(())
}

pub fn simulate(s: &Settings) -> Result<String, CliError> {
    s.check_keys(&keys(&[&["k0", "steps", "snapshots", "birth_rule"], INITIAL_KEYS]))?;
    let k0 = positive_k0(s)?;
    let steps: usize = s.require("steps")?;
    let schedule = s.get_list::<usize>("snapshots")?.unwrap_or_else(|| vec![0, steps]);
    let initial = initial_density(s)?;
    let opts = RunOptions {
        steps,
        snapshot_schedule: schedule,
        birth_rule: birth_rule(s)?,
    };
    let report = boxmodel::run(&initial, &Params::new(k0)?, &opts)?;
    let dir = create_out_dir(s)?;
    write_run(&dir, &report)?;
    let last = report.final_state();
    if let Termination::Degenerate { step, error } = &report.termination {
        return Err(CliError::Degenerate(format!(
            "run stopped at step {step} ({error}); partial output in {}",
            dir.display()
        )));
    }
    Ok(format!(
        "steps={} t={} N={} mass={} clamped={} rescaled_shape={}",
        report.steps_completed,
        num(last.time()),
        num(last.number()),
        num(last.mass()),
        report.clamp_count,
        rescaled_shape(last)
    ))
}

fn shoot_config(s: &Settings, d: f64, g_half: f64) -> Result<ShootConfig, CliError> {
    let base = ShootConfig::default();
    let cfg = ShootConfig {
        d,
        g_half,
        delta: s.get_or("delta", base.delta)?,
        rk_tol: s.get_or("rk_tol", base.rk_tol)?,
        n_output: s.get_or("n_output", base.n_output)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub const SUMMARY_HEADER: [&str; 8] = ["branch", "k0", "G_half", "N", "m", "G1", "tail_exp", "shape"];

pub fn summary_row(name: &str, k0: f64, p: &Profile, shape: Shape) -> Vec<String> {
    vec![
        name.to_string(),
        num(k0),
        num(p.g_half),
        num(p.n),
        num(p.m),
        num(p.g1),
        num(p.tail_exp),
        shape.to_string(),
    ]
}

/// `k0 = ...` gives both normalized branches; `g_half = ...` (with `d`,
/// default 1) gives one shot of the unnormalized equation.
pub fn selfsimilar(s: &Settings) -> Result<String, CliError> {
    s.check_keys(&keys(&[&["k0", "g_half", "d", "tol"], SHOOT_KEYS]))?;
    let rows = match (s.contains("k0"), s.contains("g_half")) {
        (true, true) => return Err(CliError::Config("give either k0 or g_half, not both".into())),
        (false, false) => return Err(CliError::Config("missing k0 or g_half".into())),
        (true, false) => {
            let k0 = positive_k0(s)?;
            let search = BranchSearch {
                tol: s.get_or("tol", BranchSearch::default().tol)?,
                shoot: shoot_config(s, 1.0, 2.0)?,
                ..Default::default()
            };
            let pair = find_branches(k0, &search)?;
            let dir = create_out_dir(s)?;
            let mut rows = Vec::new();
            for (name, b) in [("subcritical", &pair.subcritical), ("supercritical", &pair.supercritical)] {
                write_profile(&dir.join(format!("profile_{name}.csv")), &b.profile.ys, &b.profile.g_vals)?;
                rows.push(summary_row(name, b.k0, &b.profile, b.shape));
            }
            rows
        }
        (false, true) => {
            let cfg = shoot_config(s, s.get_or("d", 1.0)?, s.require("g_half")?)?;
            let p = shoot(&cfg)?;
            let (k0, _) = to_normalized(&p)?;
            let shape = shape_classify(&p);
            let dir = create_out_dir(s)?;
            write_profile(&dir.join(format!("profile_{shape}.csv")), &p.ys, &p.g_vals)?;
            vec![summary_row(shape.as_str(), k0, &p, shape)]
        }
    };
    let dir = s.out_dir()?;
    write_table(&dir.join("summary.csv"), &SUMMARY_HEADER, rows.clone())?;
    Ok(rows
        .iter()
        .map(|r| {
            SUMMARY_HEADER
                .iter()
                .zip(r)
                .map(|(h, v)| format!("{h}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

pub fn scan_values(s: &Settings) -> Result<Vec<f64>, CliError> {
    let lo: f64 = s.get_or("g_half_min", 0.2)?;
    let hi: f64 = s.get_or("g_half_max", 4.0)?;
    let step: f64 = s.get_or("g_half_step", 0.05)?;
    if !(lo > 0.0 && hi >= lo && step > 0.0) {
        return Err(CliError::Config(format!("bad scan range [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

/// Writes the moment curve table; returns `(G_half, N)` of successful shots.
pub fn write_moment_curve(dir: &Path, s: &Settings) -> Result<Vec<(f64, f64)>, CliError> {
    let values = scan_values(s)?;
    let cfg = shoot_config(s, s.get_or("d", 1.0)?, 2.0)?;
    let samples = scan_moment_curve(&values, cfg.d, &cfg);
    write_table(
        &dir.join("moment_curve.csv"),
        &["G_half", "N", "status"],
        samples.iter().map(|m| match &m.n {
            Ok(n) => vec![num(m.g_half), num(*n), "ok".to_string()],
            Err(e) => vec![num(m.g_half), "NaN".to_string(), e.to_string()],
        }),
    )?;
    Ok(samples
        .iter()
        .filter_map(|m| m.n.as_ref().ok().map(|n| (m.g_half, *n)))
        .collect())
}

pub fn scan(s: &Settings) -> Result<String, CliError> {
    s.check_keys(&keys(&[&["d", "g_half_min", "g_half_max", "g_half_step"], SHOOT_KEYS]))?;
    let dir = create_out_dir(s)?;
    let curve = write_moment_curve(&dir, s)?;
    let min = curve.iter().copied().fold(None, |acc: Option<(f64, f64)>, p| match acc {
        Some(a) if a.1 <= p.1 => Some(a),
        _ => Some(p),
    });
    Ok(match min {
        Some((g, n)) => format!("samples={} min_N={} at G_half={}", curve.len(), num(n), num(g)),
        None => "no successful shots".to_string(),
    })
}

pub fn verify(s: &Settings) -> Result<String, CliError> {
    s.check_keys(&keys(&[&["k0", "t_final", "cells_per_unit", "tol", "max_iter"], INITIAL_KEYS]))?;
    let k0 = positive_k0(s)?;
    let t_final: f64 = s.get_or("t_final", 1.1)?;
    if !(t_final > 1.0 && t_final <= 1.5) {
        return Err(CliError::Config(format!("t_final must lie in (1, 1.5], got {t_final}")));
    }
    let m_b = m_b(s)?;
    let steps = ((t_final - 1.0) * m_b as f64).round() as usize;
    if (1.0 + steps as f64 / m_b as f64 - t_final).abs() > 1e-9 || steps == 0 {
        return Err(CliError::Config(format!(
            "t_final must be 1 + j/m_b for a positive integer j, got {t_final}"
        )));
    }
    let cells: usize = s.get_or("cells_per_unit", 2 * m_b)?;
    if cells % m_b != 0 {
        return Err(CliError::Config("cells_per_unit must be a multiple of m_b".into()));
    }
    let opts = PicardOptions {
        t_final,
        cells_per_unit: cells,
        tol: s.get_or("tol", PicardOptions::default().tol)?,
        max_iter: s.get_or("max_iter", PicardOptions::default().max_iter)?,
    };
    let initial = initial_density(s)?;
    let dir = create_out_dir(s)?;
    let residuals_path = dir.join("residuals.csv");
    let write_residuals = |r: &[f64]| {
        write_table(
            &residuals_path,
            &["iterate", "residual"],
            r.iter().enumerate().map(|(k, v)| vec![(k + 1).to_string(), num(*v)]),
        )
    };
    let (grid, report) = match picard_solve(&initial, k0, &opts) {
        Ok(r) => r,
        Err(maxagg::Error::NonConvergence { residuals }) => {
            write_residuals(&residuals)?;
            return Err(CliError::NonConvergence(format!(
                "Picard iteration used all {} iterates; last residual {}",
                residuals.len(),
                residuals.last().map(|r| num(*r)).unwrap_or_default()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    write_residuals(&report.residual_history)?;
    let run = boxmodel::run(
        &initial,
        &Params::new(k0)?,
        &RunOptions {
            steps,
            ..Default::default()
        },
    )?;
    if let Termination::Degenerate { step, error } = &run.termination {
        return Err(CliError::Degenerate(format!("box run stopped at step {step}: {error}")));
    }
    let l1 = cross_check_l1(&grid, run.final_state())?;
    let rows = [
        ("t_final", num(t_final)),
        ("k0", num(k0)),
        ("l1_discrepancy", num(l1)),
        ("iterates", report.iterates_used.to_string()),
        ("converged", report.converged.to_string()),
        ("final_residual", num(*report.residual_history.last().unwrap_or(&f64::NAN))),
        ("residuals_decreasing", report.residuals_decreasing().to_string()),
        ("boundary_defect", num(report.boundary_defect)),
        ("mass_min", num(report.mass_range.0)),
        ("mass_max", num(report.mass_range.1)),
    ];
    write_table(
        &dir.join("verify.csv"),
        &["quantity", "value"],
        rows.iter().map(|(k, v)| vec![k.to_string(), v.clone()]),
    )?;
    Ok(rows.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
}

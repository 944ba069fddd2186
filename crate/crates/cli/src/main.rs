use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod experiment;
mod output;

use config::Settings;
use error::CliError;

/// Numerics for mass aggregation with a maximal size.
///
/// Settings are flat `key = value` pairs, read from `--config FILE` and then
/// from `--key value` arguments; later settings win.
#[derive(Parser, Debug)]
#[command(name = "maxagg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Config file with one `key = value` per line.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Settings as `--key value` pairs.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    settings: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the box model and write series.csv and snapshot_<step>.csv.
    ///
    /// Keys: k0, steps, snapshots (comma list, default 0,steps), birth_rule
    /// (verbatim | exact-mass), m_b (200), center (0.5), dispersion (0.3) or
    /// profile (y,G csv), perturb_cell, perturb, out.
    Simulate(Common),
    /// Self-similar profiles: both branches for k0, or one shot for g_half and d.
    ///
    /// Keys: k0 | g_half, d (1), tol, delta, rk_tol, n_output, out.
    Selfsimilar(Common),
    /// Tabulate N against G(1/2) into moment_curve.csv.
    ///
    /// Keys: d (1), g_half_min (0.2), g_half_max (4), g_half_step (0.05),
    /// delta, rk_tol, n_output, out.
    Scan(Common),
    /// Compare Picard mild solution and box model at t_final.
    ///
    /// Keys: k0, t_final (1.1), cells_per_unit (2 m_b), tol, max_iter, and the
    /// initial-data keys of `simulate`.
    Verify(Common),
    /// Run a figure recipe: fig1, fig2, fig3, moment-curve, instability, nbound.
    ///
    /// Keys: m_b, max_steps (cap per run), regime (unscaled | rescaled), workers, out.
    Experiment {
        name: String,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(common: &Common) -> Result<Settings, CliError> {
    let mut s = match &common.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::default(),
    };
    s.apply_args(&common.settings)?;
    Ok(s)
}

/// `workers` setting, else `MAXAGG_WORKERS`, else all cores.
fn worker_count(s: &Settings) -> Result<usize, CliError> {
    let n = match s.get::<usize>("workers")? {
        Some(n) => n,
        None => match std::env::var("MAXAGG_WORKERS") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("MAXAGG_WORKERS={v:?}: {e}")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if n == 0 {
        return Err(CliError::Config("worker count must be positive".into()));
    }
    Ok(n)
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    let (common, name) = match &cli.command {
        Command::Simulate(c) | Command::Selfsimilar(c) | Command::Scan(c) | Command::Verify(c) => (c, None),
        Command::Experiment { name, common } => (common, Some(name.as_str())),
    };
    let s = settings(common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(&s)?)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate(_) => commands::simulate(&s),
        Command::Selfsimilar(_) => commands::selfsimilar(&s),
        Command::Scan(_) => commands::scan(&s),
        Command::Verify(_) => commands::verify(&s),
        Command::Experiment { .. } => experiment::experiment(name.unwrap_or_default(), &s),
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("maxagg: {e}");
            e.exit_code()
        }
    }
}

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use zeno_core::bath::BathConfig;

use crate::commands::{default_summary_path, execute, threads_from_env, Request, RunManifest, SweepSpec};
use crate::config::{default_bath_dt, parse_list, parse_zeno_config};
use crate::error::{lift, Result};

#[derive(Debug, Parser)]
#[command(name = "zeno-sim", version, about = "Quantum Zeno effect simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Projection-formula table for a list of pulse counts.
    Oracle {
        /// Comma-separated pulse counts, e.g. 1,2,4,8
        #[arg(long, allow_hyphen_values = true)]
        n: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// One Zeno run: trajectory plus a one-row summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        summary: PathBuf,
    },
    /// Vary one parameter of a base config; one row per value.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// n_pulses, gamma, omega_opt or pulse_duration
        #[arg(long)]
        param: String,
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-level emitter decaying into a discrete mode bath.
    Ww {
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        spacing: f64,
        #[arg(long)]
        coupling: f64,
        #[arg(long = "t-max")]
        t_max: f64,
        /// Defaults to 0.01, smaller for wide bands
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out stem>_summary.csv`
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Coherence lifetime under a continuous drive, per decay rate.
    Decohere {
        #[arg(long, allow_hyphen_values = true)]
        gamma: String,
        #[arg(long = "omega-opt-ratio")]
        omega_opt_ratio: f64,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out stem>_summary.csv`
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Regenerate outputs from a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Write into this directory instead of the recorded paths
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn outputs(pairs: &[(&str, PathBuf)]) -> BTreeMap<String, PathBuf> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Resolves arguments into a manifest; nothing is computed yet.
pub fn plan(command: Command) -> Result<RunManifest> {
    Ok(match command {
        Command::Oracle { n, out } => {
            RunManifest::new(Request::Oracle { n_list: parse_list(&n, "n")? }, outputs(&[("out", out)]))
        }
        Command::Run { config, traj, summary } => RunManifest::new(
            Request::Run { config: parse_zeno_config(&config)? },
            outputs(&[("traj", traj), ("summary", summary)]),
        ),
        Command::Sweep { config, param, values, out } => {
            let spec = SweepSpec::new(param.parse()?, parse_list(&values, "values")?, parse_zeno_config(&config)?)?;
            RunManifest::new(Request::Sweep { spec }, outputs(&[("out", out)]))
        }
        Command::Ww { modes, spacing, coupling, t_max, dt, stride, out, summary } => {
            let config = BathConfig {
                n_modes: modes,
                mode_spacing: spacing,
                coupling,
                t_max,
                dt: dt.unwrap_or_else(|| default_bath_dt(modes, spacing)),
                record_stride: stride,
            };
            config.validate().map_err(lift)?;
            let summary = summary.unwrap_or_else(|| default_summary_path(&out));
            RunManifest::new(Request::Ww { config }, outputs(&[("out", out), ("summary", summary)]))
        }
        Command::Decohere { gamma, omega_opt_ratio, out, summary } => {
            let summary = summary.unwrap_or_else(|| default_summary_path(&out));
            RunManifest::new(
                Request::Decohere { gamma_list: parse_list(&gamma, "gamma")?, omega_opt_ratio },
                outputs(&[("out", out), ("summary", summary)]),
            )
        }
        Command::Replay { manifest, out_dir } => {
            let mut m = RunManifest::load(&manifest)?;
            if let Some(dir) = out_dir {
                m.relocate(&dir);
            }
            m
        }
    })
}

fn run(cli: Cli) -> Result<Vec<String>> {
    let threads = threads_from_env()?;
    let manifest = plan(cli.command)?;
    execute(&manifest, threads).map(|o| o.warnings)
}

/// Parses `args`, runs the subcommand and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(warnings) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `cdd`: scenario runner for continuous dynamical decoupling simulations.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 numerical failure
//! (including fits that do not converge), 4 I/O or CSV parse error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use cdd_core::model_fitting::ModelKind;
use cdd_core::presets::NvPreset;
use clap::{Args, Parser, Subcommand};

use commands::fit::FitArgs;
use config::{Grid, RamseyKindConfig, ScenarioConfig};
use error::CliError;
use output::Output;

#[derive(Parser, Debug)]
#[command(name = "cdd", version, about = "Continuous dynamical decoupling scenarios for a mechanically driven NV spin")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Scenario TOML file. Without it the built-in preset is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in preset (nv1 or nv2) used when no config file is given.
    #[arg(long, global = true, default_value = "nv2", conflicts_with = "config")]
    preset: String,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the Monte Carlo shots per point.
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dephasing budget and predicted T2* at the configured drive.
    Rates,
    /// T2* against drive amplitude: predictions plus simulate-then-fit.
    T2scan {
        /// Comma-separated drive list, kHz.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        omega: Option<Vec<f64>>,
        /// Delay grid START:STOP:STEP in µs.
        #[arg(long, value_parser = parse_grid)]
        tau: Option<Grid>,
        #[arg(long)]
        analytic_only: bool,
    },
    /// Simulated Ramsey trace with its spectrum and model fit.
    Ramsey {
        #[arg(long, value_parser = parse_kind)]
        kind: Option<RamseyKindConfig>,
        /// Drive, kHz.
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, value_parser = parse_grid)]
        tau: Option<Grid>,
    },
    /// Spectroscopy scans with joint line fits.
    Spectra {
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        omega: Option<Vec<f64>>,
        /// Detuning grid START:STOP:STEP in kHz.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        detuning: Option<Grid>,
    },
    /// Analytic decay envelopes.
    Envelope {
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, value_parser = parse_grid)]
        tau: Option<Grid>,
    },
    /// Fit a trace CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<ModelKind>,
        /// Undressed spectrum, required by the spectrum_joint model.
        #[arg(long)]
        undressed: Option<PathBuf>,
        /// Contrast reference for the {m,p} models.
        #[arg(long)]
        p0_ud: Option<f64>,
    },
    /// Print the resolved config as TOML.
    ShowConfig,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected START:STOP:STEP, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Grid { start: num(a)?, stop: num(b)?, step: num(c)? })
}

fn parse_kind(s: &str) -> Result<RamseyKindConfig, String> {
    match s {
        "undressed" => Ok(RamseyKindConfig::Undressed),
        "dressed_0p" => Ok(RamseyKindConfig::Dressed0p),
        "dressed_mp" => Ok(RamseyKindConfig::DressedMp),
        "max_protection" => Ok(RamseyKindConfig::MaxProtection),
        _ => Err(format!("unknown kind {s:?} (undressed, dressed_0p, dressed_mp, max_protection)")),
    }
}

fn resolve(g: &Global, command: &Command) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &g.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => {
            let preset = NvPreset::by_name(&g.preset)
                .ok_or_else(|| CliError::Config(format!("--preset: unknown preset {:?}", g.preset)))?;
            ScenarioConfig::from_preset(&preset, 581.0)
        }
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(n) = g.shots {
        cfg.shots = n;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    match command {
        Command::T2scan { omega, tau, analytic_only } => {
            if let Some(w) = omega {
                cfg.t2scan.omega_khz = w.clone();
            }
            if let Some(t) = tau {
                cfg.t2scan.tau_us = *t;
            }
            cfg.t2scan.analytic_only |= analytic_only;
        }
        Command::Ramsey { kind, omega, tau } => {
            if let Some(k) = kind {
                cfg.ramsey.kind = *k;
            }
            if let Some(w) = omega {
                cfg.system.omega_khz = *w;
            }
            if let Some(t) = tau {
                cfg.ramsey.tau_us = *t;
            }
        }
        Command::Spectra { omega, detuning } => {
            if let Some(w) = omega {
                cfg.spectra.omega_khz = w.clone();
            }
            if let Some(d) = detuning {
                cfg.spectra.detuning_khz = *d;
            }
        }
        Command::Envelope { omega, tau } => {
            if let Some(w) = omega {
                cfg.system.omega_khz = *w;
            }
            if let Some(t) = tau {
                cfg.envelope.tau_us = *t;
            }
        }
        Command::Fit { p0_ud: Some(p), .. } => cfg.fit.p0_ud = Some(*p),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.global, &cli.command)?;
    let name = match &cli.command {
        Command::Rates => "rates",
        Command::T2scan { .. } => "t2scan",
        Command::Ramsey { .. } => "ramsey",
        Command::Spectra { .. } => "spectra",
        Command::Envelope { .. } => "envelope",
        Command::Fit { .. } => "fit",
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            return Ok(());
        }
    };
    let out = Output::new(cfg.out_dir.clone(), cfg.digest(), cfg.seed, name)?;
    match cli.command {
        Command::Rates => commands::rates::run(&cfg, &out),
        Command::T2scan { .. } => commands::t2scan::run(&cfg, &out),
        Command::Ramsey { .. } => commands::ramsey::run(&cfg, &out),
        Command::Spectra { .. } => commands::spectra::run(&cfg, &out),
        Command::Envelope { .. } => commands::envelope::run(&cfg, &out),
        Command::Fit { input, model, undressed, .. } => {
            commands::fit::run(&cfg, &out, &FitArgs { input, model, undressed })
        }
        Command::ShowConfig => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cdd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag() {
        let g = parse_grid("-600:600:4").unwrap();
        assert_eq!((g.start, g.stop, g.step), (-600.0, 600.0, 4.0));
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a:2:3").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

//! Spectroscopy scans at a list of drives, each fitted jointly with the
//! undressed scan.

use cdd_core::model_fitting::{
    fit_model, model_spectrum_joint, models::spectrum_centres, spectrum_data, FitOutcome, ModelKind, SeedMode,
};
use cdd_core::pulse_sim::{simulate_spectrum, Trace};
use cdd_core::spin_model::SystemParams;
use cdd_core::units::{angular_to_khz, khz_to_angular};
use rayon::prelude::*;

use super::{fit_options, omega_tag, META_OMEGA_KHZ};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, write_fit, Output};

pub const SUMMARY_COLUMNS: [&str; 7] =
    ["omega_khz", "fit_omega_khz", "fit_omega_ci_low_khz", "fit_omega_ci_high_khz", "fit_delta_khz", "splitting_khz", "fit_status"];

fn spectrum_params(cfg: &ScenarioConfig, omega_khz: f64) -> Result<SystemParams, CliError> {
    let p = cfg.params(omega_khz)?;
    Ok(if cfg.spectra.hyperfine { p } else { p.with_a_par(0.0) })
}

fn scan(cfg: &ScenarioConfig, omega_khz: f64, seed: u64) -> Result<Trace, CliError> {
    let grid: Vec<f64> = cfg.spectra.detuning_khz.points().into_iter().map(khz_to_angular).collect();
    let mut sim = cfg.sim_config(omega_khz);
    sim.seed = seed;
    let mut t = simulate_spectrum(&grid, &spectrum_params(cfg, omega_khz)?, &sim, &cfg.protocol_settings())?;
    t.metadata.extra.insert(META_OMEGA_KHZ.into(), omega_khz);
    Ok(t)
}

/// Joint fit of a dressed scan with the undressed one, started at the nominal drive.
pub fn fit_joint(dressed: &Trace, undressed: &Trace, omega_guess: f64, cfg: &ScenarioConfig) -> Result<FitOutcome, CliError> {
    let model = model_spectrum_joint().with_initial("omega", omega_guess.max(1e-3));
    Ok(fit_model(
        ModelKind::SpectrumJoint,
        &model,
        &spectrum_data(dressed, undressed),
        &fit_options(cfg),
        Some(SeedMode::All),
    )?)
}

pub fn run(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    let mut undressed = scan(cfg, 0.0, cfg.seed)?;
    out.trace("spectrum_undressed.csv", &mut undressed)?;

    let dressed: Vec<(f64, Trace, Option<FitOutcome>)> = cfg
        .spectra
        .omega_khz
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            let t = scan(cfg, w, cfg.seed.wrapping_add(1 + i as u64))?;
            let fit = if w > 0.0 { Some(fit_joint(&t, &undressed, khz_to_angular(w), cfg)?) } else { None };
            Ok((w, t, fit))
        })
        .collect::<Result<_, CliError>>()?;

    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (w, mut trace, fit) in dressed {
        let stem = format!("spectrum_{}", omega_tag(w));
        out.trace(&format!("{stem}.csv"), &mut trace)?;
        let Some(fit) = fit else { continue };
        write_fit(out, &stem, &fit)?;
        let get = |n: &str| fit.get(n).expect("joint model parameter");
        let (lo, hi) = spectrum_centres(get("delta"), get("omega"), get("w0m1"));
        let (ci_lo, ci_hi) = fit.ci_of("omega").expect("joint model parameter");
        println!(
            "Ω/2π = {w:>7.1} kHz  fitted {:>8.2} kHz  Δ/2π {:>7.2} kHz  dip splitting {:>8.2} kHz",
            angular_to_khz(get("omega")),
            angular_to_khz(get("delta")),
            angular_to_khz(hi - lo)
        );
        if !fit.converged() {
            failed.push(w);
        }
        rows.push(vec![
            fmt_f64(w),
            fmt_f64(angular_to_khz(get("omega"))),
            fmt_f64(angular_to_khz(ci_lo)),
            fmt_f64(angular_to_khz(ci_hi)),
            fmt_f64(angular_to_khz(get("delta"))),
            fmt_f64(angular_to_khz(hi - lo)),
            format!("{:?}", fit.status).to_lowercase(),
        ]);
    }
    out.table("spectra_summary.csv", &SUMMARY_COLUMNS, &rows)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("spectrum fits did not converge at Ω/2π = {failed:?} kHz")))
    }
}

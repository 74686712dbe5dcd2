pub mod envelope;
pub mod fit;
pub mod ramsey;
pub mod rates;
pub mod spectra;
pub mod t2scan;

use cdd_core::model_fitting::{build_model, fit_model, ramsey_data, FitOptions, FitOutcome, ModelInputs, ModelKind, SeedMode};
use cdd_core::pulse_sim::{undressed_reference, RamseyKind, Trace};
use cdd_core::spin_model::SystemParams;
use cdd_core::units::{angular_to_khz, khz_to_angular};

use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Metadata keys recorded on Ramsey traces so `cdd fit` can rebuild the model.
pub const META_P0_UD: &str = "p0_ud";
pub const META_A_PAR_KHZ: &str = "a_par_khz";
pub const META_OMEGA_ROT_KHZ: &str = "omega_rot_khz";
pub const META_GAMMA_SIGMA_B_KHZ: &str = "gamma_sigma_b_khz";
pub const META_OMEGA_KHZ: &str = "omega_khz";
pub const META_TAU_OFFSET_US: &str = "tau_offset_us";

pub fn fit_options(cfg: &ScenarioConfig) -> FitOptions {
    FitOptions { use_sigma: cfg.fit.weighted, ..FitOptions::default() }
}

/// Contrast reference for the {m,p} models: configured, or simulated on `tau`.
pub fn p0_reference(cfg: &ScenarioConfig, kind: RamseyKind, tau: &[f64], params: &SystemParams) -> Result<f64, CliError> {
    match cfg.fit.p0_ud {
        Some(p) => Ok(p),
        None => Ok(undressed_reference(kind, tau, params, &cfg.protocol_settings(), cfg.sim_config(0.0).carbon_weights)?),
    }
}

/// Fixed model inputs as recorded in trace metadata.
pub fn record_inputs(trace: &mut Trace, inputs: &ModelInputs, omega: f64) {
    let extra = &mut trace.metadata.extra;
    extra.insert(META_P0_UD.into(), inputs.p0_ud);
    extra.insert(META_A_PAR_KHZ.into(), angular_to_khz(inputs.a_par));
    extra.insert(META_OMEGA_ROT_KHZ.into(), angular_to_khz(inputs.omega_rot));
    extra.insert(META_GAMMA_SIGMA_B_KHZ.into(), angular_to_khz(inputs.gamma_sigma_b));
    extra.insert(META_OMEGA_KHZ.into(), angular_to_khz(omega));
    extra.insert(META_TAU_OFFSET_US.into(), inputs.tau_offset);
}

/// Seeds and fits a Ramsey model; `omega_guess` is the drive the trace was
/// simulated (or measured) at.
pub fn fit_ramsey(
    kind: ModelKind,
    trace: &Trace,
    inputs: &ModelInputs,
    omega_guess: f64,
    opts: &FitOptions,
) -> Result<FitOutcome, CliError> {
    let mut model = build_model(kind, inputs);
    if model.index("omega").is_some() && omega_guess > 0.0 {
        model = model.with_initial("omega", omega_guess);
    }
    Ok(fit_model(kind, &model, &ramsey_data(trace), opts, Some(SeedMode::All))?)
}

pub fn model_inputs(cfg: &ScenarioConfig, params: &SystemParams, p0_ud: f64, kind: RamseyKind) -> ModelInputs {
    ModelInputs {
        omega_rot: khz_to_angular(cfg.protocol.omega_rot_khz),
        a_par: params.a_par,
        p0_ud,
        gamma_sigma_b: params.gamma * cfg.sigma_b(),
        tau_offset: cfg.protocol_settings().pulse_delay_offset(kind),
    }
}

/// `Numerical` error if the fit did not converge; artifacts are written first.
pub fn require_converged(what: &str, outcome: &FitOutcome) -> Result<(), CliError> {
    if outcome.converged() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{what}: fit ended with status {:?}", outcome.status)))
    }
}

/// `470` or `455.7`, for file names.
pub fn omega_tag(omega_khz: f64) -> String {
    format!("omega{omega_khz}khz")
}

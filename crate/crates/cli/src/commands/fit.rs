//! Fit of an existing trace CSV. Model inputs come from the trace sidecar
//! when present, otherwise from the config.

use std::path::{Path, PathBuf};

use cdd_core::model_fitting::{ModelInputs, ModelKind};
use cdd_core::pulse_sim::{RamseyKind, Trace, TraceError};
use cdd_core::units::khz_to_angular;

use super::{
    fit_options, fit_ramsey, model_inputs, p0_reference, require_converged, spectra, META_A_PAR_KHZ,
    META_GAMMA_SIGMA_B_KHZ, META_OMEGA_KHZ, META_OMEGA_ROT_KHZ, META_P0_UD, META_TAU_OFFSET_US,
};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{write_fit, Output};

pub struct FitArgs {
    pub input: PathBuf,
    pub model: Option<ModelKind>,
    pub undressed: Option<PathBuf>,
}

fn load(path: &Path) -> Result<Trace, CliError> {
    Trace::load(path).map_err(|e| match e {
        TraceError::Parse { line, message } => CliError::Io(format!("{}:{line}: {message}", path.display())),
        other => CliError::Io(format!("{}: {other}", path.display())),
    })
}

/// Model implied by the protocol recorded in the sidecar.
pub fn model_for_kind(kind: &str) -> Option<ModelKind> {
    match kind {
        "undressed_0m1" => Some(ModelKind::Undressed),
        "dressed_0p" => Some(ModelKind::Ramsey0p),
        "dressed_mp" => Some(ModelKind::RamseyMp),
        "max_protection" => Some(ModelKind::MaxProtection),
        "spectrum" => Some(ModelKind::SpectrumJoint),
        _ => None,
    }
}

fn ramsey_kind(model: ModelKind) -> RamseyKind {
    match model {
        ModelKind::Undressed => RamseyKind::Undressed0m1,
        ModelKind::Ramsey0p => RamseyKind::Dressed0p,
        ModelKind::MaxProtection => RamseyKind::MaxProtection,
        _ => RamseyKind::DressedMp,
    }
}

pub fn run(cfg: &ScenarioConfig, out: &Output, args: &FitArgs) -> Result<(), CliError> {
    let trace = load(&args.input)?;
    let model = match args.model.or_else(|| model_for_kind(&trace.metadata.kind)) {
        Some(m) => m,
        None => return Err(CliError::Config("--model is required when the trace has no sidecar naming its protocol".into())),
    };
    let extra = &trace.metadata.extra;
    let omega_guess = khz_to_angular(extra.get(META_OMEGA_KHZ).copied().unwrap_or(cfg.system.omega_khz));
    let stem = format!(
        "fit_{}",
        args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into())
    );

    let outcome = if model == ModelKind::SpectrumJoint {
        let Some(path) = &args.undressed else {
            return Err(CliError::Config("--undressed is required for the spectrum_joint model".into()));
        };
        spectra::fit_joint(&trace, &load(path)?, omega_guess, cfg)?
    } else {
        let p = cfg.params(cfg.system.omega_khz)?;
        let defaults = |p0: f64| model_inputs(cfg, &p, p0, ramsey_kind(model));
        let p0_ud = match extra.get(META_P0_UD) {
            Some(&v) => v,
            None if matches!(model, ModelKind::RamseyMp | ModelKind::MaxProtection) => {
                let tau: Vec<f64> = trace.abscissa.iter().copied().filter(|t| *t >= 0.0).collect();
                p0_reference(cfg, ramsey_kind(model), &tau, &p)?
            }
            None => 1.0,
        };
        let d = defaults(p0_ud);
        let inputs = ModelInputs {
            omega_rot: extra.get(META_OMEGA_ROT_KHZ).map_or(d.omega_rot, |&v| khz_to_angular(v)),
            a_par: extra.get(META_A_PAR_KHZ).map_or(d.a_par, |&v| khz_to_angular(v)),
            p0_ud,
            gamma_sigma_b: extra.get(META_GAMMA_SIGMA_B_KHZ).map_or(d.gamma_sigma_b, |&v| khz_to_angular(v)),
            tau_offset: extra.get(META_TAU_OFFSET_US).copied().unwrap_or(d.tau_offset),
        };
        fit_ramsey(model, &trace, &inputs, omega_guess, &fit_options(cfg))?
    };
    write_fit(out, &stem, &outcome)?;
    print!("{}", cdd_core::model_fitting::format_report(&outcome));
    require_converged(&stem, &outcome)
}

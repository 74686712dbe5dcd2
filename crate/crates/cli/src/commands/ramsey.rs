//! One simulated Ramsey trace, its spectrum and a fit of the matching model.

use cdd_core::pulse_sim::{fourier_magnitude, simulate_ramsey};

use super::{fit_options, fit_ramsey, model_inputs, p0_reference, record_inputs, require_converged};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, write_fit, Output};

pub fn run(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    let which = cfg.ramsey.kind;
    let kind = which.kind();
    let p = cfg.params(cfg.system.omega_khz)?;
    let tau = cfg.ramsey.tau_us.points();
    let mut trace = simulate_ramsey(kind, &tau, &p, &cfg.sim_config(cfg.system.omega_khz), &cfg.protocol_settings())?;
    let inputs = model_inputs(cfg, &p, p0_reference(cfg, kind, &tau, &p)?, kind);
    record_inputs(&mut trace, &inputs, p.omega);

    let stem = format!("ramsey_{}", kind.as_str());
    out.trace(&format!("{stem}.csv"), &mut trace)?;

    let spectrum = fourier_magnitude(&trace).map_err(|e| CliError::Numerical(e.to_string()))?;
    let rows: Vec<Vec<String>> = spectrum
        .frequency_khz
        .iter()
        .zip(&spectrum.magnitude)
        .map(|(f, m)| vec![fmt_f64(*f), fmt_f64(*m)])
        .collect();
    out.table(&format!("{stem}_fourier.csv"), &["frequency_khz", "magnitude"], &rows)?;

    let fit = fit_ramsey(which.model(), &trace, &inputs, p.omega, &fit_options(cfg))?;
    write_fit(out, &stem, &fit)?;
    print!("{}", cdd_core::model_fitting::format_report(&fit));
    require_converged(&stem, &fit)
}

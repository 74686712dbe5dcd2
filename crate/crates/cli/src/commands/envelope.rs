//! Tabulated decay envelopes at the configured drive: the second-order
//! {m,p} envelope f, the max-protection envelope h and Gaussian comparisons.

use cdd_core::dephasing_analytics::{
    envelope_gaussian, envelope_max_protection, envelope_second_order, mp_envelope, one_over_e_time, predicted_t2_mp,
    EnvelopeSpec, ExpansionOrder,
};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, Output};

pub const COLUMNS: [&str; 6] = ["tau_us", "f_second", "f_with_amplitude", "h_max_protection", "gaussian_first", "gaussian_second"];

#[derive(Debug, Serialize)]
struct Summary {
    omega_khz: f64,
    /// 1/e times of the tabulated curves.
    t2_first_us: f64,
    t2_second_us: f64,
    t2_with_amplitude_us: Option<f64>,
}

pub fn run(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    if !(cfg.system.omega_khz > 0.0) {
        return Err(CliError::Config("system.omega_khz: the envelope command needs a nonzero drive".into()));
    }
    let p = cfg.params(cfg.system.omega_khz)?;
    let (g, sb) = (p.gamma, cfg.sigma_b());
    let so = cfg.noise_spec(cfg.system.omega_khz).sigma_omega()?;
    let t_first = predicted_t2_mp(p.omega, p.a_par, sb, g, 0.0, ExpansionOrder::First)?;
    let t_second = one_over_e_time(&EnvelopeSpec::SecondOrder { omega: p.omega, sigma_b: sb, a_par: p.a_par, gamma: g })?;
    let full = mp_envelope(p.omega, p.a_par, sb, g, so)?;

    let rows: Vec<Vec<String>> = cfg
        .envelope
        .tau_us
        .points()
        .into_iter()
        .map(|tau| {
            Ok(vec![
                fmt_f64(tau),
                fmt_f64(envelope_second_order(tau, p.omega, sb, p.a_par, g)),
                fmt_f64(full.eval(tau)),
                fmt_f64(envelope_max_protection(tau, p.omega, sb, g)?),
                fmt_f64(envelope_gaussian(tau, t_first)),
                fmt_f64(envelope_gaussian(tau, t_second)),
            ])
        })
        .collect::<Result<_, CliError>>()?;
    out.table("envelope.csv", &COLUMNS, &rows)?;

    let summary = Summary {
        omega_khz: cfg.system.omega_khz,
        t2_first_us: t_first,
        t2_second_us: t_second,
        t2_with_amplitude_us: one_over_e_time(&full).ok(),
    };
    println!(
        "Ω/2π = {:.2} kHz  T2* first {:.3} µs  second {:.3} µs",
        summary.omega_khz, summary.t2_first_us, summary.t2_second_us
    );
    out.json("envelope_summary.json", &summary)?;
    Ok(())
}

//! T₂* of the {m,p} qubit against drive: analytic predictions and a
//! simulate-then-fit estimate per point.

use cdd_core::dephasing_analytics::{predicted_t2_mp, DephasingError, ExpansionOrder};
use cdd_core::model_fitting::{FitStatus, ModelKind};
use cdd_core::pulse_sim::{simulate_ramsey, RamseyKind};
use rayon::prelude::*;

use super::{fit_options, fit_ramsey, model_inputs, omega_tag, p0_reference, record_inputs};
use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, Output};

pub const COLUMNS: [&str; 6] = ["omega_khz", "t2_first_us", "t2_second_us", "t2_mc_us", "mc_err_us", "fit_status"];

struct Row {
    omega_khz: f64,
    first: f64,
    second: f64,
    mc: Option<(f64, f64, FitStatus)>,
    trace: Option<cdd_core::pulse_sim::Trace>,
}

fn prediction(r: Result<f64, DephasingError>) -> Result<f64, CliError> {
    match r {
        Ok(t) => Ok(t),
        Err(DephasingError::ExceedsHorizon { .. } | DephasingError::InfiniteT2) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

fn point(cfg: &ScenarioConfig, index: usize, omega_khz: f64) -> Result<Row, CliError> {
    let p = cfg.params(omega_khz)?;
    let sb = cfg.sigma_b();
    let so = cfg.noise_spec(omega_khz).sigma_omega()?;
    let first = prediction(predicted_t2_mp(p.omega, p.a_par, sb, p.gamma, so, ExpansionOrder::First))?;
    let second = prediction(predicted_t2_mp(p.omega, p.a_par, sb, p.gamma, so, ExpansionOrder::Second))?;
    if cfg.t2scan.analytic_only {
        return Ok(Row { omega_khz, first, second, mc: None, trace: None });
    }
    let tau = cfg.t2scan.tau_us.points();
    let mut sim = cfg.sim_config(omega_khz);
    sim.seed = cfg.seed.wrapping_add(index as u64);
    let mut trace = simulate_ramsey(RamseyKind::DressedMp, &tau, &p, &sim, &cfg.protocol_settings())?;
    let inputs = model_inputs(cfg, &p, p0_reference(cfg, RamseyKind::DressedMp, &tau, &p)?, RamseyKind::DressedMp);
    record_inputs(&mut trace, &inputs, p.omega);
    let fit = fit_ramsey(ModelKind::RamseyMp, &trace, &inputs, p.omega, &fit_options(cfg))?;
    let t2 = fit.get("t2").expect("model has t2");
    let err = fit.std_error("t2").expect("model has t2");
    Ok(Row { omega_khz, first, second, mc: Some((t2, err, fit.status)), trace: Some(trace) })
}

pub fn run(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    if cfg.t2scan.omega_khz.is_empty() {
        return Err(CliError::Config("t2scan.omega_khz: need at least one drive amplitude".into()));
    }
    let rows: Vec<Row> = cfg
        .t2scan
        .omega_khz
        .par_iter()
        .enumerate()
        .map(|(i, &w)| point(cfg, i, w))
        .collect::<Result<_, _>>()?;

    let mut failed = Vec::new();
    let mut table = Vec::with_capacity(rows.len());
    for mut row in rows {
        let (t2, err, status) = match row.mc {
            Some((t, e, s)) => (fmt_f64(t), fmt_f64(e), format!("{s:?}").to_lowercase()),
            None => (String::new(), String::new(), "skipped".to_string()),
        };
        if matches!(row.mc, Some((_, _, s)) if s != FitStatus::Converged) {
            failed.push(row.omega_khz);
        }
        if let Some(trace) = row.trace.as_mut() {
            out.trace(&format!("t2scan_{}.csv", omega_tag(row.omega_khz)), trace)?;
        }
        println!(
            "Ω/2π = {:>8.2} kHz  first {:>8.3} µs  second {:>8.3} µs  mc {}",
            row.omega_khz,
            row.first,
            row.second,
            row.mc.map_or("-".to_string(), |(t, e, _)| format!("{t:.3} ± {e:.3} µs"))
        );
        table.push(vec![fmt_f64(row.omega_khz), fmt_f64(row.first), fmt_f64(row.second), t2, err, status]);
    }
    out.table("t2scan.csv", &COLUMNS, &table)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("fits did not converge at Ω/2π = {failed:?} kHz")))
    }
}

//! Analytic dephasing budget at the configured drive.

use std::f64::consts::TAU;
use std::fmt::Write;

use cdd_core::dephasing_analytics::{
    gaussian_dephasing_rate, predicted_t2_mp, rate_amplitude_mp, rate_magnetic_mp, rate_thermal, ExpansionOrder,
    RateBudget,
};
use cdd_core::spin_model::mechanical_cutoff;
use cdd_core::units::angular_to_khz;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::output::Output;

#[derive(Debug, Serialize)]
pub struct RatesReport {
    pub omega_khz: f64,
    pub a_par_khz: f64,
    pub sigma_b_mg: f64,
    pub gamma_sigma_b_khz: f64,
    pub sigma_omega_khz: f64,
    pub sigma_t_c: f64,
    pub cutoff_khz: f64,
    /// Limit set by temperature drift on any qubit involving |0⟩; null if σ_T = 0.
    pub thermal_t2_us: Option<f64>,
    /// Undressed {0,−1} T₂* implied by σ_b.
    pub undressed_t2_us: Option<f64>,
    /// {m,p} prediction without drive.
    pub static_mp_t2_us: Option<f64>,
    pub budget: Vec<BudgetLine>,
    pub t2_first_us: Option<f64>,
    pub t2_second_us: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BudgetLine {
    pub label: String,
    /// Γ in rad/µs.
    pub rate: f64,
    pub t2_us: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn compute(cfg: &ScenarioConfig) -> Result<RatesReport, CliError> {
    let p = cfg.params(cfg.system.omega_khz)?;
    let g = p.gamma;
    let sb = cfg.sigma_b();
    let noise = cfg.noise_spec(cfg.system.omega_khz);
    let so = noise.sigma_omega()?;

    let mut budget = RateBudget::default();
    budget.push("magnetic", rate_magnetic_mp(p.omega, p.a_par, sb, g)?);
    budget.push("amplitude", rate_amplitude_mp(p.omega, p.a_par, so)?);
    let first = predicted_t2_mp(p.omega, p.a_par, sb, g, so, ExpansionOrder::First);
    let second = predicted_t2_mp(p.omega, p.a_par, sb, g, so, ExpansionOrder::Second);
    let static_mp = if p.a_par != 0.0 {
        finite(predicted_t2_mp(0.0, p.a_par, sb, g, 0.0, ExpansionOrder::First)?)
    } else {
        None
    };
    Ok(RatesReport {
        omega_khz: cfg.system.omega_khz,
        a_par_khz: cfg.system.a_par_khz,
        sigma_b_mg: sb,
        gamma_sigma_b_khz: angular_to_khz(g * sb),
        sigma_omega_khz: angular_to_khz(so),
        sigma_t_c: cfg.noise.sigma_t_c,
        cutoff_khz: angular_to_khz(mechanical_cutoff(p.omega_mech(), p.q_factor)),
        thermal_t2_us: finite(TAU / rate_thermal(p.dd_dt, cfg.noise.sigma_t_c)?),
        undressed_t2_us: finite(TAU / gaussian_dephasing_rate(g, sb)),
        static_mp_t2_us: static_mp,
        budget: budget
            .entries
            .iter()
            .map(|e| BudgetLine { label: e.label.clone(), rate: e.rate, t2_us: finite(e.t2()) })
            .collect(),
        t2_first_us: first.ok().and_then(finite),
        t2_second_us: match second {
            Ok(t) => finite(t),
            Err(cdd_core::dephasing_analytics::DephasingError::ExceedsHorizon { .. }) => None,
            Err(e) => return Err(e.into()),
        },
    })
}

fn show(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| format!("{v:.4}"))
}

pub fn render(r: &RatesReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "drive Ω/2π            {:.3} kHz", r.omega_khz);
    let _ = writeln!(s, "hyperfine A∥/2π       {:.3} kHz", r.a_par_khz);
    let _ = writeln!(s, "σ_b                   {:.4} mG (γσ_b/2π = {:.3} kHz)", r.sigma_b_mg, r.gamma_sigma_b_khz);
    let _ = writeln!(s, "σ_Ω/2π                {:.4} kHz", r.sigma_omega_khz);
    let _ = writeln!(s, "cutoff ω_c/2π         {:.3} kHz", r.cutoff_khz);
    let _ = writeln!(s, "thermal T2*           {} µs (σ_T = {} °C)", show(r.thermal_t2_us), r.sigma_t_c);
    let _ = writeln!(s, "undressed T2*         {} µs", show(r.undressed_t2_us));
    let _ = writeln!(s, "{{m,p}} T2* at Ω = 0    {} µs", show(r.static_mp_t2_us));
    for b in &r.budget {
        let _ = writeln!(s, "  Γ_{:<10}         {:.6} rad/µs (T2* {} µs)", b.label, b.rate, show(b.t2_us));
    }
    let _ = writeln!(s, "{{m,p}} T2* first order  {} µs", show(r.t2_first_us));
    let _ = writeln!(s, "{{m,p}} T2* second order {} µs", show(r.t2_second_us));
    s
}

pub fn run(cfg: &ScenarioConfig, out: &Output) -> Result<(), CliError> {
    let report = compute(cfg)?;
    print!("{}", render(&report));
    out.json("rates.json", &report)?;
    Ok(())
}

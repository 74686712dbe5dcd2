//! Analytic dephasing rates and Ramsey decay envelopes for quasi-static
//! Gaussian noise, plus the 1/e-time solver used to turn envelopes into T₂*.
//!
//! Rates are angular (rad/µs) and are converted with T₂* = 2π/Γ.

use std::f64::consts::{PI, SQRT_2, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DephasingError {
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("κ is undefined for Ω = A∥ = 0")]
    ZeroSplitting,
    #[error("the rate budget has no positive entry, T₂* is infinite")]
    InfiniteT2,
    #[error("envelope stays above 1/e up to the {horizon} µs horizon")]
    ExceedsHorizon { horizon: f64 },
    #[error("max-protection envelope needs Ω > 0")]
    ZeroDrive,
}

/// Amplitude noise on the mechanical drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmplitudeNoise {
    /// Gaussian δΩ with a fixed standard deviation (rad/µs).
    Fixed { sigma_omega: f64 },
    /// δΩ inferred from the reflected-voltage jitter: σ_Ω = (⟨Ω⟩ + α)·η.
    Reflectometer { eta: f64, alpha_diode: f64, mean_omega: f64 },
}

impl AmplitudeNoise {
    pub fn sigma_omega(&self) -> Result<f64, DephasingError> {
        match *self {
            AmplitudeNoise::Fixed { sigma_omega } => Ok(sigma_omega),
            AmplitudeNoise::Reflectometer { eta, alpha_diode, mean_omega } => {
                sigma_omega_from_reflectometer(mean_omega, eta, alpha_diode)
            }
        }
    }
}

impl Default for AmplitudeNoise {
    fn default() -> Self {
        AmplitudeNoise::Fixed { sigma_omega: 0.0 }
    }
}

/// Standard deviations of the quasi-static noise sources.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// δb standard deviation, mG.
    pub sigma_b: f64,
    /// δT standard deviation, °C.
    pub sigma_t: f64,
    pub amplitude_noise: AmplitudeNoise,
}

impl NoiseSpec {
    pub const QUIET: NoiseSpec =
        NoiseSpec { sigma_b: 0.0, sigma_t: 0.0, amplitude_noise: AmplitudeNoise::Fixed { sigma_omega: 0.0 } };

    pub fn validate(&self) -> Result<(), DephasingError> {
        check_sigma("sigma_b", self.sigma_b)?;
        check_sigma("sigma_t", self.sigma_t)?;
        match self.amplitude_noise {
            AmplitudeNoise::Fixed { sigma_omega } => check_sigma("sigma_omega", sigma_omega),
            AmplitudeNoise::Reflectometer { eta, .. } => {
                if !(0.0..1.0).contains(&eta) {
                    return Err(DephasingError::InvalidParameter(format!("eta = {eta} outside [0, 1)")));
                }
                self.amplitude_noise.sigma_omega().map(|_| ())
            }
        }
    }

    pub fn sigma_omega(&self) -> Result<f64, DephasingError> {
        self.amplitude_noise.sigma_omega()
    }
}

fn check_sigma(name: &str, value: f64) -> Result<(), DephasingError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(DephasingError::InvalidParameter(format!("{name} = {value} must be finite and non-negative")))
    }
}

/// A dephasing rate Γ (rad/µs) with its source label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub label: String,
    pub rate: f64,
}

impl RateEntry {
    pub fn new(label: impl Into<String>, rate: f64) -> Self {
        Self { label: label.into(), rate }
    }

    /// 2π/Γ, infinite for a vanishing rate.
    pub fn t2(&self) -> f64 {
        TAU / self.rate
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    pub entries: Vec<RateEntry>,
}

impl RateBudget {
    pub fn push(&mut self, label: impl Into<String>, rate: f64) {
        self.entries.push(RateEntry::new(label, rate));
    }

    pub fn total_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.rate).sum()
    }
}

/// Γ = √2·π·|α|·σ for a frequency linear in a Gaussian variable with slope α.
pub fn gaussian_dephasing_rate(alpha: f64, sigma_x: f64) -> f64 {
    SQRT_2 * PI * alpha.abs() * sigma_x
}

/// Field noise σ_b (mG) from the undressed {0,−1} Gaussian T₂*, γσ_b = √2/T₂*.
pub fn sigma_b_from_t2(t2_0m1: f64, gamma: f64) -> Result<f64, DephasingError> {
    if !(t2_0m1 > 0.0 && t2_0m1.is_finite()) {
        return Err(DephasingError::InvalidParameter(format!("T2* = {t2_0m1} must be positive")));
    }
    Ok(SQRT_2 / (gamma * t2_0m1))
}

/// κ = √2π / √(A∥² + Ω²).
pub fn kappa(omega: f64, a_par: f64) -> Result<f64, DephasingError> {
    let r = omega.hypot(a_par);
    if r == 0.0 {
        return Err(DephasingError::ZeroSplitting);
    }
    Ok(SQRT_2 * PI / r)
}

/// First-order field-noise rate of the {m,p} qubit,
/// Γ_b = 2√2·π·|A∥|·γσ_b / √(A∥² + Ω²).
pub fn rate_magnetic_mp(omega: f64, a_par: f64, sigma_b: f64, gamma: f64) -> Result<f64, DephasingError> {
    check_sigma("sigma_b", sigma_b)?;
    // slope ∂ω_mp/∂δb = 2γ|A∥|/√(A∥²+Ω²), i.e. Γ_b = κ·|A∥|·2γσ_b
    Ok(kappa(omega, a_par)? * a_par.abs() * 2.0 * gamma * sigma_b)
}

/// First-order amplitude-noise rate of the {m,p} qubit, Γ_Ω = κ·Ω·σ_Ω.
pub fn rate_amplitude_mp(omega: f64, a_par: f64, sigma_omega: f64) -> Result<f64, DephasingError> {
    check_sigma("sigma_omega", sigma_omega)?;
    Ok(kappa(omega, a_par)? * omega * sigma_omega)
}

/// T₂* = 2π/ΣΓᵢ for uncorrelated sources.
pub fn combine_rates(budget: &RateBudget) -> Result<f64, DephasingError> {
    if let Some(bad) = budget.entries.iter().find(|e| !(e.rate >= 0.0 && e.rate.is_finite())) {
        return Err(DephasingError::InvalidParameter(format!("rate {} = {}", bad.label, bad.rate)));
    }
    let total = budget.total_rate();
    if total <= 0.0 {
        return Err(DephasingError::InfiniteT2);
    }
    Ok(TAU / total)
}

/// σ_Ω = (⟨Ω⟩ + α)·η.
pub fn sigma_omega_from_reflectometer(mean_omega: f64, eta: f64, alpha_diode: f64) -> Result<f64, DephasingError> {
    let effective = mean_omega + alpha_diode;
    if !(effective > 0.0) {
        return Err(DephasingError::InvalidParameter(format!(
            "effective amplitude ⟨Ω⟩ + α = {effective} must be positive"
        )));
    }
    check_sigma("eta", eta)?;
    Ok(effective * eta)
}

/// Thermal dephasing rate of any qubit involving |0⟩: Γ_T = √2·π·|dD/dT|·σ_T.
pub fn rate_thermal(dd_dt: f64, sigma_t: f64) -> Result<f64, DephasingError> {
    check_sigma("sigma_t", sigma_t)?;
    Ok(gaussian_dephasing_rate(dd_dt, sigma_t))
}

/// Ramsey envelope of the {m,p} qubit to second order in δb.
pub fn envelope_second_order(tau: f64, omega: f64, sigma_b: f64, a_par: f64, gamma: f64) -> f64 {
    let s = a_par * a_par + omega * omega;
    debug_assert!(s > 0.0, "Ω and A∥ cannot both vanish");
    let g = gamma * sigma_b;
    let q = (2.0 * g * omega).powi(4) * tau * tau;
    let beta = (s.powi(3) / (s.powi(3) + q)).sqrt();
    let x = g * a_par * beta * tau;
    beta.sqrt() * (-2.0 * x * x / s).exp()
}

/// Envelope at A∥ = 0, h(τ) = √(Ω / √(Ω² + (2γσ_b)⁴τ²)).
pub fn envelope_max_protection(tau: f64, omega: f64, sigma_b: f64, gamma: f64) -> Result<f64, DephasingError> {
    if !(omega > 0.0) {
        return Err(DephasingError::ZeroDrive);
    }
    let g2 = (2.0 * gamma * sigma_b).powi(2);
    Ok((omega / omega.hypot(g2 * tau)).sqrt())
}

/// Gaussian envelope exp(−τ²/T₂*²).
pub fn envelope_gaussian(tau: f64, t2: f64) -> f64 {
    if t2.is_infinite() {
        return 1.0;
    }
    (-(tau / t2).powi(2)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeSpec {
    Gaussian { t2: f64 },
    SecondOrder { omega: f64, sigma_b: f64, a_par: f64, gamma: f64 },
    MaxProtection { omega: f64, sigma_b: f64, gamma: f64 },
    /// Independent channels multiply.
    Product(Vec<EnvelopeSpec>),
}

impl EnvelopeSpec {
    pub fn validate(&self) -> Result<(), DephasingError> {
        match self {
            EnvelopeSpec::Gaussian { t2 } if !(*t2 > 0.0) => {
                Err(DephasingError::InvalidParameter(format!("T2* = {t2} must be positive")))
            }
            EnvelopeSpec::SecondOrder { omega, a_par, .. } if omega.hypot(*a_par) == 0.0 => {
                Err(DephasingError::ZeroSplitting)
            }
            EnvelopeSpec::MaxProtection { omega, .. } if !(*omega > 0.0) => Err(DephasingError::ZeroDrive),
            EnvelopeSpec::Product(parts) => parts.iter().try_for_each(EnvelopeSpec::validate),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            EnvelopeSpec::Gaussian { t2 } => envelope_gaussian(tau, *t2),
            EnvelopeSpec::SecondOrder { omega, sigma_b, a_par, gamma } => {
                envelope_second_order(tau, *omega, *sigma_b, *a_par, *gamma)
            }
            EnvelopeSpec::MaxProtection { omega, sigma_b, gamma } => {
                envelope_max_protection(tau, *omega, *sigma_b, *gamma).unwrap_or(f64::NAN)
            }
            EnvelopeSpec::Product(parts) => parts.iter().map(|p| p.eval(tau)).product(),
        }
    }
}

/// Bracketing and bisection settings for [`one_over_e_time`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub start: f64,
    pub horizon: f64,
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { start: 1e-3, horizon: 1e3, tolerance: 1e-6 }
    }
}

pub fn one_over_e_time(envelope: &EnvelopeSpec) -> Result<f64, DephasingError> {
    one_over_e_time_with(envelope, SolverOptions::default())
}

/// Time at which a monotone envelope crosses 1/e: bracket by doubling from
/// `start`, then bisect.
pub fn one_over_e_time_with(envelope: &EnvelopeSpec, opts: SolverOptions) -> Result<f64, DephasingError> {
    envelope.validate()?;
    let target = (-1.0f64).exp();
    let above = |t: f64| envelope.eval(t) > target;
    let (mut lo, mut hi) = (0.0, opts.start.min(opts.horizon));
    while above(hi) {
        if hi >= opts.horizon {
            return Err(DephasingError::ExceedsHorizon { horizon: opts.horizon });
        }
        lo = hi;
        hi = (2.0 * hi).min(opts.horizon);
    }
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionOrder {
    First,
    Second,
}

/// Envelope of the {m,p} qubit: second-order δb channel times the Gaussian δΩ channel.
pub fn mp_envelope(omega: f64, a_par: f64, sigma_b: f64, gamma: f64, sigma_omega: f64) -> Result<EnvelopeSpec, DephasingError> {
    let rate_omega = rate_amplitude_mp(omega, a_par, sigma_omega)?;
    let mut parts = vec![EnvelopeSpec::SecondOrder { omega, sigma_b, a_par, gamma }];
    if rate_omega > 0.0 {
        parts.push(EnvelopeSpec::Gaussian { t2: TAU / rate_omega });
    }
    Ok(EnvelopeSpec::Product(parts))
}

/// Predicted {m,p} T₂* in µs.
pub fn predicted_t2_mp(
    omega: f64,
    a_par: f64,
    sigma_b: f64,
    gamma: f64,
    sigma_omega: f64,
    order: ExpansionOrder,
) -> Result<f64, DephasingError> {
    match order {
        ExpansionOrder::First => {
            let mut budget = RateBudget::default();
            budget.push("magnetic", rate_magnetic_mp(omega, a_par, sigma_b, gamma)?);
            budget.push("amplitude", rate_amplitude_mp(omega, a_par, sigma_omega)?);
            combine_rates(&budget)
        }
        ExpansionOrder::Second => one_over_e_time(&mp_envelope(omega, a_par, sigma_b, gamma, sigma_omega)?),
    }
}

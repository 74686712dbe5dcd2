//! Reference NV centers. Values are given in the lab units they are usually
//! quoted in (kHz, MHz, µs) and converted on construction.

use serde::{Deserialize, Serialize};

use crate::dephasing_analytics::{sigma_b_from_t2, AmplitudeNoise, NoiseSpec};
use crate::spin_model::{params_from_khz, SystemParams};
use crate::units;

/// Mechanical mode shared by both reference centers.
pub const OMEGA_MECH_MHZ: f64 = 586.0;
pub const Q_FACTOR: f64 = 2700.0;
/// Thermal drift of the power-leveled runs, °C.
pub const SIGMA_T: f64 = 0.25;
/// Relative jitter of the reflected drive voltage in the noise-injected runs.
pub const ETA_INJECTED: f64 = 0.049;
pub const ALPHA_DIODE_KHZ: f64 = -133.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvPreset {
    pub name: String,
    /// Signed hyperfine coupling; negative so that Δ = −|A∥| protects the ↓ sublevel.
    pub a_par_khz: f64,
    /// Undressed {0,−1} Gaussian T₂*.
    pub t2_0m1_us: f64,
    pub omega_mech_mhz: f64,
    pub q_factor: f64,
}

impl NvPreset {
    pub fn nv1() -> Self {
        Self { name: "nv1".into(), a_par_khz: -145.0, t2_0m1_us: 5.9, omega_mech_mhz: OMEGA_MECH_MHZ, q_factor: Q_FACTOR }
    }

    pub fn nv2() -> Self {
        Self { name: "nv2".into(), a_par_khz: -150.0, t2_0m1_us: 5.4, omega_mech_mhz: OMEGA_MECH_MHZ, q_factor: Q_FACTOR }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "nv1" => Some(Self::nv1()),
            "nv2" => Some(Self::nv2()),
            _ => None,
        }
    }

    pub fn params(&self, omega_khz: f64, delta_khz: f64) -> SystemParams {
        params_from_khz(omega_khz, delta_khz, self.a_par_khz, self.omega_mech_mhz, self.q_factor)
            .expect("preset values are valid")
    }

    /// σ_b (mG) implied by the undressed T₂*.
    pub fn sigma_b(&self) -> f64 {
        sigma_b_from_t2(self.t2_0m1_us, units::gamma_from_mhz_per_gauss(2.8)).expect("preset T2* is positive")
    }

    /// Field noise only.
    pub fn field_noise(&self) -> NoiseSpec {
        NoiseSpec { sigma_b: self.sigma_b(), ..NoiseSpec::QUIET }
    }

    /// Field noise plus the injected amplitude noise at drive `omega_khz`.
    pub fn injected_noise(&self, omega_khz: f64) -> NoiseSpec {
        NoiseSpec {
            sigma_b: self.sigma_b(),
            sigma_t: 0.0,
            amplitude_noise: AmplitudeNoise::Reflectometer {
                eta: ETA_INJECTED,
                alpha_diode: units::khz_to_angular(ALPHA_DIODE_KHZ),
                mean_omega: units::khz_to_angular(omega_khz),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::angular_to_khz;

    #[test]
    fn nv2_field_noise() {
        let p = NvPreset::nv2();
        let params = p.params(581.0, 0.0);
        assert!((angular_to_khz(params.gamma * p.sigma_b()) - 41.68).abs() < 0.01);
        assert!((angular_to_khz(params.a_par) + 150.0).abs() < 1e-12);
        assert_eq!(NvPreset::by_name("NV1"), Some(NvPreset::nv1()));
        assert!(NvPreset::by_name("nv3").is_none());
    }
}

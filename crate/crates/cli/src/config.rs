//! Scenario configuration. Everything is in lab units (kHz, MHz, µs, mG, °C)
//! and converted to the library's angular units here.

use std::path::{Path, PathBuf};

use cdd_core::dephasing_analytics::{sigma_b_from_t2, AmplitudeNoise, NoiseSpec};
use cdd_core::model_fitting::ModelKind;
use cdd_core::presets::{self, NvPreset};
use cdd_core::pulse_sim::{CarbonWeights, Coupling, ProtocolSettings, RamseyKind, SimConfig};
use cdd_core::spin_model::{params_from_khz, SystemParams};
use cdd_core::units::{gamma_from_mhz_per_gauss, khz_to_angular};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub shots: usize,
    pub out_dir: PathBuf,
    pub system: SystemConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub ramsey: RamseyConfig,
    #[serde(default)]
    pub t2scan: T2ScanConfig,
    #[serde(default)]
    pub spectra: SpectraConfig,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
    #[serde(default)]
    pub fit: FitConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega_khz: f64,
    pub delta_khz: f64,
    /// Signed; Δ = −|A∥| protects the ↓ sublevel.
    pub a_par_khz: f64,
    pub omega_mech_mhz: f64,
    pub q_factor: f64,
    /// Undressed {0,−1} T₂*, used to calibrate σ_b when `noise.sigma_b_mg` is absent.
    pub t2_0m1_us: f64,
    /// Probability of the ¹³C ↑ sublevel.
    #[serde(default = "half")]
    pub carbon_up: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_b_mg: Option<f64>,
    #[serde(default)]
    pub sigma_t_c: f64,
    #[serde(default)]
    pub amplitude: AmplitudeConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeConfig {
    Fixed { sigma_omega_khz: f64 },
    /// σ_Ω from reflected-voltage jitter; the mean drive is the run's Ω.
    Reflectometer { eta: f64, alpha_diode_khz: f64 },
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        AmplitudeConfig::Fixed { sigma_omega_khz: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub omega_rot_khz: f64,
    pub omega_mag_undressed_khz: f64,
    pub omega_mag_0p_khz: f64,
    pub omega_mag_mp_khz: f64,
    pub omega_mag_spectrum_khz: f64,
    pub spectrum_pulse_area: f64,
    pub mp_closing_phase: f64,
    pub mp_coupling: CouplingConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingConfig {
    SingleQuantum,
    DoubleQuantum,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let d = ProtocolSettings::default();
        let k = cdd_core::units::angular_to_khz;
        Self {
            omega_rot_khz: k(d.omega_rot),
            omega_mag_undressed_khz: k(d.omega_mag_undressed),
            omega_mag_0p_khz: k(d.omega_mag_0p),
            omega_mag_mp_khz: k(d.omega_mag_mp),
            omega_mag_spectrum_khz: k(d.omega_mag_spectrum),
            spectrum_pulse_area: d.spectrum_pulse_area,
            mp_closing_phase: d.mp_closing_phase,
            mp_coupling: match d.mp_coupling {
                Coupling::SingleQuantum => CouplingConfig::SingleQuantum,
                Coupling::DoubleQuantum => CouplingConfig::DoubleQuantum,
            },
        }
    }
}

/// Uniform delay grid `start, start + step, …` up to and including `stop`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self, key: &str, non_negative: bool) -> Result<(), CliError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(invalid(&format!("{key}.step"), "must be positive"));
        }
        if !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(invalid(&format!("{key}.stop"), "must be finite and ≥ start"));
        }
        if non_negative && self.start < 0.0 {
            return Err(invalid(&format!("{key}.start"), "delays must be ≥ 0"));
        }
        if (self.stop - self.start) / self.step > 1e6 {
            return Err(invalid(key, "more than 10⁶ grid points"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyKindConfig {
    Undressed,
    #[serde(rename = "dressed_0p")]
    Dressed0p,
    DressedMp,
    MaxProtection,
}

impl RamseyKindConfig {
    pub fn kind(self) -> RamseyKind {
        match self {
            RamseyKindConfig::Undressed => RamseyKind::Undressed0m1,
            RamseyKindConfig::Dressed0p => RamseyKind::Dressed0p,
            RamseyKindConfig::DressedMp => RamseyKind::DressedMp,
            RamseyKindConfig::MaxProtection => RamseyKind::MaxProtection,
        }
    }

    pub fn model(self) -> ModelKind {
        match self {
            RamseyKindConfig::Undressed => ModelKind::Undressed,
            RamseyKindConfig::Dressed0p => ModelKind::Ramsey0p,
            RamseyKindConfig::DressedMp => ModelKind::RamseyMp,
            RamseyKindConfig::MaxProtection => ModelKind::MaxProtection,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyConfig {
    pub kind: RamseyKindConfig,
    pub tau_us: Grid,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        Self { kind: RamseyKindConfig::DressedMp, tau_us: Grid { start: 0.0, stop: 20.0, step: 0.05 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct T2ScanConfig {
    pub omega_khz: Vec<f64>,
    pub tau_us: Grid,
    /// Skip the Monte Carlo column.
    #[serde(default)]
    pub analytic_only: bool,
}

impl Default for T2ScanConfig {
    fn default() -> Self {
        Self {
            omega_khz: vec![230.0, 348.0, 470.0, 581.0],
            tau_us: Grid { start: 0.0, stop: 30.0, step: 0.05 },
            analytic_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraConfig {
    pub omega_khz: Vec<f64>,
    /// Magnetic detuning grid.
    pub detuning_khz: Grid,
    /// Keep the hyperfine splitting in the simulated spectra. The joint line
    /// model has none, so fits are only meaningful with this off.
    #[serde(default)]
    pub hyperfine: bool,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            omega_khz: vec![0.0, 230.0, 470.0, 670.0],
            detuning_khz: Grid { start: -600.0, stop: 600.0, step: 4.0 },
            hyperfine: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub tau_us: Grid,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { tau_us: Grid { start: 0.0, stop: 60.0, step: 0.1 } }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Contrast reference of the {m,p} models. Simulated from the system
    /// parameters when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0_ud: Option<f64>,
    /// Weight residuals by the trace's standard errors.
    #[serde(default)]
    pub weighted: bool,
}

pub fn invalid(key: &str, reason: &str) -> CliError {
    CliError::Config(format!("{key}: {reason}"))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, &format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, &format!("must be ≥ 0 and finite, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, "must be finite"))
    }
}

impl ScenarioConfig {
    /// Defaults for a reference center.
    pub fn from_preset(preset: &NvPreset, omega_khz: f64) -> Self {
        Self {
            seed: 1,
            shots: 2000,
            out_dir: PathBuf::from("out"),
            system: SystemConfig {
                omega_khz,
                delta_khz: 0.0,
                a_par_khz: preset.a_par_khz,
                omega_mech_mhz: preset.omega_mech_mhz,
                q_factor: preset.q_factor,
                t2_0m1_us: preset.t2_0m1_us,
                carbon_up: 0.5,
            },
            noise: NoiseConfig { sigma_b_mg: None, sigma_t_c: presets::SIGMA_T, amplitude: AmplitudeConfig::default() },
            protocol: ProtocolConfig::default(),
            ramsey: RamseyConfig::default(),
            t2scan: T2ScanConfig::default(),
            spectra: SpectraConfig::default(),
            envelope: EnvelopeConfig::default(),
            fit: FitConfig::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    /// SHA-256 of the resolved config. The output directory is left out so
    /// the same scenario written elsewhere keeps its digest.
    pub fn digest(&self) -> String {
        let scenario = Self { out_dir: PathBuf::new(), ..self.clone() };
        hex::encode(Sha256::digest(scenario.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.shots == 0 {
            return Err(invalid("shots", "must be ≥ 1"));
        }
        let s = &self.system;
        non_negative("system.omega_khz", s.omega_khz)?;
        finite("system.delta_khz", s.delta_khz)?;
        finite("system.a_par_khz", s.a_par_khz)?;
        positive("system.omega_mech_mhz", s.omega_mech_mhz)?;
        positive("system.q_factor", s.q_factor)?;
        positive("system.t2_0m1_us", s.t2_0m1_us)?;
        if !(0.0..=1.0).contains(&s.carbon_up) {
            return Err(invalid("system.carbon_up", "must lie in [0, 1]"));
        }
        if let Some(sb) = self.noise.sigma_b_mg {
            non_negative("noise.sigma_b_mg", sb)?;
        }
        non_negative("noise.sigma_t_c", self.noise.sigma_t_c)?;
        match self.noise.amplitude {
            AmplitudeConfig::Fixed { sigma_omega_khz } => non_negative("noise.amplitude.sigma_omega_khz", sigma_omega_khz)?,
            AmplitudeConfig::Reflectometer { eta, alpha_diode_khz } => {
                non_negative("noise.amplitude.eta", eta)?;
                finite("noise.amplitude.alpha_diode_khz", alpha_diode_khz)?;
                if alpha_diode_khz == 0.0 {
                    return Err(invalid("noise.amplitude.alpha_diode_khz", "must be nonzero"));
                }
            }
        }
        let p = &self.protocol;
        finite("protocol.omega_rot_khz", p.omega_rot_khz)?;
        positive("protocol.omega_mag_undressed_khz", p.omega_mag_undressed_khz)?;
        positive("protocol.omega_mag_0p_khz", p.omega_mag_0p_khz)?;
        positive("protocol.omega_mag_mp_khz", p.omega_mag_mp_khz)?;
        positive("protocol.omega_mag_spectrum_khz", p.omega_mag_spectrum_khz)?;
        positive("protocol.spectrum_pulse_area", p.spectrum_pulse_area)?;
        finite("protocol.mp_closing_phase", p.mp_closing_phase)?;
        self.ramsey.tau_us.validate("ramsey.tau_us", true)?;
        self.t2scan.tau_us.validate("t2scan.tau_us", true)?;
        for (i, &w) in self.t2scan.omega_khz.iter().enumerate() {
            non_negative(&format!("t2scan.omega_khz[{i}]"), w)?;
        }
        for (i, &w) in self.spectra.omega_khz.iter().enumerate() {
            non_negative(&format!("spectra.omega_khz[{i}]"), w)?;
        }
        self.spectra.detuning_khz.validate("spectra.detuning_khz", false)?;
        self.envelope.tau_us.validate("envelope.tau_us", true)?;
        if let Some(p0) = self.fit.p0_ud {
            positive("fit.p0_ud", p0)?;
        }
        self.params(s.omega_khz).map(|_| ())
    }

    pub fn gamma(&self) -> f64 {
        gamma_from_mhz_per_gauss(2.8)
    }

    /// System parameters at drive `omega_khz` with the configured Δ.
    pub fn params(&self, omega_khz: f64) -> Result<SystemParams, CliError> {
        let s = &self.system;
        params_from_khz(omega_khz, s.delta_khz, s.a_par_khz, s.omega_mech_mhz, s.q_factor)
            .map_err(|e| invalid("system", &e.to_string()))
    }

    pub fn sigma_b(&self) -> f64 {
        self.noise
            .sigma_b_mg
            .unwrap_or_else(|| sigma_b_from_t2(self.system.t2_0m1_us, self.gamma()).expect("validated T2*"))
    }

    /// Noise for a run at drive `omega_khz`.
    pub fn noise_spec(&self, omega_khz: f64) -> NoiseSpec {
        let amplitude_noise = match self.noise.amplitude {
            AmplitudeConfig::Fixed { sigma_omega_khz } => AmplitudeNoise::Fixed { sigma_omega: khz_to_angular(sigma_omega_khz) },
            AmplitudeConfig::Reflectometer { eta, alpha_diode_khz } => AmplitudeNoise::Reflectometer {
                eta,
                alpha_diode: khz_to_angular(alpha_diode_khz),
                mean_omega: khz_to_angular(omega_khz),
            },
        };
        NoiseSpec { sigma_b: self.sigma_b(), sigma_t: self.noise.sigma_t_c, amplitude_noise }
    }

    pub fn sim_config(&self, omega_khz: f64) -> SimConfig {
        SimConfig {
            n_shots: self.shots,
            seed: self.seed,
            carbon_weights: CarbonWeights { up: self.system.carbon_up, down: 1.0 - self.system.carbon_up },
            noise: self.noise_spec(omega_khz),
        }
    }

    pub fn protocol_settings(&self) -> ProtocolSettings {
        let p = &self.protocol;
        ProtocolSettings {
            omega_rot: khz_to_angular(p.omega_rot_khz),
            omega_mag_undressed: khz_to_angular(p.omega_mag_undressed_khz),
            omega_mag_0p: khz_to_angular(p.omega_mag_0p_khz),
            omega_mag_mp: khz_to_angular(p.omega_mag_mp_khz),
            omega_mag_spectrum: khz_to_angular(p.omega_mag_spectrum_khz),
            spectrum_pulse_area: p.spectrum_pulse_area,
            mp_closing_phase: p.mp_closing_phase,
            mp_coupling: match p.mp_coupling {
                CouplingConfig::SingleQuantum => Coupling::SingleQuantum,
                CouplingConfig::DoubleQuantum => Coupling::DoubleQuantum,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NV1: &str = include_str!("../../../configs/nv1.toml");
    const NV2: &str = include_str!("../../../configs/nv2.toml");

    #[test]
    fn shipped_configs_parse_and_round_trip() {
        for text in [NV1, NV2] {
            let cfg = ScenarioConfig::parse(text).unwrap();
            let again = ScenarioConfig::parse(&cfg.to_toml()).unwrap();
            assert_eq!(cfg, again);
            assert_eq!(cfg.digest(), again.digest());
        }
    }

    #[test]
    fn shipped_configs_match_presets() {
        let nv1 = ScenarioConfig::parse(NV1).unwrap();
        assert_eq!(nv1.system.a_par_khz, NvPreset::nv1().a_par_khz);
        assert_eq!(nv1.system.t2_0m1_us, 5.9);
        let nv2 = ScenarioConfig::parse(NV2).unwrap();
        assert_eq!(nv2.system.t2_0m1_us, 5.4);
        let khz = cdd_core::units::angular_to_khz(nv2.gamma() * nv2.sigma_b());
        assert!((khz - 41.68).abs() < 0.01);
    }

    #[test]
    fn preset_builder_round_trips() {
        let cfg = ScenarioConfig::from_preset(&NvPreset::nv2(), 581.0);
        cfg.validate().unwrap();
        assert_eq!(ScenarioConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_key() {
        let bad = NV2.replace("q_factor = 2700.0", "q_factor = -1.0");
        let err = ScenarioConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("system.q_factor"), "{err}");

        let bad = NV2.replace("step = 0.05", "step = 0.0");
        assert!(ScenarioConfig::parse(&bad).unwrap_err().to_string().contains(".step"));

        let unknown = format!("{NV2}\n[bogus]\nx = 1\n");
        assert!(ScenarioConfig::parse(&unknown).unwrap_err().to_string().contains("bogus"));

        let missing = NV2.replace("seed = 1\n", "");
        assert!(ScenarioConfig::parse(&missing).unwrap_err().to_string().contains("seed"));
    }

    #[test]
    fn grid_includes_stop() {
        let g = Grid { start: 0.0, stop: 1.0, step: 0.1 };
        let p = g.points();
        assert_eq!(p.len(), 11);
        assert!((p[10] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflectometer_noise_follows_drive() {
        let mut cfg = ScenarioConfig::from_preset(&NvPreset::nv2(), 581.0);
        cfg.noise.amplitude = AmplitudeConfig::Reflectometer { eta: 0.049, alpha_diode_khz: -133.0 };
        let a = cfg.noise_spec(581.0).sigma_omega().unwrap();
        let b = cfg.noise_spec(290.5).sigma_omega().unwrap();
        assert!(a > 0.0 && b > 0.0 && (a - b).abs() > 1e-9);
    }

    #[test]
    fn schema_lists_every_key() {
        use std::collections::BTreeSet;
        let schema: serde_json::Value = serde_json::from_str(include_str!("../../../configs/schema.json")).unwrap();
        let mut cfg = ScenarioConfig::parse(NV2).unwrap();
        cfg.noise.sigma_b_mg = Some(40.0);
        cfg.fit.p0_ud = Some(0.9);
        let value = serde_json::to_value(&cfg).unwrap();
        let keys = |v: &serde_json::Value| v.as_object().unwrap().keys().cloned().collect::<BTreeSet<_>>();
        let props = &schema["properties"];
        assert_eq!(keys(&value), keys(props));
        for section in ["system", "noise", "protocol", "ramsey", "t2scan", "spectra", "envelope", "fit"] {
            assert_eq!(keys(&value[section]), keys(&props[section]["properties"]), "{section}");
        }
    }

    #[test]
    fn digest_ignores_output_directory() {
        let a = ScenarioConfig::parse(NV2).unwrap();
        let b = ScenarioConfig { out_dir: PathBuf::from("elsewhere"), ..a.clone() };
        assert_eq!(a.digest(), b.digest());
        let c = ScenarioConfig { seed: 2, ..a.clone() };
        assert_ne!(a.digest(), c.digest());
    }
}

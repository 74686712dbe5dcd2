//! Ramsey and spectroscopy protocols averaged over quasi-static noise.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{sample_environment, shot_rng};
use super::sequence::{
    drive_hamiltonian, free_hamiltonian, BlockEigensystems, CarbonWeights, Coupling, MagneticPulse, PulseSequence,
    Segment, SimError, SpinState,
};
use super::trace::{Trace, TraceMetadata};
use crate::dephasing_analytics::NoiseSpec;
use crate::linalg::CarbonSublevel;
use crate::spin_model::{xi, EnvironmentSample, SystemParams};
use crate::units;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_shots: usize,
    pub seed: u64,
    #[serde(default)]
    pub carbon_weights: CarbonWeights,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_shots == 0 {
            return Err(SimError::InvalidConfig("n_shots must be at least 1".into()));
        }
        self.carbon_weights.validate()?;
        self.noise.validate()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RamseyKind {
    /// {0,−1} qubit with the mechanical drive off.
    Undressed0m1,
    /// {0,p} qubit, π/2 pulses on the 0↔p line.
    Dressed0p,
    /// {m,p} qubit, π pulses at the midpoint of the m and p lines.
    DressedMp,
    /// {m,p} qubit at Δ = −|A∥|.
    MaxProtection,
}

impl RamseyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RamseyKind::Undressed0m1 => "undressed_0m1",
            RamseyKind::Dressed0p => "dressed_0p",
            RamseyKind::DressedMp => "dressed_mp",
            RamseyKind::MaxProtection => "max_protection",
        }
    }

    pub fn is_dressed(self) -> bool {
        self != RamseyKind::Undressed0m1
    }
}

/// Pulse strengths and phases of the protocols. All rates in rad/µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSettings {
    /// Rate at which the closing π/2 phase advances with τ.
    pub omega_rot: f64,
    pub omega_mag_undressed: f64,
    pub omega_mag_0p: f64,
    pub omega_mag_mp: f64,
    pub omega_mag_spectrum: f64,
    pub spectrum_pulse_area: f64,
    /// Phase of the closing {m,p} pulse.
    pub mp_closing_phase: f64,
    /// Transition(s) addressed by the {m,p} pulses.
    pub mp_coupling: Coupling,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        Self {
            omega_rot: units::khz_to_angular(250.0),
            omega_mag_undressed: units::khz_to_angular(696.0),
            omega_mag_0p: units::khz_to_angular(696.0),
            omega_mag_mp: units::khz_to_angular(1513.0),
            omega_mag_spectrum: units::khz_to_angular(80.0),
            spectrum_pulse_area: PI,
            mp_closing_phase: 0.0,
            mp_coupling: Coupling::SingleQuantum,
        }
    }
}

impl ProtocolSettings {
    pub fn validate(&self) -> Result<(), SimError> {
        let strengths = [self.omega_mag_undressed, self.omega_mag_0p, self.omega_mag_mp, self.omega_mag_spectrum];
        if strengths.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(SimError::InvalidConfig("magnetic Rabi strengths must be positive".into()));
        }
        if !(self.omega_rot.is_finite() && self.mp_closing_phase.is_finite() && self.spectrum_pulse_area > 0.0) {
            return Err(SimError::InvalidConfig("omega_rot, closing phase and pulse area must be finite".into()));
        }
        Ok(())
    }

    /// Length of one π/2 pulse of the two-level Ramsey kinds, µs; zero for
    /// the {m,p} kinds, whose pulses leave the phase reference intact. The
    /// undressed and {0,p} fits use it as their fixed delay offset.
    pub fn pulse_delay_offset(&self, kind: RamseyKind) -> f64 {
        match kind {
            RamseyKind::Undressed0m1 => 0.5 * PI / self.omega_mag_undressed,
            RamseyKind::Dressed0p => 0.5 * PI / self.omega_mag_0p,
            RamseyKind::DressedMp | RamseyKind::MaxProtection => 0.0,
        }
    }
}

/// Parameters actually simulated for a kind: the undressed kind switches the
/// drive off, maximal protection retunes Δ to −|A∥|.
pub fn effective_params(kind: RamseyKind, params: &SystemParams) -> SystemParams {
    match kind {
        RamseyKind::Undressed0m1 => params.with_omega(0.0),
        RamseyKind::MaxProtection => params.with_delta(-params.a_par.abs()),
        _ => *params,
    }
}

/// Carrier detuning of the magnetic pulses for a kind.
pub fn carrier_detuning(kind: RamseyKind, params: &SystemParams) -> f64 {
    match kind {
        RamseyKind::Undressed0m1 => -0.5 * params.delta,
        RamseyKind::Dressed0p => {
            let env = EnvironmentSample::ZERO;
            let p_line = |s| 0.5 * params.omega.hypot(xi(params, &env, s));
            0.5 * (p_line(CarbonSublevel::Up) + p_line(CarbonSublevel::Down))
        }
        RamseyKind::DressedMp | RamseyKind::MaxProtection => 0.0,
    }
}

struct RamseyPulses {
    opening: MagneticPulse,
    closing: MagneticPulse,
    /// Closing phase advance per µs of delay.
    phase_rate: f64,
}

fn ramsey_pulses(kind: RamseyKind, params: &SystemParams, settings: &ProtocolSettings) -> RamseyPulses {
    let det = carrier_detuning(kind, params);
    // Negative so the advance adds to the branch frequencies: the far {0,p}
    // branch then appears at ω_rot + √(Ω² + A∥²).
    let phase_rate = -settings.omega_rot;
    let half = |w| MagneticPulse::with_area(w, FRAC_PI_2, det, 0.0, Coupling::SingleQuantum);
    match kind {
        RamseyKind::Undressed0m1 => {
            let p = half(settings.omega_mag_undressed);
            RamseyPulses { opening: p, closing: p, phase_rate }
        }
        RamseyKind::Dressed0p => {
            let p = half(settings.omega_mag_0p);
            RamseyPulses { opening: p, closing: p, phase_rate }
        }
        RamseyKind::DressedMp | RamseyKind::MaxProtection => {
            let area = match settings.mp_coupling {
                Coupling::SingleQuantum => PI,
                Coupling::DoubleQuantum => PI / std::f64::consts::SQRT_2,
            };
            let opening = MagneticPulse::with_area(settings.omega_mag_mp, area, det, 0.0, settings.mp_coupling);
            let closing = MagneticPulse { phase: settings.mp_closing_phase, ..opening };
            RamseyPulses { opening, closing, phase_rate: 0.0 }
        }
    }
}

fn check_kind(kind: RamseyKind, params: &SystemParams) -> Result<(), SimError> {
    params.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    if kind.is_dressed() && params.omega <= 0.0 {
        return Err(SimError::InvalidConfig(format!("{} needs a nonzero mechanical drive", kind.as_str())));
    }
    Ok(())
}

/// The explicit segment list of one Ramsey shot at delay `tau`.
pub fn ramsey_sequence(kind: RamseyKind, tau: f64, params: &SystemParams, settings: &ProtocolSettings) -> PulseSequence {
    let p = effective_params(kind, params);
    let pulses = ramsey_pulses(kind, &p, settings);
    let closing = MagneticPulse { phase: pulses.closing.phase + pulses.phase_rate * tau, ..pulses.closing };
    PulseSequence::new(
        carrier_detuning(kind, &p),
        vec![
            Segment::Reset,
            Segment::Pulse(pulses.opening),
            Segment::FreeEvolution { duration: tau },
            Segment::Pulse(closing),
            Segment::Readout,
        ],
    )
}

/// One shot's Ramsey experiment with all propagators precomputed, so many
/// delays can be evaluated under the same environment.
pub struct RamseyShot {
    opening: BlockEigensystems,
    free: BlockEigensystems,
    closing: BlockEigensystems,
    pulses: RamseyPulses,
    weights: CarbonWeights,
}

impl RamseyShot {
    pub fn new(
        kind: RamseyKind,
        params: &SystemParams,
        env: &EnvironmentSample,
        settings: &ProtocolSettings,
        weights: CarbonWeights,
    ) -> Result<Self, SimError> {
        let p = effective_params(kind, params);
        let pulses = ramsey_pulses(kind, &p, settings);
        let closing_base = MagneticPulse { phase: 0.0, ..pulses.closing };
        Ok(Self {
            opening: BlockEigensystems::new(&drive_hamiltonian(&p, env, &pulses.opening))?,
            free: BlockEigensystems::new(&free_hamiltonian(&p, env, carrier_detuning(kind, &p)))?,
            closing: BlockEigensystems::new(&drive_hamiltonian(&p, env, &closing_base))?,
            pulses,
            weights,
        })
    }

    pub fn p0(&self, tau: f64) -> f64 {
        let mut s = SpinState::reset(self.weights);
        self.opening.evolve_phased(&mut s, self.pulses.opening.duration, self.pulses.opening.phase);
        self.free.evolve(&mut s, tau);
        let phase = self.pulses.closing.phase + self.pulses.phase_rate * tau;
        self.closing.evolve_phased(&mut s, self.pulses.closing.duration, phase);
        s.p0()
    }
}

fn check_grid(grid: &[f64], non_negative: bool) -> Result<(), SimError> {
    if grid.is_empty() {
        return Err(SimError::InvalidConfig("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::InvalidConfig("grid must be finite and strictly ascending".into()));
    }
    if non_negative && grid[0] < 0.0 {
        return Err(SimError::InvalidConfig("delays must be non-negative".into()));
    }
    Ok(())
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `shot(point, env)` for every grid point and shot. Shots run in
/// parallel; the reduction is sequential in shot order, so the result does
/// not depend on thread scheduling.
fn monte_carlo<F>(n_points: usize, config: &SimConfig, shot: F) -> Result<Vec<(f64, f64)>, SimError>
where
    F: Fn(usize, &EnvironmentSample) -> Result<f64, SimError> + Sync,
{
    (0..n_points)
        .map(|i| {
            let values = (0..config.n_shots)
                .into_par_iter()
                .map(|j| {
                    let env = sample_environment(&config.noise, &mut shot_rng(config.seed, i as u64, j as u64))?;
                    shot(i, &env)
                })
                .collect::<Result<Vec<f64>, SimError>>()?;
            Ok(mean_stderr(&values))
        })
        .collect()
}

fn metadata(kind: &str, unit: &str, params: &SystemParams, config: &SimConfig, settings: &ProtocolSettings) -> TraceMetadata {
    TraceMetadata {
        kind: kind.into(),
        abscissa_unit: unit.into(),
        seed: Some(config.seed),
        params: serde_json::json!({ "system": params, "settings": settings, "config": config }),
        config_digest: None,
        extra: Default::default(),
    }
}

fn into_trace(abscissa: Vec<f64>, stats: Vec<(f64, f64)>, n_shots: usize, metadata: TraceMetadata) -> Trace {
    let n = abscissa.len();
    Trace {
        abscissa,
        mean_p0: stats.iter().map(|s| s.0).collect(),
        stderr: stats.iter().map(|s| s.1).collect(),
        n_shots: vec![n_shots as u64; n],
        metadata,
    }
}

/// Ramsey trace of `kind` over `tau_grid` (µs).
pub fn simulate_ramsey(
    kind: RamseyKind,
    tau_grid: &[f64],
    params: &SystemParams,
    config: &SimConfig,
    settings: &ProtocolSettings,
) -> Result<Trace, SimError> {
    check_kind(kind, params)?;
    check_grid(tau_grid, true)?;
    config.validate()?;
    settings.validate()?;
    let stats = monte_carlo(tau_grid.len(), config, |i, env| {
        Ok(RamseyShot::new(kind, params, env, settings, config.carbon_weights)?.p0(tau_grid[i]))
    })?;
    let meta = metadata(kind.as_str(), "us", &effective_params(kind, params), config, settings);
    Ok(into_trace(tau_grid.to_vec(), stats, config.n_shots, meta))
}

/// Mean P₀ of the same pulses with the mechanical drive off, zero noise,
/// averaged over `tau_grid`. This is the contrast reference of the {m,p} fits.
pub fn undressed_reference(
    kind: RamseyKind,
    tau_grid: &[f64],
    params: &SystemParams,
    settings: &ProtocolSettings,
    weights: CarbonWeights,
) -> Result<f64, SimError> {
    check_grid(tau_grid, true)?;
    let mut p = effective_params(kind, params);
    let pulses = ramsey_pulses(kind, &p, settings);
    p.omega = 0.0;
    let env = EnvironmentSample::ZERO;
    let opening = BlockEigensystems::new(&drive_hamiltonian(&p, &env, &pulses.opening))?;
    let closing = BlockEigensystems::new(&drive_hamiltonian(&p, &env, &MagneticPulse { phase: 0.0, ..pulses.closing }))?;
    let free = BlockEigensystems::new(&free_hamiltonian(&p, &env, pulses.opening.detuning_mag))?;
    let total: f64 = tau_grid
        .iter()
        .map(|&tau| {
            let mut s = SpinState::reset(weights);
            opening.evolve_phased(&mut s, pulses.opening.duration, pulses.opening.phase);
            free.evolve(&mut s, tau);
            closing.evolve_phased(&mut s, pulses.closing.duration, pulses.closing.phase + pulses.phase_rate * tau);
            s.p0()
        })
        .sum();
    Ok(total / tau_grid.len() as f64)
}

/// Spectroscopy scan: a single pulse of area `spectrum_pulse_area` at each
/// carrier detuning in `delta_mag_grid` (rad/µs). The trace abscissa is kHz.
pub fn simulate_spectrum(
    delta_mag_grid: &[f64],
    params: &SystemParams,
    config: &SimConfig,
    settings: &ProtocolSettings,
) -> Result<Trace, SimError> {
    params.validate().map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    check_grid(delta_mag_grid, false)?;
    config.validate()?;
    settings.validate()?;
    let stats = monte_carlo(delta_mag_grid.len(), config, |i, env| {
        let pulse = MagneticPulse::with_area(
            settings.omega_mag_spectrum,
            settings.spectrum_pulse_area,
            delta_mag_grid[i],
            0.0,
            Coupling::SingleQuantum,
        );
        let mut s = SpinState::reset(config.carbon_weights);
        BlockEigensystems::new(&drive_hamiltonian(params, env, &pulse))?.evolve(&mut s, pulse.duration);
        Ok(s.p0())
    })?;
    let abscissa = delta_mag_grid.iter().map(|&d| units::angular_to_khz(d)).collect();
    Ok(into_trace(abscissa, stats, config.n_shots, metadata("spectrum", "khz", params, config, settings)))
}

/// Envelope estimate at one delay.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub tau: f64,
    pub envelope: f64,
    pub stderr: f64,
}

/// Ramsey envelope by lock-in demodulation at `omega_demod`.
///
/// Around each centre τ the shot is evaluated at `samples` delays spread over
/// one period 2π/ω, all under the same environment. The complex amplitude at
/// ω is averaged over shots and divided by the noiseless amplitude at the same
/// delays. The standard error is that of the per-shot amplitudes projected on
/// the mean phase.
pub fn demodulated_envelope(
    kind: RamseyKind,
    tau_centres: &[f64],
    omega_demod: f64,
    samples: usize,
    params: &SystemParams,
    config: &SimConfig,
    settings: &ProtocolSettings,
) -> Result<Vec<EnvelopePoint>, SimError> {
    check_kind(kind, params)?;
    check_grid(tau_centres, true)?;
    config.validate()?;
    settings.validate()?;
    if samples < 3 || !(omega_demod > 0.0) {
        return Err(SimError::InvalidConfig("demodulation needs ≥ 3 samples and a positive frequency".into()));
    }
    let period = TAU / omega_demod;
    let offsets: Vec<f64> = (0..samples).map(|m| (m as f64 + 0.5) / samples as f64 * period - 0.5 * period).collect();
    let amplitude = |shot: &RamseyShot, centre: f64| -> C64 {
        offsets
            .iter()
            .map(|&dt| {
                let t = (centre + dt).max(0.0);
                shot.p0(t) * C64::from_polar(1.0, -omega_demod * t)
            })
            .sum::<C64>()
            * (2.0 / samples as f64)
    };
    let quiet = RamseyShot::new(kind, params, &EnvironmentSample::ZERO, settings, config.carbon_weights)?;
    tau_centres
        .iter()
        .enumerate()
        .map(|(i, &centre)| {
            let z: Vec<C64> = (0..config.n_shots)
                .into_par_iter()
                .map(|j| {
                    let env = sample_environment(&config.noise, &mut shot_rng(config.seed, i as u64, j as u64))?;
                    Ok(amplitude(&RamseyShot::new(kind, params, &env, settings, config.carbon_weights)?, centre))
                })
                .collect::<Result<_, SimError>>()?;
            let reference = amplitude(&quiet, centre).norm();
            let n = z.len() as f64;
            let mean = z.iter().sum::<C64>() / n;
            let rot = C64::from_polar(1.0, -mean.arg());
            let proj: Vec<f64> = z.iter().map(|v| (v * rot).re).collect();
            let (_, se) = mean_stderr(&proj);
            Ok(EnvelopePoint { tau: centre, envelope: mean.norm() / reference, stderr: se / reference })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse_sim::fourier::magnitude_spectrum;
    use crate::pulse_sim::sequence::run_sequence;
    use crate::presets::NvPreset;
    use crate::units::khz_to_angular;

    fn quiet(n: usize) -> SimConfig {
        SimConfig { n_shots: n, seed: 3, carbon_weights: CarbonWeights::UNPOLARIZED, noise: NoiseSpec::QUIET }
    }

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn shot_runner_matches_explicit_sequence() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let env = EnvironmentSample { delta_b: 4.0, delta_omega: 0.03, delta_t: 0.2 };
        let s = ProtocolSettings::default();
        for kind in [RamseyKind::Undressed0m1, RamseyKind::Dressed0p, RamseyKind::DressedMp, RamseyKind::MaxProtection] {
            let shot = RamseyShot::new(kind, &p, &env, &s, CarbonWeights::UNPOLARIZED).unwrap();
            for tau in [0.0, 0.37, 2.5, 11.0] {
                let seq = ramsey_sequence(kind, tau, &p, &s);
                let direct = run_sequence(&seq, &effective_params(kind, &p), &env, CarbonWeights::UNPOLARIZED).unwrap();
                assert!((shot.p0(tau) - direct).abs() < 1e-12, "{kind:?} τ={tau}");
            }
        }
    }

    #[test]
    fn zero_noise_mp_oscillates_at_dressed_splitting() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let taus = grid(512, 0.05);
        let t = simulate_ramsey(RamseyKind::DressedMp, &taus, &p, &quiet(1), &ProtocolSettings::default()).unwrap();
        let spec = magnitude_spectrum(&t.abscissa, &t.mean_p0, 8).unwrap();
        let peak = spec.peak_above(50.0).unwrap();
        assert!((peak - 150.0_f64.hypot(581.0)).abs() < 2.0, "{peak}");
        // undamped: late and early swings match
        let swing = |r: std::ops::Range<usize>| {
            let s = &t.mean_p0[r];
            s.iter().cloned().fold(f64::MIN, f64::max) - s.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!((swing(0..100) - swing(400..500)).abs() < 0.02);
    }

    #[test]
    fn undressed_beats_at_hyperfine_splitting() {
        let p = NvPreset::nv1().params(0.0, 0.0);
        let taus = grid(1024, 0.05);
        let t = simulate_ramsey(RamseyKind::Undressed0m1, &taus, &p, &quiet(1), &ProtocolSettings::default()).unwrap();
        let spec = magnitude_spectrum(&t.abscissa, &t.mean_p0, 4).unwrap();
        let peaks = spec.peaks();
        let (a, b) = (peaks[0].min(peaks[1]), peaks[0].max(peaks[1]));
        assert!(((b - a) - 145.0).abs() < 3.0, "{a} {b}");
        assert!((0.5 * (a + b) - 250.0).abs() < 3.0);
    }

    #[test]
    fn dressed_kind_without_drive_rejected() {
        let p = NvPreset::nv2().params(0.0, 0.0);
        for kind in [RamseyKind::Dressed0p, RamseyKind::DressedMp, RamseyKind::MaxProtection] {
            assert!(simulate_ramsey(kind, &[0.0, 1.0], &p, &quiet(1), &ProtocolSettings::default()).is_err());
        }
        assert!(simulate_ramsey(RamseyKind::Undressed0m1, &[0.0, 1.0], &p, &quiet(1), &ProtocolSettings::default()).is_ok());
    }

    #[test]
    fn grids_validated() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let s = ProtocolSettings::default();
        assert!(simulate_ramsey(RamseyKind::DressedMp, &[1.0, 0.5], &p, &quiet(1), &s).is_err());
        assert!(simulate_ramsey(RamseyKind::DressedMp, &[-1.0, 0.5], &p, &quiet(1), &s).is_err());
        assert!(simulate_ramsey(RamseyKind::DressedMp, &[], &p, &quiet(1), &s).is_err());
        assert!(simulate_ramsey(RamseyKind::DressedMp, &[0.0], &p, &quiet(0), &s).is_err());
    }

    #[test]
    fn norm_and_sublevel_weights_conserved() {
        let p = NvPreset::nv2().params(470.0, 20.0);
        let env = EnvironmentSample { delta_b: 8.0, delta_omega: -0.1, delta_t: 1.0 };
        let s = ProtocolSettings::default();
        let w = CarbonWeights { up: 0.3, down: 0.7 };
        for kind in [RamseyKind::Dressed0p, RamseyKind::DressedMp] {
            let seq = ramsey_sequence(kind, 3.3, &p, &s);
            let mut state = SpinState::reset(w);
            for seg in &seq.segments {
                match seg {
                    Segment::Pulse(pulse) => {
                        BlockEigensystems::new(&drive_hamiltonian(&p, &env, pulse)).unwrap().evolve(&mut state, pulse.duration)
                    }
                    Segment::FreeEvolution { duration } => BlockEigensystems::new(&free_hamiltonian(&p, &env, seq.frame_detuning))
                        .unwrap()
                        .evolve(&mut state, *duration),
                    _ => {}
                }
                assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
                assert!((state.block_weight(CarbonSublevel::Up) - 0.3).abs() < 1e-9);
                assert!((state.block_weight(CarbonSublevel::Down) - 0.7).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let cfg = SimConfig { n_shots: 64, noise: NvPreset::nv2().injected_noise(581.0), ..quiet(64) };
        let taus = grid(12, 0.5);
        let a = simulate_ramsey(RamseyKind::DressedMp, &taus, &p, &cfg, &ProtocolSettings::default()).unwrap();
        let b = simulate_ramsey(RamseyKind::DressedMp, &taus, &p, &cfg, &ProtocolSettings::default()).unwrap();
        assert_eq!(a.to_csv_string().unwrap(), b.to_csv_string().unwrap());
        let c = simulate_ramsey(RamseyKind::DressedMp, &taus, &p, &SimConfig { seed: 4, ..cfg }, &ProtocolSettings::default())
            .unwrap();
        assert_ne!(a.mean_p0, c.mean_p0);
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt_shots() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let noise = NvPreset::nv2().field_noise();
        let taus = [6.0, 6.3, 6.6, 6.9];
        let se = |n| {
            let cfg = SimConfig { n_shots: n, seed: 21, carbon_weights: CarbonWeights::UNPOLARIZED, noise };
            let t = simulate_ramsey(RamseyKind::DressedMp, &taus, &p, &cfg, &ProtocolSettings::default()).unwrap();
            t.stderr.iter().sum::<f64>() / taus.len() as f64
        };
        let (s500, s2000, s8000) = (se(500), se(2000), se(8000));
        assert!((s500 / s2000 - 2.0).abs() < 0.2, "{s500} {s2000}");
        assert!((s2000 / s8000 - 2.0).abs() < 0.2, "{s2000} {s8000}");
    }

    #[test]
    fn spectrum_dips_at_dressed_lines() {
        let p = NvPreset::nv2().params(470.0, 0.0).with_a_par(0.0);
        let grid: Vec<f64> = (-80..=80).map(|k| khz_to_angular(5.0 * k as f64)).collect();
        let t = simulate_spectrum(&grid, &p, &quiet(1), &ProtocolSettings::default()).unwrap();
        let argmin = |lo: f64, hi: f64| {
            (0..t.len())
                .filter(|&i| t.abscissa[i] > lo && t.abscissa[i] < hi)
                .min_by(|&a, &b| t.mean_p0[a].total_cmp(&t.mean_p0[b]))
                .map(|i| t.abscissa[i])
                .unwrap()
        };
        assert!((argmin(-400.0, 0.0) + 235.0).abs() <= 10.0);
        assert!((argmin(0.0, 400.0) - 235.0).abs() <= 10.0);

        let undressed = simulate_spectrum(&grid, &p.with_omega(0.0), &quiet(1), &ProtocolSettings::default()).unwrap();
        let i = (0..undressed.len()).min_by(|&a, &b| undressed.mean_p0[a].total_cmp(&undressed.mean_p0[b])).unwrap();
        assert!(undressed.abscissa[i].abs() < 1e-9);
        assert!(undressed.mean_p0[i] < 1e-6);
    }

    #[test]
    fn reference_contrast_near_unity() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let r = undressed_reference(RamseyKind::DressedMp, &grid(100, 0.2), &p, &ProtocolSettings::default(), CarbonWeights::UNPOLARIZED)
            .unwrap();
        assert!(r > 0.95 && r <= 1.0 + 1e-12, "{r}");
    }

    #[test]
    fn quiet_envelope_is_unity() {
        let p = NvPreset::nv2().params(581.0, 0.0);
        let w = khz_to_angular(150.0_f64.hypot(581.0));
        let pts = demodulated_envelope(RamseyKind::DressedMp, &[2.0, 5.0, 9.0], w, 16, &p, &quiet(4), &ProtocolSettings::default())
            .unwrap();
        for pt in pts {
            assert!((pt.envelope - 1.0).abs() < 1e-12 && pt.stderr < 1e-12);
        }
    }
}

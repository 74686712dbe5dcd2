//! Piecewise-constant pulse sequences and their unitary propagation.
//!
//! The frame rotates at ½ω_mech on the ±1 manifold and at the magnetic
//! carrier on |0⟩. Per ¹³C sublevel the block in `{+1, 0, −1}` order is
//!
//! ```text
//! ⎡ ε       0           ½ΩΣ          ⎤
//! ⎢ 0       Δc − κδT    ½Ω_mag e^{−iφ} ⎥
//! ⎣ ½ΩΣ     ½Ω_mag e^{iφ}   −ε       ⎦
//! ```
//!
//! with ε = γδb + ½(Δ ± A∥), Δc the carrier detuning and κ = dD/dT.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    basis_index, diagonalize_block, CarbonSublevel, Eigensystem, HermitianMatrix6, LinalgError, SpinProjection,
};
use crate::spin_model::{total_drive, EnvironmentSample, SystemParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("segment {index}: {reason}")]
    MalformedSequence { index: usize, reason: String },
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid simulation setting: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Noise(#[from] crate::dephasing_analytics::DephasingError),
}

/// Populations of the two ¹³C sublevels in the initial state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarbonWeights {
    pub up: f64,
    pub down: f64,
}

impl CarbonWeights {
    pub const UNPOLARIZED: CarbonWeights = CarbonWeights { up: 0.5, down: 0.5 };

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = self.up >= 0.0 && self.down >= 0.0 && (self.up + self.down - 1.0).abs() < 1e-12;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidConfig(format!("carbon weights ({}, {}) must be probabilities summing to 1", self.up, self.down)))
        }
    }

    pub fn get(&self, sublevel: CarbonSublevel) -> f64 {
        match sublevel {
            CarbonSublevel::Up => self.up,
            CarbonSublevel::Down => self.down,
        }
    }
}

impl Default for CarbonWeights {
    fn default() -> Self {
        Self::UNPOLARIZED
    }
}

/// Six amplitudes in the `{+1↑, +1↓, 0↑, 0↓, −1↑, −1↓}` basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    pub amplitudes: [C64; 6],
}

impl SpinState {
    /// |0⟩ with the ¹³C sublevels weighted by `weights`.
    pub fn reset(weights: CarbonWeights) -> Self {
        let mut amplitudes = [C64::new(0.0, 0.0); 6];
        for sub in CarbonSublevel::ALL {
            amplitudes[basis_index(SpinProjection::Zero, sub)] = C64::new(weights.get(sub).sqrt(), 0.0);
        }
        Self { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn block_weight(&self, sublevel: CarbonSublevel) -> f64 {
        SpinProjection::ALL.iter().map(|&ms| self.amplitudes[basis_index(ms, sublevel)].norm_sqr()).sum()
    }

    pub fn population(&self, ms: SpinProjection, sublevel: CarbonSublevel) -> f64 {
        self.amplitudes[basis_index(ms, sublevel)].norm_sqr()
    }

    /// Total population in |0⟩.
    pub fn p0(&self) -> f64 {
        CarbonSublevel::ALL.iter().map(|&s| self.population(SpinProjection::Zero, s)).sum()
    }

    pub fn block(&self, sublevel: CarbonSublevel) -> Vector3<C64> {
        Vector3::from_fn(|i, _| self.amplitudes[2 * i + sublevel.index()])
    }

    pub fn set_block(&mut self, sublevel: CarbonSublevel, v: &Vector3<C64>) {
        for i in 0..3 {
            self.amplitudes[2 * i + sublevel.index()] = v[i];
        }
    }
}

/// Which transitions a magnetic pulse couples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// 0↔−1 only.
    SingleQuantum,
    /// Equal couplings on 0↔+1 and 0↔−1.
    DoubleQuantum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticPulse {
    /// Rabi strength, rad/µs.
    pub omega_mag: f64,
    /// Carrier detuning in the frame above, rad/µs.
    pub detuning_mag: f64,
    pub phase: f64,
    pub duration: f64,
    pub coupling: Coupling,
}

impl MagneticPulse {
    pub fn validate(&self) -> Result<(), SimError> {
        let finite = [self.omega_mag, self.detuning_mag, self.phase, self.duration].iter().all(|v| v.is_finite());
        if !finite {
            return Err(SimError::InvalidPulse("non-finite field".into()));
        }
        if self.duration < 0.0 || self.omega_mag < 0.0 {
            return Err(SimError::InvalidPulse("negative duration or strength".into()));
        }
        Ok(())
    }

    /// Pulse of rotation angle `area` at bare Rabi strength `omega_mag`.
    pub fn with_area(omega_mag: f64, area: f64, detuning_mag: f64, phase: f64, coupling: Coupling) -> Self {
        Self { omega_mag, detuning_mag, phase, duration: area / omega_mag, coupling }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "segment", rename_all = "snake_case")]
pub enum Segment {
    Reset,
    Pulse(MagneticPulse),
    /// Evolution under the mechanical drive only.
    FreeEvolution { duration: f64 },
    Readout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Carrier detuning that sets the |0⟩ frame energy during free evolution.
    pub frame_detuning: f64,
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new(frame_detuning: f64, segments: Vec<Segment>) -> Self {
        Self { frame_detuning, segments }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let n = self.segments.len();
        if n < 2 {
            return Err(SimError::MalformedSequence { index: n.saturating_sub(1), reason: "need Reset … Readout".into() });
        }
        for (index, seg) in self.segments.iter().enumerate() {
            let bad = |reason: &str| Err(SimError::MalformedSequence { index, reason: reason.into() });
            match seg {
                Segment::Reset if index != 0 => return bad("Reset only allowed first"),
                Segment::Readout if index != n - 1 => return bad("Readout only allowed last"),
                Segment::Pulse(p) => {
                    if let Err(e) = p.validate() {
                        return bad(&e.to_string());
                    }
                }
                Segment::FreeEvolution { duration } if !(*duration >= 0.0 && duration.is_finite()) => {
                    return bad("free evolution duration must be finite and non-negative")
                }
                _ => {}
            }
        }
        if self.segments[0] != Segment::Reset {
            return Err(SimError::MalformedSequence { index: 0, reason: "sequence must begin with Reset".into() });
        }
        if self.segments[n - 1] != Segment::Readout {
            return Err(SimError::MalformedSequence { index: n - 1, reason: "sequence must end with Readout".into() });
        }
        Ok(())
    }
}

fn block(params: &SystemParams, env: &EnvironmentSample, sublevel: CarbonSublevel, detuning: f64, magnetic: Option<&MagneticPulse>) -> Matrix3<C64> {
    let eps = params.gamma * env.delta_b + 0.5 * (params.delta + sublevel.sign() * params.a_par);
    let zero = detuning - params.dd_dt * env.delta_t;
    let mech = C64::new(0.5 * total_drive(params, env), 0.0);
    let mut m = Matrix3::from_diagonal(&Vector3::new(C64::new(eps, 0.0), C64::new(zero, 0.0), C64::new(-eps, 0.0)));
    m[(0, 2)] = mech;
    m[(2, 0)] = mech;
    if let Some(p) = magnetic {
        let c = C64::from_polar(0.5 * p.omega_mag, p.phase);
        m[(2, 1)] = c;
        m[(1, 2)] = c.conj();
        if p.coupling == Coupling::DoubleQuantum {
            m[(0, 1)] = c;
            m[(1, 0)] = c.conj();
        }
    }
    m
}

/// Frame Hamiltonian during a magnetic pulse.
pub fn drive_hamiltonian(params: &SystemParams, env: &EnvironmentSample, pulse: &MagneticPulse) -> HermitianMatrix6 {
    let up = block(params, env, CarbonSublevel::Up, pulse.detuning_mag, Some(pulse));
    let down = block(params, env, CarbonSublevel::Down, pulse.detuning_mag, Some(pulse));
    HermitianMatrix6::from_blocks(&up, &down).expect("drive Hamiltonian is Hermitian by construction")
}

/// Frame Hamiltonian with the magnetic drive off.
pub fn free_hamiltonian(params: &SystemParams, env: &EnvironmentSample, frame_detuning: f64) -> HermitianMatrix6 {
    let up = block(params, env, CarbonSublevel::Up, frame_detuning, None);
    let down = block(params, env, CarbonSublevel::Down, frame_detuning, None);
    HermitianMatrix6::from_blocks(&up, &down).expect("free Hamiltonian is Hermitian by construction")
}

/// Eigensystems of both ¹³C blocks; reusable for many durations.
#[derive(Clone, Debug)]
pub struct BlockEigensystems {
    blocks: [Eigensystem<3>; 2],
}

impl BlockEigensystems {
    pub fn new(h: &HermitianMatrix6) -> Result<Self, SimError> {
        if !h.is_carbon_block_diagonal() {
            return Err(LinalgError::NotBlockDiagonal { magnitude: h.off_block_magnitude() }.into());
        }
        Ok(Self {
            blocks: [
                diagonalize_block(&h.carbon_block(CarbonSublevel::Up))?,
                diagonalize_block(&h.carbon_block(CarbonSublevel::Down))?,
            ],
        })
    }

    pub fn evolve(&self, state: &mut SpinState, duration: f64) {
        if duration == 0.0 {
            return;
        }
        for sub in CarbonSublevel::ALL {
            let u = self.blocks[sub.index()].propagator(duration);
            let v = u * state.block(sub);
            state.set_block(sub, &v);
        }
    }

    /// Evolution under the same pulse with its phase shifted by `phase`.
    /// A phase shift is the similarity transform Z·H·Z† with
    /// Z = diag(e^{iφ}, 1, e^{iφ}), so the eigensystem can be reused.
    pub fn evolve_phased(&self, state: &mut SpinState, duration: f64, phase: f64) {
        if phase == 0.0 {
            return self.evolve(state, duration);
        }
        let z = C64::from_polar(1.0, phase);
        for sub in CarbonSublevel::ALL {
            let mut v = state.block(sub);
            v[0] *= z.conj();
            v[2] *= z.conj();
            let mut v = self.blocks[sub.index()].propagator(duration) * v;
            v[0] *= z;
            v[2] *= z;
            state.set_block(sub, &v);
        }
    }
}

/// ψ ← exp(−i·h·t)·ψ.
pub fn propagate(state: &SpinState, h: &HermitianMatrix6, duration: f64) -> Result<SpinState, SimError> {
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(SimError::InvalidPulse(format!("duration {duration} must be finite and non-negative")));
    }
    let mut out = *state;
    BlockEigensystems::new(h)?.evolve(&mut out, duration);
    Ok(out)
}

/// Runs a sequence and returns the population left in |0⟩.
pub fn run_sequence(
    seq: &PulseSequence,
    params: &SystemParams,
    env: &EnvironmentSample,
    weights: CarbonWeights,
) -> Result<f64, SimError> {
    seq.validate()?;
    weights.validate()?;
    let mut state = SpinState::reset(weights);
    let mut free: Option<BlockEigensystems> = None;
    for seg in &seq.segments {
        match seg {
            Segment::Reset => state = SpinState::reset(weights),
            Segment::Pulse(p) => {
                BlockEigensystems::new(&drive_hamiltonian(params, env, p))?.evolve(&mut state, p.duration);
            }
            Segment::FreeEvolution { duration } => {
                if free.is_none() {
                    free = Some(BlockEigensystems::new(&free_hamiltonian(params, env, seq.frame_detuning))?);
                }
                free.as_ref().expect("initialized above").evolve(&mut state, *duration);
            }
            Segment::Readout => {}
        }
    }
    Ok(state.p0())
}

//! Quasi-static Monte Carlo of Ramsey and spectroscopy pulse sequences.

pub mod fourier;
pub mod protocols;
pub mod rng;
pub mod sequence;
pub mod trace;

pub use fourier::{fourier_magnitude, magnitude_spectrum, FourierError, Spectrum};
pub use protocols::{
    demodulated_envelope, ramsey_sequence, simulate_ramsey, simulate_spectrum, undressed_reference, EnvelopePoint,
    ProtocolSettings, RamseyKind, RamseyShot, SimConfig,
};
pub use rng::{sample_environment, shot_rng};
pub use sequence::{
    drive_hamiltonian, free_hamiltonian, propagate, run_sequence, BlockEigensystems, CarbonWeights, Coupling,
    MagneticPulse, PulseSequence, Segment, SimError, SpinState,
};
pub use trace::{Trace, TraceError, TraceMetadata};

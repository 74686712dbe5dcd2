//! Continuous dynamical decoupling of an NV-center spin by a mechanical drive.
//!
//! The crate models the dressed spin, predicts dephasing times analytically,
//! simulates pulse sequences under quasi-static noise and fits the resulting
//! traces.

pub mod dephasing_analytics;
pub mod linalg;
pub mod model_fitting;
pub mod presets;
pub mod pulse_sim;
pub mod spin_model;
pub mod units;

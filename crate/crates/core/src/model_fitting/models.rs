//! The Ramsey and spectroscopy model functions.
//!
//! Internal units: delays in µs, frequencies in rad/µs, phases in rad. The
//! formulas only involve products of a delay and a frequency, so a trace in
//! ms fits the same model with every frequency parameter scaled by 10³.

use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::nlls::{ModelFunction, ParamSpec, ParamUnit};

const INF: f64 = f64::INFINITY;
const T2_BOUNDS: (f64, f64) = (1e-9, 1e9);
const PHASE_BOUND: f64 = 4.0 * std::f64::consts::PI;

/// Channel of the undressed reference in the joint spectrum model.
pub const UNDRESSED_CHANNEL: usize = 1;
/// Channel of the dressed spectrum in the joint spectrum model.
pub const DRESSED_CHANNEL: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Undressed,
    Ramsey0p,
    RamseyMp,
    MaxProtection,
    SpectrumJoint,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::Undressed, ModelKind::Ramsey0p, ModelKind::RamseyMp, ModelKind::MaxProtection, ModelKind::SpectrumJoint];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Undressed => "undressed",
            ModelKind::Ramsey0p => "ramsey_0p",
            ModelKind::RamseyMp => "ramsey_mp",
            ModelKind::MaxProtection => "max_protection",
            ModelKind::SpectrumJoint => "spectrum_joint",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown model {s:?} (expected one of undressed, ramsey_0p, ramsey_mp, max_protection, spectrum_joint)"))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed inputs of the models. Which ones matter depends on the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelInputs {
    pub omega_rot: f64,
    pub a_par: f64,
    /// Mean undressed P₀, the contrast reference of the {m,p} fits.
    pub p0_ud: f64,
    /// γσ_b in rad/µs.
    pub gamma_sigma_b: f64,
    /// Free precession added to each delay by the finite π/2 pulses, µs.
    /// Only the undressed and {0,p} models use it.
    pub tau_offset: f64,
}

fn gaussian(tau: f64, t2: f64) -> f64 {
    (-(tau / t2).powi(2)).exp()
}

/// c − (a/4)·e^{−s²/T₂*²}·[cos(ω_rot τ + (Δ_mag+A∥/2)s) + cos(ω_rot τ + (Δ_mag−A∥/2)s)]
/// with s = τ + t₀. The readout phase rotation only sees τ; the spin also
/// precesses during the pulses, which the fixed `tau_offset` t₀ absorbs.
pub fn model_undressed_ramsey(omega_rot: f64, a_par_guess: f64) -> ModelFunction {
    ModelFunction {
        id: ModelKind::Undressed.as_str().into(),
        params: vec![
            ParamSpec::free("c", ParamUnit::Dimensionless, 0.5, -1.0, 2.0),
            ParamSpec::free("a", ParamUnit::Dimensionless, 1.0, -4.0, 4.0),
            ParamSpec::free("t2", ParamUnit::Microseconds, 5.0, T2_BOUNDS.0, T2_BOUNDS.1),
            ParamSpec::free("delta_mag", ParamUnit::AngularKhz, 0.0, -INF, INF),
            ParamSpec::free("a_par", ParamUnit::AngularKhz, a_par_guess.abs(), 0.0, INF),
            ParamSpec::fixed("omega_rot", ParamUnit::AngularKhz, omega_rot),
            ParamSpec::fixed("tau_offset", ParamUnit::Microseconds, 0.0),
        ],
        eval: Arc::new(|p, tau, _| {
            let (c, a, t2, dm, ap, wr, t0) = (p[0], p[1], p[2], p[3], p[4], p[5], p[6]);
            let s = tau + t0;
            let base = wr * tau;
            c - 0.25 * a * gaussian(s, t2) * ((base + (dm + 0.5 * ap) * s).cos() + (base + (dm - 0.5 * ap) * s).cos())
        }),
        gradient: None,
    }
}

/// c + ¼e^{−s²/T₂*²}{a_p·cos(ω_rot τ + Δ_mag s + φ) + a_m·cos(ω_rot τ + (Δ_mag+√(Ω²+A∥²))s + φ)}
/// with s = τ + t₀ as in [`model_undressed_ramsey`].
///
/// T₂* is free as well: the envelope is shared by both branches and has to
/// be fitted to report a coherence time.
pub fn model_ramsey_0p(a_par: f64, omega_rot: f64) -> ModelFunction {
    ModelFunction {
        id: ModelKind::Ramsey0p.as_str().into(),
        params: vec![
            ParamSpec::free("c", ParamUnit::Dimensionless, 0.5, -1.0, 2.0),
            ParamSpec::free("a_p", ParamUnit::Dimensionless, 1.0, -4.0, 4.0),
            ParamSpec::free("a_m", ParamUnit::Dimensionless, 1.0, -4.0, 4.0),
            ParamSpec::free("phi", ParamUnit::Radians, 0.0, -PHASE_BOUND, PHASE_BOUND),
            ParamSpec::free("omega", ParamUnit::AngularKhz, 1.0, 0.0, INF),
            ParamSpec::free("delta_mag", ParamUnit::AngularKhz, 0.0, -INF, INF),
            ParamSpec::free("t2", ParamUnit::Microseconds, 10.0, T2_BOUNDS.0, T2_BOUNDS.1),
            ParamSpec::fixed("a_par", ParamUnit::AngularKhz, a_par),
            ParamSpec::fixed("omega_rot", ParamUnit::AngularKhz, omega_rot),
            ParamSpec::fixed("tau_offset", ParamUnit::Microseconds, 0.0),
        ],
        eval: Arc::new(|p, tau, _| {
            let (c, ap, am, phi, om, dm, t2, apar, wr, t0) =
                (p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9]);
            let s = tau + t0;
            let base = wr * tau + dm * s + phi;
            let split = om.hypot(apar);
            c + 0.25 * gaussian(s, t2) * (ap * base.cos() + am * (base + split * s).cos())
        }),
        gradient: None,
    }
}

/// c + (⟨P₀,ud⟩/2)·e^{−τ²/T₂*²}·cos(τ√(A∥²+Ω²) + φ), with an analytic gradient.
pub fn model_ramsey_mp(a_par: f64, p0_ud: f64) -> ModelFunction {
    ModelFunction {
        id: ModelKind::RamseyMp.as_str().into(),
        params: vec![
            ParamSpec::free("c", ParamUnit::Dimensionless, 0.5, -1.0, 2.0),
            ParamSpec::free("t2", ParamUnit::Microseconds, 10.0, T2_BOUNDS.0, T2_BOUNDS.1),
            ParamSpec::free("omega", ParamUnit::AngularKhz, 1.0, 0.0, INF),
            ParamSpec::free("phi", ParamUnit::Radians, 0.0, -PHASE_BOUND, PHASE_BOUND),
            ParamSpec::fixed("a_par", ParamUnit::AngularKhz, a_par),
            ParamSpec::fixed("p0_ud", ParamUnit::Dimensionless, p0_ud),
        ],
        eval: Arc::new(|p, tau, _| {
            let (c, t2, om, phi, apar, pud) = (p[0], p[1], p[2], p[3], p[4], p[5]);
            c + 0.5 * pud * gaussian(tau, t2) * (tau * apar.hypot(om) + phi).cos()
        }),
        gradient: Some(Arc::new(|p, tau, _, g| {
            let (t2, om, phi, apar, pud) = (p[1], p[2], p[3], p[4], p[5]);
            let w = apar.hypot(om);
            let e = gaussian(tau, t2);
            let (s, c) = (tau * w + phi).sin_cos();
            let dw_dom = if w > 0.0 { om / w } else { 0.0 };
            let dw_da = if w > 0.0 { apar / w } else { 0.0 };
            g[0] = 1.0;
            g[1] = 0.5 * pud * c * e * 2.0 * tau * tau / t2.powi(3);
            g[2] = -0.5 * pud * e * s * tau * dw_dom;
            g[3] = -0.5 * pud * e * s;
            g[4] = -0.5 * pud * e * s * tau * dw_da;
            g[5] = 0.5 * e * c;
        })),
    }
}

/// c + (⟨P₀,ud⟩/4)·[h(τ)·cos(Ωτ+φ) + e^{−τ²/T₂*↑²}·cos(√(Ω²+4A∥²)τ+φ)],
/// h(τ) = √(Ω/√(Ω² + (2γσ_b)⁴τ²)).
pub fn model_max_protection(p0_ud: f64, gamma_sigma_b: f64, a_par: f64) -> ModelFunction {
    ModelFunction {
        id: ModelKind::MaxProtection.as_str().into(),
        params: vec![
            ParamSpec::free("omega", ParamUnit::AngularKhz, 1.0, 1e-12, INF),
            ParamSpec::free("phi", ParamUnit::Radians, 0.0, -PHASE_BOUND, PHASE_BOUND),
            ParamSpec::free("c", ParamUnit::Dimensionless, 0.5, -1.0, 2.0),
            ParamSpec::free("t2_up", ParamUnit::Microseconds, 4.0, T2_BOUNDS.0, T2_BOUNDS.1),
            ParamSpec::fixed("p0_ud", ParamUnit::Dimensionless, p0_ud),
            ParamSpec::fixed("gamma_sigma_b", ParamUnit::AngularKhz, gamma_sigma_b),
            ParamSpec::fixed("a_par", ParamUnit::AngularKhz, a_par),
        ],
        eval: Arc::new(|p, tau, _| {
            let (om, phi, c, t2, pud, gs, apar) = (p[0], p[1], p[2], p[3], p[4], p[5], p[6]);
            c + 0.25 * pud * (max_protection_envelope(tau, om, gs) * (om * tau + phi).cos()
                + gaussian(tau, t2) * (om.hypot(2.0 * apar) * tau + phi).cos())
        }),
        gradient: None,
    }
}

/// h(τ) of the protected sublevel.
pub fn max_protection_envelope(tau: f64, omega: f64, gamma_sigma_b: f64) -> f64 {
    let g2 = (2.0 * gamma_sigma_b).powi(2);
    (omega / omega.hypot(g2 * tau)).sqrt()
}

fn lorentzian(x: f64, x0: f64, width: f64) -> f64 {
    1.0 / ((2.0 / width).powi(2) * (x - x0).powi(2) + 1.0)
}

/// Dressed spectrum (channel 0) as two Lorentzian dips at
/// ω₀,₋₁ + ½Δ ± ½√(Δ²+Ω²), undressed spectrum (channel 1) as one dip at ω₀,₋₁.
/// The abscissa is the magnetic detuning in rad/µs.
pub fn model_spectrum_joint() -> ModelFunction {
    ModelFunction {
        id: ModelKind::SpectrumJoint.as_str().into(),
        params: vec![
            ParamSpec::free("c_d", ParamUnit::Dimensionless, 1.0, -1.0, 2.0),
            ParamSpec::free("a_d1", ParamUnit::Dimensionless, 0.5, -2.0, 2.0),
            ParamSpec::free("a_d2", ParamUnit::Dimensionless, 0.5, -2.0, 2.0),
            ParamSpec::free("gamma_d", ParamUnit::AngularKhz, 0.5, 1e-12, INF),
            ParamSpec::free("delta", ParamUnit::AngularKhz, 0.0, -INF, INF),
            ParamSpec::free("omega", ParamUnit::AngularKhz, 1.0, 0.0, INF),
            ParamSpec::free("c_ud", ParamUnit::Dimensionless, 1.0, -1.0, 2.0),
            ParamSpec::free("a_ud", ParamUnit::Dimensionless, 0.5, -2.0, 2.0),
            ParamSpec::free("gamma_ud", ParamUnit::AngularKhz, 0.5, 1e-12, INF),
            ParamSpec::free("w0m1", ParamUnit::AngularKhz, 0.0, -INF, INF),
        ],
        eval: Arc::new(|p, x, ch| {
            let w0 = p[9];
            if ch == UNDRESSED_CHANNEL {
                return p[6] - p[7] * lorentzian(x, w0, p[8]);
            }
            let (lo, hi) = spectrum_centres(p[4], p[5], w0);
            p[0] - p[1] * lorentzian(x, lo, p[3]) - p[2] * lorentzian(x, hi, p[3])
        }),
        gradient: None,
    }
}

/// Lower and upper dressed dip centres.
pub fn spectrum_centres(delta: f64, omega: f64, w0m1: f64) -> (f64, f64) {
    let (m, p) = crate::spin_model::dressed_transition_offsets(omega, delta);
    (w0m1 + m, w0m1 + p)
}

/// Model of `kind` with its fixed inputs applied.
pub fn build_model(kind: ModelKind, inputs: &ModelInputs) -> ModelFunction {
    match kind {
        ModelKind::Undressed => {
            model_undressed_ramsey(inputs.omega_rot, inputs.a_par).with_frozen("tau_offset", inputs.tau_offset)
        }
        ModelKind::Ramsey0p => model_ramsey_0p(inputs.a_par, inputs.omega_rot).with_frozen("tau_offset", inputs.tau_offset),
        ModelKind::RamseyMp => model_ramsey_mp(inputs.a_par, inputs.p0_ud),
        ModelKind::MaxProtection => model_max_protection(inputs.p0_ud, inputs.gamma_sigma_b, inputs.a_par),
        ModelKind::SpectrumJoint => model_spectrum_joint(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::detuning_from_lines;
    use crate::units::khz_to_angular;

    #[test]
    fn names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("lorentz".parse::<ModelKind>().is_err());
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let m = model_ramsey_mp(khz_to_angular(-150.0), 0.9);
        let grad = m.gradient.clone().unwrap();
        let p = [0.45, 13.0, khz_to_angular(581.0), 0.3, khz_to_angular(-150.0), 0.9];
        let mut g = [0.0; 6];
        for tau in [0.0, 0.7, 3.3, 9.1, 17.5] {
            grad(&p, tau, 0, &mut g);
            for k in 0..6 {
                let h = 1e-6 * p[k].abs().max(1.0);
                let (mut up, mut dn) = (p, p);
                up[k] += h;
                dn[k] -= h;
                let fd = (m.predict(&up, tau, 0) - m.predict(&dn, tau, 0)) / (2.0 * h);
                let scale = g[k].abs().max(1e-3);
                assert!((fd - g[k]).abs() < 1e-4 * scale, "param {k} tau {tau}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn detuning_from_lines_exact_on_model_centres() {
        for (d, o, w0) in [(0.0, 2.9, 0.1), (-0.9, 2.2, -0.4), (1.3, 0.5, 2.0)] {
            let (lo, hi) = spectrum_centres(d, o, w0);
            assert!((detuning_from_lines(lo, hi, w0) - d).abs() < 1e-12);
            assert!(((hi - lo) - d.hypot(o)).abs() < 1e-12);
        }
    }

    #[test]
    fn max_protection_envelope_limits() {
        assert_eq!(max_protection_envelope(0.0, 2.8, 0.26), 1.0);
        let gs = khz_to_angular(42.0);
        // Protected branch is still above 1/e at 50 µs.
        assert!(max_protection_envelope(50.0, khz_to_angular(455.7), gs) > (-1.0f64).exp());
        // Matches the analytics implementation.
        let gamma = crate::units::gamma_from_mhz_per_gauss(2.8);
        let sb = gs / gamma;
        let h = crate::dephasing_analytics::envelope_max_protection(7.0, 2.86, sb, gamma).unwrap();
        assert!((h - max_protection_envelope(7.0, 2.86, gs)).abs() < 1e-14);
    }

    #[test]
    fn undressed_is_symmetric_in_splitting_sign() {
        let m = model_undressed_ramsey(1.57, 0.9);
        let p = [0.5, 0.9, 5.9, 0.1, 0.91, 1.57, 0.36];
        let mut q = p;
        q[4] = -0.91;
        for tau in [0.3, 2.0, 8.0] {
            assert_eq!(m.predict(&p, tau, 0), m.predict(&q, tau, 0));
        }
    }

    #[test]
    fn zero_offset_is_the_instantaneous_pulse_form() {
        let (wr, dm, ap, t2) = (1.57, 0.1, 0.91, 5.9);
        let und = model_undressed_ramsey(wr, ap);
        let p = [0.5, 0.9, t2, dm, ap, wr, 0.0];
        let (om, apar, phi) = (2.2, -0.9, 0.4);
        let zp = model_ramsey_0p(apar, wr);
        let q = [0.5, 0.7, 0.3, phi, om, dm, t2, apar, wr, 0.0];
        for tau in [0.0f64, 0.8, 3.1, 7.7] {
            let e = (-(tau / t2) * (tau / t2)).exp();
            let w = wr + dm;
            let want = 0.5 - 0.225 * e * (((w + ap / 2.0) * tau).cos() + ((w - ap / 2.0) * tau).cos());
            assert!((und.predict(&p, tau, 0) - want).abs() < 1e-12);
            let split = (om * om + apar * apar).sqrt();
            let want = 0.5 + 0.25 * e * (0.7 * (w * tau + phi).cos() + 0.3 * ((w + split) * tau + phi).cos());
            assert!((zp.predict(&q, tau, 0) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn offset_shifts_precession_but_not_the_frame() {
        let m = model_undressed_ramsey(1.57, 0.0);
        let t0 = 0.36;
        let p = [0.5, 1.0, 1e9, 0.2, 0.0, 1.57, t0];
        for tau in [0.5f64, 2.5] {
            let want = 0.5 - 0.5 * (1.57 * tau + 0.2 * (tau + t0)).cos();
            assert!((m.predict(&p, tau, 0) - want).abs() < 1e-9);
        }
        let built = build_model(
            ModelKind::Ramsey0p,
            &ModelInputs { omega_rot: 1.57, a_par: -0.9, p0_ud: 1.0, gamma_sigma_b: 0.0, tau_offset: t0 },
        );
        let i = built.index("tau_offset").unwrap();
        assert_eq!(built.initial()[i], t0);
        assert!(built.params[i].frozen);
    }
}

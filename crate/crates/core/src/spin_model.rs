//! Lab-frame, rotating-frame and dressed Hamiltonians of an NV center spin
//! driven on the |+1⟩↔|−1⟩ transition by a mechanical resonator, with a
//! weakly coupled ¹³C nuclear spin.
//!
//! Conventions: ħ = 1, frequencies in rad/µs, times in µs, fields in mG.

use nalgebra::{Matrix3, Matrix6};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{basis_index, CarbonSublevel, HermitianMatrix6, LinalgError, SpinProjection};
use crate::units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinModelError {
    #[error("invalid system parameter: {0}")]
    InvalidParameter(String),
    #[error("a Larmor frequency needs two distinct levels, got {0:?} twice")]
    IdenticalLevels(DressedLevel),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Physical constants and static configuration of one NV center.
///
/// The mechanical mode frequency is not stored; it is always
/// `2·gamma·b + delta`, see [`SystemParams::omega_mech`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Gyromagnetic ratio, rad·µs⁻¹·mG⁻¹.
    pub gamma: f64,
    /// Zero-field splitting D₀, rad/µs.
    pub d0: f64,
    /// Thermal slope dD/dT, rad·µs⁻¹·°C⁻¹.
    pub dd_dt: f64,
    /// Static axial field, mG.
    pub b: f64,
    /// Mechanical Rabi field Ω, rad/µs.
    pub omega: f64,
    /// Mechanical detuning Δ, rad/µs.
    pub delta: f64,
    /// Signed ¹³C hyperfine coupling A∥, rad/µs.
    pub a_par: f64,
    /// Mechanical quality factor.
    pub q_factor: f64,
}

impl SystemParams {
    pub fn new(
        gamma: f64,
        d0: f64,
        dd_dt: f64,
        b: f64,
        omega: f64,
        delta: f64,
        a_par: f64,
        q_factor: f64,
    ) -> Result<Self, SpinModelError> {
        let p = Self { gamma, d0, dd_dt, b, omega, delta, a_par, q_factor };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from the mechanical mode frequency; the static
    /// field is chosen so that `omega_mech = 2γb + Δ`.
    pub fn from_mech_frequency(
        gamma: f64,
        d0: f64,
        dd_dt: f64,
        omega_mech: f64,
        omega: f64,
        delta: f64,
        a_par: f64,
        q_factor: f64,
    ) -> Result<Self, SpinModelError> {
        if !(gamma > 0.0) {
            return Err(SpinModelError::InvalidParameter("gamma must be positive".into()));
        }
        let b = (omega_mech - delta) / (2.0 * gamma);
        Self::new(gamma, d0, dd_dt, b, omega, delta, a_par, q_factor)
    }

    pub fn validate(&self) -> Result<(), SpinModelError> {
        let fields = [
            ("gamma", self.gamma),
            ("d0", self.d0),
            ("dd_dt", self.dd_dt),
            ("b", self.b),
            ("omega", self.omega),
            ("delta", self.delta),
            ("a_par", self.a_par),
            ("q_factor", self.q_factor),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SpinModelError::InvalidParameter(format!("{name} is not finite")));
        }
        if self.gamma <= 0.0 {
            return Err(SpinModelError::InvalidParameter("gamma must be positive".into()));
        }
        if self.q_factor <= 0.0 {
            return Err(SpinModelError::InvalidParameter("q_factor must be positive".into()));
        }
        if self.omega < 0.0 {
            return Err(SpinModelError::InvalidParameter("omega must be non-negative".into()));
        }
        Ok(())
    }

    /// Mechanical mode frequency, `2γb + Δ`.
    pub fn omega_mech(&self) -> f64 {
        2.0 * self.gamma * self.b + self.delta
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }

    /// Changes Δ at fixed mechanical frequency (the field is retuned).
    pub fn with_delta(mut self, delta: f64) -> Self {
        let omega_mech = self.omega_mech();
        self.delta = delta;
        self.b = (omega_mech - delta) / (2.0 * self.gamma);
        self
    }

    pub fn with_a_par(mut self, a_par: f64) -> Self {
        self.a_par = a_par;
        self
    }
}

/// One quasi-static draw of the environment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSample {
    /// Field fluctuation δb, mG.
    pub delta_b: f64,
    /// Drive amplitude fluctuation δΩ, rad/µs.
    pub delta_omega: f64,
    /// Temperature offset δT, °C.
    pub delta_t: f64,
}

impl EnvironmentSample {
    pub const ZERO: EnvironmentSample = EnvironmentSample { delta_b: 0.0, delta_omega: 0.0, delta_t: 0.0 };

    pub fn is_finite(&self) -> bool {
        self.delta_b.is_finite() && self.delta_omega.is_finite() && self.delta_t.is_finite()
    }
}

/// Total drive Ω + δΩ.
#[inline]
pub fn total_drive(params: &SystemParams, env: &EnvironmentSample) -> f64 {
    params.omega + env.delta_omega
}

/// Zero-field splitting D = D₀ + (dD/dT)·δT.
#[inline]
pub fn zero_field_splitting(params: &SystemParams, env: &EnvironmentSample) -> f64 {
    params.d0 + params.dd_dt * env.delta_t
}

/// ξ± = Δ + 2γδb ± A∥ for the given nuclear sublevel.
#[inline]
pub fn xi(params: &SystemParams, env: &EnvironmentSample, sublevel: CarbonSublevel) -> f64 {
    params.delta + 2.0 * params.gamma * env.delta_b + sublevel.sign() * params.a_par
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diagonal6(d: [f64; 6]) -> Matrix6<C64> {
    Matrix6::from_fn(|i, j| if i == j { real(d[i]) } else { C64::new(0.0, 0.0) })
}

fn set_mechanical_coupling(m: &mut Matrix6<C64>, value: f64) {
    for sub in CarbonSublevel::ALL {
        let p = basis_index(SpinProjection::Plus, sub);
        let n = basis_index(SpinProjection::Minus, sub);
        m[(p, n)] = real(value);
        m[(n, p)] = real(value);
    }
}

/// Lab-frame Hamiltonian at time `t` (µs), without magnetic driving.
pub fn build_lab_hamiltonian(params: &SystemParams, env: &EnvironmentSample, t: f64) -> HermitianMatrix6 {
    let zeeman = params.gamma * (params.b + env.delta_b);
    let half_a = 0.5 * params.a_par;
    let d = zero_field_splitting(params, env);
    let mut m = diagonal6([
        zeeman + half_a,
        zeeman - half_a,
        -d,
        -d,
        -zeeman - half_a,
        -zeeman + half_a,
    ]);
    set_mechanical_coupling(&mut m, total_drive(params, env) * (params.omega_mech() * t).cos());
    HermitianMatrix6::new(m).expect("lab Hamiltonian is real symmetric")
}

/// Rotating-frame Hamiltonian after the rotating wave approximation, frame
/// at ½ω_mech. The ±1 diagonal is `±[γ(b+δb) + ½(Δ ± A∥)]` for m_I = ±½.
pub fn build_rotating_hamiltonian(params: &SystemParams, env: &EnvironmentSample) -> HermitianMatrix6 {
    let zeeman = params.gamma * (params.b + env.delta_b);
    let d = zero_field_splitting(params, env);
    let up = zeeman + 0.5 * (params.delta + params.a_par);
    let down = zeeman + 0.5 * (params.delta - params.a_par);
    let mut m = diagonal6([up, down, -d, -d, -up, -down]);
    set_mechanical_coupling(&mut m, 0.5 * total_drive(params, env));
    HermitianMatrix6::new(m).expect("rotating-frame Hamiltonian is real symmetric")
}

/// Static part `γb·S_z` carried by [`build_rotating_hamiltonian`]; removing it
/// leaves the ±1 manifold centred on zero.
pub fn static_zeeman_shift(params: &SystemParams) -> [f64; 6] {
    let z = params.gamma * params.b;
    [z, z, 0.0, 0.0, -z, -z]
}

/// Rotating-frame Hamiltonian with the static Zeeman shift removed. Its
/// eigenvalues are exactly the dressed energies.
pub fn dressed_frame_hamiltonian(params: &SystemParams, env: &EnvironmentSample) -> HermitianMatrix6 {
    let mut m = build_rotating_hamiltonian(params, env).into_inner();
    for (i, s) in static_zeeman_shift(params).into_iter().enumerate() {
        m[(i, i)] -= real(s);
    }
    HermitianMatrix6::new(m).expect("shift keeps the matrix Hermitian")
}

/// Dressed-state label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DressedLabel {
    Zero,
    M,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DressedLevel {
    pub label: DressedLabel,
    pub sublevel: CarbonSublevel,
}

impl DressedLevel {
    pub const fn new(label: DressedLabel, sublevel: CarbonSublevel) -> Self {
        Self { label, sublevel }
    }
}

/// The six dressed energies, ordered `0↑, 0↓, m↑, m↓, p↑, p↓`.
#[derive(Clone, Debug, PartialEq)]
pub struct DressedLevels {
    pub levels: [(DressedLevel, f64); 6],
}

impl DressedLevels {
    pub fn energy(&self, level: DressedLevel) -> f64 {
        self.levels
            .iter()
            .find(|(l, _)| *l == level)
            .map(|(_, e)| *e)
            .expect("every level is present")
    }

    pub fn energies(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.levels[i].1)
    }
}

/// Closed-form dressed energies `{−D, ∓½√((Ω+δΩ)² + ξ±²)}`.
pub fn dressed_energies(params: &SystemParams, env: &EnvironmentSample) -> DressedLevels {
    use CarbonSublevel::{Down, Up};
    use DressedLabel::{M, P, Zero};
    let d = zero_field_splitting(params, env);
    let drive = total_drive(params, env);
    let half = |sub| 0.5 * drive.hypot(xi(params, env, sub));
    DressedLevels {
        levels: [
            (DressedLevel::new(Zero, Up), -d),
            (DressedLevel::new(Zero, Down), -d),
            (DressedLevel::new(M, Up), -half(Up)),
            (DressedLevel::new(M, Down), -half(Down)),
            (DressedLevel::new(P, Up), half(Up)),
            (DressedLevel::new(P, Down), half(Down)),
        ],
    }
}

/// Larmor frequency ω_{i,j} = |E_i − E_j| of a qubit built from two dressed levels.
pub fn larmor_frequency(
    i: DressedLevel,
    j: DressedLevel,
    params: &SystemParams,
    env: &EnvironmentSample,
) -> Result<f64, SpinModelError> {
    if i == j {
        return Err(SpinModelError::IdenticalLevels(i));
    }
    let levels = dressed_energies(params, env);
    Ok((levels.energy(i) - levels.energy(j)).abs())
}

/// ω_{m,p} = √((Ω+δΩ)² + ξ²) for one nuclear sublevel.
pub fn omega_mp(params: &SystemParams, env: &EnvironmentSample, sublevel: CarbonSublevel) -> f64 {
    total_drive(params, env).hypot(xi(params, env, sublevel))
}

/// Offsets of the dressed 0↔m and 0↔p lines from the undressed 0↔−1 line,
/// `(½(Δ − √(Δ²+Ω²)), ½(Δ + √(Δ²+Ω²)))`, valid to first order in Ω_mag/Ω.
pub fn dressed_transition_offsets(omega: f64, delta: f64) -> (f64, f64) {
    let r = delta.hypot(omega);
    (0.5 * (delta - r), 0.5 * (delta + r))
}

/// Mechanical detuning from the three measured line positions:
/// `Δ = 2·[½(ω₀ₘ + ω₀ₚ) − ω₀,₋₁]`.
pub fn detuning_from_lines(w0m: f64, w0p: f64, w0m1: f64) -> f64 {
    2.0 * (0.5 * (w0m + w0p) - w0m1)
}

/// Amplitude-noise cutoff of the mechanical mode, ω_mech / 2Q.
pub fn mechanical_cutoff(omega_mech: f64, q_factor: f64) -> f64 {
    debug_assert!(q_factor > 0.0);
    omega_mech / (2.0 * q_factor)
}

/// Three-level `{+1, 0, −1}` Hamiltonian in the doubly rotating frame of a
/// mechanical drive and a magnetic drive on 0↔−1, without the ¹³C.
///
/// The |0⟩ level sits at `delta_mag`, so the drive is resonant with the
/// undressed 0↔−1 line at `delta_mag = −Δ/2`.
pub fn spectroscopy_hamiltonian(omega: f64, delta: f64, omega_mag: f64, delta_mag: f64) -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    Matrix3::new(
        real(0.5 * delta), z, real(0.5 * omega),
        z, real(delta_mag), real(0.5 * omega_mag),
        real(0.5 * omega), real(0.5 * omega_mag), real(-0.5 * delta),
    )
}

/// Convenience: the usual parameter set from kHz/MHz values.
pub fn params_from_khz(
    omega_khz: f64,
    delta_khz: f64,
    a_par_khz: f64,
    omega_mech_mhz: f64,
    q_factor: f64,
) -> Result<SystemParams, SpinModelError> {
    SystemParams::from_mech_frequency(
        units::gamma_from_mhz_per_gauss(2.8),
        units::mhz_to_angular(2870.0),
        units::khz_to_angular(-74.0),
        units::mhz_to_angular(omega_mech_mhz),
        units::khz_to_angular(omega_khz),
        units::khz_to_angular(delta_khz),
        units::khz_to_angular(a_par_khz),
        q_factor,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diagonalize, diagonalize_block};
    use crate::units::{angular_to_khz, khz_to_angular};
    use CarbonSublevel::{Down, Up};
    use DressedLabel::{M, P, Zero};

    fn nv2() -> SystemParams {
        params_from_khz(581.0, 0.0, -150.0, 586.0, 2700.0).unwrap()
    }

    fn assert_structure(h: &HermitianMatrix6) {
        assert!(crate::linalg::hermiticity_defect(h.matrix()) <= 1e-12);
        assert!(h.is_carbon_block_diagonal());
    }

    #[test]
    fn omega_mech_enforced() {
        let p = nv2();
        assert!((p.omega_mech() - units::mhz_to_angular(586.0)).abs() < 1e-9);
        let q = p.with_delta(khz_to_angular(35.0));
        assert!((q.omega_mech() - p.omega_mech()).abs() < 1e-9);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = nv2();
        assert!(SystemParams { gamma: 0.0, ..p }.validate().is_err());
        assert!(SystemParams { q_factor: -1.0, ..p }.validate().is_err());
        assert!(SystemParams { omega: -1.0, ..p }.validate().is_err());
        assert!(SystemParams { delta: f64::NAN, ..p }.validate().is_err());
    }

    #[test]
    fn lab_hamiltonian_without_drive_is_diagonal() {
        let p = nv2().with_omega(0.0);
        let h = build_lab_hamiltonian(&p, &EnvironmentSample::ZERO, 0.37);
        assert_structure(&h);
        let gb = p.gamma * p.b;
        let ha = 0.5 * p.a_par;
        let expect = [gb + ha, gb - ha, -p.d0, -p.d0, -gb - ha, -gb + ha];
        for i in 0..6 {
            for j in 0..6 {
                let v = h.matrix()[(i, j)];
                if i == j {
                    assert!((v.re - expect[i]).abs() < 1e-12 * expect[i].abs().max(1.0));
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn lab_hamiltonian_drive_entries_at_cos_one() {
        let p = nv2();
        let env = EnvironmentSample { delta_b: 0.3, delta_omega: 0.05, delta_t: 0.1 };
        let period = std::f64::consts::TAU / p.omega_mech();
        let h = build_lab_hamiltonian(&p, &env, 3.0 * period);
        assert_structure(&h);
        let drive = p.omega + env.delta_omega;
        for sub in CarbonSublevel::ALL {
            let a = basis_index(SpinProjection::Plus, sub);
            let b = basis_index(SpinProjection::Minus, sub);
            assert!((h.matrix()[(a, b)].re - drive).abs() < 1e-9);
            assert!((h.matrix()[(b, a)].re - drive).abs() < 1e-9);
        }
    }

    #[test]
    fn rotating_hamiltonian_entries() {
        let p = nv2();
        let env = EnvironmentSample { delta_b: 1.2, delta_omega: -0.02, delta_t: 0.4 };
        let h = build_rotating_hamiltonian(&p, &env);
        assert_structure(&h);
        let z = p.gamma * (p.b + env.delta_b);
        let d = h.diagonal_real();
        assert!((d[0] - (z + 0.5 * (p.delta + p.a_par))).abs() < 1e-9);
        assert!((d[1] - (z + 0.5 * (p.delta - p.a_par))).abs() < 1e-9);
        assert!((d[4] + (z + 0.5 * (p.delta + p.a_par))).abs() < 1e-9);
        assert!((d[5] + z + 0.5 * (p.delta - p.a_par)).abs() < 1e-9);
        let dz = p.d0 + p.dd_dt * env.delta_t;
        assert!((d[2] + dz).abs() < 1e-9 && (d[3] + dz).abs() < 1e-9);
        assert!((h.matrix()[(0, 4)].re - 0.5 * (p.omega + env.delta_omega)).abs() < 1e-12);
    }

    #[test]
    fn rotating_hamiltonian_with_compensating_field() {
        // γδb = −Δ/2 and A∥ = 0 leaves ±γb on the ±1 block.
        let p = nv2().with_a_par(0.0).with_delta(khz_to_angular(80.0));
        let env = EnvironmentSample { delta_b: -p.delta / (2.0 * p.gamma), ..Default::default() };
        let d = build_rotating_hamiltonian(&p, &env).diagonal_real();
        let gb = p.gamma * p.b;
        for (i, s) in [(0, 1.0), (1, 1.0), (4, -1.0), (5, -1.0)] {
            assert!((d[i] - s * gb).abs() < 1e-9, "entry {i}");
        }
    }

    #[test]
    fn undriven_rotating_hamiltonian_is_diagonal() {
        let p = nv2().with_omega(0.0);
        let h = build_rotating_hamiltonian(&p, &EnvironmentSample::ZERO);
        let off: f64 = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| h.matrix()[(i, j)].norm())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn dressed_energies_without_drive_or_detuning() {
        let p = nv2().with_omega(0.0);
        let levels = dressed_energies(&p, &EnvironmentSample::ZERO);
        for sub in CarbonSublevel::ALL {
            let m = levels.energy(DressedLevel::new(M, sub));
            let pp = levels.energy(DressedLevel::new(P, sub));
            assert!((m + 0.5 * p.a_par.abs()).abs() < 1e-14);
            assert!((pp - 0.5 * p.a_par.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn nv2_mp_splitting() {
        let p = nv2();
        let w = larmor_frequency(DressedLevel::new(M, Up), DressedLevel::new(P, Up), &p, &EnvironmentSample::ZERO).unwrap();
        // √(150² + 581²) = 600.0508...
        assert!((angular_to_khz(w) - 150.0_f64.hypot(581.0)).abs() < 1e-9);
        assert!((angular_to_khz(w) - 600.05).abs() < 0.01);
    }

    #[test]
    fn closed_form_energies_match_eigensolver() {
        let p = nv2();
        let env = EnvironmentSample { delta_b: 3.1, delta_omega: 0.07, delta_t: -0.3 };
        let eig = diagonalize(dressed_frame_hamiltonian(&p, &env).matrix()).unwrap();
        let mut closed = dressed_energies(&p, &env).energies();
        closed.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(closed.iter()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn mp_frequency_equals_drive_when_xi_vanishes() {
        let p = nv2().with_delta(-nv2().a_par.abs());
        // A∥ < 0 so ξ₋ = Δ − A∥ = 0 on the ↓ sublevel
        let w = larmor_frequency(DressedLevel::new(M, Down), DressedLevel::new(P, Down), &p, &EnvironmentSample::ZERO).unwrap();
        assert!((w - p.omega).abs() < 1e-12);
    }

    #[test]
    fn identical_levels_rejected() {
        let l = DressedLevel::new(Zero, Up);
        assert!(matches!(
            larmor_frequency(l, l, &nv2(), &EnvironmentSample::ZERO),
            Err(SpinModelError::IdenticalLevels(_))
        ));
    }

    #[test]
    fn mp_slope_matches_finite_difference() {
        let p = nv2();
        let h = 1e-3;
        let at = |db: f64| omega_mp(&p, &EnvironmentSample { delta_b: db, ..Default::default() }, Up);
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let analytic = 2.0 * p.gamma * p.a_par.abs() / p.a_par.hypot(p.omega);
        assert!((fd.abs() - analytic).abs() <= 1e-6 * analytic);
    }

    #[test]
    fn mp_independent_of_temperature() {
        let p = nv2();
        for dt in [-2.0, -0.25, 0.0, 0.7, 5.0] {
            let env = EnvironmentSample { delta_b: 0.8, delta_t: dt, ..Default::default() };
            let base = EnvironmentSample { delta_b: 0.8, ..Default::default() };
            for sub in CarbonSublevel::ALL {
                let a = larmor_frequency(DressedLevel::new(M, sub), DressedLevel::new(P, sub), &p, &env).unwrap();
                let b = larmor_frequency(DressedLevel::new(M, sub), DressedLevel::new(P, sub), &p, &base).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn zero_p_thermal_slope() {
        let p = nv2();
        let h = 1e-3;
        let w = |dt: f64| {
            larmor_frequency(
                DressedLevel::new(Zero, Up),
                DressedLevel::new(P, Up),
                &p,
                &EnvironmentSample { delta_t: dt, ..Default::default() },
            )
            .unwrap()
        };
        let slope = (w(h) - w(-h)) / (2.0 * h);
        // ω₀ₚ = D + ½√(…), so the slope is dD/dT itself
        assert!((slope - p.dd_dt).abs() <= 1e-6 * p.dd_dt.abs());
    }

    #[test]
    fn transition_offsets_examples() {
        let (m, pp) = dressed_transition_offsets(khz_to_angular(470.0), 0.0);
        assert!((angular_to_khz(m) + 235.0).abs() < 1e-9);
        assert!((angular_to_khz(pp) - 235.0).abs() < 1e-9);
        let (m, pp) = dressed_transition_offsets(0.0, 2.0);
        assert_eq!((m, pp), (0.0, 2.0));
    }

    #[test]
    fn detuning_from_symmetric_lines_is_zero() {
        assert_eq!(detuning_from_lines(-1.0, 1.0, 0.0), 0.0);
        let delta = khz_to_angular(35.0);
        let omega = khz_to_angular(470.0);
        let (m, pp) = dressed_transition_offsets(omega, delta);
        let recovered = detuning_from_lines(m, pp, 0.0);
        assert!((angular_to_khz(recovered) - 35.0).abs() < 1e-9);
    }

    #[test]
    fn cutoff_examples() {
        let w = mechanical_cutoff(units::mhz_to_angular(586.0), 2700.0);
        assert!((angular_to_khz(w) - 108.5185).abs() < 1e-3);
        let w = mechanical_cutoff(units::mhz_to_angular(586.0), 1350.0);
        assert!((angular_to_khz(w) - 217.037).abs() < 1e-3);
        let mut prev = f64::INFINITY;
        for q in [1e2, 1e3, 1e4, 1e6, 1e9] {
            let w = mechanical_cutoff(1.0, q);
            assert!(w < prev);
            prev = w;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn spectroscopy_block_resonance() {
        // With Ω = 0 the |0⟩ level crosses |−1⟩ at Δ_mag = −Δ/2.
        let delta = 0.4;
        let h = spectroscopy_hamiltonian(0.0, delta, 0.0, -0.5 * delta);
        assert_eq!(h[(1, 1)], h[(2, 2)]);
        assert!(diagonalize_block(&h).is_ok());
    }
}

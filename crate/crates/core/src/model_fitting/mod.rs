//! Least-squares fits of Ramsey and spectroscopy traces.

pub mod models;
pub mod nlls;
pub mod report;
pub mod seeding;

pub use models::{
    build_model, model_max_protection, model_ramsey_0p, model_ramsey_mp, model_spectrum_joint,
    model_undressed_ramsey, ModelInputs, ModelKind,
};
pub use nlls::{nlls_fit, FitData, FitError, FitOptions, FitOutcome, FitStatus, ModelFunction, ParamSpec, ParamUnit};
pub use report::format_report;
pub use seeding::{seed_model, SeedMode};

use crate::pulse_sim::Trace;
use crate::units::khz_to_angular;

/// Seeds `model` from the data (unless `seed` is `None`) and fits it.
pub fn fit_model(
    kind: ModelKind,
    model: &ModelFunction,
    data: &FitData,
    opts: &FitOptions,
    seed: Option<SeedMode>,
) -> Result<FitOutcome, FitError> {
    let seeded = match seed {
        Some(mode) => seed_model(kind, model, data, mode),
        None => model.clone(),
    };
    nlls_fit(&seeded, data, opts)
}

/// Ramsey trace as fit data, with the shot standard errors as σ.
pub fn ramsey_data(trace: &Trace) -> FitData {
    FitData::from_trace(trace).with_sigma(trace.stderr.clone())
}

/// Joint spectrum data from a dressed and an undressed trace with kHz
/// abscissae. The fit runs on angular detunings.
pub fn spectrum_data(dressed: &Trace, undressed: &Trace) -> FitData {
    let convert = |t: &Trace| {
        FitData::new(t.abscissa.iter().map(|&k| khz_to_angular(k)).collect(), t.mean_p0.clone())
            .with_sigma(t.stderr.clone())
    };
    let mut data = FitData::default();
    data.sigma = Some(Vec::new());
    data.append_channel(&convert(dressed), models::DRESSED_CHANNEL);
    data.append_channel(&convert(undressed), models::UNDRESSED_CHANNEL);
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    fn inputs() -> ModelInputs {
        ModelInputs {
            omega_rot: khz_to_angular(250.0),
            a_par: khz_to_angular(-150.0),
            p0_ud: 0.95,
            gamma_sigma_b: khz_to_angular(42.0),
            tau_offset: 0.0,
        }
    }

    /// True parameters per model, in model order.
    fn truth(kind: ModelKind) -> Vec<(&'static str, f64)> {
        let k = khz_to_angular;
        match kind {
            ModelKind::Undressed => {
                vec![("c", 0.5), ("a", 0.9), ("t2", 5.4), ("delta_mag", k(12.0)), ("a_par", k(150.0))]
            }
            ModelKind::Ramsey0p => vec![
                ("c", 0.45),
                ("a_p", 0.8),
                ("a_m", -0.6),
                ("phi", 0.4),
                ("omega", k(348.0)),
                ("delta_mag", k(8.0)),
                ("t2", 12.0),
            ],
            ModelKind::RamseyMp => vec![("c", 0.5), ("t2", 13.5), ("omega", k(581.0)), ("phi", -0.8)],
            ModelKind::MaxProtection => vec![("omega", k(455.7)), ("phi", 0.5), ("c", 0.52), ("t2_up", 4.1)],
            ModelKind::SpectrumJoint => vec![
                ("c_d", 0.98),
                ("a_d1", 0.45),
                ("a_d2", 0.4),
                ("gamma_d", k(60.0)),
                ("delta", k(-20.0)),
                ("omega", k(470.0)),
                ("c_ud", 0.99),
                ("a_ud", 0.8),
                ("gamma_ud", k(70.0)),
                ("w0m1", k(10.0)),
            ],
        }
    }

    fn abscissa(kind: ModelKind) -> FitData {
        match kind {
            ModelKind::SpectrumJoint => {
                let grid: Vec<f64> = (0..241).map(|i| khz_to_angular(-600.0 + 5.0 * i as f64)).collect();
                let n = grid.len();
                let mut d = FitData::new(grid.clone(), vec![0.0; n]);
                d.append_channel(&FitData::new(grid, vec![0.0; n]), models::UNDRESSED_CHANNEL);
                d
            }
            ModelKind::MaxProtection => {
                let x: Vec<f64> = (0..500).map(|i| i as f64 * 0.1).collect();
                FitData::new(x, vec![0.0; 500])
            }
            _ => {
                let x: Vec<f64> = (0..400).map(|i| i as f64 * 0.05).collect();
                FitData::new(x, vec![0.0; 400])
            }
        }
    }

    fn with_truth(kind: ModelKind) -> ModelFunction {
        truth(kind).into_iter().fold(build_model(kind, &inputs()), |m, (n, v)| m.with_initial(n, v))
    }

    fn synthesize(model: &ModelFunction, noise: Option<(&mut ChaCha8Rng, f64)>) -> FitData {
        let mut d = abscissa(ModelKind::from_str_id(&model.id));
        let p = model.initial();
        for i in 0..d.len() {
            d.y[i] = model.predict(&p, d.x[i], d.channel[i]);
        }
        if let Some((rng, sigma)) = noise {
            let n = Normal::new(0.0, sigma).unwrap();
            for y in &mut d.y {
                *y += n.sample(rng);
            }
        }
        d
    }

    impl ModelKind {
        fn from_str_id(id: &str) -> ModelKind {
            id.parse().unwrap()
        }
    }

    fn perturbed(kind: ModelKind, rng: &mut ChaCha8Rng) -> ModelFunction {
        let u = Uniform::new_inclusive(0.8, 1.2).unwrap();
        truth(kind).into_iter().fold(build_model(kind, &inputs()), |m, (n, v)| m.with_initial(n, v * u.sample(rng)))
    }

    #[test]
    fn round_trip_all_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in ModelKind::ALL {
            let data = synthesize(&with_truth(kind), None);
            for _ in 0..5 {
                let start = perturbed(kind, &mut rng);
                let out = fit_model(kind, &start, &data, &FitOptions::default(), Some(SeedMode::Frequencies)).unwrap();
                for (name, v) in truth(kind) {
                    let got = out.get(name).unwrap();
                    assert!((got - v).abs() <= 1e-6 * v.abs(), "{kind} {name}: {got} vs {v} ({:?})", out.status);
                }
            }
        }
    }

    #[test]
    fn round_trip_with_pulse_offset() {
        let with_offset = ModelInputs { tau_offset: 0.36, ..inputs() };
        for kind in [ModelKind::Undressed, ModelKind::Ramsey0p] {
            let truth_model = truth(kind).into_iter().fold(build_model(kind, &with_offset), |m, (n, v)| m.with_initial(n, v));
            let data = synthesize(&truth_model, None);
            let start = build_model(kind, &with_offset).with_initial("omega_rot", with_offset.omega_rot);
            let start = match start.index("omega") {
                Some(_) => start.with_initial("omega", khz_to_angular(330.0)),
                None => start,
            };
            let out = fit_model(kind, &start, &data, &FitOptions::default(), Some(SeedMode::All)).unwrap();
            for (name, v) in truth(kind) {
                let got = out.get(name).unwrap();
                assert!((got - v).abs() <= 1e-6 * v.abs().max(1.0), "{kind} {name}: {got} vs {v} ({:?})", out.status);
            }
        }
    }

    #[test]
    fn ci_coverage_all_models() {
        let sigma = 0.01;
        let trials = 200;
        for kind in ModelKind::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + kind as u64);
            let truth = truth(kind);
            let mut hits = vec![0usize; truth.len()];
            for _ in 0..trials {
                let data = synthesize(&with_truth(kind), Some((&mut rng, sigma)));
                let out = fit_model(kind, &with_truth(kind), &data, &FitOptions::default(), None).unwrap();
                for (k, (name, v)) in truth.iter().enumerate() {
                    let (lo, hi) = out.ci_of(name).unwrap();
                    assert!(hi >= lo);
                    if lo <= *v && *v <= hi {
                        hits[k] += 1;
                    }
                }
            }
            for (k, (name, _)) in truth.iter().enumerate() {
                let cov = hits[k] as f64 / trials as f64;
                assert!(cov >= 0.9, "{kind} {name}: coverage {cov}");
            }
        }
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = synthesize(&with_truth(ModelKind::Ramsey0p), Some((&mut rng, 0.01)));
        let out = nlls_fit(&with_truth(ModelKind::Ramsey0p), &data, &FitOptions::default()).unwrap();
        let n = out.covariance.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |a, b| out.covariance[a][b]);
        assert!((&m - m.transpose()).amax() <= 1e-12 * m.amax());
        let eig = m.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-12 * m.amax()));
    }

    #[test]
    fn constant_data_is_flagged() {
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let data = FitData::new(x, vec![0.5; 200]);
        for kind in [ModelKind::Undressed, ModelKind::RamseyMp] {
            let model = build_model(kind, &inputs());
            let out = fit_model(kind, &model, &data, &FitOptions::default(), Some(SeedMode::All)).unwrap();
            assert!(!out.converged(), "{kind}: {:?}", out.status);
        }
    }

    #[test]
    fn zero_amplitude_undressed_flags_t2() {
        let m = with_truth(ModelKind::Undressed).with_initial("a", 0.0);
        let data = synthesize(&m, None);
        let out = nlls_fit(&m.with_initial("a", 0.1), &data, &FitOptions::default()).unwrap();
        assert_eq!(out.status, FitStatus::Degenerate);
        assert!(out.unidentifiable.iter().any(|n| n == "t2"), "{:?}", out.unidentifiable);
    }

    #[test]
    fn zero_drive_0p_flags_omega() {
        let m = with_truth(ModelKind::Ramsey0p).with_initial("omega", 0.0);
        let data = synthesize(&m, None);
        let out = nlls_fit(&m, &data, &FitOptions::default()).unwrap();
        assert_eq!(out.status, FitStatus::Degenerate);
        assert!(out.unidentifiable.iter().any(|n| n == "omega"));
    }

    #[test]
    fn zero_drive_spectrum_degenerates() {
        let m = with_truth(ModelKind::SpectrumJoint).with_initial("omega", 0.0).with_initial("delta", 0.0);
        let data = synthesize(&m, None);
        let out = nlls_fit(&m, &data, &FitOptions::default()).unwrap();
        assert_eq!(out.status, FitStatus::Degenerate);
    }

    #[test]
    fn microseconds_to_milliseconds_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = with_truth(ModelKind::RamseyMp);
        let data = synthesize(&model, Some((&mut rng, 0.01)));
        let us = nlls_fit(&model, &data, &FitOptions::default()).unwrap();

        let ms_data = FitData::new(data.x.iter().map(|x| x * 1e-3).collect(), data.y.clone());
        let ms_model = model_ramsey_mp(inputs().a_par * 1e3, inputs().p0_ud)
            .with_initial("c", 0.5)
            .with_initial("t2", 13.5e-3)
            .with_initial("omega", khz_to_angular(581.0) * 1e3)
            .with_initial("phi", -0.8);
        let ms = nlls_fit(&ms_model, &ms_data, &FitOptions::default()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        assert!(rel(ms.get("omega").unwrap(), us.get("omega").unwrap() * 1e3) < 1e-6);
        assert!(rel(ms.get("t2").unwrap(), us.get("t2").unwrap() * 1e-3) < 1e-6);
        assert!(rel(ms.get("c").unwrap(), us.get("c").unwrap()) < 1e-6);
        assert!(rel(ms.half_width("omega").unwrap(), us.half_width("omega").unwrap() * 1e3) < 1e-4);
    }
}

//! Initial guesses from the data: frequencies from Fourier peaks, the
//! envelope from the first 1/e crossing of the smoothed |signal|.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::models::{ModelKind, DRESSED_CHANNEL, UNDRESSED_CHANNEL};
use super::nlls::{FitData, ModelFunction};
use crate::pulse_sim::magnitude_spectrum;

/// Which parameters the seeder may overwrite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedMode {
    /// Oscillation frequencies and phases only; other guesses are kept.
    Frequencies,
    /// Everything the data can estimate.
    All,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Significant spectral peaks as (angular frequency, magnitude), strongest first.
/// Peaks below `rel` of the strongest are dropped.
pub fn spectral_peaks(x: &[f64], y: &[f64], rel: f64) -> Vec<(f64, f64)> {
    let n = y.len();
    let m = mean(y);
    // Hann window keeps sinc sidelobes out of the peak list.
    let windowed: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(i, v)| (v - m) * (0.5 - 0.5 * (TAU * i as f64 / (n - 1).max(1) as f64).cos()))
        .collect();
    let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let Ok(spec) = magnitude_spectrum(x, &windowed, 8) else {
        return Vec::new();
    };
    let df = spec.frequency_khz.get(1).copied().unwrap_or(0.0);
    let mut peaks: Vec<(f64, f64)> = spec
        .peaks()
        .into_iter()
        .map(|f| {
            let i = ((f / df).round() as usize).min(spec.magnitude.len() - 1);
            // kHz per 1/unit-of-x → cycles per unit of x → angular
            (TAU * f * 1e-3, spec.magnitude[i])
        })
        .collect();
    let top = peaks.first().map(|p| p.1).unwrap_or(0.0);
    peaks.retain(|p| p.1 >= rel * top && p.1 > 1e-9 * scale);
    peaks
}

fn closest(peaks: &[(f64, f64)], target: f64) -> Option<f64> {
    peaks.iter().map(|p| p.0).min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
}

/// First 1/e crossing of the running maximum of |y − c| over `window`.
pub fn envelope_seed(x: &[f64], y: &[f64], c: f64, window: f64) -> f64 {
    let n = x.len();
    let span = x[n - 1] - x[0];
    let dev: Vec<f64> = y.iter().map(|v| (v - c).abs()).collect();
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let lo = x[i] - 0.5 * window;
            let hi = x[i] + 0.5 * window;
            (0..n).filter(|&j| x[j] >= lo && x[j] <= hi).map(|j| dev[j]).fold(0.0, f64::max)
        })
        .collect();
    let start = smooth[0];
    if !(start > 0.0) {
        return span.max(f64::MIN_POSITIVE);
    }
    let level = start * (-1.0f64).exp();
    for i in 1..n {
        if smooth[i] < level {
            let f = (smooth[i - 1] - level) / (smooth[i - 1] - smooth[i]);
            return (x[i - 1] + f * (x[i] - x[i - 1])).max(f64::MIN_POSITIVE);
        }
    }
    2.0 * span.max(f64::MIN_POSITIVE)
}

/// Phase folded into (−π, π].
fn wrap_phase(phi: f64) -> f64 {
    let w = (phi + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
    if w == -std::f64::consts::PI { std::f64::consts::PI } else { w }
}

/// Complex amplitude A·e^{iφ} of y − c ≈ A·env(x)·cos(ωx + φ).
fn projection(x: &[f64], y: &[f64], c: f64, omega: f64, t2: f64) -> Complex64 {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let env = (-(xi / t2).powi(2)).exp();
        num += (yi - c) * Complex64::from_polar(1.0, -omega * xi) * env;
        den += 0.5 * env * env;
    }
    if den > 0.0 {
        num / den
    } else {
        Complex64::new(0.0, 0.0)
    }
}

fn set(model: &mut ModelFunction, name: &str, value: f64) {
    if let Some(i) = model.index(name) {
        let s = &mut model.params[i];
        if !s.frozen && value.is_finite() {
            s.initial = value.clamp(s.lower, s.upper);
        }
    }
}

fn get(model: &ModelFunction, name: &str) -> f64 {
    model.index(name).map(|i| model.params[i].initial).unwrap_or(0.0)
}

fn period_window(omega: f64, x: &[f64]) -> f64 {
    let dt = (x[x.len() - 1] - x[0]) / (x.len() - 1).max(1) as f64;
    if omega > 0.0 {
        (TAU / omega).max(2.0 * dt)
    } else {
        4.0 * dt
    }
}

/// Returns `model` with data-derived initial guesses. Frozen parameters are
/// never touched, and estimates that fail leave the caller's guess in place.
pub fn seed_model(kind: ModelKind, model: &ModelFunction, data: &FitData, mode: SeedMode) -> ModelFunction {
    let mut m = model.clone();
    if data.len() < 4 {
        return m;
    }
    match kind {
        ModelKind::SpectrumJoint => seed_spectrum(&mut m, data, mode),
        _ => {
            let (x, y) = data.channel_rows(0);
            if x.len() < 4 {
                return m;
            }
            seed_ramsey(kind, &mut m, &x, &y, mode);
        }
    }
    m
}

fn seed_ramsey(kind: ModelKind, m: &mut ModelFunction, x: &[f64], y: &[f64], mode: SeedMode) {
    let all = mode == SeedMode::All;
    let c = mean(y);
    if all {
        set(m, "c", c);
    }
    let c = get(m, "c");
    let peaks = spectral_peaks(x, y, 0.25);
    match kind {
        ModelKind::Undressed => {
            let wr = get(m, "omega_rot");
            let centre = wr + get(m, "delta_mag");
            let a = get(m, "a_par");
            let (Some(lo), Some(hi)) = (closest(&peaks, centre - 0.5 * a), closest(&peaks, centre + 0.5 * a)) else {
                return;
            };
            if hi > lo {
                set(m, "delta_mag", 0.5 * (lo + hi) - wr);
                set(m, "a_par", hi - lo);
            } else {
                set(m, "delta_mag", lo - wr);
            }
            if all {
                let (mx, mn) = y.iter().fold((f64::MIN, f64::MAX), |(a, b), &v| (a.max(v), b.min(v)));
                set(m, "a", mx - mn);
                set(m, "t2", envelope_seed(x, y, c, period_window(wr, x)));
            }
        }
        ModelKind::Ramsey0p => {
            let wr = get(m, "omega_rot");
            let apar = get(m, "a_par");
            let Some(fp) = closest(&peaks, wr + get(m, "delta_mag")) else {
                return;
            };
            let split_guess = get(m, "omega").hypot(apar);
            let above: Vec<(f64, f64)> = peaks.iter().copied().filter(|p| p.0 > fp).collect();
            let fm = closest(&above, fp + split_guess);
            set(m, "delta_mag", fp - wr);
            if let Some(fm) = fm {
                let split = fm - fp;
                set(m, "omega", (split * split - apar * apar).max(0.0).sqrt());
            }
            if all {
                set(m, "t2", envelope_seed(x, y, c, period_window(fp, x)));
            }
            let t2 = get(m, "t2");
            // Both lines carry extra phase from the precession during the pulses.
            let t0 = get(m, "tau_offset");
            let zp = projection(x, y, c, fp, t2);
            set(m, "phi", wrap_phase(zp.arg() - get(m, "delta_mag") * t0));
            if all {
                set(m, "a_p", 4.0 * zp.norm());
                if let Some(fm) = fm {
                    let zm = projection(x, y, c, fm, t2) * Complex64::from_polar(1.0, -(fm - fp) * t0);
                    // Shared phase: the sign of a_m carries the relative phase.
                    let sign = if (zm * zp.conj()).re >= 0.0 { 1.0 } else { -1.0 };
                    set(m, "a_m", sign * 4.0 * zm.norm());
                }
            }
        }
        ModelKind::RamseyMp => {
            let Some(&(w, _)) = peaks.first() else {
                return;
            };
            let apar = get(m, "a_par");
            set(m, "omega", (w * w - apar * apar).max(0.0).sqrt());
            if all {
                set(m, "t2", envelope_seed(x, y, c, period_window(w, x)));
            }
            set(m, "phi", projection(x, y, c, w, get(m, "t2")).arg());
        }
        ModelKind::MaxProtection => {
            // The protected branch dominates the spectrum.
            let Some(&(w, _)) = peaks.first() else {
                return;
            };
            set(m, "omega", w);
            // The protected branch barely decays, so project without an envelope.
            set(m, "phi", projection(x, y, c, w, f64::INFINITY).arg());
        }
        ModelKind::SpectrumJoint => unreachable!("handled by seed_spectrum"),
    }
}

/// Baseline and deepest point of a dip spectrum.
fn dip_stats(y: &[f64]) -> (f64, usize) {
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);
    let baseline = mean(&sorted[sorted.len() / 2..]);
    let imin = (0..y.len()).min_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0);
    (baseline, imin)
}

/// Full width at half depth around `i0`.
fn dip_width(x: &[f64], y: &[f64], baseline: f64, i0: usize) -> f64 {
    let half = 0.5 * (baseline + y[i0]);
    let mut lo = i0;
    while lo > 0 && y[lo] < half {
        lo -= 1;
    }
    let mut hi = i0;
    while hi + 1 < y.len() && y[hi] < half {
        hi += 1;
    }
    (x[hi] - x[lo]).abs()
}

fn sorted_rows(data: &FitData, channel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, y) = data.channel_rows(channel);
    let mut rows: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.into_iter().unzip()
}

fn seed_spectrum(m: &mut ModelFunction, data: &FitData, mode: SeedMode) {
    let all = mode == SeedMode::All;
    let (ux, uy) = sorted_rows(data, UNDRESSED_CHANNEL);
    let (dx, dy) = sorted_rows(data, DRESSED_CHANNEL);
    let mut w0 = get(m, "w0m1");
    if ux.len() >= 3 {
        let (base, i0) = dip_stats(&uy);
        w0 = ux[i0];
        set(m, "w0m1", w0);
        if all {
            set(m, "c_ud", base);
            set(m, "a_ud", base - uy[i0]);
            set(m, "gamma_ud", dip_width(&ux, &uy, base, i0));
        }
    }
    if dx.len() < 3 {
        return;
    }
    let (base, i1) = dip_stats(&dy);
    let split_guess = get(m, "delta").hypot(get(m, "omega"));
    // Second dip: deepest point at least a third of the expected splitting away.
    let guard = (split_guess / 3.0).max((dx[dx.len() - 1] - dx[0]) / dx.len() as f64 * 2.0);
    let i2 = (0..dx.len())
        .filter(|&j| (dx[j] - dx[i1]).abs() > guard)
        .min_by(|&a, &b| dy[a].total_cmp(&dy[b]));
    let Some(i2) = i2 else {
        return;
    };
    let (ilo, ihi) = if dx[i1] < dx[i2] { (i1, i2) } else { (i2, i1) };
    let (lo, hi) = (dx[ilo], dx[ihi]);
    let delta = crate::spin_model::detuning_from_lines(lo, hi, w0);
    let split = hi - lo;
    set(m, "delta", delta);
    set(m, "omega", (split * split - delta * delta).max(0.0).sqrt());
    if all {
        set(m, "c_d", base);
        set(m, "a_d1", base - dy[ilo]);
        set(m, "a_d2", base - dy[ihi]);
        set(m, "gamma_d", dip_width(&dx, &dy, base, i1));
    }
}

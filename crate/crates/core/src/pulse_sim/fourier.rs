//! Magnitude spectrum of a uniformly sampled delay trace.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::trace::Trace;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("need at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("abscissa is not uniform (step {index} differs from the first by {deviation:e})")]
    NonUniform { index: usize, deviation: f64 },
}

/// One-sided spectrum. Frequencies in kHz when the abscissa is in µs.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub frequency_khz: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest bin above `min_khz`, refined by a parabola
    /// through the peak and its neighbours.
    pub fn peak_above(&self, min_khz: f64) -> Option<f64> {
        let (i, _) = self
            .magnitude
            .iter()
            .enumerate()
            .filter(|(i, _)| self.frequency_khz[*i] >= min_khz)
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        Some(self.refine(i))
    }

    /// Local maxima sorted by decreasing magnitude.
    pub fn peaks(&self) -> Vec<f64> {
        let m = &self.magnitude;
        let mut idx: Vec<usize> = (1..m.len().saturating_sub(1)).filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1]).collect();
        idx.sort_by(|a, b| m[*b].total_cmp(&m[*a]));
        idx.into_iter().map(|i| self.refine(i)).collect()
    }

    fn refine(&self, i: usize) -> f64 {
        let m = &self.magnitude;
        if i == 0 || i + 1 >= m.len() {
            return self.frequency_khz[i];
        }
        let (a, b, c) = (m[i - 1], m[i], m[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        let df = self.frequency_khz[1] - self.frequency_khz[0];
        self.frequency_khz[i] + shift.clamp(-0.5, 0.5) * df
    }
}

fn uniform_step(x: &[f64]) -> Result<f64, FourierError> {
    if x.len() < 2 {
        return Err(FourierError::TooShort(x.len()));
    }
    let dt = x[1] - x[0];
    for (index, w) in x.windows(2).enumerate() {
        let deviation = ((w[1] - w[0]) - dt).abs();
        if deviation > 1e-9 * dt.abs().max(1e-300) || !(dt > 0.0) {
            return Err(FourierError::NonUniform { index, deviation });
        }
    }
    Ok(dt)
}

/// |DFT| of the mean-subtracted signal, zero padded to `pad_factor`× length.
pub fn magnitude_spectrum(abscissa: &[f64], signal: &[f64], pad_factor: usize) -> Result<Spectrum, FourierError> {
    let dt = uniform_step(abscissa)?;
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let len = n * pad_factor.max(1);
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|s| Complex::new(s - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let half = len / 2 + 1;
    let df_khz = 1e3 / (len as f64 * dt);
    Ok(Spectrum {
        frequency_khz: (0..half).map(|k| k as f64 * df_khz).collect(),
        magnitude: buf[..half].iter().map(|z| z.norm() / n as f64).collect(),
    })
}

/// Spectrum of a delay trace without padding.
pub fn fourier_magnitude(trace: &Trace) -> Result<Spectrum, FourierError> {
    magnitude_spectrum(&trace.abscissa, &trace.mean_p0, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn single_tone_peak() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.05).collect();
        let s: Vec<f64> = t.iter().map(|t| (TAU * 0.1 * t).cos()).collect();
        let spec = magnitude_spectrum(&t, &s, 1).unwrap();
        let peak = spec.peak_above(1.0).unwrap();
        assert!((peak - 100.0).abs() < 1.0, "{peak}");
        let padded = magnitude_spectrum(&t, &s, 8).unwrap();
        assert!((padded.peak_above(1.0).unwrap() - 100.0).abs() < 0.2);
    }

    #[test]
    fn constant_signal_gives_zero() {
        let t: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let spec = magnitude_spectrum(&t, &vec![0.7; 64], 1).unwrap();
        assert!(spec.magnitude.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn non_uniform_rejected() {
        let t = [0.0, 1.0, 2.5, 3.0];
        assert!(matches!(magnitude_spectrum(&t, &[0.0; 4], 1), Err(FourierError::NonUniform { index: 1, .. })));
        assert_eq!(magnitude_spectrum(&[0.0], &[1.0], 1), Err(FourierError::TooShort(1)));
    }

    #[test]
    fn two_peaks_ordered_by_height() {
        let t: Vec<f64> = (0..5000).map(|i| i as f64 * 0.02).collect();
        let s: Vec<f64> = t.iter().map(|t| 0.3 * (TAU * 0.25 * t).cos() + (TAU * 0.6 * t).cos()).collect();
        let spec = magnitude_spectrum(&t, &s, 4).unwrap();
        let p = spec.peaks();
        assert!((p[0] - 600.0).abs() < 1.0 && (p[1] - 250.0).abs() < 1.0, "{p:?}");
    }
}

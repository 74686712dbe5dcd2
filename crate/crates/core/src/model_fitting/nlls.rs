//! Bounded Levenberg–Marquardt least squares with linearized confidence
//! intervals.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::pulse_sim::Trace;

/// Model value at abscissa `x` on data channel `channel`.
pub type Evaluator = Arc<dyn Fn(&[f64], f64, usize) -> f64 + Send + Sync>;
/// Gradient of the model with respect to all parameters.
pub type Gradient = Arc<dyn Fn(&[f64], f64, usize, &mut [f64]) + Send + Sync>;

/// Display unit of a parameter. Values are stored in the internal unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamUnit {
    /// rad/µs internally, shown as kHz.
    AngularKhz,
    Microseconds,
    Radians,
    Dimensionless,
}

impl ParamUnit {
    pub fn label(self) -> &'static str {
        match self {
            ParamUnit::AngularKhz => "kHz",
            ParamUnit::Microseconds => "us",
            ParamUnit::Radians => "rad",
            ParamUnit::Dimensionless => "",
        }
    }

    pub fn to_display(self, v: f64) -> f64 {
        match self {
            ParamUnit::AngularKhz => crate::units::angular_to_khz(v),
            _ => v,
        }
    }

    pub fn from_display(self, v: f64) -> f64 {
        match self {
            ParamUnit::AngularKhz => crate::units::khz_to_angular(v),
            _ => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub unit: ParamUnit,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
    pub frozen: bool,
}

impl ParamSpec {
    pub fn free(name: &str, unit: ParamUnit, initial: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), unit, initial, lower, upper, frozen: false }
    }

    pub fn fixed(name: &str, unit: ParamUnit, value: f64) -> Self {
        Self { name: name.into(), unit, initial: value, lower: f64::NEG_INFINITY, upper: f64::INFINITY, frozen: true }
    }
}

#[derive(Clone)]
pub struct ModelFunction {
    pub id: String,
    pub params: Vec<ParamSpec>,
    pub eval: Evaluator,
    pub gradient: Option<Gradient>,
}

impl std::fmt::Debug for ModelFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelFunction").field("id", &self.id).field("params", &self.params).finish_non_exhaustive()
    }
}

impl ModelFunction {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    fn spec_mut(&mut self, name: &str) -> &mut ParamSpec {
        let i = self.index(name).unwrap_or_else(|| panic!("model {} has no parameter {name}", self.id));
        &mut self.params[i]
    }

    pub fn with_initial(mut self, name: &str, value: f64) -> Self {
        self.spec_mut(name).initial = value;
        self
    }

    pub fn with_frozen(mut self, name: &str, value: f64) -> Self {
        let s = self.spec_mut(name);
        s.initial = value;
        s.frozen = true;
        self
    }

    pub fn with_free(mut self, name: &str) -> Self {
        self.spec_mut(name).frozen = false;
        self
    }

    pub fn with_bounds(mut self, name: &str, lower: f64, upper: f64) -> Self {
        let s = self.spec_mut(name);
        s.lower = lower;
        s.upper = upper;
        self
    }

    pub fn initial(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.initial).collect()
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| !p.frozen).count()
    }

    pub fn predict(&self, params: &[f64], x: f64, channel: usize) -> f64 {
        (self.eval)(params, x, channel)
    }
}

/// Observations, optionally split across channels of a joint model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub channel: Vec<usize>,
    pub sigma: Option<Vec<f64>>,
}

impl FitData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        Self { x, y, channel: vec![0; n], sigma: None }
    }

    pub fn from_trace(trace: &Trace) -> Self {
        Self::new(trace.abscissa.clone(), trace.mean_p0.clone())
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// Appends `other` as channel `channel`.
    pub fn append_channel(&mut self, other: &FitData, channel: usize) {
        self.x.extend_from_slice(&other.x);
        self.y.extend_from_slice(&other.y);
        self.channel.extend(std::iter::repeat(channel).take(other.x.len()));
        match (&mut self.sigma, &other.sigma) {
            (Some(a), Some(b)) => a.extend_from_slice(b),
            (None, None) => {}
            _ => self.sigma = None,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Rows of one channel.
    pub fn channel_rows(&self, channel: usize) -> (Vec<f64>, Vec<f64>) {
        (0..self.len())
            .filter(|&i| self.channel[i] == channel)
            .map(|i| (self.x[i], self.y[i]))
            .unzip()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub rss_tolerance: f64,
    pub step_tolerance: f64,
    pub fd_relative_step: f64,
    pub confidence: f64,
    /// Weight residuals by the supplied per-point σ.
    pub use_sigma: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rss_tolerance: 1e-10,
            step_tolerance: 1e-10,
            fd_relative_step: 1e-6,
            confidence: 0.95,
            use_sigma: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {need} data points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("initial value of {name} = {value} is outside [{lower}, {upper}]")]
    InitialOutOfBounds { name: String, value: f64, lower: f64, upper: f64 },
    #[error("data contain non-finite values")]
    NonFiniteData,
    #[error("model {0} has no free parameters")]
    NothingToFit(String),
    #[error("model evaluates to a non-finite value at the initial guess")]
    NonFiniteModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// Iteration limit reached without meeting a convergence criterion.
    MaxIterations,
    /// The Jacobian is rank deficient; some parameters are not identifiable.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub model_id: String,
    pub names: Vec<String>,
    pub units: Vec<ParamUnit>,
    /// All parameters, frozen ones included.
    pub values: Vec<f64>,
    pub frozen: Vec<bool>,
    /// Covariance of the free parameters, in the order they appear in `names`.
    pub covariance: Vec<Vec<f64>>,
    /// Confidence interval per parameter; frozen ones are degenerate at the value.
    pub ci: Vec<(f64, f64)>,
    pub rss: f64,
    pub dof: usize,
    pub iterations: usize,
    pub status: FitStatus,
    /// Parameters flagged as unidentifiable.
    pub unidentifiable: Vec<String>,
}

impl FitOutcome {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn ci_of(&self, name: &str) -> Option<(f64, f64)> {
        self.names.iter().position(|n| n == name).map(|i| self.ci[i])
    }

    pub fn half_width(&self, name: &str) -> Option<f64> {
        self.ci_of(name).map(|(lo, hi)| 0.5 * (hi - lo))
    }

    /// √(covariance diagonal); zero for frozen parameters.
    pub fn std_error(&self, name: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == name)?;
        if self.frozen[i] {
            return Some(0.0);
        }
        let k = self.frozen[..i].iter().filter(|f| !**f).count();
        Some(self.covariance[k][k].max(0.0).sqrt())
    }
}

struct Problem<'a> {
    model: &'a ModelFunction,
    data: &'a FitData,
    free: Vec<usize>,
    weights: Vec<f64>,
    opts: FitOptions,
}

impl Problem<'_> {
    fn expand(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut p = self.model.initial();
        for (k, &i) in self.free.iter().enumerate() {
            p[i] = x[k];
        }
        p
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.expand(x);
        DVector::from_fn(self.data.len(), |i, _| {
            (self.data.y[i] - self.model.predict(&p, self.data.x[i], self.data.channel[i])) * self.weights[i]
        })
    }

    fn bounds(&self, k: usize) -> (f64, f64) {
        let s = &self.model.params[self.free[k]];
        (s.lower, s.upper)
    }

    fn clamp(&self, x: &mut DVector<f64>) {
        for k in 0..x.len() {
            let (lo, hi) = self.bounds(k);
            x[k] = x[k].clamp(lo, hi);
        }
    }

    /// Jacobian of the model (not the residual), weighted.
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.data.len();
        let m = x.len();
        let mut j = DMatrix::zeros(n, m);
        let p = self.expand(x);
        if let Some(grad) = &self.model.gradient {
            let mut g = vec![0.0; p.len()];
            for i in 0..n {
                grad(&p, self.data.x[i], self.data.channel[i], &mut g);
                for (k, &fi) in self.free.iter().enumerate() {
                    j[(i, k)] = g[fi] * self.weights[i];
                }
            }
            return j;
        }
        for k in 0..m {
            let h = self.opts.fd_relative_step * x[k].abs().max(1.0);
            let fi = self.free[k];
            // Central difference; at a bound the model may be undefined on the
            // far side, then fall back to a one-sided step inside the box.
            let column = |a: f64, b: f64| -> Vec<f64> {
                let (mut up, mut down) = (p.clone(), p.clone());
                up[fi] = a;
                down[fi] = b;
                (0..n)
                    .map(|i| {
                        let (xi, ch) = (self.data.x[i], self.data.channel[i]);
                        (self.model.predict(&up, xi, ch) - self.model.predict(&down, xi, ch)) / (a - b) * self.weights[i]
                    })
                    .collect()
            };
            let mut col = column(p[fi] + h, p[fi] - h);
            if col.iter().any(|v| !v.is_finite()) {
                let (lo, hi) = self.bounds(k);
                let (a, b) = ((p[fi] + h).min(hi), (p[fi] - h).max(lo));
                col = if a > b { column(a, b) } else { vec![0.0; n] };
            }
            for (i, v) in col.into_iter().enumerate() {
                j[(i, k)] = v;
            }
        }
        j
    }
}

/// Minimum number of points for `n_free` parameters.
pub fn min_points(n_free: usize) -> usize {
    (2 * n_free).max(8)
}

pub fn nlls_fit(model: &ModelFunction, data: &FitData, opts: &FitOptions) -> Result<FitOutcome, FitError> {
    let free: Vec<usize> = (0..model.params.len()).filter(|&i| !model.params[i].frozen).collect();
    if free.is_empty() {
        return Err(FitError::NothingToFit(model.id.clone()));
    }
    let need = min_points(free.len());
    if data.len() < need {
        return Err(FitError::TooFewPoints { need, got: data.len() });
    }
    if data.x.iter().chain(data.y.iter()).any(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteData);
    }
    for s in &model.params {
        if !s.frozen && !(s.initial >= s.lower && s.initial <= s.upper) {
            return Err(FitError::InitialOutOfBounds { name: s.name.clone(), value: s.initial, lower: s.lower, upper: s.upper });
        }
    }
    let weights = match (&data.sigma, opts.use_sigma) {
        (Some(s), true) => s.iter().map(|&s| if s > 0.0 { 1.0 / s } else { 1.0 }).collect(),
        _ => vec![1.0; data.len()],
    };
    let pb = Problem { model, data, free, weights, opts: *opts };
    let mut x = DVector::from_iterator(pb.free.len(), pb.free.iter().map(|&i| model.params[i].initial));
    let mut r = pb.residuals(&x);
    let mut rss = r.norm_squared();
    if !rss.is_finite() {
        return Err(FitError::NonFiniteModel);
    }

    let m = x.len();
    let mut lambda = 1e-3;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;
    let mut j = pb.jacobian(&x);
    while iterations < opts.max_iterations {
        iterations += 1;
        if rss == 0.0 {
            status = FitStatus::Converged;
            break;
        }
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let mut accepted = false;
        let mut stalled = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&g);
            let mut trial = &x + &step;
            pb.clamp(&mut trial);
            let actual = &trial - &x;
            if actual.norm() <= opts.step_tolerance * (x.norm() + opts.step_tolerance) {
                stalled = true;
                break;
            }
            let r_trial = pb.residuals(&trial);
            let rss_trial = r_trial.norm_squared();
            if rss_trial.is_finite() && rss_trial < rss {
                let improvement = (rss - rss_trial) / rss;
                x = trial;
                r = r_trial;
                rss = rss_trial;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if improvement < opts.rss_tolerance {
                    stalled = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if stalled || !accepted {
            status = FitStatus::Converged;
            break;
        }
        j = pb.jacobian(&x);
    }

    let j = pb.jacobian(&x);
    let jtj = j.transpose() * &j;
    let n = data.len();
    let dof = n.saturating_sub(m);
    let s2 = if dof > 0 { rss / dof as f64 } else { f64::NAN };

    // Rank check on the column-scaled normal matrix.
    let scale: Vec<f64> = (0..m).map(|k| jtj[(k, k)].sqrt()).collect();
    let mut unidentifiable = Vec::new();
    let max_scale = scale.iter().cloned().fold(0.0, f64::max);
    let mut scaled = jtj.clone();
    for a in 0..m {
        for b in 0..m {
            let d = scale[a] * scale[b];
            scaled[(a, b)] = if d > 0.0 { jtj[(a, b)] / d } else { 0.0 };
        }
    }
    let svd = scaled.clone().svd(true, true);
    let sv_max = svd.singular_values.max();
    let sv_min = svd.singular_values.min();
    let rank_deficient = !(sv_min > 1e-12 * sv_max) || scale.iter().any(|&s| !(s > 1e-14 * max_scale.max(1e-300)));
    if rank_deficient {
        status = FitStatus::Degenerate;
        for k in 0..m {
            if !(scale[k] > 1e-14 * max_scale.max(1e-300)) {
                unidentifiable.push(model.params[pb.free[k]].name.clone());
            }
        }
        if let Some(vt) = &svd.v_t {
            for (idx, &sv) in svd.singular_values.iter().enumerate() {
                if !(sv > 1e-12 * sv_max) {
                    for k in 0..m {
                        let name = &model.params[pb.free[k]].name;
                        if vt[(idx, k)].abs() > 0.1 && !unidentifiable.contains(name) {
                            unidentifiable.push(name.clone());
                        }
                    }
                }
            }
        }
    }

    let mut cov = DMatrix::from_element(m, m, f64::NAN);
    if !rank_deficient {
        if let Some(inv) = scaled.try_inverse() {
            for a in 0..m {
                for b in 0..m {
                    cov[(a, b)] = s2 * inv[(a, b)] / (scale[a] * scale[b]);
                }
            }
        }
    }
    let t = if dof > 0 {
        StudentsT::new(0.0, 1.0, dof as f64).map(|d| d.inverse_cdf(0.5 + 0.5 * opts.confidence)).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let values = pb.expand(&x);
    let mut ci: Vec<(f64, f64)> = values.iter().map(|&v| (v, v)).collect();
    for (k, &i) in pb.free.iter().enumerate() {
        let var = cov[(k, k)];
        let half = if var.is_finite() && var >= 0.0 && t.is_finite() { t * var.sqrt() } else { f64::INFINITY };
        ci[i] = (values[i] - half, values[i] + half);
    }
    Ok(FitOutcome {
        model_id: model.id.clone(),
        names: model.params.iter().map(|p| p.name.clone()).collect(),
        units: model.params.iter().map(|p| p.unit).collect(),
        values,
        frozen: model.params.iter().map(|p| p.frozen).collect(),
        covariance: (0..m).map(|a| (0..m).map(|b| cov[(a, b)]).collect()).collect(),
        ci,
        rss,
        dof,
        iterations,
        status,
        unidentifiable,
    })
}

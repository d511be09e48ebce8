use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[default]
    BinaryLogistic,
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Penalty {
    /// `λ |θ|²`
    #[default]
    SquaredL2,
    /// `λ |θ|`
    UnsquaredL2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub task: Task,
    pub lambda: f64,
    pub penalty: Penalty,
    pub fit_intercept: bool,
    pub max_iter: usize,
    /// Stop when the (proximal) gradient norm falls to this.
    pub tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            task: Task::BinaryLogistic,
            lambda: 1e-3,
            penalty: Penalty::SquaredL2,
            fit_intercept: true,
            max_iter: 20_000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub samples: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub task: Task,
    pub lambda: f64,
    pub penalty: Penalty,
    pub report: FitReport,
    /// Hash of the feature manifest the model was trained against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
}

impl LinearModel {
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.weights.len(),
                x.ncols()
            )));
        }
        let w = ArrayView1::from(&self.weights);
        Ok(x.dot(&w).iter().map(|z| z + self.intercept).collect())
    }

    /// Probabilities for logistic models, fitted values for least squares.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        let z = self.decision_function(x)?;
        Ok(match self.task {
            Task::BinaryLogistic => z.into_iter().map(sigmoid).collect(),
            Task::LeastSquares => z,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    cfg: &'a FitConfig,
}

impl Problem<'_> {
    fn m(&self) -> f64 {
        self.y.len() as f64
    }

    fn margins(&self, theta: &[f64], b: f64) -> Array1<f64> {
        self.x.dot(&ArrayView1::from(theta)) + b
    }

    /// Mean data loss, plus the squared penalty when it is the smooth part.
    fn smooth(&self, theta: &[f64], b: f64) -> f64 {
        let z = self.margins(theta, b);
        let data: f64 = match self.cfg.task {
            Task::BinaryLogistic => z.iter().zip(self.y).map(|(&z, &y)| softplus(z) - y * z).sum(),
            Task::LeastSquares => z.iter().zip(self.y).map(|(&z, &y)| 0.5 * (z - y).powi(2)).sum(),
        };
        let mut f = data / self.m();
        if self.cfg.penalty == Penalty::SquaredL2 {
            f += self.cfg.lambda * theta.iter().map(|t| t * t).sum::<f64>();
        }
        f
    }

    fn smooth_gradient(&self, theta: &[f64], b: f64) -> (Vec<f64>, f64) {
        let z = self.margins(theta, b);
        let resid: Array1<f64> = match self.cfg.task {
            Task::BinaryLogistic => z.iter().zip(self.y).map(|(&z, &y)| sigmoid(z) - y).collect(),
            Task::LeastSquares => z.iter().zip(self.y).map(|(&z, &y)| z - y).collect(),
        };
        let mut g: Vec<f64> = self.x.t().dot(&resid).iter().map(|v| v / self.m()).collect();
        if self.cfg.penalty == Penalty::SquaredL2 {
            for (gi, t) in g.iter_mut().zip(theta) {
                *gi += 2.0 * self.cfg.lambda * t;
            }
        }
        let gb = if self.cfg.fit_intercept { resid.sum() / self.m() } else { 0.0 };
        (g, gb)
    }

    fn nonsmooth(&self, theta: &[f64]) -> f64 {
        match self.cfg.penalty {
            Penalty::SquaredL2 => 0.0,
            Penalty::UnsquaredL2 => self.cfg.lambda * norm(theta),
        }
    }

    fn objective(&self, theta: &[f64], b: f64) -> f64 {
        self.smooth(theta, b) + self.nonsmooth(theta)
    }

    /// Proximal map of `step * λ|θ|` (group soft threshold); identity otherwise.
    fn prox(&self, v: &mut [f64], step: f64) {
        if self.cfg.penalty == Penalty::UnsquaredL2 {
            let n = norm(v);
            let shrink = if n > 0.0 { (1.0 - step * self.cfg.lambda / n).max(0.0) } else { 0.0 };
            v.iter_mut().for_each(|x| *x *= shrink);
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_inputs(x: ArrayView2<'_, f64>, y: &[f64], cfg: &FitConfig) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} feature rows but {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::Config("no training samples".into()));
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {}", cfg.lambda)));
    }
    if let Some((i, _)) = x.rows().into_iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::Dimension(format!("feature row {i} is not finite")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Dimension("labels must be finite".into()));
    }
    if cfg.task == Task::BinaryLogistic {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Config("logistic labels must be 0 or 1".into()));
        }
        if y.iter().all(|&v| v == y[0]) {
            return Err(Error::DegenerateLabels(format!("every label is {}", y[0])));
        }
    }
    Ok(())
}

/// Per-step trace of accepted objectives, exposed for monotonicity checks.
pub fn fit_traced(x: ArrayView2<'_, f64>, y: &[f64], cfg: &FitConfig) -> Result<(LinearModel, Vec<f64>)> {
    check_inputs(x, y, cfg)?;
    let p = Problem { x, y, cfg };
    let d = x.ncols();
    let mut theta = vec![0.0; d];
    let mut b = if cfg.fit_intercept {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match cfg.task {
            Task::BinaryLogistic => (mean / (1.0 - mean)).ln(),
            Task::LeastSquares => mean,
        }
    } else {
        0.0
    };

    let mut obj = p.objective(&theta, b);
    let mut trace = vec![obj];
    let (mut g, mut gb) = p.smooth_gradient(&theta, b);
    let mut step = 1.0;
    let mut prev: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iter {
        // Barzilai-Borwein initial step from the last accepted move
        if let Some((pt, pb, pg, pgb)) = &prev {
            let s: Vec<f64> = theta.iter().zip(pt).map(|(a, b)| a - b).chain([b - pb]).collect();
            let yv: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).chain([gb - pgb]).collect();
            let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|a| a * a).sum();
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12, 1e12);
            }
        }
        let f0 = p.smooth(&theta, b);
        let mut accepted = None;
        for _ in 0..100 {
            let mut nt: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - step * gi).collect();
            p.prox(&mut nt, step);
            let nb = b - step * gb;
            let dt: Vec<f64> = nt.iter().zip(&theta).map(|(a, b)| a - b).chain([nb - b]).collect();
            let lin: f64 = dt.iter().zip(g.iter().chain([&gb])).map(|(a, b)| a * b).sum();
            let quad: f64 = dt.iter().map(|a| a * a).sum::<f64>() / (2.0 * step);
            let f1 = p.smooth(&nt, nb);
            if f1 <= f0 + lin + quad + 1e-15 * f0.abs() {
                let mapping = (dt.iter().map(|a| a * a).sum::<f64>()).sqrt() / step;
                accepted = Some((nt, nb, mapping));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((nt, nb, mapping)) = accepted else { break };
        grad_norm = mapping;
        let new_obj = p.objective(&nt, nb);
        if new_obj > obj {
            // rounding-level increase: keep the current iterate
            break;
        }
        prev = Some((std::mem::replace(&mut theta, nt), b, g, gb));
        b = nb;
        obj = new_obj;
        trace.push(obj);
        (g, gb) = p.smooth_gradient(&theta, b);
        if grad_norm <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    let model = LinearModel {
        weights: theta,
        intercept: b,
        task: cfg.task,
        lambda: cfg.lambda,
        penalty: cfg.penalty,
        report: FitReport { iterations, objective: obj, gradient_norm: grad_norm, samples: y.len(), converged },
        manifest_hash: None,
    };
    Ok((model, trace))
}

/// Full-batch proximal gradient descent with Barzilai-Borwein steps and
/// backtracking. Deterministic: starts from `θ = 0`.
pub fn fit(x: ArrayView2<'_, f64>, y: &[f64], cfg: &FitConfig) -> Result<LinearModel> {
    fit_traced(x, y, cfg).map(|(m, _)| m)
}

/// Analytic gradient of the smooth objective, for finite-difference checks.
pub fn objective_and_gradient(x: &Array2<f64>, y: &[f64], cfg: &FitConfig, theta: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
    let p = Problem { x: x.view(), y, cfg };
    let (g, gb) = p.smooth_gradient(theta, b);
    (p.smooth(theta, b), g, gb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_pair() {
        let x = array![[1.0], [-1.0]];
        let m = fit(x.view(), &[1.0, 0.0], &FitConfig { lambda: 1e-6, ..Default::default() }).unwrap();
        let p = m.predict(x.view()).unwrap();
        assert!(p[0] > 0.5 && p[1] < 0.5);
    }

    #[test]
    fn huge_lambda_gives_intercept_only() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [2.0, 2.0]];
        let y = [1.0, 0.0, 1.0, 1.0];
        let m = fit(x.view(), &y, &FitConfig { lambda: 1e8, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-6));
        assert!((sigmoid(m.intercept) - 0.75).abs() < 1e-6);
        let m = fit(x.view(), &y, &FitConfig { lambda: 1e3, penalty: Penalty::UnsquaredL2, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert!(m.report.converged);
    }

    #[test]
    fn degenerate_labels() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(fit(x.view(), &[1.0, 1.0], &FitConfig::default()), Err(Error::DegenerateLabels(_))));
        assert!(fit(x.view(), &[1.0, 2.0], &FitConfig::default()).is_err());
        let ls = FitConfig { task: Task::LeastSquares, ..Default::default() };
        assert!(fit(x.view(), &[1.0, 1.0], &ls).is_ok());
    }

    #[test]
    fn non_finite_rows_rejected() {
        let x = array![[1.0], [f64::NAN]];
        assert!(fit(x.view(), &[1.0, 0.0], &FitConfig::default()).is_err());
    }

    #[test]
    fn least_squares_matches_ridge_solution() {
        // one feature, no intercept: θ = Σxy / (Σx² + 2Mλ)
        let x = array![[1.0], [2.0], [3.0]];
        let y = [2.0, 3.0, 7.0];
        let cfg = FitConfig { task: Task::LeastSquares, lambda: 0.1, fit_intercept: false, ..Default::default() };
        let m = fit(x.view(), &y, &cfg).unwrap();
        let expect = (2.0 + 6.0 + 21.0) / (14.0 + 2.0 * 3.0 * 0.1);
        assert!((m.weights[0] - expect).abs() < 1e-8, "{} vs {expect}", m.weights[0]);
    }

    #[test]
    fn model_json_round_trip() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let m = fit(x.view(), &[1.0, 0.0, 1.0], &FitConfig::default()).unwrap();
        let back = LinearModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict(x.view()).unwrap(), m.predict(x.view()).unwrap());
    }

    #[test]
    fn width_mismatch() {
        let x = array![[1.0], [0.0]];
        let m = fit(x.view(), &[1.0, 0.0], &FitConfig::default()).unwrap();
        assert!(m.predict(array![[1.0, 2.0]].view()).is_err());
    }
}

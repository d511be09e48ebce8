use serde::{Deserialize, Serialize};

use super::sensing::SensingOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryMethod {
    /// Orthogonal matching pursuit.
    #[default]
    Omp,
    /// Iterative soft thresholding with an annealed threshold.
    Ista,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryOptions {
    pub method: RecoveryMethod,
    /// Greedy step limit for omp. Defaults to the row count.
    pub budget: Option<usize>,
    /// Stop once `|residual| <= tolerance * |f|`.
    pub tolerance: f64,
    /// Iteration cap for ista.
    pub max_iter: usize,
    pub nonnegative: bool,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions { method: RecoveryMethod::Omp, budget: None, tolerance: 1e-9, max_iter: 5000, nonnegative: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Set when the solver stopped before meeting the tolerance.
    pub approximate: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the normal equations of `min |A_S x - f|` by Cholesky.
/// Returns `None` when the selected columns are numerically dependent.
fn least_squares(cols: &[Vec<f64>], f: &[f64]) -> Option<Vec<f64>> {
    let s = cols.len();
    let mut g = vec![0.0; s * s];
    let mut b = vec![0.0; s];
    for i in 0..s {
        b[i] = cols[i].iter().zip(f).map(|(a, c)| a * c).sum();
        for j in 0..=i {
            let v: f64 = cols[i].iter().zip(&cols[j]).map(|(a, c)| a * c).sum();
            g[i * s + j] = v;
            g[j * s + i] = v;
        }
    }
    let trace_scale = (0..s).map(|i| g[i * s + i]).fold(0.0, f64::max);
    let mut l = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..=i {
            let mut sum = g[i * s + j];
            for k in 0..j {
                sum -= l[i * s + k] * l[j * s + k];
            }
            if i == j {
                if sum <= 1e-10 * trace_scale {
                    return None;
                }
                l[i * s + i] = sum.sqrt();
            } else {
                l[i * s + j] = sum / l[j * s + j];
            }
        }
    }
    let mut y = vec![0.0; s];
    for i in 0..s {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * s + k] * y[k];
        }
        y[i] = sum / l[i * s + i];
    }
    let mut x = vec![0.0; s];
    for i in (0..s).rev() {
        let mut sum = y[i];
        for k in i + 1..s {
            sum -= l[k * s + i] * x[k];
        }
        x[i] = sum / l[i * s + i];
    }
    Some(x)
}

/// Refit on `support`, dropping columns that come back negative when
/// `nonnegative` is set, until the fit is feasible.
fn refit(a: &dyn SensingOperator, f: &[f64], support: &mut Vec<usize>, nonnegative: bool) -> Option<Vec<f64>> {
    loop {
        let cols: Vec<Vec<f64>> = support.iter().map(|&i| a.column(i)).collect();
        let x = least_squares(&cols, f)?;
        if !nonnegative || x.iter().all(|&v| v >= 0.0) {
            return Some(x);
        }
        let keep: Vec<usize> = support.iter().zip(&x).filter(|(_, &v)| v >= 0.0).map(|(&i, _)| i).collect();
        *support = keep;
    }
}

fn residual(a: &dyn SensingOperator, f: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.apply(x);
    f.iter().zip(&ax).map(|(p, q)| p - q).collect()
}

fn dense_from_support(cols: usize, support: &[usize], values: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; cols];
    for (&i, &v) in support.iter().zip(values) {
        x[i] = v;
    }
    x
}

fn column_norms(a: &dyn SensingOperator) -> Vec<f64> {
    let mut col = vec![0.0; a.rows()];
    (0..a.cols())
        .map(|i| {
            a.column_into(i, &mut col);
            norm(&col)
        })
        .collect()
}

fn omp(a: &dyn SensingOperator, f: &[f64], opts: &RecoveryOptions) -> Recovery {
    let budget = opts.budget.unwrap_or(a.rows()).min(a.cols());
    let fnorm = norm(f);
    let stop = opts.tolerance * fnorm.max(f64::MIN_POSITIVE);
    let norms = column_norms(a);
    let mut support: Vec<usize> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut res = f.to_vec();
    let mut rnorm = fnorm;
    let mut iterations = 0;
    let mut banned = vec![false; a.cols()];

    while rnorm > stop && iterations < budget {
        iterations += 1;
        let corr = a.apply_transpose(&res);
        let mut best: Option<(usize, f64)> = None;
        for (i, (&c, &nrm)) in corr.iter().zip(&norms).enumerate() {
            if banned[i] || nrm == 0.0 {
                continue;
            }
            let score = if opts.nonnegative { c / nrm } else { c.abs() / nrm };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((i, score));
            }
        }
        let Some((idx, score)) = best else { break };
        if score <= 1e-12 * fnorm {
            break;
        }
        banned[idx] = true;
        let mut trial = support.clone();
        trial.push(idx);
        let Some(x) = refit(a, f, &mut trial, opts.nonnegative) else { break };
        support = trial;
        values = x;
        res = residual(a, f, &dense_from_support(a.cols(), &support, &values));
        rnorm = norm(&res);
    }
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by_key(|&i| support[i]);
    let coefficients = dense_from_support(a.cols(), &support, &values);
    let support: Vec<usize> = order.iter().map(|&i| support[i]).filter(|&i| coefficients[i] != 0.0).collect();
    Recovery { coefficients, support, residual_norm: rnorm, iterations, approximate: rnorm > stop }
}

fn spectral_norm_sq(a: &dyn SensingOperator) -> f64 {
    let mut v: Vec<f64> = (0..a.cols()).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut lambda = 0.0;
    for _ in 0..100 {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let w = a.apply_transpose(&a.apply(&v));
        let next = norm(&w);
        let done = (next - lambda).abs() <= 1e-9 * next;
        lambda = next;
        v = w;
        if done {
            break;
        }
    }
    lambda
}

fn ista(a: &dyn SensingOperator, f: &[f64], opts: &RecoveryOptions) -> Recovery {
    let fnorm = norm(f);
    let stop = opts.tolerance * fnorm.max(f64::MIN_POSITIVE);
    let cols = a.cols();
    if fnorm == 0.0 {
        return Recovery { coefficients: vec![0.0; cols], support: vec![], residual_norm: 0.0, iterations: 0, approximate: false };
    }
    let step = 1.0 / spectral_norm_sq(a).max(f64::MIN_POSITIVE);
    let lambda_max = a.apply_transpose(f).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lambda_min = 1e-6 * lambda_max;
    let mut lambda = 0.5 * lambda_max;
    let mut x = vec![0.0; cols];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let res = residual(a, f, &x);
        let grad = a.apply_transpose(&res);
        let mut delta = 0.0;
        for i in 0..cols {
            let z = x[i] + step * grad[i];
            let shrunk = if opts.nonnegative {
                (z - step * lambda).max(0.0)
            } else {
                z.signum() * (z.abs() - step * lambda).max(0.0)
            };
            delta += (shrunk - x[i]).powi(2);
            x[i] = shrunk;
        }
        let xnorm = norm(&x).max(1e-300);
        if delta.sqrt() <= 1e-10 * xnorm {
            if lambda <= lambda_min {
                converged = true;
                break;
            }
            lambda = (lambda * 0.5).max(lambda_min);
        } else if iterations % 50 == 0 {
            lambda = (lambda * 0.8).max(lambda_min);
        }
    }
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut support: Vec<usize> = (0..cols).filter(|&i| x[i].abs() > 1e-3 * xmax).collect();
    let (coefficients, rnorm) = match refit(a, f, &mut support, opts.nonnegative) {
        Some(vals) => {
            let c = dense_from_support(cols, &support, &vals);
            let r = norm(&residual(a, f, &c));
            (c, r)
        }
        None => {
            let r = norm(&residual(a, f, &x));
            (x, r)
        }
    };
    let support: Vec<usize> = (0..cols).filter(|&i| coefficients[i] != 0.0).collect();
    Recovery { coefficients, support, residual_norm: rnorm, iterations, approximate: !converged || rnorm > stop }
}

/// Recovers a sparse `c` with `A c ≈ f`.
pub fn sparse_recover(f: &[f64], a: &dyn SensingOperator, opts: &RecoveryOptions) -> Result<Recovery> {
    if f.len() != a.rows() {
        return Err(Error::Dimension(format!("measurement has length {}, operator has {} rows", f.len(), a.rows())));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::Dimension("non-finite measurement".into()));
    }
    Ok(match opts.method {
        RecoveryMethod::Omp => omp(a, f, opts),
        RecoveryMethod::Ista => ista(a, f, opts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::AttributeSchema;
    use crate::theory::counts::count_statistics;
    use crate::theory::identity::apply_level;
    use crate::theory::sensing::{build_sensing, Allocation, DenseOperator};
    use crate::graph::MolecularGraph;
    use ndarray::Array2;

    #[test]
    fn trivial_sensing() {
        let a = DenseOperator(Array2::eye(4));
        for method in [RecoveryMethod::Omp, RecoveryMethod::Ista] {
            let rec = sparse_recover(&[0.0, 3.0, 0.0, 0.0], &a, &RecoveryOptions { method, ..Default::default() }).unwrap();
            assert_eq!(rec.support, vec![1]);
            assert!((rec.coefficients[1] - 3.0).abs() < 1e-12);
            assert!(!rec.approximate);
        }
    }

    #[test]
    fn zero_measurement() {
        let a = DenseOperator(Array2::eye(3));
        let rec = sparse_recover(&[0.0; 3], &a, &RecoveryOptions::default()).unwrap();
        assert!(rec.support.is_empty() && rec.coefficients.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn path_graph_counts_at_r16() {
        let s = AttributeSchema::uniform("s", &[3]).unwrap();
        let g = MolecularGraph::new(&s, vec![vec![0], vec![1], vec![2]], &[(0, 1), (1, 2)]).unwrap();
        let b = build_sensing(&s, 16, 5, Allocation::Equal, 0.25).unwrap();
        let c = count_statistics(&g, &s, 2).unwrap();
        let f = apply_level(&b, &c, 2);
        let t = b.level_operator(2).unwrap();
        for method in [RecoveryMethod::Omp, RecoveryMethod::Ista] {
            let rec = sparse_recover(&f, &t, &RecoveryOptions { method, budget: Some(2), ..Default::default() }).unwrap();
            let rounded: Vec<f64> = rec.coefficients.iter().map(|x| x.round()).collect();
            assert_eq!(rounded, vec![2.0, 0.0, 2.0], "{method:?}");
        }
    }

    #[test]
    fn length_mismatch() {
        let a = DenseOperator(Array2::eye(3));
        assert!(sparse_recover(&[1.0], &a, &RecoveryOptions::default()).is_err());
    }

    #[test]
    fn underdetermined_budget_is_approximate() {
        let a = DenseOperator(ndarray::array![[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]);
        let rec = sparse_recover(&[1.0, -1.0], &a, &RecoveryOptions { budget: Some(1), ..Default::default() }).unwrap();
        assert!(rec.approximate);
    }
}

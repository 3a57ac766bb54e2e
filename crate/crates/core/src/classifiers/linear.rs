//! One-vs-rest linear models: L2 logistic regression (L-BFGS) and linear SVM
//! (dual coordinate descent).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SvmLoss, TrainConfig};
use crate::features::{FeatureMatrix, SparseRow};

/// Per-class weights and bias; class `k` scores `w[k]·x + b[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn scores(&self, x: SparseRow<'_>) -> Vec<f64> {
        self.weights.iter().zip(&self.bias).map(|(w, b)| x.dot(w) + b).collect()
    }

    pub fn predict(&self, x: SparseRow<'_>) -> usize {
        self.classes[super::argmax(&self.scores(x))]
    }
}

/// Result of one binary fit.
#[derive(Debug, Clone)]
pub struct BinaryFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective after every iteration (primal for logistic, dual for SVM).
    pub history: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `0.5‖w‖² + C Σ sᵢ log(1 + exp(−yᵢ(w·xᵢ + b)))` and its gradient.
///
/// `params` holds `w` followed by the (unpenalised) bias; `y` is ±1.
pub fn logistic_objective(
    x: &FeatureMatrix,
    y: &[f64],
    sample_weight: &[f64],
    c: f64,
    params: &[f64],
) -> (f64, Vec<f64>) {
    let d = x.n_cols();
    let (w, b) = (&params[..d], params[d]);
    let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut g = params.to_vec();
    g[d] = 0.0;
    for (i, row) in x.rows().enumerate() {
        let m = y[i] * (row.dot(w) + b);
        f += c * sample_weight[i] * softplus(-m);
        let coef = -c * sample_weight[i] * y[i] * sigmoid(-m);
        row.axpy(coef, &mut g[..d]);
        g[d] += coef;
    }
    (f, g)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Binary logistic regression by L-BFGS with Armijo backtracking.
pub fn fit_logistic_binary(
    x: &FeatureMatrix,
    y: &[f64],
    sample_weight: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> BinaryFit {
    const MEMORY: usize = 10;
    let n = x.n_cols() + 1;
    let mut params = vec![0.0; n];
    let (mut f, mut g) = logistic_objective(x, y, sample_weight, c, &params);
    let g0 = inf_norm(&g).max(1.0);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![f];
    for _ in 0..max_iter {
        if inf_norm(&g) <= tol * g0 {
            break;
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, yv) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(yv, s);
            let a = rho * dot(s, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(yv)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, yv) / dot(yv, yv);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let scale = 1.0 / inf_norm(&g).max(1.0);
            q.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, yv), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let beta = rho * dot(yv, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - beta) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            let scale = 1.0 / inf_norm(&g).max(1.0);
            dir = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let (ft, gt) = logistic_objective(x, y, sample_weight, c, &trial);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fnext, gnext)) = accepted else { break };
        let s: Vec<f64> = next.iter().zip(&params).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gnext.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 {
            if s_hist.len() == MEMORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        let decrease = f - fnext;
        params = next;
        f = fnext;
        g = gnext;
        history.push(f);
        if decrease <= 1e-14 * f.abs().max(1.0) {
            break;
        }
    }
    let bias = params.pop().unwrap_or(0.0);
    BinaryFit { weights: params, bias, history }
}

/// Dual objective of the SVM for a given `alpha`, in the augmented (bias-as-feature) space.
fn svm_dual(w: &[f64], wb: f64, alpha: &[f64], diag: &[f64]) -> f64 {
    0.5 * (dot(w, w) + wb * wb) + alpha.iter().zip(diag).map(|(a, d)| 0.5 * d * a * a - a).sum::<f64>()
}

/// Binary linear SVM by dual coordinate descent. The bias is learned as an extra
/// constant feature of value `intercept_scaling`, so it is lightly regularised.
#[allow(clippy::too_many_arguments)]
pub fn fit_svm_binary(
    x: &FeatureMatrix,
    y: &[f64],
    sample_weight: &[f64],
    c: f64,
    loss: SvmLoss,
    intercept_scaling: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> BinaryFit {
    let n = x.n_rows();
    let bsc = intercept_scaling;
    let (upper, diag): (Vec<f64>, Vec<f64>) = sample_weight
        .iter()
        .map(|s| match loss {
            SvmLoss::Hinge => (c * s, 0.0),
            SvmLoss::SquaredHinge => (f64::INFINITY, 0.5 / (c * s)),
        })
        .unzip();
    let qii: Vec<f64> = (0..n).map(|i| x.row(i).squared_norm() + bsc * bsc + diag[i]).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; x.n_cols()];
    let mut wb = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = vec![0.0];
    for _ in 0..max_iter {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            if qii[i] <= 0.0 {
                continue;
            }
            let row = x.row(i);
            let grad = y[i] * (row.dot(&w) + wb * bsc) - 1.0 + diag[i] * alpha[i];
            let pg = if alpha[i] == 0.0 {
                grad.min(0.0)
            } else if alpha[i] == upper[i] {
                grad.max(0.0)
            } else {
                grad
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - grad / qii[i]).clamp(0.0, upper[i]);
                let delta = (alpha[i] - old) * y[i];
                row.axpy(delta, &mut w);
                wb += delta * bsc;
            }
        }
        history.push(svm_dual(&w, wb, &alpha, &diag));
        if pg_max - pg_min <= tol {
            break;
        }
    }
    BinaryFit { weights: w, bias: wb * bsc, history }
}

/// Class weights: uniform ones, or `n / (k · count_c)` when balanced.
pub fn class_weights(y: &[usize], classes: &[usize], balanced: bool) -> Vec<f64> {
    if !balanced {
        return vec![1.0; classes.len()];
    }
    let n = y.len() as f64;
    let k = classes.len() as f64;
    classes
        .iter()
        .map(|c| n / (k * y.iter().filter(|&&l| l == *c).count() as f64))
        .collect()
}

/// Train one binary model per class (in parallel) and assemble the one-vs-rest model.
pub(crate) fn fit_ovr(
    x: &FeatureMatrix,
    y: &[usize],
    classes: &[usize],
    cfg: &TrainConfig,
    logistic: bool,
) -> (LinearModel, Vec<Vec<f64>>) {
    let cw = class_weights(y, classes, cfg.class_weight.is_balanced());
    let sw: Vec<f64> = y
        .iter()
        .map(|l| cw[classes.iter().position(|c| c == l).expect("label in class list")])
        .collect();
    let fits: Vec<BinaryFit> = classes
        .par_iter()
        .map(|&c| {
            let yb: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            if logistic {
                fit_logistic_binary(x, &yb, &sw, cfg.c, cfg.tolerance, cfg.max_iterations)
            } else {
                fit_svm_binary(
                    x,
                    &yb,
                    &sw,
                    cfg.c,
                    cfg.svm_loss,
                    cfg.intercept_scaling,
                    cfg.tolerance,
                    cfg.max_iterations,
                    cfg.seed,
                )
            }
        })
        .collect();
    let mut model = LinearModel { classes: classes.to_vec(), weights: Vec::new(), bias: Vec::new() };
    let mut histories = Vec::new();
    for f in fits {
        model.weights.push(f.weights);
        model.bias.push(f.bias);
        histories.push(f.history);
    }
    (model, histories)
}

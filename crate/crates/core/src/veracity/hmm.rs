//! Gaussian-emission hidden Markov models: forward/backward, Viterbi and Baum-Welch.

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-3;

/// A sequence of observation rows, all of the model width.
pub type Observations = [Vec<f64>];

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianHmm {
    pub start: Vec<f64>,
    /// Row-stochastic, `trans[i][j]` = P(j | i).
    pub trans: Vec<Vec<f64>>,
    /// Per state, per dimension.
    pub means: Vec<Vec<f64>>,
    pub vars: Vec<Vec<f64>>,
}

impl GaussianHmm {
    pub fn n_states(&self) -> usize {
        self.start.len()
    }

    pub fn width(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    /// Structural checks: stochastic start/rows (within 1e-9), positive variances, consistent shapes.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        let w = self.width();
        let bad = |m: &str| Err(Error::invalid(format!("invalid HMM: {m}")));
        if n == 0 {
            return bad("no states");
        }
        if self.trans.len() != n || self.trans.iter().any(|r| r.len() != n) {
            return bad("transition matrix shape");
        }
        if self.means.len() != n || self.vars.len() != n || self.vars.iter().chain(&self.means).any(|v| v.len() != w) {
            return bad("emission shape");
        }
        let stochastic = |r: &[f64]| r.iter().all(|&p| p >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if !stochastic(&self.start) || !self.trans.iter().all(|r| stochastic(r)) {
            return bad("start or transition rows are not stochastic");
        }
        if self.vars.iter().flatten().any(|&v| v.is_nan() || v <= 0.0) {
            return bad("non-positive variance");
        }
        Ok(())
    }

    pub fn log_emission(&self, state: usize, x: &[f64]) -> f64 {
        self.means[state]
            .iter()
            .zip(&self.vars[state])
            .zip(x)
            .map(|((m, v), x)| -0.5 * ((2.0 * PI * v).ln() + (x - m).powi(2) / v))
            .sum()
    }

    fn check(&self, obs: &Observations) -> Result<()> {
        if obs.is_empty() {
            return Err(Error::invalid("empty observation sequence"));
        }
        if let Some(r) = obs.iter().find(|r| r.len() != self.width()) {
            return Err(Error::Dimension { expected: self.width(), actual: r.len() });
        }
        Ok(())
    }

    fn emissions(&self, obs: &Observations) -> Vec<Vec<f64>> {
        obs.iter().map(|x| (0..self.n_states()).map(|s| self.log_emission(s, x)).collect()).collect()
    }

    fn log_trans(&self) -> Vec<Vec<f64>> {
        self.trans.iter().map(|r| r.iter().map(|&p| ln(p)).collect()).collect()
    }

    /// Log forward variables, `alpha[t][s]`.
    pub fn forward(&self, obs: &Observations) -> Result<Vec<Vec<f64>>> {
        self.check(obs)?;
        let e = self.emissions(obs);
        let lt = self.log_trans();
        let n = self.n_states();
        let mut alpha = vec![(0..n).map(|s| ln(self.start[s]) + e[0][s]).collect::<Vec<_>>()];
        for t in 1..obs.len() {
            let prev = &alpha[t - 1];
            let row = (0..n)
                .map(|j| {
                    let terms: Vec<f64> = (0..n).map(|i| prev[i] + lt[i][j]).collect();
                    logsumexp(&terms) + e[t][j]
                })
                .collect();
            alpha.push(row);
        }
        Ok(alpha)
    }

    /// Log backward variables, `beta[t][s]`.
    pub fn backward(&self, obs: &Observations) -> Result<Vec<Vec<f64>>> {
        self.check(obs)?;
        let e = self.emissions(obs);
        let lt = self.log_trans();
        let n = self.n_states();
        let t_len = obs.len();
        let mut beta = vec![vec![0.0; n]; t_len];
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                let terms: Vec<f64> = (0..n).map(|j| lt[i][j] + e[t + 1][j] + beta[t + 1][j]).collect();
                beta[t][i] = logsumexp(&terms);
            }
        }
        Ok(beta)
    }

    /// log P(obs | model).
    pub fn log_likelihood(&self, obs: &Observations) -> Result<f64> {
        let alpha = self.forward(obs)?;
        Ok(logsumexp(alpha.last().unwrap()))
    }

    /// State posteriors `gamma[t][s]`; each row sums to 1.
    pub fn posteriors(&self, obs: &Observations) -> Result<Vec<Vec<f64>>> {
        let alpha = self.forward(obs)?;
        let beta = self.backward(obs)?;
        let ll = logsumexp(alpha.last().unwrap());
        Ok(alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y - ll).exp()).collect())
            .collect())
    }

    /// Most likely state path and its joint log-probability. Among equally likely
    /// paths the lexicographically smallest is returned.
    pub fn viterbi(&self, obs: &Observations) -> Result<(Vec<usize>, f64)> {
        self.check(obs)?;
        let e = self.emissions(obs);
        let lt = self.log_trans();
        let n = self.n_states();
        let t_len = obs.len();
        // best[t][s]: best log-score of the suffix from t+1 given state s at t.
        let mut best = vec![vec![0.0; n]; t_len];
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                best[t][i] = (0..n)
                    .map(|j| lt[i][j] + e[t + 1][j] + best[t + 1][j])
                    .fold(f64::NEG_INFINITY, f64::max);
            }
        }
        let tie = |v: f64, m: f64| v >= m - 1e-12 * m.abs().max(1.0);
        let first: Vec<f64> = (0..n).map(|s| ln(self.start[s]) + e[0][s] + best[0][s]).collect();
        let score = first.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut state = (0..n).find(|&s| tie(first[s], score)).unwrap_or(0);
        let mut path = vec![state];
        for t in 1..t_len {
            let cand: Vec<f64> = (0..n).map(|j| lt[state][j] + e[t][j] + best[t][j]).collect();
            let m = cand.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            state = (0..n).find(|&j| tie(cand[j], m)).unwrap_or(0);
            path.push(state);
        }
        Ok((path, score))
    }

    /// Joint log-probability of `obs` along a given state path.
    pub fn path_log_prob(&self, obs: &Observations, path: &[usize]) -> f64 {
        let mut lp = ln(self.start[path[0]]) + self.log_emission(path[0], &obs[0]);
        for t in 1..obs.len() {
            lp += ln(self.trans[path[t - 1]][path[t]]) + self.log_emission(path[t], &obs[t]);
        }
        lp
    }

    /// Draw a sequence of length `len`.
    pub fn sample(&self, len: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let pick = |p: &[f64], rng: &mut dyn rand::RngCore| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, &x) in p.iter().enumerate() {
                acc += x;
                if u < acc {
                    return i;
                }
            }
            p.len() - 1
        };
        let mut out = Vec::with_capacity(len);
        let mut s = pick(&self.start, rng);
        for t in 0..len {
            if t > 0 {
                s = pick(&self.trans[s], rng);
            }
            out.push(
                self.means[s]
                    .iter()
                    .zip(&self.vars[s])
                    .map(|(&m, &v)| Normal::new(m, v.sqrt()).unwrap().sample(rng))
                    .collect(),
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Stop when an iteration gains less log-likelihood than this.
    pub tol: f64,
    pub restarts: usize,
    pub var_floor: f64,
    pub seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig { max_iter: 100, tol: 1e-4, restarts: 5, var_floor: DEFAULT_VARIANCE_FLOOR, seed: 0 }
    }
}

/// Log-likelihood trace of the kept restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub restart: usize,
    /// Total log-likelihood before each M-step, then of the final model.
    pub log_likelihood: Vec<f64>,
}

fn dirichlet_row(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g: Gamma<f64> = Gamma::new(1.0, 1.0).unwrap();
    let draws: Vec<f64> = (0..n).map(|_| g.sample(rng).max(1e-12)).collect();
    let s: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / s).collect()
}

fn data_variance(seqs: &[Vec<Vec<f64>>], width: usize) -> Vec<f64> {
    let rows: Vec<&Vec<f64>> = seqs.iter().flatten().collect();
    let n = rows.len() as f64;
    (0..width)
        .map(|d| {
            let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
            rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n
        })
        .collect()
}

/// Random initial model: Dirichlet start and transitions, means at random observations,
/// variances at the data variance.
pub fn random_init(seqs: &[Vec<Vec<f64>>], n: usize, var_floor: f64, rng: &mut impl Rng) -> GaussianHmm {
    let rows: Vec<&Vec<f64>> = seqs.iter().flatten().collect();
    let width = rows[0].len();
    let var: Vec<f64> = data_variance(seqs, width).into_iter().map(|v| v.max(var_floor)).collect();
    let picks = sample(rng, rows.len(), n.min(rows.len())).into_vec();
    GaussianHmm {
        start: dirichlet_row(n, rng),
        trans: (0..n).map(|_| dirichlet_row(n, rng)).collect(),
        means: (0..n).map(|s| rows[picks[s % picks.len()]].clone()).collect(),
        vars: vec![var; n],
    }
}

/// One EM iteration in place. Returns the total log-likelihood of the model before the update.
pub fn em_step(hmm: &mut GaussianHmm, seqs: &[Vec<Vec<f64>>], var_floor: f64) -> Result<f64> {
    let n = hmm.n_states();
    let w = hmm.width();
    let lt = hmm.log_trans();
    let mut total = 0.0;
    let mut start = vec![0.0; n];
    let mut xi = vec![vec![0.0; n]; n];
    let mut occ = vec![0.0; n];
    let mut sum_x = vec![vec![0.0; w]; n];
    let mut gammas = Vec::with_capacity(seqs.len());
    for obs in seqs {
        let alpha = hmm.forward(obs)?;
        let beta = hmm.backward(obs)?;
        let ll = logsumexp(alpha.last().unwrap());
        total += ll;
        let e = hmm.emissions(obs);
        let mut gamma = vec![vec![0.0; n]; obs.len()];
        for t in 0..obs.len() {
            for s in 0..n {
                let g = (alpha[t][s] + beta[t][s] - ll).exp();
                gamma[t][s] = g;
                if t == 0 {
                    start[s] += g;
                }
                occ[s] += g;
                for d in 0..w {
                    sum_x[s][d] += g * obs[t][d];
                }
            }
            if t + 1 < obs.len() {
                for i in 0..n {
                    for j in 0..n {
                        xi[i][j] += (alpha[t][i] + lt[i][j] + e[t + 1][j] + beta[t + 1][j] - ll).exp();
                    }
                }
            }
        }
        gammas.push(gamma);
    }
    let s: f64 = start.iter().sum();
    hmm.start = start.iter().map(|x| x / s).collect();
    for (row, counts) in hmm.trans.iter_mut().zip(&xi) {
        let total: f64 = counts.iter().sum();
        if total > 0.0 {
            *row = counts.iter().map(|x| x / total).collect();
        }
    }
    for s in 0..n {
        if occ[s] > 0.0 {
            hmm.means[s] = sum_x[s].iter().map(|x| x / occ[s]).collect();
        }
    }
    let mut sum_sq = vec![vec![0.0; w]; n];
    for (obs, gamma) in seqs.iter().zip(&gammas) {
        for (x, g) in obs.iter().zip(gamma) {
            for s in 0..n {
                for d in 0..w {
                    sum_sq[s][d] += g[s] * (x[d] - hmm.means[s][d]).powi(2);
                }
            }
        }
    }
    for s in 0..n {
        if occ[s] > 0.0 {
            hmm.vars[s] = sum_sq[s].iter().map(|x| (x / occ[s]).max(var_floor)).collect();
        }
    }
    Ok(total)
}

fn total_ll(hmm: &GaussianHmm, seqs: &[Vec<Vec<f64>>]) -> Result<f64> {
    seqs.iter().map(|o| hmm.log_likelihood(o)).sum()
}

/// Baum-Welch over all sequences with `cfg.restarts` random starts; keeps the best final likelihood.
pub fn baum_welch(seqs: &[Vec<Vec<f64>>], n: usize, cfg: &EmConfig) -> Result<(GaussianHmm, EmTrace)> {
    if n == 0 {
        return Err(Error::invalid("an HMM needs at least one state"));
    }
    if seqs.is_empty() || seqs.iter().any(|s| s.is_empty()) {
        return Err(Error::invalid("Baum-Welch needs non-empty sequences"));
    }
    let width = seqs[0][0].len();
    if seqs.iter().flatten().any(|r| r.len() != width) {
        return Err(Error::invalid("observation rows differ in width"));
    }
    let count: usize = seqs.iter().map(Vec::len).sum();
    if n > count {
        return Err(Error::invalid(format!("{n} states but only {count} observations")));
    }
    let mut best: Option<(GaussianHmm, EmTrace, f64)> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        let mut hmm = random_init(seqs, n, cfg.var_floor, &mut rng);
        let mut trace = Vec::new();
        for _ in 0..cfg.max_iter {
            let ll = em_step(&mut hmm, seqs, cfg.var_floor)?;
            let gained = trace.last().is_none_or(|&prev: &f64| ll - prev >= cfg.tol);
            trace.push(ll);
            if !gained {
                break;
            }
        }
        let fin = total_ll(&hmm, seqs)?;
        trace.push(fin);
        if best.as_ref().is_none_or(|b| fin > b.2) {
            best = Some((hmm, EmTrace { restart: r, log_likelihood: trace }, fin));
        }
    }
    let (hmm, trace, _) = best.unwrap();
    Ok((hmm, trace))
}

//! Decision trees with information-gain splits and bagged random forests.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::{FeatureMatrix, SparseRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Entropy,
    Gini,
}

impl Criterion {
    fn impurity(self, counts: &[f64]) -> f64 {
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Entropy => counts
                .iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| {
                    let p = c / total;
                    -p * p.log2()
                })
                .sum(),
            Criterion::Gini => 1.0 - counts.iter().map(|&c| (c / total).powi(2)).sum::<f64>(),
        }
    }

    /// Impurity decrease of splitting `parent` into `left` and `parent - left`.
    pub fn gain(self, parent: &[f64], left: &[f64]) -> f64 {
        let right: Vec<f64> = parent.iter().zip(left).map(|(p, l)| p - l).collect();
        let (wp, wl) = (parent.iter().sum::<f64>(), left.iter().sum::<f64>());
        let wr = wp - wl;
        self.impurity(parent) - (wl / wp) * self.impurity(left) - (wr / wp) * self.impurity(&right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    /// ⌈√d⌉ features per split.
    Sqrt,
    All,
    #[serde(untagged)]
    Count(usize),
}

impl FeatureSubset {
    fn size(self, d: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => (d as f64).sqrt().ceil() as usize,
            FeatureSubset::All => d,
            FeatureSubset::Count(k) => k.min(d),
        }
        .max(1)
        .min(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { counts: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize, counts: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub classes: Vec<usize>,
    /// Arena; node 0 is the root.
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn leaf_counts(&self, x: SparseRow<'_>) -> &[f64] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return counts,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x.get(*feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict(&self, x: SparseRow<'_>) -> usize {
        self.classes[argmax(self.leaf_counts(x))]
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

pub(crate) struct TreeParams {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features: FeatureSubset,
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    class_of: Vec<usize>,
    k: usize,
    weight: Vec<f64>,
    params: &'a TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.k];
        for &s in samples {
            c[self.class_of[s]] += self.weight[s];
        }
        c
    }

    /// Best split over `candidates` (ascending). Ties keep the earliest feature and threshold.
    fn best_split(&self, samples: &[usize], parent: &[f64], candidates: &[usize]) -> Option<SplitChoice> {
        let mut by_feature: HashMap<usize, Vec<(f64, usize)>> = HashMap::new();
        for &s in samples {
            let row = self.x.row(s);
            for (&j, &v) in row.indices.iter().zip(row.values) {
                by_feature.entry(j as usize).or_default().push((v, s));
            }
        }
        let mut best: Option<SplitChoice> = None;
        for &f in candidates {
            let Some(entries) = by_feature.get_mut(&f) else { continue };
            entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            // Implicit zeros sit between the negative and positive entries.
            let nz = self.counts(&entries.iter().map(|e| e.1).collect::<Vec<_>>());
            let zeros: Vec<f64> = parent.iter().zip(&nz).map(|(p, q)| p - q).collect();
            let n_zero = samples.len() - entries.len();
            let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut zero_done = n_zero == 0;
            let mut i = 0;
            while i < entries.len() || !zero_done {
                if !zero_done && (i == entries.len() || entries[i].0 > 0.0) {
                    groups.push((0.0, zeros.clone()));
                    zero_done = true;
                    continue;
                }
                let v = entries[i].0;
                let mut c = vec![0.0; self.k];
                while i < entries.len() && entries[i].0 == v {
                    let s = entries[i].1;
                    c[self.class_of[s]] += self.weight[s];
                    i += 1;
                }
                groups.push((v, c));
            }
            let mut left = vec![0.0; self.k];
            for w in groups.windows(2) {
                left.iter_mut().zip(&w[0].1).for_each(|(l, c)| *l += c);
                let gain = self.params.criterion.gain(parent, &left);
                if gain > 1e-12 && best.is_none_or(|b| gain > b.gain + 1e-12) {
                    best = Some(SplitChoice { feature: f, threshold: 0.5 * (w[0].0 + w[1].0), gain });
                }
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.counts(&samples);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: counts.clone() });
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if pure || !depth_ok || samples.len() < self.params.min_samples_split {
            return id;
        }
        let d = self.x.n_cols();
        let m = self.params.features.size(d);
        let candidates: Vec<usize> = if m >= d {
            (0..d).collect()
        } else {
            let mut c = sample(rng, d, m).into_vec();
            c.sort_unstable();
            c
        };
        let Some(split) = self.best_split(&samples, &counts, &candidates) else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&s| self.x.row(s).get(split.feature) <= split.threshold);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[id] =
            Node::Split { feature: split.feature, threshold: split.threshold, left, right, counts };
        id
    }
}

/// Grow a tree on `samples` (repeats allowed) with per-sample weights.
pub(crate) fn grow(
    x: &FeatureMatrix,
    y: &[usize],
    classes: &[usize],
    class_weight: &[f64],
    samples: Vec<usize>,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> TreeModel {
    let class_of: Vec<usize> =
        y.iter().map(|l| classes.iter().position(|c| c == l).expect("label in class list")).collect();
    // Repeated samples become weights.
    let mut mult = vec![0.0; x.n_rows()];
    for &s in &samples {
        mult[s] += 1.0;
    }
    let weight: Vec<f64> = (0..x.n_rows()).map(|i| mult[i] * class_weight[class_of[i]]).collect();
    let mut unique: Vec<usize> = samples;
    unique.sort_unstable();
    unique.dedup();
    let mut b = Builder { x, class_of, k: classes.len(), weight, params, nodes: Vec::new() };
    b.build(unique, 0, rng);
    TreeModel { classes: classes.to_vec(), nodes: b.nodes }
}

/// Best root split by the tree's search; exposed for checking against brute force.
pub fn root_split(x: &FeatureMatrix, y: &[usize], criterion: Criterion) -> Option<SplitChoice> {
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let params = TreeParams { criterion, max_depth: None, min_samples_split: 2, features: FeatureSubset::All };
    let class_of = y.iter().map(|l| classes.binary_search(l).unwrap()).collect();
    let b = Builder { x, class_of, k: classes.len(), weight: vec![1.0; y.len()], params: &params, nodes: vec![] };
    let samples: Vec<usize> = (0..y.len()).collect();
    let counts = b.counts(&samples);
    b.best_split(&samples, &counts, &(0..x.n_cols()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub classes: Vec<usize>,
    pub trees: Vec<TreeModel>,
    /// Seed each tree was grown with (`seed + index`).
    pub tree_seeds: Vec<u64>,
}

impl ForestModel {
    /// Plurality vote, ties to the lowest class.
    pub fn predict(&self, x: SparseRow<'_>) -> usize {
        let mut votes = vec![0.0; self.classes.len()];
        for t in &self.trees {
            let c = t.predict(x);
            votes[self.classes.iter().position(|k| *k == c).unwrap()] += 1.0;
        }
        self.classes[argmax(&votes)]
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_forest(
    x: &FeatureMatrix,
    y: &[usize],
    classes: &[usize],
    class_weight: &[f64],
    n_trees: usize,
    bootstrap: bool,
    params: &TreeParams,
    seed: u64,
) -> ForestModel {
    let n = x.n_rows();
    let seeds: Vec<u64> = (0..n_trees as u64).map(|i| seed.wrapping_add(i)).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let samples: Vec<usize> =
                if bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
            grow(x, y, classes, class_weight, samples, params, &mut rng)
        })
        .collect();
    ForestModel { classes: classes.to_vec(), trees, tree_seeds: seeds }
}

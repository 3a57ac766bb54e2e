//! Stratified holdout splits and k-fold partitions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

fn by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut m: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        m.entry(l).or_default().push(i);
    }
    m
}

/// Split indices into (train, test) with `ceil(test_fraction · n)` test samples,
/// allocated to classes by largest remainder.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    let classes = by_class(labels);
    if let Some((c, idx)) = classes.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::invalid(format!("class {c} has {} sample(s); at least 2 are needed", idx.len())));
    }
    let n_test = (test_fraction * labels.len() as f64).ceil() as usize;
    let exact: Vec<f64> = classes.values().map(|v| test_fraction * v.len() as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..alloc.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut missing = n_test.saturating_sub(alloc.iter().sum());
    for &i in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        let size = classes.values().nth(i).unwrap().len();
        if alloc[i] + 1 < size {
            alloc[i] += 1;
            missing -= 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (idx, &k) in classes.values().zip(&alloc) {
        let mut idx = idx.clone();
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Partition indices into `k` test folds. Each class is shuffled and dealt round-robin,
/// continuing from the fold where the previous class stopped, so fold sizes differ by at most one.
pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    let classes = by_class(labels);
    if let Some((c, idx)) = classes.iter().find(|(_, v)| v.len() < k) {
        return Err(Error::invalid(format!("class {c} has {} samples, fewer than k = {k}", idx.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for idx in classes.values() {
        let mut idx = idx.clone();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Training indices for a test fold: every index not in `test`.
pub fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in test {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

//! Averaged word vectors and context cosine similarities.

use crate::resources::WordVectorTable;

/// Mean of the in-vocabulary token vectors; `None` when no token is known.
pub fn mean_vector<S: AsRef<str>>(tokens: &[S], table: &WordVectorTable) -> Option<Vec<f64>> {
    let mut sum = vec![0.0f64; table.dimension()];
    let mut n = 0usize;
    for t in tokens {
        if let Some(v) = table.get(t.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += f64::from(*x);
            }
            n += 1;
        }
    }
    (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
}

/// Cosine similarity; 0 if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Token context of a post for the similarity features.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingContext<'a> {
    pub parent: &'a [String],
    pub source: &'a [String],
    pub branch: &'a [String],
}

/// `dimension + 3` values: mean vector, then cosine to parent, source and branch.
pub fn embed(tokens: &[String], table: &WordVectorTable, ctx: EmbeddingContext<'_>) -> Vec<f64> {
    let dim = table.dimension();
    let own = mean_vector(tokens, table).unwrap_or_else(|| vec![0.0; dim]);
    let sim = |other: &[String]| {
        mean_vector(other, table).map_or(0.0, |o| cosine(&own, &o))
    };
    let mut out = own.clone();
    out.push(sim(ctx.parent));
    out.push(sim(ctx.source));
    out.push(sim(ctx.branch));
    out
}

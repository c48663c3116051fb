//! Entropy-based rankers: Gain Ratio and Symmetrical Uncertainty over
//! equal-frequency discretized features.

use crate::data::ExpressionMatrix;

use super::{FeatureRanking, RankError};

/// Bins a column at its empirical quantiles: value `v` lands in bin
/// `floor(bins * |{u : u < v}| / n)`. Equal values always share a bin, a
/// constant column collapses to one bin, and when all values are distinct the
/// occupied bin count is `min(bins, n)` with sizes differing by at most one.
pub fn discretize_equal_frequency(column: &[f64], bins: usize) -> Vec<usize> {
    let n = column.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| column[a].partial_cmp(&column[b]).expect("finite values"));

    let mut out = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && column[order[j + 1]] == column[order[i]] {
            j += 1;
        }
        let bin = i * bins / n;
        for &sample in &order[i..=j] {
            out[sample] = bin;
        }
        i = j + 1;
    }
    out
}

/// Shannon entropy in bits of a categorical sample.
pub fn entropy(categories: &[usize]) -> f64 {
    if categories.is_empty() {
        return 0.0;
    }
    let max = *categories.iter().max().expect("non-empty");
    let mut counts = vec![0usize; max + 1];
    for &c in categories {
        counts[c] += 1;
    }
    entropy_from_counts(&counts, categories.len())
}

fn entropy_from_counts(counts: &[usize], total: usize) -> f64 {
    let total = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Mutual information between a binned feature and the labels, plus the
/// marginal entropies: returns (IG, H(X), H(Y)).
fn feature_information(bins_of: &[usize], labels: &[u8], bins: usize) -> (f64, f64, f64) {
    let n = bins_of.len();
    let mut joint = vec![[0usize; 2]; bins];
    let mut label_counts = [0usize; 2];
    for (&b, &l) in bins_of.iter().zip(labels) {
        joint[b][l as usize] += 1;
        label_counts[l as usize] += 1;
    }
    let hy = entropy_from_counts(&label_counts, n);

    let mut hx = 0.0;
    let mut h_cond = 0.0;
    for cell in &joint {
        let nv = cell[0] + cell[1];
        if nv == 0 {
            continue;
        }
        let pv = nv as f64 / n as f64;
        hx -= pv * pv.log2();
        h_cond += pv * entropy_from_counts(cell, nv);
    }
    (hy - h_cond, hx, hy)
}

fn rank_by_information(
    m: &ExpressionMatrix,
    bins: usize,
    score: impl Fn(f64, f64, f64) -> f64,
) -> Result<FeatureRanking, RankError> {
    if bins < 2 {
        return Err(RankError::TooFewBins);
    }
    let labels = m.labels();
    let mut scores = Vec::with_capacity(m.n_features());
    let mut column = vec![0.0; m.n_samples()];
    for f in 0..m.n_features() {
        for (dst, src) in column.iter_mut().zip(m.values().column(f)) {
            *dst = *src;
        }
        let binned = discretize_equal_frequency(&column, bins);
        let (ig, hx, hy) = feature_information(&binned, labels, bins);
        scores.push(score(ig, hx, hy));
    }
    FeatureRanking::from_scores(scores)
}

/// Gain Ratio: information gain normalized by the feature's own entropy,
/// `IG(X; Y) / H(X)`. Constant features (H(X) = 0) score 0.
pub fn gain_ratio(m: &ExpressionMatrix, bins: usize) -> Result<FeatureRanking, RankError> {
    rank_by_information(m, bins, |ig, hx, _| if hx > 0.0 { ig / hx } else { 0.0 })
}

/// Symmetrical Uncertainty: `2 * IG(X; Y) / (H(X) + H(Y))`, or 0 when the
/// denominator vanishes.
pub fn symmetrical_uncertainty(
    m: &ExpressionMatrix,
    bins: usize,
) -> Result<FeatureRanking, RankError> {
    rank_by_information(m, bins, |ig, hx, hy| {
        let denom = hx + hy;
        if denom > 0.0 {
            2.0 * ig / denom
        } else {
            0.0
        }
    })
}

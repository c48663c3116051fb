//! Discriminative index from a softmax regression trained on z-scores.

use crate::data::ExpressionMatrix;

use super::{FeatureRanking, RankError};

/// Trains a two-output softmax layer by full-batch gradient descent on
/// z-scored features and scores feature `i` as
///
/// ```text
/// DI_i = | w_{i,0} * mean_0(z_i)  -  w_{i,1} * mean_1(z_i) |
/// ```
///
/// where `w_{i,c}` connects the feature to class output `c` and the means
/// are taken over the samples of each class. Weights and biases start at
/// zero; features are standardized with the population standard deviation
/// and constant features become all-zero columns, which keeps their weights
/// at zero and their index at exactly 0.
///
/// Feature sums inside the forward pass run in a canonical order derived by
/// sorting the standardized columns by content, not by the order the
/// features arrived in, so reordering the input columns reorders the
/// returned scores without changing a single bit of them.
pub fn wx(
    m: &ExpressionMatrix,
    epochs: usize,
    learning_rate: f64,
) -> Result<FeatureRanking, RankError> {
    if epochs == 0 {
        return Err(RankError::ZeroEpochs);
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(RankError::BadLearningRate(learning_rate));
    }

    let t = m.n_samples();
    let n_features = m.n_features();
    let values = m.values();
    let labels = m.labels();

    let mut z = vec![0.0f64; t * n_features];
    for f in 0..n_features {
        let col = values.column(f);
        let mut mean = 0.0;
        for &v in col {
            mean += v;
        }
        mean /= t as f64;
        let mut var = 0.0;
        for &v in col {
            let d = v - mean;
            var += d * d;
        }
        var /= t as f64;
        let sd = var.sqrt();
        if sd > 0.0 {
            let dst = &mut z[f * t..(f + 1) * t];
            for (s, &v) in col.iter().enumerate() {
                dst[s] = (v - mean) / sd;
            }
        }
    }
    let column = |f: usize| &z[f * t..(f + 1) * t];

    let mut canonical: Vec<usize> = (0..n_features).collect();
    canonical.sort_by(|&a, &b| {
        let (ca, cb) = (&z[a * t..(a + 1) * t], &z[b * t..(b + 1) * t]);
        for s in 0..t {
            match ca[s].total_cmp(&cb[s]) {
                std::cmp::Ordering::Equal => {}
                unequal => return unequal,
            }
        }
        a.cmp(&b)
    });

    let mut w = vec![[0.0f64; 2]; n_features];
    let mut bias = [0.0f64; 2];
    let mut logits = vec![[0.0f64; 2]; t];
    let mut residual = vec![[0.0f64; 2]; t];

    for _ in 0..epochs {
        for l in logits.iter_mut() {
            *l = bias;
        }
        for (slot, &f) in canonical.iter().enumerate() {
            let col = column(f);
            let wf = w[slot];
            for s in 0..t {
                logits[s][0] += col[s] * wf[0];
                logits[s][1] += col[s] * wf[1];
            }
        }
        for s in 0..t {
            let peak = logits[s][0].max(logits[s][1]);
            let e0 = (logits[s][0] - peak).exp();
            let e1 = (logits[s][1] - peak).exp();
            let sum = e0 + e1;
            let (t0, t1) = if labels[s] == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
            residual[s] = [e0 / sum - t0, e1 / sum - t1];
        }
        for (slot, &f) in canonical.iter().enumerate() {
            let col = column(f);
            let mut g = [0.0f64; 2];
            for s in 0..t {
                g[0] += col[s] * residual[s][0];
                g[1] += col[s] * residual[s][1];
            }
            w[slot][0] -= learning_rate * (g[0] / t as f64);
            w[slot][1] -= learning_rate * (g[1] / t as f64);
        }
        let mut db = [0.0f64; 2];
        for s in 0..t {
            db[0] += residual[s][0];
            db[1] += residual[s][1];
        }
        bias[0] -= learning_rate * (db[0] / t as f64);
        bias[1] -= learning_rate * (db[1] / t as f64);
    }

    let (n0, n1) = m.class_counts();
    let mut scores = vec![0.0f64; n_features];
    for (slot, &f) in canonical.iter().enumerate() {
        let col = column(f);
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for s in 0..t {
            if labels[s] == 0 {
                m0 += col[s];
            } else {
                m1 += col[s];
            }
        }
        m0 /= n0 as f64;
        m1 /= n1 as f64;
        scores[f] = (w[slot][0] * m0 - w[slot][1] * m1).abs();
    }
    FeatureRanking::from_scores(scores)
}

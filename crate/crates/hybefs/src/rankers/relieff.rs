//! ReliefF with a deterministic full pass over every sample.

use crate::data::ExpressionMatrix;

use super::{FeatureRanking, RankError};

/// ReliefF weights: for every sample, the `k` nearest same-class neighbors
/// (hits) pull each feature's weight down by its normalized difference and
/// the `k` nearest other-class neighbors (misses) push it up,
///
/// ```text
/// W[f] += sum_misses diff(f, R, M) / (T * k)  -  sum_hits diff(f, R, H) / (T * k)
/// ```
///
/// with `diff(f, a, b) = |a_f - b_f| / (max_f - min_f)` (0 for constant
/// features) and Manhattan distance over the same normalized differences.
///
/// Every sample takes a turn as `R`, so the pass is deterministic. `k` is
/// capped at one below the smaller class count, which guarantees enough hits
/// and misses for every sample. Neighbor ties at equal distance break toward
/// the lower sample index.
pub fn relieff(m: &ExpressionMatrix, k_neighbors: usize) -> Result<FeatureRanking, RankError> {
    if k_neighbors == 0 {
        return Err(RankError::ZeroNeighbors);
    }
    let (n0, n1) = m.class_counts();
    for (class, found) in [(0u8, n0), (1u8, n1)] {
        if found < 2 {
            return Err(RankError::ClassTooSmall {
                algorithm: "relieff",
                class,
                needed: 2,
                found,
            });
        }
    }
    let k = k_neighbors.min(n0.min(n1) - 1);
    let t = m.n_samples();
    let n_features = m.n_features();
    let values = m.values();
    let labels = m.labels();

    let mut range = vec![0.0f64; n_features];
    for f in 0..n_features {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values.column(f) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        range[f] = hi - lo;
    }

    let distance = |a: usize, b: usize| -> f64 {
        let ra = values.row(a);
        let rb = values.row(b);
        let mut d = 0.0;
        for f in 0..n_features {
            if range[f] > 0.0 {
                d += (ra[f] - rb[f]).abs() / range[f];
            }
        }
        d
    };

    let denom = (t * k) as f64;
    let mut weights = vec![0.0f64; n_features];
    let mut hits: Vec<(f64, usize)> = Vec::with_capacity(t);
    let mut misses: Vec<(f64, usize)> = Vec::with_capacity(t);

    for r in 0..t {
        hits.clear();
        misses.clear();
        for other in 0..t {
            if other == r {
                continue;
            }
            let d = distance(r, other);
            if labels[other] == labels[r] {
                hits.push((d, other));
            } else {
                misses.push((d, other));
            }
        }
        let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.partial_cmp(&b.0).expect("finite distance").then(a.1.cmp(&b.1))
        };
        hits.sort_unstable_by(by_distance_then_index);
        misses.sort_unstable_by(by_distance_then_index);

        let row_r = values.row(r);
        for &(_, neighbor) in &misses[..k] {
            let row_n = values.row(neighbor);
            for f in 0..n_features {
                if range[f] > 0.0 {
                    weights[f] += ((row_r[f] - row_n[f]).abs() / range[f]) / denom;
                }
            }
        }
        for &(_, neighbor) in &hits[..k] {
            let row_n = values.row(neighbor);
            for f in 0..n_features {
                if range[f] > 0.0 {
                    weights[f] -= ((row_r[f] - row_n[f]).abs() / range[f]) / denom;
                }
            }
        }
    }

    FeatureRanking::from_scores(weights)
}

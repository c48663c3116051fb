//! Characteristic-direction scoring through a PCA subspace.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::data::ExpressionMatrix;

use super::{FeatureRanking, RankError};

/// Scores features by the squared components of the characteristic
/// direction: the unit vector `b` maximizing class separation under the
/// within-class covariance metric.
///
/// The samples are centered and projected onto the principal components
/// that jointly explain at least `var_fraction` of the variance (computed
/// from the sample-space Gram matrix, so the cost scales with samples, not
/// features). In that subspace the within-class covariance, pooled across
/// both classes with divisor `T - 2`, is shrunk toward a scaled identity,
///
/// ```text
/// sigma_gamma = (1 - gamma) * sigma + gamma * (trace(sigma) / d) * I
/// ```
///
/// and `sigma_gamma a = mean_1 - mean_0` is solved for the direction,
/// which is mapped back to feature space and unit-normalized. The score of
/// feature `i` is `b_i^2`, so scores sum to one and large components mark
/// the genes driving the class difference.
pub fn geode(
    m: &ExpressionMatrix,
    gamma: f64,
    var_fraction: f64,
) -> Result<FeatureRanking, RankError> {
    if !(0.0..=1.0).contains(&gamma) || gamma.is_nan() {
        return Err(RankError::BadGamma(gamma));
    }
    if !(var_fraction > 0.0 && var_fraction <= 1.0) {
        return Err(RankError::BadVarFraction(var_fraction));
    }
    let (n0, n1) = m.class_counts();
    for (class, found) in [(0u8, n0), (1u8, n1)] {
        if found < 2 {
            return Err(RankError::ClassTooSmall {
                algorithm: "geode",
                class,
                needed: 2,
                found,
            });
        }
    }

    let t = m.n_samples();
    let n_features = m.n_features();
    let values = m.values();
    let labels = m.labels();

    let mut centered = DMatrix::<f64>::zeros(t, n_features);
    for f in 0..n_features {
        let mut mean = 0.0;
        for &v in values.column(f) {
            mean += v;
        }
        mean /= t as f64;
        for s in 0..t {
            centered[(s, f)] = values[(s, f)] - mean;
        }
    }

    let gram = &centered * centered.transpose();
    let eigen = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_unstable_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("finite eigenvalue")
            .then(a.cmp(&b))
    });

    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    if lambda_max <= 0.0 {
        return Err(RankError::DegenerateDirection);
    }
    let tol = lambda_max * 1e-12;
    let positive: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| eigen.eigenvalues[i] > tol)
        .collect();
    let total: f64 = positive.iter().map(|&i| eigen.eigenvalues[i]).sum();
    let mut d = positive.len();
    let mut cum = 0.0;
    for (count, &i) in positive.iter().enumerate() {
        cum += eigen.eigenvalues[i];
        if cum >= var_fraction * total {
            d = count + 1;
            break;
        }
    }

    let sqrt_lambda: Vec<f64> = positive[..d]
        .iter()
        .map(|&i| eigen.eigenvalues[i].sqrt())
        .collect();
    let mut scores = DMatrix::<f64>::zeros(t, d);
    for (j, &i) in positive[..d].iter().enumerate() {
        for s in 0..t {
            scores[(s, j)] = eigen.eigenvectors[(s, i)] * sqrt_lambda[j];
        }
    }

    let mut means = [DVector::<f64>::zeros(d), DVector::<f64>::zeros(d)];
    for s in 0..t {
        let class = labels[s] as usize;
        for j in 0..d {
            means[class][j] += scores[(s, j)];
        }
    }
    means[0] /= n0 as f64;
    means[1] /= n1 as f64;

    let mut pooled = DMatrix::<f64>::zeros(d, d);
    for s in 0..t {
        let mean = &means[labels[s] as usize];
        for a in 0..d {
            let da = scores[(s, a)] - mean[a];
            for b in 0..d {
                pooled[(a, b)] += da * (scores[(s, b)] - mean[b]);
            }
        }
    }
    pooled /= (t - 2) as f64;
    if pooled.trace() <= total * 1e-12 {
        return Err(RankError::SingularCovariance);
    }

    let ridge = gamma * pooled.trace() / d as f64;
    let mut shrunk = pooled * (1.0 - gamma);
    for j in 0..d {
        shrunk[(j, j)] += ridge;
    }

    let delta = &means[1] - &means[0];
    let a = match Cholesky::new(shrunk.clone()) {
        Some(chol) => chol.solve(&delta),
        None => match shrunk.lu().solve(&delta) {
            Some(solution) => solution,
            None => return Err(RankError::SingularCovariance),
        },
    };

    let mut back = DVector::<f64>::zeros(t);
    for (j, &i) in positive[..d].iter().enumerate() {
        let coeff = a[j] / sqrt_lambda[j];
        for s in 0..t {
            back[s] += eigen.eigenvectors[(s, i)] * coeff;
        }
    }
    let mut direction = vec![0.0f64; n_features];
    for f in 0..n_features {
        let mut acc = 0.0;
        for s in 0..t {
            acc += centered[(s, f)] * back[s];
        }
        direction[f] = acc;
    }

    let norm = direction.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(RankError::DegenerateDirection);
    }
    let squared: Vec<f64> = direction
        .iter()
        .map(|b| {
            let u = b / norm;
            u * u
        })
        .collect();
    FeatureRanking::from_scores(squared)
}

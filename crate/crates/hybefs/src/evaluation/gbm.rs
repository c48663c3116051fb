//! Gradient-boosted decision trees for binary classification.
//!
//! The booster fits regression trees to logistic-loss residuals. Splits are
//! found by exhaustive search over every feature and every boundary between
//! distinct adjacent values, so training is fully deterministic: no
//! subsampling, no random tie-breaking. Equal-gain candidates resolve to the
//! lowest feature index and then the lowest threshold.

use ndarray::{ArrayView1, ArrayView2};
use thiserror::Error;

/// Largest magnitude a leaf value may take.
const MAX_LEAF_VALUE: f64 = 4.0;

/// Problems that prevent training or scoring a boosted model.
#[derive(Debug, Error)]
pub enum GbmError {
    /// The label vector does not match the number of rows.
    #[error("matrix has {rows} rows but {labels} labels were given")]
    LabelCountMismatch {
        /// Rows in the feature matrix.
        rows: usize,
        /// Entries in the label vector.
        labels: usize,
    },
    /// Training needs at least one sample from each class.
    #[error("training labels contain only one class")]
    SingleClass,
    /// The matrix handed to prediction has the wrong width.
    #[error("model was trained on {expected} features but the matrix has {found}")]
    FeatureCountMismatch {
        /// Features the model was trained on.
        expected: usize,
        /// Columns in the matrix being scored.
        found: usize,
    },
    /// A hyperparameter is out of range.
    #[error("{0}")]
    BadParams(String),
}

/// Hyperparameters for [`gbm_train`].
#[derive(Debug, Clone)]
pub struct GbmParams {
    /// Number of boosting rounds.
    pub n_trees: usize,
    /// Maximum tree depth; zero grows bare leaves.
    pub max_depth: usize,
    /// Shrinkage applied to every tree's contribution.
    pub learning_rate: f64,
    /// Minimum number of samples on each side of a split.
    pub min_leaf: usize,
}

impl Default for GbmParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 2,
        }
    }
}

impl GbmParams {
    fn validate(&self) -> Result<(), GbmError> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(GbmError::BadParams(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.min_leaf == 0 {
            return Err(GbmError::BadParams(
                "min_leaf must be at least 1".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn value_for(&self, row: ArrayView1<'_, f64>) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }
}

/// A trained gradient-boosted classifier.
#[derive(Debug, Clone)]
pub struct BoostedModel {
    initial_score: f64,
    learning_rate: f64,
    n_features: usize,
    pub(crate) trees: Vec<Node>,
}

impl BoostedModel {
    /// Log-odds of the positive class before any tree is applied.
    pub fn initial_score(&self) -> f64 {
        self.initial_score
    }

    /// Number of boosting rounds the model holds.
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Number of features the model expects at prediction time.
    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Trains a boosted ensemble on rows of `x` with binary `labels`.
///
/// The score starts at the log-odds of the positive class. Each round fits a
/// regression tree to the residuals `label - sigmoid(score)`, choosing splits
/// that maximise the reduction in residual sum of squares, and sets each leaf
/// to the Newton step `sum(residual) / sum(p * (1 - p))` clamped to
/// `[-4, 4]`. The learning rate scales every tree's contribution.
pub fn gbm_train(
    x: ArrayView2<'_, f64>,
    labels: &[u8],
    params: &GbmParams,
) -> Result<BoostedModel, GbmError> {
    params.validate()?;
    let n = x.nrows();
    if labels.len() != n {
        return Err(GbmError::LabelCountMismatch {
            rows: n,
            labels: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&y| y != 0).count();
    if n_pos == 0 || n_pos == n {
        return Err(GbmError::SingleClass);
    }

    let initial_score = (n_pos as f64 / (n - n_pos) as f64).ln();
    let mut score = vec![initial_score; n];
    let mut residual = vec![0.0f64; n];
    let mut hessian = vec![0.0f64; n];

    let sorted: Vec<Vec<u32>> = (0..x.ncols())
        .map(|f| {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| {
                x[(a as usize, f)]
                    .total_cmp(&x[(b as usize, f)])
                    .then(a.cmp(&b))
            });
            order
        })
        .collect();

    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for i in 0..n {
            let p = sigmoid(score[i]);
            residual[i] = f64::from(labels[i].min(1)) - p;
            hessian[i] = p * (1.0 - p);
        }
        let tree = grow(x, &sorted, &residual, &hessian, params, 0);
        for i in 0..n {
            score[i] += params.learning_rate * tree.value_for(x.row(i));
        }
        trees.push(tree);
    }

    Ok(BoostedModel {
        initial_score,
        learning_rate: params.learning_rate,
        n_features: x.ncols(),
        trees,
    })
}

/// Grows one regression tree over the samples listed in `items`.
///
/// `items` holds one index list per feature, each sorted ascending by that
/// feature's value with ties broken by row index; partitioning filters the
/// lists so the order survives recursion and no re-sorting is needed.
fn grow(
    x: ArrayView2<'_, f64>,
    items: &[Vec<u32>],
    residual: &[f64],
    hessian: &[f64],
    params: &GbmParams,
    depth: usize,
) -> Node {
    let n_node = items[0].len();
    let leaf = |rows: &[u32]| {
        let sum_r: f64 = rows.iter().map(|&i| residual[i as usize]).sum();
        let sum_h: f64 = rows.iter().map(|&i| hessian[i as usize]).sum();
        let value = if sum_h > 0.0 {
            (sum_r / sum_h).clamp(-MAX_LEAF_VALUE, MAX_LEAF_VALUE)
        } else {
            0.0
        };
        Node::Leaf { value }
    };

    if depth >= params.max_depth || n_node < 2 * params.min_leaf {
        return leaf(&items[0]);
    }

    let total: f64 = items[0].iter().map(|&i| residual[i as usize]).sum();
    let baseline = total * total / n_node as f64;

    struct Best {
        gain: f64,
        feature: usize,
        threshold: f64,
    }
    let mut best: Option<Best> = None;

    for (feature, list) in items.iter().enumerate() {
        let mut left_sum = 0.0f64;
        for k in 0..n_node - 1 {
            left_sum += residual[list[k] as usize];
            let lo = x[(list[k] as usize, feature)];
            let hi = x[(list[k + 1] as usize, feature)];
            if lo >= hi {
                continue;
            }
            let n_left = k + 1;
            let n_right = n_node - n_left;
            if n_left < params.min_leaf || n_right < params.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64
                + right_sum * right_sum / n_right as f64
                - baseline;
            if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = (lo + hi) / 2.0;
                if threshold <= lo {
                    threshold = hi;
                }
                best = Some(Best {
                    gain,
                    feature,
                    threshold,
                });
            }
        }
    }

    let Some(best) = best else {
        return leaf(&items[0]);
    };

    let goes_left: Vec<bool> = items[0]
        .iter()
        .map(|&i| (x[(i as usize, best.feature)] < best.threshold, i))
        .fold(vec![false; x.nrows()], |mut mask, (left, i)| {
            mask[i as usize] = left;
            mask
        });
    let split_lists = |keep_left: bool| -> Vec<Vec<u32>> {
        items
            .iter()
            .map(|list| {
                list.iter()
                    .copied()
                    .filter(|&i| goes_left[i as usize] == keep_left)
                    .collect()
            })
            .collect()
    };
    let left_items = split_lists(true);
    let right_items = split_lists(false);

    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(x, &left_items, residual, hessian, params, depth + 1)),
        right: Box::new(grow(x, &right_items, residual, hessian, params, depth + 1)),
    }
}

/// Scores each row of `x`, returning the predicted positive-class probability.
pub fn predict_proba(model: &BoostedModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>, GbmError> {
    if x.ncols() != model.n_features {
        return Err(GbmError::FeatureCountMismatch {
            expected: model.n_features,
            found: x.ncols(),
        });
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            let mut acc = model.initial_score;
            for tree in &model.trees {
                acc += model.learning_rate * tree.value_for(row);
            }
            sigmoid(acc)
        })
        .collect())
}

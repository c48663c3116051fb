//! Threshold-free classifier metrics.
//!
//! Both curves are computed from rank statistics rather than swept
//! thresholds, so tied scores are handled exactly: ROC AUC uses the
//! Mann-Whitney statistic with midranks, and PR AUC is the average precision
//! with each tie group absorbed as a single block.

use thiserror::Error;

/// Problems that prevent computing a metric.
#[derive(Debug, Error)]
pub enum MetricError {
    /// Scores and labels must be the same length.
    #[error("got {scores} scores but {labels} labels")]
    LengthMismatch {
        /// Entries in the score vector.
        scores: usize,
        /// Entries in the label vector.
        labels: usize,
    },
    /// Both metrics need at least one sample from each class.
    #[error("labels contain only one class")]
    SingleClass,
    /// A score is NaN or infinite.
    #[error("score at index {0} is not finite")]
    NonFiniteScore(usize),
}

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore(i));
    }
    let n_pos = labels.iter().filter(|&&y| y != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    Ok((n_pos, n_neg))
}

/// Area under the ROC curve via the Mann-Whitney U statistic.
///
/// Scores are ranked ascending with tied values sharing their midrank, so
/// each tie contributes exactly half a concordant pair. Returns a value in
/// `[0, 1]`; 0.5 means the scores carry no class information.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (n_pos, n_neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));

    let mut positive_rank_sum = 0.0f64;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks are 1-based; every member of the tie block takes the mean of
        // the ranks the block covers.
        let midrank = (start + 1 + end) as f64 / 2.0;
        let tied_positives = order[start..end]
            .iter()
            .filter(|&&i| labels[i] != 0)
            .count();
        positive_rank_sum += midrank * tied_positives as f64;
        start = end;
    }

    let u = positive_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Area under the precision-recall curve as average precision.
///
/// Samples are visited in descending score order with equal scores processed
/// as one block, so the result does not depend on how ties happen to be
/// ordered. Each block contributes its positives weighted by the precision
/// after the whole block is admitted.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (n_pos, _) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut weighted_hits = 0.0f64;
    let mut true_positives = 0usize;
    let mut admitted = 0usize;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let block_positives = order[start..end]
            .iter()
            .filter(|&&i| labels[i] != 0)
            .count();
        true_positives += block_positives;
        admitted += end - start;
        let precision = true_positives as f64 / admitted as f64;
        weighted_hits += block_positives as f64 * precision;
        start = end;
    }

    Ok(weighted_hits / n_pos as f64)
}

//! Selection overlap and stability across resampled rankings.

use thiserror::Error;

use crate::rankers::FeatureRanking;

/// A selection is compared against the chance overlap of random draws of
/// the same size, so it must be a strict, non-empty subset of the universe.
#[derive(Debug, Error, PartialEq)]
pub enum StabilityError {
    #[error("threshold {threshold} outside 1..{universe}")]
    BadThreshold { threshold: usize, universe: usize },
    #[error("feature index {index} outside universe of size {universe}")]
    IndexOutOfRange { index: usize, universe: usize },
    #[error("feature index {0} appears twice in one selection")]
    DuplicateIndex(usize),
    #[error("selections have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("selections come from different universes ({0} vs {1})")]
    UniverseMismatch(usize, usize),
    #[error("stability needs at least 2 selections, got {0}")]
    TooFewSets(usize),
}

/// KI values above this mark a selector as stable under resampling.
pub const HIGH_STABILITY_THRESHOLD: f64 = 0.5;

/// A fixed-size subset of feature indices drawn from a universe of
/// `universe` features. Indices are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    indices: Vec<usize>,
    universe: usize,
}

impl SelectionSet {
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self, StabilityError> {
        let threshold = indices.len();
        if threshold == 0 || threshold >= universe {
            return Err(StabilityError::BadThreshold { threshold, universe });
        }
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(StabilityError::DuplicateIndex(pair[0]));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(StabilityError::IndexOutOfRange {
                    index: last,
                    universe,
                });
            }
        }
        Ok(Self { indices, universe })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Size of the intersection, by merging the two sorted index lists.
    pub fn intersection_size(&self, other: &Self) -> usize {
        let (mut i, mut j, mut shared) = (0, 0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        shared
    }
}

/// The top `threshold` features of a ranking as a selection set.
pub fn select_top(
    ranking: &FeatureRanking,
    threshold: usize,
) -> Result<SelectionSet, StabilityError> {
    let universe = ranking.n_features();
    if threshold == 0 || threshold >= universe {
        return Err(StabilityError::BadThreshold {
            threshold,
            universe,
        });
    }
    SelectionSet::new(ranking.order()[..threshold].to_vec(), universe)
}

/// Kuncheva's consistency index for two selections of equal size `k` from
/// the same universe of `n` features,
///
/// ```text
/// I_C(A, B) = (r * n - k^2) / (k * (n - k))    with r = |A ∩ B|
/// ```
///
/// It is 1 for identical sets and 0 when the overlap `r` equals the
/// expected overlap `k^2 / n` of two random draws.
pub fn consistency_index(a: &SelectionSet, b: &SelectionSet) -> Result<f64, StabilityError> {
    if a.universe != b.universe {
        return Err(StabilityError::UniverseMismatch(a.universe, b.universe));
    }
    if a.len() != b.len() {
        return Err(StabilityError::SizeMismatch(a.len(), b.len()));
    }
    let n = a.universe as i64;
    let k = a.len() as i64;
    let r = a.intersection_size(b) as i64;
    Ok((r * n - k * k) as f64 / (k * (n - k)) as f64)
}

/// Kuncheva stability: the mean consistency index over all pairs of
/// selections, taken in ascending pair order.
pub fn kuncheva_index(sets: &[SelectionSet]) -> Result<f64, StabilityError> {
    if sets.len() < 2 {
        return Err(StabilityError::TooFewSets(sets.len()));
    }
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            sum += consistency_index(&sets[i], &sets[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

pub fn is_high_stability(ki: f64) -> bool {
    ki > HIGH_STABILITY_THRESHOLD
}

//! Feature ranking algorithms.
//!
//! Five filter-style rankers share one output type: a score per feature plus
//! the induced ordering (descending score, ties broken by ascending feature
//! index). All five are deterministic functions of their input matrix; none
//! draws random numbers.

mod geode;
mod info;
mod relieff;
mod wx;

pub use geode::geode;
pub use info::{discretize_equal_frequency, entropy, gain_ratio, symmetrical_uncertainty};
pub use relieff::relieff;
pub use wx::wx;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::ExpressionMatrix;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("score for feature {feature} is not finite")]
    NonFiniteScore { feature: usize },
    #[error("empty score vector")]
    EmptyScores,
    #[error("{algorithm} needs at least {needed} samples in class {class}, found {found}")]
    ClassTooSmall {
        algorithm: &'static str,
        class: u8,
        needed: usize,
        found: usize,
    },
    #[error("k_neighbors must be at least 1")]
    ZeroNeighbors,
    #[error("bins must be at least 2")]
    TooFewBins,
    #[error("gamma = {0} outside [0, 1]")]
    BadGamma(f64),
    #[error("var_fraction = {0} outside (0, 1]")]
    BadVarFraction(f64),
    #[error("shrunken covariance is singular; use gamma > 0")]
    SingularCovariance,
    #[error("no usable variance in the data; the characteristic direction is undefined")]
    DegenerateDirection,
    #[error("epochs must be at least 1")]
    ZeroEpochs,
    #[error("learning_rate = {0} must be positive and finite")]
    BadLearningRate(f64),
}

/// Scores per feature plus the induced ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    scores: Vec<f64>,
    order: Vec<usize>,
}

impl FeatureRanking {
    /// Builds a ranking from raw scores. Higher scores rank earlier; equal
    /// scores are ordered by ascending feature index.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self, RankError> {
        if scores.is_empty() {
            return Err(RankError::EmptyScores);
        }
        if let Some(feature) = scores.iter().position(|s| !s.is_finite()) {
            return Err(RankError::NonFiniteScore { feature });
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_unstable_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        Ok(Self { scores, order })
    }

    pub fn n_features(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Feature indices from best to worst.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank position of every feature: `positions()[f] == 1` means
    /// feature `f` ranked first.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0usize; self.order.len()];
        for (p, &f) in self.order.iter().enumerate() {
            pos[f] = p + 1;
        }
        pos
    }

    /// The best `th` feature indices, in rank order.
    pub fn top(&self, th: usize) -> &[usize] {
        &self.order[..th.min(self.order.len())]
    }
}

/// The five ranking algorithms, by their conventional short names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gr,
    Su,
    ReliefF,
    GeoDe,
    Wx,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Gr,
        Algorithm::Su,
        Algorithm::ReliefF,
        Algorithm::GeoDe,
        Algorithm::Wx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gr => "gr",
            Algorithm::Su => "su",
            Algorithm::ReliefF => "relieff",
            Algorithm::GeoDe => "geode",
            Algorithm::Wx => "wx",
        }
    }

    /// Mixed-case spelling used in strategy display labels.
    pub fn acronym(self) -> &'static str {
        match self {
            Algorithm::Gr => "GR",
            Algorithm::Su => "SU",
            Algorithm::ReliefF => "ReliefF",
            Algorithm::GeoDe => "GeoDE",
            Algorithm::Wx => "Wx",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "gr" => Some(Algorithm::Gr),
            "su" => Some(Algorithm::Su),
            "relieff" => Some(Algorithm::ReliefF),
            "geode" => Some(Algorithm::GeoDe),
            "wx" => Some(Algorithm::Wx),
            _ => None,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Default bin count for the entropy-based rankers.
pub const DEFAULT_BINS: usize = 10;
/// Default neighbor count for ReliefF.
pub const DEFAULT_NEIGHBORS: usize = 10;
/// Default shrinkage weight for GeoDE.
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Default cumulative explained-variance cutoff for GeoDE's PCA step.
pub const DEFAULT_VAR_FRACTION: f64 = 0.95;
/// Default training epochs for Wx.
pub const DEFAULT_EPOCHS: usize = 100;
/// Default learning rate for Wx.
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

/// Runs one algorithm with its default parameters.
pub fn rank(algorithm: Algorithm, m: &ExpressionMatrix) -> Result<FeatureRanking, RankError> {
    match algorithm {
        Algorithm::Gr => gain_ratio(m, DEFAULT_BINS),
        Algorithm::Su => symmetrical_uncertainty(m, DEFAULT_BINS),
        Algorithm::ReliefF => relieff(m, DEFAULT_NEIGHBORS),
        Algorithm::GeoDe => geode(m, DEFAULT_GAMMA, DEFAULT_VAR_FRACTION),
        Algorithm::Wx => wx(m, DEFAULT_EPOCHS, DEFAULT_LEARNING_RATE),
    }
}

//! Rank combination: Borda counts, stability-weighted scoring, and the
//! two-stage reduction used by the hybrid strategies.

use thiserror::Error;

use crate::rankers::FeatureRanking;
use crate::stability::{kuncheva_index, select_top, StabilityError};

#[derive(Debug, Error)]
pub enum AggregationError {
    #[error("nothing to aggregate")]
    Empty,
    #[error("rankings cover different feature counts ({0} vs {1})")]
    FeatureCountMismatch(usize, usize),
    #[error("bootstrap row {row} holds {found} rankings, expected {expected}")]
    RaggedGrid {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("grid has {0} algorithm names for {1} columns")]
    NameCountMismatch(usize, usize),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// How the first aggregation stage reduces each bootstrap's `m` rankings
/// to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamMethod {
    Borda,
    /// Weight each algorithm by its Kuncheva stability across bootstraps at
    /// the given selection threshold.
    StabilityWeighted { threshold: usize },
}

/// How the second stage reduces the `n` per-bootstrap rankings to one.
/// Only Borda is in use; the enum keeps the slot open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamMethod {
    Borda,
}

/// An `n_bootstraps x m_algorithms` grid of complete rankings over one
/// feature universe, stored bootstrap-major.
#[derive(Debug, Clone)]
pub struct RankingGrid {
    rows: Vec<Vec<FeatureRanking>>,
    algorithm_names: Vec<String>,
    n_features: usize,
}

impl RankingGrid {
    pub fn new(
        rows: Vec<Vec<FeatureRanking>>,
        algorithm_names: Vec<String>,
    ) -> Result<Self, AggregationError> {
        let m = algorithm_names.len();
        if rows.is_empty() || m == 0 {
            return Err(AggregationError::Empty);
        }
        let n_features = rows[0]
            .first()
            .ok_or(AggregationError::Empty)?
            .n_features();
        for (row, rankings) in rows.iter().enumerate() {
            if rankings.len() != m {
                return Err(AggregationError::RaggedGrid {
                    row,
                    found: rankings.len(),
                    expected: m,
                });
            }
            for r in rankings {
                if r.n_features() != n_features {
                    return Err(AggregationError::FeatureCountMismatch(
                        n_features,
                        r.n_features(),
                    ));
                }
            }
        }
        Ok(Self {
            rows,
            algorithm_names,
            n_features,
        })
    }

    /// Bootstrap count `n`.
    pub fn n_bootstraps(&self) -> usize {
        self.rows.len()
    }

    /// Algorithm count `m`.
    pub fn m_algorithms(&self) -> usize {
        self.algorithm_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn algorithm_names(&self) -> &[String] {
        &self.algorithm_names
    }

    pub fn rows(&self) -> &[Vec<FeatureRanking>] {
        &self.rows
    }

    pub fn column(&self, algorithm: usize) -> Vec<&FeatureRanking> {
        self.rows.iter().map(|row| &row[algorithm]).collect()
    }
}

/// Borda points of one ranking: the feature at 1-based position `p` earns
/// `n_features - p`, so the leader gets `n_features - 1` and the last gets 0.
fn borda_points(ranking: &FeatureRanking) -> impl Iterator<Item = (usize, u64)> + '_ {
    let n = ranking.n_features() as u64;
    ranking
        .order()
        .iter()
        .enumerate()
        .map(move |(rank0, &feature)| (feature, n - (rank0 as u64 + 1)))
}

/// Sums Borda points over rankings: `AS_i = sum_j (N_f - p_ij)`. The output
/// is ordered by descending score with ties broken by ascending feature
/// index.
pub fn borda_aggregate(rankings: &[FeatureRanking]) -> Result<FeatureRanking, AggregationError> {
    let first = rankings.first().ok_or(AggregationError::Empty)?;
    let n_features = first.n_features();
    let mut points = vec![0u64; n_features];
    for ranking in rankings {
        if ranking.n_features() != n_features {
            return Err(AggregationError::FeatureCountMismatch(
                n_features,
                ranking.n_features(),
            ));
        }
        for (feature, p) in borda_points(ranking) {
            points[feature] += p;
        }
    }
    let scores: Vec<f64> = points.into_iter().map(|p| p as f64).collect();
    Ok(FeatureRanking::from_scores(scores).expect("borda scores are finite"))
}

/// Per-algorithm stability weights: the Kuncheva index of each algorithm's
/// `n` top-`threshold` selections, shifted to `[0, 2]` and raised to the
/// fifth power, so a perfectly stable algorithm weighs 32 and a
/// chance-level one weighs 1.
pub fn kuncheva_weights(
    grid: &RankingGrid,
    threshold: usize,
) -> Result<Vec<f64>, AggregationError> {
    let mut weights = Vec::with_capacity(grid.m_algorithms());
    for algorithm in 0..grid.m_algorithms() {
        let sets = grid
            .column(algorithm)
            .into_iter()
            .map(|r| select_top(r, threshold))
            .collect::<Result<Vec<_>, _>>()?;
        let ki = kuncheva_index(&sets)?;
        weights.push((ki + 1.0).powi(5));
    }
    Ok(weights)
}

/// First-stage aggregation with stability weights: for every bootstrap `b`,
/// `AS_i = sum_j (N_f - p_ij) * weight_j`, giving one consensus ranking per
/// bootstrap. Algorithms that rank unstably across bootstraps contribute
/// proportionally less to every row.
pub fn stability_weighted_fam(
    grid: &RankingGrid,
    threshold: usize,
) -> Result<Vec<FeatureRanking>, AggregationError> {
    let weights = kuncheva_weights(grid, threshold)?;
    let mut fam = Vec::with_capacity(grid.n_bootstraps());
    for row in grid.rows() {
        let mut scores = vec![0.0f64; grid.n_features()];
        for (ranking, &weight) in row.iter().zip(&weights) {
            for (feature, p) in borda_points(ranking) {
                scores[feature] += p as f64 * weight;
            }
        }
        fam.push(FeatureRanking::from_scores(scores).expect("weighted scores are finite"));
    }
    Ok(fam)
}

/// Runs the two-stage reduction: FAM turns the `n x m` grid into `n`
/// per-bootstrap rankings, then SAM turns those into the final consensus.
pub fn two_stage_aggregate(
    grid: &RankingGrid,
    fam: FamMethod,
    sam: SamMethod,
) -> Result<FeatureRanking, AggregationError> {
    let per_bootstrap = match fam {
        FamMethod::Borda => grid
            .rows()
            .iter()
            .map(|row| borda_aggregate(row))
            .collect::<Result<Vec<_>, _>>()?,
        FamMethod::StabilityWeighted { threshold } => stability_weighted_fam(grid, threshold)?,
    };
    match sam {
        SamMethod::Borda => borda_aggregate(&per_bootstrap),
    }
}

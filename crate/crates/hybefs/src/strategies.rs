//! Strategy specifications and the runner that turns a training matrix
//! into consensus rankings.
//!
//! Four strategy families cover the design space: `single` runs one
//! algorithm directly, `homogeneous` runs one algorithm over bootstrap
//! bags, `heterogeneous` runs several algorithms on the full training set,
//! and `hybrid` crosses both axes into an n x m ranking grid reduced by
//! two-stage aggregation. A roster of strategies sharing one training
//! matrix also shares its bootstrap bags and every (bag, algorithm)
//! ranking, so running all fifteen builtin strategies costs little more
//! than running the most expensive one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{
    borda_aggregate, two_stage_aggregate, AggregationError, FamMethod, RankingGrid, SamMethod,
};
use crate::data::{DataError, ExpressionMatrix};
use crate::rankers::{rank, Algorithm, FeatureRanking, RankError};
use crate::resampling::{bootstrap, derive_stream, seed_tags, ResampleError};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("strategy label {0:?} must be non-empty and use only letters, digits, '-' and '_'")]
    BadLabel(String),
    #[error("strategy {label:?} lists no algorithms")]
    NoAlgorithms { label: String },
    #[error("strategy {label:?} lists {algorithm} twice")]
    DuplicateAlgorithm { label: String, algorithm: Algorithm },
    #[error("{kind} strategy {label:?} needs exactly one algorithm, got {found}")]
    WantsOneAlgorithm {
        label: String,
        kind: StrategyKind,
        found: usize,
    },
    #[error("{kind} strategy {label:?} needs at least two algorithms, got {found}")]
    WantsSeveralAlgorithms {
        label: String,
        kind: StrategyKind,
        found: usize,
    },
    #[error("{kind} strategy {label:?} takes no bootstraps, got n_bootstraps = {found}")]
    WantsNoBootstraps {
        label: String,
        kind: StrategyKind,
        found: usize,
    },
    #[error("{kind} strategy {label:?} needs n_bootstraps >= 2, got {found}")]
    WantsBootstraps {
        label: String,
        kind: StrategyKind,
        found: usize,
    },
    #[error("strategy {label:?}: stability-weighted aggregation is only defined for hybrid strategies")]
    StabilityWeightedOnlyForHybrid { label: String },
    #[error("threshold {threshold} outside 1..{n_features}")]
    BadThreshold { threshold: usize, n_features: usize },
    #[error("{algorithm} failed on {bag}: {source}")]
    Rank {
        algorithm: Algorithm,
        bag: BagKey,
        source: RankError,
    },
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// The four strategy families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Single,
    Homogeneous,
    Heterogeneous,
    Hybrid,
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Single => "single",
            StrategyKind::Homogeneous => "homogeneous",
            StrategyKind::Heterogeneous => "heterogeneous",
            StrategyKind::Hybrid => "hybrid",
        })
    }
}

/// First-stage aggregation choice for hybrid strategies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamKind {
    #[default]
    Borda,
    StabilityWeighted,
}

/// Which training rows a ranking grid cell was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BagKey {
    /// The full (balanced) training set.
    Full,
    /// The bootstrap bag with this index.
    Bag(usize),
}

impl fmt::Display for BagKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BagKey::Full => f.write_str("the full training set"),
            BagKey::Bag(b) => write!(f, "bootstrap bag {b}"),
        }
    }
}

/// A declarative description of one feature-selection strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub label: String,
    pub kind: StrategyKind,
    pub algorithms: Vec<Algorithm>,
    /// Bag count for homogeneous/hybrid strategies; 0 elsewhere.
    #[serde(default)]
    pub n_bootstraps: usize,
    #[serde(default)]
    pub fam: FamKind,
}

impl StrategySpec {
    pub fn validate(&self) -> Result<(), StrategyError> {
        let label = self.label.clone();
        if self.label.is_empty()
            || !self
                .label
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
        {
            return Err(StrategyError::BadLabel(label));
        }
        if self.algorithms.is_empty() {
            return Err(StrategyError::NoAlgorithms { label });
        }
        let mut seen = BTreeSet::new();
        for &a in &self.algorithms {
            if !seen.insert(a) {
                return Err(StrategyError::DuplicateAlgorithm {
                    label,
                    algorithm: a,
                });
            }
        }
        if self.fam == FamKind::StabilityWeighted && self.kind != StrategyKind::Hybrid {
            return Err(StrategyError::StabilityWeightedOnlyForHybrid { label });
        }
        let kind = self.kind;
        let algorithms = self.algorithms.len();
        match kind {
            StrategyKind::Single | StrategyKind::Homogeneous if algorithms != 1 => {
                return Err(StrategyError::WantsOneAlgorithm {
                    label,
                    kind,
                    found: algorithms,
                });
            }
            StrategyKind::Heterogeneous | StrategyKind::Hybrid if algorithms < 2 => {
                return Err(StrategyError::WantsSeveralAlgorithms {
                    label,
                    kind,
                    found: algorithms,
                });
            }
            _ => {}
        }
        match kind {
            StrategyKind::Single | StrategyKind::Heterogeneous if self.n_bootstraps != 0 => {
                Err(StrategyError::WantsNoBootstraps {
                    label,
                    kind,
                    found: self.n_bootstraps,
                })
            }
            StrategyKind::Homogeneous | StrategyKind::Hybrid if self.n_bootstraps < 2 => {
                Err(StrategyError::WantsBootstraps {
                    label,
                    kind,
                    found: self.n_bootstraps,
                })
            }
            _ => Ok(()),
        }
    }

    /// True when the strategy produces one ranking per threshold rather
    /// than a single ranking.
    pub fn is_threshold_parametric(&self) -> bool {
        self.fam == FamKind::StabilityWeighted
    }
}

/// What a strategy produces: one consensus ranking, or one per threshold
/// when the first aggregation stage is threshold-parametric.
#[derive(Debug, Clone)]
pub enum StrategyOutput {
    Single(FeatureRanking),
    PerThreshold(Vec<(usize, FeatureRanking)>),
}

impl StrategyOutput {
    /// The ranking that governs selection at `threshold`.
    pub fn ranking_at(&self, threshold: usize) -> Option<&FeatureRanking> {
        match self {
            StrategyOutput::Single(r) => Some(r),
            StrategyOutput::PerThreshold(list) => list
                .iter()
                .find(|(t, _)| *t == threshold)
                .map(|(_, r)| r),
        }
    }
}

/// Runs one strategy; see [`run_roster`] for the shared-work variant.
pub fn run_strategy(
    train: &ExpressionMatrix,
    spec: &StrategySpec,
    thresholds: &[usize],
    seed: u64,
) -> Result<StrategyOutput, StrategyError> {
    let mut outputs = run_roster(train, std::slice::from_ref(spec), thresholds, seed)?;
    Ok(outputs.pop().expect("one output per spec"))
}

/// Runs every strategy on one training matrix. Bootstrap bag `b` is drawn
/// with `derive_stream(seed, [BOOTSTRAP, b])`, so all strategies see the
/// same bags and every (bag, algorithm) ranking is computed exactly once.
/// Cell rankings run in parallel; results are assembled in a fixed order,
/// so the output is identical for any worker count.
pub fn run_roster(
    train: &ExpressionMatrix,
    specs: &[StrategySpec],
    thresholds: &[usize],
    seed: u64,
) -> Result<Vec<StrategyOutput>, StrategyError> {
    for spec in specs {
        spec.validate()?;
    }
    run_roster_unvalidated(train, specs, thresholds, seed).map(|(outputs, _)| outputs)
}

/// Like [`run_roster`], additionally returning each bootstrap bag as row
/// indices into `train`, for callers auditing which samples fed the
/// rankers.
pub fn run_roster_traced(
    train: &ExpressionMatrix,
    specs: &[StrategySpec],
    thresholds: &[usize],
    seed: u64,
) -> Result<(Vec<StrategyOutput>, Vec<(usize, Vec<usize>)>), StrategyError> {
    for spec in specs {
        spec.validate()?;
    }
    run_roster_unvalidated(train, specs, thresholds, seed)
}

fn run_roster_unvalidated(
    train: &ExpressionMatrix,
    specs: &[StrategySpec],
    thresholds: &[usize],
    seed: u64,
) -> Result<(Vec<StrategyOutput>, Vec<(usize, Vec<usize>)>), StrategyError> {
    for &threshold in thresholds {
        if threshold == 0 || threshold >= train.n_features() {
            return Err(StrategyError::BadThreshold {
                threshold,
                n_features: train.n_features(),
            });
        }
    }

    let mut cells: BTreeSet<(BagKey, Algorithm)> = BTreeSet::new();
    let mut bag_ids: BTreeSet<usize> = BTreeSet::new();
    for spec in specs {
        match spec.kind {
            StrategyKind::Single | StrategyKind::Heterogeneous => {
                for &a in &spec.algorithms {
                    cells.insert((BagKey::Full, a));
                }
            }
            StrategyKind::Homogeneous | StrategyKind::Hybrid => {
                for b in 0..spec.n_bootstraps {
                    bag_ids.insert(b);
                    for &a in &spec.algorithms {
                        cells.insert((BagKey::Bag(b), a));
                    }
                }
            }
        }
    }

    let all_rows: Vec<usize> = (0..train.n_samples()).collect();
    let mut bags: BTreeMap<usize, (Vec<usize>, ExpressionMatrix)> = BTreeMap::new();
    for &b in &bag_ids {
        let bag_seed = derive_stream(seed, &[seed_tags::BOOTSTRAP, b as u64]);
        let rows = bootstrap(&all_rows, train.labels(), bag_seed)?;
        let matrix = train.restrict_rows(&rows)?;
        bags.insert(b, (rows, matrix));
    }

    let cell_list: Vec<(BagKey, Algorithm)> = cells.into_iter().collect();
    let rankings = cell_list
        .par_iter()
        .map(|&(bag, algorithm)| {
            let m = match bag {
                BagKey::Full => train,
                BagKey::Bag(b) => &bags[&b].1,
            };
            rank(algorithm, m).map_err(|source| StrategyError::Rank {
                algorithm,
                bag,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cache: BTreeMap<(BagKey, Algorithm), FeatureRanking> =
        cell_list.into_iter().zip(rankings).collect();

    let mut outputs = Vec::with_capacity(specs.len());
    for spec in specs {
        outputs.push(assemble(spec, &cache, thresholds)?);
    }
    let bag_trace = bags.into_iter().map(|(b, (rows, _))| (b, rows)).collect();
    Ok((outputs, bag_trace))
}

fn assemble(
    spec: &StrategySpec,
    cache: &BTreeMap<(BagKey, Algorithm), FeatureRanking>,
    thresholds: &[usize],
) -> Result<StrategyOutput, StrategyError> {
    let full = |a: Algorithm| cache[&(BagKey::Full, a)].clone();
    let bagged = |b: usize, a: Algorithm| cache[&(BagKey::Bag(b), a)].clone();
    Ok(match spec.kind {
        StrategyKind::Single => StrategyOutput::Single(full(spec.algorithms[0])),
        StrategyKind::Heterogeneous => {
            let rankings: Vec<FeatureRanking> =
                spec.algorithms.iter().map(|&a| full(a)).collect();
            StrategyOutput::Single(borda_aggregate(&rankings)?)
        }
        StrategyKind::Homogeneous => {
            let rankings: Vec<FeatureRanking> = (0..spec.n_bootstraps)
                .map(|b| bagged(b, spec.algorithms[0]))
                .collect();
            StrategyOutput::Single(borda_aggregate(&rankings)?)
        }
        StrategyKind::Hybrid => {
            let rows: Vec<Vec<FeatureRanking>> = (0..spec.n_bootstraps)
                .map(|b| spec.algorithms.iter().map(|&a| bagged(b, a)).collect())
                .collect();
            let names = spec
                .algorithms
                .iter()
                .map(|a| a.name().to_string())
                .collect();
            let grid = RankingGrid::new(rows, names)?;
            match spec.fam {
                FamKind::Borda => StrategyOutput::Single(two_stage_aggregate(
                    &grid,
                    FamMethod::Borda,
                    SamMethod::Borda,
                )?),
                FamKind::StabilityWeighted => {
                    let mut per = Vec::with_capacity(thresholds.len());
                    for &threshold in thresholds {
                        let ranking = two_stage_aggregate(
                            &grid,
                            FamMethod::StabilityWeighted { threshold },
                            SamMethod::Borda,
                        )?;
                        per.push((threshold, ranking));
                    }
                    StrategyOutput::PerThreshold(per)
                }
            }
        }
    })
}

/// Default bag count for the builtin bootstrap strategies.
pub const DEFAULT_BOOTSTRAPS: usize = 50;

fn spec(
    label: &str,
    kind: StrategyKind,
    algorithms: Vec<Algorithm>,
    n_bootstraps: usize,
    fam: FamKind,
) -> StrategySpec {
    StrategySpec {
        label: label.to_string(),
        kind,
        algorithms,
        n_bootstraps,
        fam,
    }
}

/// The fifteen named strategies: one single and one homogeneous strategy
/// per algorithm, two heterogeneous ensembles, and three hybrids.
pub fn builtin_roster() -> Vec<StrategySpec> {
    let mut roster = Vec::with_capacity(15);
    for a in Algorithm::ALL {
        roster.push(spec(
            &format!("Sin-{}", a.acronym()),
            StrategyKind::Single,
            vec![a],
            0,
            FamKind::Borda,
        ));
    }
    for a in Algorithm::ALL {
        roster.push(spec(
            &format!("Hom-{}", a.acronym()),
            StrategyKind::Homogeneous,
            vec![a],
            DEFAULT_BOOTSTRAPS,
            FamKind::Borda,
        ));
    }
    let trio = vec![Algorithm::Wx, Algorithm::Gr, Algorithm::Su];
    roster.push(spec(
        "Het-EFS",
        StrategyKind::Heterogeneous,
        Algorithm::ALL.to_vec(),
        0,
        FamKind::Borda,
    ));
    roster.push(spec(
        "Het-Wx-GR-SU",
        StrategyKind::Heterogeneous,
        trio.clone(),
        0,
        FamKind::Borda,
    ));
    roster.push(spec(
        "Hyb-EFS-Borda",
        StrategyKind::Hybrid,
        Algorithm::ALL.to_vec(),
        DEFAULT_BOOTSTRAPS,
        FamKind::Borda,
    ));
    roster.push(spec(
        "Hyb-EFS-Stb",
        StrategyKind::Hybrid,
        Algorithm::ALL.to_vec(),
        DEFAULT_BOOTSTRAPS,
        FamKind::StabilityWeighted,
    ));
    roster.push(spec(
        "Hyb-Wx-GR-SU",
        StrategyKind::Hybrid,
        trio,
        DEFAULT_BOOTSTRAPS,
        FamKind::StabilityWeighted,
    ));
    roster
}

/// Finds a builtin strategy by label, ignoring ASCII case.
pub fn roster_spec(label: &str) -> Option<StrategySpec> {
    builtin_roster()
        .into_iter()
        .find(|s| s.label.eq_ignore_ascii_case(label))
}

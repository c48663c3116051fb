//! Cross-validated evaluation of selection strategies.
//!
//! The protocol is stratified k-fold cross-validation with class balancing:
//! each fold's training portion is downsampled to equal class counts, every
//! strategy ranks features on that balanced set only, and for each sweep
//! threshold a gradient-boosted classifier is trained on the selected
//! features and scored on the untouched test fold. After all folds, each
//! (strategy, threshold) pair gets a Kuncheva stability score across its k
//! fold selections. The test fold never reaches a ranker or the classifier's
//! training side.
//!
//! Seeds derive from the master seed per role: fold assignment uses
//! `[FOLDS]`, per-fold downsampling `[DOWNSAMPLE, fold]`, and per-fold
//! strategy execution `[FOLD, fold]`, so any subset of folds can be
//! reproduced without running the rest.

pub mod gbm;
pub mod metrics;

pub use gbm::{BoostedModel, GbmError, GbmParams, gbm_train, predict_proba};
pub use metrics::{MetricError, pr_auc, roc_auc};

use crate::data::{DataError, ExpressionMatrix};
use crate::resampling::{
    ResampleError, derive_stream, downsample_balance, seed_tags, stratified_folds,
};
use crate::stability::{SelectionSet, StabilityError, kuncheva_index, select_top};
use crate::strategies::{StrategyError, StrategyOutput, StrategySpec, run_roster_traced};
use ndarray::Axis;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Problems raised while running the evaluation protocol.
#[derive(Debug, Error)]
pub enum EvalError {
    /// The strategy list is empty.
    #[error("no strategies were given")]
    NoStrategies,
    /// Two strategies share a label, which would make records ambiguous.
    #[error("duplicate strategy label {0:?}")]
    DuplicateLabel(String),
    /// The same threshold appears twice in the sweep.
    #[error("threshold {0} appears more than once")]
    DuplicateThreshold(usize),
    /// Reading or restricting the dataset failed.
    #[error(transparent)]
    Data(#[from] DataError),
    /// Fold assignment or downsampling failed.
    #[error(transparent)]
    Resample(#[from] ResampleError),
    /// A strategy was invalid before any fold ran.
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    /// Running the strategy roster inside a fold failed.
    #[error("fold {fold}: {source}")]
    FoldStrategy {
        /// Fold being processed.
        fold: usize,
        /// Underlying strategy failure.
        source: StrategyError,
    },
    /// Cutting a ranking down to a selection failed.
    #[error("fold {fold}, strategy {strategy}, threshold {threshold}: {source}")]
    Selection {
        /// Fold being processed.
        fold: usize,
        /// Strategy label.
        strategy: String,
        /// Sweep threshold.
        threshold: usize,
        /// Underlying selection failure.
        source: StabilityError,
    },
    /// Training the classifier on a selection failed.
    #[error("fold {fold}, strategy {strategy}, threshold {threshold}: {source}")]
    Classifier {
        /// Fold being processed.
        fold: usize,
        /// Strategy label.
        strategy: String,
        /// Sweep threshold.
        threshold: usize,
        /// Underlying classifier failure.
        source: GbmError,
    },
    /// Scoring test-fold predictions failed.
    #[error("fold {fold}, strategy {strategy}, threshold {threshold}: {source}")]
    Scoring {
        /// Fold being processed.
        fold: usize,
        /// Strategy label.
        strategy: String,
        /// Sweep threshold.
        threshold: usize,
        /// Underlying metric failure.
        source: MetricError,
    },
    /// Computing cross-fold stability failed.
    #[error("strategy {strategy}, threshold {threshold}: {source}")]
    Stability {
        /// Strategy label.
        strategy: String,
        /// Sweep threshold.
        threshold: usize,
        /// Underlying stability failure.
        source: StabilityError,
    },
}

/// The sweep used when a run does not name its own thresholds: every size
/// from 1 through 50, then 75, 100, 200, and 500.
pub fn default_thresholds() -> Vec<usize> {
    (1..=50).chain([75, 100, 200, 500]).collect()
}

/// Settings for one evaluation run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Number of stratified folds.
    pub k_folds: usize,
    /// Selection sizes to sweep; each must be positive and smaller than the
    /// dataset's feature count.
    pub thresholds: Vec<usize>,
    /// Master seed; every random draw in the run derives from it.
    pub seed: u64,
    /// Classifier hyperparameters.
    pub gbm: GbmParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_folds: 5,
            thresholds: default_thresholds(),
            seed: 42,
            gbm: GbmParams::default(),
        }
    }
}

/// Classifier performance for one (strategy, fold, threshold) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    /// Strategy label.
    pub strategy: String,
    /// Fold whose test split produced the scores.
    pub fold: usize,
    /// Number of top-ranked features given to the classifier.
    pub threshold: usize,
    /// Area under the ROC curve on the test fold.
    pub roc_auc: f64,
    /// Area under the precision-recall curve on the test fold.
    pub pr_auc: f64,
}

/// Cross-fold selection stability for one (strategy, threshold) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRecord {
    /// Strategy label.
    pub strategy: String,
    /// Number of top-ranked features in each fold's selection.
    pub threshold: usize,
    /// Kuncheva index over the k fold selections.
    pub kuncheva: f64,
}

/// Everything a finished run produces.
#[derive(Debug)]
pub struct ExperimentResult {
    /// Strategy labels in the order the run received them.
    pub strategy_labels: Vec<String>,
    /// One record per (strategy, fold, threshold), sorted in that order.
    pub metrics: Vec<MetricRecord>,
    /// One record per (strategy, threshold), sorted in that order.
    pub stability: Vec<StabilityRecord>,
    /// Raw strategy outputs indexed as `fold_outputs[fold][strategy]`.
    pub fold_outputs: Vec<Vec<StrategyOutput>>,
}

/// The feature indices one strategy selected at one threshold.
#[derive(Debug, Clone)]
pub struct SelectionTrace {
    /// Strategy label.
    pub strategy: String,
    /// Sweep threshold.
    pub threshold: usize,
    /// Selected feature indices, ascending.
    pub features: Vec<usize>,
}

/// Which samples each stage of one fold touched, as dataset row indices.
#[derive(Debug, Clone)]
pub struct FoldTrace {
    /// Rows held out for testing.
    pub test_rows: Vec<usize>,
    /// Rows available for training before balancing.
    pub train_rows: Vec<usize>,
    /// Rows kept after class-balanced downsampling.
    pub balanced_rows: Vec<usize>,
    /// Bootstrap bags drawn from the balanced rows, keyed by bag index.
    pub bags: Vec<(usize, Vec<usize>)>,
    /// Every selection made in this fold.
    pub selections: Vec<SelectionTrace>,
}

/// Per-fold audit trail of sample and feature flow through a run.
#[derive(Debug, Clone)]
pub struct ProtocolTrace {
    /// One entry per fold.
    pub folds: Vec<FoldTrace>,
}

/// Runs the full protocol and returns metric, stability, and ranking output.
pub fn run_experiment(
    data: &ExpressionMatrix,
    specs: &[StrategySpec],
    config: &ExperimentConfig,
) -> Result<ExperimentResult, EvalError> {
    run_experiment_traced(data, specs, config).map(|(result, _)| result)
}

/// Like [`run_experiment`], additionally recording which rows fed each
/// stage and which features each strategy selected, for callers verifying
/// that test folds stay out of training.
pub fn run_experiment_traced(
    data: &ExpressionMatrix,
    specs: &[StrategySpec],
    config: &ExperimentConfig,
) -> Result<(ExperimentResult, ProtocolTrace), EvalError> {
    if specs.is_empty() {
        return Err(EvalError::NoStrategies);
    }
    for spec in specs {
        spec.validate()?;
    }
    for (i, spec) in specs.iter().enumerate() {
        if specs[..i].iter().any(|other| other.label == spec.label) {
            return Err(EvalError::DuplicateLabel(spec.label.clone()));
        }
    }
    for (i, &threshold) in config.thresholds.iter().enumerate() {
        if config.thresholds[..i].contains(&threshold) {
            return Err(EvalError::DuplicateThreshold(threshold));
        }
    }

    let folds = stratified_folds(
        data.labels(),
        config.k_folds,
        derive_stream(config.seed, &[seed_tags::FOLDS]),
    )?;

    // Selections per strategy and threshold, one entry per fold, feeding the
    // stability pass once every fold has run.
    let mut selections: Vec<Vec<Vec<SelectionSet>>> =
        vec![vec![Vec::with_capacity(config.k_folds); config.thresholds.len()]; specs.len()];
    let mut keyed_metrics: Vec<(usize, MetricRecord)> = Vec::new();
    let mut fold_outputs: Vec<Vec<StrategyOutput>> = Vec::with_capacity(config.k_folds);
    let mut traces: Vec<FoldTrace> = Vec::with_capacity(config.k_folds);

    for fold in 0..config.k_folds {
        let test_rows = folds.test_indices(fold);
        let train_rows = folds.train_indices(fold);
        let balanced_rows = downsample_balance(
            &train_rows,
            data.labels(),
            derive_stream(config.seed, &[seed_tags::DOWNSAMPLE, fold as u64]),
        )?;
        let train = data.restrict_rows(&balanced_rows)?;
        let test = data.restrict_rows(&test_rows)?;

        let fold_seed = derive_stream(config.seed, &[seed_tags::FOLD, fold as u64]);
        let (outputs, local_bags) =
            run_roster_traced(&train, specs, &config.thresholds, fold_seed)
                .map_err(|source| EvalError::FoldStrategy { fold, source })?;
        let bags = local_bags
            .into_iter()
            .map(|(b, rows)| (b, rows.into_iter().map(|r| balanced_rows[r]).collect()))
            .collect();

        let mut fold_selections = Vec::with_capacity(specs.len() * config.thresholds.len());
        let mut tasks = Vec::with_capacity(specs.len() * config.thresholds.len());
        for (s, spec) in specs.iter().enumerate() {
            for (t, &threshold) in config.thresholds.iter().enumerate() {
                let ranking = outputs[s]
                    .ranking_at(threshold)
                    .expect("strategy output covers every configured threshold");
                let set = select_top(ranking, threshold).map_err(|source| {
                    EvalError::Selection {
                        fold,
                        strategy: spec.label.clone(),
                        threshold,
                        source,
                    }
                })?;
                fold_selections.push(SelectionTrace {
                    strategy: spec.label.clone(),
                    threshold,
                    features: set.indices().to_vec(),
                });
                tasks.push((s, t, threshold));
                selections[s][t].push(set);
            }
        }

        let scores: Vec<Result<(f64, f64), EvalError>> = tasks
            .par_iter()
            .map(|&(s, t, threshold)| {
                let cols = &selections[s][t][fold];
                let train_x = train.values().select(Axis(1), cols.indices());
                let test_x = test.values().select(Axis(1), cols.indices());
                let annotate_gbm = |source| EvalError::Classifier {
                    fold,
                    strategy: specs[s].label.clone(),
                    threshold,
                    source,
                };
                let model =
                    gbm_train(train_x.view(), train.labels(), &config.gbm).map_err(annotate_gbm)?;
                let probs = predict_proba(&model, test_x.view()).map_err(annotate_gbm)?;
                let annotate_metric = |source| EvalError::Scoring {
                    fold,
                    strategy: specs[s].label.clone(),
                    threshold,
                    source,
                };
                let roc = roc_auc(&probs, test.labels()).map_err(annotate_metric)?;
                let pr = pr_auc(&probs, test.labels()).map_err(annotate_metric)?;
                Ok((roc, pr))
            })
            .collect();
        for (&(s, _, threshold), score) in tasks.iter().zip(scores) {
            let (roc, pr) = score?;
            keyed_metrics.push((
                s,
                MetricRecord {
                    strategy: specs[s].label.clone(),
                    fold,
                    threshold,
                    roc_auc: roc,
                    pr_auc: pr,
                },
            ));
        }

        fold_outputs.push(outputs);
        traces.push(FoldTrace {
            test_rows,
            train_rows,
            balanced_rows,
            bags,
            selections: fold_selections,
        });
    }

    keyed_metrics.sort_by(|(sa, ra), (sb, rb)| {
        (sa, ra.fold, ra.threshold).cmp(&(sb, rb.fold, rb.threshold))
    });
    let metrics = keyed_metrics.into_iter().map(|(_, r)| r).collect();

    let mut keyed_stability: Vec<(usize, StabilityRecord)> = Vec::new();
    for (s, spec) in specs.iter().enumerate() {
        for (t, &threshold) in config.thresholds.iter().enumerate() {
            let kuncheva =
                kuncheva_index(&selections[s][t]).map_err(|source| EvalError::Stability {
                    strategy: spec.label.clone(),
                    threshold,
                    source,
                })?;
            keyed_stability.push((
                s,
                StabilityRecord {
                    strategy: spec.label.clone(),
                    threshold,
                    kuncheva,
                },
            ));
        }
    }
    keyed_stability.sort_by_key(|&(s, ref r)| (s, r.threshold));
    let stability = keyed_stability.into_iter().map(|(_, r)| r).collect();

    Ok((
        ExperimentResult {
            strategy_labels: specs.iter().map(|s| s.label.clone()).collect(),
            metrics,
            stability,
            fold_outputs,
        },
        ProtocolTrace { folds: traces },
    ))
}

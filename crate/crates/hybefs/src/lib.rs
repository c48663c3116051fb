//! Hybrid ensemble feature selection for high-dimensional binary-labeled
//! expression data.
//!
//! The library covers the full pipeline: loading or synthesizing an
//! [`data::ExpressionMatrix`], perturbing it with stratified folds and
//! bootstrap bags ([`resampling`]), scoring features with five filter
//! algorithms ([`rankers`]), fusing rankings with Borda or stability-weighted
//! aggregation ([`aggregation`]), measuring selection stability with the
//! Kuncheva index ([`stability`]), composing those pieces into named selection
//! strategies ([`strategies`]), and evaluating every strategy under a
//! cross-validated gradient-boosting protocol ([`evaluation`]).
//!
//! Everything downstream of a seed is deterministic: the same data, strategy
//! roster, and seed produce bit-identical rankings, metrics, and stability
//! scores regardless of how many worker threads run the pipeline.

pub mod aggregation;
pub mod cli;
pub mod data;
pub mod evaluation;
pub mod rankers;
pub mod resampling;
pub mod stability;
pub mod strategies;

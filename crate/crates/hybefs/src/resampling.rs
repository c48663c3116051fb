//! Deterministic data perturbation: seed derivation, stratified folds,
//! majority-class downsampling, and bootstrap bags.
//!
//! Every stochastic operation takes an explicit 64-bit seed and draws from a
//! ChaCha stream seeded with it, so results are reproducible across runs,
//! platforms, and thread counts. [`derive_stream`] turns one master seed plus
//! a tag path into independent per-purpose seeds, which keeps sibling
//! operations (fold 2's downsample vs fold 3's bootstrap 7) decorrelated
//! without any shared mutable RNG.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResampleError {
    #[error("k = {0}; need at least 2 folds")]
    TooFewFolds(usize),
    #[error("class {class} has {count} samples; stratified {k}-fold needs at least {k} per class")]
    ClassSmallerThanK { class: u8, count: usize, k: usize },
    #[error("empty index set")]
    EmptyInput,
    #[error("index set contains a single class")]
    SingleClassInput,
    #[error("bootstrap produced a single-class bag {retries} times in a row")]
    DegenerateBag { retries: usize },
    #[error("sample index {index} out of range for {len} labels")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Tag constants for [`derive_stream`] paths, one per purpose, so no two
/// stochastic operations in the pipeline ever share a stream.
pub mod seed_tags {
    /// Fold assignment for the whole experiment.
    pub const FOLDS: u64 = 1;
    /// Majority-class downsampling; combine with the fold index.
    pub const DOWNSAMPLE: u64 = 2;
    /// Per-fold strategy seed; combine with the fold index.
    pub const FOLD: u64 = 3;
    /// Bootstrap bag; combine with the bag index.
    pub const BOOTSTRAP: u64 = 4;
}

fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a tag path.
///
/// The mix is order-sensitive (`[1, 2]` and `[2, 1]` land on different
/// streams) and free of structural collisions: distinct tag paths of the same
/// or different lengths map to distinct 64-bit outputs for all practical
/// purposes. Used as `ChaCha8Rng::seed_from_u64(derive_stream(seed, tags))`.
pub fn derive_stream(master_seed: u64, tags: &[u64]) -> u64 {
    let mut h = mix64(master_seed ^ 0xA076_1D64_78BD_642F);
    for (i, &t) in tags.iter().enumerate() {
        let salted = t.wrapping_add((i as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
        h = mix64(h ^ mix64(salted));
    }
    h
}

/// Assignment of every sample to one of `k` folds.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_samples(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self, sample: usize) -> usize {
        self.fold_of[sample]
    }

    /// Samples held out by fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == f)
            .collect()
    }

    /// Samples available for training when fold `f` is held out, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != f)
            .collect()
    }
}

/// Splits samples into `k` stratified folds: within each class, fold sizes
/// differ by at most one, so every fold sees both classes.
///
/// Requires `k >= 2` and at least `k` samples of each class.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<FoldAssignment, ResampleError> {
    if k < 2 {
        return Err(ResampleError::TooFewFolds(k));
    }
    if labels.is_empty() {
        return Err(ResampleError::EmptyInput);
    }
    let mut fold_of = vec![0usize; labels.len()];
    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(ResampleError::ClassSmallerThanK {
                class,
                count: members.len(),
                k,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream(seed, &[class as u64]));
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    Ok(FoldAssignment { fold_of, k })
}

/// Balances a training index set by keeping the minority class intact and
/// drawing an equally sized subset of the majority class without replacement.
///
/// The kept subset depends only on the seed and the sample indices themselves
/// (each index gets a key from its own derived stream), so permuting the
/// input permutes the output without changing which samples survive. Input
/// order is preserved. An already balanced input comes back unchanged.
pub fn downsample_balance(
    indices: &[usize],
    labels: &[u8],
    seed: u64,
) -> Result<Vec<usize>, ResampleError> {
    if indices.is_empty() {
        return Err(ResampleError::EmptyInput);
    }
    for &i in indices {
        if i >= labels.len() {
            return Err(ResampleError::IndexOutOfRange {
                index: i,
                len: labels.len(),
            });
        }
    }
    let pos = indices.iter().filter(|&&i| labels[i] == 1).count();
    let neg = indices.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ResampleError::SingleClassInput);
    }
    if pos == neg {
        return Ok(indices.to_vec());
    }
    let (majority_label, keep) = if pos > neg { (1u8, neg) } else { (0u8, pos) };

    let mut majority: Vec<(u64, usize)> = indices
        .iter()
        .filter(|&&i| labels[i] == majority_label)
        .map(|&i| (derive_stream(seed, &[i as u64]), i))
        .collect();
    majority.sort_unstable();
    let kept: std::collections::HashSet<usize> =
        majority[..keep].iter().map(|&(_, i)| i).collect();

    Ok(indices
        .iter()
        .copied()
        .filter(|&i| labels[i] != majority_label || kept.contains(&i))
        .collect())
}

const BOOTSTRAP_RETRIES: usize = 100;

/// Draws a bootstrap bag: `indices.len()` samples from `indices`, uniformly
/// with replacement. Bags that collapse onto a single class are redrawn from
/// the same stream, up to 100 times, before giving up.
pub fn bootstrap(indices: &[usize], labels: &[u8], seed: u64) -> Result<Vec<usize>, ResampleError> {
    if indices.is_empty() {
        return Err(ResampleError::EmptyInput);
    }
    for &i in indices {
        if i >= labels.len() {
            return Err(ResampleError::IndexOutOfRange {
                index: i,
                len: labels.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BOOTSTRAP_RETRIES {
        let bag: Vec<usize> = (0..indices.len())
            .map(|_| indices[rng.gen_range(0..indices.len())])
            .collect();
        let pos = bag.iter().filter(|&&i| labels[i] == 1).count();
        if pos > 0 && pos < bag.len() {
            return Ok(bag);
        }
    }
    Err(ResampleError::DegenerateBag {
        retries: BOOTSTRAP_RETRIES,
    })
}

//! Acceptance gate: ten end-to-end checks covering the stability metrics,
//! rank aggregation, the five rankers, scoring, planted-feature recovery,
//! the stability ordering of the flagship strategies, protocol hygiene,
//! byte-level determinism of the binary, and the balancing contract.
//! Every check prints one `PASS criterion N` line once its assertions hold.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use hybefs::aggregation::{
    borda_aggregate, kuncheva_weights, stability_weighted_fam, two_stage_aggregate, FamMethod,
    RankingGrid, SamMethod,
};
use hybefs::data::{generate_synthetic, ExpressionMatrix, SyntheticSpec};
use hybefs::evaluation::{
    default_thresholds, pr_auc, roc_auc, run_experiment, run_experiment_traced, ExperimentConfig,
    GbmParams,
};
use hybefs::rankers::{
    discretize_equal_frequency, entropy, gain_ratio, geode, relieff, symmetrical_uncertainty, wx,
    FeatureRanking,
};
use hybefs::resampling::downsample_balance;
use hybefs::stability::{consistency_index, kuncheva_index, SelectionSet};
use hybefs::strategies::{builtin_roster, roster_spec, StrategySpec};
use ndarray::Array2;
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gene_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("g{i}")).collect()
}

fn matrix(values: Array2<f64>, labels: Vec<u8>) -> ExpressionMatrix {
    let names = gene_names(values.ncols());
    ExpressionMatrix::new(values, names, labels).expect("valid matrix")
}

/// A builtin strategy with its bag count overridden.
fn bagged(label: &str, n_bootstraps: usize) -> StrategySpec {
    let mut spec = roster_spec(label).expect("builtin label");
    spec.n_bootstraps = n_bootstraps;
    spec
}

/// A ranking whose order is exactly `order`, via strictly descending scores.
fn ranking_with_order(order: &[usize]) -> FeatureRanking {
    let n = order.len();
    let mut scores = vec![0.0; n];
    for (pos, &feature) in order.iter().enumerate() {
        scores[feature] = (n - pos) as f64;
    }
    FeatureRanking::from_scores(scores).expect("finite scores")
}

fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    sample(rng, n, n).into_vec()
}

/// Counting oracle for the consistency index: intersect by linear scan and
/// evaluate `(r n - k^2) / (k (n - k))` in plain f64 arithmetic.
fn oracle_consistency(a: &SelectionSet, b: &SelectionSet) -> f64 {
    let n = a.universe() as f64;
    let k = a.len() as f64;
    let shared = a
        .indices()
        .iter()
        .filter(|i| b.indices().contains(i))
        .count() as f64;
    (shared * n - k * k) / (k * (n - k))
}

#[test]
fn criterion_01_stability_indices_match_a_counting_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    for trial in 0..1000 {
        let n = rng.gen_range(4..=200usize);
        let k = rng.gen_range(2..=n / 2);
        let count = rng.gen_range(2..=10usize);
        let family: Vec<SelectionSet> = (0..count)
            .map(|_| SelectionSet::new(sample(&mut rng, n, k).into_vec(), n).expect("k < n"))
            .collect();

        let mut pair_values = Vec::new();
        for i in 0..count {
            for j in (i + 1)..count {
                let oracle = oracle_consistency(&family[i], &family[j]);
                let lib = consistency_index(&family[i], &family[j]).expect("matching shapes");
                assert!(
                    (lib - oracle).abs() <= 1e-12,
                    "trial {trial}: consistency {lib} differs from oracle {oracle}"
                );
                pair_values.push(oracle);
            }
        }
        let oracle_ki = pair_values.iter().sum::<f64>() / pair_values.len() as f64;
        let lib_ki = kuncheva_index(&family).expect("valid family");
        assert!(
            (lib_ki - oracle_ki).abs() <= 1e-12,
            "trial {trial}: kuncheva {lib_ki} differs from oracle mean {oracle_ki}"
        );
    }

    for _ in 0..50 {
        let n = rng.gen_range(4..=200usize);
        let k = rng.gen_range(2..=n / 2);
        let count = rng.gen_range(2..=10usize);
        let picks = sample(&mut rng, n, k).into_vec();
        let family: Vec<SelectionSet> = (0..count)
            .map(|_| SelectionSet::new(picks.clone(), n).expect("k < n"))
            .collect();
        assert_eq!(
            kuncheva_index(&family).expect("valid family"),
            1.0,
            "identical selections must score exactly 1"
        );
    }

    assert!(
        started.elapsed() < Duration::from_secs(5),
        "criterion 1 exceeded its 5 s budget: {:?}",
        started.elapsed()
    );
    println!("PASS criterion 1: consistency and Kuncheva indices match the counting oracle");
}

#[test]
fn criterion_02_borda_matches_an_explicit_point_table() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(22);

    // Rankings built from known permutations: every position is known by
    // construction, so the point table needs no sorting at all.
    for trial in 0..250 {
        let n = rng.gen_range(2..=30usize);
        let m = rng.gen_range(1..=10usize);
        let orders: Vec<Vec<usize>> = (0..m).map(|_| random_permutation(&mut rng, n)).collect();
        let rankings: Vec<FeatureRanking> = orders.iter().map(|o| ranking_with_order(o)).collect();

        let mut table = vec![0u64; n];
        for order in &orders {
            for (pos, &feature) in order.iter().enumerate() {
                table[feature] += (n - (pos + 1)) as u64;
            }
        }

        let aggregated = borda_aggregate(&rankings).expect("non-empty input");
        for f in 0..n {
            assert_eq!(
                aggregated.scores()[f],
                table[f] as f64,
                "trial {trial}: feature {f} sum differs from the point table"
            );
        }
    }

    // Rankings with heavy score ties: positions come from an independently
    // coded sort by (score desc, index asc).
    for trial in 0..250 {
        let n = rng.gen_range(2..=30usize);
        let m = rng.gen_range(1..=10usize);
        let score_grids: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(0..6) as f64).collect())
            .collect();
        let rankings: Vec<FeatureRanking> = score_grids
            .iter()
            .map(|s| FeatureRanking::from_scores(s.clone()).expect("finite scores"))
            .collect();

        let mut table = vec![0u64; n];
        for scores in &score_grids {
            let mut by_rank: Vec<usize> = (0..n).collect();
            by_rank.sort_by(|&a, &b| {
                scores[b]
                    .partial_cmp(&scores[a])
                    .expect("finite scores")
                    .then(a.cmp(&b))
            });
            for (pos, &feature) in by_rank.iter().enumerate() {
                table[feature] += (n - (pos + 1)) as u64;
            }
        }

        let aggregated = borda_aggregate(&rankings).expect("non-empty input");
        for f in 0..n {
            assert_eq!(
                aggregated.scores()[f],
                table[f] as f64,
                "trial {trial}: feature {f} sum differs from the point table under ties"
            );
        }
        let order = aggregated.order();
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!(
                table[a] > table[b] || (table[a] == table[b] && a < b),
                "trial {trial}: output order violates (points desc, index asc)"
            );
        }
    }

    // Aggregating a single ranking must reproduce it.
    for _ in 0..50 {
        let n = rng.gen_range(2..=30usize);
        let ranking = ranking_with_order(&random_permutation(&mut rng, n));
        let aggregated = borda_aggregate(std::slice::from_ref(&ranking)).expect("one ranking");
        assert_eq!(aggregated.order(), ranking.order());
    }

    assert!(
        started.elapsed() < Duration::from_secs(5),
        "criterion 2 exceeded its 5 s budget: {:?}",
        started.elapsed()
    );
    println!("PASS criterion 2: Borda aggregation matches the explicit point table");
}

#[test]
fn criterion_03_stability_weighting_degenerates_correctly() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);

    // Uniform weights: every algorithm repeats its ranking in every row, so
    // all Kuncheva weights are exactly 32 and each weighted row must equal
    // 32 times its Borda row, order included.
    for trial in 0..50 {
        let n = rng.gen_range(5..=20usize);
        let m = rng.gen_range(2..=5usize);
        let n_rows = rng.gen_range(2..=6usize);
        let threshold = rng.gen_range(2..=n / 2);

        let per_algorithm: Vec<FeatureRanking> = (0..m)
            .map(|_| ranking_with_order(&random_permutation(&mut rng, n)))
            .collect();
        let rows: Vec<Vec<FeatureRanking>> = (0..n_rows).map(|_| per_algorithm.clone()).collect();
        let names = (0..m).map(|j| format!("a{j}")).collect();
        let grid = RankingGrid::new(rows.clone(), names).expect("well-formed grid");

        let weights = kuncheva_weights(&grid, threshold).expect("valid threshold");
        for (j, &w) in weights.iter().enumerate() {
            assert_eq!(w, 32.0, "trial {trial}: constant column {j} must weigh 2^5");
        }

        let weighted = stability_weighted_fam(&grid, threshold).expect("valid threshold");
        for (i, row) in rows.iter().enumerate() {
            let plain = borda_aggregate(row).expect("non-empty row");
            assert_eq!(
                weighted[i].order(),
                plain.order(),
                "trial {trial}: uniform weights must reproduce the Borda order in row {i}"
            );
            for f in 0..n {
                assert_eq!(
                    weighted[i].scores()[f],
                    32.0 * plain.scores()[f],
                    "trial {trial}: weighted score must be exactly 32x Borda in row {i}"
                );
            }
        }

        let via_weighted = two_stage_aggregate(
            &grid,
            FamMethod::StabilityWeighted { threshold },
            SamMethod::Borda,
        )
        .expect("valid grid");
        let via_borda =
            two_stage_aggregate(&grid, FamMethod::Borda, SamMethod::Borda).expect("valid grid");
        assert_eq!(via_weighted.order(), via_borda.order());
        assert_eq!(via_weighted.scores(), via_borda.scores());
    }

    // Zero influence: an algorithm whose two top-k selections are disjoint
    // sits at Kuncheva -1, weighs exactly 0, and permuting its rankings
    // inside the preserved top and bottom blocks must not move one bit of
    // the output.
    for &k in &[3usize, 5, 8] {
        let n = 2 * k;
        let stable_order = random_permutation(&mut rng, n);
        let stable = ranking_with_order(&stable_order);

        let top_then_bottom: Vec<usize> = (0..n).collect();
        let bottom_then_top: Vec<usize> = (k..n).chain(0..k).collect();
        let mut top_reversed: Vec<usize> = (0..k).rev().collect();
        top_reversed.extend((k..n).rev());
        let mut bottom_reversed: Vec<usize> = (k..n).rev().collect();
        bottom_reversed.extend((0..k).rev());

        let grid = RankingGrid::new(
            vec![
                vec![stable.clone(), ranking_with_order(&top_then_bottom)],
                vec![stable.clone(), ranking_with_order(&bottom_then_top)],
            ],
            vec!["steady".into(), "erratic".into()],
        )
        .expect("well-formed grid");
        let shuffled = RankingGrid::new(
            vec![
                vec![stable.clone(), ranking_with_order(&top_reversed)],
                vec![stable.clone(), ranking_with_order(&bottom_reversed)],
            ],
            vec!["steady".into(), "erratic".into()],
        )
        .expect("well-formed grid");

        let weights = kuncheva_weights(&grid, k).expect("valid threshold");
        assert_eq!(weights[0], 32.0, "identical selections must weigh 2^5");
        assert_eq!(weights[1], 0.0, "disjoint selections must weigh exactly 0");

        let baseline = stability_weighted_fam(&grid, k).expect("valid threshold");
        let permuted = stability_weighted_fam(&shuffled, k).expect("valid threshold");
        for (i, (a, b)) in baseline.iter().zip(&permuted).enumerate() {
            assert_eq!(a.order(), b.order(), "row {i} order moved");
            for f in 0..n {
                assert_eq!(
                    a.scores()[f].to_bits(),
                    b.scores()[f].to_bits(),
                    "row {i} score of feature {f} moved"
                );
            }
        }

        let final_a = two_stage_aggregate(
            &grid,
            FamMethod::StabilityWeighted { threshold: k },
            SamMethod::Borda,
        )
        .expect("valid grid");
        let final_b = two_stage_aggregate(
            &shuffled,
            FamMethod::StabilityWeighted { threshold: k },
            SamMethod::Borda,
        )
        .expect("valid grid");
        assert_eq!(final_a.order(), final_b.order());
        assert_eq!(final_a.scores(), final_b.scores());
    }

    println!(
        "PASS criterion 3: uniform weights reproduce Borda and a Kuncheva -1 \
         algorithm has zero influence"
    );
}

/// Independent ReliefF: full distance matrix, neighbor selection by sorting
/// candidate lists, and the same normalized-difference accumulation.
fn oracle_relieff(values: &Array2<f64>, labels: &[u8], k_requested: usize) -> Vec<f64> {
    let t = values.nrows();
    let n_features = values.ncols();
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let k = k_requested.min(ones.min(t - ones) - 1);

    let mut range = vec![0.0f64; n_features];
    for f in 0..n_features {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values.column(f) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        range[f] = hi - lo;
    }

    let mut dist = Array2::<f64>::zeros((t, t));
    for a in 0..t {
        for b in 0..t {
            if a == b {
                continue;
            }
            let mut d = 0.0;
            for f in 0..n_features {
                if range[f] > 0.0 {
                    d += (values[(a, f)] - values[(b, f)]).abs() / range[f];
                }
            }
            dist[(a, b)] = d;
        }
    }

    let denom = (t * k) as f64;
    let mut weights = vec![0.0f64; n_features];
    for r in 0..t {
        let mut hits: Vec<usize> = (0..t).filter(|&o| o != r && labels[o] == labels[r]).collect();
        let mut misses: Vec<usize> = (0..t).filter(|&o| labels[o] != labels[r]).collect();
        hits.sort_by(|&a, &b| {
            dist[(r, a)]
                .partial_cmp(&dist[(r, b)])
                .expect("finite distance")
                .then(a.cmp(&b))
        });
        misses.sort_by(|&a, &b| {
            dist[(r, a)]
                .partial_cmp(&dist[(r, b)])
                .expect("finite distance")
                .then(a.cmp(&b))
        });

        for &neighbor in &misses[..k] {
            for f in 0..n_features {
                if range[f] > 0.0 {
                    weights[f] += ((values[(r, f)] - values[(neighbor, f)]).abs() / range[f]) / denom;
                }
            }
        }
        for &neighbor in &hits[..k] {
            for f in 0..n_features {
                if range[f] > 0.0 {
                    weights[f] -= ((values[(r, f)] - values[(neighbor, f)]).abs() / range[f]) / denom;
                }
            }
        }
    }
    weights
}

fn check_entropy_and_information_rankers() {
    assert_eq!(entropy(&[0, 1]), 1.0, "a fair coin carries exactly 1 bit");
    assert_eq!(entropy(&[2, 2, 2]), 0.0, "a constant carries exactly 0 bits");
    let p = |count: f64, total: f64| {
        let q = count / total;
        -q * q.log2()
    };
    assert!(
        (entropy(&[1, 1, 1, 0]) - (p(3.0, 4.0) + p(1.0, 4.0))).abs() <= 1e-12,
        "3:1 split entropy is off"
    );

    // Hand-checkable feature: values fall into three bins of sizes 2, 3, 3
    // against a balanced label, plus a constant column that must score 0.
    let values = Array2::from_shape_vec(
        (8, 2),
        vec![
            10.0, 5.0, 10.0, 5.0, 20.0, 5.0, 20.0, 5.0, 20.0, 5.0, 30.0, 5.0, 30.0, 5.0, 30.0, 5.0,
        ],
    )
    .expect("shape fits");
    let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let column: Vec<f64> = values.column(0).to_vec();
    assert_eq!(
        discretize_equal_frequency(&column, 4),
        vec![0, 0, 1, 1, 1, 2, 2, 2],
        "quantile bins of the hand column are off"
    );

    let hy = 1.0;
    let middle_bin = p(2.0, 3.0) + p(1.0, 3.0);
    let ig = hy - 3.0 / 8.0 * middle_bin;
    let hx = p(2.0, 8.0) + p(3.0, 8.0) + p(3.0, 8.0);

    let m = matrix(values, labels);
    let gr = gain_ratio(&m, 4).expect("two bins or more");
    assert!(
        (gr.scores()[0] - ig / hx).abs() <= 1e-12,
        "gain ratio {} differs from the hand value {}",
        gr.scores()[0],
        ig / hx
    );
    assert_eq!(gr.scores()[1], 0.0, "a constant feature must score 0");

    let su = symmetrical_uncertainty(&m, 4).expect("two bins or more");
    assert!(
        (su.scores()[0] - 2.0 * ig / (hx + hy)).abs() <= 1e-12,
        "symmetrical uncertainty {} differs from the hand value {}",
        su.scores()[0],
        2.0 * ig / (hx + hy)
    );
    assert_eq!(su.scores()[1], 0.0, "a constant feature must score 0");
}

fn check_relieff_against_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for t in 4..=8usize {
        for n_features in 1..=4usize {
            for k in 1..=3usize {
                for pattern in 0..2 {
                    for variant in 0..2 {
                        let labels: Vec<u8> = (0..t)
                            .map(|i| if pattern == 0 { (i % 2) as u8 } else { u8::from(i >= t / 2) })
                            .collect();
                        let mut values = Array2::from_shape_fn((t, n_features), |_| {
                            rng.gen_range(-4.0..4.0)
                        });
                        if variant == 1 {
                            // A constant column and a duplicated sample probe
                            // the zero-range guard and the index tiebreak.
                            for i in 0..t {
                                values[(i, 0)] = 1.5;
                            }
                            for f in 0..n_features {
                                values[(1, f)] = values[(0, f)];
                            }
                        }
                        let expected = oracle_relieff(&values, &labels, k);
                        let got = relieff(&matrix(values, labels), k).expect("two per class");
                        for f in 0..n_features {
                            assert_eq!(
                                got.scores()[f],
                                expected[f],
                                "T={t} F={n_features} k={k} pattern={pattern} \
                                 variant={variant}: weight of feature {f} differs"
                            );
                        }
                    }
                }
            }
        }
    }
}

fn check_geode_direction_and_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for trial in 0..20 {
        let t = rng.gen_range(8..=16usize);
        let n_features = rng.gen_range(3..=10usize);
        let labels: Vec<u8> = (0..t).map(|i| u8::from(i % 3 == 0)).collect();
        let values = Array2::from_shape_fn((t, n_features), |(i, j)| {
            rng.gen_range(-3.0..3.0) + f64::from(labels[i]) * (j as f64 * 0.2)
        });

        let base = geode(&matrix(values.clone(), labels.clone()), 0.5, 0.95)
            .expect("classes are large enough");
        let total: f64 = base.scores().iter().sum();
        assert!(
            (total - 1.0).abs() <= 1e-9,
            "trial {trial}: squared direction components sum to {total}, not 1"
        );

        let perm = random_permutation(&mut rng, n_features);
        let shuffled = Array2::from_shape_fn((t, n_features), |(i, j)| values[(i, perm[j])]);
        let moved = geode(&matrix(shuffled, labels), 0.5, 0.95).expect("same classes");
        for j in 0..n_features {
            assert!(
                (moved.scores()[j] - base.scores()[perm[j]]).abs() <= 1e-12,
                "trial {trial}: column permutation moved score {j} by more than 1e-12"
            );
        }
    }
}

fn check_wx_constants_and_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);

    let labels = vec![0, 0, 0, 1, 1];
    let values = Array2::from_shape_fn((5, 4), |(i, j)| match j {
        0 => 7.0,
        1 => 0.0,
        _ => rng.gen_range(-2.0..2.0) + f64::from(labels[i]),
    });
    let scored = wx(&matrix(values, labels), 100, 0.01).expect("both classes present");
    assert_eq!(scored.scores()[0], 0.0, "a constant feature must score exactly 0");
    assert_eq!(scored.scores()[1], 0.0, "a constant feature must score exactly 0");

    for trial in 0..10 {
        let t = 10;
        let n_features = 8;
        let labels: Vec<u8> = (0..t).map(|i| u8::from(i >= 6)).collect();
        let values = Array2::from_shape_fn((t, n_features), |(i, _)| {
            rng.gen_range(-2.0..2.0) + f64::from(labels[i]) * 0.5
        });

        let base = wx(&matrix(values.clone(), labels.clone()), 100, 0.01).expect("two classes");
        let perm = random_permutation(&mut rng, n_features);
        let shuffled = Array2::from_shape_fn((t, n_features), |(i, j)| values[(i, perm[j])]);
        let moved = wx(&matrix(shuffled, labels), 100, 0.01).expect("two classes");
        for j in 0..n_features {
            assert_eq!(
                moved.scores()[j].to_bits(),
                base.scores()[perm[j]].to_bits(),
                "trial {trial}: column permutation changed a score bit"
            );
        }
    }
}

#[test]
fn criterion_04_rankers_pass_their_unit_suites() {
    let started = Instant::now();
    check_entropy_and_information_rankers();
    check_relieff_against_oracle();
    check_geode_direction_and_equivariance();
    check_wx_constants_and_equivariance();
    assert!(
        started.elapsed() < Duration::from_secs(30),
        "criterion 4 exceeded its 30 s budget: {:?}",
        started.elapsed()
    );
    println!("PASS criterion 4: all five rankers match hand values and oracles");
}

#[test]
fn criterion_05_auc_hand_values_and_complement_identity() {
    assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
    assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]).unwrap(), 0.0);
    assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
    assert_eq!(roc_auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]).unwrap(), 0.5);
    assert_eq!(roc_auc(&[1.0, 1.0, 2.0, 2.0], &[0, 1, 0, 1]).unwrap(), 0.5);

    assert_eq!(pr_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
    assert_eq!(pr_auc(&[0.1, 0.9], &[0, 1]).unwrap(), 1.0);
    assert_eq!(pr_auc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.5);
    let interleaved = pr_auc(&[4.0, 3.0, 2.0, 1.0], &[1, 0, 1, 1]).unwrap();
    assert!(
        (interleaved - 29.0 / 36.0).abs() <= 1e-12,
        "average precision {interleaved} differs from 29/36"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for trial in 0..200 {
        let t = rng.gen_range(4..=30usize);
        let scores: Vec<f64> = sample(&mut rng, 100_000, t)
            .into_vec()
            .into_iter()
            .map(|v| v as f64)
            .collect();
        let mut labels: Vec<u8> = (0..t).map(|_| rng.gen_range(0..2) as u8).collect();
        labels[0] = 0;
        labels[1] = 1;
        let flipped: Vec<u8> = labels.iter().map(|&l| 1 - l).collect();

        let forward = roc_auc(&scores, &labels).expect("both classes present");
        let backward = roc_auc(&scores, &flipped).expect("both classes present");
        assert!(
            (forward + backward - 1.0).abs() <= 1e-12,
            "trial {trial}: tie-free complement identity is off: {forward} + {backward}"
        );
    }

    println!("PASS criterion 5: ROC and PR areas match hand values and the complement identity");
}

#[test]
fn criterion_06_planted_features_are_recovered() {
    let started = Instant::now();
    let spec = SyntheticSpec {
        n_samples: 200,
        n_features: 1000,
        n_informative: 20,
        effect_size: 2.0,
        class_balance: 0.5,
        seed: 7,
    };
    let (data, planted) = generate_synthetic(&spec).expect("valid recipe");
    let planted_set: BTreeSet<usize> = planted.iter().copied().collect();
    assert_eq!(planted_set.len(), 20);

    let roster = vec![
        bagged("Hyb-EFS-Borda", 20),
        bagged("Hyb-EFS-Stb", 20),
        roster_spec("Het-EFS").expect("builtin label"),
        bagged("Hom-Wx", 20),
    ];
    let config = ExperimentConfig {
        k_folds: 5,
        thresholds: vec![20, 50],
        seed: 7,
        gbm: GbmParams::default(),
    };
    let result = run_experiment(&data, &roster, &config).expect("run succeeds");

    for (s, strategy) in roster.iter().enumerate() {
        for fold in 0..5 {
            let ranking = result.fold_outputs[fold][s]
                .ranking_at(50)
                .expect("50 is in the sweep");
            let hits = ranking
                .top(50)
                .iter()
                .filter(|f| planted_set.contains(f))
                .count();
            println!(
                "criterion 6 measurement: {} fold {fold}: {hits}/20 planted in its top 50",
                strategy.label
            );
            assert!(
                hits >= 15,
                "{} fold {fold}: only {hits}/20 planted features in its top 50",
                strategy.label
            );
        }

        let fold_aucs: Vec<f64> = result
            .metrics
            .iter()
            .filter(|r| r.strategy == strategy.label && r.threshold == 20)
            .map(|r| r.roc_auc)
            .collect();
        assert_eq!(fold_aucs.len(), 5);
        let mean = fold_aucs.iter().sum::<f64>() / 5.0;
        println!(
            "criterion 6 measurement: {} mean test ROC AUC at 20 features: {mean:.4}",
            strategy.label
        );
        assert!(
            mean >= 0.90,
            "{}: mean test ROC AUC {mean:.4} under 0.90",
            strategy.label
        );
    }

    assert!(
        started.elapsed() < Duration::from_secs(600),
        "criterion 6 exceeded its 10 min budget: {:?}",
        started.elapsed()
    );
    println!("PASS criterion 6: every flagship strategy recovers the planted features");
}

#[test]
fn criterion_07_stability_weighting_beats_plain_heterogeneous() {
    let mut wins = 0;
    for seed in 1..=5u64 {
        let spec = SyntheticSpec {
            n_samples: 200,
            n_features: 1000,
            n_informative: 20,
            effect_size: 2.0,
            class_balance: 0.5,
            seed,
        };
        let (data, _) = generate_synthetic(&spec).expect("valid recipe");
        let roster = vec![bagged("Hyb-EFS-Stb", 20), roster_spec("Het-EFS").expect("builtin")];
        let config = ExperimentConfig {
            k_folds: 5,
            thresholds: (10..=50).collect(),
            seed,
            gbm: GbmParams::default(),
        };
        let result = run_experiment(&data, &roster, &config).expect("run succeeds");

        let mean_ki = |label: &str| {
            let values: Vec<f64> = result
                .stability
                .iter()
                .filter(|r| r.strategy == label)
                .map(|r| r.kuncheva)
                .collect();
            assert_eq!(values.len(), 41, "{label}: one record per threshold");
            values.iter().sum::<f64>() / values.len() as f64
        };
        let hybrid = mean_ki("Hyb-EFS-Stb");
        let heterogeneous = mean_ki("Het-EFS");
        println!(
            "criterion 7 measurement: seed {seed}: mean Kuncheva {hybrid:.4} (Hyb-EFS-Stb) \
             vs {heterogeneous:.4} (Het-EFS)"
        );
        if hybrid >= heterogeneous {
            wins += 1;
        }
    }

    println!("criterion 7 measurement: Hyb-EFS-Stb wins {wins}/5 seeds");
    assert!(
        wins >= 4,
        "Hyb-EFS-Stb out-stabilized Het-EFS in only {wins}/5 seeds"
    );
    println!("PASS criterion 7: stability weighting out-stabilizes plain heterogeneous fusion");
}

#[test]
fn criterion_08_protocol_hygiene_and_record_counts() {
    let spec = SyntheticSpec {
        n_samples: 60,
        n_features: 501,
        n_informative: 5,
        effect_size: 1.5,
        class_balance: 0.5,
        seed: 13,
    };
    let (data, _) = generate_synthetic(&spec).expect("valid recipe");
    let roster = builtin_roster();
    assert_eq!(roster.len(), 15);
    let thresholds = default_thresholds();
    assert_eq!(thresholds.len(), 54);
    let config = ExperimentConfig {
        k_folds: 5,
        thresholds: thresholds.clone(),
        seed: 13,
        gbm: GbmParams {
            n_trees: 5,
            max_depth: 2,
            ..GbmParams::default()
        },
    };
    let (result, trace) = run_experiment_traced(&data, &roster, &config).expect("run succeeds");

    assert_eq!(result.metrics.len(), 15 * 5 * 54, "one metric row per cell");
    assert_eq!(result.stability.len(), 15 * 54, "one stability row per pair");
    for record in &result.metrics {
        assert!((0.0..=1.0).contains(&record.roc_auc));
        assert!((0.0..=1.0).contains(&record.pr_auc));
    }

    let label_index = |label: &str| {
        result
            .strategy_labels
            .iter()
            .position(|l| l == label)
            .expect("known label")
    };
    let mut expected_keys = Vec::with_capacity(result.metrics.len());
    for s in 0..15 {
        for fold in 0..5 {
            for &t in &thresholds {
                expected_keys.push((s, fold, t));
            }
        }
    }
    let actual_keys: Vec<(usize, usize, usize)> = result
        .metrics
        .iter()
        .map(|r| (label_index(&r.strategy), r.fold, r.threshold))
        .collect();
    assert_eq!(actual_keys, expected_keys, "canonical metric order is broken");

    assert_eq!(trace.folds.len(), 5);
    let everything: BTreeSet<usize> = (0..60).collect();
    for (fold, audit) in trace.folds.iter().enumerate() {
        let test: BTreeSet<usize> = audit.test_rows.iter().copied().collect();
        let train: BTreeSet<usize> = audit.train_rows.iter().copied().collect();
        let balanced: BTreeSet<usize> = audit.balanced_rows.iter().copied().collect();

        assert!(test.is_disjoint(&train), "fold {fold}: a test row reached training");
        let union: BTreeSet<usize> = test.union(&train).copied().collect();
        assert_eq!(union, everything, "fold {fold}: folds must partition the samples");
        assert!(
            balanced.is_subset(&train),
            "fold {fold}: balancing may only drop training rows"
        );

        assert_eq!(audit.bags.len(), 50, "fold {fold}: the widest strategy needs 50 bags");
        for (bag_index, bag) in &audit.bags {
            assert_eq!(
                bag.len(),
                audit.balanced_rows.len(),
                "fold {fold} bag {bag_index}: bags resample the balanced set at full size"
            );
            for row in bag {
                assert!(
                    balanced.contains(row),
                    "fold {fold} bag {bag_index}: row {row} was never in the balanced set"
                );
            }
        }

        assert_eq!(audit.selections.len(), 15 * 54, "fold {fold}: one selection per cell");
        for selection in &audit.selections {
            assert_eq!(
                selection.features.len(),
                selection.threshold,
                "fold {fold}: {} at {} selected the wrong count",
                selection.strategy,
                selection.threshold
            );
            for window in selection.features.windows(2) {
                assert!(window[0] < window[1], "fold {fold}: selections are sorted sets");
            }
            for &feature in &selection.features {
                assert!(feature < 501, "fold {fold}: feature index out of range");
            }
        }
    }

    println!(
        "PASS criterion 8: 4050 metric and 810 stability records in canonical order, \
         with no test leakage and well-formed bags and selections"
    );
}

#[test]
fn criterion_09_binary_output_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().expect("temp dir");
    let config_path = dir.path().join("run.json");
    let out_one = dir.path().join("w1");
    let out_eight = dir.path().join("w8");
    let config = r#"{
  "dataset": {
    "kind": "synthetic",
    "n_samples": 48,
    "n_features": 30,
    "n_informative": 4,
    "effect_size": 2.0,
    "class_balance": 0.5,
    "seed": 21
  },
  "strategies": [
    "Hom-GR",
    "Het-EFS",
    {
      "label": "Hyb-trio",
      "kind": "hybrid",
      "algorithms": ["wx", "gr", "su"],
      "n_bootstraps": 8,
      "fam": "stability_weighted"
    }
  ],
  "k_folds": 3,
  "thresholds": [3, 8, 12],
  "seed": 17,
  "gbm": { "n_trees": 20 }
}
"#;
    std::fs::write(&config_path, config).expect("config written");

    for (workers, out) in [("1", &out_one), ("8", &out_eight)] {
        let status = Command::new(env!("CARGO_BIN_EXE_hybefs"))
            .args(["run", "--config"])
            .arg(&config_path)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .env_remove("HYBEFS_WORKERS")
            .status()
            .expect("binary spawns");
        assert!(status.success(), "run with {workers} workers failed");
    }

    for file in ["metrics.csv", "stability.csv"] {
        let one = std::fs::read(out_one.join(file)).expect("first output exists");
        let eight = std::fs::read(out_eight.join(file)).expect("second output exists");
        assert!(!one.is_empty());
        assert_eq!(one, eight, "{file} differs between 1 and 8 workers");
    }

    println!("PASS criterion 9: metrics and stability bytes are identical at 1 and 8 workers");
}

#[test]
fn criterion_10_downsampling_balances_and_keeps_the_minority() {
    // Direct contract on a 108 vs 70 split.
    let mut labels = vec![0u8; 108];
    labels.extend(std::iter::repeat(1u8).take(70));
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(10));
    let all: Vec<usize> = (0..178).collect();
    let kept = downsample_balance(&all, &labels, 99).expect("two classes present");

    let kept_set: BTreeSet<usize> = kept.iter().copied().collect();
    assert_eq!(kept_set.len(), kept.len(), "no row may repeat");
    let zeros = kept.iter().filter(|&&i| labels[i] == 0).count();
    let ones = kept.iter().filter(|&&i| labels[i] == 1).count();
    assert_eq!((zeros, ones), (70, 70), "both classes must land on the minority count");
    for (i, &label) in labels.iter().enumerate() {
        if label == 1 {
            assert!(kept_set.contains(&i), "minority row {i} was dropped");
        }
    }

    // The same contract inside the protocol, fold by fold.
    let spec = SyntheticSpec {
        n_samples: 178,
        n_features: 12,
        n_informative: 2,
        effect_size: 1.5,
        class_balance: 70.0 / 178.0,
        seed: 3,
    };
    let (data, _) = generate_synthetic(&spec).expect("valid recipe");
    assert_eq!(data.class_counts(), (108, 70));

    let roster = vec![roster_spec("Sin-GR").expect("builtin")];
    let config = ExperimentConfig {
        k_folds: 5,
        thresholds: vec![3],
        seed: 12,
        gbm: GbmParams {
            n_trees: 5,
            max_depth: 2,
            ..GbmParams::default()
        },
    };
    let (_, trace) = run_experiment_traced(&data, &roster, &config).expect("run succeeds");

    for (fold, audit) in trace.folds.iter().enumerate() {
        let balanced_ones = audit
            .balanced_rows
            .iter()
            .filter(|&&r| data.labels()[r] == 1)
            .count();
        let balanced_zeros = audit.balanced_rows.len() - balanced_ones;
        assert_eq!(
            (balanced_zeros, balanced_ones),
            (56, 56),
            "fold {fold}: training must balance at the minority count"
        );
        let balanced: BTreeSet<usize> = audit.balanced_rows.iter().copied().collect();
        for &row in &audit.train_rows {
            if data.labels()[row] == 1 {
                assert!(
                    balanced.contains(&row),
                    "fold {fold}: minority training row {row} was dropped"
                );
            }
        }
    }

    println!("PASS criterion 10: downsampling balances every training fold and keeps the minority class");
}

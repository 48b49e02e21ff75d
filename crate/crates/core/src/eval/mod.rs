//! Regression benchmark harness: repeated 75/25 splits, ridge with LOOCV
//! alpha selection over a fixed grid, MSE reporting, and paired significance
//! testing across datasets.

mod ridge;
mod significance;

pub use ridge::{loo_mean_squared_error_by_refit, loocv_alpha, ridge_fit, RidgeModel};
pub use significance::{benjamini_hochberg, wilcoxon_signed_rank, WILCOXON_EXACT_LIMIT};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::lexer::tokenize;
use crate::par::map_collect;

/// The alpha grid the benchmark selects from.
pub const DEFAULT_ALPHAS: [f64; 4] = [0.001, 0.01, 0.1, 1.0];
pub const DEFAULT_REPEATS: usize = 5;
pub const TRAIN_FRACTION: f64 = 0.75;
const MIN_ROWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("need at least {MIN_ROWS} rows, got {rows}")]
    TooFewRows { rows: usize },
    #[error("{rows} feature rows but {targets} targets")]
    DimensionMismatch { rows: usize, targets: usize },
    #[error("features or targets contain non-finite values")]
    NonFinite,
    #[error("system is singular; cannot solve")]
    SingularSystem,
    #[error("alpha must be finite and non-negative, got {0}")]
    BadAlpha(f64),
    #[error("alpha grid is empty")]
    EmptyAlphas,
    #[error("need at least 6 non-zero paired differences, got {nonzero}")]
    TooFewPairs { nonzero: usize },
}

/// A feature matrix with aligned targets and row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub features: DMatrix<f64>,
    pub target: DVector<f64>,
    pub ids: Vec<String>,
}

impl LabeledTable {
    pub fn new(
        features: DMatrix<f64>,
        target: DVector<f64>,
        ids: Vec<String>,
    ) -> Result<Self, EvalError> {
        if features.nrows() != target.len() || features.nrows() != ids.len() {
            return Err(EvalError::DimensionMismatch {
                rows: features.nrows(),
                targets: target.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) || target.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        Ok(LabeledTable {
            features,
            target,
            ids,
        })
    }

    pub fn rows(&self) -> usize {
        self.features.nrows()
    }

    fn subset(&self, rows: &[usize]) -> LabeledTable {
        LabeledTable {
            features: self.features.select_rows(rows.iter()),
            target: self.target.select_rows(rows.iter()),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }
}

/// Uniform random partition without replacement; train gets
/// `round(fraction * n)` rows. Deterministic in the seed.
pub fn split(
    table: &LabeledTable,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledTable, LabeledTable), EvalError> {
    let n = table.rows();
    if n < MIN_ROWS {
        return Err(EvalError::TooFewRows { rows: n });
    }
    let train_size = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train_rows = order[..train_size].to_vec();
    let mut test_rows = order[train_size..].to_vec();
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok((table.subset(&train_rows), table.subset(&test_rows)))
}

/// Per-repeat results of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub per_repeat_mse: Vec<f64>,
    pub chosen_alphas: Vec<f64>,
    pub mean_mse: f64,
    /// Sample standard deviation of the repeat MSEs over sqrt(repeats).
    pub std_error: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of independent task `index` under a root seed: one splitmix64 step
/// over `root + (index+1) * golden`. Schedule-independent by construction.
pub fn task_seed(root: u64, index: u64) -> u64 {
    splitmix64(root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn mean_squared_error(pred: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (pred - truth).map(|e| e * e).sum() / truth.len() as f64
}

fn run_one_repeat(
    table: &LabeledTable,
    seed: u64,
    alphas: &[f64],
) -> Result<(f64, f64), EvalError> {
    let (train, test) = split(table, TRAIN_FRACTION, seed)?;
    let alpha = loocv_alpha(&train.features, &train.target, alphas)?;
    let model = ridge_fit(&train.features, &train.target, alpha)?;
    let mse = mean_squared_error(&model.predict(&test.features), &test.target);
    Ok((mse, alpha))
}

/// For each repeat: split, select alpha by LOOCV on the train side, fit,
/// report test MSE. Repeats run as an order-preserving parallel map with
/// seeds derived by [`task_seed`], so reports are bit-reproducible.
pub fn run_benchmark(
    table: &LabeledTable,
    repeats: usize,
    root_seed: u64,
    alphas: &[f64],
) -> Result<RegressionReport, EvalError> {
    let seeds: Vec<u64> = (0..repeats).map(|i| task_seed(root_seed, i as u64)).collect();
    let outcomes = map_collect(&seeds, |&seed| run_one_repeat(table, seed, alphas));
    let mut per_repeat_mse = Vec::with_capacity(repeats);
    let mut chosen_alphas = Vec::with_capacity(repeats);
    for outcome in outcomes {
        let (mse, alpha) = outcome?;
        per_repeat_mse.push(mse);
        chosen_alphas.push(alpha);
    }
    let mean_mse = per_repeat_mse.iter().sum::<f64>() / repeats.max(1) as f64;
    let std_error = if repeats > 1 {
        let var = per_repeat_mse
            .iter()
            .map(|m| (m - mean_mse).powi(2))
            .sum::<f64>()
            / (repeats - 1) as f64;
        (var / repeats as f64).sqrt()
    } else {
        0.0
    };
    Ok(RegressionReport {
        per_repeat_mse,
        chosen_alphas,
        mean_mse,
        std_error,
    })
}

/// Symbol-count features over the primitive alphabet, column order by first
/// appearance in the corpus. The comparator baseline for discovered
/// substructure counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramFeatures {
    pub matrix: DMatrix<f64>,
    pub symbols: Vec<String>,
}

pub fn unigram_baseline(smiles: &[String]) -> Result<UnigramFeatures, CorpusError> {
    let mut column: HashMap<String, usize> = HashMap::new();
    let mut symbols: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(smiles.len());
    for (index, line) in smiles.iter().enumerate() {
        let stream = tokenize(line).map_err(|source| CorpusError::Lex { index, source })?;
        let mut row: HashMap<usize, f64> = HashMap::new();
        for token in &stream.tokens {
            let col = *column.entry(token.text.clone()).or_insert_with(|| {
                symbols.push(token.text.clone());
                symbols.len() - 1
            });
            *row.entry(col).or_insert(0.0) += 1.0;
        }
        let mut row: Vec<(usize, f64)> = row.into_iter().collect();
        row.sort_unstable_by_key(|&(col, _)| col);
        rows.push(row);
    }
    let mut matrix = DMatrix::zeros(smiles.len(), symbols.len());
    for (i, row) in rows.iter().enumerate() {
        for &(col, count) in row {
            matrix[(i, col)] = count;
        }
    }
    Ok(UnigramFeatures { matrix, symbols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_table(n: usize, p: usize, seed: u64) -> LabeledTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
        let target = DVector::from_fn(n, |i, _| features[(i, 0)] * 2.0 - features[(i, 1 % p)]);
        let ids = (0..n).map(|i| format!("row{i}")).collect();
        LabeledTable::new(features, target, ids).unwrap()
    }

    #[test]
    fn split_sizes_and_partition() {
        let table = toy_table(100, 3, 1);
        let (train, test) = split(&table, TRAIN_FRACTION, 42).unwrap();
        assert_eq!(train.rows(), 75);
        assert_eq!(test.rows(), 25);
        let mut ids: Vec<&String> = train.ids.iter().chain(test.ids.iter()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }

    #[test]
    fn split_is_deterministic() {
        let table = toy_table(40, 2, 2);
        let (a_train, _) = split(&table, TRAIN_FRACTION, 7).unwrap();
        let (b_train, _) = split(&table, TRAIN_FRACTION, 7).unwrap();
        assert_eq!(a_train.ids, b_train.ids);
        let (c_train, _) = split(&table, TRAIN_FRACTION, 8).unwrap();
        assert_ne!(a_train.ids, c_train.ids);
    }

    #[test]
    fn split_rejects_tiny_tables() {
        let table = toy_table(7, 2, 3);
        assert_eq!(
            split(&table, TRAIN_FRACTION, 0),
            Err(EvalError::TooFewRows { rows: 7 })
        );
    }

    #[test]
    fn realizable_target_is_learned_exactly() {
        let table = toy_table(60, 4, 4);
        let report = run_benchmark(&table, 5, 11, &DEFAULT_ALPHAS).unwrap();
        assert!(report.mean_mse < 1e-4, "mean mse {}", report.mean_mse);
        assert_eq!(report.per_repeat_mse.len(), 5);
        assert_eq!(report.chosen_alphas.len(), 5);
    }

    #[test]
    fn constant_target_predicts_its_mean() {
        let mut table = toy_table(50, 3, 5);
        table.target = DVector::from_element(50, 2.5);
        let report = run_benchmark(&table, 5, 12, &DEFAULT_ALPHAS).unwrap();
        assert!(report.mean_mse < 1e-10, "mean mse {}", report.mean_mse);
    }

    #[test]
    fn reports_are_bit_reproducible() {
        let table = toy_table(64, 5, 6);
        let a = run_benchmark(&table, 5, 99, &DEFAULT_ALPHAS).unwrap();
        let b = run_benchmark(&table, 5, 99, &DEFAULT_ALPHAS).unwrap();
        assert_eq!(a, b);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn reports_do_not_depend_on_pool_size() {
        let table = toy_table(64, 5, 16);
        let one = crate::with_thread_limit(Some(1), || {
            run_benchmark(&table, 5, 42, &DEFAULT_ALPHAS).unwrap()
        });
        let four = crate::with_thread_limit(Some(4), || {
            run_benchmark(&table, 5, 42, &DEFAULT_ALPHAS).unwrap()
        });
        assert_eq!(one, four);
    }

    #[test]
    fn unigram_counts() {
        let corpus = vec!["CCO".to_owned(), "OCCl".to_owned()];
        let features = unigram_baseline(&corpus).unwrap();
        assert_eq!(features.symbols, ["C", "O", "Cl"]);
        assert_eq!(features.matrix.row(0).iter().copied().collect::<Vec<_>>(), [2.0, 1.0, 0.0]);
        assert_eq!(features.matrix.row(1).iter().copied().collect::<Vec<_>>(), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn unigram_matches_naive_recount() {
        let corpus = vec!["C(F)(F)F".to_owned(), "c1ccccc1Br".to_owned(), "CCO".to_owned()];
        let features = unigram_baseline(&corpus).unwrap();
        for (i, line) in corpus.iter().enumerate() {
            for (j, symbol) in features.symbols.iter().enumerate() {
                let naive = tokenize(line)
                    .unwrap()
                    .tokens
                    .iter()
                    .filter(|t| &t.text == symbol)
                    .count() as f64;
                assert_eq!(features.matrix[(i, j)], naive, "{line} {symbol}");
            }
        }
    }

    #[test]
    fn task_seeds_are_spread() {
        let seeds: Vec<u64> = (0..100).map(|i| task_seed(1234, i)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
    }
}

//! Variable pretransformations applied before estimation.
//!
//! The continuous redundancy depends on the relative scale on which the
//! variables are compared. Three choices are exposed: leave the data alone,
//! standardize each column, or replace each column by its empirical copula
//! (rank) transform, which makes everything downstream invariant under
//! strictly monotone per-column maps. The mode is recorded verbatim in the
//! result metadata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::SampleSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessMode {
    #[default]
    None,
    Standardize,
    Copula,
}

impl std::fmt::Display for PreprocessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PreprocessMode::None => "none",
            PreprocessMode::Standardize => "standardize",
            PreprocessMode::Copula => "copula",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for PreprocessMode {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "none" => Ok(PreprocessMode::None),
            "standardize" => Ok(PreprocessMode::Standardize),
            "copula" => Ok(PreprocessMode::Copula),
            other => Err(Error::BadLayout(format!("unknown preprocess mode {other:?}"))),
        }
    }
}

pub fn apply(mode: PreprocessMode, samples: &SampleSet) -> Result<SampleSet> {
    match mode {
        PreprocessMode::None => Ok(samples.clone()),
        PreprocessMode::Standardize => standardize(samples),
        PreprocessMode::Copula => copula_transform(samples),
    }
}

/// Shifts and scales every column to sample mean 0 and sample std 1.
///
/// Uses the population convention (divide by sqrt of the mean squared
/// deviation). Errors on constant columns.
pub fn standardize(samples: &SampleSet) -> Result<SampleSet> {
    samples.map_columns(|index, column| {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        if var == 0.0 {
            return Err(Error::DegenerateColumn(index));
        }
        let std = var.sqrt();
        Ok(column.iter().map(|x| (x - mean) / std).collect())
    })
}

/// Maps every column to `(rank - 0.5) / N`, with average ranks for ties,
/// so values lie strictly inside (0, 1). Ranks are invariant under strictly
/// increasing per-column maps, which makes the transform itself invariant.
pub fn copula_transform(samples: &SampleSet) -> Result<SampleSet> {
    if samples.n_samples() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.n_samples(),
        });
    }
    samples.map_columns(|_, column| Ok(rank_column(column)))
}

fn rank_column(column: &[f64]) -> Vec<f64> {
    let n = column.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| column[a].partial_cmp(&column[b]).expect("finite data"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && column[order[end]] == column[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1 ..= end share the average rank.
        let average = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = (average - 0.5) / n as f64;
        }
        start = end;
    }
    ranks
}

/// Adds uniform noise of magnitude `1e-10` times the column std to every
/// column; an opt-in remedy for data with exact duplicate points. Never
/// applied implicitly.
pub fn jitter(samples: &SampleSet, seed: u64) -> Result<SampleSet> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    samples.map_columns(|_, column| {
        let n = column.len() as f64;
        let mean = column.iter().sum::<f64>() / n;
        let std = (column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let magnitude = 1e-10 * if std > 0.0 { std } else { 1.0 };
        Ok(column
            .iter()
            .map(|x| x + rng.gen_range(-magnitude..=magnitude))
            .collect())
    })
}

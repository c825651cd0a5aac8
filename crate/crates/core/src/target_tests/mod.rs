//! Target-domain tests applied to a (re)sample.

mod fisher;
mod kernel;
mod parametric;
mod permutation;
mod rank;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::result::TestOutcome;

pub use fisher::fisher_exact_2x2;
pub use kernel::{gaussian_gram, hsic_permutation_test, median_heuristic, mmd_permutation_test};
pub use parametric::{bates_quantile, irwin_hall_cdf, pearson_corr_test, regression_slope_gof};
pub use permutation::{mean_perm_test, MIN_PERMUTATIONS};
pub use rank::{mann_whitney_u, wilcoxon_signed_rank, MANN_WHITNEY_EXACT_MAX, WILCOXON_EXACT_MAX};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Which test to run and which columns it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestKind {
    PearsonCorr {
        x: String,
        y: String,
    },
    WilcoxonSignedRank {
        x: String,
        #[serde(default)]
        mu0: f64,
    },
    /// `group` must take two values; the smaller one labels the first sample.
    MannWhitneyU {
        value: String,
        group: String,
    },
    MmdPerm {
        columns: Vec<String>,
        group: String,
    },
    HsicPerm {
        x: Vec<String>,
        y: Vec<String>,
    },
    /// Both columns must be binary; the smaller value indexes row/column 0.
    FisherExact {
        x: String,
        y: String,
    },
    MeanPerm {
        value: String,
        group: String,
    },
}

fn default_permutations() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTest {
    #[serde(flatten)]
    pub kind: TestKind,
    #[serde(default)]
    pub alternative: Alternative,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
}

impl HypothesisTest {
    pub fn new(kind: TestKind) -> Self {
        Self {
            kind,
            alternative: Alternative::TwoSided,
            permutations: default_permutations(),
        }
    }

    pub fn with_alternative(mut self, alternative: Alternative) -> Self {
        self.alternative = alternative;
        self
    }

    pub fn with_permutations(mut self, permutations: usize) -> Self {
        self.permutations = permutations;
        self
    }

    pub fn is_permutation(&self) -> bool {
        matches!(
            self.kind,
            TestKind::MmdPerm { .. } | TestKind::HsicPerm { .. } | TestKind::MeanPerm { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_permutation() {
            permutation::check_permutations(self.permutations)?;
        }
        match &self.kind {
            TestKind::MmdPerm { columns, .. } if columns.is_empty() => {
                Err(invalid("mmd_perm needs at least one column"))
            }
            TestKind::HsicPerm { x, y } if x.is_empty() || y.is_empty() => {
                Err(invalid("hsic_perm needs columns for both x and y"))
            }
            _ => Ok(()),
        }
    }

    /// Fewest rows on which the test is defined.
    pub fn min_sample_size(&self) -> usize {
        match self.kind {
            TestKind::PearsonCorr { .. } | TestKind::HsicPerm { .. } | TestKind::MmdPerm { .. } => 4,
            TestKind::WilcoxonSignedRank { .. } => 1,
            _ => 2,
        }
    }

    /// Columns the test reads.
    pub fn columns(&self) -> Vec<&str> {
        match &self.kind {
            TestKind::PearsonCorr { x, y } | TestKind::FisherExact { x, y } => vec![x, y],
            TestKind::WilcoxonSignedRank { x, .. } => vec![x],
            TestKind::MannWhitneyU { value, group } | TestKind::MeanPerm { value, group } => {
                vec![value, group]
            }
            TestKind::MmdPerm { columns, group } => {
                columns.iter().map(String::as_str).chain([group.as_str()]).collect()
            }
            TestKind::HsicPerm { x, y } => x.iter().chain(y).map(String::as_str).collect(),
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, data: &Dataset, rng: &mut R) -> Result<TestOutcome> {
        self.validate()?;
        let alt = self.alternative;
        let b = self.permutations;
        match &self.kind {
            TestKind::PearsonCorr { x, y } => {
                pearson_corr_test(&data.column(x)?, &data.column(y)?, alt)
            }
            TestKind::WilcoxonSignedRank { x, mu0 } => wilcoxon_signed_rank(&data.column(x)?, *mu0, alt),
            TestKind::MannWhitneyU { value, group } => {
                let (x, y) = split_groups(data, value, group)?;
                mann_whitney_u(&x, &y, alt)
            }
            TestKind::MeanPerm { value, group } => {
                let (x, y) = split_groups(data, value, group)?;
                mean_perm_test(&x, &y, alt, b, rng)
            }
            TestKind::MmdPerm { columns, group } => {
                let labels = data.column(group)?;
                let levels = two_levels(&labels, group)?;
                let points = data.points(columns)?;
                let (x, y): (Vec<_>, Vec<_>) =
                    points.into_iter().zip(&labels).partition(|(_, g)| **g == levels[0]);
                let strip = |v: Vec<(Vec<f64>, &f64)>| v.into_iter().map(|(p, _)| p).collect::<Vec<_>>();
                mmd_permutation_test(&strip(x), &strip(y), b, rng)
            }
            TestKind::HsicPerm { x, y } => hsic_permutation_test(&data.points(x)?, &data.points(y)?, b, rng),
            TestKind::FisherExact { x, y } => {
                let xs = data.column(x)?;
                let ys = data.column(y)?;
                let lx = binary_levels(&xs, x)?;
                let ly = binary_levels(&ys, y)?;
                let mut table = [[0u64; 2]; 2];
                for (u, v) in xs.iter().zip(&ys) {
                    let i = usize::from(*u != lx);
                    let j = usize::from(*v != ly);
                    table[i][j] += 1;
                }
                Ok(fisher_exact_2x2(table, alt))
            }
        }
    }
}

/// Sorted distinct values of a grouping column, which must number exactly two.
fn two_levels(labels: &[f64], name: &str) -> Result<[f64; 2]> {
    let mut levels: Vec<f64> = labels.to_vec();
    levels.sort_unstable_by(|a, b| a.total_cmp(b));
    levels.dedup();
    match levels[..] {
        [a, b] => Ok([a, b]),
        _ => Err(invalid(format!(
            "group column '{name}' must take exactly two values, found {}",
            levels.len()
        ))),
    }
}

/// The smaller value of a column with at most two distinct values.
fn binary_levels(values: &[f64], name: &str) -> Result<f64> {
    let mut levels: Vec<f64> = values.to_vec();
    levels.sort_unstable_by(|a, b| a.total_cmp(b));
    levels.dedup();
    if levels.is_empty() || levels.len() > 2 {
        return Err(invalid(format!(
            "column '{name}' must be binary, found {} distinct values",
            levels.len()
        )));
    }
    Ok(levels[0])
}

fn split_groups(data: &Dataset, value: &str, group: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = data.column(value)?;
    let g = data.column(group)?;
    let [first, _] = two_levels(&g, group)?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (val, lab) in v.into_iter().zip(g) {
        if lab == first {
            x.push(val);
        } else {
            y.push(val);
        }
    }
    Ok((x, y))
}

use std::collections::BTreeMap;

use super::{discretize, ColumnData, Dataset, DEFAULT_MAX_BINS};
use crate::error::Result;
use crate::rowset::RowSet;

/// One observed combination of control values and the rows carrying it.
#[derive(Clone, Debug)]
pub struct Stratum {
    /// Printable control values, one per control column.
    pub key: Vec<String>,
    pub rows: RowSet,
    pub size: usize,
}

/// Partition of the rows by control-value tuple. Only observed tuples are
/// keyed, so every stratum is non-empty; with no control columns there is a
/// single stratum holding every row.
#[derive(Clone, Debug)]
pub struct StratumIndex {
    strata: Vec<Stratum>,
    n_rows: usize,
}

impl StratumIndex {
    pub fn build(ds: &Dataset) -> Result<Self> {
        Self::build_with_bins(ds, DEFAULT_MAX_BINS)
    }

    /// Numeric control columns are discretized into at most `max_bins`
    /// equi-frequent bins before stratifying.
    pub fn build_with_bins(ds: &Dataset, max_bins: usize) -> Result<Self> {
        let n = ds.n_rows();
        let mut coded: Vec<(Vec<u32>, Vec<String>)> = Vec::new();
        for c in ds.controls() {
            match ds.column(c) {
                ColumnData::Categorical { levels, codes } => coded.push((
                    codes
                        .iter()
                        .map(|c| c.expect("controls are complete"))
                        .collect(),
                    levels.clone(),
                )),
                ColumnData::Numeric { values } => {
                    let xs: Vec<f64> = values.iter().map(|v| v.expect("complete")).collect();
                    let bins = discretize(&xs, max_bins)?;
                    let labels = (0..bins.n_bins()).map(|b| bins.bin_label(b)).collect();
                    coded.push((xs.iter().map(|&x| bins.bin_of(x) as u32).collect(), labels));
                }
            }
        }
        Ok(Self::from_codes(n, &coded))
    }

    fn from_codes(n_rows: usize, columns: &[(Vec<u32>, Vec<String>)]) -> Self {
        let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
        for row in 0..n_rows {
            let key: Vec<u32> = columns.iter().map(|(codes, _)| codes[row]).collect();
            groups.entry(key).or_default().push(row);
        }
        let strata = groups
            .into_iter()
            .map(|(key, rows)| Stratum {
                key: key
                    .iter()
                    .zip(columns)
                    .map(|(&k, (_, labels))| labels[k as usize].clone())
                    .collect(),
                size: rows.len(),
                rows: RowSet::from_indices(n_rows, rows),
            })
            .collect();
        StratumIndex { strata, n_rows }
    }

    /// A single stratum over all rows, ignoring any control columns.
    pub fn unconditioned(n_rows: usize) -> Self {
        Self::from_codes(n_rows, &[])
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn observed_strata_count(&self) -> usize {
        self.strata.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }
}

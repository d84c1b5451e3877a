use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equi-frequency discretization of a numeric column.
///
/// Bin `i` covers `(cut[i-1], cut[i]]`, with open ends below the first and
/// above the last cut point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinnedColumn {
    pub cut_points: Vec<f64>,
    pub max_bins: usize,
    /// Smallest observed value strictly above each cut point.
    pub upper_starts: Vec<f64>,
}

impl BinnedColumn {
    pub fn n_bins(&self) -> usize {
        self.cut_points.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.cut_points.partition_point(|&c| c < x)
    }

    /// Human-readable interval of a bin.
    pub fn bin_label(&self, bin: usize) -> String {
        use super::format_number as f;
        let lo = bin.checked_sub(1).map(|i| self.cut_points[i]);
        let hi = self.cut_points.get(bin).copied();
        match (lo, hi) {
            (None, None) => "all".to_owned(),
            (None, Some(h)) => format!("<= {}", f(h)),
            (Some(l), None) => format!("> {}", f(l)),
            (Some(l), Some(h)) => format!("({}, {}]", f(l), f(h)),
        }
    }
}

/// Chooses cut points at the empirical quantiles `i / max_bins`.
///
/// Columns with at most `max_bins` distinct values get one bin per value.
/// Otherwise the lower empirical quantile is used and a cut equal to its
/// predecessor (or to the maximum) is discarded, so bins never come out
/// empty and there may be fewer than `max_bins` of them. Non-finite values
/// are ignored.
pub fn discretize(values: &[f64], max_bins: usize) -> Result<BinnedColumn> {
    if max_bins < 2 {
        return Err(Error::config(format!(
            "max_bins must be at least 2, got {max_bins}"
        )));
    }
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();

    let cut_points = if distinct.len() <= max_bins {
        distinct[..distinct.len().saturating_sub(1)].to_vec()
    } else {
        let n = sorted.len();
        let max = *distinct.last().expect("non-empty");
        let mut cuts: Vec<f64> = Vec::with_capacity(max_bins - 1);
        for i in 1..max_bins {
            let rank = (i * n).div_ceil(max_bins);
            let q = sorted[rank - 1];
            if q < max && cuts.last().is_none_or(|&prev| q > prev) {
                cuts.push(q);
            }
        }
        cuts
    };
    let upper_starts = cut_points
        .iter()
        .map(|&c| distinct[distinct.partition_point(|&v| v <= c)])
        .collect();
    Ok(BinnedColumn {
        cut_points,
        max_bins,
        upper_starts,
    })
}

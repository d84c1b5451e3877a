//! Per-stratum contingency counts and the effect measures built on them:
//! the plug-in estimator, the reliable (penalized, Laplace-corrected)
//! estimator, weighted relative accuracy and the tight optimistic bound.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, StratumIndex};
use crate::error::{Error, Result};
use crate::lang::{Pool, Rule};
use crate::rowset::RowSet;

/// Default penalty multiplier: the two-sided 95.45% z-score.
pub const DEFAULT_BETA: f64 = 2.0;

/// The 2x2 table of rule versus outcome inside one stratum.
///
/// `a`: rule holds, outcome; `b`: rule holds, other outcome;
/// `c`: rule fails, outcome; `d`: rule fails, other outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StratumCounts {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl StratumCounts {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        StratumCounts { a, b, c, d }
    }

    pub fn n_sigma(&self) -> u64 {
        self.a + self.b
    }

    pub fn n_not_sigma(&self) -> u64 {
        self.c + self.d
    }

    pub fn n1(&self) -> u64 {
        self.a + self.c
    }

    pub fn n0(&self) -> u64 {
        self.b + self.d
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub beta: f64,
    /// Target value whose probability the rule should raise.
    pub outcome: String,
    pub laplace: bool,
}

impl ScoreParams {
    pub fn new(outcome: impl Into<String>) -> Self {
        ScoreParams {
            beta: DEFAULT_BETA,
            outcome: outcome.into(),
            laplace: true,
        }
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn laplace(mut self, laplace: bool) -> Self {
        self.laplace = laplace;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::config(format!(
                "beta must be a finite non-negative number, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Laplace-corrected stratum difference with the confidence penalty, in
/// terms of the rule-side counts (`a` of `n_sigma`) and complement-side
/// counts (`c` of `n_bar`).
///
/// Both the objective and the optimistic bound go through this one
/// expression, so their floating-point results are directly comparable.
#[inline]
pub fn tau_laplace(a: f64, n_sigma: f64, c: f64, n_bar: f64, beta: f64) -> f64 {
    (a + 1.0) / (n_sigma + 2.0)
        - (c + 1.0) / (n_bar + 2.0)
        - beta / (2.0 * (n_sigma + 2.0).sqrt())
        - beta / (2.0 * (n_bar + 2.0).sqrt())
}

/// Penalized probability difference of one stratum.
///
/// Without Laplace correction the uncorrected frequencies and `√n` are
/// used; an empty side then leaves the estimate undefined.
pub fn tau(counts: &StratumCounts, beta: f64, laplace: bool) -> Result<f64> {
    let (a, ns) = (counts.a as f64, counts.n_sigma() as f64);
    let (c, nb) = (counts.c as f64, counts.n_not_sigma() as f64);
    if laplace {
        return Ok(tau_laplace(a, ns, c, nb, beta));
    }
    check_sides(counts)?;
    Ok(a / ns - c / nb - beta / (2.0 * ns.sqrt()) - beta / (2.0 * nb.sqrt()))
}

/// Unpenalized stratum difference. With Laplace correction this is `tau`
/// at `beta = 0`, evaluated by the same expression.
pub fn plugin_stratum(counts: &StratumCounts, laplace: bool) -> Result<f64> {
    if laplace {
        return tau(counts, 0.0, true);
    }
    check_sides(counts)?;
    Ok(counts.a as f64 / counts.n_sigma() as f64 - counts.c as f64 / counts.n_not_sigma() as f64)
}

fn check_sides(counts: &StratumCounts) -> Result<()> {
    if counts.n_sigma() == 0 {
        return Err(Error::UndefinedEstimate { side: "the rule" });
    }
    if counts.n_not_sigma() == 0 {
        return Err(Error::UndefinedEstimate {
            side: "the negated rule",
        });
    }
    Ok(())
}

/// Weighted relative accuracy `p(σ)·(p(y|σ) − p(y))` from the pooled table,
/// ignoring strata. With Laplace correction both conditional probabilities
/// are smoothed and `p(σ)` is left as is; an empty extension scores 0.
pub fn wracc(total: &StratumCounts, laplace: bool) -> f64 {
    let n = total.n() as f64;
    let ns = total.n_sigma() as f64;
    if total.n_sigma() == 0 || n == 0.0 {
        return 0.0;
    }
    let (p_y_sigma, p_y) = if laplace {
        (
            (total.a as f64 + 1.0) / (ns + 2.0),
            (total.n1() as f64 + 1.0) / (n + 2.0),
        )
    } else {
        (total.a as f64 / ns, total.n1() as f64 / n)
    };
    ns / n * (p_y_sigma - p_y)
}

/// Largest `tau` over every table a refinement can produce in this stratum:
/// `a' ≤ a` outcome rows and `b' ≤ b` other rows stay covered, everything
/// else moves to the complement.
///
/// The maximum is exact. Fixing `b' = 0` is not enough: for small `a'` and
/// a large penalty, keeping some `b'` shrinks the penalty on the rule side
/// faster than it lowers the frequency difference. The search therefore
/// seeds with the `b' = 0` scan and then runs a branch-and-bound over
/// rectangles of the grid, bounding each term at the rectangle corner
/// where it is most favourable.
pub fn tight_oest_stratum(counts: &StratumCounts, beta: f64) -> f64 {
    let g = Grid::new(counts, beta);
    let mut best = linear_scan_oest_stratum(counts, beta);
    if counts.b > 0 && beta > 0.0 {
        g.search(0, counts.a, 1, counts.b, &mut best);
    }
    best
}

/// Maximum of `tau` over refinements that keep no row of the other outcome
/// (`b' = 0`). A lower bound on [`tight_oest_stratum`], equal to it when
/// `beta = 0` or `b = 0`, but not an upper bound on refinements in general.
pub fn linear_scan_oest_stratum(counts: &StratumCounts, beta: f64) -> f64 {
    let g = Grid::new(counts, beta);
    (0..=counts.a)
        .map(|a| g.tau(a, 0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Brute-force maximum of `tau` over `{0..a} × {0..b}`.
pub fn grid_max_tau(counts: &StratumCounts, beta: f64) -> f64 {
    let g = Grid::new(counts, beta);
    let mut best = f64::NEG_INFINITY;
    for a in 0..=counts.a {
        for b in 0..=counts.b {
            best = best.max(g.tau(a, b));
        }
    }
    best
}

struct Grid {
    n: f64,
    n1: f64,
    beta: f64,
}

impl Grid {
    fn new(counts: &StratumCounts, beta: f64) -> Self {
        Grid {
            n: counts.n() as f64,
            n1: counts.n1() as f64,
            beta,
        }
    }

    #[inline]
    fn tau(&self, a: u64, b: u64) -> f64 {
        let (a, b) = (a as f64, b as f64);
        tau_laplace(a, a + b, self.n1 - a, self.n - a - b, self.beta)
    }

    /// Upper bound on `tau` over the rectangle. Every term of `tau_laplace`
    /// is monotone in `a'` and `b'`, and IEEE arithmetic preserves those
    /// monotonicities, so evaluating each term at its best corner and
    /// combining in the same order bounds every grid value exactly.
    fn upper(&self, a_lo: u64, a_hi: u64, b_lo: u64, b_hi: u64) -> f64 {
        let (a_lo, a_hi, b_lo, b_hi) = (a_lo as f64, a_hi as f64, b_lo as f64, b_hi as f64);
        let t1 = (a_hi + 1.0) / (a_hi + b_lo + 2.0);
        let t2 = (self.n1 - a_hi + 1.0) / (self.n - a_hi - b_lo + 2.0);
        let t3 = self.beta / (2.0 * (a_hi + b_hi + 2.0).sqrt());
        let t4 = self.beta / (2.0 * (self.n - a_lo - b_lo + 2.0).sqrt());
        t1 - t2 - t3 - t4
    }

    fn search(&self, a_lo: u64, a_hi: u64, b_lo: u64, b_hi: u64, best: &mut f64) {
        if self.upper(a_lo, a_hi, b_lo, b_hi) <= *best {
            return;
        }
        if a_lo == a_hi && b_lo == b_hi {
            *best = best.max(self.tau(a_lo, b_lo));
            return;
        }
        // split the longer side; visit the half holding the best t1 corner first
        if a_hi - a_lo >= b_hi - b_lo {
            let mid = a_lo + (a_hi - a_lo) / 2;
            self.search(mid + 1, a_hi, b_lo, b_hi, best);
            self.search(a_lo, mid, b_lo, b_hi, best);
        } else {
            let mid = b_lo + (b_hi - b_lo) / 2;
            self.search(a_lo, a_hi, b_lo, mid, best);
            self.search(a_lo, a_hi, mid + 1, b_hi, best);
        }
    }
}

/// Per-stratum entry of a scored rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumScore {
    /// Control values of the stratum, empty when there are no controls.
    pub key: Vec<String>,
    pub counts: StratumCounts,
    pub tau: f64,
    pub weight: f64,
}

/// A rule with its estimates. `reliable` and `plugin` are computed with the
/// same Laplace setting; `plugin` ignores `beta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredRule {
    pub rule: Rule,
    pub description: String,
    pub reliable: f64,
    pub plugin: f64,
    pub coverage: f64,
    pub per_stratum: Vec<StratumScore>,
}

#[derive(Clone)]
struct StratumMasks {
    key: Vec<String>,
    rows: RowSet,
    outcome_rows: RowSet,
    n: u64,
    n1: u64,
    weight_laplace: f64,
    weight_plain: f64,
}

/// Stratum masks, outcome masks and weights for one dataset and parameter
/// set. Scores depend on a rule only through its extension.
#[derive(Clone)]
pub struct Scorer {
    strata: Vec<StratumMasks>,
    outcome: RowSet,
    n_rows: usize,
    beta: f64,
    laplace: bool,
}

impl Scorer {
    pub fn new(ds: &Dataset, idx: &StratumIndex, params: &ScoreParams) -> Result<Self> {
        params.validate()?;
        let outcome = ds.outcome_mask(&params.outcome)?;
        Ok(Self::from_outcome(
            outcome,
            idx,
            params.beta,
            params.laplace,
        ))
    }

    /// Builds a scorer from a precomputed outcome mask.
    pub fn from_outcome(outcome: RowSet, idx: &StratumIndex, beta: f64, laplace: bool) -> Self {
        let n_rows = idx.n_rows();
        let denom = n_rows as f64 + 4.0 * idx.observed_strata_count() as f64;
        let strata = idx
            .strata()
            .iter()
            .map(|s| {
                let outcome_rows = s.rows.intersection(&outcome);
                StratumMasks {
                    key: s.key.clone(),
                    n: s.size as u64,
                    n1: outcome_rows.count() as u64,
                    weight_laplace: (s.size as f64 + 4.0) / denom,
                    weight_plain: s.size as f64 / n_rows as f64,
                    rows: s.rows.clone(),
                    outcome_rows,
                }
            })
            .collect();
        Scorer {
            strata,
            outcome,
            n_rows,
            beta,
            laplace,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn laplace(&self) -> bool {
        self.laplace
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Same data and strata with another penalty.
    pub fn with_beta(&self, beta: f64) -> Self {
        Scorer {
            beta,
            ..self.clone()
        }
    }

    fn weight(&self, s: &StratumMasks) -> f64 {
        if self.laplace {
            s.weight_laplace
        } else {
            s.weight_plain
        }
    }

    fn stratum_counts(s: &StratumMasks, ext: &RowSet) -> StratumCounts {
        let n_sigma = ext.intersection_count(&s.rows) as u64;
        let a = ext.intersection_count(&s.outcome_rows) as u64;
        let c = s.n1 - a;
        StratumCounts {
            a,
            b: n_sigma - a,
            c,
            d: s.n - n_sigma - c,
        }
    }

    /// Contingency table of the extension in every stratum.
    pub fn counts(&self, ext: &RowSet) -> Vec<StratumCounts> {
        self.strata
            .iter()
            .map(|s| Self::stratum_counts(s, ext))
            .collect()
    }

    /// Pooled table over all rows, ignoring strata.
    pub fn total_counts(&self, ext: &RowSet) -> StratumCounts {
        let n_sigma = ext.count() as u64;
        let a = ext.intersection_count(&self.outcome) as u64;
        let n1 = self.outcome.count() as u64;
        StratumCounts {
            a,
            b: n_sigma - a,
            c: n1 - a,
            d: self.n_rows as u64 - n_sigma - (n1 - a),
        }
    }

    /// Reliable estimate: stratum `tau` values weighted by stratum size.
    pub fn reliable(&self, ext: &RowSet) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.strata {
            total += tau(&Self::stratum_counts(s, ext), self.beta, self.laplace)? * self.weight(s);
        }
        Ok(total)
    }

    /// Stratified plug-in estimate (no penalty).
    pub fn plugin(&self, ext: &RowSet) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.strata {
            total += plugin_stratum(&Self::stratum_counts(s, ext), self.laplace)? * self.weight(s);
        }
        Ok(total)
    }

    pub fn wracc(&self, ext: &RowSet) -> f64 {
        wracc(&self.total_counts(ext), self.laplace)
    }

    /// Upper bound on the reliable estimate of every rule whose extension
    /// is a subset of `ext`. Only defined with Laplace correction.
    pub fn oest(&self, ext: &RowSet) -> f64 {
        debug_assert!(
            self.laplace,
            "the optimistic bound assumes Laplace correction"
        );
        let mut total = 0.0;
        for s in &self.strata {
            total +=
                tight_oest_stratum(&Self::stratum_counts(s, ext), self.beta) * s.weight_laplace;
        }
        total
    }

    /// Reliable estimate and bound in one pass over the strata. Requires
    /// Laplace correction.
    pub fn reliable_and_oest(&self, ext: &RowSet) -> (f64, f64) {
        let (mut r, mut o) = (0.0, 0.0);
        for s in &self.strata {
            let counts = Self::stratum_counts(s, ext);
            let w = s.weight_laplace;
            r += tau_laplace(
                counts.a as f64,
                counts.n_sigma() as f64,
                counts.c as f64,
                counts.n_not_sigma() as f64,
                self.beta,
            ) * w;
            o += tight_oest_stratum(&counts, self.beta) * w;
        }
        (r, o)
    }

    /// Full report for one rule, with per-stratum diagnostics.
    pub fn score(&self, pool: &Pool, rule: &Rule) -> Result<ScoredRule> {
        let ext = pool.extension(rule);
        self.score_extension(pool, rule, &ext)
    }

    pub fn score_extension(&self, pool: &Pool, rule: &Rule, ext: &RowSet) -> Result<ScoredRule> {
        let mut per_stratum = Vec::with_capacity(self.strata.len());
        for s in &self.strata {
            let counts = Self::stratum_counts(s, ext);
            per_stratum.push(StratumScore {
                key: s.key.clone(),
                counts,
                tau: tau(&counts, self.beta, self.laplace)?,
                weight: self.weight(s),
            });
        }
        Ok(ScoredRule {
            rule: rule.clone(),
            description: pool.render(rule, false),
            reliable: self.reliable(ext)?,
            plugin: self.plugin(ext)?,
            coverage: if self.n_rows == 0 {
                0.0
            } else {
                ext.count() as f64 / self.n_rows as f64
            },
            per_stratum,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // hand values are quoted to four or five decimals
    const EPS: f64 = 6e-5;

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() < EPS
    }

    #[test]
    fn tau_hand_values() {
        let t = tau(&StratumCounts::new(9, 1, 1, 9), 2.0, true).unwrap();
        assert!(close(t, 0.08932), "{t}");
        let t = tau(&StratumCounts::new(2, 2, 2, 2), 2.0, true).unwrap();
        assert!((t + 2.0 / 6f64.sqrt()).abs() < 1e-12);
        let t = tau(&StratumCounts::new(1, 0, 0, 1), 0.0, true).unwrap();
        assert!(close(t, 1.0 / 3.0));
    }

    #[test]
    fn uncorrected_tau_needs_both_sides() {
        assert!(matches!(
            tau(&StratumCounts::new(3, 1, 0, 0), 2.0, false),
            Err(Error::UndefinedEstimate { .. })
        ));
        assert!(plugin_stratum(&StratumCounts::new(0, 0, 1, 1), false).is_err());
        let t = tau(&StratumCounts::new(3, 1, 1, 3), 0.0, false).unwrap();
        assert_eq!(t, 0.5);
    }

    #[test]
    fn oest_worked_example() {
        // n = 4, n1 = 2, a = 2, b = 1: candidates along b' = 0
        let counts = StratumCounts::new(2, 1, 0, 1);
        let g = Grid::new(&counts, 2.0);
        assert!(close(g.tau(0, 0), -1.1153));
        assert!(close(g.tau(1, 0), -0.7579));
        assert!(close(g.tau(2, 0), -0.5));
        assert_eq!(tight_oest_stratum(&counts, 2.0), g.tau(2, 0));
        assert_eq!(grid_max_tau(&counts, 2.0), g.tau(2, 0));
    }

    #[test]
    fn empty_stratum_bound() {
        let b = tight_oest_stratum(&StratumCounts::default(), 2.0);
        assert!((b + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pure_stratum_without_penalty() {
        for a in 0..10u64 {
            let counts = StratumCounts::new(a, 0, 0, 0);
            let want = (a as f64 + 1.0) / (a as f64 + 2.0) - 0.5;
            assert!((tight_oest_stratum(&counts, 0.0) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn keeping_negatives_can_beat_the_linear_scan() {
        // all twelve covered rows carry the other outcome; a large penalty
        // makes a bigger cover pay off even at zero outcome rows
        let counts = StratumCounts::new(0, 12, 0, 12);
        let scan = linear_scan_oest_stratum(&counts, 2.58);
        let exact = grid_max_tau(&counts, 2.58);
        assert!(exact > scan + 0.03, "scan {scan}, exact {exact}");
        assert_eq!(tight_oest_stratum(&counts, 2.58), exact);
    }

    #[test]
    fn tight_bound_matches_grid_exhaustively_on_small_tables() {
        for beta in [0.0, 1.0, 2.0, 2.58] {
            for a in 0..=5 {
                for b in 0..=5 {
                    for c in 0..=5 {
                        for d in 0..=5 {
                            let t = StratumCounts::new(a, b, c, d);
                            assert_eq!(
                                tight_oest_stratum(&t, beta),
                                grid_max_tau(&t, beta),
                                "{t:?} beta={beta}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn wracc_values() {
        // p(σ) = 0.5, p(y|σ) = 0.75, p(y) = 0.5
        let t = StratumCounts::new(3, 1, 1, 3);
        assert_eq!(wracc(&t, false), 0.125);
        let root = StratumCounts::new(4, 4, 0, 0);
        assert_eq!(wracc(&root, false), 0.0);
        assert_eq!(wracc(&StratumCounts::new(0, 0, 4, 4), true), 0.0);
    }

    #[test]
    fn beta_validation() {
        assert!(ScoreParams::new("1").beta(-1.0).validate().is_err());
        assert!(ScoreParams::new("1").beta(f64::NAN).validate().is_err());
        assert!(ScoreParams::new("1").validate().is_ok());
    }
}

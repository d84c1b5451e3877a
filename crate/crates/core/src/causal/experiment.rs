//! Simulation studies of the estimators on samples drawn from a model:
//! spread of the estimates, quality of the maximizers, recovery of the
//! true rule and the effect of the penalty.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::scm::{Condition, DiscreteScm};
use crate::data::{Dataset, StratumIndex};
use crate::error::{Error, Result};
use crate::lang::{Pool, Rule, DEFAULT_MAX_DEPTH};
use crate::score::{Scorer, DEFAULT_BETA};
use crate::search::{exhaustive_topk, search_with_scorer, SearchConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Mean and spread of both estimators for one fixed rule.
    Variance,
    /// Population effect of the rule each estimator selects.
    Generalisation,
    /// Squared error of the selected rule's population effect.
    Mse,
    /// How often each measure selects the true rule.
    Recovery,
    /// Squared error of the reliable maximizer across penalties.
    BetaSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Variance,
        ExperimentKind::Generalisation,
        ExperimentKind::Mse,
        ExperimentKind::Recovery,
        ExperimentKind::BetaSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Variance => "variance",
            ExperimentKind::Generalisation => "generalisation",
            ExperimentKind::Mse => "mse",
            ExperimentKind::Recovery => "recovery",
            ExperimentKind::BetaSweep => "beta-sweep",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown experiment `{s}` (expected one of variance, generalisation, mse, recovery, beta-sweep)"
                ))
            })
    }
}

/// Penalties for the z-scores of two-sided 50, 60, 70, 80, 90 and 99%
/// confidence intervals.
pub fn default_betas() -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    [0.50, 0.60, 0.70, 0.80, 0.90, 0.99]
        .iter()
        .map(|c| normal.inverse_cdf(0.5 + c / 2.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub beta: f64,
    pub max_depth: usize,
    pub betas: Vec<f64>,
}

impl ExperimentConfig {
    /// Sample sizes 100 to 3000 in steps of 100.
    pub fn full(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            n_grid: (1..=30).map(|i| i * 100).collect(),
            repetitions: match kind {
                ExperimentKind::Variance | ExperimentKind::Generalisation => 25,
                _ => 100,
            },
            seed: 0,
            beta: DEFAULT_BETA,
            max_depth: DEFAULT_MAX_DEPTH,
            betas: default_betas(),
        }
    }

    /// Sample sizes 100, 500, 1000 and 3000 with 25 repetitions.
    pub fn fast() -> Self {
        ExperimentConfig {
            n_grid: vec![100, 500, 1000, 3000],
            repetitions: 25,
            seed: 0,
            beta: DEFAULT_BETA,
            max_depth: DEFAULT_MAX_DEPTH,
            betas: default_betas(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::config("sample sizes must be positive"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sample sizes must be strictly increasing"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth must be at least 1"));
        }
        if std::iter::once(&self.beta)
            .chain(&self.betas)
            .any(|b| !(b.is_finite() && *b >= 0.0))
        {
            return Err(Error::config("penalties must be finite and non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub measure: String,
    pub value: f64,
    pub stddev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Tab-separated table with header `N measure value stddev`; floats
    /// keep full precision.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("N\tmeasure\tvalue\tstddev\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{:?}\t{:?}", r.n, r.measure, r.value, r.stddev).unwrap();
        }
        out
    }

    /// Rows of one measure, in grid order.
    pub fn series(&self, measure: &str) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.measure == measure).collect()
    }
}

/// Independent, reproducible random stream for one repetition at one size.
pub fn repetition_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One sample with its rule pool and scorers.
pub struct Trial {
    pub data: Dataset,
    pub pool: Pool,
    pub strata: StratumIndex,
    pub scm_outcome: String,
}

impl Trial {
    pub fn draw(scm: &DiscreteScm, n: usize, seed: u64, rep: usize) -> Result<Self> {
        let data = scm.sample_with(n, &mut repetition_rng(seed, n, rep))?;
        let pool = Pool::from_dataset(&data, crate::data::DEFAULT_MAX_BINS)?;
        let strata = StratumIndex::build(&data)?;
        Ok(Trial {
            data,
            pool,
            strata,
            scm_outcome: scm.outcome().to_owned(),
        })
    }

    /// Scorer with Laplace correction, stratified by the model's controls
    /// or, with `stratified = false`, over a single stratum.
    pub fn scorer(&self, beta: f64, stratified: bool) -> Result<Scorer> {
        let outcome = self.data.outcome_mask(&self.scm_outcome)?;
        let idx = if stratified {
            self.strata.clone()
        } else {
            StratumIndex::unconditioned(self.data.n_rows())
        };
        Ok(Scorer::from_outcome(outcome, &idx, beta, true))
    }

    /// Top rule by the scorer's reliable estimate.
    pub fn maximize(&self, scorer: &Scorer, max_depth: usize) -> Result<Option<Rule>> {
        let cfg = SearchConfig::new(
            crate::score::ScoreParams::new(self.scm_outcome.clone()).beta(scorer.beta()),
        )
        .max_depth(max_depth);
        let result = search_with_scorer(&self.pool, scorer, &cfg)?;
        Ok(result.top.into_iter().next().map(|s| s.rule))
    }

    pub fn conditions(&self, rule: &Rule) -> Vec<Condition> {
        self.pool.conditions(rule).map(Condition::from).collect()
    }

    /// The pool rule matching a list of equality conditions, if every
    /// condition is available in this sample.
    pub fn find_rule(&self, conditions: &[Condition]) -> Option<Rule> {
        let mut indices = Vec::new();
        for c in conditions {
            let i = self
                .pool
                .props()
                .iter()
                .position(|p| Condition::from(p) == *c)?;
            indices.push(i);
        }
        indices.sort_unstable();
        self.pool.rule(&indices).ok()
    }
}

/// Population effects memoized by rule, shared across repetitions.
struct EffectCache<'a> {
    scm: &'a DiscreteScm,
    cache: Mutex<HashMap<Vec<Condition>, f64>>,
}

impl<'a> EffectCache<'a> {
    fn new(scm: &'a DiscreteScm) -> Self {
        EffectCache {
            scm,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Effect of a selected rule; a rule with a degenerate policy (e.g. one
    /// covering the whole population) has no effect and scores 0.
    fn effect(&self, rule: &[Condition]) -> f64 {
        let mut key = rule.to_vec();
        key.sort_by(|a, b| (&a.variable, &a.value).cmp(&(&b.variable, &b.value)));
        if let Some(&e) = self.cache.lock().expect("cache lock").get(&key) {
            return e;
        }
        let e = self.scm.population_effect(&key).unwrap_or(0.0);
        self.cache.lock().expect("cache lock").insert(key, e);
        e
    }
}

/// Runs `per_rep` for every repetition at every grid size, in parallel,
/// and returns the outputs ordered by size then repetition.
fn over_grid<T, F>(scm: &DiscreteScm, cfg: &ExperimentConfig, per_rep: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&Trial) -> Result<T> + Sync,
{
    cfg.n_grid
        .iter()
        .map(|&n| {
            (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| per_rep(&Trial::draw(scm, n, cfg.seed, rep)?))
                .collect::<Result<Vec<T>>>()
        })
        .collect()
}

pub fn run_experiment(
    kind: ExperimentKind,
    scm: &DiscreteScm,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    match kind {
        ExperimentKind::Variance => {
            let rule = variance_rule(scm);
            run_variance(scm, &rule, cfg)
        }
        ExperimentKind::Generalisation => run_generalisation(scm, cfg),
        ExperimentKind::Mse => run_mse_experiment(scm, cfg),
        ExperimentKind::Recovery => run_recovery_experiment(scm, cfg),
        ExperimentKind::BetaSweep => run_beta_sweep(scm, cfg),
    }
}

/// The best rule extended by one equality on every other actionable
/// variable, alternating values: a specific rule whose extra conditions
/// are noise on the fig4 preset.
pub fn variance_rule(scm: &DiscreteScm) -> Vec<Condition> {
    use super::graph::NodeRole;
    let g = scm.graph();
    let xs = g.with_role(NodeRole::Actionable);
    let pattern = ["1", "0", "1", "1", "0", "0"];
    xs.iter()
        .enumerate()
        .map(|(i, &v)| {
            let dom = scm.domain(v);
            let want = pattern[i % pattern.len()];
            let value = dom.iter().find(|d| *d == want).unwrap_or(&dom[0]);
            Condition::eq(g.name(v), value.clone())
        })
        .collect()
}

/// Reliable and plug-in estimates of one fixed rule, mean and sample
/// standard deviation per size, plus its population effect.
pub fn run_variance(
    scm: &DiscreteScm,
    rule: &[Condition],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let truth = scm.population_effect(rule)?;
    let estimates = over_grid(scm, cfg, |t| {
        let ext = match t.find_rule(rule) {
            Some(r) => t.pool.extension(&r),
            None => crate::rowset::RowSet::empty(t.data.n_rows()),
        };
        let reliable = t.scorer(cfg.beta, true)?.reliable(&ext)?;
        let plugin = t.scorer(cfg.beta, true)?.plugin(&ext)?;
        Ok((reliable, plugin))
    })?;
    let mut rows = Vec::new();
    for (&n, reps) in cfg.n_grid.iter().zip(&estimates) {
        let (r, p): (Vec<f64>, Vec<f64>) = reps.iter().copied().unzip();
        rows.push(row(n, "population", truth, 0.0));
        let (m, s) = mean_std(&r);
        rows.push(row(n, "reliable", m, s));
        let (m, s) = mean_std(&p);
        rows.push(row(n, "plugin", m, s));
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::Variance,
        rows,
    })
}

fn row(n: usize, measure: &str, value: f64, stddev: f64) -> ReportRow {
    ReportRow {
        n,
        measure: measure.to_owned(),
        value,
        stddev,
    }
}

/// Population effects of the reliable and plug-in maximizers on each
/// sample.
fn maximizer_effects(
    scm: &DiscreteScm,
    cfg: &ExperimentConfig,
    betas: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let cache = EffectCache::new(scm);
    over_grid(scm, cfg, |t| {
        let base = t.scorer(0.0, true)?;
        betas
            .iter()
            .map(|&beta| {
                let top = t.maximize(&base.with_beta(beta), cfg.max_depth)?;
                Ok(top.map_or(0.0, |r| cache.effect(&t.conditions(&r))))
            })
            .collect()
    })
}

/// Mean population effect of the rule selected by the reliable and by the
/// plug-in estimator, against the best effect in the language.
pub fn run_generalisation(scm: &DiscreteScm, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (_, best) = scm.best_rule(cfg.max_depth)?;
    let effects = maximizer_effects(scm, cfg, &[cfg.beta, 0.0])?;
    let mut rows = Vec::new();
    for (&n, reps) in cfg.n_grid.iter().zip(&effects) {
        rows.push(row(n, "best", best, 0.0));
        for (i, name) in ["reliable", "plugin"].iter().enumerate() {
            let xs: Vec<f64> = reps.iter().map(|r| r[i]).collect();
            let (m, s) = mean_std(&xs);
            rows.push(row(n, name, m, s));
        }
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::Generalisation,
        rows,
    })
}

fn squared_errors(reps: &[Vec<f64>], i: usize, best: f64) -> (f64, f64) {
    let errs: Vec<f64> = reps.iter().map(|r| (r[i] - best).powi(2)).collect();
    mean_std(&errs)
}

/// Mean squared error between the population effect of each estimator's
/// maximizer and the best population effect. The plug-in estimator is
/// Laplace-corrected, i.e. the reliable estimator at `beta = 0`.
pub fn run_mse_experiment(scm: &DiscreteScm, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (_, best) = scm.best_rule(cfg.max_depth)?;
    let effects = maximizer_effects(scm, cfg, &[cfg.beta, 0.0])?;
    let mut rows = Vec::new();
    for (&n, reps) in cfg.n_grid.iter().zip(&effects) {
        for (i, name) in ["reliable", "plugin"].iter().enumerate() {
            let (m, s) = squared_errors(reps, i, best);
            rows.push(row(n, name, m, s));
        }
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::Mse,
        rows,
    })
}

/// Mean squared error of the reliable maximizer for each penalty in
/// `cfg.betas`; measures are labelled `beta=<value>`.
pub fn run_beta_sweep(scm: &DiscreteScm, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (_, best) = scm.best_rule(cfg.max_depth)?;
    let effects = maximizer_effects(scm, cfg, &cfg.betas)?;
    let mut rows = Vec::new();
    for (&n, reps) in cfg.n_grid.iter().zip(&effects) {
        for (i, beta) in cfg.betas.iter().enumerate() {
            let (m, s) = squared_errors(reps, i, best);
            rows.push(row(n, &format!("beta={beta:.4}"), m, s));
        }
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::BetaSweep,
        rows,
    })
}

/// Fraction of samples on which each measure's top rule is the rule with
/// the best population effect. Measures: `reliable` (stratified, penalized),
/// `wracc` (Laplace-corrected, unstratified) and `plugin_no_controls`
/// (Laplace-corrected plug-in over a single stratum). The stddev column is
/// the binomial standard error.
pub fn run_recovery_experiment(
    scm: &DiscreteScm,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (truth, _) = scm.best_rule(cfg.max_depth)?;
    let hits = over_grid(scm, cfg, |t| {
        let Some(target) = t.find_rule(&truth) else {
            return Ok([false; 3]);
        };
        let reliable = t.maximize(&t.scorer(cfg.beta, true)?, cfg.max_depth)?;
        let flat = t.scorer(0.0, false)?;
        let plugin = t.maximize(&flat, cfg.max_depth)?;
        let wracc = exhaustive_topk(&t.pool, 1, cfg.max_depth, |ext| flat.wracc(ext))
            .into_iter()
            .next()
            .map(|(r, _)| r);
        Ok([reliable, wracc, plugin].map(|r| r.as_ref() == Some(&target)))
    })?;
    let mut rows = Vec::new();
    for (&n, reps) in cfg.n_grid.iter().zip(&hits) {
        for (i, name) in ["reliable", "wracc", "plugin_no_controls"]
            .iter()
            .enumerate()
        {
            let p = reps.iter().filter(|h| h[i]).count() as f64 / reps.len() as f64;
            rows.push(row(n, name, p, (p * (1.0 - p) / reps.len() as f64).sqrt()));
        }
    }
    Ok(ExperimentReport {
        kind: ExperimentKind::Recovery,
        rows,
    })
}

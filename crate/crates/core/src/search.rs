//! Best-first branch-and-bound search for the top-k rules by reliable
//! effect, and an exhaustive counterpart for arbitrary measures.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, StratumIndex};
use crate::error::{Error, Result};
use crate::lang::{Pool, Rule, DEFAULT_MAX_DEPTH};
use crate::rowset::RowSet;
use crate::score::{ScoreParams, ScoredRule, Scorer};

/// Children lists shorter than this are scored on the calling thread.
const PAR_THRESHOLD: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: usize,
    /// Approximation factor in (0, 1]; 1 gives the exact top-k.
    pub gamma: f64,
    pub max_depth: usize,
    pub params: ScoreParams,
}

impl SearchConfig {
    pub fn new(params: ScoreParams) -> Self {
        SearchConfig {
            k: 1,
            gamma: 1.0,
            max_depth: DEFAULT_MAX_DEPTH,
            params,
        }
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth must be at least 1"));
        }
        if !self.params.laplace {
            // the optimistic bound is derived for the corrected estimator
            return Err(Error::config(
                "search requires the Laplace-corrected estimator",
            ));
        }
        self.params.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchNode {
    pub rule: Rule,
    /// Optimistic bound of the rule, fixed when the node is created.
    pub bound: f64,
    pub depth: usize,
}

/// Whether a node can be discarded given the current k-th best score.
///
/// A node is kept when `gamma * bound` reaches the threshold, ties
/// included: an equal-scoring descendant may still displace the k-th entry
/// through the rule-order tie-break.
pub fn prune_test(node: &SearchNode, kth_best: f64, gamma: f64) -> bool {
    gamma * node.bound < kth_best
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_pruned: u64,
    /// Rules scored, the root included.
    pub nodes_evaluated: u64,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub top: Vec<ScoredRule>,
    pub stats: SearchStats,
    pub k: usize,
    pub gamma: f64,
}

struct Entry {
    score: f64,
    rule: Rule,
    ext: RowSet,
}

/// Bounded list of the best rules, one per distinct extension.
///
/// Rules with the same extension have the same score under every measure
/// here, so only the first in rule order is kept. Entries are ordered by
/// score, then rule order.
struct TopK {
    k: usize,
    entries: Vec<Entry>,
}

impl TopK {
    fn new(k: usize) -> Self {
        TopK {
            k,
            entries: Vec::with_capacity(k + 1),
        }
    }

    fn threshold(&self) -> f64 {
        if self.entries.len() < self.k {
            f64::NEG_INFINITY
        } else {
            self.entries[self.k - 1].score
        }
    }

    fn ranks_before(score: f64, rule: &Rule, e: &Entry) -> bool {
        match score.total_cmp(&e.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => rule < &e.rule,
        }
    }

    fn offer(&mut self, score: f64, rule: &Rule, ext: &RowSet) {
        if self.entries.len() == self.k {
            let last = self.entries.last().expect("k >= 1");
            if !Self::ranks_before(score, rule, last) {
                return;
            }
        }
        if let Some(i) = self.entries.iter().position(|e| &e.ext == ext) {
            if rule < &self.entries[i].rule {
                self.entries.remove(i);
            } else {
                return;
            }
        }
        let at = self
            .entries
            .partition_point(|e| !Self::ranks_before(score, rule, e));
        self.entries.insert(
            at,
            Entry {
                score,
                rule: rule.clone(),
                ext: ext.clone(),
            },
        );
        self.entries.truncate(self.k);
    }
}

struct QueueItem {
    bound: f64,
    rule: Rule,
    ext: RowSet,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueItem {}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueItem {
    // max-heap: larger bound first, then the earlier rule
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.rule.cmp(&self.rule))
    }
}

/// Top-k rules by reliable effect within `max_depth` conditions.
///
/// With `gamma = 1` the result is exact: no rule outside it ranks before
/// any rule inside it. With `gamma < 1` subtrees whose bound is within a
/// factor `gamma` of the threshold are skipped. The empty rule is scored
/// but never reported. Rules with identical extensions are reported once,
/// by their first representative in rule order.
///
/// The result does not depend on the number of worker threads.
pub fn discover_topk(
    ds: &Dataset,
    idx: &StratumIndex,
    pool: &Pool,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let scorer = Scorer::new(ds, idx, &cfg.params)?;
    search_with_scorer(pool, &scorer, cfg)
}

/// [`discover_topk`] with a prebuilt scorer; `cfg.params` is only
/// validated, the scorer's own penalty is used.
pub fn search_with_scorer(
    pool: &Pool,
    scorer: &Scorer,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    if !scorer.laplace() {
        return Err(Error::config(
            "search requires the Laplace-corrected estimator",
        ));
    }
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let mut top = TopK::new(cfg.k);
    let mut queue = BinaryHeap::new();

    let root = Rule::root();
    let root_ext = pool.extension(&root);
    let (_, root_bound) = scorer.reliable_and_oest(&root_ext);
    stats.nodes_evaluated += 1;
    queue.push(QueueItem {
        bound: root_bound,
        rule: root,
        ext: root_ext,
    });

    while let Some(item) = queue.pop() {
        let depth = item.rule.len();
        let node = SearchNode {
            rule: item.rule,
            bound: item.bound,
            depth,
        };
        if prune_test(&node, top.threshold(), cfg.gamma) {
            stats.nodes_pruned += 1;
            continue;
        }
        stats.nodes_expanded += 1;

        let indices: Vec<usize> = pool.refinement_indices(&node.rule).collect();
        let evaluate = |&i: &usize| {
            let ext = item.ext.intersection(pool.mask(i));
            let (score, bound) = scorer.reliable_and_oest(&ext);
            (i, ext, score, bound)
        };
        let children: Vec<_> = if indices.len() >= PAR_THRESHOLD {
            indices.par_iter().map(evaluate).collect()
        } else {
            indices.iter().map(evaluate).collect()
        };
        stats.nodes_evaluated += children.len() as u64;

        for (i, ext, score, bound) in children {
            let rule = pool.child(&node.rule, i);
            top.offer(score, &rule, &ext);
            if depth + 1 >= cfg.max_depth {
                continue;
            }
            let child = SearchNode {
                rule,
                bound,
                depth: depth + 1,
            };
            if prune_test(&child, top.threshold(), cfg.gamma) {
                stats.nodes_pruned += 1;
            } else {
                queue.push(QueueItem {
                    bound,
                    rule: child.rule,
                    ext,
                });
            }
        }
    }

    let top = top
        .entries
        .iter()
        .map(|e| scorer.score_extension(pool, &e.rule, &e.ext))
        .collect::<Result<Vec<_>>>()?;
    stats.wall_time_secs = start.elapsed().as_secs_f64();
    debug!(
        "search finished: {} expanded, {} pruned, {} evaluated",
        stats.nodes_expanded, stats.nodes_pruned, stats.nodes_evaluated
    );
    Ok(SearchResult {
        top,
        stats,
        k: cfg.k,
        gamma: cfg.gamma,
    })
}

/// Top-k of an arbitrary measure by scoring every non-empty rule up to
/// `max_depth` conditions, with the same ordering and extension
/// deduplication as [`discover_topk`].
pub fn exhaustive_topk<F>(pool: &Pool, k: usize, max_depth: usize, measure: F) -> Vec<(Rule, f64)>
where
    F: Fn(&RowSet) -> f64,
{
    let mut top = TopK::new(k.max(1));
    let mut stack = vec![(Rule::root(), pool.extension(&Rule::root()))];
    while let Some((rule, ext)) = stack.pop() {
        if rule.len() >= max_depth {
            continue;
        }
        for i in pool.refinement_indices(&rule) {
            let child = pool.child(&rule, i);
            let child_ext = ext.intersection(pool.mask(i));
            top.offer(measure(&child_ext), &child, &child_ext);
            stack.push((child, child_ext));
        }
    }
    top.entries.into_iter().map(|e| (e.rule, e.score)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(bound: f64) -> SearchNode {
        SearchNode {
            rule: Rule::root(),
            bound,
            depth: 0,
        }
    }

    #[test]
    fn prune_examples() {
        assert!(prune_test(&node(0.4), 0.5, 1.0));
        assert!(!prune_test(&node(0.6), 0.5, 1.0));
        assert!(prune_test(&node(0.6), 0.5, 0.8));
        assert!(!prune_test(&node(0.6), f64::NEG_INFINITY, 0.5));
    }

    #[test]
    fn config_validation() {
        let p = ScoreParams::new("1");
        assert!(SearchConfig::new(p.clone()).validate().is_ok());
        assert!(SearchConfig::new(p.clone()).k(0).validate().is_err());
        assert!(SearchConfig::new(p.clone()).gamma(0.0).validate().is_err());
        assert!(SearchConfig::new(p.clone()).gamma(1.5).validate().is_err());
        assert!(SearchConfig::new(p.clone())
            .max_depth(0)
            .validate()
            .is_err());
        assert!(SearchConfig::new(p.laplace(false)).validate().is_err());
    }

    #[test]
    fn topk_orders_and_dedups() {
        let ext_a = RowSet::from_indices(4, [0, 1]);
        let ext_b = RowSet::from_indices(4, [2]);
        let mut top = TopK::new(2);
        let r = |p: &[usize]| -> Rule { serde_json::from_str(&format!("{p:?}")).unwrap() };
        top.offer(0.5, &r(&[3]), &ext_a);
        top.offer(0.5, &r(&[1, 2]), &ext_a);
        assert_eq!(top.entries.len(), 1);
        top.offer(0.5, &r(&[2]), &ext_a);
        assert_eq!(top.entries[0].rule, r(&[2]));
        top.offer(0.7, &r(&[4]), &ext_b);
        assert_eq!(top.entries[0].rule, r(&[4]));
        assert_eq!(top.threshold(), 0.5);
        top.offer(0.1, &r(&[0]), &RowSet::empty(4));
        assert_eq!(top.entries.len(), 2);
    }
}

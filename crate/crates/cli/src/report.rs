//! Rendering of command results as tables, TSV and JSON.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use causal_rules::causal::{
    blocks_all_spurious, check_admissible, collider_warnings, open_spurious_paths, Admissibility,
    CausalGraph, NodeRole,
};
use causal_rules::search::SearchStats;
use causal_rules::{Dataset, Pool, SearchConfig, SearchResult, StratumIndex};

pub struct Context<'a> {
    pub data: &'a Path,
    pub ds: &'a Dataset,
    pub idx: &'a StratumIndex,
    pub pool: &'a Pool,
    pub cfg: &'a SearchConfig,
    pub unicode: bool,
}

/// Everything `discover --format json` prints. Reading it back yields the
/// same search result.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DiscoverReport {
    pub data: String,
    pub n_rows: usize,
    pub n_propositions: usize,
    pub n_strata: usize,
    pub config: SearchConfig,
    pub result: SearchResult,
}

const APPROX_NOTE: &str = "note: gamma < 1, the result is approximate; \
    a rule that was missed scores at most max(kth, kth / gamma), kth being the last score above";

fn describe(ctx: &Context<'_>, result: &SearchResult, i: usize) -> String {
    let scored = &result.top[i];
    if ctx.unicode {
        ctx.pool.render(&scored.rule, true)
    } else {
        scored.description.clone()
    }
}

pub fn discover_table(ctx: &Context<'_>, result: &SearchResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:>9}  {:>9}  {:>8}  rule",
        "rank", "reliable", "plugin", "coverage"
    );
    for (i, scored) in result.top.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4}  {:>9.4}  {:>9.4}  {:>8.4}  {}",
            i + 1,
            scored.reliable,
            scored.plugin,
            scored.coverage,
            describe(ctx, result, i)
        );
    }
    if result.top.is_empty() {
        out.push_str("no rule with a non-empty complement was found\n");
    }
    let s = &result.stats;
    let _ = writeln!(
        out,
        "\n{} rows, {} propositions, {} strata; expanded {}, pruned {}, evaluated {} in {:.3}s",
        ctx.ds.n_rows(),
        ctx.pool.len(),
        ctx.idx.observed_strata_count(),
        s.nodes_expanded,
        s.nodes_pruned,
        s.nodes_evaluated,
        s.wall_time_secs
    );
    if result.gamma < 1.0 {
        out.push_str(APPROX_NOTE);
        out.push('\n');
    }
    out
}

pub fn discover_json(ctx: &Context<'_>, result: &SearchResult) -> Result<String> {
    let report = DiscoverReport {
        data: ctx.data.display().to_string(),
        n_rows: ctx.ds.n_rows(),
        n_propositions: ctx.pool.len(),
        n_strata: ctx.idx.observed_strata_count(),
        config: ctx.cfg.clone(),
        result: result.clone(),
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

/// Full precision so that reruns can be compared byte for byte.
pub fn discover_tsv(ctx: &Context<'_>, result: &SearchResult) -> String {
    let mut out = String::from("rank\treliable\tplugin\tcoverage\trule\n");
    for (i, scored) in result.top.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{:?}\t{:?}\t{:?}\t{}",
            i + 1,
            scored.reliable,
            scored.plugin,
            scored.coverage,
            describe(ctx, result, i)
        );
    }
    out
}

pub fn bench_table(
    runs: &[(usize, SearchStats)],
    gamma: f64,
    n_props: usize,
    n_rows: usize,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{n_rows} rows, {n_props} propositions, gamma = {gamma}"
    );
    let _ = writeln!(
        out,
        "{:>5}  {:>10}  {:>10}  {:>10}  {:>9}",
        "k", "expanded", "pruned", "evaluated", "seconds"
    );
    for (k, s) in runs {
        let _ = writeln!(
            out,
            "{:>5}  {:>10}  {:>10}  {:>10}  {:>9.4}",
            k, s.nodes_expanded, s.nodes_pruned, s.nodes_evaluated, s.wall_time_secs
        );
    }
    out
}

#[derive(Serialize)]
struct BenchRow<'a> {
    k: usize,
    gamma: f64,
    #[serde(flatten)]
    stats: &'a SearchStats,
}

pub fn bench_json(runs: &[(usize, SearchStats)], gamma: f64) -> Result<String> {
    let rows: Vec<_> = runs
        .iter()
        .map(|(k, stats)| BenchRow {
            k: *k,
            gamma,
            stats,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

pub fn bench_tsv(runs: &[(usize, SearchStats)], gamma: f64) -> String {
    let mut out = String::from("k\tgamma\texpanded\tpruned\tevaluated\tseconds\n");
    for (k, s) in runs {
        let _ = writeln!(
            out,
            "{k}\t{gamma:?}\t{}\t{}\t{}\t{:?}",
            s.nodes_expanded, s.nodes_pruned, s.nodes_evaluated, s.wall_time_secs
        );
    }
    out
}

/// Above this many actionable variables only singletons and the full set
/// are checked for blocking.
const MAX_SUBSET_VARS: usize = 10;

#[derive(Debug, Serialize)]
pub struct SubsetCheck {
    pub actionable: Vec<String>,
    pub blocked: bool,
    pub open_paths: Vec<Vec<String>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct GraphSummary {
    #[serde(flatten)]
    pub admissibility: Admissibility,
    pub controls: Vec<String>,
    pub subsets: Vec<SubsetCheck>,
}

impl GraphSummary {
    pub fn new(g: &CausalGraph) -> Self {
        let admissibility = check_admissible(g);
        let xs = g.with_role(NodeRole::Actionable);
        let zs = g.with_role(NodeRole::Control);
        let y = g.target();
        let subsets: Vec<Vec<usize>> = if xs.len() <= MAX_SUBSET_VARS {
            (1u32..1 << xs.len())
                .map(|bits| {
                    xs.iter()
                        .enumerate()
                        .filter(|(i, _)| bits >> i & 1 == 1)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect()
        } else {
            xs.iter()
                .map(|&x| vec![x])
                .chain(std::iter::once(xs.clone()))
                .collect()
        };
        let mut subsets: Vec<SubsetCheck> = subsets
            .into_iter()
            .map(|set| SubsetCheck {
                actionable: set.iter().map(|&v| g.name(v).to_owned()).collect(),
                blocked: blocks_all_spurious(g, &set, y, &zs),
                open_paths: open_spurious_paths(g, &set, y, &zs),
                warnings: collider_warnings(g, &set, y, &zs),
            })
            .collect();
        subsets.sort_by(|a, b| {
            (a.actionable.len(), &a.actionable).cmp(&(b.actionable.len(), &b.actionable))
        });
        GraphSummary {
            admissibility,
            controls: zs.iter().map(|&v| g.name(v).to_owned()).collect(),
            subsets,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.admissibility.admissible {
            out.push_str("admissible\n");
        } else {
            out.push_str("not admissible\n");
            for v in &self.admissibility.violations {
                let _ = writeln!(out, "  {v}");
            }
        }
        let _ = writeln!(out, "controls: {{{}}}", self.controls.join(", "));
        let blocked = self.subsets.iter().filter(|s| s.blocked).count();
        let _ = writeln!(
            out,
            "controls block every spurious path for {blocked} of {} actionable subsets",
            self.subsets.len()
        );
        for s in &self.subsets {
            if s.blocked && s.warnings.is_empty() {
                continue;
            }
            let _ = writeln!(
                out,
                "  {{{}}}: {}",
                s.actionable.join(", "),
                if s.blocked { "blocked" } else { "open" }
            );
            for path in &s.open_paths {
                let _ = writeln!(out, "    open path {}", path.join(" - "));
            }
            for w in &s.warnings {
                let _ = writeln!(out, "    warning: {w}");
            }
        }
        out
    }
}

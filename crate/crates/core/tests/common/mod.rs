//! Random inputs and independent reference implementations shared by the
//! integration tests. Nothing here calls the library's scoring, bounding or
//! enumeration code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use causal_rules::data::ColumnData;
use causal_rules::lang::Relation;
use causal_rules::{Dataset, Pool, Role, Rule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn titanic_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/titanic.csv")
}

/// Laplace-corrected penalized difference for one stratum, from its counts.
pub fn tau_ref(a: u64, b: u64, c: u64, d: u64, beta: f64) -> f64 {
    let (a, b, c, d) = (a as f64, b as f64, c as f64, d as f64);
    let (ns, nb) = (a + b, c + d);
    (a + 1.0) / (ns + 2.0)
        - (c + 1.0) / (nb + 2.0)
        - beta / (2.0 * (ns + 2.0).sqrt())
        - beta / (2.0 * (nb + 2.0).sqrt())
}

/// Largest `tau_ref` over every sub-rule that keeps `a2 <= a` positives and
/// `b2 <= b` negatives of the rule; the rest move to the complement.
pub fn grid_max_ref(a: u64, b: u64, c: u64, d: u64, beta: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for a2 in 0..=a {
        for b2 in 0..=b {
            best = best.max(tau_ref(a2, b2, c + a - a2, d + b - b2, beta));
        }
    }
    best
}

/// Labels of the control cells of each row, used as stratum keys.
fn control_key(ds: &Dataset, row: usize) -> Vec<String> {
    ds.controls()
        .into_iter()
        .map(|c| ds.column(c).display(row).expect("controls are complete"))
        .collect()
}

fn is_outcome(ds: &Dataset, row: usize, outcome: &str) -> bool {
    ds.column(ds.schema().target()).display(row).as_deref() == Some(outcome)
}

pub fn rule_holds(ds: &Dataset, pool: &Pool, rule: &Rule, row: usize) -> bool {
    rule.props().iter().all(|&i| pool.get(i).holds_at(ds, row))
}

/// Per-stratum `(a, b, c, d)` of a rule, keyed by control values.
pub fn stratum_counts(
    ds: &Dataset,
    member: impl Fn(usize) -> bool,
    outcome: &str,
) -> BTreeMap<Vec<String>, [u64; 4]> {
    let mut out: BTreeMap<Vec<String>, [u64; 4]> = BTreeMap::new();
    for row in 0..ds.n_rows() {
        let cell = out.entry(control_key(ds, row)).or_default();
        let slot = match (member(row), is_outcome(ds, row, outcome)) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        cell[slot] += 1;
    }
    out
}

/// Stratified reliable estimate with corrected stratum weights.
pub fn reliable_ref(ds: &Dataset, member: impl Fn(usize) -> bool, outcome: &str, beta: f64) -> f64 {
    let strata = stratum_counts(ds, member, outcome);
    let n = ds.n_rows() as f64;
    let denom = n + 4.0 * strata.len() as f64;
    strata
        .values()
        .map(|&[a, b, c, d]| {
            let nz = (a + b + c + d) as f64;
            (nz + 4.0) / denom * tau_ref(a, b, c, d, beta)
        })
        .sum()
}

/// Uncorrected stratified estimate, `None` when a stratum has an empty side.
pub fn plain_ref(
    ds: &Dataset,
    member: impl Fn(usize) -> bool,
    outcome: &str,
    beta: f64,
) -> Option<f64> {
    let strata = stratum_counts(ds, member, outcome);
    let n = ds.n_rows() as f64;
    let mut total = 0.0;
    for &[a, b, c, d] in strata.values() {
        let (ns, nb) = ((a + b) as f64, (c + d) as f64);
        if ns == 0.0 || nb == 0.0 {
            return None;
        }
        let t = a as f64 / ns - c as f64 / nb - beta / (2.0 * ns.sqrt()) - beta / (2.0 * nb.sqrt());
        total += (ns + nb) / n * t;
    }
    Some(total)
}

/// Whether a sorted index list is a canonical rule: per column at most one
/// `<=`, at most one `>=`, and `=` only on its own.
pub fn is_canonical(pool: &Pool, props: &[usize]) -> bool {
    if props.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    let mut per_column: HashMap<usize, Vec<Relation>> = HashMap::new();
    for &i in props {
        let p = pool.get(i);
        per_column.entry(p.column).or_default().push(p.relation);
    }
    per_column.values().all(|rels| match rels.as_slice() {
        [_] => true,
        [x, y] => *x != Relation::Eq && *y != Relation::Eq && x != y,
        _ => false,
    })
}

/// Every canonical rule with `1..=max_depth` conditions, found by testing
/// every subset of the pool.
pub fn all_rules(pool: &Pool, max_depth: usize) -> Vec<Vec<usize>> {
    let n = pool.len();
    assert!(n <= 16, "subset enumeration is exponential");
    (1u32..1 << n)
        .map(|bits| (0..n).filter(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|props| props.len() <= max_depth && is_canonical(pool, props))
        .collect()
}

/// Rules ordered by length, then lexicographically.
pub fn shortlex(a: &[usize], b: &[usize]) -> std::cmp::Ordering {
    (a.len(), a).cmp(&(b.len(), b))
}

/// Brute-force top-k: rules with the same extension count once, by their
/// shortlex-least member, and ties in score go to the shortlex-least rule.
pub fn brute_topk(
    ds: &Dataset,
    pool: &Pool,
    max_depth: usize,
    k: usize,
    score: impl Fn(&[bool]) -> f64,
) -> Vec<(Vec<usize>, f64)> {
    let mut classes: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
    for props in all_rules(pool, max_depth) {
        let rule = pool.rule(&props).unwrap();
        let ext: Vec<bool> = (0..ds.n_rows())
            .map(|r| rule_holds(ds, pool, &rule, r))
            .collect();
        classes
            .entry(ext)
            .and_modify(|best| {
                if shortlex(&props, best).is_lt() {
                    *best = props.clone();
                }
            })
            .or_insert(props);
    }
    let mut scored: Vec<(Vec<usize>, f64)> = classes
        .into_iter()
        .map(|(ext, props)| (props, score(&ext)))
        .collect();
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| shortlex(&x.0, &y.0)));
    scored.truncate(k);
    scored
}

/// A small random table: up to three actionable columns (categorical or
/// small-integer numeric), up to two binary controls and a binary target
/// that depends on the first actionable column and the first control.
pub fn random_dataset<R: Rng>(rng: &mut R, max_rows: usize, max_controls: usize) -> Dataset {
    let n = rng.gen_range(8..=max_rows);
    let n_act = rng.gen_range(1..=3);
    let n_ctl = rng.gen_range(0..=max_controls);
    let mut columns = Vec::new();
    let mut signal = vec![0.0; n];
    for j in 0..n_act {
        if rng.gen_bool(0.5) {
            let levels = ["a", "b", "c"];
            let k = rng.gen_range(2..=3);
            let cells: Vec<Option<&str>> = (0..n)
                .map(|_| Some(*levels[..k].choose(rng).unwrap()))
                .collect();
            if j == 0 {
                for (s, c) in signal.iter_mut().zip(&cells) {
                    *s += if *c == Some("a") { 0.3 } else { 0.0 };
                }
            }
            columns.push((
                format!("x{j}"),
                Role::Actionable,
                ColumnData::categorical_from_strings(&cells),
            ));
        } else {
            let values: Vec<Option<f64>> =
                (0..n).map(|_| Some(rng.gen_range(0..3) as f64)).collect();
            if j == 0 {
                for (s, v) in signal.iter_mut().zip(&values) {
                    *s += 0.15 * v.unwrap();
                }
            }
            columns.push((
                format!("x{j}"),
                Role::Actionable,
                ColumnData::Numeric { values },
            ));
        }
    }
    for j in 0..n_ctl {
        let cells: Vec<Option<&str>> = (0..n)
            .map(|_| Some(if rng.gen_bool(0.5) { "p" } else { "q" }))
            .collect();
        if j == 0 {
            for (s, c) in signal.iter_mut().zip(&cells) {
                *s += if *c == Some("p") { 0.2 } else { -0.1 };
            }
        }
        columns.push((
            format!("z{j}"),
            Role::Control,
            ColumnData::categorical_from_strings(&cells),
        ));
    }
    let mut target: Vec<Option<&str>> = signal
        .iter()
        .map(|s| {
            Some(if rng.gen_bool((0.3 + s).clamp(0.05, 0.95)) {
                "1"
            } else {
                "0"
            })
        })
        .collect();
    // both target values must occur
    target[0] = Some("1");
    target[1] = Some("0");
    columns.push((
        "y".to_owned(),
        Role::Target,
        ColumnData::categorical_from_strings(&target),
    ));
    Dataset::from_columns(columns).unwrap()
}

/// Like [`random_dataset`] but redrawn until the pool has at most
/// `max_pool` propositions.
pub fn random_small_problem<R: Rng>(
    rng: &mut R,
    max_rows: usize,
    max_pool: usize,
) -> (Dataset, Pool) {
    loop {
        let ds = random_dataset(rng, max_rows, 2);
        let pool = Pool::from_dataset(&ds, 8).unwrap();
        if !pool.is_empty() && pool.len() <= max_pool {
            return (ds, pool);
        }
    }
}

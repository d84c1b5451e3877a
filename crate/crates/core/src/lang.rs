//! The rule language: propositions over actionable columns, conjunctive
//! rules in canonical form, extensions and the lexicographic refinement
//! operator.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{discretize, format_number, BinnedColumn, ColumnData, Dataset};
use crate::error::{Error, Result};
use crate::rowset::RowSet;

/// Default bound on the number of conditions in a rule.
pub const DEFAULT_MAX_DEPTH: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Leq,
    #[serde(rename = ">=")]
    Geq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropValue {
    Level { code: u32, label: String },
    Threshold(f64),
}

/// A single condition such as `sex = female` or `class <= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proposition {
    /// Position in the pool; defines the global lexicographic order.
    pub index: usize,
    pub column: usize,
    pub column_name: String,
    pub relation: Relation,
    pub value: PropValue,
}

impl Proposition {
    /// Evaluates the condition on a printed cell value.
    pub fn holds_for_label(&self, label: &str) -> bool {
        match (&self.value, self.relation) {
            (PropValue::Level { label: l, .. }, _) => l == label,
            (PropValue::Threshold(t), rel) => match label.trim().parse::<f64>() {
                Ok(x) if rel == Relation::Leq => x <= *t,
                Ok(x) => x >= *t,
                Err(_) => false,
            },
        }
    }

    /// Evaluates the condition on one row. Missing cells never satisfy it.
    pub fn holds_at(&self, ds: &Dataset, row: usize) -> bool {
        match (ds.column(self.column), &self.value) {
            (ColumnData::Categorical { codes, .. }, PropValue::Level { code, .. }) => {
                codes[row] == Some(*code)
            }
            (ColumnData::Numeric { values }, PropValue::Threshold(t)) => match values[row] {
                Some(x) if self.relation == Relation::Leq => x <= *t,
                Some(x) => x >= *t,
                None => false,
            },
            _ => false,
        }
    }

    pub fn render(&self, unicode: bool) -> String {
        let rel = match (self.relation, unicode) {
            (Relation::Eq, _) => "=",
            (Relation::Leq, false) => "<=",
            (Relation::Leq, true) => "≤",
            (Relation::Geq, false) => ">=",
            (Relation::Geq, true) => "≥",
        };
        let value = match &self.value {
            PropValue::Level { label, .. } => label.clone(),
            PropValue::Threshold(t) => format_number(*t),
        };
        format!("{} {rel} {value}", self.column_name)
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(false))
    }
}

/// A conjunction of propositions, stored as strictly increasing pool
/// indices. The empty rule is the root and covers every row.
///
/// Rules are ordered shortest first, then lexicographically by index; this
/// order breaks ties between equal scores and picks the representative of
/// rules with identical extensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rule {
    props: Vec<usize>,
}

impl Rule {
    pub fn root() -> Self {
        Rule::default()
    }

    pub fn props(&self) -> &[usize] {
        &self.props
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_root(&self) -> bool {
        self.props.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_root()
    }

    fn extended(&self, index: usize) -> Rule {
        let mut props = Vec::with_capacity(self.props.len() + 1);
        props.extend_from_slice(&self.props);
        props.push(index);
        Rule { props }
    }
}

impl Ord for Rule {
    fn cmp(&self, other: &Self) -> Ordering {
        self.props
            .len()
            .cmp(&other.props.len())
            .then_with(|| self.props.cmp(&other.props))
    }
}

impl PartialOrd for Rule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The ordered set of propositions available to rules, with their
/// row masks precomputed.
#[derive(Clone, Debug)]
pub struct Pool {
    props: Vec<Proposition>,
    masks: Vec<RowSet>,
    n_rows: usize,
}

impl Pool {
    /// Discretizes numeric actionable columns into at most `max_bins`
    /// equi-frequent bins and builds the pool.
    pub fn from_dataset(ds: &Dataset, max_bins: usize) -> Result<Self> {
        let mut binned = Vec::new();
        for c in ds.actionable() {
            if let ColumnData::Numeric { values } = ds.column(c) {
                let xs: Vec<f64> = values.iter().flatten().copied().collect();
                binned.push((c, discretize(&xs, max_bins)?));
            }
        }
        Self::build(ds, &binned)
    }

    /// One `=` proposition per observed level of each categorical actionable
    /// column; one `<=` and one `>=` per cut point of each numeric one.
    /// Ordered by column, then relation, then value.
    pub fn build(ds: &Dataset, binned: &[(usize, BinnedColumn)]) -> Result<Self> {
        let mut props = Vec::new();
        for c in ds.actionable() {
            let name = ds.name(c).to_owned();
            match ds.column(c) {
                ColumnData::Categorical { levels, codes } => {
                    let mut observed = vec![false; levels.len()];
                    for code in codes.iter().flatten() {
                        observed[*code as usize] = true;
                    }
                    for (code, label) in levels.iter().enumerate() {
                        if observed[code] {
                            props.push((
                                c,
                                name.clone(),
                                Relation::Eq,
                                PropValue::Level {
                                    code: code as u32,
                                    label: label.clone(),
                                },
                            ));
                        }
                    }
                }
                ColumnData::Numeric { .. } => {
                    let bins = binned
                        .iter()
                        .find(|(col, _)| *col == c)
                        .map(|(_, b)| b)
                        .ok_or_else(|| {
                            Error::config(format!("numeric column `{name}` was not discretized"))
                        })?;
                    for &t in &bins.cut_points {
                        props.push((c, name.clone(), Relation::Leq, PropValue::Threshold(t)));
                    }
                    for &t in &bins.upper_starts {
                        props.push((c, name.clone(), Relation::Geq, PropValue::Threshold(t)));
                    }
                }
            }
        }
        let props: Vec<Proposition> = props
            .into_iter()
            .enumerate()
            .map(
                |(index, (column, column_name, relation, value))| Proposition {
                    index,
                    column,
                    column_name,
                    relation,
                    value,
                },
            )
            .collect();
        let n = ds.n_rows();
        let masks = props
            .iter()
            .map(|p| RowSet::from_fn(n, |r| p.holds_at(ds, r)))
            .collect();
        Ok(Pool {
            props,
            masks,
            n_rows: n,
        })
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }

    pub fn props(&self) -> &[Proposition] {
        &self.props
    }

    pub fn get(&self, index: usize) -> &Proposition {
        &self.props[index]
    }

    pub fn mask(&self, index: usize) -> &RowSet {
        &self.masks[index]
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Builds a canonical rule, rejecting unsorted, duplicate or
    /// contradictory/redundant combinations on one column.
    pub fn rule(&self, indices: &[usize]) -> Result<Rule> {
        let mut rule = Rule::root();
        for &i in indices {
            if i >= self.len() {
                return Err(Error::config(format!("proposition index {i} out of range")));
            }
            if !self.can_extend(&rule, i) {
                return Err(Error::config(format!(
                    "`{}` cannot be added to `{}`",
                    self.props[i],
                    self.render(&rule, false)
                )));
            }
            rule = rule.extended(i);
        }
        Ok(rule)
    }

    /// Whether `rule ∧ π_index` is a canonical rule: the index exceeds every
    /// index in the rule, and its column carries at most one `<=`, at most
    /// one `>=`, and no `=` next to another condition.
    pub fn can_extend(&self, rule: &Rule, index: usize) -> bool {
        if rule.props.last().is_some_and(|&last| index <= last) {
            return false;
        }
        let new = &self.props[index];
        // the pool is sorted by column, so same-column conditions are a suffix
        rule.props
            .iter()
            .rev()
            .map(|&i| &self.props[i])
            .take_while(|p| p.column == new.column)
            .all(|p| {
                p.relation != Relation::Eq
                    && new.relation != Relation::Eq
                    && p.relation != new.relation
            })
    }

    /// Indices `i` such that `rule ∧ π_i` is a child of `rule`.
    pub fn refinement_indices<'a>(&'a self, rule: &'a Rule) -> impl Iterator<Item = usize> + 'a {
        let start = rule.props.last().map_or(0, |&l| l + 1);
        (start..self.len()).filter(move |&i| self.can_extend(rule, i))
    }

    pub fn refine(&self, rule: &Rule) -> Vec<Rule> {
        self.refinement_indices(rule)
            .map(|i| rule.extended(i))
            .collect()
    }

    pub fn child(&self, rule: &Rule, index: usize) -> Rule {
        debug_assert!(self.can_extend(rule, index));
        rule.extended(index)
    }

    pub fn extension(&self, rule: &Rule) -> RowSet {
        let mut ext = RowSet::full(self.n_rows);
        for &i in &rule.props {
            ext.intersect_with(&self.masks[i]);
        }
        ext
    }

    pub fn coverage(&self, rule: &Rule) -> f64 {
        if self.n_rows == 0 {
            return 0.0;
        }
        self.extension(rule).count() as f64 / self.n_rows as f64
    }

    /// Conditions joined by `&&` (or `∧` with `unicode`), e.g.
    /// `class <= 2 && sex = female`. The root renders as `true`.
    pub fn render(&self, rule: &Rule, unicode: bool) -> String {
        if rule.is_root() {
            return if unicode { "⊤" } else { "true" }.to_owned();
        }
        let sep = if unicode { " ∧ " } else { " && " };
        rule.props
            .iter()
            .map(|&i| self.props[i].render(unicode))
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn conditions<'a>(&'a self, rule: &'a Rule) -> impl Iterator<Item = &'a Proposition> + 'a {
        rule.props.iter().map(move |&i| &self.props[i])
    }

    /// Every canonical rule with at most `max_depth` conditions, root
    /// included, in depth-first refinement order.
    pub fn enumerate(&self, max_depth: usize) -> Vec<Rule> {
        let mut out = vec![Rule::root()];
        let mut stack = vec![Rule::root()];
        while let Some(r) = stack.pop() {
            if r.len() >= max_depth {
                continue;
            }
            for child in self.refine(&r).into_iter().rev() {
                out.push(child.clone());
                stack.push(child);
            }
        }
        out
    }
}

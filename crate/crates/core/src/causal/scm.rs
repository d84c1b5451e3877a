use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::{CausalGraph, NodeRole};
use crate::data::{ColumnData, Dataset, Role};
use crate::error::{Error, Result};
use crate::lang::{Proposition, Relation};

/// Largest joint state space enumerated exactly.
const MAX_JOINT_STATES: usize = 1 << 22;
const CPT_TOLERANCE: f64 = 1e-12;

/// A condition of a rule evaluated against SCM variables by name and value
/// label, so rules found on samples can be scored on the population.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub variable: String,
    pub relation: Relation,
    pub value: String,
}

impl Condition {
    pub fn eq(variable: impl Into<String>, value: impl Into<String>) -> Self {
        Condition {
            variable: variable.into(),
            relation: Relation::Eq,
            value: value.into(),
        }
    }

    fn holds(&self, label: &str) -> bool {
        match self.relation {
            Relation::Eq => self.value == label,
            rel => match (
                label.trim().parse::<f64>(),
                self.value.trim().parse::<f64>(),
            ) {
                (Ok(x), Ok(t)) if rel == Relation::Leq => x <= t,
                (Ok(x), Ok(t)) => x >= t,
                _ => false,
            },
        }
    }
}

impl From<&Proposition> for Condition {
    fn from(p: &Proposition) -> Self {
        let value = match &p.value {
            crate::lang::PropValue::Level { label, .. } => label.clone(),
            crate::lang::PropValue::Threshold(t) => t.to_string(),
        };
        Condition {
            variable: p.column_name.clone(),
            relation: p.relation,
            value,
        }
    }
}

/// A causal graph over finite-valued variables with one conditional
/// probability table per node.
#[derive(Clone, Debug)]
pub struct DiscreteScm {
    graph: CausalGraph,
    domains: Vec<Vec<String>>,
    /// `cpts[v][config]` is the distribution of `v` given the parent
    /// configuration, encoded mixed-radix with the first parent most
    /// significant.
    cpts: Vec<Vec<Vec<f64>>>,
    outcome: String,
}

#[derive(Serialize, Deserialize)]
struct ScmFile {
    nodes: Vec<ScmFileNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    cpts: BTreeMap<String, Vec<CptRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    outcome: Option<Scalar>,
}

#[derive(Serialize, Deserialize)]
struct ScmFileNode {
    name: String,
    role: NodeRole,
    domain: Vec<Scalar>,
}

#[derive(Serialize, Deserialize)]
struct CptRow {
    #[serde(default)]
    parents: BTreeMap<String, Scalar>,
    probs: Vec<f64>,
}

/// Domain values may be written as JSON strings or numbers.
#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Text(String),
    Int(i64),
    Float(f64),
}

impl Scalar {
    fn label(&self) -> String {
        match self {
            Scalar::Text(s) => s.clone(),
            Scalar::Int(i) => i.to_string(),
            Scalar::Float(x) => x.to_string(),
        }
    }
}

impl DiscreteScm {
    /// Builds a model from per-node domains and tables. `cpts[v]` lists one
    /// distribution per parent configuration in mixed-radix order.
    pub fn new(
        graph: CausalGraph,
        domains: Vec<Vec<String>>,
        cpts: Vec<Vec<Vec<f64>>>,
        outcome: impl Into<String>,
    ) -> Result<Self> {
        if domains.len() != graph.len() || cpts.len() != graph.len() {
            return Err(Error::Scm(
                "one domain and one table per node required".into(),
            ));
        }
        for (v, dom) in domains.iter().enumerate() {
            let name = graph.name(v);
            if dom.is_empty() {
                return Err(Error::Scm(format!("node `{name}` has an empty domain")));
            }
            let mut sorted = dom.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != dom.len() {
                return Err(Error::Scm(format!("node `{name}` repeats a domain value")));
            }
            let configs: usize = graph.parents(v).iter().map(|&p| domains[p].len()).product();
            if cpts[v].len() != configs {
                return Err(Error::Scm(format!(
                    "node `{name}` needs {configs} table rows, got {}",
                    cpts[v].len()
                )));
            }
            for row in &cpts[v] {
                if row.len() != dom.len() {
                    return Err(Error::Scm(format!(
                        "a table row of `{name}` has {} entries for a domain of {}",
                        row.len(),
                        dom.len()
                    )));
                }
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::Scm(format!(
                        "negative or non-finite probability for `{name}`"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > CPT_TOLERANCE {
                    return Err(Error::Scm(format!(
                        "a table row of `{name}` sums to {sum}, not 1"
                    )));
                }
            }
        }
        let outcome = outcome.into();
        if !domains[graph.target()].contains(&outcome) {
            return Err(Error::Scm(format!(
                "outcome `{outcome}` is not in the domain of `{}`",
                graph.name(graph.target())
            )));
        }
        let states: usize = domains.iter().map(Vec::len).product();
        if states > MAX_JOINT_STATES {
            return Err(Error::Scm(format!(
                "joint state space of {states} configurations is too large to enumerate"
            )));
        }
        Ok(DiscreteScm {
            graph,
            domains,
            cpts,
            outcome,
        })
    }

    /// Parses the JSON model format:
    ///
    /// ```json
    /// {"nodes": [{"name": "Z", "role": "control", "domain": ["0", "1"]}, ...],
    ///  "edges": [["Z", "X1"], ...],
    ///  "cpts": {"X1": [{"parents": {"Z": "0"}, "probs": [0.5, 0.5]}, ...]},
    ///  "outcome": "1"}
    /// ```
    ///
    /// `outcome` defaults to the last value of the target's domain.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScmFile = serde_json::from_str(text)?;
        let graph = CausalGraph::new(
            file.nodes
                .iter()
                .map(|n| (n.name.clone(), n.role))
                .collect(),
            &file.edges,
        )?;
        let domains: Vec<Vec<String>> = file
            .nodes
            .iter()
            .map(|n| n.domain.iter().map(Scalar::label).collect())
            .collect();
        let mut cpts = Vec::with_capacity(graph.len());
        for v in 0..graph.len() {
            let name = graph.name(v);
            let rows = file
                .cpts
                .get(name)
                .ok_or_else(|| Error::Scm(format!("no table for node `{name}`")))?;
            let parents = graph.parents(v);
            let configs: usize = parents.iter().map(|&p| domains[p].len()).product();
            let mut table: Vec<Option<Vec<f64>>> = vec![None; configs];
            for row in rows {
                if row.parents.len() != parents.len() {
                    return Err(Error::Scm(format!(
                        "a table row of `{name}` must name exactly its parents"
                    )));
                }
                let mut config = 0;
                for &p in parents {
                    let pname = graph.name(p);
                    let label = row
                        .parents
                        .get(pname)
                        .ok_or_else(|| {
                            Error::Scm(format!("table row of `{name}` lacks parent `{pname}`"))
                        })?
                        .label();
                    let value = domains[p].iter().position(|d| *d == label).ok_or_else(|| {
                        Error::Scm(format!("`{label}` is not a value of `{pname}`"))
                    })?;
                    config = config * domains[p].len() + value;
                }
                if table[config].replace(row.probs.clone()).is_some() {
                    return Err(Error::Scm(format!("duplicate table row for `{name}`")));
                }
            }
            let table = table
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| {
                    Error::Scm(format!("table of `{name}` misses a parent configuration"))
                })?;
            cpts.push(table);
        }
        let outcome = match file.outcome {
            Some(s) => s.label(),
            None => domains[graph.target()].last().cloned().unwrap_or_default(),
        };
        Self::new(graph, domains, cpts, outcome)
    }

    pub fn to_json(&self) -> String {
        let g = &self.graph;
        let nodes = (0..g.len())
            .map(|v| ScmFileNode {
                name: g.name(v).to_owned(),
                role: g.role(v),
                domain: self.domains[v].iter().cloned().map(Scalar::Text).collect(),
            })
            .collect();
        let edges = g
            .edges()
            .map(|(u, v)| (g.name(u).to_owned(), g.name(v).to_owned()))
            .collect();
        let mut cpts = BTreeMap::new();
        for v in 0..g.len() {
            let rows = self.cpts[v]
                .iter()
                .enumerate()
                .map(|(config, probs)| CptRow {
                    parents: self
                        .decode_parents(v, config)
                        .into_iter()
                        .map(|(p, x)| {
                            (
                                g.name(p).to_owned(),
                                Scalar::Text(self.domains[p][x].clone()),
                            )
                        })
                        .collect(),
                    probs: probs.clone(),
                })
                .collect();
            cpts.insert(g.name(v).to_owned(), rows);
        }
        let file = ScmFile {
            nodes,
            edges,
            cpts,
            outcome: Some(Scalar::Text(self.outcome.clone())),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    fn decode_parents(&self, v: usize, mut config: usize) -> Vec<(usize, usize)> {
        let parents = self.graph.parents(v);
        let mut out = vec![(0, 0); parents.len()];
        for (i, &p) in parents.iter().enumerate().rev() {
            let k = self.domains[p].len();
            out[i] = (p, config % k);
            config /= k;
        }
        out
    }

    fn config_of(&self, v: usize, state: &[usize]) -> usize {
        self.graph
            .parents(v)
            .iter()
            .fold(0, |acc, &p| acc * self.domains[p].len() + state[p])
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn domain(&self, v: usize) -> &[String] {
        &self.domains[v]
    }

    pub fn outcome(&self) -> &str {
        &self.outcome
    }

    /// Draws `n` rows by ancestral sampling. Latent variables are dropped;
    /// every other variable becomes a categorical column with its domain
    /// as levels.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.sample_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let g = &self.graph;
        let samplers: Vec<Vec<WeightedIndex<f64>>> = self
            .cpts
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|p| WeightedIndex::new(p).expect("validated table row"))
                    .collect()
            })
            .collect();
        let mut codes: Vec<Vec<Option<u32>>> = vec![Vec::with_capacity(n); g.len()];
        let mut state = vec![0usize; g.len()];
        for _ in 0..n {
            for &v in g.topological_order() {
                let config = self.config_of(v, &state);
                state[v] = samplers[v][config].sample(rng);
            }
            for (v, col) in codes.iter_mut().enumerate() {
                col.push(Some(state[v] as u32));
            }
        }
        let columns = codes
            .into_iter()
            .enumerate()
            .filter_map(|(v, codes)| {
                let role = match g.role(v) {
                    NodeRole::Actionable => Role::Actionable,
                    NodeRole::Control => Role::Control,
                    NodeRole::Target => Role::Target,
                    NodeRole::Latent => return None,
                };
                let data = ColumnData::Categorical {
                    levels: self.domains[v].clone(),
                    codes,
                };
                Some((g.name(v).to_owned(), role, data))
            })
            .collect();
        Dataset::from_columns(columns)
    }

    /// Visits every joint state with its probability. Variables listed in
    /// `clamp` are fixed to the given value instead of drawn from their
    /// table, which is the mutilated model of an atomic intervention.
    fn for_each_state(&self, clamp: &[(usize, usize)], mut f: impl FnMut(&[usize], f64)) {
        let g = &self.graph;
        let mut state = vec![0usize; g.len()];
        for &(v, x) in clamp {
            state[v] = x;
        }
        let free: Vec<usize> = g
            .topological_order()
            .iter()
            .copied()
            .filter(|v| !clamp.iter().any(|(c, _)| c == v))
            .collect();
        loop {
            let mut p = 1.0;
            for &v in &free {
                p *= self.cpts[v][self.config_of(v, &state)][state[v]];
            }
            if p > 0.0 {
                f(&state, p);
            }
            // odometer over the free variables
            let mut i = free.len();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                let v = free[i];
                state[v] += 1;
                if state[v] < self.domains[v].len() {
                    break;
                }
                state[v] = 0;
            }
        }
    }

    fn compile_rule(&self, rule: &[Condition]) -> Result<CompiledRule> {
        if rule.is_empty() {
            return Err(Error::DegeneratePolicy(
                "the empty rule has an empty complement".into(),
            ));
        }
        let mut vars: Vec<usize> = Vec::new();
        let mut allowed: Vec<(usize, Vec<bool>)> = Vec::new();
        for c in rule {
            let v = self
                .graph
                .index_of(&c.variable)
                .ok_or_else(|| Error::Scm(format!("unknown variable `{}`", c.variable)))?;
            if self.graph.role(v) != NodeRole::Actionable {
                return Err(Error::Scm(format!("`{}` is not actionable", c.variable)));
            }
            if !vars.contains(&v) {
                vars.push(v);
            }
            allowed.push((v, self.domains[v].iter().map(|l| c.holds(l)).collect()));
        }
        vars.sort_unstable();
        let controls = self.graph.with_role(NodeRole::Control);
        let target = self.graph.target();
        let y = self.domains[target]
            .iter()
            .position(|d| *d == self.outcome)
            .expect("validated outcome");
        Ok(CompiledRule {
            vars,
            allowed,
            controls,
            target,
            y,
        })
    }

    fn control_states(&self, controls: &[usize]) -> usize {
        controls.iter().map(|&z| self.domains[z].len()).product()
    }

    /// Back-door estimand from the observational joint:
    /// `Σ_z p(z) [p(y | σ, z) − p(y | ¬σ, z)]`.
    pub fn population_effect(&self, rule: &[Condition]) -> Result<f64> {
        let r = self.compile_rule(rule)?;
        let nz = self.control_states(&r.controls);
        // per stratum: p(z), p(σ,z), p(σ,y,z), p(¬σ,z), p(¬σ,y,z)
        let mut acc = vec![[0.0f64; 5]; nz];
        self.for_each_state(&[], |s, p| {
            let cell = &mut acc[r.z_index(self, s)];
            let hit = s[r.target] == r.y;
            cell[0] += p;
            let side = if r.holds(s) { 1 } else { 3 };
            cell[side] += p;
            if hit {
                cell[side + 1] += p;
            }
        });
        let mut effect = 0.0;
        for cell in &acc {
            if cell[0] == 0.0 {
                continue;
            }
            if cell[1] == 0.0 || cell[3] == 0.0 {
                return Err(Error::DegeneratePolicy(
                    "the rule or its negation has probability zero in a stratum".into(),
                ));
            }
            effect += cell[0] * (cell[2] / cell[1] - cell[4] / cell[3]);
        }
        Ok(effect)
    }

    /// Effect of intervening with the rule's policy versus the policy of its
    /// negation, each drawing the rule's variables from their observational
    /// distribution given the rule side and the controls. Computed on
    /// mutilated models, one per joint value of the rule's variables.
    pub fn interventional_effect(&self, rule: &[Condition]) -> Result<f64> {
        let r = self.compile_rule(rule)?;
        let nz = self.control_states(&r.controls);
        let radices: Vec<usize> = r.vars.iter().map(|&v| self.domains[v].len()).collect();
        let nx: usize = radices.iter().product();
        let x_index = |s: &[usize]| {
            r.vars
                .iter()
                .fold(0, |acc, &v| acc * self.domains[v].len() + s[v])
        };

        // observational p(z) and policies Q(x | σ, z), Q(x | ¬σ, z)
        let mut pz = vec![0.0; nz];
        let mut q = vec![vec![0.0; nx]; nz];
        let mut q_bar = vec![vec![0.0; nx]; nz];
        self.for_each_state(&[], |s, p| {
            let z = r.z_index(self, s);
            pz[z] += p;
            if r.holds(s) {
                q[z][x_index(s)] += p;
            } else {
                q_bar[z][x_index(s)] += p;
            }
        });
        for z in 0..nz {
            if pz[z] == 0.0 {
                continue;
            }
            for policy in [&mut q[z], &mut q_bar[z]] {
                let mass: f64 = policy.iter().sum();
                if mass == 0.0 {
                    return Err(Error::DegeneratePolicy(
                        "the rule or its negation has probability zero in a stratum".into(),
                    ));
                }
                policy.iter_mut().for_each(|w| *w /= mass);
            }
        }

        let mut effect = 0.0;
        let mut x = vec![0usize; r.vars.len()];
        for xi in 0..nx {
            let mut rest = xi;
            for i in (0..x.len()).rev() {
                x[i] = rest % radices[i];
                rest /= radices[i];
            }
            let clamp: Vec<(usize, usize)> =
                r.vars.iter().copied().zip(x.iter().copied()).collect();
            // p(y, z | do(x)) and p(z | do(x))
            let mut joint = vec![[0.0f64; 2]; nz];
            self.for_each_state(&clamp, |s, p| {
                let cell = &mut joint[r.z_index(self, s)];
                cell[0] += p;
                if s[r.target] == r.y {
                    cell[1] += p;
                }
            });
            for z in 0..nz {
                if pz[z] == 0.0 || joint[z][0] == 0.0 {
                    continue;
                }
                let p_y_do = joint[z][1] / joint[z][0];
                effect += pz[z] * (q[z][xi] - q_bar[z][xi]) * p_y_do;
            }
        }
        Ok(effect)
    }

    /// Enumerates the equality-rule language over the actionable variables
    /// (each variable absent or fixed to one value) up to `max_depth`
    /// conditions and returns the rule with the largest population effect.
    /// Rules with a degenerate policy are skipped; ties keep the earlier rule.
    pub fn best_rule(&self, max_depth: usize) -> Result<(Vec<Condition>, f64)> {
        let xs = self.graph.with_role(NodeRole::Actionable);
        let mut best: Option<(Vec<Condition>, f64)> = None;
        let mut stack: Vec<(usize, Vec<Condition>)> = vec![(0, Vec::new())];
        while let Some((start, rule)) = stack.pop() {
            if !rule.is_empty() {
                if let Ok(e) = self.population_effect(&rule) {
                    let better = match &best {
                        None => true,
                        Some((b, be)) => e > *be || (e == *be && rule_order(&rule, b, self)),
                    };
                    if better {
                        best = Some((rule.clone(), e));
                    }
                }
            }
            if rule.len() >= max_depth {
                continue;
            }
            for (i, &v) in xs.iter().enumerate().skip(start) {
                for value in &self.domains[v] {
                    let mut child = rule.clone();
                    child.push(Condition::eq(self.graph.name(v), value.clone()));
                    stack.push((i + 1, child));
                }
            }
        }
        best.ok_or_else(|| Error::DegeneratePolicy("no rule has a defined effect".into()))
    }
}

fn rule_order(a: &[Condition], b: &[Condition], scm: &DiscreteScm) -> bool {
    let key = |r: &[Condition]| -> Vec<(usize, usize)> {
        r.iter()
            .map(|c| {
                let v = scm.graph.index_of(&c.variable).unwrap_or(usize::MAX);
                let x = scm.domains[v]
                    .iter()
                    .position(|d| *d == c.value)
                    .unwrap_or(usize::MAX);
                (v, x)
            })
            .collect()
    };
    (a.len(), key(a)) < (b.len(), key(b))
}

struct CompiledRule {
    vars: Vec<usize>,
    allowed: Vec<(usize, Vec<bool>)>,
    controls: Vec<usize>,
    target: usize,
    y: usize,
}

impl CompiledRule {
    fn holds(&self, s: &[usize]) -> bool {
        self.allowed.iter().all(|(v, ok)| ok[s[*v]])
    }

    fn z_index(&self, scm: &DiscreteScm, s: &[usize]) -> usize {
        self.controls
            .iter()
            .fold(0, |acc, &z| acc * scm.domains[z].len() + s[z])
    }
}

fn binary() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// Confounded three-variable model plus five independent uniform binary
/// actionable variables `X2..X6`:
///
/// `p(Z=1) = 0.9`, `p(X1=1 | Z=1) = 0.8`, `p(X1=1 | Z=0) = 0.5`,
/// `p(Y=1 | Z, X1)` = 0.4, 0.5, 0.5, 0.7 for `(Z, X1)` = 00, 01, 10, 11.
///
/// The rule `X1 = 1` has effect `0.9·0.2 + 0.1·0.1 = 0.19` on `Y = 1`.
pub fn fig4_preset() -> DiscreteScm {
    let mut nodes = vec![("X1".to_string(), NodeRole::Actionable)];
    for i in 2..=6 {
        nodes.push((format!("X{i}"), NodeRole::Actionable));
    }
    nodes.push(("Z".into(), NodeRole::Control));
    nodes.push(("Y".into(), NodeRole::Target));
    let edges = [("Z", "X1"), ("Z", "Y"), ("X1", "Y")].map(|(a, b)| (a.to_string(), b.to_string()));
    let graph = CausalGraph::new(nodes, &edges).expect("preset graph is valid");
    let bern = |p1: f64| vec![1.0 - p1, p1];
    let mut cpts = vec![vec![bern(0.5), bern(0.8)]]; // X1 | Z
    cpts.extend((2..=6).map(|_| vec![bern(0.5)]));
    cpts.push(vec![bern(0.9)]); // Z
                                // Y | (X1, Z), X1 most significant
    cpts.push(vec![bern(0.4), bern(0.5), bern(0.5), bern(0.7)]);
    DiscreteScm::new(graph, vec![binary(); 8], cpts, "1").expect("preset tables are valid")
}

/// A random admissible binary model: 1 to 3 actionable variables, up to 2
/// controls, an optional latent variable feeding controls and target, and
/// table entries drawn from (0.05, 0.95).
pub fn random_admissible_scm<R: Rng + ?Sized>(rng: &mut R) -> DiscreteScm {
    let nx = rng.gen_range(1..=3);
    let nz = rng.gen_range(0..=2);
    let latent = rng.gen_bool(0.5);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut edge = |a: String, b: String, p: f64, rng: &mut R| {
        if rng.gen_bool(p) {
            edges.push((a, b));
        }
    };
    let zs: Vec<String> = (1..=nz).map(|i| format!("Z{i}")).collect();
    let xs: Vec<String> = (1..=nx).map(|i| format!("X{i}")).collect();
    if latent {
        nodes.push(("U".to_string(), NodeRole::Latent));
        for z in &zs {
            edge("U".into(), z.clone(), 0.6, rng);
        }
        edge("U".into(), "Y".into(), 0.6, rng);
    }
    for (i, z) in zs.iter().enumerate() {
        nodes.push((z.clone(), NodeRole::Control));
        for later in &zs[i + 1..] {
            edge(z.clone(), later.clone(), 0.5, rng);
        }
        for x in &xs {
            edge(z.clone(), x.clone(), 0.6, rng);
        }
        edge(z.clone(), "Y".into(), 0.6, rng);
    }
    for x in &xs {
        nodes.push((x.clone(), NodeRole::Actionable));
        edge(x.clone(), "Y".into(), 0.7, rng);
    }
    nodes.push(("Y".into(), NodeRole::Target));
    let graph = CausalGraph::new(nodes, &edges).expect("generated graph is acyclic");
    let cpts = (0..graph.len())
        .map(|v| {
            (0..1usize << graph.parents(v).len())
                .map(|_| {
                    let p = rng.gen_range(0.05..0.95);
                    vec![1.0 - p, p]
                })
                .collect()
        })
        .collect();
    let n = graph.len();
    DiscreteScm::new(graph, vec![binary(); n], cpts, "1").expect("generated tables are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig4_effects() {
        let scm = fig4_preset();
        let x1 = [Condition::eq("X1", "1")];
        assert!((scm.population_effect(&x1).unwrap() - 0.19).abs() < 1e-12);
        assert!((scm.interventional_effect(&x1).unwrap() - 0.19).abs() < 1e-12);
        let x0 = [Condition::eq("X1", "0")];
        assert!((scm.population_effect(&x0).unwrap() + 0.19).abs() < 1e-12);
        let noise = [Condition::eq("X2", "1")];
        assert!(scm.population_effect(&noise).unwrap().abs() < 1e-12);
    }

    #[test]
    fn whole_domain_rule_is_degenerate() {
        let scm = fig4_preset();
        let all = [Condition {
            variable: "X1".into(),
            relation: Relation::Geq,
            value: "0".into(),
        }];
        assert!(matches!(
            scm.population_effect(&all),
            Err(Error::DegeneratePolicy(_))
        ));
        assert!(scm.interventional_effect(&all).is_err());
    }

    #[test]
    fn best_rule_of_fig4_is_x1() {
        let (rule, e) = fig4_preset().best_rule(6).unwrap();
        assert_eq!(rule, vec![Condition::eq("X1", "1")]);
        assert!((e - 0.19).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible() {
        let scm = fig4_preset();
        let a = scm.sample(50, 7).unwrap();
        let b = scm.sample(50, 7).unwrap();
        for c in 0..a.schema().columns().len() {
            assert_eq!(a.column(c), b.column(c));
        }
        let one = scm.sample(1, 3).unwrap();
        assert_eq!(one.n_rows(), 1);
        assert_eq!(one.schema().columns().len(), 8);
    }

    #[test]
    fn json_round_trip() {
        let scm = fig4_preset();
        let back = DiscreteScm::from_json(&scm.to_json()).unwrap();
        assert_eq!(back.graph(), scm.graph());
        assert_eq!(back.cpts, scm.cpts);
        assert_eq!(back.outcome(), "1");
    }

    #[test]
    fn bad_tables_are_rejected() {
        let text = r#"{"nodes":[{"name":"X","role":"actionable","domain":[0,1]},
                                {"name":"Y","role":"target","domain":[0,1]}],
                       "edges":[["X","Y"]],
                       "cpts":{"X":[{"probs":[0.5,0.5]}],
                               "Y":[{"parents":{"X":0},"probs":[0.5,0.5]},
                                    {"parents":{"X":1},"probs":[0.5,0.6]}]}}"#;
        assert!(matches!(DiscreteScm::from_json(text), Err(Error::Scm(_))));
        let fixed = text.replace("0.5,0.6", "0.25,0.75");
        let scm = DiscreteScm::from_json(&fixed).unwrap();
        let e = scm.population_effect(&[Condition::eq("X", "1")]).unwrap();
        assert!((e - 0.25).abs() < 1e-12);
    }
}

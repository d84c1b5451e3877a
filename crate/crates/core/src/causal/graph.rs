use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Actionable,
    Control,
    Target,
    /// Unobserved variable; never part of a sample.
    Latent,
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeRole::Actionable => "actionable",
            NodeRole::Control => "control",
            NodeRole::Target => "target",
            NodeRole::Latent => "latent",
        })
    }
}

/// A directed acyclic graph over named variables with causal roles and
/// exactly one target.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalGraph {
    names: Vec<String>,
    roles: Vec<NodeRole>,
    /// Parents of each node, ascending by node index.
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

#[derive(Deserialize)]
struct GraphFile {
    nodes: Vec<GraphFileNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct GraphFileNode {
    name: String,
    role: NodeRole,
}

impl CausalGraph {
    pub fn new(nodes: Vec<(String, NodeRole)>, edges: &[(String, String)]) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, (name, _)) in nodes.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Graph(format!("duplicate node `{name}`")));
            }
        }
        match nodes.iter().filter(|(_, r)| *r == NodeRole::Target).count() {
            1 => {}
            0 => return Err(Error::Graph("no target node".into())),
            _ => return Err(Error::Graph("more than one target node".into())),
        }
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (from, to) in edges {
            let lookup = |name: &String| {
                index
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::Graph(format!("edge mentions unknown node `{name}`")))
            };
            let (u, v) = (lookup(from)?, lookup(to)?);
            if u == v {
                return Err(Error::Graph(format!("self-loop on `{from}`")));
            }
            if seen.insert((u, v)) {
                parents[v].push(u);
                children[u].push(v);
            }
        }
        for p in &mut parents {
            p.sort_unstable();
        }
        for c in &mut children {
            c.sort_unstable();
        }
        let topo = topological_order(&parents, &children)
            .ok_or_else(|| Error::Graph("the edge list contains a directed cycle".into()))?;
        let (names, roles) = nodes.into_iter().unzip();
        Ok(CausalGraph {
            names,
            roles,
            parents,
            children,
            topo,
        })
    }

    /// Reads `{"nodes": [{"name", "role"}, ...], "edges": [[from, to], ...]}`.
    /// Other keys are ignored, so an SCM file is also a graph file.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Self::new(
            file.nodes.into_iter().map(|n| (n.name, n.role)).collect(),
            &file.edges,
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn role(&self, v: usize) -> NodeRole {
        self.roles[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
    }

    /// Nodes ordered so that every parent precedes its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn target(&self) -> usize {
        self.with_role(NodeRole::Target)[0]
    }

    pub fn with_role(&self, role: NodeRole) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.roles[v] == role).collect()
    }

    /// Every node reachable from `v` along directed edges, `v` excluded.
    pub fn descendants(&self, v: usize) -> HashSet<usize> {
        let mut out = HashSet::new();
        let mut stack = self.children[v].clone();
        while let Some(u) = stack.pop() {
            if out.insert(u) {
                stack.extend(&self.children[u]);
            }
        }
        out
    }
}

fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..parents.len())
        .rev()
        .filter(|&v| indegree[v] == 0)
        .collect();
    let mut order = Vec::with_capacity(parents.len());
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in children[v].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    (order.len() == parents.len()).then_some(order)
}

/// The four structural conditions on an admissible input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// No edge from the target into an actionable variable.
    #[serde(rename = "a")]
    A,
    /// No edge from an actionable variable into a control variable.
    #[serde(rename = "b")]
    B,
    /// No edge between two actionable variables.
    #[serde(rename = "c")]
    C,
    /// No edge between a latent and an actionable variable.
    #[serde(rename = "d")]
    D,
}

impl Criterion {
    pub fn describe(self) -> &'static str {
        match self {
            Criterion::A => "edge from the target into an actionable variable",
            Criterion::B => "edge from an actionable variable into a control variable",
            Criterion::C => "edge between two actionable variables",
            Criterion::D => "edge between a latent and an actionable variable",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self {
            Criterion::A => 'a',
            Criterion::B => 'b',
            Criterion::C => 'c',
            Criterion::D => 'd',
        };
        write!(f, "({letter})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub criterion: Criterion,
    pub edge: (String, String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "violates {}: {} -> {} ({})",
            self.criterion,
            self.edge.0,
            self.edge.1,
            self.criterion.describe()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<Violation>,
}

/// Checks every edge against the admissibility criteria.
pub fn check_admissible(g: &CausalGraph) -> Admissibility {
    use NodeRole::*;
    let mut violations = Vec::new();
    for (u, v) in g.edges() {
        let criterion = match (g.role(u), g.role(v)) {
            (Target, Actionable) => Some(Criterion::A),
            (Actionable, Control) => Some(Criterion::B),
            (Actionable, Actionable) => Some(Criterion::C),
            (Latent, Actionable) | (Actionable, Latent) => Some(Criterion::D),
            _ => None,
        };
        if let Some(criterion) = criterion {
            violations.push(Violation {
                criterion,
                edge: (g.name(u).to_owned(), g.name(v).to_owned()),
            });
        }
    }
    violations.sort_by_key(|v| v.criterion as u8);
    Admissibility {
        admissible: violations.is_empty(),
        violations,
    }
}

/// Simple undirected paths from any node of `xs` to `y` whose first edge
/// points into the starting node.
pub fn spurious_paths(g: &CausalGraph, xs: &[usize], y: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for &x in xs {
        for &p in g.parents(x) {
            let mut path = vec![x, p];
            let mut on_path = vec![false; g.len()];
            on_path[x] = true;
            on_path[p] = true;
            extend_paths(g, y, &mut path, &mut on_path, &mut out);
        }
    }
    out
}

fn extend_paths(
    g: &CausalGraph,
    y: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let last = *path.last().expect("non-empty");
    if last == y {
        out.push(path.clone());
        return;
    }
    for &next in g.parents(last).iter().chain(g.children(last)) {
        if !on_path[next] {
            on_path[next] = true;
            path.push(next);
            extend_paths(g, y, path, on_path, out);
            path.pop();
            on_path[next] = false;
        }
    }
}

fn is_collider(g: &CausalGraph, path: &[usize], i: usize) -> bool {
    g.has_edge(path[i - 1], path[i]) && g.has_edge(path[i + 1], path[i])
}

/// Whether `zs` blocks the path: an interior collider outside `zs`, or an
/// interior non-collider inside it. Descendants of colliders are not
/// consulted; see [`collider_warnings`].
pub fn path_blocked(g: &CausalGraph, path: &[usize], zs: &[usize]) -> bool {
    (1..path.len().saturating_sub(1)).any(|i| is_collider(g, path, i) != zs.contains(&path[i]))
}

/// True when every spurious path from `xs` to `y` is blocked by `zs`.
pub fn blocks_all_spurious(g: &CausalGraph, xs: &[usize], y: usize, zs: &[usize]) -> bool {
    spurious_paths(g, xs, y)
        .iter()
        .all(|p| path_blocked(g, p, zs))
}

/// Spurious paths left open by `zs`, as node names.
pub fn open_spurious_paths(
    g: &CausalGraph,
    xs: &[usize],
    y: usize,
    zs: &[usize],
) -> Vec<Vec<String>> {
    spurious_paths(g, xs, y)
        .into_iter()
        .filter(|p| !path_blocked(g, p, zs))
        .map(|p| p.iter().map(|&v| g.name(v).to_owned()).collect())
        .collect()
}

/// Paths counted as blocked by a collider although a member of `zs`
/// descends from that collider, which would reopen them.
pub fn collider_warnings(g: &CausalGraph, xs: &[usize], y: usize, zs: &[usize]) -> Vec<String> {
    let mut warnings = Vec::new();
    for path in spurious_paths(g, xs, y) {
        for i in 1..path.len() - 1 {
            let c = path[i];
            if !is_collider(g, &path, i) || zs.contains(&c) {
                continue;
            }
            let desc = g.descendants(c);
            if let Some(&z) = zs.iter().find(|z| desc.contains(z)) {
                let names: Vec<&str> = path.iter().map(|&v| g.name(v)).collect();
                warnings.push(format!(
                    "control `{}` descends from collider `{}` on path {}",
                    g.name(z),
                    g.name(c),
                    names.join(" - ")
                ));
            }
        }
    }
    warnings
}

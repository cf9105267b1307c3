//! Weighted graph model.
//!
//! A [`WeightedGraph`] is a simple connected undirected graph in which every
//! orientation of every edge carries its own positive weight, plus a per
//! orientation flag marking the set ℰ of oriented edges at which a walk may
//! turn back. Vertices are kept sorted lexicographically and oriented edges
//! sorted by `(origin, target)`; every operator in the crate uses these two
//! orders as its basis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One undirected edge as it appears in a graph document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub u: String,
    pub v: String,
    pub wuv: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wvu: Option<f64>,
    #[serde(default)]
    pub bt_uv: bool,
    #[serde(default)]
    pub bt_vu: bool,
}

/// Unvalidated graph data: what a file contains before [`validate`] has run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<RawEdge>,
}

impl RawGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(mut self, name: impl Into<String>) -> Self {
        self.vertices.push(name.into());
        self
    }

    /// Adds `{u, v}` with weights `w(u→v) = wuv` and `w(v→u) = wvu`.
    /// Missing endpoints are appended to the vertex list.
    pub fn edge(mut self, u: &str, v: &str, wuv: f64, wvu: f64) -> Self {
        for name in [u, v] {
            if !self.vertices.iter().any(|x| x == name) {
                self.vertices.push(name.to_string());
            }
        }
        self.edges.push(RawEdge {
            u: u.to_string(),
            v: v.to_string(),
            wuv,
            wvu: Some(wvu),
            bt_uv: false,
            bt_vu: false,
        });
        self
    }

    /// Marks the orientation `origin → target` as a member of ℰ.
    pub fn backtrack(mut self, origin: &str, target: &str) -> Self {
        for e in &mut self.edges {
            if e.u == origin && e.v == target {
                e.bt_uv = true;
            } else if e.v == origin && e.u == target {
                e.bt_vu = true;
            }
        }
        self
    }

    pub fn build(self) -> Result<WeightedGraph> {
        WeightedGraph::try_from(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    DuplicateVertex(String),
    UnknownVertex(String),
    Loop(String),
    DuplicateEdge(String, String),
    NonPositiveWeight { origin: String, target: String, weight: f64 },
    NoEdges,
    Disconnected { components: usize },
    Dimension { expected: usize, found: String },
    NotUnitary { origin: String, target: String, deviation: f64 },
    InverseMismatch { origin: String, target: String, deviation: f64 },
    MissingTransfer { origin: String, target: String },
    UnknownEdge { origin: String, target: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateVertex(v) => write!(f, "duplicate vertex `{v}`"),
            Issue::UnknownVertex(v) => write!(f, "unknown vertex `{v}`"),
            Issue::Loop(v) => write!(f, "loop at `{v}`"),
            Issue::DuplicateEdge(u, v) => write!(f, "duplicate edge {{{u}, {v}}}"),
            Issue::NonPositiveWeight {
                origin,
                target,
                weight,
            } => write!(f, "nonpositive weight {weight} on {origin}->{target}"),
            Issue::NoEdges => write!(f, "graph has no edges"),
            Issue::Disconnected { components } => {
                write!(f, "disconnected ({components} components)")
            }
            Issue::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Issue::NotUnitary {
                origin,
                target,
                deviation,
            } => write!(f, "transfer {origin}->{target} not unitary (deviation {deviation:e})"),
            Issue::InverseMismatch {
                origin,
                target,
                deviation,
            } => write!(
                f,
                "transfer {target}->{origin} is not the inverse of {origin}->{target} (deviation {deviation:e})"
            ),
            Issue::MissingTransfer { origin, target } => {
                write!(f, "no transfer for {origin}->{target}")
            }
            Issue::UnknownEdge { origin, target } => {
                write!(f, "transfer given for non-edge {origin}->{target}")
            }
        }
    }
}

/// List of violated invariants; empty means admissible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every graph invariant and reports all violations at once.
pub fn validate(raw: &RawGraph) -> ValidationReport {
    let mut issues = Vec::new();
    let mut index = BTreeMap::new();
    for v in &raw.vertices {
        if index.insert(v.as_str(), index.len()).is_some() {
            issues.push(Issue::DuplicateVertex(v.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    let mut links: Vec<(usize, usize)> = Vec::new();
    for e in &raw.edges {
        let mut known = true;
        for name in [&e.u, &e.v] {
            if !index.contains_key(name.as_str()) {
                issues.push(Issue::UnknownVertex(name.clone()));
                known = false;
            }
        }
        if e.u == e.v {
            issues.push(Issue::Loop(e.u.clone()));
            continue;
        }
        let key = if e.u < e.v {
            (e.u.as_str(), e.v.as_str())
        } else {
            (e.v.as_str(), e.u.as_str())
        };
        if !seen.insert(key) {
            issues.push(Issue::DuplicateEdge(key.0.to_string(), key.1.to_string()));
        }
        for (o, t, w) in [(&e.u, &e.v, e.wuv), (&e.v, &e.u, e.wvu.unwrap_or(e.wuv))] {
            if !(w > 0.0 && w.is_finite()) {
                issues.push(Issue::NonPositiveWeight {
                    origin: o.clone(),
                    target: t.clone(),
                    weight: w,
                });
            }
        }
        if known {
            links.push((index[e.u.as_str()], index[e.v.as_str()]));
        }
    }
    if raw.edges.is_empty() {
        issues.push(Issue::NoEdges);
    }
    let n = index.len();
    if n > 0 {
        let components = count_components(n, &links);
        if components > 1 {
            issues.push(Issue::Disconnected { components });
        }
    }
    ValidationReport { issues }
}

fn count_components(n: usize, links: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in links {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut components = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    components
}

/// An orientation of an edge. Indices refer to the graph's canonical orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedEdge {
    pub origin: usize,
    pub target: usize,
    pub weight: f64,
    /// Membership in ℰ.
    pub backtrack: bool,
    /// Index of the reverse orientation.
    pub reverse: usize,
    /// Index of the underlying undirected edge.
    pub edge: usize,
}

/// Validated, immutable weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    vertices: Vec<String>,
    edges: Vec<(usize, usize)>,
    oriented: Vec<OrientedEdge>,
    out: Vec<Vec<usize>>,
}

impl TryFrom<RawGraph> for WeightedGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        let report = validate(&raw);
        if !report.is_empty() {
            return Err(Error::InvalidGraph(report));
        }
        let mut vertices = raw.vertices.clone();
        vertices.sort();
        let index: BTreeMap<&str, usize> = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();

        // (origin, target) -> (weight, backtrack)
        let mut arcs = BTreeMap::new();
        for e in &raw.edges {
            let (u, v) = (index[e.u.as_str()], index[e.v.as_str()]);
            arcs.insert((u, v), (e.wuv, e.bt_uv));
            arcs.insert((v, u), (e.wvu.unwrap_or(e.wuv), e.bt_vu));
        }
        let position: BTreeMap<(usize, usize), usize> =
            arcs.keys().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut edges: Vec<(usize, usize)> = arcs
            .keys()
            .filter(|(o, t)| o < t)
            .copied()
            .collect();
        edges.sort_unstable();
        let edge_index: BTreeMap<(usize, usize), usize> =
            edges.iter().enumerate().map(|(i, &k)| (k, i)).collect();

        let oriented: Vec<OrientedEdge> = arcs
            .iter()
            .map(|(&(o, t), &(weight, backtrack))| OrientedEdge {
                origin: o,
                target: t,
                weight,
                backtrack,
                reverse: position[&(t, o)],
                edge: edge_index[&(o.min(t), o.max(t))],
            })
            .collect();
        let mut out = vec![Vec::new(); vertices.len()];
        for (i, e) in oriented.iter().enumerate() {
            out[e.origin].push(i);
        }
        Ok(Self {
            vertices,
            edges,
            oriented,
            out,
        })
    }
}

/// Summary numbers of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphStats {
    pub vertex_count: usize,
    pub edge_count: usize,
    /// χ = |V| − |E|.
    pub euler_number: i64,
    /// w(X), the sum over all oriented edges.
    pub total_weight: f64,
    /// Maximum valency.
    pub valency_bound: usize,
    /// W(e) = w(e)·w(e⁻¹), indexed like [`WeightedGraph::edges`].
    pub edge_products: Vec<f64>,
    /// Length of the shortest cycle, `None` for trees. The girth is itself
    /// the tightest lower bound.
    pub girth_lower_bound: Option<usize>,
}

impl WeightedGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn oriented_count(&self) -> usize {
        self.oriented.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_name(&self, x: usize) -> &str {
        &self.vertices[x]
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.as_str().cmp(name)).ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn oriented_edges(&self) -> &[OrientedEdge] {
        &self.oriented
    }

    pub fn oriented(&self, e: usize) -> &OrientedEdge {
        &self.oriented[e]
    }

    /// Oriented edges leaving `x`, sorted by target.
    pub fn out_edges(&self, x: usize) -> &[usize] {
        &self.out[x]
    }

    pub fn valency(&self, x: usize) -> usize {
        self.out[x].len()
    }

    pub fn find_oriented(&self, origin: usize, target: usize) -> Option<usize> {
        self.out[origin]
            .iter()
            .copied()
            .find(|&e| self.oriented[e].target == target)
    }

    /// w(x, x') or `None` if the vertices are not adjacent.
    pub fn weight(&self, origin: usize, target: usize) -> Option<f64> {
        self.find_oriented(origin, target)
            .map(|e| self.oriented[e].weight)
    }

    /// W({u, v}) for the undirected edge with the given index.
    pub fn edge_product(&self, edge: usize) -> f64 {
        let (u, v) = self.edges[edge];
        self.weight(u, v).unwrap() * self.weight(v, u).unwrap()
    }

    /// W(x, x') for adjacent vertices.
    pub fn pair_product(&self, x: usize, y: usize) -> f64 {
        self.weight(x, y).unwrap() * self.weight(y, x).unwrap()
    }

    pub fn in_backtrack_set(&self, e: usize) -> bool {
        self.oriented[e].backtrack
    }

    /// True when ℰ is non-empty.
    pub fn has_backtracking(&self) -> bool {
        self.oriented.iter().any(|e| e.backtrack)
    }

    /// True when e ∈ ℰ ⇔ e⁻¹ ∈ ℰ for every oriented edge.
    pub fn backtrack_is_symmetric(&self) -> bool {
        self.oriented
            .iter()
            .all(|e| e.backtrack == self.oriented[e.reverse].backtrack)
    }

    pub fn is_unit_weighted(&self) -> bool {
        self.oriented.iter().all(|e| e.weight == 1.0)
    }

    /// Whether a walk may step from `e` onto `next`: they must compose, and
    /// `next` may be the reverse of `e` only when `e ∈ ℰ`.
    pub fn admissible_step(&self, e: usize, next: usize) -> bool {
        let a = &self.oriented[e];
        let b = &self.oriented[next];
        a.target == b.origin && (next != a.reverse || a.backtrack)
    }

    /// Same graph with ℰ replaced by the given set of oriented edges.
    pub fn with_backtrack_set(&self, set: &[usize]) -> Self {
        let mut g = self.clone();
        for e in &mut g.oriented {
            e.backtrack = false;
        }
        for &e in set {
            g.oriented[e].backtrack = true;
        }
        g
    }

    /// Same graph with every weight multiplied by `f(e)`; ℰ unchanged.
    pub fn map_weights(&self, mut f: impl FnMut(usize, &OrientedEdge) -> f64) -> Result<Self> {
        let mut g = self.clone();
        for (i, e) in g.oriented.iter_mut().enumerate() {
            let w = f(i, &self.oriented[i]);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Precondition(format!("weight {w} is not positive")));
            }
            e.weight = w;
        }
        Ok(g)
    }

    pub fn oriented_label(&self, e: usize) -> String {
        let oe = &self.oriented[e];
        format!("{}->{}", self.vertices[oe.origin], self.vertices[oe.target])
    }

    /// Back to document form, edges emitted as `u < v` in canonical order
    /// with every optional field spelled out.
    pub fn to_raw(&self) -> RawGraph {
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let uv = &self.oriented[self.find_oriented(u, v).unwrap()];
                let vu = &self.oriented[uv.reverse];
                RawEdge {
                    u: self.vertices[u].clone(),
                    v: self.vertices[v].clone(),
                    wuv: uv.weight,
                    wvu: Some(vu.weight),
                    bt_uv: uv.backtrack,
                    bt_vu: vu.backtrack,
                }
            })
            .collect();
        RawGraph {
            vertices: self.vertices.clone(),
            edges,
        }
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            vertex_count: self.vertex_count(),
            edge_count: self.edge_count(),
            euler_number: self.vertex_count() as i64 - self.edge_count() as i64,
            total_weight: self.oriented.iter().map(|e| e.weight).sum(),
            valency_bound: (0..self.vertex_count())
                .map(|x| self.valency(x))
                .max()
                .unwrap_or(0),
            edge_products: (0..self.edge_count()).map(|i| self.edge_product(i)).collect(),
            girth_lower_bound: self.girth(),
        }
    }

    /// Shortest cycle length by breadth-first search from every vertex.
    fn girth(&self) -> Option<usize> {
        let n = self.vertex_count();
        let mut best: Option<usize> = None;
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            let mut parent = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &e in &self.out[x] {
                    let y = self.oriented[e].target;
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        parent[y] = x;
                        queue.push_back(y);
                    } else if parent[x] != y {
                        let len = dist[x] + dist[y] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best
    }

    /// The canonical bases: vertex names, and oriented edges as
    /// `(origin, target)` name pairs.
    pub fn canonical_order(&self) -> (Vec<String>, Vec<(String, String)>) {
        let edges = self
            .oriented
            .iter()
            .map(|e| {
                (
                    self.vertices[e.origin].clone(),
                    self.vertices[e.target].clone(),
                )
            })
            .collect();
        (self.vertices.clone(), edges)
    }
}

pub fn graph_stats(g: &WeightedGraph) -> GraphStats {
    g.stats()
}

pub fn canonical_order(g: &WeightedGraph) -> (Vec<String>, Vec<(String, String)>) {
    g.canonical_order()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn stats_of_fixtures() {
        let k3 = fixtures::k3().stats();
        assert_eq!(k3.euler_number, 0);
        assert_eq!(k3.total_weight, 6.0);
        assert_eq!(k3.valency_bound, 2);
        assert!(k3.edge_products.iter().all(|&w| w == 1.0));
        assert_eq!(k3.girth_lower_bound, Some(3));

        let edge = fixtures::edge().stats();
        assert_eq!(edge.euler_number, 1);
        assert_eq!(edge.total_weight, 5.0);
        assert_eq!(edge.edge_products, vec![6.0]);
        assert_eq!(edge.girth_lower_bound, None);

        let wt3 = fixtures::wt3().stats();
        assert!((wt3.total_weight - 1.95).abs() < 1e-12);
        // edges in canonical order: {x,y}, {x,z}, {y,z}
        let expect = [0.05, 0.1, 0.1];
        for (got, want) in wt3.edge_products.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn canonical_orders() {
        let (v, e) = fixtures::edge().canonical_order();
        assert_eq!(v, vec!["a", "b"]);
        assert_eq!(
            e,
            vec![("a".into(), "b".into()), ("b".into(), "a".into())]
        );
        let (_, e) = fixtures::wt3().canonical_order();
        let names: Vec<String> = e.iter().map(|(o, t)| format!("{o}{t}")).collect();
        assert_eq!(names, vec!["xy", "xz", "yx", "yz", "zx", "zy"]);
    }

    #[test]
    fn order_does_not_depend_on_input_order() {
        let a = RawGraph::new()
            .edge("c", "a", 1.0, 2.0)
            .edge("b", "c", 3.0, 4.0)
            .edge("a", "b", 5.0, 6.0)
            .build()
            .unwrap();
        let b = RawGraph::new()
            .edge("a", "b", 5.0, 6.0)
            .edge("b", "c", 3.0, 4.0)
            .edge("a", "c", 2.0, 1.0)
            .build()
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn validation_entries() {
        assert!(validate(&fixtures::k3().to_raw()).is_empty());

        let split = RawGraph::new().edge("a", "b", 1.0, 1.0).edge("c", "d", 1.0, 1.0);
        assert!(matches!(
            validate(&split).issues[..],
            [Issue::Disconnected { components: 2 }]
        ));

        let zero = RawGraph::new().edge("a", "b", 1.0, 0.0);
        assert!(matches!(
            validate(&zero).issues[..],
            [Issue::NonPositiveWeight { .. }]
        ));

        let looped = RawGraph::new().edge("a", "a", 1.0, 1.0);
        assert!(validate(&looped)
            .issues
            .iter()
            .any(|i| matches!(i, Issue::Loop(_))));

        let dup = RawGraph::new().edge("a", "b", 1.0, 1.0).edge("b", "a", 1.0, 1.0);
        assert!(matches!(
            validate(&dup).issues[..],
            [Issue::DuplicateEdge(..)]
        ));

        let mut unknown = RawGraph::new().edge("a", "b", 1.0, 1.0);
        unknown.edges[0].v = "zz".into();
        assert!(validate(&unknown)
            .issues
            .iter()
            .any(|i| matches!(i, Issue::UnknownVertex(v) if v == "zz")));
    }

    #[test]
    fn admissibility_respects_backtrack_set() {
        let g = fixtures::bt2();
        // a->b is in ℰ, b->a is not
        assert!(g.admissible_step(0, 1));
        assert!(!g.admissible_step(1, 0));
        assert!(!g.backtrack_is_symmetric());
        assert!(fixtures::bt1().backtrack_is_symmetric());
    }
}

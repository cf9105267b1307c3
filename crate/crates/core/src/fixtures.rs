//! Named test graphs and seeded random generators shared by the test suites,
//! the benches and the CLI.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{RawGraph, WeightedGraph};

fn build(raw: RawGraph) -> WeightedGraph {
    raw.build().expect("fixture is valid")
}

/// EDGE: a single edge with w(a→b) = 2, w(b→a) = 3.
pub fn edge() -> WeightedGraph {
    build(RawGraph::new().edge("a", "b", 2.0, 3.0))
}

/// EDGE with unit weights.
pub fn unit_edge() -> WeightedGraph {
    build(RawGraph::new().edge("a", "b", 1.0, 1.0))
}

/// P3: the path a − b − c, unit weights.
pub fn p3() -> WeightedGraph {
    build(RawGraph::new().edge("a", "b", 1.0, 1.0).edge("b", "c", 1.0, 1.0))
}

/// K3: triangle on x, y, z with unit weights.
pub fn k3() -> WeightedGraph {
    build(
        RawGraph::new()
            .edge("x", "y", 1.0, 1.0)
            .edge("y", "z", 1.0, 1.0)
            .edge("z", "x", 1.0, 1.0),
    )
}

/// WT3: triangle with six distinct orientation weights.
pub fn wt3() -> WeightedGraph {
    build(
        RawGraph::new()
            .edge("x", "y", 0.5, 0.1)
            .edge("y", "z", 0.25, 0.4)
            .edge("z", "x", 0.5, 0.2),
    )
}

/// BT1: EDGE with ℰ = {a→b, b→a}.
pub fn bt1() -> WeightedGraph {
    build(
        RawGraph::new()
            .edge("a", "b", 2.0, 3.0)
            .backtrack("a", "b")
            .backtrack("b", "a"),
    )
}

/// BT2: EDGE with ℰ = {a→b}.
pub fn bt2() -> WeightedGraph {
    build(RawGraph::new().edge("a", "b", 2.0, 3.0).backtrack("a", "b"))
}

/// K3S: K3 with ℰ = {x→y, y→x}.
pub fn k3s() -> WeightedGraph {
    build(
        RawGraph::new()
            .edge("x", "y", 1.0, 1.0)
            .edge("y", "z", 1.0, 1.0)
            .edge("z", "x", 1.0, 1.0)
            .backtrack("x", "y")
            .backtrack("y", "x"),
    )
}

/// Complete graph on `n ≥ 2` vertices `v0, v1, …` with unit weights.
pub fn complete(n: usize) -> WeightedGraph {
    let mut raw = RawGraph::new();
    for i in 0..n {
        for j in i + 1..n {
            raw = raw.edge(&format!("v{i}"), &format!("v{j}"), 1.0, 1.0);
        }
    }
    build(raw)
}

/// Cycle graph on `n ≥ 3` vertices with unit weights.
pub fn cycle(n: usize) -> WeightedGraph {
    let mut raw = RawGraph::new();
    for i in 0..n {
        raw = raw.edge(&format!("v{i}"), &format!("v{}", (i + 1) % n), 1.0, 1.0);
    }
    build(raw)
}

/// All named fixtures with their catalogue names.
pub fn catalogue() -> Vec<(&'static str, WeightedGraph)> {
    vec![
        ("EDGE", edge()),
        ("P3", p3()),
        ("K3", k3()),
        ("WT3", wt3()),
        ("BT1", bt1()),
        ("BT2", bt2()),
        ("K3S", k3s()),
    ]
}

/// How the random generator populates ℰ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BacktrackMode {
    Empty,
    /// Each oriented edge independently with the given probability.
    Random(f64),
    /// Each undirected edge (both orientations together) with the given probability.
    Symmetric(f64),
}

/// Random connected simple graph: a uniformly shuffled spanning tree plus a
/// few extra edges. Keeping the cycle rank small keeps brute-force cycle
/// enumeration to order 12 cheap.
#[derive(Debug, Clone, Copy)]
pub struct RandomGraphConfig {
    pub min_vertices: usize,
    pub max_vertices: usize,
    pub max_extra_edges: usize,
    pub min_weight: f64,
    pub max_weight: f64,
    pub backtrack: BacktrackMode,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        Self {
            min_vertices: 3,
            max_vertices: 7,
            max_extra_edges: 3,
            min_weight: 0.1,
            max_weight: 1.0,
            backtrack: BacktrackMode::Empty,
        }
    }
}

impl RandomGraphConfig {
    pub fn with_backtrack(mut self, mode: BacktrackMode) -> Self {
        self.backtrack = mode;
        self
    }

    pub fn unit_weights(mut self) -> Self {
        self.min_weight = 1.0;
        self.max_weight = 1.0;
        self
    }
}

pub fn random_graph<R: Rng>(rng: &mut R, cfg: &RandomGraphConfig) -> WeightedGraph {
    let n = rng.random_range(cfg.min_vertices.max(2)..=cfg.max_vertices.max(2));
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut pairs = Vec::new();
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        pairs.push((order[i], parent));
    }
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| !pairs.contains(&(a, b)) && !pairs.contains(&(b, a)))
        .collect();
    candidates.shuffle(rng);
    let extra = rng.random_range(0..=cfg.max_extra_edges).min(candidates.len());
    pairs.extend_from_slice(&candidates[..extra]);

    let weight = |rng: &mut R| {
        if cfg.max_weight > cfg.min_weight {
            rng.random_range(cfg.min_weight..=cfg.max_weight)
        } else {
            cfg.min_weight
        }
    };
    let mut raw = RawGraph::new();
    for name in &names {
        raw = raw.vertex(name.clone());
    }
    for &(a, b) in &pairs {
        let (wab, wba) = (weight(rng), weight(rng));
        raw = raw.edge(&names[a], &names[b], wab, wba);
        let (bt_ab, bt_ba) = match cfg.backtrack {
            BacktrackMode::Empty => (false, false),
            BacktrackMode::Random(p) => (rng.random_bool(p), rng.random_bool(p)),
            BacktrackMode::Symmetric(p) => {
                let on = rng.random_bool(p);
                (on, on)
            }
        };
        let last = raw.edges.last_mut().unwrap();
        last.bt_uv = bt_ab;
        last.bt_vu = bt_ba;
    }
    build(raw)
}

/// Deterministic corpus of `count` random graphs from a seed.
pub fn random_corpus(seed: u64, count: usize, cfg: &RandomGraphConfig) -> Vec<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, cfg)).collect()
}

//! Operators on the vertex space C₀ and the oriented-edge space C₁.
//!
//! Conventions: `op[(row, col)]` is the coefficient of basis element `row` in
//! the image of basis element `col`, and `a.compose(&b)` applies `b` first.
//! Every builder honours the graph's ℰ flags; with ℰ = ∅ they reduce to the
//! plain non-backtracking operators.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{c, Basis, LinearOperator, C64};

pub fn vertex_basis(g: &WeightedGraph) -> Basis {
    Basis::new(g.vertices().to_vec())
}

pub fn edge_basis(g: &WeightedGraph) -> Basis {
    Basis::new((0..g.oriented_count()).map(|e| g.oriented_label(e)).collect())
}

/// The weighted non-backtracking operator T (T_ℰ when ℰ ≠ ∅):
/// `T e = Σ w(e') e'` over admissible continuations `e'` of `e`.
pub fn build_t(g: &WeightedGraph) -> LinearOperator {
    let mut triplets = Vec::new();
    for (e, oe) in g.oriented_edges().iter().enumerate() {
        for &next in g.out_edges(oe.target) {
            if g.admissible_step(e, next) {
                triplets.push((next, e, c(g.oriented(next).weight)));
            }
        }
    }
    let basis = edge_basis(g);
    LinearOperator::from_triplets(basis.clone(), basis, triplets)
}

/// σ: C₀ → C₁, τ: C₁ → C₀ and the weighted flip J on C₁.
#[derive(Debug, Clone)]
pub struct EdgeMaps {
    pub sigma: LinearOperator,
    pub tau: LinearOperator,
    /// J, or J_ℰ when ℰ ≠ ∅ (zero on both orientations of any edge touching ℰ).
    pub flip: LinearOperator,
}

pub fn build_edge_maps(g: &WeightedGraph) -> EdgeMaps {
    let (vb, eb) = (vertex_basis(g), edge_basis(g));
    let edges = g.oriented_edges();
    let sigma = LinearOperator::from_triplets(
        eb.clone(),
        vb.clone(),
        edges.iter().enumerate().map(|(e, oe)| (e, oe.origin, c(oe.weight))),
    );
    let tau = LinearOperator::from_triplets(
        vb,
        eb.clone(),
        edges.iter().enumerate().map(|(e, oe)| (oe.target, e, c(1.0))),
    );
    let flip = LinearOperator::from_triplets(
        eb.clone(),
        eb,
        edges
            .iter()
            .enumerate()
            .filter(|(_, oe)| !oe.backtrack && !edges[oe.reverse].backtrack)
            .map(|(e, oe)| (oe.reverse, e, c(edges[oe.reverse].weight))),
    );
    EdgeMaps { sigma, tau, flip }
}

/// The weighted adjacency operator A₁ and Q (Q + 1 the valency operator;
/// with ℰ only neighbours `x'` with `x → x' ∉ ℰ` are counted).
pub fn build_a1_q(g: &WeightedGraph) -> (LinearOperator, LinearOperator) {
    let vb = vertex_basis(g);
    let a1 = LinearOperator::from_triplets(
        vb.clone(),
        vb.clone(),
        g.oriented_edges()
            .iter()
            .map(|oe| (oe.target, oe.origin, c(oe.weight))),
    );
    let q = LinearOperator::from_triplets(
        vb.clone(),
        vb,
        (0..g.vertex_count()).map(|x| {
            let outside = g
                .out_edges(x)
                .iter()
                .filter(|&&e| !g.in_backtrack_set(e))
                .count();
            (x, x, c(outside as f64 - 1.0))
        }),
    );
    (a1, q)
}

/// B_n from its defining sums. For n ≥ 2 only edges avoiding ℰ contribute:
/// B_2 drops `x → x' ∈ ℰ`, orders ≥ 3 drop edges with either orientation in ℰ.
pub fn build_b(g: &WeightedGraph, n: usize) -> LinearOperator {
    let vb = vertex_basis(g);
    if n == 0 {
        return LinearOperator::identity(vb);
    }
    let half = (n / 2) as i32;
    let mut triplets = Vec::new();
    for oe in g.oriented_edges() {
        let keep = match n {
            1 => true,
            2 => !oe.backtrack,
            _ => !oe.backtrack && !g.in_backtrack_set(oe.reverse),
        };
        if !keep {
            continue;
        }
        let big_w = oe.weight * g.oriented(oe.reverse).weight;
        if n.is_multiple_of(2) {
            triplets.push((oe.origin, oe.origin, c(big_w.powi(half))));
        } else {
            triplets.push((oe.target, oe.origin, c(big_w.powi(half) * oe.weight)));
        }
    }
    LinearOperator::from_triplets(vb.clone(), vb, triplets)
}

/// τ J^{n−1} σ for n ≥ 1.
pub fn build_b_factored(maps: &EdgeMaps, n: usize) -> LinearOperator {
    assert!(n >= 1);
    let mut inner = maps.sigma.clone();
    for _ in 1..n {
        inner = maps.flip.compose(&inner);
    }
    maps.tau.compose(&inner)
}

/// A₀, …, A_m from the recursion A_m = Σ_{j=1..m} (−1)^{j+1} A_{m−j} B_j.
pub fn build_a_sequence(g: &WeightedGraph, m: usize) -> Vec<LinearOperator> {
    let b: Vec<LinearOperator> = (0..=m).map(|j| build_b(g, j)).collect();
    let mut a: Vec<LinearOperator> = vec![LinearOperator::identity(vertex_basis(g))];
    for k in 1..=m {
        let mut acc = LinearOperator::zeros(vertex_basis(g), vertex_basis(g));
        for j in 1..=k {
            let term = a[k - j].compose(&b[j]);
            acc = if j % 2 == 1 { acc.add(&term) } else { acc.sub(&term) };
        }
        a.push(acc);
    }
    a
}

/// A_m: weighted sum of endpoints of (ℰ-)regular paths of length m.
pub fn build_a(g: &WeightedGraph, m: usize) -> LinearOperator {
    build_a_sequence(g, m).pop().unwrap()
}

/// Walks every (ℰ-)regular vertex path of length `m` from `start`, calling
/// `f(end, path_weight, first_edge)`. `first_edge` is `None` only for `m = 0`.
pub fn for_each_regular_path(
    g: &WeightedGraph,
    start: usize,
    m: usize,
    f: &mut impl FnMut(usize, f64, Option<usize>),
) {
    if m == 0 {
        f(start, 1.0, None);
        return;
    }
    fn walk(
        g: &WeightedGraph,
        last: usize,
        first: usize,
        remaining: usize,
        weight: f64,
        f: &mut impl FnMut(usize, f64, Option<usize>),
    ) {
        if remaining == 0 {
            f(g.oriented(last).target, weight, Some(first));
            return;
        }
        for &next in g.out_edges(g.oriented(last).target) {
            if g.admissible_step(last, next) {
                walk(g, next, first, remaining - 1, weight * g.oriented(next).weight, f);
            }
        }
    }
    for &e in g.out_edges(start) {
        walk(g, e, e, m - 1, g.oriented(e).weight, f);
    }
}

/// A_m by direct path enumeration. Exponential in `m`; the reference for the
/// recursion in [`build_a_sequence`].
pub fn enumerate_a(g: &WeightedGraph, m: usize) -> LinearOperator {
    let mut triplets = Vec::new();
    for x in 0..g.vertex_count() {
        for_each_regular_path(g, x, m, &mut |end, w, _| triplets.push((end, x, c(w))));
    }
    LinearOperator::from_triplets(vertex_basis(g), vertex_basis(g), triplets)
}

/// C_{m,n} x = Σ W(x₀, x₁)ⁿ w(p) x_m over (ℰ-)regular paths of length m from x.
pub fn build_c(g: &WeightedGraph, m: usize, n: usize) -> Result<LinearOperator> {
    if m < 1 || n < 1 {
        return Err(Error::Precondition(format!(
            "C_{{m,n}} needs m, n >= 1 (got m = {m}, n = {n})"
        )));
    }
    let mut triplets = Vec::new();
    for x in 0..g.vertex_count() {
        for_each_regular_path(g, x, m, &mut |end, w, first| {
            let e = g.oriented(first.unwrap());
            let big_w = e.weight * g.oriented(e.reverse).weight;
            triplets.push((end, x, c(big_w.powi(n as i32) * w)));
        });
    }
    Ok(LinearOperator::from_triplets(
        vertex_basis(g),
        vertex_basis(g),
        triplets,
    ))
}

/// Largest entry of Σ_{j=0..m} (−1)^j A_{m−j} B_j with the A's taken from
/// path enumeration. Zero (up to rounding) whenever A(u)B(−u) = 1 holds.
pub fn inversion_residual(g: &WeightedGraph, m: usize) -> f64 {
    let mut acc = LinearOperator::zeros(vertex_basis(g), vertex_basis(g));
    for j in 0..=m {
        let term = enumerate_a(g, m - j).compose(&build_b(g, j));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc.max_abs()
}

/// Σ_{j=0..2n} (−1)^j tr A_{m+j} B_{2n−j}, the right-hand side of the trace
/// identity for C_{m,n}.
pub fn c_trace_from_ab(a: &[LinearOperator], g: &WeightedGraph, m: usize, n: usize) -> C64 {
    (0..=2 * n)
        .map(|j| {
            let t = a[m + j].compose(&build_b(g, 2 * n - j)).trace();
            if j % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn real(m: &LinearOperator, r: usize, col: usize) -> f64 {
        let z = m.get(r, col);
        assert!(z.im.abs() < 1e-15);
        z.re
    }

    #[test]
    fn t_on_the_single_edge() {
        assert_eq!(build_t(&fixtures::edge()).max_abs(), 0.0);
        // basis (a->b, b->a)
        let t = build_t(&fixtures::bt1());
        assert_eq!(real(&t, 1, 0), 3.0);
        assert_eq!(real(&t, 0, 1), 2.0);
        let t = build_t(&fixtures::bt2());
        assert_eq!(real(&t, 1, 0), 3.0);
        assert_eq!(real(&t, 0, 1), 0.0);
    }

    #[test]
    fn flip_and_factorisation_of_t() {
        let g = fixtures::edge();
        let maps = build_edge_maps(&g);
        assert_eq!(real(&maps.flip, 1, 0), 3.0);
        assert_eq!(real(&maps.flip, 0, 1), 2.0);
        let st = maps.sigma.compose(&maps.tau).sub(&maps.flip);
        assert!(st.max_abs_diff(&build_t(&g)) < 1e-15);
        assert_eq!(build_edge_maps(&fixtures::bt1()).flip.max_abs(), 0.0);
    }

    #[test]
    fn adjacency_and_q() {
        let (a1, q) = build_a1_q(&fixtures::k3());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(real(&a1, i, j), if i == j { 0.0 } else { 1.0 });
                assert_eq!(real(&q, i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let (a1, q) = build_a1_q(&fixtures::edge());
        assert_eq!((real(&a1, 0, 1), real(&a1, 1, 0)), (3.0, 2.0));
        assert_eq!(q.max_abs(), 0.0);
        // WT3, basis (x, y, z): A₁[y, x] = w(x→y)
        let (a1, _) = build_a1_q(&fixtures::wt3());
        assert_eq!(real(&a1, 1, 0), 0.5);
        assert_eq!(real(&a1, 0, 1), 0.1);
        assert_eq!(real(&a1, 2, 1), 0.25);
    }

    #[test]
    fn b_operators() {
        let k3 = fixtures::k3();
        assert!(build_b(&k3, 1).max_abs_diff(&build_a1_q(&k3).0) == 0.0);
        let b2 = build_b(&k3, 2);
        assert!(b2
            .max_abs_diff(&LinearOperator::identity(vertex_basis(&k3)).scale(c(2.0)))
            == 0.0);
        let b2 = build_b(&fixtures::bt2(), 2);
        assert_eq!((real(&b2, 0, 0), real(&b2, 1, 1)), (0.0, 6.0));
        for n in 1..=10 {
            let g = fixtures::wt3();
            let d = build_b(&g, n).max_abs_diff(&build_b_factored(&build_edge_maps(&g), n));
            assert!(d <= 1e-12, "n = {n}: {d}");
        }
    }

    #[test]
    fn a_operators() {
        let k3 = fixtures::k3();
        assert!(build_a(&k3, 2).max_abs_diff(&build_a1_q(&k3).0) < 1e-12);
        for m in 2..6 {
            assert!(build_a(&fixtures::edge(), m).max_abs() < 1e-12);
        }
        let a2 = enumerate_a(&fixtures::bt2(), 2);
        assert_eq!(real(&a2, 0, 0), 6.0);
        assert_eq!(a2.max_abs_diff(&LinearOperator::from_triplets(
            vertex_basis(&fixtures::bt2()),
            vertex_basis(&fixtures::bt2()),
            [(0, 0, c(6.0))],
        )), 0.0);
    }

    #[test]
    fn c_operators() {
        let k3 = fixtures::k3();
        let c11 = build_c(&k3, 1, 1).unwrap();
        assert!(c11.max_abs_diff(&build_a1_q(&k3).0) == 0.0);
        assert_eq!(c11.trace().re, 0.0);
        let a = build_a_sequence(&k3, 3);
        let rhs = c_trace_from_ab(&a, &k3, 1, 1);
        assert!(rhs.norm() < 1e-12);

        let c21 = build_c(&fixtures::bt2(), 2, 1).unwrap();
        assert_eq!(real(&c21, 0, 0), 36.0);
        assert!(build_c(&k3, 0, 1).is_err());
        assert!(build_c(&k3, 1, 0).is_err());
    }
}

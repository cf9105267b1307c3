//! Infinite graphs of finite total weight, as nested finite truncations.
//!
//! A [`GraphSource`] generates `F_0 ⊂ F_1 ⊂ …`; block `k` carries weights
//! `r^k`, so the weight outside `F_K` has a closed form.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{RawGraph, WeightedGraph};
use crate::routes::zeta_fredholm;
use crate::series::TruncatedSeries;

/// Largest block index a truncation may reach.
pub const BLOCK_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Triangles `(a_k, b_k, c_k)` chained by bridges `c_k — a_{k+1}`.
    TriangleChain,
    /// Rungs `u_k — v_k` and rails `u_k — u_{k+1}`, `v_k — v_{k+1}`.
    Ladder,
    /// The half-line `p_0 — p_1 — …`, a tree.
    Path,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::TriangleChain, Family::Ladder, Family::Path];

    pub fn name(self) -> &'static str {
        match self {
            Family::TriangleChain => "triangle-chain",
            Family::Ladder => "ladder",
            Family::Path => "path",
        }
    }

    /// Weight carried by block `k`, divided by `r^k`.
    fn block_weight(self) -> f64 {
        match self {
            Family::TriangleChain => 8.0,
            Family::Ladder => 6.0,
            Family::Path => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphSource {
    pub family: Family,
    pub r: f64,
}

pub fn make_source(name: &str, r: f64) -> Result<GraphSource> {
    let family = Family::ALL
        .into_iter()
        .find(|f| f.name() == name)
        .ok_or_else(|| Error::UnknownFamily(name.to_string()))?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::FamilyParameter(format!(
            "r = {r} must lie in (0, 1) for the total weight to be finite"
        )));
    }
    Ok(GraphSource { family, r })
}

impl GraphSource {
    /// `w(X) = c/(1 − r)`.
    pub fn total_weight(&self) -> f64 {
        self.family.block_weight() / (1.0 - self.r)
    }

    /// Weight outside `F_K`: `c·r^{K+1}/(1 − r)`.
    pub fn tail_weight(&self, k: usize) -> f64 {
        self.family.block_weight() * self.r.powi(k as i32 + 1) / (1.0 - self.r)
    }

    pub fn valency_bound(&self) -> usize {
        3
    }

    /// `F_K`: blocks `0..=K`, each including the edges that lead to the next
    /// block, so that `F_K` carries exactly the weight of blocks `0..=K`.
    pub fn block(&self, k: usize) -> Result<WeightedGraph> {
        if k > BLOCK_CAP {
            return Err(Error::ResourceCap {
                what: "family blocks",
                requested: k,
                limit: BLOCK_CAP,
            });
        }
        let mut raw = RawGraph::new();
        for j in 0..=k {
            let w = self.r.powi(j as i32);
            raw = match self.family {
                Family::TriangleChain => {
                    let (a, b, c, next) = (
                        format!("a{j}"),
                        format!("b{j}"),
                        format!("c{j}"),
                        format!("a{}", j + 1),
                    );
                    raw.edge(&a, &b, w, w)
                        .edge(&b, &c, w, w)
                        .edge(&c, &a, w, w)
                        .edge(&c, &next, w, w)
                }
                Family::Ladder => {
                    let (u, v) = (format!("u{j}"), format!("v{j}"));
                    let (u1, v1) = (format!("u{}", j + 1), format!("v{}", j + 1));
                    raw.edge(&u, &v, w, w).edge(&u, &u1, w, w).edge(&v, &v1, w, w)
                }
                Family::Path => raw.edge(&format!("p{j}"), &format!("p{}", j + 1), w, w),
            };
        }
        raw.build()
    }
}

#[derive(Debug, Clone)]
pub struct Truncation {
    pub graph: WeightedGraph,
    pub blocks: usize,
    pub tail_weight: f64,
}

/// Smallest `K` with `tail_weight(K) ≤ ε`.
pub fn truncate_source(s: &GraphSource, epsilon: f64) -> Result<Truncation> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::FamilyParameter(format!("ε = {epsilon} must be positive")));
    }
    // tolerate rounding in the closed form when ε is hit exactly
    let fits = |k: usize| s.tail_weight(k) <= epsilon * (1.0 + 1e-12);
    let k = (0..=BLOCK_CAP).find(|&k| fits(k)).ok_or_else(|| {
        let needed = ((epsilon * (1.0 - s.r) / s.family.block_weight()).ln() / s.r.ln() - 1.0).ceil();
        Error::ResourceCap {
            what: "family blocks",
            requested: needed.min(usize::MAX as f64) as usize,
            limit: BLOCK_CAP,
        }
    })?;
    Ok(Truncation {
        graph: s.block(k)?,
        blocks: k,
        tail_weight: s.tail_weight(k),
    })
}

/// `δ_k(n) = |c_n(F_{k+1}) − c_n(F_k)|` for `k < K_max`, `n ≤ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub series: Vec<TruncatedSeries>,
    pub deltas: Vec<Vec<f64>>,
}

pub fn convergence_study(s: &GraphSource, k_max: usize, order: usize) -> Result<ConvergenceStudy> {
    if k_max > BLOCK_CAP {
        return Err(Error::ResourceCap {
            what: "family blocks",
            requested: k_max,
            limit: BLOCK_CAP,
        });
    }
    let series = (0..=k_max)
        .into_par_iter()
        .map(|k| Ok(zeta_fredholm(&s.block(k)?, order).series))
        .collect::<Result<Vec<_>>>()?;
    let deltas = series
        .windows(2)
        .map(|w| (0..=order).map(|n| (w[1].coeff(n) - w[0].coeff(n)).norm()).collect())
        .collect();
    Ok(ConvergenceStudy { series, deltas })
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,n,delta\n");
        for (k, row) in self.deltas.iter().enumerate() {
            for (n, d) in row.iter().enumerate() {
                writeln!(out, "{k},{n},{d:e}").unwrap();
            }
        }
        out
    }

    /// Geometric decay ratio of `δ_k(n)` for `k ≥ from`, from a least-squares
    /// line through `ln δ_k(n)`. `None` with fewer than two positive deltas.
    pub fn decay_ratio(&self, n: usize, from: usize) -> Option<f64> {
        let points: Vec<(f64, f64)> = self
            .deltas
            .iter()
            .enumerate()
            .skip(from)
            .filter(|(_, row)| row[n] > 0.0)
            .map(|(k, row)| (k as f64, row[n].ln()))
            .collect();
        if points.len() < 2 {
            return None;
        }
        let len = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / len;
        let my = points.iter().map(|p| p.1).sum::<f64>() / len;
        let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }
}

/// Vertex and edge sets of `small` lie in `big` with equal weights and flags.
pub fn is_nested(small: &WeightedGraph, big: &WeightedGraph) -> bool {
    small.oriented_edges().iter().all(|oe| {
        let (o, t) = (small.vertex_name(oe.origin), small.vertex_name(oe.target));
        match (big.vertex_index(o), big.vertex_index(t)) {
            (Some(a), Some(b)) => big.find_oriented(a, b).is_some_and(|e| {
                let other = big.oriented(e);
                other.weight == oe.weight && other.backtrack == oe.backtrack
            }),
            _ => false,
        }
    }) && small.vertices().iter().all(|v| big.vertex_index(v).is_some())
}

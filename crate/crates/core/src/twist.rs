//! Hermitean local systems and L-functions.
//!
//! A local system assigns a unitary `U_e : V_{o(e)} → V_{t(e)}` to every
//! oriented edge, with `U_{e⁻¹} = U_e⁻¹`. Edge fibres are trivialised at the
//! origin vertex, so C₁ = ⊕_e V_{o(e)} and C₀ = ⊕_x V_x.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;

use crate::cycles::euler_product;
use crate::error::{Error, Result};
use crate::graph::{Issue, ValidationReport, WeightedGraph};
use crate::linalg::{c, Basis, LinearOperator, C64};
use crate::operators::EdgeMaps;
use crate::routes::{edge_product_factor, sunada_determinant};
use crate::series::{det_from_traces, TruncatedSeries};

pub const UNITARY_TOLERANCE: f64 = 1e-10;

pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSystem {
    dim: usize,
    transfers: BTreeMap<(String, String), CMatrix>,
}

impl LocalSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            transfers: BTreeMap::new(),
        }
    }

    /// Every transfer the `dim × dim` identity.
    pub fn trivial(g: &WeightedGraph, dim: usize) -> Self {
        let mut s = Self::new(dim);
        for e in 0..g.oriented_count() {
            let (o, t) = names(g, e);
            s.transfers.insert((o, t), CMatrix::identity(dim, dim));
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transfers(&self) -> &BTreeMap<(String, String), CMatrix> {
        &self.transfers
    }

    /// Sets `U_{origin→target}` only.
    pub fn set(&mut self, origin: &str, target: &str, u: CMatrix) {
        self.transfers.insert((origin.into(), target.into()), u);
    }

    /// Sets `U_{origin→target}` and its reverse as the adjoint.
    pub fn set_pair(&mut self, origin: &str, target: &str, u: CMatrix) {
        self.transfers
            .insert((target.into(), origin.into()), u.adjoint());
        self.set(origin, target, u);
    }

    pub fn get(&self, origin: &str, target: &str) -> Option<&CMatrix> {
        self.transfers.get(&(origin.to_string(), target.to_string()))
    }

    fn transfer(&self, g: &WeightedGraph, e: usize) -> Result<&CMatrix> {
        let (o, t) = names(g, e);
        self.transfers.get(&(o.clone(), t.clone())).ok_or_else(|| {
            Error::InvalidLocalSystem(ValidationReport {
                issues: vec![Issue::MissingTransfer {
                    origin: o,
                    target: t,
                }],
            })
        })
    }

    /// Change of trivialisation: `U_e ↦ V_{t(e)} U_e V_{o(e)}*`.
    pub fn gauge(&self, g: &WeightedGraph, per_vertex: &[CMatrix]) -> Result<Self> {
        let mut out = Self::new(self.dim);
        for (e, oe) in g.oriented_edges().iter().enumerate() {
            let u = self.transfer(g, e)?;
            let v = &per_vertex[oe.target] * u * per_vertex[oe.origin].adjoint();
            let (o, t) = names(g, e);
            out.transfers.insert((o, t), v);
        }
        Ok(out)
    }
}

fn names(g: &WeightedGraph, e: usize) -> (String, String) {
    let oe = g.oriented(e);
    (
        g.vertex_name(oe.origin).to_string(),
        g.vertex_name(oe.target).to_string(),
    )
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn validate_local_system(g: &WeightedGraph, rho: &LocalSystem) -> ValidationReport {
    let mut issues = Vec::new();
    let d = rho.dim;
    if d == 0 {
        issues.push(Issue::Dimension {
            expected: 1,
            found: "0".into(),
        });
        return ValidationReport { issues };
    }
    let id = CMatrix::identity(d, d);
    for ((o, t), u) in &rho.transfers {
        let on_graph = match (g.vertex_index(o), g.vertex_index(t)) {
            (Some(a), Some(b)) => g.find_oriented(a, b).is_some(),
            _ => false,
        };
        if !on_graph {
            issues.push(Issue::UnknownEdge {
                origin: o.clone(),
                target: t.clone(),
            });
            continue;
        }
        if u.nrows() != d || u.ncols() != d {
            issues.push(Issue::Dimension {
                expected: d,
                found: format!("{}x{} on {o}->{t}", u.nrows(), u.ncols()),
            });
            continue;
        }
        let deviation = max_abs(&(u * u.adjoint() - &id));
        if deviation > UNITARY_TOLERANCE {
            issues.push(Issue::NotUnitary {
                origin: o.clone(),
                target: t.clone(),
                deviation,
            });
        }
    }
    for e in 0..g.oriented_count() {
        let (o, t) = names(g, e);
        let Some(u) = rho.get(&o, &t) else {
            issues.push(Issue::MissingTransfer {
                origin: o,
                target: t,
            });
            continue;
        };
        // report each undirected edge once
        if o > t {
            continue;
        }
        if let Some(back) = rho.get(&t, &o) {
            if u.shape() == (d, d) && back.shape() == (d, d) {
                let deviation = max_abs(&(back * u - &id));
                if deviation > UNITARY_TOLERANCE {
                    issues.push(Issue::InverseMismatch {
                        origin: o,
                        target: t,
                        deviation,
                    });
                }
            }
        }
    }
    ValidationReport { issues }
}

fn require_valid(g: &WeightedGraph, rho: &LocalSystem) -> Result<()> {
    let report = validate_local_system(g, rho);
    if report.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidLocalSystem(report))
    }
}

/// `H = U_{e_l} ⋯ U_{e_1}` along a closed edge sequence.
pub fn holonomy(g: &WeightedGraph, edges: &[usize], rho: &LocalSystem) -> Result<CMatrix> {
    let mut h = CMatrix::identity(rho.dim, rho.dim);
    for &e in edges {
        h = rho.transfer(g, e)? * h;
    }
    Ok(h)
}

/// Fibre-expanded σ_ρ, τ_ρ, J_ρ and the twisted transfer operator T_ρ.
#[derive(Debug, Clone)]
pub struct TwistedOperators {
    pub maps: EdgeMaps,
    pub t: LinearOperator,
}

fn fibre_basis(labels: impl Iterator<Item = String>, d: usize) -> Basis {
    Basis::new(
        labels
            .flat_map(|l| (0..d).map(move |k| format!("{l}#{k}")))
            .collect(),
    )
}

pub fn twisted_operators(g: &WeightedGraph, rho: &LocalSystem) -> Result<TwistedOperators> {
    require_valid(g, rho)?;
    let d = rho.dim;
    let vb = fibre_basis(g.vertices().iter().cloned(), d);
    let eb = fibre_basis((0..g.oriented_count()).map(|e| g.oriented_label(e)), d);
    let edges = g.oriented_edges();

    let mut sigma = Vec::new();
    let mut tau = Vec::new();
    let mut flip = Vec::new();
    let mut t = Vec::new();
    // block (row_block, col_block) ← matrix
    let put = |out: &mut Vec<(usize, usize, C64)>, rb: usize, cb: usize, m: &CMatrix| {
        for i in 0..d {
            for j in 0..d {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    out.push((rb * d + i, cb * d + j, m[(i, j)]));
                }
            }
        }
    };
    let id = CMatrix::identity(d, d);
    for (e, oe) in edges.iter().enumerate() {
        let u = rho.transfer(g, e)?;
        put(&mut sigma, e, oe.origin, &(&id * c(oe.weight)));
        put(&mut tau, oe.target, e, u);
        put(&mut flip, oe.reverse, e, &(u * c(edges[oe.reverse].weight)));
        for &next in g.out_edges(oe.target) {
            if g.admissible_step(e, next) {
                put(&mut t, next, e, &(u * c(edges[next].weight)));
            }
        }
    }
    Ok(TwistedOperators {
        maps: EdgeMaps {
            sigma: LinearOperator::from_triplets(eb.clone(), vb.clone(), sigma),
            tau: LinearOperator::from_triplets(vb, eb.clone(), tau),
            flip: LinearOperator::from_triplets(eb.clone(), eb.clone(), flip),
        },
        t: LinearOperator::from_triplets(eb.clone(), eb, t),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LRoute {
    /// Product over prime cycles of `det(1 − w(p) u^{l(p)} H_p)`.
    Oracle,
    /// `det(1 − uτ_ρ(1 + uJ_ρ)⁻¹σ_ρ) · Π_e (1 − u²W(e))^d`.
    Determinant,
    /// `det(1 − uT_ρ)`.
    Transfer,
}

/// `L(ρ, u)^{-1}` to the given order.
pub fn lfunction(
    g: &WeightedGraph,
    rho: &LocalSystem,
    order: usize,
    route: LRoute,
) -> Result<TruncatedSeries> {
    if g.has_backtracking() {
        return Err(Error::Precondition(
            "L-functions are defined for graphs without backtracking edges".into(),
        ));
    }
    require_valid(g, rho)?;
    match route {
        LRoute::Oracle => euler_product(g, order, Some(rho)),
        LRoute::Determinant => {
            let ops = twisted_operators(g, rho)?;
            let det = sunada_determinant(&ops.maps, order)?;
            Ok(det.mul(&edge_product_factor(g, order, rho.dim as i64, false)?))
        }
        LRoute::Transfer => Ok(det_from_traces(&twisted_operators(g, rho)?.t, order)),
    }
}

/// Unitary from the QR factorisation of a matrix with entries uniform in the
/// unit square.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    loop {
        let m = CMatrix::from_fn(d, d, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        if m.determinant().norm() > 1e-3 {
            return m.qr().q();
        }
    }
}

/// Independent random unitary on every undirected edge, reverse = adjoint.
pub fn random_local_system<R: Rng>(rng: &mut R, g: &WeightedGraph, d: usize) -> LocalSystem {
    let mut s = LocalSystem::new(d);
    for &(a, b) in g.edges() {
        let u = random_unitary(rng, d);
        s.set_pair(g.vertex_name(a), g.vertex_name(b), u);
    }
    s
}

/// Rank-one system with `−1` on `{origin, target}` and `+1` elsewhere.
pub fn sign_system(g: &WeightedGraph, origin: &str, target: &str) -> LocalSystem {
    let mut s = LocalSystem::trivial(g, 1);
    let minus = CMatrix::from_element(1, 1, c(-1.0));
    s.set_pair(origin, target, minus);
    s
}

//! Independent routes to `Z(u)⁻¹`, their cross-validation and the poles of Z.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cycles::euler_product;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{c, LinearOperator, C64, DENSE_LIMIT};
use crate::operators::{
    build_a1_q, build_b, build_b_factored, build_edge_maps, build_t, vertex_basis, EdgeMaps,
};
use crate::series::{det_from_traces, det_operator_series, OperatorSeries, TruncatedSeries};

pub const DEFAULT_ABS_TOL: f64 = 1e-9;
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BassVariant {
    /// Top-right block `u·τJ²`, the block that makes `LM = ML` hold.
    #[default]
    Corrected,
    /// Top-right block `u·τJ`, kept to document the misprint.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaVariant {
    /// `α = ½ Σ W(x, x')` over `x → x' ∉ ℰ` with `x' → x ∈ ℰ`.
    #[default]
    W,
    /// Same sum with `w(x, x')²` in place of `W(x, x')`.
    WSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Oracle,
    Fredholm,
    Sunada,
    Bass,
    Partial,
    Classical,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Oracle => "oracle",
            Route::Fredholm => "fredholm",
            Route::Sunada => "sunada",
            Route::Bass => "bass",
            Route::Partial => "partial",
            Route::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteMetadata {
    pub alpha: Option<f64>,
    pub alpha_variant: Option<AlphaVariant>,
    pub bass_variant: Option<BassVariant>,
    /// `(|V|, |OE|)` for the block determinant.
    pub block_sizes: Option<(usize, usize)>,
    pub asymmetric_backtracking: bool,
    pub experimental: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub route: Route,
    pub series: TruncatedSeries,
    pub metadata: RouteMetadata,
}

impl RouteResult {
    fn plain(route: Route, series: TruncatedSeries) -> Self {
        Self {
            route,
            series,
            metadata: RouteMetadata::default(),
        }
    }
}

/// Options for [`run_route`].
#[derive(Debug, Clone, Copy, Default)]
pub struct RouteOptions {
    pub bass: BassVariant,
    pub alpha: AlphaVariant,
}

pub fn run_route(g: &WeightedGraph, order: usize, route: Route, opts: RouteOptions) -> Result<RouteResult> {
    match route {
        Route::Oracle => Ok(RouteResult::plain(Route::Oracle, euler_product(g, order, None)?)),
        Route::Fredholm => Ok(zeta_fredholm(g, order)),
        Route::Sunada => zeta_sunada(g, order),
        Route::Bass => zeta_bass(g, order, opts.bass),
        Route::Partial => zeta_partial_formula(g, order, opts.alpha),
        Route::Classical => zeta_classical(g, order),
    }
}

pub fn zeta_fredholm(g: &WeightedGraph, order: usize) -> RouteResult {
    RouteResult::plain(Route::Fredholm, det_from_traces(&build_t(g), order))
}

/// `det(Σ_n (−u)^n B_n)` for `B_0 = I` and the given `B_1, B_2, …`.
fn det_b_minus_u(
    basis_op: LinearOperator,
    order: usize,
    mut b: impl FnMut(usize) -> LinearOperator,
) -> Result<TruncatedSeries> {
    let mut coeffs = vec![basis_op];
    for n in 1..=order {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(b(n).scale(c(sign)));
    }
    det_operator_series(&OperatorSeries::new(coeffs)?)
}

/// `det(1 − uτ(1 + uJ)⁻¹σ)` from the three maps (plain or fibre-expanded).
pub(crate) fn sunada_determinant(maps: &EdgeMaps, order: usize) -> Result<TruncatedSeries> {
    let id = LinearOperator::identity(maps.tau.codomain().clone());
    det_b_minus_u(id, order, |n| build_b_factored(maps, n))
}

/// `Π (1 − u²W(e))^exponent` over undirected edges, optionally skipping the
/// edges of ℰ̄.
pub(crate) fn edge_product_factor(
    g: &WeightedGraph,
    order: usize,
    exponent: i64,
    skip_backtracking: bool,
) -> Result<TruncatedSeries> {
    let mut out = TruncatedSeries::one(order);
    for (i, &(x, y)) in g.edges().iter().enumerate() {
        if skip_backtracking {
            let (a, b) = (g.find_oriented(x, y).unwrap(), g.find_oriented(y, x).unwrap());
            if g.in_backtrack_set(a) || g.in_backtrack_set(b) {
                continue;
            }
        }
        let f = TruncatedSeries::one(order)
            .sub(&TruncatedSeries::monomial(order, 2, c(g.edge_product(i))));
        out = out.mul(&f.powi(exponent)?);
    }
    Ok(out)
}

/// Ihara–Sunada factorisation. With ℰ ≠ ∅ this is the product formula.
pub fn zeta_sunada(g: &WeightedGraph, order: usize) -> Result<RouteResult> {
    if g.has_backtracking() {
        return zeta_partial_formula(g, order, AlphaVariant::W);
    }
    let det = sunada_determinant(&build_edge_maps(g), order)?;
    let series = det.mul(&edge_product_factor(g, order, 1, false)?);
    Ok(RouteResult::plain(Route::Sunada, series))
}

/// `min_e 1/√W(e)`, the radius of the first singularity of `det B(−u)`.
pub fn singularity_radius(g: &WeightedGraph) -> f64 {
    (0..g.edge_count())
        .map(|i| 1.0 / g.edge_product(i).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// `det B(−u) · Π(1 − u²W(e))` evaluated at a point from the closed forms
/// `B(u)[x, x] = 1 + Σ u²W/(1 − u²W)` and `B(u)[x', x] = u·w(x, x')/(1 − u²W)`.
pub fn sunada_eval(g: &WeightedGraph, u: C64) -> Result<C64> {
    if g.has_backtracking() {
        return Err(Error::Precondition(
            "closed-form evaluation needs ℰ = ∅".into(),
        ));
    }
    let radius = singularity_radius(g);
    if u.norm() >= radius {
        return Err(Error::Singularity { u: u.norm(), radius });
    }
    let n = g.vertex_count();
    let mut b = DMatrix::<C64>::identity(n, n);
    for oe in g.oriented_edges() {
        let big_w = oe.weight * g.oriented(oe.reverse).weight;
        let denom = c(1.0) - u * u * big_w;
        b[(oe.origin, oe.origin)] += u * u * big_w / denom;
        // B(−u) flips the sign of the odd part
        b[(oe.target, oe.origin)] -= u * oe.weight / denom;
    }
    let product: C64 = (0..g.edge_count())
        .map(|i| c(1.0) - u * u * g.edge_product(i))
        .product();
    Ok(b.determinant() * product)
}

/// Bass-style block determinant on C₀ ⊕ C₁ with coefficients
/// `I`, `[[−A₁, 0], [σ, J]]` and `[[B₂, X], [0, 0]]`, `X = τJ²` or `τJ`.
pub fn zeta_bass(g: &WeightedGraph, order: usize, variant: BassVariant) -> Result<RouteResult> {
    if g.has_backtracking() {
        return Err(Error::Precondition("the block determinant needs ℰ = ∅".into()));
    }
    let maps = build_edge_maps(g);
    let (a1, _) = build_a1_q(g);
    let vb = vertex_basis(g);
    let eb = maps.flip.domain().clone();
    let zero_ve = LinearOperator::zeros(vb.clone(), eb.clone());
    let zero_ev = LinearOperator::zeros(eb.clone(), vb.clone());
    let zero_ee = LinearOperator::zeros(eb.clone(), eb.clone());

    let tj = maps.tau.compose(&maps.flip);
    let top_right = match variant {
        BassVariant::Corrected => tj.compose(&maps.flip),
        BassVariant::AsPrinted => tj,
    };
    let id = LinearOperator::block(
        &LinearOperator::identity(vb.clone()),
        &zero_ve,
        &zero_ev,
        &LinearOperator::identity(eb.clone()),
    );
    let first = LinearOperator::block(&a1.scale(c(-1.0)), &zero_ve, &maps.sigma, &maps.flip);
    let second = LinearOperator::block(&build_b(g, 2), &top_right, &zero_ev, &zero_ee);
    let det = det_operator_series(&OperatorSeries::padded(vec![id, first, second], order)?)?;
    Ok(RouteResult {
        route: Route::Bass,
        series: det,
        metadata: RouteMetadata {
            bass_variant: Some(variant),
            block_sizes: Some((g.vertex_count(), g.oriented_count())),
            ..Default::default()
        },
    })
}

/// The correction exponent α of the product formula.
pub fn alpha(g: &WeightedGraph, variant: AlphaVariant) -> f64 {
    let sum: f64 = g
        .oriented_edges()
        .iter()
        .filter(|oe| !oe.backtrack && g.oriented(oe.reverse).backtrack)
        .map(|oe| match variant {
            AlphaVariant::W => oe.weight * g.oriented(oe.reverse).weight,
            AlphaVariant::WSquared => oe.weight * oe.weight,
        })
        .sum();
    sum / 2.0
}

/// `det B_ℰ(−u) · Π_{e∉ℰ̄}(1 − u²W(e)) · exp(−αu²)`, where `B_ℰ,n` is the
/// filtered direct sum of [`build_b`].
pub fn zeta_partial_formula(g: &WeightedGraph, order: usize, variant: AlphaVariant) -> Result<RouteResult> {
    let det = det_b_minus_u(LinearOperator::identity(vertex_basis(g)), order, |n| build_b(g, n))?;
    let a = alpha(g, variant);
    let correction = TruncatedSeries::monomial(order, 2, c(-a)).exp()?;
    let series = det
        .mul(&edge_product_factor(g, order, 1, true)?)
        .mul(&correction);
    let asymmetric = !g.backtrack_is_symmetric();
    Ok(RouteResult {
        route: Route::Partial,
        series,
        metadata: RouteMetadata {
            alpha: Some(a),
            alpha_variant: Some(variant),
            asymmetric_backtracking: asymmetric,
            experimental: asymmetric,
            ..Default::default()
        },
    })
}

/// `(1 − u²)^{−χ} det(1 − uA₁ + u²Q)` for unit weights and ℰ = ∅.
pub fn zeta_classical(g: &WeightedGraph, order: usize) -> Result<RouteResult> {
    if !g.is_unit_weighted() {
        return Err(Error::Precondition(
            "the classical formula needs every weight equal to 1".into(),
        ));
    }
    if g.has_backtracking() {
        return Err(Error::Precondition("the classical formula needs ℰ = ∅".into()));
    }
    let (a1, q) = build_a1_q(g);
    let id = LinearOperator::identity(vertex_basis(g));
    let det = det_operator_series(&OperatorSeries::padded(vec![id, a1.scale(c(-1.0)), q], order)?)?;
    let chi = g.vertex_count() as i64 - g.edge_count() as i64;
    let base = TruncatedSeries::one(order).sub(&TruncatedSeries::monomial(order, 2, c(1.0)));
    Ok(RouteResult::plain(Route::Classical, det.mul(&base.powi(-chi)?)))
}

/// One row of a [`DiscrepancyReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub first: Route,
    pub second: Route,
    pub max_dev: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscrepancyReport {
    pub results: Vec<RouteResult>,
    pub pairs: Vec<PairVerdict>,
    pub asymmetric_backtracking: bool,
    pub experimental: bool,
}

impl DiscrepancyReport {
    pub fn all_agree(&self) -> bool {
        self.pairs.iter().all(|p| p.agree)
    }

    pub fn result(&self, route: Route) -> Option<&RouteResult> {
        self.results.iter().find(|r| r.route == route)
    }

    pub fn pair(&self, a: Route, b: Route) -> Option<&PairVerdict> {
        self.pairs
            .iter()
            .find(|p| (p.first, p.second) == (a, b) || (p.first, p.second) == (b, a))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("routeA,routeB,max_dev,verdict\n");
        for p in &self.pairs {
            let verdict = if p.agree { "agree" } else { "disagree" };
            writeln!(out, "{},{},{:e},{verdict}", p.first.name(), p.second.name(), p.max_dev).unwrap();
        }
        out
    }
}

/// The routes [`cross_validate`] runs on `g`.
pub fn applicable_routes(g: &WeightedGraph, include_experimental: bool) -> Vec<Route> {
    let mut routes = vec![Route::Oracle, Route::Fredholm];
    if !g.has_backtracking() {
        routes.extend([Route::Sunada, Route::Bass]);
        if g.is_unit_weighted() {
            routes.push(Route::Classical);
        }
    } else if g.backtrack_is_symmetric() || include_experimental {
        routes.push(Route::Partial);
    }
    routes
}

/// Runs every applicable route and compares all pairs coefficientwise with
/// `|a_n − b_n| ≤ abs + rel·max(1, |a_n|, |b_n|)`.
pub fn cross_validate(
    g: &WeightedGraph,
    order: usize,
    include_experimental: bool,
    abs: f64,
    rel: f64,
) -> Result<DiscrepancyReport> {
    let routes = applicable_routes(g, include_experimental);
    let results = routes
        .par_iter()
        .map(|&r| run_route(g, order, r, RouteOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let (a, b) = (&results[i].series, &results[j].series);
            pairs.push(PairVerdict {
                first: results[i].route,
                second: results[j].route,
                max_dev: a.max_deviation(b),
                agree: a.agrees_with(b, abs, rel),
            });
        }
    }
    let experimental = results.iter().any(|r| r.metadata.experimental);
    Ok(DiscrepancyReport {
        results,
        pairs,
        asymmetric_backtracking: g.has_backtracking() && !g.backtrack_is_symmetric(),
        experimental,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub value: C64,
    pub multiplicity: usize,
}

/// Poles `1/λ` of Z for the nonzero eigenvalues λ of T, grouped with
/// multiplicity and sorted by modulus, then argument.
pub fn spectrum_poles(g: &WeightedGraph) -> Result<Vec<Pole>> {
    let n = g.oriented_count();
    if n > DENSE_LIMIT {
        return Err(Error::ResourceCap {
            what: "oriented edge count",
            requested: n,
            limit: DENSE_LIMIT,
        });
    }
    let t = build_t(g).to_dense().map(|z| z.re);
    let eigenvalues = t.complex_eigenvalues();

    let mut groups: Vec<(C64, usize)> = Vec::new();
    for &lambda in eigenvalues.iter() {
        if lambda.norm() <= 1e-12 {
            continue;
        }
        let tol = 1e-6 * lambda.norm().max(1.0);
        match groups.iter_mut().find(|(mu, k)| (*mu / *k as f64 - lambda).norm() <= tol) {
            Some((sum, k)) => {
                *sum += lambda;
                *k += 1;
            }
            None => groups.push((lambda, 1)),
        }
    }
    let mut poles: Vec<Pole> = groups
        .into_iter()
        .map(|(sum, k)| {
            let mut p = c(1.0) / (sum / k as f64);
            if p.im.abs() < 1e-12 {
                p.im = 0.0;
            }
            Pole {
                value: p,
                multiplicity: k,
            }
        })
        .collect();
    let key = |p: &Pole| ((p.value.norm() * 1e9).round() as i64, p.value.arg());
    poles.sort_by(|a, b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    Ok(poles)
}

pub fn poles_csv(poles: &[Pole]) -> String {
    let mut out = String::from("re,im,multiplicity\n");
    for p in poles {
        writeln!(out, "{},{},{}", p.value.re, p.value.im, p.multiplicity).unwrap();
    }
    out
}

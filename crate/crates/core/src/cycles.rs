//! Brute-force ground truth: closed admissible edge sequences, prime cycles,
//! the path sums N_m and the truncated Euler product.
//!
//! A closed sequence `(e_1, …, e_n)` is admissible when every step
//! `e_i → e_{i+1}` *and the seam step* `e_n → e_1` is admissible in the
//! sense of [`WeightedGraph::admissible_step`]. This is the edge-sequence
//! reading under which the Euler product equals `det(1 − uT_ℰ)`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{c, C64};
use crate::series::{reversed_char_poly, TruncatedSeries};
use crate::twist::{holonomy, LocalSystem};

/// Suggested maximum sequence length.
pub const DEFAULT_MAX_LENGTH: usize = 14;
/// Hard cap on enumeration length.
pub const LENGTH_CAP: usize = 20;

fn check_cap(max_len: usize) -> Result<()> {
    if max_len > LENGTH_CAP {
        return Err(Error::ResourceCap {
            what: "cycle length",
            requested: max_len,
            limit: LENGTH_CAP,
        });
    }
    Ok(())
}

/// A rooted closed sequence of oriented-edge indices with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RootedSequence {
    pub edges: Vec<usize>,
    pub weight: f64,
}

/// One rotation class of closed admissible sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    /// Lexicographically minimal rotation.
    pub edges: Vec<usize>,
    pub weight: f64,
    /// Length of the underlying prime, l(c₀).
    pub primitive_length: usize,
    pub is_prime: bool,
    pub holonomy: Option<DMatrix<C64>>,
}

impl CycleRecord {
    pub fn length(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, g: &WeightedGraph) -> String {
        self.edges
            .iter()
            .map(|&e| g.oriented_label(e))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Successor lists of the admissibility relation.
fn successors(g: &WeightedGraph) -> Vec<Vec<usize>> {
    (0..g.oriented_count())
        .map(|e| {
            g.out_edges(g.oriented(e).target)
                .iter()
                .copied()
                .filter(|&n| g.admissible_step(e, n))
                .collect()
        })
        .collect()
}

/// Depth-first walk over admissible open sequences, restricted to edges
/// `>= floor`. `visit` sees every prefix.
struct Walk<'a, A, F> {
    g: &'a WeightedGraph,
    succ: &'a [Vec<usize>],
    floor: usize,
    max_len: usize,
    visit: &'a F,
    acc: A,
}

impl<A, F: Fn(&mut A, &[usize], f64)> Walk<'_, A, F> {
    fn go(&mut self, path: &mut Vec<usize>, weight: f64) {
        (self.visit)(&mut self.acc, path, weight);
        if path.len() == self.max_len {
            return;
        }
        let last = *path.last().unwrap();
        for &next in &self.succ[last] {
            if next < self.floor {
                continue;
            }
            path.push(next);
            self.go(path, weight * self.g.oriented(next).weight);
            path.pop();
        }
    }
}

/// Runs `walk` from every start edge in parallel and returns the
/// accumulators in start-edge order.
fn fan_out<A: Send>(
    g: &WeightedGraph,
    max_len: usize,
    restrict_to_greater: bool,
    init: impl Fn() -> A + Sync,
    visit: impl Fn(&mut A, &[usize], f64) + Sync,
) -> Vec<A> {
    let succ = successors(g);
    (0..g.oriented_count())
        .into_par_iter()
        .map(|start| {
            let mut walk = Walk {
                g,
                succ: &succ,
                floor: if restrict_to_greater { start } else { 0 },
                max_len,
                visit: &visit,
                acc: init(),
            };
            walk.go(&mut vec![start], g.oriented(start).weight);
            walk.acc
        })
        .collect()
}

fn closes(g: &WeightedGraph, path: &[usize]) -> bool {
    g.admissible_step(*path.last().unwrap(), path[0])
}

/// Every rooted closed admissible sequence of length `1..=max_len`, grouped
/// by length (index 0 is empty).
pub fn closed_sequences(g: &WeightedGraph, max_len: usize) -> Result<Vec<Vec<RootedSequence>>> {
    check_cap(max_len)?;
    let per_start = fan_out(g, max_len, false, Vec::new, |acc: &mut Vec<RootedSequence>, path, w| {
        if closes(g, path) {
            acc.push(RootedSequence {
                edges: path.to_vec(),
                weight: w,
            });
        }
    });
    let mut by_length = vec![Vec::new(); max_len + 1];
    for seqs in per_start {
        for s in seqs {
            by_length[s.edges.len()].push(s);
        }
    }
    Ok(by_length)
}

/// Path sums N_1 … N_L.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSums {
    /// Total weight of rooted closed admissible sequences (seam included);
    /// equals tr T^m.
    pub strict: Vec<f64>,
    /// Vertex-path count under the literal tail rule
    /// `x_0 = x_{n−1} ⇒ (x_1, x_0) ∈ ℰ`, no seam condition. Only computed when
    /// ℰ ≠ ∅.
    pub literal: Option<Vec<f64>>,
}

pub fn compute_nm(g: &WeightedGraph, max_len: usize) -> Result<PathSums> {
    check_cap(max_len)?;
    let zeros = || vec![0.0; max_len];
    let strict = fan_out(g, max_len, false, zeros, |acc: &mut Vec<f64>, path, w| {
        if closes(g, path) {
            acc[path.len() - 1] += w;
        }
    });
    let strict = sum_in_order(strict, max_len);

    let literal = g.has_backtracking().then(|| {
        let per_start = fan_out(g, max_len, false, zeros, |acc: &mut Vec<f64>, path, w| {
            let first = g.oriented(path[0]);
            let last = g.oriented(*path.last().unwrap());
            if last.target != first.origin {
                return;
            }
            // x_{n−1} = x_0 forces (x_1, x_0) ∈ ℰ
            if last.origin == first.origin && !g.in_backtrack_set(first.reverse) {
                return;
            }
            acc[path.len() - 1] += w;
        });
        sum_in_order(per_start, max_len)
    });
    Ok(PathSums { strict, literal })
}

fn sum_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for part in parts {
        for (o, x) in out.iter_mut().zip(part) {
            *o += x;
        }
    }
    out
}

/// Index of the lexicographically minimal rotation.
pub fn minimal_rotation(seq: &[usize]) -> usize {
    let n = seq.len();
    (0..n)
        .min_by(|&a, &b| {
            (0..n)
                .map(|i| seq[(a + i) % n].cmp(&seq[(b + i) % n]))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0)
}

/// Smallest period `d` (dividing `len`) with `seq` invariant under rotation by `d`.
pub fn primitive_period(seq: &[usize]) -> usize {
    let n = seq.len();
    (1..=n)
        .find(|&d| n.is_multiple_of(d) && (0..n).all(|i| seq[i] == seq[(i + d) % n]))
        .unwrap_or(n)
}

fn is_own_minimal_rotation(seq: &[usize]) -> bool {
    let n = seq.len();
    (1..n).all(|r| {
        (0..n)
            .map(|i| seq[(r + i) % n].cmp(&seq[i]))
            .find(|o| o.is_ne())
            .is_none_or(|o| o.is_gt())
    })
}

/// One record per rotation class of closed admissible sequences of length
/// `≤ max_len`, sorted by length then canonical edge sequence.
pub fn prime_cycles(g: &WeightedGraph, max_len: usize) -> Result<Vec<CycleRecord>> {
    check_cap(max_len)?;
    // the minimal rotation starts at its smallest edge, so a walk from
    // `start` only needs edges >= start
    let per_start = fan_out(g, max_len, true, Vec::new, |acc: &mut Vec<CycleRecord>, path, w| {
        if closes(g, path) && is_own_minimal_rotation(path) {
            let period = primitive_period(path);
            acc.push(CycleRecord {
                edges: path.to_vec(),
                weight: w,
                primitive_length: period,
                is_prime: period == path.len(),
                holonomy: None,
            });
        }
    });
    let mut records: Vec<CycleRecord> = per_start.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.edges
            .len()
            .cmp(&b.edges.len())
            .then_with(|| a.edges.cmp(&b.edges))
    });
    Ok(records)
}

/// `Z(u)^{-1}` (or `L(ρ, u)^{-1}`) as the truncated product over primes of
/// `det(1 − w(p) u^{l(p)} H_p)`; `H_p = 1` without a local system.
pub fn euler_product(
    g: &WeightedGraph,
    order: usize,
    system: Option<&LocalSystem>,
) -> Result<TruncatedSeries> {
    let primes: Vec<CycleRecord> = prime_cycles(g, order)?
        .into_iter()
        .filter(|r| r.is_prime)
        .collect();
    let mut product = TruncatedSeries::one(order);
    for p in &primes {
        let l = p.length();
        let factor = match system {
            None => {
                let mut f = TruncatedSeries::one(order);
                f = f.sub(&TruncatedSeries::monomial(order, l, c(p.weight)));
                f
            }
            Some(rho) => {
                let h = holonomy(g, &p.edges, rho)?;
                let poly = reversed_char_poly(&h);
                let mut f = TruncatedSeries::zero(order);
                for (k, &a) in poly.iter().enumerate() {
                    if k * l <= order {
                        f = f.add(&TruncatedSeries::monomial(order, k * l, a * p.weight.powi(k as i32)));
                    }
                }
                f
            }
        };
        product = product.mul(&factor);
    }
    Ok(product)
}

/// CSV rows `length,weight,primitive_length,is_prime,edge_sequence`.
pub fn primes_csv(g: &WeightedGraph, records: &[CycleRecord]) -> String {
    let mut out = String::from("length,weight,primitive_length,is_prime,edge_sequence\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.length(),
            r.weight,
            r.primitive_length,
            r.is_prime,
            r.label(g)
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn closed_sequences_of_fixtures() {
        let k3 = closed_sequences(&fixtures::k3(), 3).unwrap();
        assert_eq!(k3[3].len(), 6);
        assert!(k3[3].iter().all(|s| s.weight == 1.0));
        assert!(k3[1].is_empty() && k3[2].is_empty());

        let bt1 = closed_sequences(&fixtures::bt1(), 2).unwrap();
        assert_eq!(bt1[2].len(), 2);
        assert_eq!(bt1[2].iter().map(|s| s.weight).sum::<f64>(), 12.0);

        let bt2 = closed_sequences(&fixtures::bt2(), 4).unwrap();
        assert!(bt2.iter().all(|v| v.is_empty()));

        assert!(matches!(
            closed_sequences(&fixtures::k3(), 21),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn path_sums() {
        let n = compute_nm(&fixtures::k3(), 6).unwrap();
        assert_eq!(n.strict, vec![0.0, 0.0, 6.0, 0.0, 0.0, 6.0]);
        assert!(n.literal.is_none());

        // two directed triangles of weight 0.0625 and 0.008, three roots each
        let n = compute_nm(&fixtures::wt3(), 3).unwrap();
        assert!((n.strict[2] - 0.2115).abs() < 1e-15);

        let n = compute_nm(&fixtures::bt2(), 6).unwrap();
        assert!(n.strict.iter().all(|&x| x == 0.0));
        let literal = n.literal.unwrap();
        assert_eq!(literal[1], 6.0);
    }

    #[test]
    fn prime_classes() {
        let recs = prime_cycles(&fixtures::k3(), 6).unwrap();
        let primes: Vec<_> = recs.iter().filter(|r| r.is_prime).collect();
        assert_eq!(primes.len(), 2);
        assert!(primes.iter().all(|r| r.length() == 3));
        let powers: Vec<_> = recs.iter().filter(|r| r.length() == 6).collect();
        assert_eq!(powers.len(), 2);
        assert!(powers.iter().all(|r| !r.is_prime && r.primitive_length == 3));

        assert!(prime_cycles(&fixtures::p3(), 12).unwrap().is_empty());

        let bt1 = prime_cycles(&fixtures::bt1(), 4).unwrap();
        let primes: Vec<_> = bt1.iter().filter(|r| r.is_prime).collect();
        assert_eq!(primes.len(), 1);
        assert_eq!((primes[0].length(), primes[0].weight), (2, 6.0));
    }

    #[test]
    fn euler_products_of_fixtures() {
        let z = euler_product(&fixtures::k3(), 6, None).unwrap();
        assert!(z.agrees_with(&TruncatedSeries::from_real(&[1.0, 0.0, 0.0, -2.0, 0.0, 0.0, 1.0]), 1e-15, 0.0));

        let z = euler_product(&fixtures::wt3(), 6, None).unwrap();
        let want = TruncatedSeries::from_real(&[1.0, 0.0, 0.0, -0.0625, 0.0, 0.0, 0.0])
            .mul(&TruncatedSeries::from_real(&[1.0, 0.0, 0.0, -0.008, 0.0, 0.0, 0.0]));
        assert!(z.agrees_with(&want, 1e-15, 0.0));

        let z = euler_product(&fixtures::bt1(), 6, None).unwrap();
        assert!(z.agrees_with(&TruncatedSeries::from_real(&[1.0, 0.0, -6.0, 0.0, 0.0, 0.0, 0.0]), 1e-15, 0.0));
    }

    #[test]
    fn rotation_helpers() {
        assert_eq!(minimal_rotation(&[3, 1, 2]), 1);
        assert_eq!(primitive_period(&[1, 2, 1, 2]), 2);
        assert_eq!(primitive_period(&[1, 2, 3]), 3);
        assert!(is_own_minimal_rotation(&[1, 2, 1, 3]));
        assert!(!is_own_minimal_rotation(&[1, 3, 1, 2]));
    }
}

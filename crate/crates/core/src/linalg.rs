//! Finite matrices with labelled bases.
//!
//! Operators up to [`DENSE_LIMIT`] basis elements are stored as dense
//! `nalgebra` matrices; larger ones switch to compressed sparse columns. The
//! choice is internal and no result depends on it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

pub type C64 = Complex64;

pub const DENSE_LIMIT: usize = 2000;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Ordered labels of a basis; cheap to clone.
#[derive(Clone, PartialEq, Eq)]
pub struct Basis(Arc<[String]>);

impl Basis {
    pub fn new(labels: Vec<String>) -> Self {
        Self(labels.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    /// Direct sum: labels of `self` followed by those of `other`.
    pub fn concat(&self, other: &Basis) -> Basis {
        Basis::new(self.0.iter().chain(other.0.iter()).cloned().collect())
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Basis({})", self.0.len())
    }
}

#[derive(Clone, Debug)]
struct Csc {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl Csc {
    fn from_columns(rows: usize, columns: Vec<Vec<(usize, C64)>>) -> Self {
        let cols = columns.len();
        let mut col_ptr = Vec::with_capacity(cols + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for (r, v) in col {
                if last == Some(r) {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = Some(r);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    fn get(&self, r: usize, c: usize) -> C64 {
        self.column(c)
            .find(|&(row, _)| row == r)
            .map_or(C64::new(0.0, 0.0), |(_, v)| v)
    }

    fn from_dense(m: &DMatrix<C64>) -> Self {
        let columns = (0..m.ncols())
            .map(|j| {
                (0..m.nrows())
                    .filter(|&i| m[(i, j)] != C64::new(0.0, 0.0))
                    .map(|i| (i, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_columns(m.nrows(), columns)
    }

    fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for j in 0..self.cols {
            for (i, v) in self.column(j) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(DMatrix<C64>),
    Sparse(Csc),
}

/// A matrix indexed `[row, column]` in the canonical orders of its codomain
/// and domain bases.
#[derive(Clone, Debug)]
pub struct LinearOperator {
    codomain: Basis,
    domain: Basis,
    storage: Storage,
}

fn prefers_sparse(rows: usize, cols: usize) -> bool {
    rows.max(cols) > DENSE_LIMIT
}

impl LinearOperator {
    /// Sums duplicate `(row, column, value)` entries.
    pub fn from_triplets(
        codomain: Basis,
        domain: Basis,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let (rows, cols) = (codomain.len(), domain.len());
        let storage = if prefers_sparse(rows, cols) {
            let mut columns = vec![Vec::new(); cols];
            for (r, c, v) in triplets {
                columns[c].push((r, v));
            }
            Storage::Sparse(Csc::from_columns(rows, columns))
        } else {
            let mut m = DMatrix::zeros(rows, cols);
            for (r, c, v) in triplets {
                m[(r, c)] += v;
            }
            Storage::Dense(m)
        };
        Self {
            codomain,
            domain,
            storage,
        }
    }

    pub fn from_dense(codomain: Basis, domain: Basis, m: DMatrix<C64>) -> Self {
        assert_eq!((m.nrows(), m.ncols()), (codomain.len(), domain.len()));
        let storage = if prefers_sparse(m.nrows(), m.ncols()) {
            Storage::Sparse(Csc::from_dense(&m))
        } else {
            Storage::Dense(m)
        };
        Self {
            codomain,
            domain,
            storage,
        }
    }

    pub fn zeros(codomain: Basis, domain: Basis) -> Self {
        Self::from_triplets(codomain, domain, std::iter::empty())
    }

    pub fn identity(basis: Basis) -> Self {
        let n = basis.len();
        Self::from_triplets(basis.clone(), basis, (0..n).map(|i| (i, i, c(1.0))))
    }

    pub fn codomain(&self) -> &Basis {
        &self.codomain
    }

    pub fn domain(&self) -> &Basis {
        &self.domain
    }

    pub fn rows(&self) -> usize {
        self.codomain.len()
    }

    pub fn cols(&self) -> usize {
        self.domain.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m[(r, c)],
            Storage::Sparse(s) => s.get(r, c),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    fn to_csc(&self) -> Csc {
        match &self.storage {
            Storage::Dense(m) => Csc::from_dense(m),
            Storage::Sparse(s) => s.clone(),
        }
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        assert_eq!(v.len(), self.cols());
        match &self.storage {
            Storage::Dense(m) => m * v,
            Storage::Sparse(s) => {
                let mut out = DVector::zeros(self.rows());
                for j in 0..s.cols {
                    if v[j] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (i, a) in s.column(j) {
                        out[i] += a * v[j];
                    }
                }
                out
            }
        }
    }

    /// `self ∘ rhs`: apply `rhs` first.
    pub fn compose(&self, rhs: &LinearOperator) -> LinearOperator {
        assert_eq!(self.cols(), rhs.rows(), "operator dimensions do not compose");
        let (codomain, domain) = (self.codomain.clone(), rhs.domain.clone());
        match (&self.storage, &rhs.storage) {
            (Storage::Dense(a), Storage::Dense(b)) if !prefers_sparse(a.nrows(), b.ncols()) => {
                Self::from_dense(codomain, domain, a * b)
            }
            _ => {
                let (a, b) = (self.to_csc(), rhs.to_csc());
                let columns: Vec<Vec<(usize, C64)>> = (0..b.cols)
                    .map(|j| {
                        let mut col = Vec::new();
                        for (k, bkj) in b.column(j) {
                            col.extend(a.column(k).map(|(i, aik)| (i, aik * bkj)));
                        }
                        col
                    })
                    .collect();
                let csc = Csc::from_columns(a.rows, columns);
                let storage = if prefers_sparse(csc.rows, csc.cols) {
                    Storage::Sparse(csc)
                } else {
                    Storage::Dense(csc.to_dense())
                };
                Self {
                    codomain,
                    domain,
                    storage,
                }
            }
        }
    }

    fn zip_with(&self, rhs: &LinearOperator, f: impl Fn(C64, C64) -> C64) -> LinearOperator {
        assert_eq!((self.rows(), self.cols()), (rhs.rows(), rhs.cols()));
        let (codomain, domain) = (self.codomain.clone(), self.domain.clone());
        match (&self.storage, &rhs.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => {
                Self::from_dense(codomain, domain, a.zip_map(b, f))
            }
            _ => {
                let (a, b) = (self.to_csc(), rhs.to_csc());
                let zero = C64::new(0.0, 0.0);
                let columns = (0..a.cols)
                    .map(|j| {
                        a.column(j)
                            .map(|(i, v)| (i, f(v, zero)))
                            .chain(b.column(j).map(|(i, v)| (i, f(zero, v))))
                            .collect()
                    })
                    .collect();
                Self {
                    codomain,
                    domain,
                    storage: Storage::Sparse(Csc::from_columns(a.rows, columns)),
                }
            }
        }
    }

    pub fn add(&self, rhs: &LinearOperator) -> LinearOperator {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &LinearOperator) -> LinearOperator {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> LinearOperator {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m * s),
            Storage::Sparse(csc) => {
                let mut csc = csc.clone();
                csc.values.iter_mut().for_each(|v| *v *= s);
                Storage::Sparse(csc)
            }
        };
        Self {
            codomain: self.codomain.clone(),
            domain: self.domain.clone(),
            storage,
        }
    }

    pub fn pow(&self, k: usize) -> LinearOperator {
        assert!(self.is_square());
        (0..k).fold(Self::identity(self.domain.clone()), |acc, _| self.compose(&acc))
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows()).map(|i| self.get(i, i)).sum()
    }

    /// `tr(T^1), …, tr(T^n)` by pushing each basis vector through `n`
    /// applications and reading off its own coordinate. Columns run in
    /// parallel; the reduction is in canonical column order, so the result
    /// does not depend on the thread count.
    pub fn power_traces(&self, n: usize) -> Vec<C64> {
        assert!(self.is_square());
        let dim = self.rows();
        // transfer operators are sparse whatever their storage
        let csc = self.to_csc();
        let per_column: Vec<Vec<C64>> = (0..dim)
            .into_par_iter()
            .map(|j| {
                let zero = C64::new(0.0, 0.0);
                let mut v = vec![zero; dim];
                let mut next = vec![zero; dim];
                v[j] = c(1.0);
                (0..n)
                    .map(|_| {
                        next.fill(zero);
                        for (k, &x) in v.iter().enumerate() {
                            if x != zero {
                                for (i, a) in csc.column(k) {
                                    next[i] += a * x;
                                }
                            }
                        }
                        std::mem::swap(&mut v, &mut next);
                        v[j]
                    })
                    .collect()
            })
            .collect();
        let mut traces = vec![C64::new(0.0, 0.0); n];
        for col in per_column {
            for (t, x) in traces.iter_mut().zip(col) {
                *t += x;
            }
        }
        traces
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &LinearOperator) -> f64 {
        let d = self.to_dense() - other.to_dense();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.to_dense().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Assembles `[[tl, tr], [bl, br]]` on the direct sums of the bases.
    pub fn block(
        tl: &LinearOperator,
        tr: &LinearOperator,
        bl: &LinearOperator,
        br: &LinearOperator,
    ) -> LinearOperator {
        let (r0, c0) = (tl.rows(), tl.cols());
        assert_eq!(tr.rows(), r0);
        assert_eq!(bl.cols(), c0);
        assert_eq!((br.rows(), br.cols()), (bl.rows(), tr.cols()));
        let codomain = tl.codomain.concat(&bl.codomain);
        let domain = tl.domain.concat(&tr.domain);
        let mut triplets = Vec::new();
        for (op, dr, dc) in [(tl, 0, 0), (tr, 0, c0), (bl, r0, 0), (br, r0, c0)] {
            let csc = op.to_csc();
            for j in 0..csc.cols {
                triplets.extend(csc.column(j).map(|(i, v)| (i + dr, j + dc, v)));
            }
        }
        Self::from_triplets(codomain, domain, triplets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Basis {
        Basis::new((0..n).map(|i| format!("b{i}")).collect())
    }

    fn ring(n: usize) -> Vec<(usize, usize, C64)> {
        (0..n).map(|i| ((i + 1) % n, i, c(1.0 + i as f64))).collect()
    }

    #[test]
    fn sparse_and_dense_agree() {
        let n = DENSE_LIMIT + 3;
        let big = LinearOperator::from_triplets(labels(n), labels(n), ring(n));
        assert!(big.is_sparse());
        let sq = big.compose(&big);
        assert!(sq.is_sparse());
        assert_eq!(sq.get(2, 0), c(2.0));
        let small = LinearOperator::from_triplets(labels(5), labels(5), ring(5));
        assert!(!small.is_sparse());
        let traces = small.power_traces(10);
        // each of the 5 columns returns after 5 steps with weight 5! = 120
        assert!((traces[4] - c(600.0)).norm() < 1e-9);
        assert!((traces[9] - c(72000.0)).norm() < 1e-6);
        assert!(traces[0].norm() == 0.0);
    }

    #[test]
    fn sparse_power_traces_match_dense_formula() {
        let n = DENSE_LIMIT + 1;
        let big = LinearOperator::from_triplets(labels(n), labels(n), (0..n).map(|i| (i, i, c(0.5))));
        let tr = big.power_traces(3);
        assert!((tr[2] - c(0.125 * n as f64)).norm() < 1e-9);
    }

    #[test]
    fn block_assembly() {
        let a = LinearOperator::identity(labels(2));
        let b = LinearOperator::from_triplets(labels(2), labels(3), [(0, 2, c(4.0))]);
        let z = LinearOperator::zeros(labels(3), labels(2));
        let d = LinearOperator::identity(labels(3)).scale(c(2.0));
        let m = LinearOperator::block(&a, &b, &z, &d);
        assert_eq!(m.rows(), 5);
        assert_eq!(m.get(0, 4), c(4.0));
        assert_eq!(m.get(4, 4), c(2.0));
        assert_eq!(m.trace(), c(8.0));
    }
}

//! Truncated power series in `u` with complex scalar or operator
//! coefficients, and the Fredholm determinant in both forms:
//! `det(1 − uT)` from power traces, and `det(S(u))` for an operator series
//! with unit constant term.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, Basis, LinearOperator, C64};

pub const DEFAULT_ORDER: usize = 12;
pub const MAX_ORDER: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `c_0 + c_1 u + … + c_M u^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<C64>,
}

impl TruncatedSeries {
    /// Panics on an empty coefficient list.
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least c_0");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| c(x)).collect())
    }

    pub fn zero(order: usize) -> Self {
        Self::new(vec![ZERO; order + 1])
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(order, 0, c(1.0))
    }

    pub fn monomial(order: usize, power: usize, coeff: C64) -> Self {
        let mut s = Self::zero(order);
        if power <= order {
            s.coeffs[power] = coeff;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `u^n`; zero past the order.
    pub fn coeff(&self, n: usize) -> C64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.coeffs.iter().map(|z| z.re).collect()
    }

    /// Truncates or zero-extends to `order`.
    pub fn with_order(&self, order: usize) -> Self {
        Self::new((0..=order).map(|n| self.coeff(n)).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let order = self.order().max(rhs.order());
        Self::new((0..=order).map(|n| self.coeff(n) + rhs.coeff(n)).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let order = self.order().max(rhs.order());
        Self::new((0..=order).map(|n| self.coeff(n) - rhs.coeff(n)).collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&x| x * s).collect())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let order = self.order().max(rhs.order());
        let mut out = vec![ZERO; order + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate().take(order + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Multiplicative inverse; needs `c_0 ≠ 0`.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0 == ZERO {
            return Err(Error::Precondition(
                "cannot invert a series with zero constant term".into(),
            ));
        }
        let mut out = vec![ZERO; self.coeffs.len()];
        out[0] = c0.inv();
        for n in 1..out.len() {
            let s: C64 = (1..=n).map(|k| self.coeffs[k] * out[n - k]).sum();
            out[n] = -s / c0;
        }
        Ok(Self::new(out))
    }

    /// Integer power; negative exponents go through [`invert`](Self::invert).
    pub fn powi(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.invert()? } else { self.clone() };
        let mut out = Self::one(self.order());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    /// Termwise derivative `Σ n c_n u^{n−1}`, order drops by one (floor 0).
    pub fn derive(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self::new(
            (1..self.coeffs.len())
                .map(|n| self.coeffs[n] * n as f64)
                .collect(),
        )
    }

    /// `a(s·u)`.
    pub fn compose_scale(&self, s: C64) -> Self {
        let mut p = c(1.0);
        Self::new(
            self.coeffs
                .iter()
                .map(|&x| {
                    let y = x * p;
                    p *= s;
                    y
                })
                .collect(),
        )
    }

    /// Needs `c_0 = 0`.
    pub fn exp(&self) -> Result<Self> {
        if self.coeffs[0].norm() > 1e-12 {
            return Err(Error::Precondition(format!(
                "exp needs c_0 = 0, got {}",
                self.coeffs[0]
            )));
        }
        let a = &self.coeffs;
        let mut b = vec![ZERO; a.len()];
        b[0] = c(1.0);
        for n in 1..a.len() {
            let s: C64 = (1..=n).map(|k| a[k] * b[n - k] * k as f64).sum();
            b[n] = s / n as f64;
        }
        Ok(Self::new(b))
    }

    /// Needs `c_0 = 1`.
    pub fn log(&self) -> Result<Self> {
        if (self.coeffs[0] - c(1.0)).norm() > 1e-12 {
            return Err(Error::Precondition(format!(
                "log needs c_0 = 1, got {}",
                self.coeffs[0]
            )));
        }
        let a = &self.coeffs;
        let mut b = vec![ZERO; a.len()];
        for n in 1..a.len() {
            let s: C64 = (1..n).map(|k| b[k] * a[n - k] * k as f64).sum();
            b[n] = a[n] - s / n as f64;
        }
        Ok(Self::new(b))
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, u: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &x| acc * u + x)
    }

    /// Largest `|a_n − b_n|` over the common order range.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let order = self.order().max(other.order());
        (0..=order)
            .map(|n| (self.coeff(n) - other.coeff(n)).norm())
            .fold(0.0, f64::max)
    }

    /// Coefficientwise `|a_n − b_n| ≤ abs + rel·max(1, |a_n|, |b_n|)`.
    pub fn agrees_with(&self, other: &Self, abs: f64, rel: f64) -> bool {
        let order = self.order().max(other.order());
        (0..=order).all(|n| {
            let (a, b) = (self.coeff(n), other.coeff(n));
            (a - b).norm() <= abs + rel * 1f64.max(a.norm()).max(b.norm())
        })
    }

    /// One `n,re,im` line per coefficient.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (n, z) in self.coeffs.iter().enumerate() {
            writeln!(out, "{n},{},{}", z.re, z.im).unwrap();
        }
        out
    }
}

/// `det(1 − uT)` to order `m` by Newton's identities on the power traces:
/// `c_k = −(1/k) Σ_{j=1..k} tr(T^j) c_{k−j}`.
pub fn det_from_traces(t: &LinearOperator, m: usize) -> TruncatedSeries {
    let p = t.power_traces(m);
    det_from_power_sums(&p)
}

/// Newton's identities for `det(1 − uT)` given `p_j = tr T^j`, `j = 1..=M`.
pub fn det_from_power_sums(p: &[C64]) -> TruncatedSeries {
    let mut out = vec![ZERO; p.len() + 1];
    out[0] = c(1.0);
    for k in 1..=p.len() {
        let s: C64 = (1..=k).map(|j| p[j - 1] * out[k - j]).sum();
        out[k] = -s / k as f64;
    }
    TruncatedSeries::new(out)
}

/// `det(1 − xH) = Σ_k (−1)^k e_k(H) x^k` with `e_k` the sum of the
/// principal `k × k` minors. Exact polynomial of degree `dim H`.
pub fn reversed_char_poly(h: &DMatrix<C64>) -> Vec<C64> {
    let d = h.nrows();
    assert_eq!(d, h.ncols());
    assert!(d <= 20, "principal-minor expansion is limited to dimension 20");
    let mut out = vec![ZERO; d + 1];
    for mask in 0u32..(1 << d) {
        let idx: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let minor = if k == 0 {
            c(1.0)
        } else {
            DMatrix::from_fn(k, k, |i, j| h[(idx[i], idx[j])]).determinant()
        };
        out[k] += if k.is_multiple_of(2) { minor } else { -minor };
    }
    out
}

/// `Σ_k S_k u^k` with square coefficients on a common basis.
#[derive(Debug, Clone)]
pub struct OperatorSeries {
    coeffs: Vec<LinearOperator>,
}

impl OperatorSeries {
    pub fn new(coeffs: Vec<LinearOperator>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::Precondition("empty operator series".into()))?;
        let dim = first.rows();
        if coeffs.iter().any(|op| op.rows() != dim || op.cols() != dim) {
            return Err(Error::Precondition(
                "operator series coefficients must share one square basis".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// Pads with zero operators up to `order`.
    pub fn padded(mut coeffs: Vec<LinearOperator>, order: usize) -> Result<Self> {
        let basis = coeffs
            .first()
            .map(|op| op.domain().clone())
            .ok_or_else(|| Error::Precondition("empty operator series".into()))?;
        coeffs.truncate(order + 1);
        while coeffs.len() < order + 1 {
            coeffs.push(LinearOperator::zeros(basis.clone(), basis.clone()));
        }
        Self::new(coeffs)
    }

    /// `I − uT` to the given order.
    pub fn one_minus(t: &LinearOperator, order: usize) -> Result<Self> {
        let basis = t.domain().clone();
        Self::padded(
            vec![LinearOperator::identity(basis), t.scale(c(-1.0))],
            order,
        )
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].rows()
    }

    pub fn basis(&self) -> &Basis {
        self.coeffs[0].domain()
    }

    pub fn coeffs(&self) -> &[LinearOperator] {
        &self.coeffs
    }

    /// Truncated product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        let order = self.order().max(rhs.order());
        let basis = self.basis().clone();
        let mut out = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut acc = LinearOperator::zeros(basis.clone(), basis.clone());
            for k in 0..=n {
                if let (Some(a), Some(b)) = (self.coeffs.get(k), rhs.coeffs.get(n - k)) {
                    acc = acc.add(&a.compose(b));
                }
            }
            out.push(acc);
        }
        Self::new(out)
    }

    fn dense(&self) -> Vec<DMatrix<C64>> {
        self.coeffs.iter().map(|op| op.to_dense()).collect()
    }

    fn check_unit(&self) -> Result<()> {
        let dev = self.coeffs[0].max_abs_diff(&LinearOperator::identity(self.basis().clone()));
        if dev > 1e-12 {
            return Err(Error::Precondition(format!(
                "constant coefficient is not the identity (deviation {dev:e})"
            )));
        }
        Ok(())
    }
}

/// `det S(u)` for `S_0 = I`, computed as `exp(tr log S)` through
/// `(log det S)' = tr(S' S⁻¹)`. For dimension ≤ 6 the principal-minor
/// expansion is evaluated too and must agree to 1e-10, measured against the
/// size of the terms the exponential cancels.
pub fn det_operator_series(s: &OperatorSeries) -> Result<TruncatedSeries> {
    s.check_unit()?;
    let log_det = log_det_trace(s);
    let det = log_det.exp()?;
    if s.dim() <= 6 {
        let check = det_by_minors(s)?;
        // exp of the log series cancels terms as large as the coefficients
        // of exp(Σ |L_n| u^n), so that majorant sets the scale of the noise
        let majorant = TruncatedSeries::new(log_det.coeffs().iter().map(|z| c(z.norm())).collect()).exp()?;
        let bad = (0..=det.order()).find(|&n| {
            (det.coeff(n) - check.coeff(n)).norm() > 1e-10 * majorant.coeff(n).re.max(1.0)
        });
        if let Some(n) = bad {
            return Err(Error::CrossCheck(format!(
                "trace-log and exterior-power determinants differ by {:e} at u^{n}",
                (det.coeff(n) - check.coeff(n)).norm()
            )));
        }
    }
    Ok(det)
}

/// `log det S = ∫ tr(S' S⁻¹)`.
fn log_det_trace(s: &OperatorSeries) -> TruncatedSeries {
    let m = s.order();
    let dim = s.dim();
    let coeffs = s.dense();
    // S⁻¹ = Σ R_n u^n with R_0 = I, R_n = −Σ_{k=1..n} S_k R_{n−k}
    let mut inv: Vec<DMatrix<C64>> = vec![DMatrix::identity(dim, dim)];
    for n in 1..m {
        let mut r = DMatrix::zeros(dim, dim);
        for k in 1..=n {
            r -= &coeffs[k] * &inv[n - k];
        }
        inv.push(r);
    }
    // f = tr(S' S⁻¹) to order m − 1; log det S = ∫ f
    let mut log_det = vec![ZERO; m + 1];
    for n in 0..m {
        let mut f = ZERO;
        for k in 0..=n {
            let d = &coeffs[k + 1];
            let r = &inv[n - k];
            f += trace_of_product(d, r) * (k + 1) as f64;
        }
        log_det[n + 1] = f / (n + 1) as f64;
    }
    TruncatedSeries::new(log_det)
}

fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let mut t = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

/// `det(I + X) = Σ_k tr ⋀^k X`, the sum over all principal minors of
/// `X = S − I`, each minor expanded over permutations with truncated series
/// entries.
pub fn det_by_minors(s: &OperatorSeries) -> Result<TruncatedSeries> {
    s.check_unit()?;
    let m = s.order();
    let d = s.dim();
    if d > 10 {
        return Err(Error::ResourceCap {
            what: "exterior-power expansion dimension",
            requested: d,
            limit: 10,
        });
    }
    let dense = s.dense();
    let entry = |i: usize, j: usize| {
        TruncatedSeries::new(
            (0..=m)
                .map(|k| if k == 0 { ZERO } else { dense[k][(i, j)] })
                .collect(),
        )
    };
    let x: Vec<Vec<TruncatedSeries>> = (0..d).map(|i| (0..d).map(|j| entry(i, j)).collect()).collect();

    let mut total = TruncatedSeries::one(m);
    for mask in 1u32..(1 << d) {
        let idx: Vec<usize> = (0..d).filter(|&i| mask & (1 << i) != 0).collect();
        // a k-minor of X starts at u^k
        if idx.len() > m {
            continue;
        }
        for (perm, sign) in permutations(idx.len()) {
            let mut term = TruncatedSeries::one(m);
            for (row, &col) in perm.iter().enumerate() {
                term = term.mul(&x[idx[row]][idx[col]]);
            }
            total = if sign > 0 { total.add(&term) } else { total.sub(&term) };
        }
    }
    Ok(total)
}

/// All permutations of `0..k` with their signs (Heap's algorithm).
fn permutations(k: usize) -> Vec<(Vec<usize>, i8)> {
    let mut a: Vec<usize> = (0..k).collect();
    let mut counters = vec![0usize; k];
    let mut sign = 1i8;
    let mut out = vec![(a.clone(), sign)];
    let mut i = 0;
    while i < k {
        if counters[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(counters[i], i);
            }
            sign = -sign;
            out.push((a.clone(), sign));
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Basis;

    fn basis(n: usize) -> Basis {
        Basis::new((0..n).map(|i| i.to_string()).collect())
    }

    fn close(a: &TruncatedSeries, b: &[f64]) -> bool {
        a.agrees_with(&TruncatedSeries::from_real(b), 1e-12, 0.0)
    }

    #[test]
    fn ring_arithmetic() {
        let a = TruncatedSeries::from_real(&[1.0, 1.0, 0.0, 0.0]);
        let b = TruncatedSeries::from_real(&[1.0, -1.0]);
        assert!(close(&a.mul(&b), &[1.0, 0.0, -1.0, 0.0]));
        assert!(close(&b.with_order(5).invert().unwrap(), &[1.0; 6]));
        assert!(close(
            &TruncatedSeries::from_real(&[1.0, 0.0, 3.0]).derive(),
            &[0.0, 6.0]
        ));
        assert!(TruncatedSeries::from_real(&[0.0, 1.0]).invert().is_err());
        assert!(close(&b.with_order(2).compose_scale(c(2.0)), &[1.0, -2.0, 0.0]));
    }

    #[test]
    fn exp_and_log() {
        let mercator: Vec<f64> = (0..8)
            .map(|n| if n == 0 { 0.0 } else { -1.0 / n as f64 })
            .collect();
        let one_minus_u = TruncatedSeries::from_real(&[1.0, -1.0]).with_order(7);
        assert!(close(&one_minus_u.log().unwrap(), &mercator));
        assert!(close(&TruncatedSeries::zero(5).exp().unwrap(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        let one_plus_u = TruncatedSeries::from_real(&[1.0, 1.0]).with_order(9);
        let round = one_plus_u.log().unwrap().exp().unwrap();
        assert!(round.max_deviation(&one_plus_u) < 1e-14);
        assert!(one_plus_u.exp().is_err());
        assert!(TruncatedSeries::zero(3).log().is_err());
    }

    #[test]
    fn determinants_from_traces() {
        let one = LinearOperator::from_triplets(basis(1), basis(1), [(0, 0, c(2.0))]);
        assert!(close(&det_from_traces(&one, 3), &[1.0, -2.0, 0.0, 0.0]));
        let id = LinearOperator::identity(basis(2));
        assert!(close(&det_from_traces(&id, 4), &[1.0, -2.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn operator_series_determinants() {
        let one = LinearOperator::from_triplets(basis(1), basis(1), [(0, 0, c(2.0))]);
        let s = OperatorSeries::one_minus(&one, 4).unwrap();
        assert!(close(&det_operator_series(&s).unwrap(), &[1.0, -2.0, 0.0, 0.0, 0.0]));

        // A₁ of EDGE
        let a1 = LinearOperator::from_triplets(basis(2), basis(2), [(1, 0, c(2.0)), (0, 1, c(3.0))]);
        let s = OperatorSeries::one_minus(&a1, 6).unwrap();
        assert!(close(
            &det_operator_series(&s).unwrap(),
            &[1.0, 0.0, -6.0, 0.0, 0.0, 0.0, 0.0]
        ));

        let not_unit = OperatorSeries::new(vec![a1.clone()]).unwrap();
        assert!(det_operator_series(&not_unit).is_err());
    }

    #[test]
    fn permutation_signs() {
        let perms = permutations(3);
        assert_eq!(perms.len(), 6);
        let positive = perms.iter().filter(|(_, s)| *s > 0).count();
        assert_eq!(positive, 3);
        for (p, s) in perms {
            let inversions = (0..3)
                .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            assert_eq!(s, if inversions % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn reversed_char_poly_of_rotation() {
        // 90° rotation: eigenvalues ±i, det(1 − xH) = 1 + x²
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(-1.0), c(1.0), c(0.0)]);
        let p = reversed_char_poly(&h);
        assert!((p[0] - c(1.0)).norm() < 1e-15);
        assert!(p[1].norm() < 1e-15);
        assert!((p[2] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn csv_lines() {
        let s = TruncatedSeries::from_real(&[1.0, -0.5]);
        assert_eq!(s.to_csv(), "0,1,0\n1,-0.5,0\n");
    }
}

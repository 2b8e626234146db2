//! Dense linear algebra on a truncated Fock space.
//!
//! Every operator is a `D x D` complex matrix acting on `span{e_0, ..., e_{D-1}}`.
//! Raising actions out of `e_{D-1}` map to zero, so identities that need one
//! more rung than exists are only meaningful away from the top rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("rejected epsilon sequence: {0}")]
    RejectedSequence(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("operator dimension {0} is below the minimum of 2")]
    TooSmall(usize),
    #[error("operator has a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("operator is not Hermitian (deviation {deviation:e} > {tolerance:e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("operator is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("operator is not diagonalizable in a well-conditioned basis ({0})")]
    NotDiagonalizable(String),
}

/// Numerical thresholds shared by the operator layer.
///
/// The Hermiticity and residual thresholds are relative to the max-norm of the
/// operator being tested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm_rel: f64,
    pub res_rel: f64,
    pub vac_rel: f64,
    pub cond_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm_rel: 1e-10,
            res_rel: 1e-9,
            vac_rel: 1e-10,
            cond_cap: 1e12,
        }
    }
}

/// A strictly increasing spectrum `0 = eps_0 < eps_1 < ...` together with its
/// generalized factorials `eps_n! = eps_1 * ... * eps_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSequence {
    values: Vec<f64>,
    factorials: Vec<f64>,
}

impl EpsilonSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.is_empty() {
            return Err(OperatorError::RejectedSequence("empty sequence".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(OperatorError::RejectedSequence(format!(
                "non-finite value at index {i}"
            )));
        }
        if values[0] != 0.0 {
            return Err(OperatorError::RejectedSequence(format!(
                "eps_0 must be 0, got {}",
                values[0]
            )));
        }
        if let Some(i) = values.windows(2).position(|w| w[0] >= w[1]) {
            return Err(OperatorError::RejectedSequence(format!(
                "not strictly increasing at index {}: {} >= {}",
                i + 1,
                values[i],
                values[i + 1]
            )));
        }
        let mut factorials = Vec::with_capacity(values.len());
        factorials.push(1.0);
        for n in 1..values.len() {
            let next = factorials[n - 1] * values[n];
            if !next.is_finite() {
                return Err(OperatorError::RejectedSequence(format!(
                    "generalized factorial overflows at index {n}"
                )));
            }
            factorials.push(next);
        }
        Ok(Self { values, factorials })
    }

    /// `eps_n = n`, the ordinary bosonic spectrum.
    pub fn identity(len: usize) -> Self {
        Self::new((0..len).map(|n| n as f64).collect()).expect("identity spectrum is valid")
    }

    /// Quon spectrum `eps_n = 1 + q + ... + q^{n-1}`, evaluated as `(1 - q^n) / (1 - q)`.
    pub fn quon(q: f64, len: usize) -> Result<Self, OperatorError> {
        if !(q > -1.0 && q < 1.0) {
            return Err(OperatorError::RejectedSequence(format!(
                "quon parameter q = {q} outside (-1, 1)"
            )));
        }
        Self::new((0..len).map(|n| quon_number(q, n)).collect())
    }

    /// `eps_n = n * f(n)`.
    pub fn from_deformation(f: &Polynomial, len: usize) -> Result<Self, OperatorError> {
        Self::new((0..len).map(|n| n as f64 * f.eval(n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn factorials(&self) -> &[f64] {
        &self.factorials
    }

    pub fn value(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn factorial(&self, n: usize) -> f64 {
        self.factorials[n]
    }

    /// The first `len` entries as a new sequence.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len()).max(1);
        Self {
            values: self.values[..len].to_vec(),
            factorials: self.factorials[..len].to_vec(),
        }
    }
}

/// `[n]_q = (1 - q^n) / (1 - q)`; reduces to `n` at `q = 1`.
pub fn quon_number(q: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if q == 1.0 {
        return n as f64;
    }
    // -expm1(n ln q) keeps precision for q close to 1
    if q > 0.0 {
        -(n as f64 * q.ln()).exp_m1() / (1.0 - q)
    } else {
        (1.0 - q.powi(n as i32)) / (1.0 - q)
    }
}

/// Real polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn square(&self) -> Self {
        if self.coeffs.is_empty() {
            return Self::new(vec![]);
        }
        let n = self.coeffs.len();
        let mut out = vec![0.0; 2 * n - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in self.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Horner evaluation with an operator argument.
    pub fn eval_operator(&self, x: &FockOperator) -> FockOperator {
        let d = x.dim();
        let mut acc = DMatrix::<C64>::zeros(d, d);
        for &c in self.coeffs.iter().rev() {
            acc = &acc * x.matrix();
            for i in 0..d {
                acc[(i, i)] += C64::new(c, 0.0);
            }
        }
        FockOperator { m: acc }
    }
}

/// A `D x D` complex matrix on the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    m: DMatrix<C64>,
}

impl FockOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self, OperatorError> {
        if m.nrows() != m.ncols() {
            return Err(OperatorError::DimMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        if m.nrows() < 2 {
            return Err(OperatorError::TooSmall(m.nrows()));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(OperatorError::NonFinite(i, j));
                }
            }
        }
        Ok(Self { m })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, OperatorError> {
        let d = rows.len();
        let mut m = DMatrix::<C64>::zeros(d, d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(OperatorError::DimMismatch {
                    left: d,
                    right: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = C64::new(v, 0.0);
            }
        }
        Self::new(m)
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let mut m = DMatrix::zeros(d, d);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self { m }
    }

    /// Ladder lowering operator `a e_n = sqrt(eps_n) e_{n-1}` on the first
    /// `eps.len()` Fock states.
    pub fn lowering(eps: &EpsilonSequence) -> Self {
        let d = eps.len();
        let mut m = DMatrix::zeros(d, d);
        for n in 1..d {
            m[(n - 1, n)] = C64::new(eps.value(n).sqrt(), 0.0);
        }
        Self { m }
    }

    /// Ladder raising operator, the adjoint of [`FockOperator::lowering`].
    pub fn raising(eps: &EpsilonSequence) -> Self {
        Self::lowering(eps).adjoint()
    }

    /// `diag(eps_0, ..., eps_{D-1})`.
    pub fn number(eps: &EpsilonSequence) -> Self {
        Self::diagonal(eps.values())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn max_norm(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn compose(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_dim(other.dim())?;
        Ok(Self { m: &self.m * &other.m })
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_dim(other.dim())?;
        Ok(Self { m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check_dim(other.dim())?;
        Ok(Self { m: &self.m - &other.m })
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector, OperatorError> {
        self.check_dim(v.dim())?;
        Ok(StateVector {
            coeffs: &self.m * &v.coeffs,
        })
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    pub fn inverse(&self) -> Option<Self> {
        self.m.clone().try_inverse().map(|m| Self { m })
    }

    /// 2-norm condition number from the singular values.
    pub fn condition_number(&self) -> f64 {
        let sv = self.m.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// The leading `k x k` block.
    pub fn leading_block(&self, k: usize) -> DMatrix<C64> {
        self.m.view((0, 0), (k, k)).into_owned()
    }

    fn check_dim(&self, other: usize) -> Result<(), OperatorError> {
        if self.dim() != other {
            return Err(OperatorError::DimMismatch {
                left: self.dim(),
                right: other,
            });
        }
        Ok(())
    }
}

impl std::ops::Mul for &FockOperator {
    type Output = FockOperator;

    /// Panics on a dimension mismatch; use [`FockOperator::compose`] for a checked product.
    fn mul(self, rhs: &FockOperator) -> FockOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        FockOperator { m: &self.m * &rhs.m }
    }
}

impl std::ops::Mul<&StateVector> for &FockOperator {
    type Output = StateVector;

    fn mul(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.dim(), rhs.dim(), "operator/vector dimension mismatch");
        StateVector {
            coeffs: &self.m * &rhs.coeffs,
        }
    }
}

/// A vector in the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    coeffs: DVector<C64>,
}

impl StateVector {
    pub fn new(coeffs: DVector<C64>) -> Self {
        Self { coeffs }
    }

    pub fn from_slice(values: &[C64]) -> Self {
        Self {
            coeffs: DVector::from_column_slice(values),
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self {
            coeffs: DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0))),
        }
    }

    /// Fock basis vector `e_n`.
    pub fn basis(dim: usize, n: usize) -> Self {
        let mut coeffs = DVector::zeros(dim);
        coeffs[n] = C64::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coeffs: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<C64> {
        &self.coeffs
    }

    pub fn get(&self, i: usize) -> C64 {
        self.coeffs[i]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.coeffs.dotc(&other.coeffs)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            coeffs: &self.coeffs * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &Self) -> FockOperator {
        FockOperator::from_matrix_unchecked(&self.coeffs * other.coeffs.adjoint())
    }

    /// Rotate the global phase so the largest-magnitude entry is real and
    /// positive. Ties go to the lowest index.
    pub fn fix_phase(&self) -> Self {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in self.coeffs.iter().enumerate() {
            let a = z.norm();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if best_abs <= 0.0 {
            return self.clone();
        }
        let z = self.coeffs[best];
        self.scale(z.conj() / z.norm())
    }
}

pub fn commutator(x: &FockOperator, y: &FockOperator) -> Result<FockOperator, OperatorError> {
    x.compose(y)?.sub(&y.compose(x)?)
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(x: &FockOperator, tol: &Tolerances) -> Result<Self, OperatorError> {
        let scale = x.max_norm();
        let defect = x.hermiticity_defect();
        let tolerance = tol.herm_rel * scale.max(f64::MIN_POSITIVE);
        if defect > tolerance {
            return Err(OperatorError::NotHermitian {
                deviation: defect,
                tolerance,
            });
        }
        Ok(Self::of_matrix(x.matrix()))
    }

    /// Symmetrizes before decomposing; the caller vouches for Hermiticity.
    pub(crate) fn of_matrix(m: &DMatrix<C64>) -> Self {
        let d = m.nrows();
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(d, d);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    /// `V diag(g(lambda)) V^dagger`.
    pub fn reconstruct(&self, mut g: impl FnMut(usize, f64) -> C64) -> DMatrix<C64> {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..d {
            let s = g(k, self.values[k]);
            for i in 0..d {
                scaled[(i, k)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Positive semidefinite square root of a Hermitian PSD operator.
pub fn positive_sqrt(x: &FockOperator, tol: &Tolerances) -> Result<FockOperator, OperatorError> {
    let eig = HermitianEigen::new(x, tol)?;
    let floor = -tol.herm_rel * x.max_norm();
    if let Some(&min) = eig.values.first() {
        if min < floor {
            return Err(OperatorError::NotPositive(min));
        }
    }
    let m = eig.reconstruct(|_, l| C64::new(l.max(0.0).sqrt(), 0.0));
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(FockOperator::from_matrix_unchecked(m))
}

/// Matrix function `f(X)` through an eigen-decomposition.
///
/// Diagonal inputs are mapped entrywise. Hermitian and, more generally,
/// normal inputs are diagonalized unitarily. Anything else is rejected; use
/// [`apply_function_in_basis`] when an eigenbasis is known.
pub fn apply_function(
    x: &FockOperator,
    f: impl Fn(C64) -> C64,
    tol: &Tolerances,
) -> Result<FockOperator, OperatorError> {
    let d = x.dim();
    let m = x.matrix();
    let scale = x.max_norm().max(f64::MIN_POSITIVE);

    let off_diag = (0..d)
        .flat_map(|j| (0..d).filter(move |&i| i != j).map(move |i| (i, j)))
        .map(|ij| m[ij].norm())
        .fold(0.0, f64::max);
    if off_diag == 0.0 {
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            out[(i, i)] = f(m[(i, i)]);
        }
        return Ok(FockOperator::from_matrix_unchecked(out));
    }

    if x.hermiticity_defect() <= tol.herm_rel * scale {
        let eig = HermitianEigen::of_matrix(m);
        let out = eig.reconstruct(|_, l| f(C64::new(l, 0.0)));
        return Ok(FockOperator::from_matrix_unchecked(out));
    }

    // Normal matrices: the Hermitian and anti-Hermitian parts commute, so a
    // generic real combination of them has the common eigenbasis.
    let normality = max_abs(&(m * m.adjoint() - m.adjoint() * m));
    if normality > tol.res_rel * scale * scale {
        return Err(OperatorError::NotDiagonalizable(format!(
            "non-normal operator (||XX^+ - X^+X||_max = {normality:e}); supply an eigenbasis"
        )));
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let k = (m - m.adjoint()) * C64::new(0.0, -0.5);
    const MIX: f64 = 0.577_215_664_901_532_9;
    let eig = HermitianEigen::of_matrix(&(h + k * C64::new(MIX, 0.0)));
    apply_function_in_basis(x, &eig.vectors, f, tol)
}

/// Matrix function `f(X) = V f(Lambda) V^{-1}` for a supplied eigenbasis `V`
/// (columns are eigenvectors).
pub fn apply_function_in_basis(
    x: &FockOperator,
    basis: &DMatrix<C64>,
    f: impl Fn(C64) -> C64,
    tol: &Tolerances,
) -> Result<FockOperator, OperatorError> {
    let d = x.dim();
    if basis.nrows() != d || basis.ncols() != d {
        return Err(OperatorError::DimMismatch {
            left: d,
            right: basis.nrows(),
        });
    }
    let basis_op = FockOperator::from_matrix_unchecked(basis.clone());
    let cond = basis_op.condition_number();
    if !(cond <= tol.cond_cap) {
        return Err(OperatorError::NotDiagonalizable(format!(
            "eigenbasis condition number {cond:e} exceeds {:e}",
            tol.cond_cap
        )));
    }
    let inv = basis
        .clone()
        .try_inverse()
        .ok_or_else(|| OperatorError::NotDiagonalizable("singular eigenbasis".into()))?;
    let lambda = &inv * x.matrix() * basis;
    let scale = x.max_norm().max(f64::MIN_POSITIVE);
    let mut off = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                off = off.max(lambda[(i, j)].norm());
            }
        }
    }
    if off > tol.res_rel * scale * cond {
        return Err(OperatorError::NotDiagonalizable(format!(
            "basis does not diagonalize the operator (off-diagonal {off:e})"
        )));
    }
    let mut fl = DMatrix::zeros(d, d);
    for i in 0..d {
        fl[(i, i)] = f(lambda[(i, i)]);
    }
    Ok(FockOperator::from_matrix_unchecked(basis * fl * inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn factorials_of_identity_spectrum() {
        let eps = EpsilonSequence::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(eps.factorials(), &[1.0, 1.0, 2.0, 6.0]);
    }

    #[test]
    fn quon_half_factorials() {
        let eps = EpsilonSequence::quon(0.5, 4).unwrap();
        assert_eq!(eps.values(), &[0.0, 1.0, 1.5, 1.75]);
        assert_eq!(eps.factorials(), &[1.0, 1.0, 1.5, 2.625]);
    }

    #[test]
    fn rejects_bad_sequences() {
        assert!(matches!(
            EpsilonSequence::new(vec![0.0, 1.0, 0.5]),
            Err(OperatorError::RejectedSequence(_))
        ));
        assert!(EpsilonSequence::new(vec![1.0, 2.0]).is_err());
        assert!(EpsilonSequence::new(vec![0.0, f64::NAN]).is_err());
        assert!(EpsilonSequence::new(vec![]).is_err());
        assert!(EpsilonSequence::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(EpsilonSequence::quon(1.0, 4).is_err());
    }

    #[test]
    fn factorial_overflow_is_rejected() {
        let values: Vec<f64> = (0..200).map(|n| (n as f64) * 1e10).collect();
        assert!(EpsilonSequence::new(values).is_err());
    }

    #[test]
    fn quon_number_near_one_matches_sum() {
        let q: f64 = 0.999;
        let direct: f64 = (0..7).map(|k| q.powi(k)).sum();
        assert!((quon_number(q, 7) - direct).abs() < 1e-13);
        let q: f64 = -0.3;
        let direct: f64 = (0..5).map(|k| q.powi(k)).sum();
        assert!((quon_number(q, 5) - direct).abs() < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let id = FockOperator::identity(3);
        assert_eq!(id.adjoint(), id);
        let x = FockOperator::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        let expected = FockOperator::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(x.adjoint(), expected);
    }

    #[test]
    fn constructor_rejects_small_and_nonfinite() {
        assert!(matches!(
            FockOperator::new(DMatrix::zeros(1, 1)),
            Err(OperatorError::TooSmall(1))
        ));
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(1, 0)] = C64::new(f64::INFINITY, 0.0);
        assert!(matches!(FockOperator::new(m), Err(OperatorError::NonFinite(1, 0))));
    }

    #[test]
    fn truncated_boson_commutator_has_boundary_defect() {
        let eps = EpsilonSequence::identity(5);
        let a = FockOperator::lowering(&eps);
        let ad = a.adjoint();
        let comm = commutator(&a, &ad).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i == j && i < 4 {
                    1.0
                } else if i == 4 && j == 4 {
                    -4.0
                } else {
                    0.0
                };
                assert!((comm.get(i, j) - c(expected)).norm() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn commutator_dim_mismatch() {
        let x = FockOperator::identity(2);
        let y = FockOperator::identity(3);
        assert!(matches!(
            commutator(&x, &y),
            Err(OperatorError::DimMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn positive_sqrt_examples() {
        let tol = Tolerances::default();
        let r = positive_sqrt(&FockOperator::identity(4), &tol).unwrap();
        assert!(r.sub(&FockOperator::identity(4)).unwrap().max_norm() < 1e-14);

        let r = positive_sqrt(&FockOperator::diagonal(&[1.0, 4.0, 9.0]), &tol).unwrap();
        assert!(r.sub(&FockOperator::diagonal(&[1.0, 2.0, 3.0])).unwrap().max_norm() < 1e-14);

        let e = std::f64::consts::E;
        let r = positive_sqrt(&FockOperator::diagonal(&[e * e, e.powi(3)]), &tol).unwrap();
        let expected = FockOperator::diagonal(&[e, e.powf(1.5)]);
        assert!(r.sub(&expected).unwrap().max_norm() < 1e-13);
    }

    #[test]
    fn positive_sqrt_errors() {
        let tol = Tolerances::default();
        let x = FockOperator::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            positive_sqrt(&x, &tol),
            Err(OperatorError::NotHermitian { .. })
        ));
        let x = FockOperator::diagonal(&[1.0, -0.5]);
        assert!(matches!(positive_sqrt(&x, &tol), Err(OperatorError::NotPositive(_))));
    }

    #[test]
    fn apply_function_examples() {
        let tol = Tolerances::default();
        let x = FockOperator::from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let fx = apply_function(&x, |z| z, &tol).unwrap();
        assert!(fx.sub(&x).unwrap().max_norm() < 1e-13);

        let e = apply_function(&FockOperator::diagonal(&[0.0, 1.0]), |z| z.exp(), &tol).unwrap();
        let expected = FockOperator::diagonal(&[1.0, std::f64::consts::E]);
        assert!(e.sub(&expected).unwrap().max_norm() < 1e-15);

        let n = FockOperator::number(&EpsilonSequence::identity(6));
        assert_eq!(apply_function(&n, |z| z, &tol).unwrap(), n);
    }

    #[test]
    fn apply_function_on_normal_non_hermitian() {
        let tol = Tolerances::default();
        // rotation generator: normal, eigenvalues +-i
        let x = FockOperator::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let sq = apply_function(&x, |z| z * z, &tol).unwrap();
        let expected = FockOperator::diagonal(&[-1.0, -1.0]);
        assert!(sq.sub(&expected).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn apply_function_rejects_jordan_block() {
        let tol = Tolerances::default();
        let x = FockOperator::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            apply_function(&x, |z| z.exp(), &tol),
            Err(OperatorError::NotDiagonalizable(_))
        ));
    }

    #[test]
    fn apply_function_in_known_basis() {
        let tol = Tolerances::default();
        // upper triangular, distinct eigenvalues 1 and 2
        let x = FockOperator::from_real_rows(&[&[1.0, 1.0], &[0.0, 2.0]]).unwrap();
        let basis = FockOperator::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let sq = apply_function_in_basis(&x, basis.matrix(), |z| z * z, &tol).unwrap();
        let direct = &x * &x;
        assert!(sq.sub(&direct).unwrap().max_norm() < 1e-13);
    }

    #[test]
    fn fix_phase_makes_largest_entry_positive() {
        let v = StateVector::from_slice(&[C64::new(0.1, 0.0), C64::new(0.0, -2.0)]);
        let w = v.fix_phase();
        assert!((w.get(1) - c(2.0)).norm() < 1e-15);
        assert!((w.norm() - v.norm()).abs() < 1e-15);
    }

    #[test]
    fn polynomial_square_and_eval() {
        let h = Polynomial::new(vec![0.0, 1.0, 2.0]);
        let f = h.square();
        for x in [0.0, 1.0, 2.5, -3.0] {
            assert!((f.eval(x) - h.eval(x).powi(2)).abs() < 1e-12);
        }
    }

    fn arb_matrix(d: usize) -> impl Strategy<Value = FockOperator> {
        proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), d * d).prop_map(move |v| {
            let m = DMatrix::from_iterator(d, d, v.into_iter().map(|(re, im)| C64::new(re, im)));
            FockOperator::new(m).unwrap()
        })
    }

    fn arb_hermitian(d: usize) -> impl Strategy<Value = FockOperator> {
        arb_matrix(d).prop_map(|x| {
            let m = (x.matrix() + x.matrix().adjoint()) * C64::new(0.5, 0.0);
            FockOperator::new(m).unwrap()
        })
    }

    proptest! {
        #[test]
        fn adjoint_is_involutive_antihomomorphism(x in arb_matrix(5), y in arb_matrix(5)) {
            prop_assert_eq!(x.adjoint().adjoint(), x.clone());
            let lhs = (&x * &y).adjoint();
            let rhs = &y.adjoint() * &x.adjoint();
            prop_assert!(lhs.sub(&rhs).unwrap().max_norm() < 1e-13);
        }

        #[test]
        fn commutator_is_antisymmetric(x in arb_matrix(4), y in arb_matrix(4)) {
            let xy = commutator(&x, &y).unwrap();
            let yx = commutator(&y, &x).unwrap();
            prop_assert!(xy.add(&yx).unwrap().max_norm() < 1e-13);
            prop_assert_eq!(commutator(&x, &x).unwrap().max_norm(), 0.0);
        }

        #[test]
        fn positive_sqrt_squares_back(x in arb_matrix(5)) {
            let tol = Tolerances::default();
            let psd = &x * &x.adjoint();
            let r = positive_sqrt(&psd, &tol).unwrap();
            let scale = psd.max_norm();
            prop_assert!((&r * &r).sub(&psd).unwrap().max_norm() <= tol.res_rel * scale);
            prop_assert!(r.hermiticity_defect() <= tol.herm_rel * scale.max(1.0));
        }

        #[test]
        fn polynomial_function_matches_horner(
            x in arb_hermitian(5),
            coeffs in proptest::collection::vec(-1.5..1.5f64, 1..5),
        ) {
            let tol = Tolerances::default();
            let p = Polynomial::new(coeffs);
            let via_eigen = apply_function(&x, |z| {
                p.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
            }, &tol).unwrap();
            let via_horner = p.eval_operator(&x);
            let scale = via_horner.max_norm().max(1.0);
            prop_assert!(via_eigen.sub(&via_horner).unwrap().max_norm() <= tol.res_rel * scale);
        }

        #[test]
        fn factorial_recurrence_is_exact(steps in proptest::collection::vec(0.01..3.0f64, 1..30)) {
            let mut values = vec![0.0];
            for s in steps {
                let last = *values.last().unwrap();
                values.push(last + s);
            }
            let eps = EpsilonSequence::new(values).unwrap();
            prop_assert_eq!(eps.factorial(0), 1.0);
            for n in 1..eps.len() {
                prop_assert_eq!(eps.factorial(n), eps.factorial(n - 1) * eps.value(n));
            }
        }
    }
}

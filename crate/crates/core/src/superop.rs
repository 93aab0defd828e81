//! Superoperator algebra on `d x d` operators.
//!
//! Operators are vectorized by stacking columns, so `vec(A)[i + j*d] =
//! A[i, j]` and `vec(X rho Y) = (Y^T ⊗ X) vec(rho)`. A superoperator is stored
//! as the `d^2 x d^2` matrix acting on such vectors, and composition is plain
//! matrix multiplication: `(S1 ∘ S2).matrix = S1.matrix * S2.matrix`.
//!
//! Composite spaces are ordered `system ⊗ environment` with the system index
//! varying slowest.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cabs, cr, CMat, CVec, Real};

/// Column-stacking vectorization.
pub fn vectorize<T: Real>(a: &CMat<T>) -> CVec<T> {
    // nalgebra storage is column-major, which is exactly column stacking.
    DVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vectorize`].
pub fn devectorize<T: Real>(v: &CVec<T>, d: usize) -> CMat<T> {
    assert_eq!(v.len(), d * d, "vector length is not d^2");
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Matrix unit `|i><j|`.
pub fn matrix_unit<T: Real>(d: usize, i: usize, j: usize) -> CMat<T> {
    let mut e = CMat::zeros(d, d);
    e[(i, j)] = cr(T::one());
    e
}

/// Default PSD tolerance for Choi spectra of a map on `d x d` operators:
/// `1e-9 * d^2` in double precision.
pub fn default_psd_tol<T: Real>(d: usize) -> T {
    T::default_tol() * T::lit(1e3) * T::from_count(d * d)
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: CMat<T>,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(matrix: CMat<T>) -> Result<Self> {
        Self::with_tol(matrix, T::default_tol())
    }

    /// Validate against `tol`: hermiticity defect `<= tol * d`, trace defect
    /// `<= tol`, smallest eigenvalue `>= -tol`.
    pub fn with_tol(matrix: CMat<T>, tol: T) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "expected a nonempty square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let d = matrix.nrows();
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > tol * T::from_count(d) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = matrix.trace();
        if cabs(tr - cr(T::one())) > tol {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        let min = linalg::min_hermitian_eigenvalue(&matrix);
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn pure(psi: &CVec<T>) -> Result<Self> {
        let norm2 = psi.norm_squared();
        if norm2 <= T::zero() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(Self {
            matrix: psi * psi.adjoint() * cr(T::one() / norm2),
        })
    }

    /// `|k><k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        assert!(k < d, "basis index out of range");
        Self {
            matrix: matrix_unit(d, k, k),
        }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: CMat::identity(d, d) * cr(T::one() / T::from_count(d)),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.matrix
    }

    pub fn purity(&self) -> T {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix<T>) -> DensityMatrix<T> {
        DensityMatrix {
            matrix: linalg::kron(&self.matrix, &other.matrix),
        }
    }
}

/// A nonempty list of Kraus operators of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet<T: Real> {
    dim: usize,
    operators: Vec<CMat<T>>,
}

impl<T: Real> KrausSet<T> {
    pub fn new(operators: Vec<CMat<T>>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidKraus("empty operator list".into()))?;
        let dim = first.nrows();
        for k in &operators {
            if !k.is_square() {
                return Err(Error::InvalidKraus("non-square Kraus operator".into()));
            }
            if k.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.nrows(),
                });
            }
        }
        Ok(Self { dim, operators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[CMat<T>] {
        &self.operators
    }

    /// `sum_a K_a^dagger K_a`.
    pub fn completeness(&self) -> CMat<T> {
        self.operators
            .iter()
            .fold(CMat::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k)
    }
}

/// Linear map on `d x d` operators, stored as a `d^2 x d^2` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator<T: Real> {
    dim: usize,
    matrix: CMat<T>,
}

impl<T: Real> Superoperator<T> {
    pub fn new(dim: usize, matrix: CMat<T>) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub(crate) fn from_raw(dim: usize, matrix: CMat<T>) -> Self {
        debug_assert_eq!(matrix.nrows(), dim * dim);
        Self { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_raw(dim, CMat::identity(dim * dim, dim * dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_raw(dim, CMat::zeros(dim * dim, dim * dim))
    }

    /// `rho -> X rho Y`.
    pub fn sandwich(x: &CMat<T>, y: &CMat<T>) -> Self {
        Self::from_raw(x.nrows(), linalg::kron(&y.transpose(), x))
    }

    /// `rho -> U rho U^dagger`.
    pub fn conjugation(u: &CMat<T>) -> Self {
        Self::from_raw(u.nrows(), linalg::kron(&u.conjugate(), u))
    }

    /// `rho -> sum_a K_a rho K_a^dagger`.
    pub fn from_kraus(ks: &KrausSet<T>) -> Self {
        let n = ks.dim * ks.dim;
        let m = ks
            .operators
            .iter()
            .fold(CMat::zeros(n, n), |acc, k| acc + linalg::kron(&k.conjugate(), k));
        Self::from_raw(ks.dim, m)
    }

    /// `rho -> Tr(rho) * target`.
    pub fn replacement(target: &CMat<T>) -> Self {
        let d = target.nrows();
        let vid = vectorize(&CMat::<T>::identity(d, d));
        Self::from_raw(d, vectorize(target) * vid.adjoint())
    }

    /// Hadamard (Schur) multiplier `rho -> sum_ij a_ij rho_ij |i><j|`.
    pub fn hadamard(a: &CMat<T>) -> Self {
        let d = a.nrows();
        Self::from_raw(d, CMat::from_diagonal(&vectorize(a)))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.matrix
    }

    pub fn apply(&self, rho: &CMat<T>) -> Result<CMat<T>> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.nrows(),
            });
        }
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &CMat<T>) -> CMat<T> {
        devectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }

    pub fn apply_state(&self, rho: &DensityMatrix<T>) -> Result<CMat<T>> {
        self.apply(rho.matrix())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "composing maps of different dimension");
        Self::from_raw(self.dim, &self.matrix * &other.matrix)
    }

    /// Hilbert-Schmidt adjoint.
    pub fn dual(&self) -> Self {
        Self::from_raw(self.dim, self.matrix.adjoint())
    }

    /// `S*(I)`.
    pub fn dual_identity(&self) -> CMat<T> {
        let id = vectorize(&CMat::<T>::identity(self.dim, self.dim));
        devectorize(&(self.matrix.adjoint() * id), self.dim)
    }

    /// `sum_ij E_ij ⊗ S[E_ij]`.
    pub fn choi(&self) -> ChoiMatrix<T> {
        let d = self.dim;
        // (E_ij ⊗ S[E_ij])[(i*d + a, j*d + b)] = S[E_ij][a, b]
        //   = matrix[(a + b*d, i + j*d)]
        let m = CMat::from_fn(d * d, d * d, |r, c| {
            let (i, a) = (r / d, r % d);
            let (j, b) = (c / d, c % d);
            self.matrix[(a + b * d, i + j * d)]
        });
        ChoiMatrix { dim: d, matrix: m }
    }

    /// Inverse of [`Superoperator::choi`].
    pub fn from_choi(choi: &ChoiMatrix<T>) -> Self {
        let d = choi.dim;
        let m = CMat::from_fn(d * d, d * d, |r, c| {
            let (a, b) = (r % d, r / d);
            let (i, j) = (c % d, c / d);
            choi.matrix[(i * d + a, j * d + b)]
        });
        Self::from_raw(d, m)
    }

    /// Induced trace norm, valid for CP maps only: the largest eigenvalue of
    /// `S*(I)`.
    pub fn cp_norm(&self) -> T {
        linalg::max_hermitian_eigenvalue(&self.dual_identity())
    }

    pub fn properties(&self, tol: T) -> PropertyReport<T> {
        check_map_properties(self, tol)
    }

    pub fn is_cp(&self, tol: T) -> bool {
        let c = self.choi();
        c.hermiticity_defect() <= tol && c.min_eigenvalue() >= -tol
    }

    pub fn is_cptp(&self, tol: T) -> bool {
        let r = self.properties(tol);
        r.cp && r.trace_preserving
    }

    /// Tensor product of maps acting on `system ⊗ environment`.
    pub fn tensor(&self, env: &Self) -> Self {
        let (ds, de) = (self.dim, env.dim);
        let dc = ds * de;
        let mut m = CMat::zeros(dc * dc, dc * dc);
        for j in 0..ds {
            for i in 0..ds {
                let a = self.apply_unchecked(&matrix_unit(ds, i, j));
                for l in 0..de {
                    for k in 0..de {
                        let out = linalg::kron(&a, &env.apply_unchecked(&matrix_unit(de, k, l)));
                        let col = (i * de + k) + (j * de + l) * dc;
                        m.set_column(col, &vectorize(&out));
                    }
                }
            }
        }
        Self::from_raw(dc, m)
    }

    pub fn distance(&self, other: &Self) -> T {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn norm(&self) -> T {
        self.matrix.norm()
    }

    pub fn scale(&self, a: T) -> Self {
        Self::from_raw(self.dim, &self.matrix * cr(a))
    }

    /// Commutator `[self, other]` of maps.
    pub fn commutator(&self, other: &Self) -> Self {
        Self::from_raw(self.dim, &self.matrix * &other.matrix - &other.matrix * &self.matrix)
    }
}

impl<T: Real> Add for &Superoperator<T> {
    type Output = Superoperator<T>;
    fn add(self, rhs: Self) -> Superoperator<T> {
        assert_eq!(self.dim, rhs.dim);
        Superoperator::from_raw(self.dim, &self.matrix + &rhs.matrix)
    }
}

impl<T: Real> Sub for &Superoperator<T> {
    type Output = Superoperator<T>;
    fn sub(self, rhs: Self) -> Superoperator<T> {
        assert_eq!(self.dim, rhs.dim);
        Superoperator::from_raw(self.dim, &self.matrix - &rhs.matrix)
    }
}

impl<T: Real> Neg for &Superoperator<T> {
    type Output = Superoperator<T>;
    fn neg(self) -> Superoperator<T> {
        Superoperator::from_raw(self.dim, -&self.matrix)
    }
}

impl<T: Real> Mul<&Superoperator<T>> for &Superoperator<T> {
    type Output = Superoperator<T>;
    fn mul(self, rhs: &Superoperator<T>) -> Superoperator<T> {
        self.compose(rhs)
    }
}

/// Choi matrix `C = sum_ij E_ij ⊗ S[E_ij]` (unnormalized).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix<T: Real> {
    dim: usize,
    matrix: CMat<T>,
}

impl<T: Real> ChoiMatrix<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> T {
        linalg::min_hermitian_eigenvalue(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn hermiticity_defect(&self) -> T {
        linalg::hermiticity_defect(&self.matrix)
    }
}

/// Outcome of [`check_map_properties`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport<T> {
    pub cp: bool,
    pub hermiticity_preserving: bool,
    pub trace_preserving: bool,
    pub trace_annihilating: bool,
    pub min_choi_eig: T,
    /// `||S*(I) - I||_F`
    pub trace_defect: T,
}

pub fn check_map_properties<T: Real>(s: &Superoperator<T>, tol: T) -> PropertyReport<T> {
    let choi = s.choi();
    let min_choi_eig = choi.min_eigenvalue();
    let hermiticity_preserving = choi.hermiticity_defect() <= tol;
    let dual_id = s.dual_identity();
    let id = CMat::<T>::identity(s.dim, s.dim);
    let trace_defect = (&dual_id - &id).norm();
    PropertyReport {
        cp: hermiticity_preserving && min_choi_eig >= -tol,
        hermiticity_preserving,
        trace_preserving: trace_defect <= tol,
        trace_annihilating: dual_id.norm() <= tol,
        min_choi_eig,
        trace_defect,
    }
}

/// `rho -> Tr_E(S[rho ⊗ omega])` for a map `S` on `system ⊗ environment`.
pub fn reduce_superop<T: Real>(
    composite: &Superoperator<T>,
    omega: &DensityMatrix<T>,
) -> Result<Superoperator<T>> {
    let dc = composite.dim;
    let de = omega.dim();
    if de == 0 || !dc.is_multiple_of(de) {
        return Err(Error::NotFactorizable {
            total: dc,
            system: dc.checked_div(de).unwrap_or(0),
            env: de,
        });
    }
    let ds = dc / de;
    let mut m = CMat::zeros(ds * ds, ds * ds);
    for j in 0..ds {
        for i in 0..ds {
            let input = linalg::kron(&matrix_unit(ds, i, j), omega.matrix());
            let out = linalg::partial_trace_env(&composite.apply_unchecked(&input), ds, de);
            m.set_column(i + j * ds, &vectorize(&out));
        }
    }
    Ok(Superoperator::from_raw(ds, m))
}

/// `rho -> sum_a K_a rho K_a^dagger` as a superoperator.
pub fn kraus_to_superop<T: Real>(ks: &KrausSet<T>) -> Superoperator<T> {
    Superoperator::from_kraus(ks)
}

//! Dense complex linear algebra helpers: matrix exponential, Hermitian
//! spectra, tensor products and partial traces.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::scalar::{cabs, cr, CMat, Real};

/// Padé(13) numerator/denominator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the unscaled Padé(13) approximant is accurate to
/// double precision.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T: Real>(a: &CMat<T>) -> CMat<T> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a).as_f64();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = cr(T::lit(2f64.powi(-squarings)));
    let a = a * scale;

    let b = |k: usize| cr(T::lit(PADE13[k]));
    let id = CMat::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Maximum absolute column sum.
pub fn one_norm<T: Real>(a: &CMat<T>) -> T {
    a.column_iter()
        .map(|c| c.iter().fold(T::zero(), |acc, z| acc + cabs(*z)))
        .fold(T::zero(), |m, x| if x > m { x } else { m })
}

/// Frobenius norm.
#[inline]
pub fn frobenius<T: Real>(a: &CMat<T>) -> T {
    a.norm()
}

/// `(A + A^dagger) / 2`.
pub fn hermitian_part<T: Real>(a: &CMat<T>) -> CMat<T> {
    (a + a.adjoint()) * cr(T::lit(0.5))
}

/// Frobenius norm of the anti-Hermitian part, `||A - A^dagger||_F`.
pub fn hermiticity_defect<T: Real>(a: &CMat<T>) -> T {
    (a - a.adjoint()).norm()
}

/// Eigenvalues (ascending) of the Hermitian part of `a`.
pub fn hermitian_eigenvalues<T: Real>(a: &CMat<T>) -> Vec<T> {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut vals: Vec<T> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    vals
}

pub fn min_hermitian_eigenvalue<T: Real>(a: &CMat<T>) -> T {
    hermitian_eigenvalues(a).first().copied().unwrap_or_else(T::zero)
}

pub fn max_hermitian_eigenvalue<T: Real>(a: &CMat<T>) -> T {
    hermitian_eigenvalues(a).last().copied().unwrap_or_else(T::zero)
}

/// Inverse square root of a Hermitian positive definite matrix.
pub fn hermitian_inv_sqrt<T: Real>(a: &CMat<T>) -> CMat<T> {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| cr(T::one() / l.sqrt())));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Kronecker product `a ⊗ b`; `a` carries the slower-varying index.
#[inline]
pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    a.kronecker(b)
}

/// Trace over the environment factor of an operator on `system ⊗ env`.
pub fn partial_trace_env<T: Real>(x: &CMat<T>, d_sys: usize, d_env: usize) -> CMat<T> {
    CMat::from_fn(d_sys, d_sys, |a, b| {
        (0..d_env).fold(Complex::new(T::zero(), T::zero()), |acc, e| {
            acc + x[(a * d_env + e, b * d_env + e)]
        })
    })
}

/// Trace over the system factor of an operator on `system ⊗ env`.
pub fn partial_trace_sys<T: Real>(x: &CMat<T>, d_sys: usize, d_env: usize) -> CMat<T> {
    CMat::from_fn(d_env, d_env, |e, f| {
        (0..d_sys).fold(Complex::new(T::zero(), T::zero()), |acc, a| {
            acc + x[(a * d_env + e, a * d_env + f)]
        })
    })
}

/// Inverse together with its 1-norm condition number, or `None` when the LU
/// factorization breaks down.
pub fn inverse_with_condition<T: Real>(a: &CMat<T>) -> Option<(CMat<T>, T)> {
    let inv = a.clone().lu().try_inverse()?;
    let cond = one_norm(a) * one_norm(&inv);
    Some((inv, cond))
}

pub fn trace<T: Real>(a: &CMat<T>) -> Complex<T> {
    a.trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn m(rows: &[&[(f64, f64)]]) -> CMat<f64> {
        let n = rows.len();
        CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j].0, rows[i][j].1))
    }

    /// Taylor series with enough terms for ||A|| of order one.
    fn taylor_exp(a: &CMat<f64>) -> CMat<f64> {
        let n = a.nrows();
        let mut term = CMat::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * a / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMat::<f64>::zeros(3, 3);
        assert_eq!(expm(&z), CMat::identity(3, 3));
    }

    #[test]
    fn expm_matches_taylor_on_small_matrix() {
        let a = m(&[&[(0.1, 0.3), (-0.7, 0.2)], &[(0.5, -0.1), (-0.4, 0.0)]]);
        let diff = (expm(&a) - taylor_exp(&a)).norm();
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn expm_matches_nalgebra_after_squaring() {
        // Norm well above theta13 so several squarings happen.
        let a = m(&[
            &[(-3.0, 4.0), (1.0, 0.5), (0.0, 2.0)],
            &[(2.0, 0.0), (-5.0, -1.0), (0.3, 0.0)],
            &[(0.0, -1.5), (4.0, 0.0), (-2.0, 7.0)],
        ]);
        let ours = expm(&a);
        let reference = a.clone().exp();
        let rel = (&ours - &reference).norm() / reference.norm();
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn expm_of_unitary_generator_is_unitary() {
        // -i * sigma_z * t
        let t = 2.3;
        let a = m(&[&[(0.0, -t), (0.0, 0.0)], &[(0.0, 0.0), (0.0, t)]]);
        let u = expm(&a);
        let defect = (&u * u.adjoint() - CMat::identity(2, 2)).norm();
        assert!(defect < 1e-14);
        assert!((u[(0, 0)] - Complex64::new(t.cos(), -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn expm_f32() {
        let a = DMatrix::from_element(2, 2, Complex::new(0.25f32, 0.0));
        let e = expm(&a);
        // exp of rank-one J/4 = I + (e^{1/2} - 1)/2 J
        let expect = 1.0 + (0.5f32.exp() - 1.0) / 2.0;
        assert!((e[(0, 0)].re - expect).abs() < 1e-6);
    }

    #[test]
    fn partial_traces_of_product() {
        let a = m(&[&[(0.7, 0.0), (0.1, 0.2)], &[(0.1, -0.2), (0.3, 0.0)]]);
        let b = m(&[&[(0.4, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (0.6, 0.0)]]);
        let ab = kron(&a, &b);
        assert!((partial_trace_env(&ab, 2, 2) - &a).norm() < 1e-15);
        assert!((partial_trace_sys(&ab, 2, 2) - &b).norm() < 1e-15);
    }

    #[test]
    fn hermitian_spectrum_of_pauli_x() {
        let x = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let vals = hermitian_eigenvalues(&x);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }
}

//! Random instances for property checks: Ginibre states, random channels,
//! Haar-ish unitaries.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg;
use crate::scalar::{CMat, Real};
use crate::superop::{DensityMatrix, KrausSet};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat<T> {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re), T::lit(im))
    })
}

/// Random full-rank density matrix `G G^dagger / Tr(G G^dagger)`.
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix<T> {
    let g = ginibre::<T, R>(rng, d, d);
    let w = &g * g.adjoint();
    let tr = w.trace();
    let rho = linalg::hermitian_part(&(w / tr));
    DensityMatrix::new(rho).expect("Ginibre construction yields a valid state")
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat<T> {
    linalg::hermitian_part(&ginibre::<T, R>(rng, d, d))
}

/// Unitary `exp(-i H)` for a random Hermitian `H`.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat<T> {
    let h = random_hermitian::<T, R>(rng, d);
    linalg::expm(&(h * Complex::new(T::zero(), -T::one())))
}

/// `rank` random Kraus operators (not normalized).
pub fn random_kraus<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> KrausSet<T> {
    KrausSet::new((0..rank).map(|_| ginibre::<T, R>(rng, d, d)).collect())
        .expect("rank >= 1 yields a nonempty Kraus set")
}

/// Random CPTP channel of Kraus rank `rank`: `K_a = G_a S^{-1/2}` with
/// `S = sum_a G_a^dagger G_a`.
pub fn random_channel<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> KrausSet<T> {
    let raw = random_kraus::<T, R>(rng, d, rank);
    let s_inv_half = linalg::hermitian_inv_sqrt(&raw.completeness());
    KrausSet::new(raw.operators().iter().map(|g| g * &s_inv_half).collect())
        .expect("same dimensions as input")
}

/// Uniform sample from `[lo, hi)`.
pub fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::lit(rng.random_range(lo..hi))
}

//! Standard operators and channels.

use num_complex::Complex;

use crate::scalar::{cr, CMat, Real};
use crate::superop::{KrausSet, Superoperator};

fn m2<T: Real>(a: [[(f64, f64); 2]; 2]) -> CMat<T> {
    CMat::from_fn(2, 2, |i, j| Complex::new(T::lit(a[i][j].0), T::lit(a[i][j].1)))
}

pub fn pauli_x<T: Real>() -> CMat<T> {
    m2([[(0., 0.), (1., 0.)], [(1., 0.), (0., 0.)]])
}

pub fn pauli_y<T: Real>() -> CMat<T> {
    m2([[(0., 0.), (0., -1.)], [(0., 1.), (0., 0.)]])
}

pub fn pauli_z<T: Real>() -> CMat<T> {
    m2([[(1., 0.), (0., 0.)], [(0., 0.), (-1., 0.)]])
}

/// Lowering operator `|0><1|`.
pub fn sigma_minus<T: Real>() -> CMat<T> {
    m2([[(0., 0.), (1., 0.)], [(0., 0.), (0., 0.)]])
}

/// Raising operator `|1><0|`.
pub fn sigma_plus<T: Real>() -> CMat<T> {
    m2([[(0., 0.), (0., 0.)], [(1., 0.), (0., 0.)]])
}

/// `|i><j|` on dimension `d`.
pub fn ket_bra<T: Real>(d: usize, i: usize, j: usize) -> CMat<T> {
    crate::superop::matrix_unit(d, i, j)
}

/// Swap of two `d`-level systems.
pub fn swap<T: Real>(d: usize) -> CMat<T> {
    let mut w = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            w[(b * d + a, a * d + b)] = cr(T::one());
        }
    }
    w
}

/// Qubit amplitude damping with decay probability `p`.
pub fn amplitude_damping<T: Real>(p: T) -> KrausSet<T> {
    let k1 = m2::<T>([[(1., 0.), (0., 0.)], [(0., 0.), (0., 0.)]])
        + ket_bra::<T>(2, 1, 1) * cr((T::one() - p).sqrt());
    let k2 = sigma_minus::<T>() * cr(p.sqrt());
    KrausSet::new(vec![k1, k2]).expect("two 2x2 operators")
}

/// Qubit dephasing channel `rho -> (1 - p) rho + p Z rho Z`.
pub fn phase_flip<T: Real>(p: T) -> KrausSet<T> {
    let id = CMat::<T>::identity(2, 2) * cr((T::one() - p).sqrt());
    let z = pauli_z::<T>() * cr(p.sqrt());
    KrausSet::new(vec![id, z]).expect("two 2x2 operators")
}

pub fn unitary_channel<T: Real>(u: &CMat<T>) -> Superoperator<T> {
    Superoperator::conjugation(u)
}

#![allow(dead_code)]

use memkernel::constructors::{ops, GkslSpec};
use memkernel::{CMat64, Superoperator64};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn damping(gamma: f64) -> GkslSpec<f64> {
    GkslSpec::dissipative(vec![ops::sigma_minus::<f64>() * c(gamma.sqrt())]).unwrap()
}

/// Damping generator written out entry by entry from
/// `L[rho] = gamma (s rho s^dag - {s^dag s, rho} / 2)`, column-stacked.
pub fn damping_generator_by_hand(gamma: f64) -> CMat64 {
    let mut l = DMatrix::zeros(4, 4);
    let idx = |i: usize, j: usize| i + 2 * j;
    // rho_00' = gamma rho_11
    l[(idx(0, 0), idx(1, 1))] = c(gamma);
    // rho_11' = -gamma rho_11
    l[(idx(1, 1), idx(1, 1))] = c(-gamma);
    // coherences decay at gamma / 2
    l[(idx(0, 1), idx(0, 1))] = c(-gamma / 2.0);
    l[(idx(1, 0), idx(1, 0))] = c(-gamma / 2.0);
    l
}

/// Oracle `e^{L t}` from nalgebra's matrix exponential.
pub fn expm_oracle(l: &CMat64, t: f64) -> CMat64 {
    (l * c(t)).exp()
}

pub fn superop(m: CMat64) -> Superoperator64 {
    let d = (m.nrows() as f64).sqrt().round() as usize;
    Superoperator64::new(d, m).unwrap()
}

/// `rho -> Tr(rho) |k><k|` on a `d`-level system, built from its action on
/// matrix units.
pub fn replacement_by_hand(d: usize, k: usize) -> Superoperator64 {
    let mut m = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        m[(k + k * d, i + i * d)] = c(1.0);
    }
    superop(m)
}

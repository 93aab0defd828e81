//! Quantum semi-Markov pairs: `N(t) = g(t) id`, `Q(t) = f(t) E`, and the
//! Hadamard-product generalization of `N`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::pairs::LegitimatePair;
use crate::scalar::{cr, CMat, Real};
use crate::superop::{default_psd_tol, DensityMatrix, Superoperator};

use super::{require_channel, WaitingTime};

/// `E[rho] = rho_target Tr(rho)`; idempotent.
pub fn projective_channel<T: Real>(target: &DensityMatrix<T>) -> Superoperator<T> {
    Superoperator::replacement(target.matrix())
}

/// `N(t) = g(t) id`, `Q(t) = f(t) E` with `dN/dt = -f(t) id` attached.
pub fn semimarkov_pair<T: Real>(
    channel: &Superoperator<T>,
    waiting: &WaitingTime<T>,
    grid: TimeGrid<T>,
) -> Result<LegitimatePair<T>> {
    let d = channel.dim();
    require_channel(channel, "semi-Markov channel", default_psd_tol(d))?;
    let f = waiting.density_on(&grid)?;
    let g = waiting.survival_on(&grid)?;
    let id = Superoperator::identity(d);
    let n = MapFamily::scalar_times(grid, &g, &id)?;
    let q = MapFamily::scalar_times(grid, &f, channel)?;
    let minus_f: Vec<T> = f.iter().map(|x| -*x).collect();
    let n_dot = MapFamily::scalar_times(grid, &minus_f, &id)?;
    LegitimatePair::new(n, q, "semimarkov")?.with_derivative(n_dot)
}

/// Family of Hadamard multipliers `rho -> sum_ij a_ij(t) rho_ij |i><j|`.
///
/// Each `a(t_k)` must be PSD (then the map is CP) and `a(0)` must be the
/// all-ones matrix so that the family starts at the identity.
pub fn hadamard_family<T, F>(a: F, grid: TimeGrid<T>) -> Result<MapFamily<T>>
where
    T: Real,
    F: Fn(T) -> CMat<T> + Sync,
{
    let a0 = a(T::zero());
    let d = a0.nrows();
    let ones = CMat::from_element(d, d, cr(T::one()));
    if !a0.is_square() || (&a0 - &ones).norm() > T::default_tol() * T::from_count(d) {
        return Err(Error::InvalidParameter(
            "Hadamard multiplier must be the all-ones matrix at t = 0".into(),
        ));
    }
    let tol = T::default_tol() * T::from_count(d);
    let samples: Result<Vec<_>> = (0..grid.len())
        .map(|k| {
            let ak = a(grid.time(k));
            if ak.nrows() != d || ak.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: ak.nrows(),
                });
            }
            let min = linalg::min_hermitian_eigenvalue(&ak);
            if min < -tol || linalg::hermiticity_defect(&ak) > tol {
                return Err(Error::NotPsd {
                    what: "Hadamard multiplier".into(),
                    node: k,
                    min_eig: min.as_f64(),
                });
            }
            Ok(Superoperator::hadamard(&ak))
        })
        .collect();
    MapFamily::new(grid, samples?)
}

/// `N(t) = g(t) Had(A(t))` with `A_ii = 1`, `A_ij = e^{-dephasing t}`, and
/// `Q(t) = f(t) E`.
///
/// `N*(t)[I] = g(t) I`, so the trace condition is the scalar one `g' = -f`.
pub fn hadamard_semimarkov_pair<T: Real>(
    dephasing: T,
    channel: &Superoperator<T>,
    waiting: &WaitingTime<T>,
    grid: TimeGrid<T>,
) -> Result<LegitimatePair<T>> {
    if dephasing < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "dephasing rate must be nonnegative, got {dephasing}"
        )));
    }
    let d = channel.dim();
    require_channel(channel, "semi-Markov channel", default_psd_tol(d))?;
    let multiplier = |t: T| {
        let off = (-dephasing * t).exp();
        CMat::from_fn(d, d, |i, j| cr(if i == j { T::one() } else { off }))
    };
    let multiplier_dot = |t: T| {
        let off = -dephasing * (-dephasing * t).exp();
        CMat::from_fn(d, d, |i, j| cr(if i == j { T::zero() } else { off }))
    };
    let had = hadamard_family(multiplier, grid)?;
    let g = waiting.survival_on(&grid)?;
    let f = waiting.density_on(&grid)?;
    let n = had.scale_pointwise(&g)?;
    let q = MapFamily::scalar_times(grid, &f, channel)?;
    // d/dt [g Had(A)] = -f Had(A) + g Had(A')
    let n_dot_samples = (0..grid.len())
        .map(|k| {
            let t = grid.time(k);
            &had.get(k).scale(-f[k]) + &Superoperator::hadamard(&multiplier_dot(t)).scale(g[k])
        })
        .collect();
    let n_dot = MapFamily::new(grid, n_dot_samples)?;
    LegitimatePair::new(n, q, "hadamard_semimarkov")?.with_derivative(n_dot)
}

//! Collision-model pairs.
//!
//! * plain collision model: `N = e^{-Γt} F(t)`, `Q = Γ N`;
//! * generalized: `N = g(t) F(t)`, `Q = f(t) F(t) E`;
//! * non-commutative: `N = F(t) G(t)`, `Q = F(t) E Φ(t) G(t)` where
//!   `G[rho] = V rho V^dagger` and `V` solves `V' = -i C(t) V`,
//!   `C = H - (i/2) Φ*(t)[I]`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::pairs::LegitimatePair;
use crate::scalar::{ci, CMat, Real};
use crate::superop::{default_psd_tol, Superoperator};

use super::semigroup::effective_generator;
use super::{require_channel, require_dynamical_family, WaitingTime};

/// `N(t) = e^{-rate t} F(t)`, `Q(t) = rate N(t)`.
///
/// `f_dot`, the exact derivative of `F`, yields the exact
/// `dN/dt = e^{-rate t} (F' - rate F)`.
pub fn collision_pair<T: Real>(
    family: &MapFamily<T>,
    family_dot: Option<&MapFamily<T>>,
    rate: T,
) -> Result<LegitimatePair<T>> {
    if !(rate > T::zero()) {
        return Err(Error::InvalidParameter(format!("collision rate must be positive, got {rate}")));
    }
    require_dynamical_family(family, "collision family", default_psd_tol(family.dim()))?;
    let grid = *family.grid();
    let decay: Vec<T> = grid.times().into_iter().map(|t| (-rate * t).exp()).collect();
    let n = family.scale_pointwise(&decay)?;
    let q = n.scale(rate);
    let out = LegitimatePair::new(n, q, "collision")?;
    match family_dot {
        Some(fd) => {
            let n_dot = fd.sub(&family.scale(rate))?.scale_pointwise(&decay)?;
            out.with_derivative(n_dot)
        }
        None => Ok(out),
    }
}

/// `N(t) = g(t) F(t)`, `Q(t) = f(t) F(t) E`.
///
/// With `E = id` and exponential waiting this is [`collision_pair`]; with
/// `F = id` it is the semi-Markov pair.
pub fn generalized_collision_pair<T: Real>(
    family: &MapFamily<T>,
    family_dot: Option<&MapFamily<T>>,
    channel: &Superoperator<T>,
    waiting: &WaitingTime<T>,
) -> Result<LegitimatePair<T>> {
    let d = family.dim();
    let tol = default_psd_tol(d);
    require_dynamical_family(family, "collision family", tol)?;
    require_channel(channel, "collision channel", tol)?;
    if channel.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: channel.dim(),
        });
    }
    let grid = *family.grid();
    let g = waiting.survival_on(&grid)?;
    let f = waiting.density_on(&grid)?;
    let n = family.scale_pointwise(&g)?;
    let q = family.then_after(channel).scale_pointwise(&f)?;
    let out = LegitimatePair::new(n, q, "generalized_collision")?;
    match family_dot {
        Some(fd) => {
            // d/dt [g F] = -f F + g F'
            let minus_f: Vec<T> = f.iter().map(|x| -*x).collect();
            let n_dot = family.scale_pointwise(&minus_f)?.add(&fd.scale_pointwise(&g)?)?;
            out.with_derivative(n_dot)
        }
        None => Ok(out),
    }
}

/// Non-commutative collision pair together with its building blocks.
#[derive(Debug, Clone)]
pub struct NoncommutativePair<T: Real> {
    pub pair: LegitimatePair<T>,
    /// `G(t)[rho] = V(t) rho V(t)^dagger`
    pub survival: MapFamily<T>,
    /// `F(t) = Φ(t) G(t)`
    pub waiting: MapFamily<T>,
}

impl<T: Real> NoncommutativePair<T> {
    /// Scalar shadows `g(t) = Tr G*(t)[I]` and `f(t) = Tr F*(t)[I]`, which
    /// satisfy `g' = -f`.
    pub fn scalar_shadows(&self) -> (Vec<T>, Vec<T>) {
        let tr = |f: &MapFamily<T>| -> Vec<T> { f.dual_identities().iter().map(|m| m.trace().re).collect() };
        (tr(&self.survival), tr(&self.waiting))
    }
}

/// Build `{N, Q}` from a CP family `Φ`, a time-dependent Hamiltonian, a
/// dynamical map `F` and a channel `E`.
///
/// `V` is advanced with midpoint exponentials
/// `V(t_{k+1}) = exp(-i dt C(t_k + dt/2)) V(t_k)`, where `Φ*[I]` at the
/// midpoint is the average of its two neighbouring nodes.
pub fn noncommutative_collision_pair<T, H>(
    phi: &MapFamily<T>,
    hamiltonian: H,
    family: &MapFamily<T>,
    family_dot: Option<&MapFamily<T>>,
    channel: &Superoperator<T>,
) -> Result<NoncommutativePair<T>>
where
    T: Real,
    H: Fn(T) -> CMat<T>,
{
    let d = phi.dim();
    let grid: TimeGrid<T> = *phi.grid();
    let tol = default_psd_tol(d);
    if family.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    if family.dim() != d || channel.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if family.dim() != d { family.dim() } else { channel.dim() },
        });
    }
    if let Some((node, min_eig)) = phi.first_non_cp(tol) {
        return Err(Error::NotCp {
            what: "Φ".into(),
            node,
            min_eig: min_eig.as_f64(),
        });
    }
    require_dynamical_family(family, "collision family", tol)?;
    require_channel(channel, "collision channel", tol)?;

    let hermitian = |t: T| -> Result<CMat<T>> {
        let h = hamiltonian(t);
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: h.nrows(),
            });
        }
        let defect = linalg::hermiticity_defect(&h);
        if defect > T::default_tol() * (T::one() + h.norm()) {
            return Err(Error::NotHermitian { defect: defect.as_f64() });
        }
        Ok(h)
    };

    let x = phi.dual_identities();
    let half_i = ci(T::lit(0.5));
    let dt = grid.dt();
    let mut v = CMat::<T>::identity(d, d);
    let mut g_samples = Vec::with_capacity(grid.len());
    let mut g_dot_samples = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let t = grid.time(k);
        let g_k = Superoperator::conjugation(&v);
        // dG/dt = -Z(C(t)) G with C taken at the node itself.
        let c_node = hermitian(t)? - &x[k] * half_i;
        g_dot_samples.push((-&effective_generator(&c_node)).compose(&g_k));
        g_samples.push(g_k);
        if k + 1 < grid.len() {
            let x_mid = (&x[k] + &x[k + 1]) * Complex::new(T::lit(0.5), T::zero());
            let c_mid = hermitian(t + dt * T::lit(0.5))? - x_mid * half_i;
            v = linalg::expm(&(c_mid * Complex::new(T::zero(), -dt))) * v;
        }
    }
    let survival = MapFamily::new(grid, g_samples)?;
    let survival_dot = MapFamily::new(grid, g_dot_samples)?;
    let waiting = phi.compose_pointwise(&survival)?;

    let n = family.compose_pointwise(&survival)?;
    let q = family.then_after(channel).compose_pointwise(&waiting)?;
    let mut pair = LegitimatePair::new(n, q, "noncommutative_collision")?;
    if let Some(fd) = family_dot {
        let n_dot = fd
            .compose_pointwise(&survival)?
            .add(&family.compose_pointwise(&survival_dot)?)?;
        pair = pair.with_derivative(n_dot)?;
    }
    Ok(NoncommutativePair {
        pair,
        survival,
        waiting,
    })
}

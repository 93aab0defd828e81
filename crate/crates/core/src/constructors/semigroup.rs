//! Markovian semigroups in legitimate-pair form.
//!
//! For a GKSL generator `L = B - Z` with `B[rho] = sum_a K_a rho K_a^dagger`
//! and `Z[rho] = i(C rho - rho C^dagger)`, `C = H - (i/2) sum_a K_a^dagger K_a`,
//! the pair `N(t) = e^{-Zt}`, `Q(t) = B N(t)` reproduces `e^{Lt}`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::pairs::{reduce_pair, LegitimatePair};
use crate::scalar::{ci, CMat, Real};
use crate::superop::{DensityMatrix, Superoperator};

/// Hamiltonian plus jump operators with the rates absorbed,
/// `K_a = sqrt(gamma_a) V_a`. The jump list may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct GkslSpec<T: Real> {
    hamiltonian: CMat<T>,
    jumps: Vec<CMat<T>>,
}

impl<T: Real> GkslSpec<T> {
    pub fn new(hamiltonian: CMat<T>, jumps: Vec<CMat<T>>) -> Result<Self> {
        if !hamiltonian.is_square() || hamiltonian.nrows() == 0 {
            return Err(Error::InvalidParameter("Hamiltonian must be a nonempty square matrix".into()));
        }
        let d = hamiltonian.nrows();
        let defect = linalg::hermiticity_defect(&hamiltonian);
        if defect > T::default_tol() * (T::one() + hamiltonian.norm()) {
            return Err(Error::NotHermitian { defect: defect.as_f64() });
        }
        for k in &jumps {
            if k.nrows() != d || k.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: k.nrows().max(k.ncols()),
                });
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    /// Jump-only generator with `H = 0`.
    pub fn dissipative(jumps: Vec<CMat<T>>) -> Result<Self> {
        let d = jumps
            .first()
            .map(|k| k.nrows())
            .ok_or_else(|| Error::InvalidParameter("need at least one jump operator".into()))?;
        Self::new(CMat::zeros(d, d), jumps)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMat<T> {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[CMat<T>] {
        &self.jumps
    }

    /// `C = H - (i/2) sum_a K_a^dagger K_a`.
    pub fn effective_hamiltonian(&self) -> CMat<T> {
        let d = self.dim();
        let kk = self
            .jumps
            .iter()
            .fold(CMat::<T>::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        &self.hamiltonian - kk * ci(T::lit(0.5))
    }

    /// `B[rho] = sum_a K_a rho K_a^dagger`.
    pub fn jump_map(&self) -> Superoperator<T> {
        self.jumps
            .iter()
            .fold(Superoperator::zero(self.dim()), |acc, k| {
                &acc + &Superoperator::sandwich(k, &k.adjoint())
            })
    }

    /// `Z[rho] = i(C rho - rho C^dagger)`.
    pub fn no_jump_generator(&self) -> Superoperator<T> {
        effective_generator(&self.effective_hamiltonian())
    }

    /// `L = B - Z`.
    pub fn generator(&self) -> Superoperator<T> {
        &self.jump_map() - &self.no_jump_generator()
    }
}

/// `Z[rho] = i(C rho - rho C^dagger)` for an arbitrary effective Hamiltonian.
pub(crate) fn effective_generator<T: Real>(c: &CMat<T>) -> Superoperator<T> {
    let d = c.nrows();
    let id = CMat::<T>::identity(d, d);
    let i = ci(T::one());
    let m = (linalg::kron(&id, c) - linalg::kron(&c.conjugate(), &id)) * i;
    Superoperator::new(d, m).expect("d^2 x d^2 by construction")
}

pub fn gksl_generator<T: Real>(spec: &GkslSpec<T>) -> Superoperator<T> {
    spec.generator()
}

/// `e^{G t_k}` at every node, with the derivative `G e^{G t_k}`.
pub fn dynamical_semigroup<T: Real>(generator: &Superoperator<T>, grid: TimeGrid<T>) -> (MapFamily<T>, MapFamily<T>) {
    let d = generator.dim();
    let g = generator.matrix();
    let samples: Vec<Superoperator<T>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let e = linalg::expm(&(g * Complex::new(grid.time(k), T::zero())));
            Superoperator::new(d, e).expect("square")
        })
        .collect();
    let family = MapFamily::new(grid, samples).expect("one sample per node");
    let derivative = family.preceded_by(generator);
    (family, derivative)
}

/// `N(t) = e^{-Zt}`, `Q(t) = B N(t)`, with `dN/dt = -Z N` attached.
///
/// With `extra = Some(L')` (another GKSL generator) the no-jump part becomes
/// `e^{(-Z + L')t}` and the resulting dynamics is `e^{(L + L')t}`.
pub fn semigroup_pair<T: Real>(
    spec: &GkslSpec<T>,
    grid: TimeGrid<T>,
    extra: Option<&Superoperator<T>>,
) -> Result<LegitimatePair<T>> {
    let d = spec.dim();
    let b = spec.jump_map();
    let z = spec.no_jump_generator();
    let (n, n_dot, label) = match extra {
        None => {
            // Conjugation by e^{-iCt}: exactly CP and only a d x d exponential.
            let c = spec.effective_hamiltonian();
            let n = MapFamily::sample(grid, |t| {
                Superoperator::conjugation(&linalg::expm(&(&c * Complex::new(T::zero(), -t))))
            })?;
            let n_dot = n.preceded_by(&(-&z));
            (n, n_dot, "semigroup")
        }
        Some(l2) => {
            if l2.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: l2.dim(),
                });
            }
            let (n, n_dot) = dynamical_semigroup(&(l2 - &z), grid);
            (n, n_dot, "semigroup+extra")
        }
    };
    let q = n.preceded_by(&b);
    LegitimatePair::new(n, q, label)?.with_derivative(n_dot)
}

/// Reduction of a composite semigroup pair on `system ⊗ environment` with a
/// fixed environment state.
pub fn reduced_semigroup_pair<T: Real>(
    composite: &GkslSpec<T>,
    omega: &DensityMatrix<T>,
    grid: TimeGrid<T>,
) -> Result<LegitimatePair<T>> {
    let dc = composite.dim();
    let de = omega.dim();
    if !dc.is_multiple_of(de) {
        return Err(Error::NotFactorizable {
            total: dc,
            system: dc / de,
            env: de,
        });
    }
    let full = semigroup_pair(composite, grid, None)?;
    Ok(reduce_pair(&full, omega)?.relabel("reduced_semigroup"))
}

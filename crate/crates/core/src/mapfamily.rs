//! Superoperator families sampled on a uniform time grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{self, LinearSample};
use crate::scalar::{cr, CMat, Real};
use crate::superop::Superoperator;

/// Uniform grid `t_k = k * t_max / n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    t_max: T,
    n_steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub const DEFAULT_STEPS: usize = 1000;

    pub fn new(t_max: T, n_steps: usize) -> Result<Self> {
        if n_steps < 2 {
            return Err(Error::GridTooSmall { min: 2, found: n_steps });
        }
        if !(t_max > T::zero()) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
        }
        Ok(Self { t_max, n_steps })
    }

    pub fn with_default_steps(t_max: T) -> Result<Self> {
        Self::new(t_max, Self::DEFAULT_STEPS)
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> T {
        self.t_max / T::from_count(self.n_steps)
    }

    pub fn time(&self, k: usize) -> T {
        // Multiply before dividing so that the last node is exactly t_max.
        self.t_max * T::from_count(k) / T::from_count(self.n_steps)
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Same span, twice as many steps.
    pub fn refined(&self) -> Self {
        Self {
            t_max: self.t_max,
            n_steps: 2 * self.n_steps,
        }
    }
}

impl<T: Real> LinearSample<T> for Superoperator<T> {
    fn zeros_like(&self) -> Self {
        Superoperator::zero(self.dim())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        let mut m = std::mem::replace(self, Superoperator::zero(0)).into_matrix();
        let a = cr(a);
        m.zip_apply(x.matrix(), |s, v| *s += v * a);
        *self = Superoperator::from_raw(x.dim(), m);
    }
}

/// Laplace transform of a family at one real point, with the size of the
/// neglected tail.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceValue<T: Real> {
    pub map: Superoperator<T>,
    /// `e^{-s t_max} ||F(t_max)||_F / s`
    pub truncation_bound: T,
}

/// One superoperator per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MapFamily<T: Real> {
    grid: TimeGrid<T>,
    dim: usize,
    samples: Vec<Superoperator<T>>,
}

impl<T: Real> MapFamily<T> {
    pub fn new(grid: TimeGrid<T>, samples: Vec<Superoperator<T>>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: samples.len(),
            });
        }
        let dim = samples[0].dim();
        if let Some(bad) = samples.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self { grid, dim, samples })
    }

    /// `samples[k] = f(t_k)`.
    pub fn sample<F>(grid: TimeGrid<T>, f: F) -> Result<Self>
    where
        F: Fn(T) -> Superoperator<T> + Sync,
    {
        let samples: Vec<_> = (0..grid.len()).into_par_iter().map(|k| f(grid.time(k))).collect();
        Self::new(grid, samples)
    }

    pub fn try_sample<F>(grid: TimeGrid<T>, f: F) -> Result<Self>
    where
        F: Fn(T) -> Result<Superoperator<T>> + Sync,
    {
        let samples: Result<Vec<_>> = (0..grid.len()).into_par_iter().map(|k| f(grid.time(k))).collect();
        Self::new(grid, samples?)
    }

    pub fn constant(grid: TimeGrid<T>, map: &Superoperator<T>) -> Self {
        Self {
            grid,
            dim: map.dim(),
            samples: vec![map.clone(); grid.len()],
        }
    }

    pub fn identity(grid: TimeGrid<T>, dim: usize) -> Self {
        Self::constant(grid, &Superoperator::identity(dim))
    }

    pub fn zero(grid: TimeGrid<T>, dim: usize) -> Self {
        Self::constant(grid, &Superoperator::zero(dim))
    }

    /// `samples[k] = weights[k] * map`.
    pub fn scalar_times(grid: TimeGrid<T>, weights: &[T], map: &Superoperator<T>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: weights.len(),
            });
        }
        Self::new(grid, weights.iter().map(|w| map.scale(*w)).collect())
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Superoperator<T>] {
        &self.samples
    }

    pub fn get(&self, k: usize) -> &Superoperator<T> {
        &self.samples[k]
    }

    pub fn last(&self) -> &Superoperator<T> {
        self.samples.last().expect("families are never empty")
    }

    pub fn into_samples(self) -> Vec<Superoperator<T>> {
        self.samples
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    fn matrices(&self) -> Vec<CMat<T>> {
        self.samples.iter().map(|s| s.matrix().clone()).collect()
    }

    fn from_matrices(grid: TimeGrid<T>, dim: usize, ms: Vec<CMat<T>>) -> Self {
        Self {
            grid,
            dim,
            samples: ms.into_iter().map(|m| Superoperator::from_raw(dim, m)).collect(),
        }
    }

    /// `[A * B](t_k) = int_0^{t_k} A(t_k - s) ∘ B(s) ds` by the trapezoid rule.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let out = quadrature::convolve(&self.matrices(), &other.matrices(), self.grid.dt());
        Ok(Self::from_matrices(self.grid, self.dim, out))
    }

    /// Second-order finite-difference derivative.
    pub fn differentiate(&self) -> Result<Self> {
        if self.grid.n_steps < 2 {
            return Err(Error::GridTooSmall {
                min: 2,
                found: self.grid.n_steps,
            });
        }
        let out = quadrature::differentiate(&self.samples, self.grid.dt());
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            samples: out,
        })
    }

    /// `int_0^{t_k} F(s) ds` by the cumulative trapezoid rule.
    pub fn antiderivative(&self) -> Self {
        Self {
            grid: self.grid,
            dim: self.dim,
            samples: quadrature::cumulative_trapezoid(&self.samples, self.grid.dt()),
        }
    }

    /// Trapezoid approximation of `int_0^{t_max} e^{-s t} F(t) dt`.
    pub fn laplace(&self, s: T) -> Result<LaplaceValue<T>> {
        if !(s > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "Laplace variable must be positive, got {s}"
            )));
        }
        let dt = self.grid.dt();
        let n = self.grid.n_steps;
        let mut acc = Superoperator::zero(self.dim);
        for (k, f) in self.samples.iter().enumerate() {
            let w = if k == 0 || k == n { dt * T::lit(0.5) } else { dt };
            acc.add_scaled(w * (-s * self.grid.time(k)).exp(), f);
        }
        let truncation_bound = (-s * self.grid.t_max).exp() * self.last().norm() / s;
        Ok(LaplaceValue {
            map: acc,
            truncation_bound,
        })
    }

    /// `self(t_k) ∘ other(t_k)`.
    pub fn compose_pointwise(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            samples: self
                .samples
                .par_iter()
                .zip(other.samples.par_iter())
                .map(|(a, b)| a.compose(b))
                .collect(),
        })
    }

    /// `self(t_k) ∘ map`.
    pub fn then_after(&self, map: &Superoperator<T>) -> Self {
        self.map(|s| s.compose(map))
    }

    /// `map ∘ self(t_k)`.
    pub fn preceded_by(&self, map: &Superoperator<T>) -> Self {
        self.map(|s| map.compose(s))
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(&Superoperator<T>) -> Superoperator<T> + Sync + Send,
    {
        let samples: Vec<_> = self.samples.par_iter().map(f).collect();
        let dim = samples[0].dim();
        Self {
            grid: self.grid,
            dim,
            samples,
        }
    }

    pub fn scale(&self, a: T) -> Self {
        self.map(|s| s.scale(a))
    }

    /// `weights[k] * self(t_k)`.
    pub fn scale_pointwise(&self, weights: &[T]) -> Result<Self> {
        if weights.len() != self.samples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.samples.len(),
                found: weights.len(),
            });
        }
        Ok(Self {
            grid: self.grid,
            dim: self.dim,
            samples: self.samples.iter().zip(weights).map(|(s, w)| s.scale(*w)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with<F>(&self, other: &Self, f: F) -> Self
    where
        F: Fn(&Superoperator<T>, &Superoperator<T>) -> Superoperator<T>,
    {
        Self {
            grid: self.grid,
            dim: self.dim,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Largest Frobenius distance over all nodes.
    pub fn max_distance(&self, other: &Self) -> Result<T> {
        self.check_compatible(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.distance(b))
            .fold(T::zero(), |m, x| if x > m { x } else { m }))
    }

    /// Largest Frobenius norm over all nodes.
    pub fn max_norm(&self) -> T {
        self.samples
            .iter()
            .map(|s| s.norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// `F*(t_k)[I]` at every node.
    pub fn dual_identities(&self) -> Vec<CMat<T>> {
        self.samples.par_iter().map(|s| s.dual_identity()).collect()
    }

    /// Smallest Choi eigenvalue at each node.
    pub fn min_choi_eigs(&self) -> Vec<T> {
        self.samples.par_iter().map(|s| s.choi().min_eigenvalue()).collect()
    }

    /// First node at which the family is not CP, with its min Choi eigenvalue.
    pub fn first_non_cp(&self, tol: T) -> Option<(usize, T)> {
        let flags: Vec<(bool, T)> = self
            .samples
            .par_iter()
            .map(|s| {
                let c = s.choi();
                let min = c.min_eigenvalue();
                (c.hermiticity_defect() <= tol && min >= -tol, min)
            })
            .collect();
        flags.into_iter().enumerate().find(|(_, (ok, _))| !ok).map(|(k, (_, m))| (k, m))
    }

    /// First node at which the family is not CPTP.
    pub fn first_non_cptp(&self, tol: T) -> Option<usize> {
        let flags: Vec<bool> = self.samples.par_iter().map(|s| s.is_cptp(tol)).collect();
        flags.into_iter().position(|ok| !ok)
    }
}

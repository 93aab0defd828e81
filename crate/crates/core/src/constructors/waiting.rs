//! Waiting-time densities `f(t)` and survival probabilities
//! `g(t) = 1 - int_0^t f`.

use crate::error::{Error, Result};
use crate::mapfamily::TimeGrid;
use crate::quadrature;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum WaitingTime<T: Real> {
    /// `f = rate e^{-rate t}`, `g = e^{-rate t}`.
    Exponential { rate: T },
    /// `f = (omega/2) sin(omega t)`, `g = (1 + cos(omega t)) / 2`. Takes
    /// negative values but keeps `0 <= int_0^t f <= 1`.
    Oscillating { omega: T },
    /// Density sampled on a grid.
    Tabulated { grid: TimeGrid<T>, density: Vec<T> },
}

impl<T: Real> WaitingTime<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        if !(rate > T::zero()) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn oscillating(omega: T) -> Result<Self> {
        if !(omega > T::zero()) {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        Ok(Self::Oscillating { omega })
    }

    /// Tabulated density; the running mass must stay in `[0, 1]` up to
    /// `1e-9` plus twice the estimated trapezoid error.
    pub fn tabulated(grid: TimeGrid<T>, density: Vec<T>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: density.len(),
            });
        }
        let mass = quadrature::cumulative_trapezoid(&density, grid.dt());
        let err = quadrature::cumulative_trapezoid_error(&density, grid.dt());
        if let Some((node, m)) = mass
            .iter()
            .zip(&err)
            .enumerate()
            .find(|(_, (m, e))| {
                let slack = mass_slack(**e);
                **m < -slack || **m > T::one() + slack
            })
            .map(|(k, (m, _))| (k, m))
        {
            return Err(Error::MassOutOfRange {
                state: 0,
                node,
                mass: m.as_f64(),
            });
        }
        Ok(Self::Tabulated { grid, density })
    }

    fn check_grid(&self, grid: &TimeGrid<T>) -> Result<()> {
        match self {
            Self::Tabulated { grid: own, .. } if own != grid => Err(Error::GridMismatch),
            _ => Ok(()),
        }
    }

    /// `f(t_k)`.
    pub fn density_on(&self, grid: &TimeGrid<T>) -> Result<Vec<T>> {
        self.check_grid(grid)?;
        Ok(match self {
            Self::Exponential { rate } => grid.times().into_iter().map(|t| *rate * (-*rate * t).exp()).collect(),
            Self::Oscillating { omega } => grid
                .times()
                .into_iter()
                .map(|t| T::lit(0.5) * *omega * (*omega * t).sin())
                .collect(),
            Self::Tabulated { density, .. } => density.clone(),
        })
    }

    /// `g(t_k)`.
    pub fn survival_on(&self, grid: &TimeGrid<T>) -> Result<Vec<T>> {
        self.check_grid(grid)?;
        Ok(match self {
            Self::Exponential { rate } => grid.times().into_iter().map(|t| (-*rate * t).exp()).collect(),
            Self::Oscillating { omega } => grid
                .times()
                .into_iter()
                .map(|t| T::lit(0.5) * (T::one() + (*omega * t).cos()))
                .collect(),
            Self::Tabulated { density, .. } => quadrature::cumulative_trapezoid(density, grid.dt())
                .into_iter()
                .map(|m| T::one() - m)
                .collect(),
        })
    }

    /// `f'(t_k)`; finite differences for tabulated densities.
    pub fn density_derivative_on(&self, grid: &TimeGrid<T>) -> Result<Vec<T>> {
        self.check_grid(grid)?;
        Ok(match self {
            Self::Exponential { rate } => grid
                .times()
                .into_iter()
                .map(|t| -*rate * *rate * (-*rate * t).exp())
                .collect(),
            Self::Oscillating { omega } => grid
                .times()
                .into_iter()
                .map(|t| T::lit(0.5) * *omega * *omega * (*omega * t).cos())
                .collect(),
            Self::Tabulated { density, .. } => quadrature::differentiate(density, grid.dt()),
        })
    }

    /// True when `f >= 0` everywhere, i.e. the pair built from it can be
    /// certified.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            Self::Exponential { .. } => true,
            Self::Oscillating { .. } => false,
            Self::Tabulated { density, .. } => density.iter().all(|f| *f >= T::zero()),
        }
    }
}

/// `1e-9 + 2 |e|` for an estimated quadrature error `e`.
pub(crate) fn mass_slack<T: Real>(e: T) -> T {
    T::lit(1e-9) + T::lit(2.0) * e.abs()
}

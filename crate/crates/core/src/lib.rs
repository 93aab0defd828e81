//! Legitimate pairs `{N(t), Q(t)}` of completely positive map families and
//! the memory-kernel dynamics they generate.
//!
//! A pair consists of a monotonic quantum-operation family `N(t)` with
//! `N(0) = id` and a CP family `Q(t)` tied together by the trace condition
//! `Q*(t)[I] = -d/dt N*(t)[I]`. The dynamical map is
//! `Λ = N + N*Q + N*Q*Q + ...` (convolution powers), computed here by series
//! summation, second-kind Volterra marching, or an inhomogeneous
//! integro-differential equation.
//!
//! All numerics are generic over [`Real`] (`f32`/`f64`); the `*64` aliases at
//! the crate root fix `f64`.

pub mod classical;
pub mod constructors;
pub mod error;
pub mod linalg;
pub mod mapfamily;
pub mod pairs;
pub mod quadrature;
pub mod random;
pub mod scalar;
pub mod solver;
pub mod superop;

pub use error::{Error, Result};
pub use classical::{ClassicalPair, StochasticFamily};
pub use mapfamily::{LaplaceValue, MapFamily, TimeGrid};
pub use pairs::{LegitimacyReport, LegitimatePair};
pub use solver::{Kernel, Method, SolveSpec, Trajectory};

pub use scalar::{CMat, CVec, Real, C};
pub use superop::{ChoiMatrix, DensityMatrix, KrausSet, PropertyReport, Superoperator};

pub type Superoperator64 = Superoperator<f64>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type KrausSet64 = KrausSet<f64>;
pub type MapFamily64 = MapFamily<f64>;
pub type TimeGrid64 = TimeGrid<f64>;
pub type LegitimatePair64 = LegitimatePair<f64>;
pub type ClassicalPair64 = ClassicalPair<f64>;

pub type CMat64 = CMat<f64>;

pub type Superoperator32 = Superoperator<f32>;
pub type DensityMatrix32 = DensityMatrix<f32>;
pub type MapFamily32 = MapFamily<f32>;

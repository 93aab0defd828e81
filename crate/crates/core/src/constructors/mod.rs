//! Builders for every pair family: GKSL semigroups and their reductions,
//! semi-Markov evolutions, collision models and the non-commutative
//! generalization.

pub mod collision;
pub mod ops;
pub mod semigroup;
pub mod semimarkov;
pub mod waiting;

pub use collision::{
    collision_pair, generalized_collision_pair, noncommutative_collision_pair, NoncommutativePair,
};
pub use semigroup::{dynamical_semigroup, gksl_generator, reduced_semigroup_pair, semigroup_pair, GkslSpec};
pub use semimarkov::{hadamard_family, hadamard_semimarkov_pair, projective_channel, semimarkov_pair};
pub use waiting::WaitingTime;

use crate::error::{Error, Result};
use crate::mapfamily::MapFamily;
use crate::scalar::Real;
use crate::superop::Superoperator;

pub(crate) fn require_channel<T: Real>(channel: &Superoperator<T>, what: &str, tol: T) -> Result<()> {
    if channel.is_cptp(tol) {
        Ok(())
    } else {
        Err(Error::NotCptp {
            what: what.into(),
            node: 0,
        })
    }
}

pub(crate) fn require_dynamical_family<T: Real>(f: &MapFamily<T>, what: &str, tol: T) -> Result<()> {
    if let Some(node) = f.first_non_cptp(tol) {
        return Err(Error::NotCptp { what: what.into(), node });
    }
    let d = f.dim();
    if f.get(0).distance(&Superoperator::identity(d)) > T::default_tol() * T::from_count(d) {
        return Err(Error::InvalidParameter(format!("{what} must equal the identity at t = 0")));
    }
    Ok(())
}

//! Classical semi-Markov evolution on `m` states.
//!
//! `q_ij(t)` is the density for a jump `j -> i` after a sojourn of length `t`
//! in `j`, and `g_j(t) = 1 - int_0^t sum_i q_ij` is the survival probability
//! of state `j`. The transition matrix `T(t)` (column-stochastic) solves
//! `T(t) = N(t) + int_0^t T(t - s) q(s) ds` with `N = diag(g)`.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::constructors::waiting::mass_slack;
use crate::constructors::WaitingTime;
use crate::error::{Error, Result};
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::pairs::LegitimatePair;
use crate::quadrature;
use crate::scalar::{cr, CMat, Real};
use crate::solver::fmt17;
use crate::superop::Superoperator;

/// Slack on the rates, `q_ij >= -RATE_SLACK`.
pub const RATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPair<T: Real> {
    grid: TimeGrid<T>,
    q: Vec<DMatrix<T>>,
    g: Vec<DVector<T>>,
    nonnegative: bool,
}

impl<T: Real> ClassicalPair<T> {
    /// Pair from nonnegative rate samples `q(t_k)`.
    pub fn new(grid: TimeGrid<T>, q: Vec<DMatrix<T>>) -> Result<Self> {
        let slack = T::lit(RATE_SLACK);
        for (node, qk) in q.iter().enumerate() {
            for j in 0..qk.ncols() {
                for i in 0..qk.nrows() {
                    if qk[(i, j)] < -slack {
                        return Err(Error::NegativeRate {
                            i,
                            j,
                            node,
                            value: qk[(i, j)].as_f64(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            nonnegative: true,
            ..Self::build(grid, q)?
        })
    }

    /// Pair whose rates may change sign, provided every survival probability
    /// stays in `[0, 1]`. Oscillating waiting times are of this kind; the
    /// resulting `T(t)` is not guaranteed to be stochastic.
    pub fn new_signed(grid: TimeGrid<T>, q: Vec<DMatrix<T>>) -> Result<Self> {
        let mut pair = Self::build(grid, q)?;
        let slack = T::lit(RATE_SLACK);
        pair.nonnegative = pair.q.iter().all(|qk| qk.iter().all(|x| *x >= -slack));
        Ok(pair)
    }

    fn build(grid: TimeGrid<T>, q: Vec<DMatrix<T>>) -> Result<Self> {
        if q.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: q.len(),
            });
        }
        let m = q[0].nrows();
        if let Some(bad) = q.iter().find(|x| x.nrows() != m || x.ncols() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: if bad.nrows() != m { bad.nrows() } else { bad.ncols() },
            });
        }
        let outflow: Vec<DVector<T>> = q.iter().map(column_sums).collect();
        let mass = quadrature::cumulative_trapezoid(&outflow, grid.dt());
        let err = quadrature::cumulative_trapezoid_error(&outflow, grid.dt());
        let mut g = Vec::with_capacity(mass.len());
        for (node, (mk, ek)) in mass.into_iter().zip(&err).enumerate() {
            let gk = mk.map(|x| T::one() - x);
            let bad = (0..gk.len()).find(|&j| {
                let slack = mass_slack(ek[j]);
                gk[j] < -slack || gk[j] > T::one() + slack
            });
            if let Some(state) = bad {
                return Err(Error::MassOutOfRange {
                    state,
                    node,
                    mass: (T::one() - gk[state]).as_f64(),
                });
            }
            g.push(gk);
        }
        Ok(Self {
            grid,
            q,
            g,
            nonnegative: false,
        })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        self.q[0].nrows()
    }

    pub fn q(&self) -> &[DMatrix<T>] {
        &self.q
    }

    pub fn g(&self) -> &[DVector<T>] {
        &self.g
    }

    /// Whether every rate is nonnegative, so that `T(t)` is stochastic.
    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// `N(t_k) = diag(g(t_k))`
    pub fn n(&self) -> Vec<DMatrix<T>> {
        self.g.iter().map(|g| DMatrix::from_diagonal(g)).collect()
    }

    /// `max_{k,j} |sum_i q_ij(t_k) + g_j'(t_k)|` with `g'` from finite
    /// differences.
    pub fn tr_semi_residual(&self) -> T {
        let g_dot = quadrature::differentiate(&self.g, self.grid.dt());
        self.q
            .iter()
            .zip(&g_dot)
            .map(|(q, gd)| (column_sums(q) + gd).amax())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Diagonal embedding as a quantum pair. `N(t)` is the Hadamard
    /// multiplier `a_ij = sqrt(g_i g_j)` (rank one, so CP, and the identity at
    /// `t = 0`), which scales population `j` by `g_j`;
    /// `Q(t)[ρ] = sum_ij q_ij ρ_jj |i><i|`.
    pub fn to_quantum(&self) -> Result<LegitimatePair<T>> {
        let m = self.dim();
        let diag = |i: usize| i + i * m;
        let n = self
            .g
            .iter()
            .map(|g| {
                let root = g.map(|x| if x > T::zero() { x.sqrt() } else { T::zero() });
                let a = CMat::from_fn(m, m, |i, j| cr(root[i] * root[j]));
                Superoperator::hadamard(&a)
            })
            .collect();
        let q = self
            .q
            .iter()
            .map(|q| {
                let mut s = CMat::zeros(m * m, m * m);
                for j in 0..m {
                    for i in 0..m {
                        s[(diag(i), diag(j))] = cr(q[(i, j)]);
                    }
                }
                Superoperator::new(m, s).expect("square d^2 matrix")
            })
            .collect();
        LegitimatePair::new(
            MapFamily::new(self.grid, n)?,
            MapFamily::new(self.grid, q)?,
            "classical embedding",
        )
    }
}

fn column_sums<T: Real>(q: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(q.ncols(), q.column_iter().map(|c| c.sum()))
}

/// Pair with `q(t) = f(t) P` for a column-stochastic jump matrix `P`.
/// Accepts signed densities such as the oscillating one.
pub fn classical_semimarkov_pair<T: Real>(
    jump: &DMatrix<T>,
    waiting: &WaitingTime<T>,
    grid: TimeGrid<T>,
) -> Result<ClassicalPair<T>> {
    if !jump.is_square() {
        return Err(Error::DimensionMismatch {
            expected: jump.nrows(),
            found: jump.ncols(),
        });
    }
    let tol = T::lit(1e-9);
    if jump.iter().any(|x| *x < T::zero()) || column_sums(jump).iter().any(|s| (*s - T::one()).abs() > tol) {
        return Err(Error::InvalidParameter("jump matrix must be column-stochastic".into()));
    }
    let f = waiting.density_on(&grid)?;
    let q = f.iter().map(|fk| jump * *fk).collect();
    if waiting.is_nonnegative() {
        ClassicalPair::new(grid, q)
    } else {
        ClassicalPair::new_signed(grid, q)
    }
}

/// Sampled family of `m x m` transition matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticFamily<T: Real> {
    pub grid: TimeGrid<T>,
    pub samples: Vec<DMatrix<T>>,
}

impl<T: Real> StochasticFamily<T> {
    /// `max_{k,j} |sum_i T_ij(t_k) - 1|`
    pub fn column_sum_defect(&self) -> T {
        self.samples
            .iter()
            .flat_map(|t| column_sums(t).iter().map(|s| (*s - T::one()).abs()).collect::<Vec<_>>())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn min_entry(&self) -> T {
        self.samples
            .iter()
            .flat_map(|t| t.iter().copied().collect::<Vec<_>>())
            .fold(T::max_value().unwrap(), |m, x| if x < m { x } else { m })
    }

    /// CSV with header `t,T_11,T_21,...,T_mm` (column-major, 1-based),
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let m = self.samples[0].nrows();
        let mut header = String::from("t");
        for j in 1..=m {
            for i in 1..=m {
                header.push_str(&format!(",T_{i}_{j}"));
            }
        }
        writeln!(out, "{header}")?;
        for (k, t) in self.samples.iter().enumerate() {
            let mut row = vec![fmt17(self.grid.time(k))];
            row.extend(t.iter().map(|x| fmt17(*x)));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// `T(t) = diag(g(t)) + int_0^t T(t - s) q(s) ds` by trapezoid marching.
pub fn solve_classical<T: Real>(p: &ClassicalPair<T>) -> Result<StochasticFamily<T>> {
    let samples = quadrature::volterra_march(&p.n(), &p.q, p.grid.dt()).ok_or(Error::SingularMarching)?;
    Ok(StochasticFamily { grid: p.grid, samples })
}

fn laplace_real<T: Real>(values: impl Iterator<Item = T>, grid: &TimeGrid<T>, s: T) -> T {
    let dt = grid.dt();
    let last = grid.n_steps();
    values
        .enumerate()
        .map(|(k, v)| {
            let w = if k == 0 || k == last { dt * T::lit(0.5) } else { dt };
            w * (-s * grid.time(k)).exp() * v
        })
        .fold(T::zero(), |a, b| a + b)
}

/// `W~_ij(s) = B~_ij(s) - δ_ij sum_k B~_kj(s)` with `B~_ij = q~_ij / g~_j`.
/// Columns of `W~` sum to zero.
pub fn classical_kernel_laplace<T: Real>(p: &ClassicalPair<T>, s: T) -> Result<DMatrix<T>> {
    if !(s > T::zero()) {
        return Err(Error::InvalidParameter(format!("Laplace variable must be positive, got {s}")));
    }
    let m = p.dim();
    let mut b = DMatrix::zeros(m, m);
    for j in 0..m {
        let g = laplace_real(p.g.iter().map(|g| g[j]), &p.grid, s);
        if g.abs() <= T::default_tol() {
            return Err(Error::VanishingSurvival { state: j, s: s.as_f64() });
        }
        for i in 0..m {
            b[(i, j)] = laplace_real(p.q.iter().map(|q| q[(i, j)]), &p.grid, s) / g;
        }
    }
    let out = column_sums(&b);
    Ok(b - DMatrix::from_diagonal(&out))
}

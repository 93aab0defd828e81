//! Dynamical maps from pairs, by three routes:
//!
//! * the truncated convolution series `N + N*Q + N*Q*Q + ...`;
//! * second-kind Volterra marching of `Λ(t) = N(t) + int_0^t Λ(t-s) Q(s) ds`
//!   (the Laplace identity `Λ~ = N~ + Λ~ Q~` fixes the composition order);
//! * the inhomogeneous equation
//!   `ρ' = W ρ(t) + int_0^t K(s) ρ(t-s) ds + S(t) ρ_0`, where `W` is the weight
//!   of a `δ(t)` term in the kernel and `S = dN/dt`.
//!
//! Plus Laplace-domain kernel diagnostics and state evolution.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::constructors::{GkslSpec, WaitingTime};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::pairs::LegitimatePair;
use crate::quadrature;
use crate::scalar::{cabs, cr, CMat, Real};
use crate::superop::{vectorize, devectorize, DensityMatrix, Superoperator};

/// Memory kernel split into a sampled regular part and the weight of a
/// `δ(t)` term, which acts as `W[ρ(t)]` without quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T: Real> {
    pub regular: MapFamily<T>,
    pub delta_weight: Superoperator<T>,
}

impl<T: Real> Kernel<T> {
    pub fn new(regular: MapFamily<T>, delta_weight: Superoperator<T>) -> Result<Self> {
        if regular.dim() != delta_weight.dim() {
            return Err(Error::DimensionMismatch {
                expected: regular.dim(),
                found: delta_weight.dim(),
            });
        }
        Ok(Self { regular, delta_weight })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.regular.grid()
    }

    pub fn dim(&self) -> usize {
        self.regular.dim()
    }
}

/// Output of [`solve_series`].
#[derive(Debug, Clone)]
pub struct SeriesSolution<T: Real> {
    /// `S_M`
    pub lambda: MapFamily<T>,
    /// `S_0 = N, S_1, ..., S_M`
    pub partials: Vec<MapFamily<T>>,
    /// Largest Frobenius norm of the last term added, over all nodes.
    pub tail_norm: T,
}

/// Partial sums `S_m = S_{m-1} + N * Q^{*m}` up to `m = order`.
pub fn solve_series<T: Real>(p: &LegitimatePair<T>, order: usize) -> Result<SeriesSolution<T>> {
    let mut term = p.n().clone();
    let mut sum = term.clone();
    let mut partials = Vec::with_capacity(order + 1);
    partials.push(sum.clone());
    let mut tail_norm = term.max_norm();
    for _ in 0..order {
        term = term.convolve(p.q())?;
        sum = sum.add(&term)?;
        tail_norm = term.max_norm();
        partials.push(sum.clone());
    }
    Ok(SeriesSolution {
        lambda: sum,
        partials,
        tail_norm,
    })
}

/// Trapezoid marching of `Λ(t) = N(t) + int_0^t Λ(t - s) ∘ Q(s) ds`.
pub fn solve_volterra<T: Real>(p: &LegitimatePair<T>) -> Result<MapFamily<T>> {
    let n: Vec<CMat<T>> = p.n().samples().iter().map(|s| s.matrix().clone()).collect();
    let q: Vec<CMat<T>> = p.q().samples().iter().map(|s| s.matrix().clone()).collect();
    let lambda = quadrature::volterra_march(&n, &q, p.grid().dt()).ok_or(Error::SingularMarching)?;
    let d = p.dim();
    MapFamily::new(
        *p.grid(),
        lambda
            .into_iter()
            .map(|m| Superoperator::new(d, m).expect("shape preserved"))
            .collect(),
    )
}

/// Heun (predictor-corrector) marching of
/// `X' = W X + int_0^t K(s) X(t - s) ds + S(t) X_0` for `X` with any number of
/// columns; the memory integral uses the trapezoid rule over the stored
/// history.
fn march_inhomogeneous<T: Real>(kernel: &Kernel<T>, source: &MapFamily<T>, x0: &CMat<T>) -> Vec<CMat<T>> {
    let grid = kernel.grid();
    let len = grid.len();
    let dt = grid.dt();
    let (rows, cols) = (x0.nrows(), x0.ncols());
    let w = kernel.delta_weight.matrix();
    let k: Vec<&CMat<T>> = kernel.regular.samples().iter().map(|s| s.matrix()).collect();
    let s: Vec<CMat<T>> = source.samples().iter().map(|m| m.matrix() * x0).collect();
    let full = cr(dt);
    let half = cr(dt * T::lit(0.5));
    let one = cr(T::one());

    // Memory sum at node `m` excluding the j = 0 term.
    let history = |xs: &[CMat<T>], m: usize| -> CMat<T> {
        quadrature::chunked_sum(1, m, rows, cols, |acc, j| {
            let wj = if j == m { half } else { full };
            acc.gemm(wj, k[j], &xs[m - j], one);
        })
    };
    let rate = |x: &CMat<T>, hist: &CMat<T>, m: usize| -> CMat<T> {
        let mut r = hist + &s[m];
        r.gemm(one, w, x, one);
        if m > 0 {
            r.gemm(half, k[0], x, one);
        }
        r
    };

    let mut xs: Vec<CMat<T>> = Vec::with_capacity(len);
    xs.push(x0.clone());
    let mut r_prev = rate(x0, &CMat::zeros(rows, cols), 0);
    for m in 1..len {
        let predictor = &xs[m - 1] + &r_prev * full;
        let hist = history(&xs, m);
        let r_pred = rate(&predictor, &hist, m);
        let corrected = &xs[m - 1] + (&r_prev + &r_pred) * half;
        r_prev = rate(&corrected, &hist, m);
        xs.push(corrected);
    }
    xs
}

fn check_kernel_source<T: Real>(kernel: &Kernel<T>, source: &MapFamily<T>) -> Result<()> {
    if kernel.grid() != source.grid() {
        return Err(Error::GridMismatch);
    }
    if kernel.dim() != source.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            found: source.dim(),
        });
    }
    Ok(())
}

/// Dynamical map of the inhomogeneous equation, marched on the full
/// superoperator (`X_0 = id`).
pub fn solve_inhomogeneous_map<T: Real>(kernel: &Kernel<T>, source: &MapFamily<T>) -> Result<MapFamily<T>> {
    check_kernel_source(kernel, source)?;
    let d = kernel.dim();
    let xs = march_inhomogeneous(kernel, source, &CMat::identity(d * d, d * d));
    MapFamily::new(
        *kernel.grid(),
        xs.into_iter().map(|m| Superoperator::new(d, m).expect("shape preserved")).collect(),
    )
}

/// State trajectory of `ρ' = W ρ(t) + int_0^t K(s) ρ(t - s) ds + S(t) ρ_0`.
///
/// The map is marched alongside so that the trajectory carries Choi
/// diagnostics; the states are the ones marched directly from `ρ_0`.
pub fn solve_inhomogeneous<T: Real>(
    kernel: &Kernel<T>,
    source: &MapFamily<T>,
    rho0: &DensityMatrix<T>,
) -> Result<Trajectory<T>> {
    check_kernel_source(kernel, source)?;
    let d = kernel.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho0.dim(),
        });
    }
    let v0 = vectorize(rho0.matrix());
    let x0 = CMat::from_column_slice(d * d, 1, v0.as_slice());
    let states: Vec<CMat<T>> = march_inhomogeneous(kernel, source, &x0)
        .into_iter()
        .map(|x| devectorize(&x.column(0).into_owned(), d))
        .collect();
    let lambda = solve_inhomogeneous_map(kernel, source)?;
    Ok(Trajectory::from_parts(*kernel.grid(), states, &lambda))
}

/// Relative commutator tolerance used by [`new_kernel_commuting`].
pub const COMMUTATOR_TOL: f64 = 1e-8;

/// Laplace points used to test commutativity.
pub const COMMUTATOR_POINTS: [f64; 3] = [0.5, 1.0, 2.0];

/// Fails with [`Error::NotCommuting`] unless the relative commutator
/// `||[N~, Q~]|| / (||N~|| ||Q~||)` is at most `tol` at every point of
/// `s_list`. Kernel forms of the dynamics that act from the left agree with
/// `Λ~ = N~ (id - Q~)^{-1}` only under this condition.
pub fn check_commuting<T: Real>(p: &LegitimatePair<T>, s_list: &[T], tol: T) -> Result<()> {
    for &s in s_list {
        let n = p.n().laplace(s)?.map;
        let q = p.q().laplace(s)?.map;
        let scale = n.norm() * q.norm();
        let rel = if scale > T::zero() {
            n.commutator(&q).norm() / scale
        } else {
            T::zero()
        };
        if rel > tol {
            return Err(Error::NotCommuting {
                s: s.as_f64(),
                norm: rel.as_f64(),
            });
        }
    }
    Ok(())
}

/// [`check_commuting`] at [`COMMUTATOR_POINTS`] with [`COMMUTATOR_TOL`].
pub fn check_commuting_default<T: Real>(p: &LegitimatePair<T>) -> Result<()> {
    let s: Vec<T> = COMMUTATOR_POINTS.iter().map(|x| T::lit(*x)).collect();
    check_commuting(p, &s, T::lit(COMMUTATOR_TOL))
}

/// `K(t) = Q'(t) + δ(t) Q(0)`, valid when `N~(s)` and `Q~(s)` commute
/// (checked by [`check_commuting`]).
pub fn new_kernel_commuting<T: Real>(p: &LegitimatePair<T>, s_list: &[T], tol: T) -> Result<Kernel<T>> {
    check_commuting(p, s_list, tol)?;
    Kernel::new(p.q().differentiate()?, p.q().get(0).clone())
}

/// [`new_kernel_commuting`] at [`COMMUTATOR_POINTS`] with [`COMMUTATOR_TOL`].
pub fn new_kernel_commuting_default<T: Real>(p: &LegitimatePair<T>) -> Result<Kernel<T>> {
    let s: Vec<T> = COMMUTATOR_POINTS.iter().map(|x| T::lit(*x)).collect();
    new_kernel_commuting(p, &s, T::lit(COMMUTATOR_TOL))
}

/// Kernel and source of the semigroup written as an inhomogeneous equation:
/// `ρ' = B ρ(t) - Z int_0^t e^{-Zs} B ρ(t-s) ds - Z e^{-Zt} ρ_0`.
pub fn semigroup_kernel<T: Real>(spec: &GkslSpec<T>, grid: TimeGrid<T>) -> Result<(Kernel<T>, MapFamily<T>)> {
    let p = crate::constructors::semigroup_pair(spec, grid, None)?;
    let b = spec.jump_map();
    let n_dot = p.n_derivative().expect("semigroup pairs carry dN/dt").clone();
    let regular = n_dot.then_after(&b);
    Ok((Kernel::new(regular, b)?, n_dot))
}

/// Kernel `K = (d/dt[f F] + δ(t) f(0)) E` and source `d/dt[g F]` of the
/// generalized collision equation. Uses `F'` when supplied, finite
/// differences otherwise.
pub fn generalized_collision_kernel<T: Real>(
    family: &MapFamily<T>,
    family_dot: Option<&MapFamily<T>>,
    channel: &Superoperator<T>,
    waiting: &WaitingTime<T>,
) -> Result<(Kernel<T>, MapFamily<T>)> {
    let grid = *family.grid();
    let f = waiting.density_on(&grid)?;
    let g = waiting.survival_on(&grid)?;
    let ff = family.scale_pointwise(&f)?;
    let gf = family.scale_pointwise(&g)?;
    let (ff_dot, gf_dot) = match family_dot {
        Some(fd) => {
            let f_dot = waiting.density_derivative_on(&grid)?;
            let minus_f: Vec<T> = f.iter().map(|x| -*x).collect();
            (
                family.scale_pointwise(&f_dot)?.add(&fd.scale_pointwise(&f)?)?,
                family.scale_pointwise(&minus_f)?.add(&fd.scale_pointwise(&g)?)?,
            )
        }
        None => (ff.differentiate()?, gf.differentiate()?),
    };
    let regular = ff_dot.then_after(channel);
    let delta = ff.get(0).compose(channel);
    Ok((Kernel::new(regular, delta)?, gf_dot))
}

/// Laplace-domain kernels at one point `s`.
#[derive(Debug, Clone)]
pub struct NzKernelLaplace<T: Real> {
    pub s: T,
    /// `K~_NZ(s) = s id - (id - Q~(s)) N~(s)^{-1}`
    pub k_nz: Superoperator<T>,
    /// `K~(s) = s N~(s) Q~(s) N~(s)^{-1}`, the kernel of the inhomogeneous
    /// form.
    pub k_inhomogeneous: Superoperator<T>,
    /// `||K~_NZ(s)*[I]||_F`; zero for a trace-annihilating kernel.
    pub trace_residual: T,
    /// 1-norm condition number of `N~(s)`.
    pub condition: T,
}

pub const MAX_CONDITION: f64 = 1e12;

pub fn nz_kernel_laplace<T: Real>(p: &LegitimatePair<T>, s: T) -> Result<NzKernelLaplace<T>> {
    let d = p.dim();
    let n = p.n().laplace(s)?.map;
    let q = p.q().laplace(s)?.map;
    let (inv, condition) = linalg::inverse_with_condition(n.matrix()).ok_or(Error::SingularLaplace {
        condition: f64::INFINITY,
    })?;
    if !(condition.as_f64() <= MAX_CONDITION) {
        return Err(Error::SingularLaplace {
            condition: condition.as_f64(),
        });
    }
    let id = CMat::<T>::identity(d * d, d * d);
    let k_nz = &id * cr(s) - (&id - q.matrix()) * &inv;
    let k_inh = n.matrix() * q.matrix() * &inv * cr(s);
    let k_nz = Superoperator::new(d, k_nz)?;
    let trace_residual = k_nz.dual_identity().norm();
    Ok(NzKernelLaplace {
        s,
        k_nz,
        k_inhomogeneous: Superoperator::new(d, k_inh)?,
        trace_residual,
        condition,
    })
}

/// `e^{L t_k}` at every node by dense exponentiation of the `d^2 x d^2`
/// generator. Meaningful as a dynamical map when `L` kills the trace.
pub fn semigroup_reference<T: Real>(generator: &Superoperator<T>, grid: TimeGrid<T>) -> MapFamily<T> {
    crate::constructors::dynamical_semigroup(generator, grid).0
}

/// Per-node diagnostics of an evolved state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDiagnostics<T> {
    /// `|Tr ρ(t) - 1|`
    pub trace_defect: T,
    /// Smallest Choi eigenvalue of `Λ(t)`.
    pub min_choi_eig: T,
    /// `Tr ρ(t)^2`
    pub purity: T,
    pub hermiticity_defect: T,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub grid: TimeGrid<T>,
    pub states: Vec<CMat<T>>,
    pub diagnostics: Vec<StateDiagnostics<T>>,
}

impl<T: Real> Trajectory<T> {
    fn from_parts(grid: TimeGrid<T>, states: Vec<CMat<T>>, lambda: &MapFamily<T>) -> Self {
        let choi = lambda.min_choi_eigs();
        let diagnostics = states
            .par_iter()
            .zip(choi.par_iter())
            .map(|(rho, &min_choi_eig)| StateDiagnostics {
                trace_defect: cabs(rho.trace() - cr(T::one())),
                min_choi_eig,
                purity: (rho * rho).trace().re,
                hermiticity_defect: linalg::hermiticity_defect(rho),
            })
            .collect();
        Self {
            grid,
            states,
            diagnostics,
        }
    }

    pub fn dim(&self) -> usize {
        self.states[0].nrows()
    }

    /// `<i|ρ(t_k)|i>` for every node.
    pub fn population(&self, i: usize) -> Vec<T> {
        self.states.iter().map(|r| r[(i, i)].re).collect()
    }

    /// Largest Frobenius distance between corresponding states.
    pub fn max_distance(&self, other: &Self) -> T {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// CSV with header `t,trace_defect,min_choi_eig,purity,rho_re_i_j...,
    /// rho_im_i_j...`, `(i, j)` row-major and 1-based, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let d = self.dim();
        let mut header = String::from("t,trace_defect,min_choi_eig,purity");
        for part in ["re", "im"] {
            for i in 1..=d {
                for j in 1..=d {
                    header.push_str(&format!(",rho_{part}_{i}_{j}"));
                }
            }
        }
        writeln!(out, "{header}")?;
        for (k, (rho, diag)) in self.states.iter().zip(&self.diagnostics).enumerate() {
            let mut row = vec![
                fmt17(self.grid.time(k)),
                fmt17(diag.trace_defect),
                fmt17(diag.min_choi_eig),
                fmt17(diag.purity),
            ];
            for i in 0..d {
                for j in 0..d {
                    row.push(fmt17(rho[(i, j)].re));
                }
            }
            for i in 0..d {
                for j in 0..d {
                    row.push(fmt17(rho[(i, j)].im));
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// `ρ(t_k) = Λ(t_k)[ρ_0]` with diagnostics.
pub fn evolve_state<T: Real>(lambda: &MapFamily<T>, rho0: &DensityMatrix<T>) -> Result<Trajectory<T>> {
    if lambda.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch {
            expected: lambda.dim(),
            found: rho0.dim(),
        });
    }
    let states: Vec<CMat<T>> = lambda
        .samples()
        .par_iter()
        .map(|s| s.apply_unchecked(rho0.matrix()))
        .collect();
    Ok(Trajectory::from_parts(*lambda.grid(), states, lambda))
}

/// Route from a pair to `Λ(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Convolution series truncated after `M` powers of `Q`.
    Series(usize),
    Volterra,
    /// Kernel form; needs an explicit kernel or commuting transforms.
    Inhomogeneous,
}

impl std::str::FromStr for Method {
    type Err = Error;

    /// Parses `volterra`, `inhomogeneous` or `series:M`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "volterra" => Ok(Method::Volterra),
            "inhomogeneous" => Ok(Method::Inhomogeneous),
            _ => s
                .strip_prefix("series:")
                .and_then(|m| m.parse().ok())
                .map(Method::Series)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Series(m) => write!(f, "series:{m}"),
            Method::Volterra => f.write_str("volterra"),
            Method::Inhomogeneous => f.write_str("inhomogeneous"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveSpec<T: Real> {
    pub pair: LegitimatePair<T>,
    pub method: Method,
    /// Kernel and source for [`Method::Inhomogeneous`]. When absent the
    /// kernel comes from [`new_kernel_commuting_default`] and the source is
    /// `dN/dt`.
    pub kernel: Option<(Kernel<T>, MapFamily<T>)>,
}

impl<T: Real> SolveSpec<T> {
    pub fn new(pair: LegitimatePair<T>, method: Method) -> Self {
        Self {
            pair,
            method,
            kernel: None,
        }
    }

    pub fn with_kernel(mut self, kernel: Kernel<T>, source: MapFamily<T>) -> Self {
        self.kernel = Some((kernel, source));
        self
    }
}

/// Dynamical map for `spec`.
pub fn solve<T: Real>(spec: &SolveSpec<T>) -> Result<MapFamily<T>> {
    match spec.method {
        Method::Series(m) => Ok(solve_series(&spec.pair, m)?.lambda),
        Method::Volterra => solve_volterra(&spec.pair),
        Method::Inhomogeneous => match &spec.kernel {
            Some((k, source)) => solve_inhomogeneous_map(k, source),
            None => {
                let k = new_kernel_commuting_default(&spec.pair)?;
                solve_inhomogeneous_map(&k, &spec.pair.n_derivative_or_estimate())
            }
        },
    }
}

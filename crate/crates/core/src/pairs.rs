//! Legitimate pairs `{N(t), Q(t)}` and their closure operations.
//!
//! A pair is *certified* when `N` and `Q` are CP at every node, `N(0) = id`,
//! the trace condition `Q*(t)[I] + d/dt N*(t)[I] = 0` holds and
//! `-d/dt N*(t)[I] >= 0`. Uncertified pairs are still valid inputs to the
//! solvers; [`check_legitimate`] only reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mapfamily::{MapFamily, TimeGrid};
use crate::quadrature;
use crate::scalar::{CMat, Real};
use crate::superop::{default_psd_tol, reduce_superop, DensityMatrix, Superoperator};

#[derive(Debug, Clone, PartialEq)]
pub struct LegitimatePair<T: Real> {
    n: MapFamily<T>,
    q: MapFamily<T>,
    /// Exact `dN/dt` when the constructor knows it.
    n_dot: Option<MapFamily<T>>,
    label: String,
}

impl<T: Real> LegitimatePair<T> {
    /// Pair two families on the same grid. No positivity or trace checks are
    /// made here; see [`check_legitimate`].
    pub fn new(n: MapFamily<T>, q: MapFamily<T>, label: impl Into<String>) -> Result<Self> {
        if n.grid() != q.grid() {
            return Err(Error::GridMismatch);
        }
        if n.dim() != q.dim() {
            return Err(Error::DimensionMismatch {
                expected: n.dim(),
                found: q.dim(),
            });
        }
        Ok(Self {
            n,
            q,
            n_dot: None,
            label: label.into(),
        })
    }

    /// Attach the exact derivative of `N`.
    pub fn with_derivative(mut self, n_dot: MapFamily<T>) -> Result<Self> {
        if n_dot.grid() != self.n.grid() {
            return Err(Error::GridMismatch);
        }
        if n_dot.dim() != self.n.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.n.dim(),
                found: n_dot.dim(),
            });
        }
        self.n_dot = Some(n_dot);
        Ok(self)
    }

    pub fn without_derivative(mut self) -> Self {
        self.n_dot = None;
        self
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n(&self) -> &MapFamily<T> {
        &self.n
    }

    pub fn q(&self) -> &MapFamily<T> {
        &self.q
    }

    pub fn n_derivative(&self) -> Option<&MapFamily<T>> {
        self.n_dot.as_ref()
    }

    /// Exact derivative if attached, finite differences otherwise.
    pub fn n_derivative_or_estimate(&self) -> MapFamily<T> {
        match &self.n_dot {
            Some(d) => d.clone(),
            None => self.n.differentiate().expect("grids always have >= 2 steps"),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        self.n.grid()
    }

    pub fn dim(&self) -> usize {
        self.n.dim()
    }
}

/// `max(10 * dt^2, 1e-8)`: the trace-condition residual achievable with
/// second-order differences.
pub fn default_tr_tol<T: Real>(grid: &TimeGrid<T>) -> T {
    let dt = grid.dt();
    let fd = T::lit(10.0) * dt * dt;
    let floor = T::lit(1e-8);
    if fd > floor {
        fd
    } else {
        floor
    }
}

/// Result of [`check_legitimate`]. Serializes with the field names below.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LegitimacyReport<T> {
    #[serde(rename = "cp_N")]
    pub cp_n: bool,
    #[serde(rename = "cp_Q")]
    pub cp_q: bool,
    pub initial_identity: bool,
    pub tr_residual_max: T,
    pub monotone: bool,
    pub verdict: bool,
    #[serde(rename = "min_choi_eig_N")]
    pub min_choi_eig_n: T,
    #[serde(rename = "min_choi_eig_Q")]
    pub min_choi_eig_q: T,
    #[serde(rename = "tol_TR")]
    pub tol_tr: T,
    /// `"exact"` or `"finite_difference"`: how `dN/dt` was obtained.
    pub derivative: &'static str,
}

fn min_of<T: Real>(xs: &[T]) -> T {
    xs.iter().copied().fold(T::max_value().unwrap_or_else(T::one), |m, x| if x < m { x } else { m })
}

/// Evaluate every certification condition of a candidate pair.
///
/// The trace condition is checked on duals, `Q*(t)[I] = -d/dt N*(t)[I]`,
/// which is the operator form of "for all states".
pub fn check_legitimate<T: Real>(p: &LegitimatePair<T>, tol: T, tol_tr: T) -> LegitimacyReport<T> {
    let d = p.dim();
    let min_n = p.n.min_choi_eigs();
    let min_q = p.q.min_choi_eigs();
    let herm_ok = |f: &MapFamily<T>| {
        f.samples()
            .iter()
            .all(|s| s.choi().hermiticity_defect() <= tol)
    };
    let min_choi_eig_n = min_of(&min_n);
    let min_choi_eig_q = min_of(&min_q);
    let cp_n = min_choi_eig_n >= -tol && herm_ok(&p.n);
    let cp_q = min_choi_eig_q >= -tol && herm_ok(&p.q);

    let initial_identity =
        p.n.get(0).distance(&Superoperator::identity(d)) <= T::default_tol() * T::from_count(d);

    // d/dt N*(t)[I], from the exact derivative when available.
    let (n_dot_dual, derivative): (Vec<CMat<T>>, &'static str) = match &p.n_dot {
        Some(nd) => (nd.dual_identities(), "exact"),
        None => (
            quadrature::differentiate(&p.n.dual_identities(), p.grid().dt()),
            "finite_difference",
        ),
    };
    let q_dual = p.q.dual_identities();
    let tr_residual_max = q_dual
        .iter()
        .zip(&n_dot_dual)
        .map(|(q, nd)| (q + nd).norm())
        .fold(T::zero(), |m, x| if x > m { x } else { m });

    let mono_tol = if tol_tr > tol { tol_tr } else { tol };
    let monotone = n_dot_dual
        .iter()
        .all(|nd| linalg::min_hermitian_eigenvalue(&(-nd)) >= -mono_tol);

    let verdict = cp_n && cp_q && initial_identity && tr_residual_max <= tol_tr && monotone;
    LegitimacyReport {
        cp_n,
        cp_q,
        initial_identity,
        tr_residual_max,
        monotone,
        verdict,
        min_choi_eig_n,
        min_choi_eig_q,
        tol_tr,
        derivative,
    }
}

/// [`check_legitimate`] with the default tolerances: PSD `1e-9 d^2`, trace
/// condition [`default_tr_tol`].
pub fn check_legitimate_default<T: Real>(p: &LegitimatePair<T>) -> LegitimacyReport<T> {
    check_legitimate(p, default_psd_tol(p.dim()), default_tr_tol(p.grid()))
}

/// `||Q~(s)||_1` at one Laplace point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEntry<T> {
    pub s: T,
    /// `None` when `Q~(s)` is not CP, in which case the CP-norm formula does
    /// not apply.
    pub norm: Option<T>,
    pub cp: bool,
    pub converges: bool,
    pub truncation_bound: T,
}

/// `||Q~(s)||_1 = max eig of Q~(s)*[I]` for each `s` (CP case only).
pub fn check_convergence<T: Real>(p: &LegitimatePair<T>, s_list: &[T], tol: T) -> Result<Vec<ConvergenceEntry<T>>> {
    if s_list.is_empty() {
        return Err(Error::InvalidParameter("empty list of Laplace points".into()));
    }
    s_list
        .iter()
        .map(|&s| {
            let lap = p.q.laplace(s)?;
            let cp = lap.map.is_cp(tol);
            let norm = cp.then(|| lap.map.cp_norm());
            Ok(ConvergenceEntry {
                s,
                norm,
                cp,
                converges: norm.is_some_and(|v| v < T::one()),
                truncation_bound: lap.truncation_bound,
            })
        })
        .collect()
}

/// Convex combination `N = sum p_k N_k`, `Q = sum p_k Q_k`.
pub fn convex_combine<T: Real>(pairs: &[LegitimatePair<T>], weights: &[T]) -> Result<LegitimatePair<T>> {
    if pairs.is_empty() || pairs.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} pairs but {} weights",
            pairs.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| **w < T::zero()) {
        return Err(Error::InvalidWeights(format!("negative weight {w}")));
    }
    let total = weights.iter().fold(T::zero(), |a, w| a + *w);
    if (total - T::one()).abs() > T::default_tol() {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    let first = &pairs[0];
    for p in &pairs[1..] {
        if p.grid() != first.grid() {
            return Err(Error::GridMismatch);
        }
        if p.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: p.dim(),
            });
        }
    }
    let mix = |pick: &dyn Fn(&LegitimatePair<T>) -> &MapFamily<T>| -> Result<MapFamily<T>> {
        let mut acc = pick(first).scale(weights[0]);
        for (p, w) in pairs.iter().zip(weights).skip(1) {
            acc = acc.add(&pick(p).scale(*w))?;
        }
        Ok(acc)
    };
    let n = mix(&|p| &p.n)?;
    let q = mix(&|p| &p.q)?;
    let label = format!(
        "convex({})",
        pairs.iter().map(|p| p.label.as_str()).collect::<Vec<_>>().join(", ")
    );
    let out = LegitimatePair::new(n, q, label)?;
    if pairs.iter().all(|p| p.n_dot.is_some()) {
        let nd = mix(&|p| p.n_dot.as_ref().expect("checked above"))?;
        out.with_derivative(nd)
    } else {
        Ok(out)
    }
}

/// Reduced pair `N(t)[rho] = Tr_E(N_c(t)[rho ⊗ omega])`, same for `Q`.
pub fn reduce_pair<T: Real>(p: &LegitimatePair<T>, omega: &DensityMatrix<T>) -> Result<LegitimatePair<T>> {
    let reduce = |f: &MapFamily<T>| -> Result<MapFamily<T>> {
        let samples: Result<Vec<_>> = f.samples().iter().map(|s| reduce_superop(s, omega)).collect();
        MapFamily::new(*f.grid(), samples?)
    };
    let out = LegitimatePair::new(reduce(&p.n)?, reduce(&p.q)?, format!("reduced({})", p.label))?;
    match &p.n_dot {
        Some(nd) => out.with_derivative(reduce(nd)?),
        None => Ok(out),
    }
}

/// Gauge transformation `N' = F ∘ N`, `Q' = F ∘ Q` by a dynamical map `F`.
///
/// `f_dot` is the exact derivative of `F`; with it (and an exact `dN/dt`) the
/// result carries `dN'/dt = F' ∘ N + F ∘ N'`.
pub fn gauge_transform<T: Real>(
    p: &LegitimatePair<T>,
    f: &MapFamily<T>,
    f_dot: Option<&MapFamily<T>>,
    tol: T,
) -> Result<LegitimatePair<T>> {
    if f.grid() != p.grid() {
        return Err(Error::GridMismatch);
    }
    if let Some(node) = f.first_non_cptp(tol) {
        return Err(Error::NotCptp {
            what: "gauge family".into(),
            node,
        });
    }
    if f.get(0).distance(&Superoperator::identity(f.dim())) > T::default_tol() * T::from_count(f.dim()) {
        return Err(Error::InvalidParameter("gauge family must start at the identity".into()));
    }
    let n = f.compose_pointwise(&p.n)?;
    let q = f.compose_pointwise(&p.q)?;
    let out = LegitimatePair::new(n, q, format!("gauge({})", p.label))?;
    match (f_dot, &p.n_dot) {
        (Some(fd), Some(nd)) => {
            let d = fd.compose_pointwise(&p.n)?.add(&f.compose_pointwise(nd)?)?;
            out.with_derivative(d)
        }
        _ => Ok(out),
    }
}

/// CP shift `N' = N + int_0^t G`, `Q' = Q - G`.
///
/// Fails when the running integral of `G` or the shifted `Q'` is not CP at
/// some node.
pub fn cp_shift<T: Real>(p: &LegitimatePair<T>, g: &MapFamily<T>, tol: T) -> Result<LegitimatePair<T>> {
    if g.grid() != p.grid() {
        return Err(Error::GridMismatch);
    }
    let integral = g.antiderivative();
    if let Some((node, min_eig)) = integral.first_non_cp(tol) {
        return Err(Error::NotCp {
            what: "running integral of the shift".into(),
            node,
            min_eig: min_eig.as_f64(),
        });
    }
    let q = p.q.sub(g)?;
    if let Some((node, min_eig)) = q.first_non_cp(tol) {
        return Err(Error::NotCp {
            what: "shifted Q".into(),
            node,
            min_eig: min_eig.as_f64(),
        });
    }
    let n = p.n.add(&integral)?;
    let out = LegitimatePair::new(n, q, format!("shift({})", p.label))?;
    match &p.n_dot {
        Some(nd) => out.with_derivative(nd.add(g)?),
        None => Ok(out),
    }
}

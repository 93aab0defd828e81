//! Composite-trapezoid kernels on uniform grids.
//!
//! These work on slices of samples `f_k = f(k * dt)` and are shared between
//! superoperator families and classical matrix families.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::scalar::{cr, Real};

/// A value that can be linearly combined with real coefficients.
pub trait LinearSample<T: Real>: Clone {
    fn zeros_like(&self) -> Self;
    /// `self += a * x`
    fn add_scaled(&mut self, a: T, x: &Self);
}

impl<T: Real> LinearSample<T> for T {
    fn zeros_like(&self) -> Self {
        T::zero()
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        *self += a * *x;
    }
}

impl<T: Real> LinearSample<T> for DMatrix<T> {
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
}

impl<T: Real> LinearSample<T> for DVector<T> {
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
}

impl<T: Real> LinearSample<T> for DMatrix<Complex<T>> {
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: T, x: &Self) {
        let a = cr(a);
        self.zip_apply(x, |s, v| *s += v * a);
    }
}

fn combo<T: Real, V: LinearSample<T>>(terms: &[(T, &V)]) -> V {
    let mut out = terms[0].1.zeros_like();
    for (a, x) in terms {
        out.add_scaled(*a, x);
    }
    out
}

/// Second-order finite differences: central in the interior, one-sided
/// three-point at both ends. Needs at least three samples.
pub fn differentiate<T: Real, V: LinearSample<T>>(f: &[V], dt: T) -> Vec<V> {
    let n = f.len();
    assert!(n >= 3, "differentiate needs at least three samples");
    let h = T::one() / (T::lit(2.0) * dt);
    let mut out = Vec::with_capacity(n);
    out.push(combo(&[(-T::lit(3.0) * h, &f[0]), (T::lit(4.0) * h, &f[1]), (-h, &f[2])]));
    for k in 1..n - 1 {
        out.push(combo(&[(h, &f[k + 1]), (-h, &f[k - 1])]));
    }
    out.push(combo(&[
        (T::lit(3.0) * h, &f[n - 1]),
        (-T::lit(4.0) * h, &f[n - 2]),
        (h, &f[n - 3]),
    ]));
    out
}

/// Running integral `F_k = int_0^{t_k} f` by the trapezoid rule, `F_0 = 0`.
pub fn cumulative_trapezoid<T: Real, V: LinearSample<T>>(f: &[V], dt: T) -> Vec<V> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = f[0].zeros_like();
    out.push(acc.clone());
    let half = dt * T::lit(0.5);
    for w in f.windows(2) {
        acc.add_scaled(half, &w[0]);
        acc.add_scaled(half, &w[1]);
        out.push(acc.clone());
    }
    out
}

/// Leading Euler-Maclaurin term of the cumulative trapezoid error,
/// `(dt^2 / 12) (f'(t_k) - f'(0))`, with `f'` from [`differentiate`].
/// Used to size tolerances on running integrals.
pub fn cumulative_trapezoid_error<T: Real, V: LinearSample<T>>(f: &[V], dt: T) -> Vec<V> {
    let df = differentiate(f, dt);
    let c = dt * dt / T::lit(12.0);
    df.iter().map(|d| combo(&[(c, d), (-c, &df[0])])).collect()
}

/// Trapezoid convolution `C_k = sum_{j=0}^{k} w_j A_{k-j} B_j`, `C_0 = 0`.
///
/// Each node is an independent fixed-order sum, so the result does not depend
/// on how the work is scheduled across threads.
pub fn convolve<S>(a: &[DMatrix<S>], b: &[DMatrix<S>], dt: S::RealField) -> Vec<DMatrix<S>>
where
    S: ComplexField + Copy,
    S::RealField: Copy,
{
    assert_eq!(a.len(), b.len(), "convolution operands on different grids");
    let (rows, cols) = (a[0].nrows(), b[0].ncols());
    let full = S::from_real(dt);
    let half = S::from_real(dt * nalgebra::convert::<f64, S::RealField>(0.5));
    (0..a.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = DMatrix::<S>::zeros(rows, cols);
            if k == 0 {
                return acc;
            }
            for j in 0..=k {
                let w = if j == 0 || j == k { half } else { full };
                acc.gemm(w, &a[k - j], &b[j], S::one());
            }
            acc
        })
        .collect()
}

/// Trapezoid marching for the second-kind Volterra equation
/// `X(t) = N(t) + int_0^t X(t - s) Q(s) ds`:
///
/// `X_k (I - dt/2 Q_0) = N_k + sum_{j=1}^{k} w_j X_{k-j} Q_j`.
///
/// Returns `None` when the correction factor `I - dt/2 Q_0` is singular.
pub fn volterra_march<S>(n: &[DMatrix<S>], q: &[DMatrix<S>], dt: S::RealField) -> Option<Vec<DMatrix<S>>>
where
    S: ComplexField + Copy,
    S::RealField: Copy,
{
    assert_eq!(n.len(), q.len(), "Volterra operands on different grids");
    let m = n[0].nrows();
    let full = S::from_real(dt);
    let half = S::from_real(dt * nalgebra::convert::<f64, S::RealField>(0.5));
    let correction = DMatrix::<S>::identity(m, m) - &q[0] * half;
    let inv = correction.clone().lu().try_inverse()?;
    // Reject near-singular factors as well as exactly singular ones.
    let cond = correction.norm() * inv.norm();
    if !(cond.clone().is_finite() && cond < nalgebra::convert(1e12)) {
        return None;
    }

    let mut x: Vec<DMatrix<S>> = Vec::with_capacity(n.len());
    x.push(n[0].clone());
    for k in 1..n.len() {
        let mut rhs = chunked_sum(1, k, m, m, |acc, j| {
            let w = if j == k { half } else { full };
            acc.gemm(w, &x[k - j], &q[j], S::one());
        });
        rhs += &n[k];
        x.push(&rhs * &inv);
    }
    Some(x)
}

/// Terms per chunk in [`chunked_sum`]. Fixed so that the grouping of the
/// floating-point sum depends only on the range, never on the thread count.
const CHUNK: usize = 64;

/// `sum_{j=lo}^{hi} term_j`, accumulated by `add(acc, j)`. Chunks of
/// [`CHUNK`] consecutive terms are summed in parallel and the partial sums
/// are then added in index order.
pub(crate) fn chunked_sum<S, F>(lo: usize, hi: usize, rows: usize, cols: usize, add: F) -> DMatrix<S>
where
    S: ComplexField + Copy,
    F: Fn(&mut DMatrix<S>, usize) + Sync,
{
    let mut total = DMatrix::<S>::zeros(rows, cols);
    if hi < lo {
        return total;
    }
    let starts: Vec<usize> = (lo..=hi).step_by(CHUNK).collect();
    let partial = |start: usize| {
        let mut acc = DMatrix::<S>::zeros(rows, cols);
        for j in start..=hi.min(start + CHUNK - 1) {
            add(&mut acc, j);
        }
        acc
    };
    if starts.len() == 1 {
        return partial(starts[0]);
    }
    let parts: Vec<DMatrix<S>> = starts.into_par_iter().map(partial).collect();
    for p in &parts {
        total += p;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiate_is_exact_on_quadratics() {
        let dt = 0.1;
        let f: Vec<f64> = (0..6).map(|k| (k as f64 * dt).powi(2) - 3.0 * k as f64 * dt).collect();
        let df = differentiate(&f, dt);
        for (k, v) in df.iter().enumerate() {
            let t = k as f64 * dt;
            assert!((v - (2.0 * t - 3.0)).abs() < 1e-12, "{k}: {v}");
        }
    }

    #[test]
    fn cumulative_trapezoid_is_exact_on_linear() {
        let dt = 0.25;
        let f: Vec<f64> = (0..9).map(|k| 2.0 * k as f64 * dt + 1.0).collect();
        let g = cumulative_trapezoid(&f, dt);
        for (k, v) in g.iter().enumerate() {
            let t = k as f64 * dt;
            assert!((v - (t * t + t)).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_volterra_reproduces_exponential() {
        // x(t) = 1 + int_0^t x(t - s) ds  =>  x = e^t
        let n_steps = 400;
        let dt = 1.0 / n_steps as f64;
        let ones: Vec<DMatrix<f64>> = (0..=n_steps).map(|_| DMatrix::from_element(1, 1, 1.0)).collect();
        let x = volterra_march(&ones, &ones, dt).unwrap();
        let err = (x[n_steps][(0, 0)] - 1f64.exp()).abs();
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn singular_correction_is_rejected() {
        // I - dt/2 * q0 = 0 for q0 = 2/dt
        let dt = 0.5;
        let q: Vec<DMatrix<f64>> = (0..4).map(|_| DMatrix::from_element(1, 1, 4.0)).collect();
        assert!(volterra_march(&q, &q, dt).is_none());
    }
}

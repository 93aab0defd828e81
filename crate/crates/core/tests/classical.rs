use memkernel::classical::{classical_kernel_laplace, classical_semimarkov_pair, solve_classical, ClassicalPair};
use memkernel::constructors::WaitingTime;
use memkernel::pairs::check_legitimate_default;
use memkernel::solver::solve_volterra;
use memkernel::superop::matrix_unit;
use memkernel::{Error, TimeGrid64};
use nalgebra::{DMatrix, DVector};

fn grid(t_max: f64, n: usize) -> TimeGrid64 {
    TimeGrid64::new(t_max, n).unwrap()
}

fn swap() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// All mass goes to the first state.
fn to_first() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0])
}

fn exp_swap(g: TimeGrid64, rate: f64) -> ClassicalPair<f64> {
    classical_semimarkov_pair(&swap(), &WaitingTime::exponential(rate).unwrap(), g).unwrap()
}

#[test]
fn empty_rates_leave_states_alone() {
    let g = grid(2.0, 20);
    let p = ClassicalPair::new(g, vec![DMatrix::zeros(3, 3); g.len()]).unwrap();
    assert!(p.g().iter().all(|x| x.iter().all(|v| *v == 1.0)));
    assert!(p.n().iter().all(|n| *n == DMatrix::identity(3, 3)));
    let t = solve_classical(&p).unwrap();
    assert!(t.samples.iter().all(|m| *m == DMatrix::identity(3, 3)));
    assert_eq!(classical_kernel_laplace(&p, 1.0).unwrap(), DMatrix::zeros(3, 3));
    assert!(check_legitimate_default(&p.to_quantum().unwrap()).verdict);
}

#[test]
fn survival_of_exponential_swap() {
    let g = grid(5.0, 1000);
    let p = exp_swap(g, 1.0);
    assert!(p.is_nonnegative());
    for (k, gk) in p.g().iter().enumerate() {
        let exact = (-g.time(k)).exp();
        assert!((gk - DVector::from_element(2, exact)).amax() <= 1e-5, "node {k}");
    }
    assert!(p.tr_semi_residual() <= 10.0 * g.dt() * g.dt());
}

#[test]
fn survival_of_oscillating_waiting() {
    let g = grid(10.0, 2000);
    let omega = 1.3;
    let p = classical_semimarkov_pair(&swap(), &WaitingTime::oscillating(omega).unwrap(), g).unwrap();
    assert!(!p.is_nonnegative());
    for (k, gk) in p.g().iter().enumerate() {
        let exact = 0.5 * (1.0 + (omega * g.time(k)).cos());
        assert!((gk[0] - exact).abs() <= 1e-5 && (gk[1] - exact).abs() <= 1e-5);
    }
    assert!(p.tr_semi_residual() <= 10.0 * g.dt() * g.dt());
}

#[test]
fn invalid_rates_are_rejected() {
    let g = grid(1.0, 10);
    let mut q = vec![DMatrix::zeros(2, 2); g.len()];
    q[3][(0, 1)] = -0.1;
    assert!(matches!(
        ClassicalPair::new(g, q.clone()),
        Err(Error::NegativeRate { i: 0, j: 1, node: 3, .. })
    ));
    // signed rates are allowed, survival above one is not
    assert!(matches!(ClassicalPair::new_signed(g, q), Err(Error::MassOutOfRange { state: 1, .. })));

    let heavy = vec![DMatrix::from_element(2, 2, 2.0); g.len()];
    assert!(matches!(ClassicalPair::new(g, heavy), Err(Error::MassOutOfRange { .. })));

    let w = WaitingTime::exponential(1.0).unwrap();
    let not_stochastic = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.0]);
    assert!(classical_semimarkov_pair(&not_stochastic, &w, g).is_err());
}

#[test]
fn exponential_swap_is_a_markov_chain() {
    let g = grid(5.0, 1000);
    let rate = 1.0;
    let t = solve_classical(&exp_swap(g, rate)).unwrap();
    let generator = (swap() - DMatrix::identity(2, 2)) * rate;
    for (k, tk) in t.samples.iter().enumerate() {
        let time = g.time(k);
        assert!((tk[(0, 0)] - 0.5 * (1.0 + (-2.0 * time).exp())).abs() <= 1e-3);
        let oracle = (&generator * time).exp();
        assert!((tk - oracle).amax() <= 1e-3, "node {k}");
    }
    assert!(t.column_sum_defect() <= 1e-4);
    assert!(t.min_entry() >= -1e-6);
    assert_eq!(t.samples[0], DMatrix::identity(2, 2));
}

#[test]
fn oscillating_waiting_mixes_towards_the_target() {
    let g = grid(4.0 * std::f64::consts::PI, 2000);
    let p = classical_semimarkov_pair(&to_first(), &WaitingTime::oscillating(1.0).unwrap(), g).unwrap();
    let t = solve_classical(&p).unwrap();
    for (k, tk) in t.samples.iter().enumerate() {
        let gk = 0.5 * (1.0 + g.time(k).cos());
        let expected = DMatrix::identity(2, 2) * gk + to_first() * (1.0 - gk);
        assert!((tk - expected).amax() <= 1e-3, "node {k}");
    }
}

#[test]
fn laplace_kernel_of_exponential_swap() {
    let g = grid(30.0, 12000);
    let rate = 1.0;
    let p = exp_swap(g, rate);
    let expected = (swap() - DMatrix::identity(2, 2)) * rate;
    for s in [0.5, 1.0, 2.0] {
        let w = classical_kernel_laplace(&p, s).unwrap();
        assert!((&w - &expected).amax() <= 1e-4, "s = {s}");
        assert!(w.row_sum().amax() <= 1e-12);
    }
    assert!(classical_kernel_laplace(&p, 0.0).is_err());
}

#[test]
fn laplace_kernel_of_oscillating_waiting() {
    let g = grid(40.0, 16000);
    let omega = 1.0;
    let p = classical_semimarkov_pair(&swap(), &WaitingTime::oscillating(omega).unwrap(), g).unwrap();
    for s in [0.5, 1.0, 2.0] {
        let kappa = 0.5 * omega * omega * s / (s * s + 0.5 * omega * omega);
        let expected = (swap() - DMatrix::identity(2, 2)) * kappa;
        let w = classical_kernel_laplace(&p, s).unwrap();
        assert!((&w - &expected).amax() <= 2e-3, "s = {s}");
    }
}

#[test]
fn diagonal_embedding_reproduces_transition_matrix() {
    let g = grid(5.0, 1000);
    let p = exp_swap(g, 1.0);
    let t = solve_classical(&p).unwrap();
    let quantum = p.to_quantum().unwrap();
    assert!(check_legitimate_default(&quantum).verdict);
    let lambda = solve_volterra(&quantum).unwrap();
    for k in 0..g.len() {
        for j in 0..2 {
            let out = lambda.get(k).apply(&matrix_unit(2, j, j)).unwrap();
            for i in 0..2 {
                assert!((out[(i, i)].re - t.samples[k][(i, j)]).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn three_state_chain_stays_stochastic() {
    let g = grid(4.0, 800);
    let jump = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.2, 0.7, 0.0, 0.8, 0.3, 0.5, 0.0]);
    let p = classical_semimarkov_pair(&jump, &WaitingTime::exponential(1.5).unwrap(), g).unwrap();
    let t = solve_classical(&p).unwrap();
    assert!(t.column_sum_defect() <= 1e-4);
    assert!(t.min_entry() >= -1e-6);
}

#[test]
fn transition_csv_is_column_major() {
    let g = grid(1.0, 2);
    let p = ClassicalPair::new(g, vec![DMatrix::zeros(2, 2); 3]).unwrap();
    let mut buf = Vec::new();
    solve_classical(&p).unwrap().write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,T_1_1,T_2_1,T_1_2,T_2_2"));
    assert_eq!(
        lines.next(),
        Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0,1.0000000000000000e0")
    );
}

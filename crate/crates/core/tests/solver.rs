mod common;

use common::*;
use memkernel::constructors::{
    collision_pair, dynamical_semigroup, generalized_collision_pair, projective_channel, semigroup_pair, semimarkov_pair, GkslSpec,
    WaitingTime, ops,
};
use memkernel::random::{random_channel, random_density_matrix};
use memkernel::solver::{
    check_commuting_default, evolve_state, generalized_collision_kernel, new_kernel_commuting_default, nz_kernel_laplace, semigroup_kernel,
    semigroup_reference, solve, solve_inhomogeneous, solve_inhomogeneous_map, solve_series, solve_volterra, Kernel,
    Method, SolveSpec,
};
use memkernel::{DensityMatrix64, Error, LegitimatePair64, MapFamily64, Superoperator64, TimeGrid64};

fn grid(t_max: f64, n: usize) -> TimeGrid64 {
    TimeGrid64::new(t_max, n).unwrap()
}

/// Dephasing semigroup `e^{Lt}` with its derivative.
fn dephasing(rate: f64, g: TimeGrid64) -> (MapFamily64, MapFamily64) {
    let spec = GkslSpec::dissipative(vec![ops::pauli_z::<f64>() * c(rate.sqrt())]).unwrap();
    dynamical_semigroup(&spec.generator(), g)
}

fn max_oracle_gap(lambda: &MapFamily64, l: &memkernel::CMat64) -> f64 {
    (0..lambda.grid().len())
        .map(|k| (lambda.get(k).matrix() - expm_oracle(l, lambda.grid().time(k))).norm())
        .fold(0.0, f64::max)
}

fn example1(omega: f64, g: TimeGrid64) -> (LegitimatePair64, Superoperator64) {
    let e = projective_channel(&DensityMatrix64::basis(2, 0));
    let p = semimarkov_pair(&e, &WaitingTime::oscillating(omega).unwrap(), g).unwrap();
    (p, e)
}

#[test]
fn series_with_zero_q_returns_n() {
    let g = grid(2.0, 50);
    let n = MapFamily64::identity(g, 2);
    let p = LegitimatePair64::new(n.clone(), MapFamily64::zero(g, 2), "static").unwrap();
    for m in [0, 3] {
        let s = solve_series(&p, m).unwrap();
        assert_eq!(s.lambda.max_distance(&n).unwrap(), 0.0);
        assert_eq!(s.partials.len(), m + 1);
    }
}

#[test]
fn series_reproduces_damping_semigroup() {
    let p = semigroup_pair(&damping(1.0), grid(5.0, 1000), None).unwrap();
    let s = solve_series(&p, 25).unwrap();
    let gap = max_oracle_gap(&s.lambda, &damping_generator_by_hand(1.0));
    assert!(gap <= 1e-3, "gap {gap:e}");
    assert!(s.tail_norm <= 1e-6, "tail {:e}", s.tail_norm);
}

#[test]
fn truncated_series_is_a_quantum_operation() {
    let p = semigroup_pair(&damping(1.0), grid(3.0, 600), None).unwrap();
    let s = solve_series(&p, 6).unwrap();
    let mut r = rng(11);
    let states: Vec<DensityMatrix64> = (0..5).map(|_| random_density_matrix(&mut r, 2)).collect();
    for (m, partial) in s.partials.iter().enumerate() {
        assert!(partial.first_non_cp(1e-9).is_none(), "S_{m} not CP");
        for rho in &states {
            for k in 0..partial.grid().len() {
                let tr = partial.get(k).apply_state(rho).unwrap().trace().re;
                assert!(tr <= 1.0 + 1e-6, "S_{m} at node {k}: trace {tr}");
                if m + 1 < s.partials.len() {
                    let next = s.partials[m + 1].get(k).apply_state(rho).unwrap().trace().re;
                    assert!(tr <= next + 1e-8);
                }
            }
        }
    }
}

#[test]
fn volterra_with_zero_q_is_n() {
    let g = grid(1.0, 20);
    let n = semigroup_pair(&GkslSpec::new(ops::pauli_z(), vec![]).unwrap(), g, None)
        .unwrap()
        .n()
        .clone();
    let p = LegitimatePair64::new(n.clone(), MapFamily64::zero(g, 2), "unitary").unwrap();
    assert_eq!(solve_volterra(&p).unwrap().max_distance(&n).unwrap(), 0.0);
}

#[test]
fn volterra_reproduces_damping_semigroup() {
    let p = semigroup_pair(&damping(1.0), grid(5.0, 1000), None).unwrap();
    let lambda = solve_volterra(&p).unwrap();
    let gap = max_oracle_gap(&lambda, &damping_generator_by_hand(1.0));
    assert!(gap <= 1e-3, "gap {gap:e}");
}

#[test]
fn volterra_reproduces_oscillating_semimarkov_closed_form() {
    let omega = 1.0;
    let g = grid(4.0 * std::f64::consts::PI, 2000);
    let (p, e) = example1(omega, g);
    let lambda = solve_volterra(&p).unwrap();
    let id = Superoperator64::identity(2);
    let gap = (0..g.len())
        .map(|k| {
            let t = g.time(k);
            let exact = &id.scale(0.5 * (1.0 + (omega * t).cos())) + &e.scale(0.5 * (1.0 - (omega * t).cos()));
            lambda.get(k).distance(&exact)
        })
        .fold(0.0, f64::max);
    assert!(gap <= 1e-3, "gap {gap:e}");
}

#[test]
fn volterra_error_is_second_order() {
    let l = damping_generator_by_hand(1.0);
    let err = |n| {
        let p = semigroup_pair(&damping(1.0), grid(2.0, n), None).unwrap();
        max_oracle_gap(&solve_volterra(&p).unwrap(), &l)
    };
    let (coarse, fine) = (err(100), err(200));
    assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
}

#[test]
fn volterra_rejects_singular_correction() {
    let g = grid(1.0, 2);
    let q = MapFamily64::constant(g, &Superoperator64::identity(2).scale(4.0));
    let p = LegitimatePair64::new(MapFamily64::identity(g, 2), q, "stiff").unwrap();
    assert_eq!(solve_volterra(&p), Err(Error::SingularMarching));
}

#[test]
fn series_and_volterra_agree_on_certified_pairs() {
    let g = grid(3.0, 300);
    let mut r = rng(5);
    let ch = Superoperator64::from_kraus(&random_channel(&mut r, 2, 2));
    let pairs = [
        semigroup_pair(&damping(0.7), g, None).unwrap(),
        semimarkov_pair(&ch, &WaitingTime::exponential(1.3).unwrap(), g).unwrap(),
        collision_pair(&MapFamily64::identity(g, 2), None, 0.8).unwrap(),
    ];
    for p in &pairs {
        let s = solve_series(p, 30).unwrap();
        let v = solve_volterra(p).unwrap();
        let gap = s.lambda.max_distance(&v).unwrap();
        assert!(gap <= (10.0 * s.tail_norm).max(1e-6), "{}: gap {gap:e}", p.label());
    }
}

#[test]
fn volterra_solutions_of_certified_pairs_are_channels() {
    let g = grid(5.0, 1000);
    let mut r = rng(9);
    let ch = Superoperator64::from_kraus(&random_channel(&mut r, 2, 3));
    for p in [
        semigroup_pair(&damping(1.0), g, None).unwrap(),
        semimarkov_pair(&ch, &WaitingTime::exponential(1.0).unwrap(), g).unwrap(),
    ] {
        let lambda = solve_volterra(&p).unwrap();
        for k in 0..g.len() {
            let rep = lambda.get(k).properties(1e-9);
            assert!(rep.min_choi_eig >= -1e-6, "{} node {k}: {:e}", p.label(), rep.min_choi_eig);
            assert!(rep.trace_defect <= 1e-4, "{} node {k}: {:e}", p.label(), rep.trace_defect);
        }
    }
}

#[test]
fn inhomogeneous_with_zero_kernel_is_static() {
    let g = grid(1.0, 10);
    let k = Kernel::new(MapFamily64::zero(g, 2), Superoperator64::zero(2)).unwrap();
    let rho = random_density_matrix(&mut rng(1), 2);
    let traj = solve_inhomogeneous(&k, &MapFamily64::zero(g, 2), &rho).unwrap();
    for s in &traj.states {
        assert_eq!(s, rho.matrix());
    }
}

#[test]
fn inhomogeneous_matches_volterra_for_commuting_semimarkov() {
    let g = grid(10.0, 2000);
    let (p, _) = example1(1.0, g);
    let k = new_kernel_commuting_default(&p).unwrap();
    let rho = DensityMatrix64::basis(2, 1);
    let traj = solve_inhomogeneous(&k, p.n_derivative().unwrap(), &rho).unwrap();
    let reference = evolve_state(&solve_volterra(&p).unwrap(), &rho).unwrap();
    let gap = traj.max_distance(&reference);
    assert!(gap <= 1e-3, "gap {gap:e}");
    assert_eq!(traj.states[0], *rho.matrix());
}

#[test]
fn markov_evolution_from_nonstandard_kernel_equation() {
    let spec = damping(1.0);
    let g = grid(5.0, 1000);
    let (k, source) = semigroup_kernel(&spec, g).unwrap();
    let rho = random_density_matrix(&mut rng(3), 2);
    let traj = solve_inhomogeneous(&k, &source, &rho).unwrap();
    let l = damping_generator_by_hand(1.0);
    let gap = (0..g.len())
        .map(|i| {
            let v = memkernel::superop::vectorize(rho.matrix());
            let exact = memkernel::superop::devectorize(&(expm_oracle(&l, g.time(i)) * v), 2);
            (&traj.states[i] - exact).norm()
        })
        .fold(0.0, f64::max);
    assert!(gap <= 1e-3, "gap {gap:e}");
}

#[test]
fn inhomogeneous_map_solves_collision_model() {
    let g = grid(5.0, 1000);
    let (family, family_dot) = dephasing(0.5, g);
    let p = collision_pair(&family, Some(&family_dot), 1.0).unwrap();
    let (k, source) = generalized_collision_kernel(
        &family,
        Some(&family_dot),
        &Superoperator64::identity(2),
        &WaitingTime::exponential(1.0).unwrap(),
    )
    .unwrap();
    let direct = solve_inhomogeneous_map(&k, &source).unwrap();
    let gap = direct.max_distance(&solve_volterra(&p).unwrap()).unwrap();
    assert!(gap <= 1e-3, "gap {gap:e}");
}

#[test]
fn generalized_collision_kernel_solution_matches_volterra() {
    let g = grid(4.0, 800);
    let (family, family_dot) = dephasing(0.3, g);
    let e = projective_channel(&DensityMatrix64::basis(2, 0));
    let w = WaitingTime::exponential(2.0).unwrap();
    let p = generalized_collision_pair(&family, Some(&family_dot), &e, &w).unwrap();
    let (k, source) = generalized_collision_kernel(&family, Some(&family_dot), &e, &w).unwrap();
    // Dephasing commutes with the replacement onto a basis state, so both
    // equations describe the same dynamics.
    let gap = solve_inhomogeneous_map(&k, &source)
        .unwrap()
        .max_distance(&solve_volterra(&p).unwrap())
        .unwrap();
    assert!(gap <= 1e-3, "gap {gap:e}");
}

#[test]
fn commuting_kernel_of_semimarkov_pair() {
    let g = grid(3.0, 600);
    let e = projective_channel(&DensityMatrix64::basis(2, 1));
    let rate = 1.5;
    let p = semimarkov_pair(&e, &WaitingTime::exponential(rate).unwrap(), g).unwrap();
    let k = new_kernel_commuting_default(&p).unwrap();
    assert!(k.delta_weight.distance(&e.scale(rate)) <= 1e-14);
    for i in 0..g.len() {
        let f_dot = -rate * rate * (-rate * g.time(i)).exp();
        let tol = if i == 0 || i == g.n_steps() { 1e-3 } else { 1e-4 };
        assert!(k.regular.get(i).distance(&e.scale(f_dot)) <= tol, "node {i}");
    }
}

#[test]
fn commuting_kernel_of_collision_pair() {
    let g = grid(3.0, 600);
    let rate = 0.9;
    let (family, family_dot) = dephasing(0.4, g);
    let p = collision_pair(&family, Some(&family_dot), rate).unwrap();
    let k = new_kernel_commuting_default(&p).unwrap();
    assert!(k.delta_weight.distance(&Superoperator64::identity(2).scale(rate)) <= 1e-14);
    let expected = p.n_derivative().unwrap().scale(rate);
    let interior = (1..g.n_steps())
        .map(|i| k.regular.get(i).distance(expected.get(i)))
        .fold(0.0, f64::max);
    assert!(interior <= 1e-4, "{interior:e}");
}

#[test]
fn commuting_kernel_rejects_noncommuting_pair() {
    let spec = GkslSpec::new(ops::pauli_z(), vec![ops::pauli_x()]).unwrap();
    let p = semigroup_pair(&spec, grid(20.0, 2000), None).unwrap();
    match new_kernel_commuting_default(&p) {
        Err(Error::NotCommuting { norm, .. }) => assert!(norm > 1e-3, "{norm:e}"),
        other => panic!("expected NotCommuting, got {other:?}"),
    }
    let z = spec.no_jump_generator();
    let b = spec.jump_map();
    assert!(b.commutator(&z).norm() > 0.1);
}

#[test]
fn laplace_kernel_of_semigroup_is_its_generator() {
    let spec = damping(1.0);
    let p = semigroup_pair(&spec, grid(30.0, 12000), None).unwrap();
    let l = superop(damping_generator_by_hand(1.0));
    for s in [0.5, 1.0, 2.0] {
        let k = nz_kernel_laplace(&p, s).unwrap();
        assert!(k.k_nz.distance(&l) <= 1e-4, "s = {s}: {:e}", k.k_nz.distance(&l));
        assert!(k.trace_residual <= 1e-4);
    }
}

#[test]
fn laplace_kernel_of_exponential_waiting_is_constant() {
    let rate = 1.0;
    let e = projective_channel(&DensityMatrix64::basis(2, 0));
    let p = semimarkov_pair(&e, &WaitingTime::exponential(rate).unwrap(), grid(30.0, 12000)).unwrap();
    let expected = (&e - &Superoperator64::identity(2)).scale(rate);
    for s in [0.5, 1.0, 3.0] {
        let k = nz_kernel_laplace(&p, s).unwrap();
        assert!(k.k_nz.distance(&expected) <= 1e-4, "s = {s}: {:e}", k.k_nz.distance(&expected));
    }
}

#[test]
fn laplace_kernel_of_oscillating_waiting() {
    let omega = 1.0;
    let g = grid(40.0, 16000);
    let (p, e) = example1(omega, g);
    let generator = &e - &Superoperator64::identity(2);
    // kappa(t) = (omega^2 / 2) cos(omega t / sqrt 2), transformed by trapezoid
    // on the same grid.
    let kappa = |t: f64| 0.5 * omega * omega * (omega * t / 2f64.sqrt()).cos();
    for s in [0.5, 1.0, 2.0] {
        let dt = g.dt();
        let numeric: f64 = (0..g.len())
            .map(|i| {
                let w = if i == 0 || i == g.n_steps() { 0.5 * dt } else { dt };
                w * (-s * g.time(i)).exp() * kappa(g.time(i))
            })
            .sum();
        let closed = 0.5 * omega * omega * s / (s * s + 0.5 * omega * omega);
        assert!((numeric - closed).abs() <= 2e-3);
        let k = nz_kernel_laplace(&p, s).unwrap();
        let gap = k.k_nz.distance(&generator.scale(numeric));
        assert!(gap <= 2e-3, "s = {s}: {gap:e}");
    }
}

#[test]
fn laplace_kernels_annihilate_the_trace() {
    let p = semigroup_pair(&damping(0.8), grid(40.0, 20000), None).unwrap();
    for i in 0..5 {
        let s = 10f64.powf(-0.5 + 0.25 * i as f64);
        let k = nz_kernel_laplace(&p, s).unwrap();
        assert!(k.trace_residual <= 1e-4, "s = {s}: {:e}", k.trace_residual);
        // K~ is similar to s Q~, so the two share their trace.
        let q = p.q().laplace(s).unwrap().map;
        let gap = (k.k_inhomogeneous.matrix().trace() - q.matrix().trace() * s).norm();
        assert!(gap <= 1e-8, "s = {s}: {gap:e}");
    }
}

#[test]
fn singular_laplace_transform_is_reported() {
    let g = grid(1.0, 10);
    let zero = MapFamily64::zero(g, 2);
    let p = LegitimatePair64::new(zero.clone(), zero, "degenerate").unwrap();
    assert!(matches!(nz_kernel_laplace(&p, 1.0), Err(Error::SingularLaplace { .. })));
}

#[test]
fn evolve_identity_family_is_constant() {
    let g = grid(1.0, 5);
    let rho = random_density_matrix(&mut rng(2), 3);
    let traj = evolve_state(&MapFamily64::identity(g, 3), &rho).unwrap();
    assert!(traj.states.iter().all(|s| s == rho.matrix()));
    for d in &traj.diagnostics {
        assert!(d.trace_defect <= 1e-14);
        assert!((d.purity - rho.purity()).abs() <= 1e-14);
    }
}

#[test]
fn evolve_oscillating_semimarkov_population() {
    let g = grid(4.0 * std::f64::consts::PI, 2000);
    let (p, _) = example1(1.0, g);
    let traj = evolve_state(&solve_volterra(&p).unwrap(), &DensityMatrix64::basis(2, 1)).unwrap();
    let pop = traj.population(0);
    for (k, x) in pop.iter().enumerate() {
        assert!((x - 0.5 * (1.0 - g.time(k).cos())).abs() <= 1e-3, "node {k}");
    }
}

#[test]
fn evolve_damping_population() {
    let g = grid(5.0, 1000);
    let p = semigroup_pair(&damping(1.0), g, None).unwrap();
    let traj = evolve_state(&solve_volterra(&p).unwrap(), &DensityMatrix64::basis(2, 1)).unwrap();
    for (k, x) in traj.population(1).iter().enumerate() {
        assert!((x - (-g.time(k)).exp()).abs() <= 1e-3);
    }
}

#[test]
fn evolve_rejects_dimension_mismatch() {
    let g = grid(1.0, 5);
    let r = evolve_state(&MapFamily64::identity(g, 2), &DensityMatrix64::basis(3, 0));
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
}

#[test]
fn semigroup_reference_cases() {
    let g = grid(1.0, 4);
    let zero = semigroup_reference(&Superoperator64::zero(2), g);
    assert_eq!(zero.max_distance(&MapFamily64::identity(g, 2)).unwrap(), 0.0);

    let rot = semigroup_reference(&GkslSpec::new(ops::pauli_z(), vec![]).unwrap().generator(), g);
    for k in 0..g.len() {
        assert!(rot.get(k).is_cptp(1e-12));
        let t = g.time(k);
        // the |0><1| coherence picks up e^{-2it}
        let phase = rot.get(k).matrix()[(2, 2)];
        assert!((phase - num_complex::Complex64::new(0.0, -2.0 * t).exp()).norm() <= 1e-12);
    }

    let damp = semigroup_reference(&damping(1.0).generator(), g);
    let p11 = damp.last().matrix()[(3, 3)].re;
    assert!((p11 - (-1f64).exp()).abs() <= 1e-12, "{p11}");
}

#[test]
fn solve_dispatches_all_methods() {
    let g = grid(3.0, 600);
    let e = projective_channel(&DensityMatrix64::basis(2, 0));
    let p = semimarkov_pair(&e, &WaitingTime::exponential(1.0).unwrap(), g).unwrap();
    let v = solve(&SolveSpec::new(p.clone(), Method::Volterra)).unwrap();
    let s = solve(&SolveSpec::new(p.clone(), "series:30".parse().unwrap())).unwrap();
    let i = solve(&SolveSpec::new(p, Method::Inhomogeneous)).unwrap();
    assert!(v.max_distance(&s).unwrap() <= 1e-6);
    assert!(v.max_distance(&i).unwrap() <= 1e-3);
    assert!("series:x".parse::<Method>().is_err());
    assert_eq!(Method::Series(4).to_string(), "series:4");
}

#[test]
fn trajectory_csv_layout() {
    let g = grid(1.0, 2);
    let rho = DensityMatrix64::basis(2, 1);
    let traj = evolve_state(&MapFamily64::identity(g, 2), &rho).unwrap();
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "t,trace_defect,min_choi_eig,purity,rho_re_1_1,rho_re_1_2,rho_re_2_1,rho_re_2_2,\
         rho_im_1_1,rho_im_1_2,rho_im_2_1,rho_im_2_2"
    );
    assert_eq!(lines.len(), 4);
    let row: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(row[0], "5.0000000000000000e-1");
    assert_eq!(row[7], "1.0000000000000000e0");
}

#[test]
fn generalized_collision_kernel_needs_commuting_transforms() {
    let g = grid(4.0, 800);
    // A sigma_x rotation does not commute with a sigma_z phase flip.
    let spec = GkslSpec::new(ops::pauli_x::<f64>() * c(0.5), vec![]).unwrap();
    let (family, family_dot) = dynamical_semigroup(&spec.generator(), g);
    let e = Superoperator64::from_kraus(&ops::phase_flip(0.3));
    let w = WaitingTime::exponential(2.0).unwrap();
    let p = generalized_collision_pair(&family, Some(&family_dot), &e, &w).unwrap();
    assert!(matches!(check_commuting_default(&p), Err(Error::NotCommuting { .. })));
    let (k, source) = generalized_collision_kernel(&family, Some(&family_dot), &e, &w).unwrap();
    let gap = solve_inhomogeneous_map(&k, &source)
        .unwrap()
        .max_distance(&solve_volterra(&p).unwrap())
        .unwrap();
    assert!(gap > 1e-2, "kernel form unexpectedly matched: {gap:e}");
}

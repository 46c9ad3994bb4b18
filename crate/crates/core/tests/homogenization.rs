use cortical::homogenization::{
    homogenization_sample, solve_mean_value_dirichlet_with, MeanValueOptions,
};
use cortical::{
    h_convergence_experiment, sample_kappa, solve_mean_value_dirichlet, transition_functions,
    validate_mean_value, GridGeometry, HeterogeneousOperator, ScalarField, StencilVector,
    TestFunction,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn lambda(diagonals: bool) -> Vec<StencilVector> {
    let mut l = StencilVector::axes();
    if diagonals {
        l.extend([(1, 1), (-1, -1), (1, -1), (-1, 1)].map(|(a, b)| StencilVector::new(a, b)));
    }
    l.push(StencilVector::ZERO);
    l
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn formula_operators_validate(
        r in 0.05f64..0.95,
        delta in 0.01f64..=1.0,
        seed in any::<u64>(),
        n in 4usize..20,
    ) {
        let kappa = sample_kappa(n, n + 1, r, delta, seed).unwrap();
        let op = transition_functions(&kappa, &lambda(false)).unwrap().at_scale(1.0 / n as f64).unwrap();
        let v = validate_mean_value(&op);
        prop_assert!(v.passed(), "{:?}", v);
        prop_assert!(v.delta_min >= delta / 4.0 - 1e-15);
        prop_assert!(v.reversibility_violation == 0.0);
    }

    #[test]
    fn maximum_principle(seed in any::<u64>(), r in 0.1f64..0.9, delta in 0.05f64..1.0) {
        let n = 12;
        let kappa = sample_kappa(n + 1, n + 1, r, delta, seed).unwrap();
        let op = transition_functions(&kappa, &lambda(false)).unwrap().at_scale(1.0 / n as f64).unwrap();
        let g = op.geometry();
        let f = ScalarField::from_index_fn(g, |i, j| ((i * 3 + j * 7 + seed as usize % 5) % 4) as f64);
        let u = solve_mean_value_dirichlet(&op, &f, &g).unwrap();
        prop_assert!(u.min() >= 0.0);
    }
}

#[test]
fn diagonal_stencils_overdraw_the_stay_probability() {
    let kappa = sample_kappa(6, 6, 0.5, 1.0, 0).unwrap();
    let op = transition_functions(&kappa, &lambda(true)).unwrap();
    assert_eq!(op.p(StencilVector::ZERO).unwrap().get(2, 2), -1.0);
    let v = validate_mean_value(&op);
    assert!(!v.passed());
    assert!(v.failures.iter().all(|&(property, _)| property == 1));
    assert_eq!(v.negativity_violation, 1.0);
}

#[test]
fn quarter_transitions_are_the_scaled_laplacian() {
    let n = 10;
    let eps = 1.0 / n as f64;
    let kappa = sample_kappa(n + 1, n + 1, 0.5, 1.0, 3).unwrap();
    let op = transition_functions(&kappa, &lambda(false))
        .unwrap()
        .at_scale(eps)
        .unwrap();
    let system = op.system_matrix();
    let g = op.geometry();
    let lap = HeterogeneousOperator::homogeneous_laplacian(&g);
    for k in 0..g.len() {
        let (i, j) = g.node(k);
        if g.is_boundary(i, j) {
            assert_eq!(system.row(k).collect::<Vec<_>>(), vec![(k, 1.0)]);
            continue;
        }
        for c in 0..g.len() {
            let (ci, cj) = g.node(c);
            if g.is_boundary(ci, cj) {
                assert_eq!(system.get(k, c), 0.0);
                continue;
            }
            let expected = -eps * eps / 4.0 * lap.matrix().get(k, c);
            assert!((system.get(k, c) - expected).abs() < 1e-12, "({k}, {c})");
        }
    }
}

#[test]
fn unit_conductance_matches_dense_solve() {
    let n = 12;
    let eps = 1.0 / n as f64;
    let kappa = sample_kappa(n + 1, n + 1, 0.5, 1.0, 0).unwrap();
    let op = transition_functions(&kappa, &lambda(false))
        .unwrap()
        .at_scale(eps)
        .unwrap();
    let g = op.geometry();
    let f = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y);
    let options = MeanValueOptions {
        tolerance: 1e-11,
        ..MeanValueOptions::default()
    };
    let u = solve_mean_value_dirichlet_with(&op, &f, &g, &options).unwrap();

    let m = op.system_matrix();
    let mut a = DMatrix::<f64>::zeros(g.len(), g.len());
    let mut b = DVector::<f64>::zeros(g.len());
    for k in 0..g.len() {
        for (c, v) in m.row(k) {
            a[(k, c)] = v;
        }
        let (i, j) = g.node(k);
        if !g.is_boundary(i, j) {
            b[k] = eps * eps * f.values()[k];
        }
    }
    let exact = a.lu().solve(&b).unwrap();
    let worst = u
        .values()
        .iter()
        .zip(exact.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "worst deviation {worst}");
}

#[test]
fn experiments_are_deterministic() {
    let f = TestFunction::default();
    let a = h_convergence_experiment(0.4, 0.2, &f, &[1.0 / 8.0, 1.0 / 16.0], &[5, 6]).unwrap();
    let b = h_convergence_experiment(0.4, 0.2, &f, &[1.0 / 8.0, 1.0 / 16.0], &[5, 6]).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(
        homogenization_sample(0.4, 0.2, &f, 1.0 / 8.0, 5).unwrap(),
        homogenization_sample(0.4, 0.2, &f, 1.0 / 8.0, 5).unwrap()
    );
    assert!(homogenization_sample(0.4, 0.2, &f, 0.3, 5).is_err());
    assert!(h_convergence_experiment(0.4, 0.2, &f, &[1.0 / 16.0, 1.0 / 8.0], &[1, 2]).is_err());
}

#[test]
fn unit_conductance_fits_a_quarter() {
    let f = TestFunction::default();
    let report = h_convergence_experiment(0.5, 1.0, &f, &[1.0 / 32.0], &[1]).unwrap();
    assert!(
        (report.fitted_coefficient - 0.25).abs() < 0.02 * 0.25,
        "{}",
        report.fitted_coefficient
    );
    assert!((report.anisotropy_estimate - 1.0).abs() < 0.02);
}

#[test]
fn geometry_of_samples() {
    let u = homogenization_sample(0.5, 0.5, &TestFunction::default(), 1.0 / 16.0, 2).unwrap();
    assert_eq!(
        *u.geometry(),
        GridGeometry::new(17, 17, 1.0 / 16.0).unwrap()
    );
}

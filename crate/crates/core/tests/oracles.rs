//! Closed forms and frozen reference values (30-digit evaluations).

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use approx::assert_relative_eq;
use qvlab::capacity::{
    capacitor_solve, capacity_ladder, classify_criticality, global_capacity, Criticality, SupersolutionDatum,
};
use qvlab::geometry::{solve_jacobi, CurvatureProfile, ModelManifold, RadialFunction};
use qvlab::green::{green_hardy_weight, is_subcritical_model, GreenKernel};
use qvlab::hardy::{chi_general, chi_hyperbolic_closed, multipole_weight, zeta, Pole, SpaceForm};
use qvlab::mesh::{qv_residual, PotentialProfile, RadialMesh};
use qvlab::solver::{
    compute_delta, dirichlet_solve, monotone_iteration, obstacle_solve, pasting_min_check, BoundaryData, Coefficients,
    Ladder, MonotoneOptions, Nonlinearity, SolverOptions, Window, TOL_PASTE,
};
use qvlab::spectral::fundamental_tone;
use qvlab::yamabe::{conformal_constant, yamabe_exponent, YamabeProblem};
use qvlab::Error;

#[test]
fn warping_functions() {
    let flat = solve_jacobi(&CurvatureProfile::Constant(0.0), 10.0, 1e-3).unwrap();
    assert_relative_eq!(flat.value(1.0).unwrap(), 1.0, max_relative = 1e-12);
    let hyp = solve_jacobi(&CurvatureProfile::Constant(1.0), 10.0, 1e-3).unwrap();
    assert_relative_eq!(hyp.value(1.0).unwrap(), 1.175201193643801457, max_relative = 1e-8);

    let g = |h: f64| {
        let prof = CurvatureProfile::Function(RadialFunction::new(|r: f64| 1.0 + (-r).exp()));
        solve_jacobi(&prof, 10.0, h).unwrap().value(1.0).unwrap()
    };
    assert_relative_eq!(g(1e-3), g(5e-4), max_relative = 1e-6);
}

#[test]
fn mean_curvature_of_spheres() {
    let r3 = ModelManifold::flat(3, 2.0).unwrap();
    assert_relative_eq!(2.0 * r3.warping().log_derivative(2.0).unwrap(), 1.0, max_relative = 1e-14);
    let h2 = ModelManifold::hyperbolic(2, 2.0, 1.0).unwrap();
    assert_relative_eq!(h2.warping().log_derivative(1.0).unwrap(), 1.313035285499331304, max_relative = 1e-12);
}

#[test]
fn hardy_weight_values() {
    let r3 = ModelManifold::flat(3, 2.0).unwrap();
    assert_relative_eq!(chi_general(&r3, 2.0).unwrap(), 0.0625, max_relative = 1e-12);
    assert_relative_eq!(chi_general(&r3, 1.0).unwrap(), 0.25, max_relative = 1e-12);

    let h3 = ModelManifold::hyperbolic(3, 2.0, 1.0).unwrap();
    let half_ln2 = 0.5 * 2f64.ln();
    assert_relative_eq!(chi_general(&h3, half_ln2).unwrap(), 4.0, max_relative = 1e-10);
    for (r, v) in [(0.1, 30.43348863527995050), (1.0, 1.337533057991243268), (5.0, 1.000090806043360163)] {
        assert_relative_eq!(chi_general(&h3, r).unwrap(), v, max_relative = 1e-10);
    }
    assert_relative_eq!(chi_general(&h3, 60.0).unwrap(), 1.0, max_relative = 1e-12);

    let h2 = ModelManifold::hyperbolic(2, 2.0, 1.0).unwrap();
    for (r, v) in [(0.1, 2.774887638626992314), (1.0, 0.3037750026909177572), (5.0, 0.2500151341344251562)] {
        assert_relative_eq!(chi_general(&h2, r).unwrap(), v, max_relative = 1e-7);
    }
    assert_relative_eq!(chi_general(&h2, 60.0).unwrap(), 0.25, max_relative = 1e-6);
    assert_relative_eq!(
        chi_general(&h2, 1.0).unwrap(),
        chi_hyperbolic_closed(2, 2.0, 1.0, 1.0).unwrap(),
        max_relative = 1e-8
    );
    assert_relative_eq!(chi_hyperbolic_closed(3, 2.0, 1.0, 2.0).unwrap(), 1.037662817823291823, max_relative = 1e-12);
}

#[test]
fn multipole_weights() {
    let one = [Pole { position: vec![0.0; 3], mass: 1.0 }];
    assert_relative_eq!(
        multipole_weight(SpaceForm::Flat, 3, 2.0, &one, &[2.0, 0.0, 0.0]).unwrap(),
        0.0625,
        max_relative = 1e-12
    );
    let x = [0.3, -0.2, 0.1];
    let (y1, y2) = (vec![1.3, -0.2, 0.1], vec![-0.7, -0.2, 0.1]);
    let pair = [Pole { position: y1.clone(), mass: 0.5 }, Pole { position: y2.clone(), mass: 0.5 }];
    let single = |y: &Vec<f64>| {
        multipole_weight(SpaceForm::Flat, 3, 2.0, &[Pole { position: y.clone(), mass: 1.0 }], &x).unwrap()
    };
    assert_relative_eq!(
        multipole_weight(SpaceForm::Flat, 3, 2.0, &pair, &x).unwrap(),
        0.5 * (single(&y1) + single(&y2)),
        max_relative = 1e-14
    );
    let too_heavy = [Pole { position: vec![0.0; 3], mass: 0.7 }, Pole { position: vec![1.0, 0.0, 0.0], mass: 0.7 }];
    assert!(matches!(multipole_weight(SpaceForm::Flat, 3, 2.0, &too_heavy, &x), Err(Error::MassExceeded(_))));
}

#[test]
fn zeta_endpoints() {
    let z = zeta(3, 1.0, 50.0).unwrap();
    assert!((z - 2.0).abs() < 1e-3, "{z}");
    for m in 2..=6 {
        let min = (0..=200)
            .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 200.0))
            .map(|t| zeta(m, 1.0, t).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(min > 0.0);
    }
}

#[test]
fn green_kernels() {
    let g3 = GreenKernel::new(&ModelManifold::flat(3, 2.0).unwrap()).unwrap();
    assert_relative_eq!(g3.value(2.0).unwrap(), 0.5, max_relative = 1e-8);
    let g4 = GreenKernel::new(&ModelManifold::flat(4, 2.0).unwrap()).unwrap();
    assert_relative_eq!(g4.value(1.0).unwrap(), 0.5, max_relative = 1e-8);
    let h2 = GreenKernel::new(&ModelManifold::hyperbolic(2, 2.0, 1.0).unwrap()).unwrap();
    assert_relative_eq!(h2.value(1.0).unwrap(), 0.7719368329053047251, max_relative = 1e-8);
    // coth r - 1
    let h3 = GreenKernel::new(&ModelManifold::hyperbolic(3, 2.0, 1.0).unwrap()).unwrap();
    assert_relative_eq!(h3.value(1.0).unwrap(), 0.3130352854993313036, max_relative = 1e-8);

    let r3 = ModelManifold::flat(3, 2.0).unwrap();
    assert_relative_eq!(green_hardy_weight(&g3, 1.0).unwrap(), 0.25, max_relative = 1e-8);
    let h = ModelManifold::hyperbolic(3, 2.0, 1.0).unwrap();
    let r = 0.5 * 2f64.ln();
    assert_relative_eq!(green_hardy_weight(&h3, r).unwrap(), 4.0, max_relative = 1e-6);
    assert_relative_eq!(green_hardy_weight(&g3, 1.7).unwrap(), chi_general(&r3, 1.7).unwrap(), max_relative = 1e-8);
    assert_relative_eq!(green_hardy_weight(&h3, 0.9).unwrap(), chi_general(&h, 0.9).unwrap(), max_relative = 1e-6);
}

#[test]
fn subcriticality_of_models() {
    assert!(is_subcritical_model(&ModelManifold::flat(3, 2.0).unwrap()).is_subcritical());
    assert!(!is_subcritical_model(&ModelManifold::flat(2, 2.0).unwrap()).is_subcritical());
    assert!(is_subcritical_model(&ModelManifold::hyperbolic(2, 3.0, 1.0).unwrap()).is_subcritical());
}

#[test]
fn harmonic_function_has_zero_residual() {
    let mm = ModelManifold::flat(3, 2.0).unwrap();
    let mesh = RadialMesh::annulus(&mm, 1.0, 2.0, 400).unwrap();
    let w = mesh.interpolate(|r| 1.0 / r);
    let n = mesh.n_nodes();
    for i in [1, n / 2, n - 2] {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let phi = mesh.function(e).unwrap();
        let r = qv_residual(&mesh, &PotentialProfile::zero(), &w, &phi).unwrap();
        assert!(r.abs() < 1e-6, "node {i}: {r}");
    }
}

#[test]
fn tones() {
    let mm = ModelManifold::flat(3, 2.0).unwrap();
    let mesh = RadialMesh::annulus(&mm, 1.0, 2.0, 400).unwrap();
    let l0 = fundamental_tone(&mesh, &PotentialProfile::zero()).unwrap().lambda;
    let l1 = fundamental_tone(&mesh, &PotentialProfile::Constant(0.75)).unwrap().lambda;
    assert_relative_eq!(l0 - l1, 0.75, max_relative = 1e-9);

    let wide = RadialMesh::annulus(&mm, 0.05, 20.0, 800).unwrap();
    let hardy4 = PotentialProfile::hardy(&mm, 4.0);
    assert!(fundamental_tone(&wide, &hardy4).unwrap().lambda < 0.0);
    let err = dirichlet_solve(
        &wide,
        &hardy4,
        &PotentialProfile::zero(),
        &Nonlinearity::power(2.0),
        BoundaryData::uniform(1.0),
        &SolverOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::NotCoercive(_)));
    let half = PotentialProfile::hardy(&mm, 0.5);
    assert!(fundamental_tone(&wide, &half).unwrap().lambda > 0.0);
}

#[test]
fn capacities() {
    let g = SupersolutionDatum::constant(1.0);
    let zero = PotentialProfile::zero();
    let r3 = ModelManifold::flat(3, 2.0).unwrap();
    let c = capacitor_solve(&RadialMesh::annulus(&r3, 1.0, 2.0, 400).unwrap(), &zero, &g).unwrap();
    assert_relative_eq!(c.value, 4.0 * PI, max_relative = 5e-3);
    assert_relative_eq!(c.flux_value, 4.0 * PI, max_relative = 5e-3);
    // cap(B_1) on H^3 = (1/2) 4 pi / (coth 1 - 1)
    let h3 = ModelManifold::hyperbolic(3, 2.0, 1.0).unwrap();
    let gc = global_capacity(&capacity_ladder(&h3, 1.0, 2.0, 5, 200).unwrap(), &zero, &g).unwrap();
    assert!(gc.monotone && gc.nested);
    assert_relative_eq!(gc.estimate, 20.07181170377359400, max_relative = 1e-3);
    let h2 = ModelManifold::hyperbolic(2, 2.0, 1.0).unwrap();
    let rep = classify_criticality(&capacity_ladder(&h2, 1.0, 2.0, 6, 100).unwrap(), &zero, &g).unwrap();
    assert_eq!(rep.class, Criticality::Subcritical);
}

#[test]
fn monotone_iteration_trivial_cases() {
    let mm = ModelManifold::flat(3, 2.0).unwrap();
    let mesh = RadialMesh::ball(&mm, 3.0, 120).unwrap();
    let window = Window::new(0.0, 1.5).unwrap();
    let f = Nonlinearity::power(3.0);
    let zero = PotentialProfile::zero();
    // b >= 0: one step, and the exact solution is the constant eps.
    let rep = monotone_iteration(
        &mesh,
        &Coefficients::new(zero.clone(), zero.clone()),
        &f,
        0.7,
        &window,
        &MonotoneOptions::default(),
    )
    .unwrap();
    assert!(rep.iterations <= 1);
    assert!(rep.solution.values().iter().all(|v| (v - 0.7).abs() < 1e-10));

    let a = PotentialProfile::hardy(&mm, 0.5);
    let b =
        |h: f64| PotentialProfile::Constant(1.0).plus(PotentialProfile::Bump { center: 0.8, width: 0.4, height: -h });
    let w = qvlab::solver::hardy_margin(&mesh, &a, &window).unwrap();
    let d = compute_delta(&mesh, &a, &b(1.0).positive_part(), &f, 1.0, &window, &w, &Ladder::default()).unwrap();
    let ok = monotone_iteration(
        &mesh,
        &Coefficients::new(a.clone(), b(1.0 + 0.5 * d.delta)),
        &f,
        1.0,
        &window,
        &MonotoneOptions::default(),
    );
    assert!(ok.is_ok());
    let bad = monotone_iteration(
        &mesh,
        &Coefficients::new(a, b(1.0 + 2.0 * d.delta)),
        &f,
        1.0,
        &window,
        &MonotoneOptions::default(),
    );
    assert!(matches!(bad, Err(Error::DeltaViolated { .. })), "{bad:?}");
}

#[test]
fn obstacle_minimality_and_pasting() {
    let mm = ModelManifold::flat(3, 2.0).unwrap();
    let mesh = RadialMesh::ball(&mm, 2.0, 100).unwrap();
    let zero = PotentialProfile::zero();
    let res = obstacle_solve(&mesh, &zero, &mesh.constant(0.0), &mesh.constant(1.0)).unwrap();
    assert!(res.solution.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    // psi = theta = a supersolution (superharmonic 2 - r^2 / 4)
    let sup = mesh.interpolate(|r| 2.0 - r * r / 4.0);
    let res = obstacle_solve(&mesh, &zero, &sup, &sup).unwrap();
    assert!(res.solution.values().iter().zip(sup.values()).all(|(u, s)| (u - s).abs() < 1e-9));

    let ann = RadialMesh::annulus(&mm, 0.5, 3.0, 300).unwrap();
    let rep = pasting_min_check(&ann, &zero, &ann.constant(1.0), &ann.interpolate(|r| 2.0 / r), TOL_PASTE).unwrap();
    assert!(rep.passes);
}

#[test]
fn yamabe_constants() {
    assert_eq!((conformal_constant(4), yamabe_exponent(4)), (6.0, 3.0));
    assert_eq!((conformal_constant(3), yamabe_exponent(3)), (8.0, 5.0));
    let yp = YamabeProblem::new(4, PotentialProfile::zero(), PotentialProfile::zero()).unwrap();
    let (c, _) = yp.to_coefficients().unwrap();
    assert_eq!(c.a.eval(1.3).unwrap(), 0.0);
}

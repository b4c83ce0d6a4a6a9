use proptest::prelude::*;

use qvlab::capacity::{capacitor_solve, SupersolutionDatum};
use qvlab::geometry::ModelManifold;
use qvlab::hardy::{chi_general, chi_limit, zeta};
use qvlab::mesh::{picone, PotentialProfile, RadialMesh};
use qvlab::spectral::fundamental_tone;
use qvlab::yamabe::{conformal_constant, YamabeProblem};

fn model() -> impl Strategy<Value = ModelManifold> {
    (2usize..=5, 1.5f64..3.0, prop::option::of(0.5f64..2.0)).prop_map(|(m, p, kappa)| match kappa {
        Some(k) => ModelManifold::hyperbolic(m, p, k).unwrap(),
        None => ModelManifold::flat(m, p).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn picone_is_nonnegative(mm in model(), seed in any::<u64>(), n in 10usize..80) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mesh = RadialMesh::ball(&mm, 2.0, n).unwrap();
        let w = mesh.function((0..=n).map(|_| rng.gen_range(0.05..3.0)).collect()).unwrap();
        let z = mesh.function((0..=n).map(|_| rng.gen_range(0.05..3.0)).collect()).unwrap();
        prop_assert!(picone(&mesh, &w, &z).unwrap() >= -1e-10);
    }

    #[test]
    fn hyperbolic_weight_stays_above_its_limit(m in 2usize..=6, kappa in 0.3f64..3.0, r in 1e-3f64..40.0) {
        let mm = ModelManifold::hyperbolic(m, 2.0, kappa).unwrap();
        let lim = chi_limit(2.0, (m - 1) as f64, kappa);
        prop_assert!(chi_general(&mm, r / kappa).unwrap() >= lim * (1.0 - 1e-12));
    }

    #[test]
    fn zeta_is_positive(m in 2usize..=6, kappa in 0.1f64..4.0, lt in -6.0f64..2.0) {
        prop_assert!(zeta(m, kappa, 10f64.powf(lt) / kappa).unwrap() > 0.0);
    }

    #[test]
    fn capacity_grows_with_the_condenser(mm in model(), a in 0.2f64..1.0, grow in 1.05f64..1.5) {
        let g = SupersolutionDatum::constant(1.0);
        let zero = PotentialProfile::zero();
        let outer = 3.0;
        let small = capacitor_solve(&RadialMesh::annulus(&mm, a, outer, 200).unwrap(), &zero, &g).unwrap();
        let big = capacitor_solve(&RadialMesh::annulus(&mm, a * grow, outer, 200).unwrap(), &zero, &g).unwrap();
        prop_assert!(big.value > small.value);
    }

    #[test]
    fn constant_potential_shifts_the_tone(mm in model(), c in -2.0f64..2.0) {
        let mesh = RadialMesh::annulus(&mm, 0.5, 1.5, 120).unwrap();
        let l0 = fundamental_tone(&mesh, &PotentialProfile::zero()).unwrap().lambda;
        let l1 = fundamental_tone(&mesh, &PotentialProfile::Constant(c)).unwrap().lambda;
        prop_assert!((l1 - (l0 - c)).abs() <= 1e-8 * (1.0 + l0.abs()));
    }

    #[test]
    fn yamabe_coefficients_round_trip(m in 3usize..=8, s in -5.0f64..5.0, st in -5.0f64..5.0, r in 0.0f64..10.0) {
        let yp = YamabeProblem::new(m, PotentialProfile::Constant(s), PotentialProfile::Constant(st)).unwrap();
        let (c, f) = yp.to_coefficients().unwrap();
        let cm = conformal_constant(m);
        prop_assert!((c.a.eval(r).unwrap() * -cm - s).abs() <= 1e-12 * (1.0 + s.abs()));
        prop_assert!((c.b.eval(r).unwrap() * -cm - st).abs() <= 1e-12 * (1.0 + st.abs()));
        prop_assert!((f.eval(2.0) - 2f64.powf(yp.sigma())).abs() <= 1e-9);
    }
}

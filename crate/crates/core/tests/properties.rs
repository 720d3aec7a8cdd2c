//! Randomized invariants of norms, set functionals, cuts and single steps.

use std::sync::Arc;

use proptest::prelude::*;

use capflow::graphcut::{brute_force, IntegerEnergy, Select};
use capflow::gridset::{
    capillary_energy, distance_transform, perimeter_phi, BinarySet, GridDomain, Metric, PerimeterStencil, Region,
    StencilKind,
};
use capflow::stepper::{minimize_step, ContactAngleField, ForcingField, Scheme};
use capflow::Anisotropy;

fn norms() -> Vec<Anisotropy> {
    vec![
        Anisotropy::euclidean(2).unwrap(),
        Anisotropy::diag(&[2.0, 1.0]).unwrap(),
        Anisotropy::linear_map(vec![vec![1.0, 0.4], vec![0.4, 1.5]]).unwrap(),
        Anisotropy::smoothed_l1(2, 0.1).unwrap(),
    ]
}

fn small_grid() -> Arc<GridDomain> {
    Arc::new(GridDomain::centered(2, 0.5, 0.5, 1.0 / 16.0).unwrap())
}

fn random_set(grid: &Arc<GridDomain>, bits: &[bool]) -> BinarySet {
    BinarySet::from_indices(grid, (0..grid.len()).filter(|&i| bits[i % bits.len()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_are_even_homogeneous_and_subadditive(
        k in 0usize..4,
        x in prop::array::uniform2(-3.0f64..3.0),
        y in prop::array::uniform2(-3.0f64..3.0),
        s in 0.01f64..10.0,
    ) {
        let phi = &norms()[k];
        let (px, py) = (phi.value(&x), phi.value(&y));
        prop_assert!((phi.value(&[-x[0], -x[1]]) - px).abs() <= 1e-12 * (1.0 + px));
        prop_assert!((phi.value(&[s * x[0], s * x[1]]) - s * px).abs() <= 1e-10 * (1.0 + s * px));
        prop_assert!(phi.value(&[x[0] + y[0], x[1] + y[1]]) <= px + py + 1e-10);
    }

    #[test]
    fn dual_satisfies_the_young_inequality(
        k in 0usize..4,
        x in prop::array::uniform2(-3.0f64..3.0),
        y in prop::array::uniform2(-3.0f64..3.0),
    ) {
        let phi = &norms()[k];
        let dual = phi.dual();
        let dot = x[0] * y[0] + x[1] * y[1];
        prop_assert!(dot <= phi.value(&x) * dual.value(&y) * (1.0 + 1e-8) + 1e-12);
    }

    #[test]
    fn coercivity_holds_cellwise(
        k in 0usize..3,
        beta in -0.5f64..0.5,
        bits in prop::collection::vec(any::<bool>(), 64..256),
    ) {
        let phi = &norms()[k];
        let g = small_grid();
        let stencil = PerimeterStencil::calibrate(phi, StencilKind::default_for(2)).unwrap();
        let field = ContactAngleField::constant(&g, phi, beta * phi.vertical()).unwrap();
        let e = random_set(&g, &bits);
        let p = perimeter_phi(&e, phi, &stencil, Region::All).unwrap();
        let c = capillary_energy(&e, phi, &stencil, &field).unwrap();
        prop_assert!(field.eta() * p <= c);
        prop_assert!(c <= p);
    }

    #[test]
    fn signed_distance_is_monotone_under_inclusion(
        inner in prop::collection::vec(any::<bool>(), 64..128),
        extra in prop::collection::vec(any::<bool>(), 64..128),
    ) {
        let g = small_grid();
        let e = random_set(&g, &inner);
        let f = e.union(&random_set(&g, &extra)).unwrap();
        prop_assume!(!e.is_empty() && f.count() < g.len());
        let de = distance_transform(&e, true, &Metric::Euclidean).unwrap();
        let df = distance_transform(&f, true, &Metric::Euclidean).unwrap();
        for (a, b) in de.values().iter().zip(df.values()) {
            prop_assert!(a >= b);
        }
    }

    #[test]
    fn extreme_cuts_are_optimal_and_ordered(
        unary in prop::collection::vec(-20i64..20, 6..11),
        pairs in prop::collection::vec((0usize..10, 0usize..10, 0i64..12), 0..20),
    ) {
        let n = unary.len();
        let pairs = pairs.into_iter().filter(|(i, j, _)| i % n != j % n).map(|(i, j, w)| (i % n, j % n, w)).collect();
        let e = IntegerEnergy { unary, pairs };
        let (best, meet, join) = brute_force(&e);
        let (lo, _) = e.minimize(Select::Minimal).unwrap();
        let (hi, _) = e.minimize(Select::Maximal).unwrap();
        prop_assert_eq!(e.eval(&lo), best);
        prop_assert_eq!(e.eval(&hi), best);
        prop_assert_eq!(lo, meet);
        prop_assert_eq!(hi, join);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_preserve_inclusion(
        r in 0.15f64..0.35,
        shrink in 0.0f64..0.1,
        b2 in -0.6f64..0.4,
        db in 0.0f64..0.3,
        f2 in -1.5f64..1.5,
        df in 0.0f64..1.0,
        tau in 0.002f64..0.05,
    ) {
        let g = small_grid();
        let phi = Anisotropy::euclidean(2).unwrap();
        let outer = BinarySet::from_predicate(&g, |x| x[0] * x[0] + x[1] * x[1] < r * r);
        let inner = BinarySet::from_predicate(&g, |x| x[0] * x[0] + x[1] * x[1] < (r - shrink).powi(2));
        let s1 = Scheme::new(&g, &phi, ContactAngleField::constant(&g, &phi, b2 + db).unwrap(), ForcingField::Constant(f2 + df)).unwrap();
        let s2 = Scheme::new(&g, &phi, ContactAngleField::constant(&g, &phi, b2).unwrap(), ForcingField::Constant(f2)).unwrap();
        let a = minimize_step(&inner, tau, 1, &s1, Select::Minimal).unwrap().set;
        let b = minimize_step(&outer, tau, 1, &s2, Select::Minimal).unwrap().set;
        let c = minimize_step(&outer, tau, 1, &s2, Select::Maximal).unwrap().set;
        prop_assert!(a.is_subset_of(&b).unwrap());
        prop_assert!(b.is_subset_of(&c).unwrap());
    }
}

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use wgeig::augsub::{rayleigh_quotient, subspace_error, FineProblem};
use wgeig::expcli::fit_factor;
use wgeig::linalg::{EigenSet, ReferenceOptions};
use wgeig::wgspace::{Boundary, WgSpace, WgVector};
use wgeig::TriMesh;

fn small() -> &'static (FineProblem, EigenSet) {
    static CELL: OnceLock<(FineProblem, EigenSet)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = FineProblem::new(WgSpace::new(Arc::new(TriMesh::build_uniform(6).unwrap()), 0).unwrap()).unwrap();
        let (r, _) = p.reference(4, &ReferenceOptions::default()).unwrap();
        (p, r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_matches_uniform(n in 1usize..7) {
        let fine = TriMesh::build_uniform(n).unwrap().refine();
        let direct = TriMesh::build_uniform(2 * n).unwrap();
        prop_assert_eq!(fine.cells(), direct.cells());
        prop_assert_eq!(fine.edges(), direct.edges());
        prop_assert_eq!(fine.num_vertices() + fine.num_cells(), fine.num_edges() + 1);
    }

    #[test]
    fn weak_gradient_exact_on_linears(
        n in 1usize..6,
        r in 0usize..2,
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
        c in -5.0f64..5.0,
    ) {
        let space = WgSpace::with_boundary(Arc::new(TriMesh::build_uniform(n).unwrap()), r, Boundary::Kept).unwrap();
        let v = space.project_qh(&|p| a * p[0] + b * p[1] + c);
        for k in 0..space.mesh().num_cells() {
            let g = space.weak_gradient_at(k, v.as_slice(), space.mesh().cell_centroid(k)).unwrap();
            prop_assert!((g[0] - a).abs() < 1e-11 && (g[1] - b).abs() < 1e-11);
        }
    }

    #[test]
    fn rayleigh_quotient_is_scale_invariant(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        use rand::{Rng, SeedableRng};
        let (p, r) = small();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..p.ndofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let qx = rayleigh_quotient(&WgVector::from_vec(&p.space, x).unwrap(), &p.stiffness, &p.mass).unwrap();
        let qy = rayleigh_quotient(&WgVector::from_vec(&p.space, y).unwrap(), &p.stiffness, &p.mass).unwrap();
        prop_assert!((qx - qy).abs() <= 1e-10 * qx);
        prop_assert!(qx >= r.values[0] * (1.0 - 1e-10));
    }

    #[test]
    fn subspace_error_depends_only_on_span(seed in any::<u64>(), s0 in -3.0f64..3.0, s1 in -3.0f64..3.0) {
        use rand::{Rng, SeedableRng};
        prop_assume!(s0.abs() > 1e-2 && s1.abs() > 1e-2);
        let (p, r) = small();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<Vec<f64>> = (0..2)
            .map(|i| r.vector(i).iter().map(|x| x + 0.05 * rng.random_range(-1.0..1.0)).collect())
            .collect();
        let w = vec![
            u[0].iter().map(|x| s0 * x).collect::<Vec<f64>>(),
            u[0].iter().zip(&u[1]).map(|(x, y)| x + s1 * y).collect(),
        ];
        let e1 = subspace_error(&u, r, &p.stiffness, &p.mass, &[0, 1], 1e-6).unwrap();
        let e2 = subspace_error(&w, r, &p.stiffness, &p.mass, &[0, 1], 1e-6).unwrap();
        for ((a1, b1), (a2, b2)) in e1.iter().zip(&e2) {
            prop_assert!((a1 - a2).abs() < 1e-9 && (b1 - b2).abs() < 1e-9);
        }
    }

    #[test]
    fn geometric_sequence_fit(e0 in 1e-3f64..1.0, q in 1e-3f64..0.9, m in 3usize..12) {
        let errs: Vec<f64> = (0..m).map(|i| e0 * q.powi(i as i32)).collect();
        let fit = fit_factor(&errs).unwrap();
        prop_assert!((fit.factor - q).abs() <= 1e-10 * q);
        prop_assert_eq!(fit.points, m);
    }
}

use grasslearn::manifold::{
    distance, exp_map, geodesic_point, log_map, principal_angles, random_orthogonal, random_point,
    DistanceMetric, GrassmannPoint,
};
use grasslearn::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const S2: f64 = std::f64::consts::SQRT_2;

fn plane_pair() -> (GrassmannPoint, GrassmannPoint) {
    let x = Matrix::from_rows(&[
        [-S2 / 2.0, -S2 / 4.0],
        [S2 / 2.0, -S2 / 4.0],
        [0.0, 3f64.sqrt() / 2.0],
    ])
    .unwrap();
    let y = Matrix::from_rows(&[[0.0, S2 / 2.0], [1.0, 0.0], [0.0, S2 / 2.0]]).unwrap();
    (
        GrassmannPoint::from_orthonormal(x).unwrap(),
        GrassmannPoint::from_orthonormal(y).unwrap(),
    )
}

#[test]
fn three_dimensional_pair_angles() {
    let (x, y) = plane_pair();
    let th = principal_angles(&x, &y).unwrap();
    assert!(th.angles()[0].abs() < 1e-7);
    assert!((th.angles()[1] - 0.07945931f64.acos()).abs() < 5e-8);
    assert!((th.angles()[1].to_degrees() - 85.44).abs() < 5e-3);
}

#[test]
fn three_dimensional_pair_distances() {
    let (x, y) = plane_pair();
    let expected = [
        (DistanceMetric::ArcLength, 1.491253),
        (DistanceMetric::FubiniStudy, 1.491253),
        (DistanceMetric::Chordal, 1.356864),
        (DistanceMetric::Projection, 0.996838),
        (DistanceMetric::BinetCauchy, 0.996838),
    ];
    for (m, v) in expected {
        let d = distance(m, &x, &y).unwrap();
        assert!((d - v).abs() <= 5e-6, "{m}: {d}");
    }
}

#[test]
fn second_column_sign_decides_the_angle() {
    // with X[1][1] = +√2/4 the columns are not orthogonal; orthonormalizing
    // the generator gives a different subspace with cosines (1, 1/2)
    let x = Matrix::from_rows(&[
        [-S2 / 2.0, -S2 / 4.0],
        [S2 / 2.0, S2 / 4.0],
        [0.0, 3f64.sqrt() / 2.0],
    ])
    .unwrap();
    assert!(GrassmannPoint::from_orthonormal(x.clone()).is_err());
    let x = GrassmannPoint::from_matrix(&x).unwrap();
    let (_, y) = plane_pair();
    let cos = principal_angles(&x, &y).unwrap().cosines();
    assert!((cos[0] - 1.0).abs() < 1e-12);
    assert!((cos[1] - 0.5).abs() < 1e-12);
}

#[test]
fn plane_line_geodesic_lands_on_rotated_line() {
    let x = GrassmannPoint::from_orthonormal(Matrix::eye(2, 1)).unwrap();
    let y = GrassmannPoint::from_matrix(&Matrix::from_rows(&[[0.5], [3f64.sqrt() / 2.0]]).unwrap())
        .unwrap();
    let d = log_map(&x, &y).unwrap();
    let end = exp_map(&x, &d).unwrap();
    assert!((end.basis()[(0, 0)] - 0.5).abs() < 1e-14);
    assert!((end.basis()[(1, 0)] - 3f64.sqrt() / 2.0).abs() < 1e-14);
}

#[test]
fn metric_ordering_holds() {
    for (n, k, seed) in [(4, 2, 1u64), (8, 3, 2), (20, 5, 3)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let x = random_point(n, k, &mut rng).unwrap();
            let y = random_point(n, k, &mut rng).unwrap();
            let th = principal_angles(&x, &y).unwrap();
            let d = |m| grasslearn::manifold::distance_from_angles(m, &th);
            let arc = d(DistanceMetric::ArcLength);
            let ch = d(DistanceMetric::Chordal);
            let pr = d(DistanceMetric::Projection);
            let fs = d(DistanceMetric::FubiniStudy);
            assert!(arc >= ch - 1e-12, "({n},{k}) arc {arc} < chordal {ch}");
            assert!(ch >= pr - 1e-12, "({n},{k}) chordal {ch} < projection {pr}");
            assert!(arc >= fs - 1e-12, "({n},{k}) arc {arc} < fubini-study {fs}");
        }
    }
}

#[test]
fn midpoint_splits_arc_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let x = random_point(6, 2, &mut rng).unwrap();
        let y = random_point(6, 2, &mut rng).unwrap();
        let Ok(d) = log_map(&x, &y) else { continue };
        let mid = geodesic_point(&x, &d, 0.5).unwrap();
        let whole = distance(DistanceMetric::ArcLength, &x, &y).unwrap();
        let a = distance(DistanceMetric::ArcLength, &x, &mid).unwrap();
        let b = distance(DistanceMetric::ArcLength, &mid, &y).unwrap();
        assert!((a - whole / 2.0).abs() < 1e-9);
        assert!((b - whole / 2.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distances_are_rotation_invariant(seed in any::<u64>(), n in 3usize..10, kk in 1usize..4) {
        let k = kk.min(n - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(n, k, &mut rng).unwrap();
        let y = random_point(n, k, &mut rng).unwrap();
        let xr = x.rotated(&random_orthogonal(k, &mut rng)).unwrap();
        let yr = y.rotated(&random_orthogonal(k, &mut rng)).unwrap();
        for m in DistanceMetric::ALL {
            let d = distance(m, &x, &y).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!((d - distance(m, &y, &x).unwrap()).abs() <= 1e-10);
            prop_assert!((d - distance(m, &xr, &yr).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn geodesics_stay_on_the_manifold(seed in any::<u64>(), t in 0.0f64..=1.0, scale in 0.01f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_point(7, 3, &mut rng).unwrap();
        let g = Matrix::random_normal(7, 3, &mut rng);
        let d = grasslearn::manifold::project_to_tangent(&x, &g).unwrap();
        let d = d.scaled(scale / d.norm());
        let p = geodesic_point(&x, &d, t).unwrap();
        prop_assert!(p.basis().orthonormality_error() <= 1e-10);
    }
}

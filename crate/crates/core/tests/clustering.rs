use grasslearn::clustering::{
    adjusted_rand_index, affinity, cluster_rows, grassmann_kmeans, laplacian, matched_accuracy,
    sparse_spectral, spectral_cluster, spectral_embed, ssc_cluster, Affinity, LaplacianKind,
    SscConfig, SscObjective,
};
use grasslearn::datasets::{constellation, three_rings, ConstellationSpec, RingsSpec};
use grasslearn::manifold::{
    distance, exp_map, project_to_tangent, random_orthogonal, DistanceMetric, GrassmannPoint,
};
use grasslearn::numerics::sym_eig;
use grasslearn::optim::{Objective, OptimConfig};
use grasslearn::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_affinity(n: usize, seed: u64) -> Affinity {
    let x = Matrix::random_normal(n, 3, &mut ChaCha8Rng::seed_from_u64(seed));
    affinity(&x, 1.0).unwrap()
}

fn small_rings(seed: u64) -> (Matrix, Vec<usize>) {
    three_rings(&RingsSpec {
        n_total: 90,
        radii: vec![10.0, 20.0, 30.0],
        noise_sd: 0.5,
        seed,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn laplacians_are_positive_semidefinite(seed in 0u64..1000, n in 3usize..25) {
        let w = random_affinity(n, seed);
        for kind in [LaplacianKind::Unnormalized, LaplacianKind::Normalized] {
            let l = laplacian(&w, kind);
            prop_assert!(sym_eig(&l).unwrap().values[0] >= -1e-10);
        }
        let l = laplacian(&w, LaplacianKind::Unnormalized);
        for i in 0..n {
            prop_assert!(l.row(i).iter().sum::<f64>().abs() <= 1e-12);
        }
    }
}

#[test]
fn disconnected_cliques_give_a_double_zero_eigenvalue() {
    let w = Matrix::from_fn(6, 6, |i, j| {
        if i != j && (i < 3) == (j < 3) {
            1.0
        } else {
            0.0
        }
    });
    let l = laplacian(&Affinity::new(w).unwrap(), LaplacianKind::Unnormalized);
    let e = sym_eig(&l).unwrap().values;
    assert!(e[0].abs() < 1e-12 && e[1].abs() < 1e-12 && e[2] > 1.0);

    let u = spectral_embed(&l, 2).unwrap();
    assert!(u.basis().orthonormality_error() <= 1e-12);
    // rows within a clique coincide and the two cliques differ
    let row_gap = |i: usize, j: usize| -> f64 {
        u.basis()
            .row(i)
            .iter()
            .zip(u.basis().row(j))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    assert!(row_gap(0, 1) < 1e-12 && row_gap(3, 5) < 1e-12);
    assert!(row_gap(0, 3) > 0.1);
    assert!(spectral_embed(&l, 6).is_err());
}

#[test]
fn spectral_pipeline_recovers_rings() {
    let (x, truth) = three_rings(&RingsSpec::ssc_preset(0)).unwrap();
    let run = spectral_cluster(
        &x,
        3,
        1.6,
        LaplacianKind::Unnormalized,
        true,
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let acc = matched_accuracy(&run.labels, &truth);
    assert!(acc >= 0.9, "accuracy {acc}");
}

#[test]
fn zero_penalty_keeps_the_spectral_solution() {
    let (x, _) = small_rings(2);
    let l = laplacian(&affinity(&x, 1.6).unwrap(), LaplacianKind::Unnormalized);
    let cfg = SscConfig {
        beta: 0.0,
        ..Default::default()
    };
    let r = sparse_spectral(&l, &cfg).unwrap();
    let e = sym_eig(&l).unwrap().values;
    let bottom: f64 = e[..3].iter().sum();
    assert!((r.value - bottom).abs() <= 1e-6, "{} vs {bottom}", r.value);
}

#[test]
fn sparse_objective_ignores_the_basis() {
    let (x, _) = small_rings(3);
    let l = laplacian(&affinity(&x, 1.6).unwrap(), LaplacianKind::Unnormalized);
    let obj = SscObjective {
        laplacian: &l,
        beta: 0.01,
        mu: 1e-3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let u = GrassmannPoint::from_matrix(&Matrix::random_normal(90, 3, &mut rng)).unwrap();
        let ur = u.rotated(&random_orthogonal(3, &mut rng)).unwrap();
        assert!((obj.value(&u) - obj.value(&ur)).abs() <= 1e-10);
    }
}

#[test]
fn sparse_gradient_matches_finite_differences() {
    let (x, _) = small_rings(5);
    let l = laplacian(&affinity(&x, 1.6).unwrap(), LaplacianKind::Unnormalized);
    let obj = SscObjective {
        laplacian: &l,
        beta: 0.01,
        mu: 1e-3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let u = GrassmannPoint::from_matrix(&Matrix::random_normal(90, 3, &mut rng)).unwrap();
    let dir = project_to_tangent(&u, &Matrix::random_normal(90, 3, &mut rng)).unwrap();
    let dir = dir.scaled(1.0 / dir.norm());
    let h = 1e-5;
    let fd = (obj.value(&exp_map(&u, &dir.scaled(h)).unwrap())
        - obj.value(&exp_map(&u, &dir.scaled(-h)).unwrap()))
        / (2.0 * h);
    let (_, g) = obj.value_and_grad(&u);
    let analytic = g.inner(dir.delta());
    assert!(
        (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0),
        "{fd} vs {analytic}"
    );
    assert_eq!(g, obj.euclidean_grad(&u));
}

#[test]
fn sparse_clustering_descends_from_the_spectral_start() {
    let (x, _) = small_rings(7);
    let cfg = SscConfig {
        optim: OptimConfig {
            max_iters: 100,
            ..Default::default()
        },
        ..Default::default()
    };
    let run = ssc_cluster(
        &x,
        &cfg,
        LaplacianKind::Unnormalized,
        &mut ChaCha8Rng::seed_from_u64(8),
    )
    .unwrap();
    assert!(run.optim.value <= run.initial_value);
    assert!(run.optim.trace.windows(2).all(|w| w[1].value <= w[0].value));
    assert_eq!(run.labels.len(), 90);
}

#[test]
fn sparse_objective_favors_arcs_over_whole_rings_at_small_bandwidth_scale() {
    // with these weights the ring partition is not a minimizer: an
    // optimized iterate scores well below the ring indicators
    let (x, truth) = small_rings(9);
    let l = laplacian(&affinity(&x, 1.6).unwrap(), LaplacianKind::Unnormalized);
    let obj = SscObjective {
        laplacian: &l,
        beta: 0.01,
        mu: 1e-3,
    };
    let rings = Matrix::from_fn(90, 3, |i, c| {
        if truth[i] == c {
            1.0 / 30f64.sqrt()
        } else {
            0.0
        }
    });
    let rings = GrassmannPoint::from_orthonormal(rings).unwrap();
    let r = sparse_spectral(&l, &SscConfig::default()).unwrap();
    assert!(r.value < obj.value(&rings));
}

#[test]
fn row_clustering_is_seeded() {
    let (x, truth) = small_rings(10);
    let l = laplacian(&affinity(&x, 1.6).unwrap(), LaplacianKind::Unnormalized);
    let u = spectral_embed(&l, 3).unwrap();
    let a = cluster_rows(u.basis(), 3, true, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    let b = cluster_rows(u.basis(), 3, true, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    assert_eq!(a, b);
    let relabeled: Vec<usize> = a.iter().map(|&l| (l + 1) % 3).collect();
    assert_eq!(
        matched_accuracy(&a, &truth),
        matched_accuracy(&relabeled, &truth)
    );
    assert_eq!(
        adjusted_rand_index(&a, &truth),
        adjusted_rand_index(&relabeled, &truth)
    );
}

#[test]
fn noiseless_constellation_is_recovered_exactly() {
    let c = constellation(&ConstellationSpec {
        seed: 12,
        ..Default::default()
    })
    .unwrap();
    let km = grassmann_kmeans(&c.points, 8, 100, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
    assert_eq!(adjusted_rand_index(&km.labels, &c.labels), 1.0);
    for (i, &l) in c.labels.iter().enumerate() {
        let d = distance(
            DistanceMetric::Chordal,
            &km.centers[km.labels[i]],
            &c.codebook[l],
        )
        .unwrap();
        assert!(d <= 1e-6, "{d}");
    }
    // k − ‖XᵀC‖² cancels to round-off
    assert!(km.cost <= 1e-12);
}

#[test]
fn kmeans_cost_never_increases() {
    let c = constellation(&ConstellationSpec {
        noise_angle: 0.15,
        codewords: 5,
        per: 30,
        seed: 14,
        ..Default::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for k in [2, 5, 9] {
        let km = grassmann_kmeans(&c.points, k, 50, &mut rng).unwrap();
        assert!(
            km.cost_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "{:?}",
            km.cost_trace
        );
        assert_eq!(km.centers.len(), k);
        assert!((0..k).all(|c| km.labels.contains(&c)));
    }
}

#[test]
fn one_center_per_point_costs_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let pts: Vec<GrassmannPoint> = (0..6)
        .map(|_| grasslearn::manifold::random_point(5, 2, &mut rng).unwrap())
        .collect();
    let km = grassmann_kmeans(&pts, 6, 20, &mut rng).unwrap();
    // k − ‖XᵀC‖² cancels to round-off
    assert!(km.cost <= 1e-12);
    let mut labels = km.labels.clone();
    labels.sort_unstable();
    assert_eq!(labels, (0..6).collect::<Vec<_>>());
    assert!(grassmann_kmeans(&pts, 7, 20, &mut rng).is_err());
}

#[test]
fn identical_members_average_to_themselves() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = grasslearn::manifold::random_point(6, 3, &mut rng).unwrap();
    let copies: Vec<GrassmannPoint> = (0..5)
        .map(|_| p.rotated(&random_orthogonal(3, &mut rng)).unwrap())
        .collect();
    let km = grassmann_kmeans(&copies, 1, 10, &mut rng).unwrap();
    assert!(distance(DistanceMetric::Projection, &km.centers[0], &p).unwrap() <= 1e-10);
}

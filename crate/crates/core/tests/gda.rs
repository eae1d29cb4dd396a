use grasslearn::datasets::{labeled_subspaces, SubspaceClassesSpec};
use grasslearn::gda::{
    default_epsilon, discriminant_directions, gda_classify, gda_embed, gda_fit, scatter_matrices,
    GdaModel, LabeledGrassmannSet,
};
use grasslearn::kernels::{gram, KernelSpec};
use grasslearn::manifold::{random_orthogonal, GrassmannPoint};
use grasslearn::numerics::svd_compact;
use grasslearn::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn split(
    set: &LabeledGrassmannSet,
    train: usize,
) -> (LabeledGrassmannSet, Vec<GrassmannPoint>, Vec<usize>) {
    let tr = LabeledGrassmannSet::new(
        set.points()[..train].to_vec(),
        set.labels()[..train].to_vec(),
    )
    .unwrap();
    (
        tr,
        set.points()[train..].to_vec(),
        set.labels()[train..].to_vec(),
    )
}

fn benchmark() -> (LabeledGrassmannSet, Vec<GrassmannPoint>, Vec<usize>) {
    let spec = SubspaceClassesSpec {
        classes: 3,
        per_class: 40,
        n: 10,
        k: 2,
        within_angle: 0.3,
        seed: 7,
    };
    let (set, _) = labeled_subspaces(&spec).unwrap();
    split(&set, 60)
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[test]
fn three_class_benchmark_accuracy() {
    let (train, test, truth) = benchmark();
    let model = gda_fit(&train, KernelSpec::Projection, None, 2).unwrap();
    let acc = accuracy(&model.classify_points(&test).unwrap(), &truth);
    assert!(acc >= 0.9, "accuracy {acc}");
    let train_acc = accuracy(
        &model.classify_points(train.points()).unwrap(),
        train.labels(),
    );
    assert_eq!(train_acc, 1.0);
}

#[test]
fn embedded_classes_are_compact() {
    let (train, test, truth) = benchmark();
    let model = gda_fit(&train, KernelSpec::Projection, None, 2).unwrap();
    let z = model.embed_points(&test).unwrap();
    let mut within = 0.0;
    let grand: Vec<f64> = (0..2)
        .map(|j| z.column(j).iter().sum::<f64>() / z.rows() as f64)
        .collect();
    let mut between = 0.0;
    for c in 0..3 {
        let idx: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == c).collect();
        let mean: Vec<f64> = (0..2)
            .map(|j| idx.iter().map(|&i| z[(i, j)]).sum::<f64>() / idx.len() as f64)
            .collect();
        for &i in &idx {
            within += (0..2).map(|j| (z[(i, j)] - mean[j]).powi(2)).sum::<f64>();
        }
        between += idx.len() as f64 * (0..2).map(|j| (mean[j] - grand[j]).powi(2)).sum::<f64>();
    }
    assert!(within / between <= 0.2, "ratio {}", within / between);
}

#[test]
fn training_rows_embed_as_k_alpha() {
    let (train, _, _) = benchmark();
    let model = gda_fit(&train, KernelSpec::BinetCauchy, None, 2).unwrap();
    let direct = model.gram.matmul(&model.alpha);
    let via_rows = gda_embed(&model, &model.kernel_rows(train.points()).unwrap()).unwrap();
    assert!(direct.max_abs_diff(&via_rows) <= 1e-9 * direct.max_abs());
    assert!(gda_embed(&model, &Matrix::zeros(2, 5)).is_err());
}

#[test]
fn fitted_direction_beats_random_directions() {
    let (train, _, _) = benchmark();
    let k = gram(KernelSpec::Projection, train.points())
        .unwrap()
        .into_entries();
    let eps = default_epsilon(&k);
    let (alpha, q) = discriminant_directions(&k, train.class_indices(), eps, 2).unwrap();
    let (sw, sb) = scatter_matrices(&k, train.class_indices()).unwrap();
    let reg = sw.add(&Matrix::identity(k.rows()).scale(eps * eps));
    let quotient = |a: &[f64]| -> f64 {
        let sa = sb.matvec(a);
        let ra = reg.matvec(a);
        let num: f64 = a.iter().zip(&sa).map(|(x, y)| x * y).sum();
        let den: f64 = a.iter().zip(&ra).map(|(x, y)| x * y).sum();
        num / den
    };
    let a1 = alpha.column(0);
    assert!((quotient(&a1) - q[0]).abs() <= 1e-6 * q[0]);
    // normalization αᵀ(S_w + ε²I)α = 1
    let ra = reg.matvec(&a1);
    assert!((a1.iter().zip(&ra).map(|(x, y)| x * y).sum::<f64>() - 1.0).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for _ in 0..100 {
        let r = Matrix::random_normal(k.rows(), 1, &mut rng).column(0);
        assert!(quotient(&r) <= q[0] * (1.0 + 1e-9));
    }
    assert!(q[0] >= q[1]);
}

#[test]
fn between_scatter_rank_is_at_most_classes_minus_one() {
    let (train, _, _) = benchmark();
    let k = gram(KernelSpec::Projection, train.points())
        .unwrap()
        .into_entries();
    let (_, sb) = scatter_matrices(&k, train.class_indices()).unwrap();
    let s = svd_compact(&sb).unwrap().s;
    let rank = s.iter().filter(|&&v| v > 1e-8 * s[0]).count();
    assert!(rank <= 2, "rank {rank}");
}

#[test]
fn predictions_ignore_training_order() {
    let (train, test, _) = benchmark();
    let base = gda_fit(&train, KernelSpec::Projection, None, 2).unwrap();
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(71));
    let shuffled = LabeledGrassmannSet::new(
        order.iter().map(|&i| train.points()[i].clone()).collect(),
        order.iter().map(|&i| train.labels()[i]).collect(),
    )
    .unwrap();
    let other = gda_fit(&shuffled, KernelSpec::Projection, None, 2).unwrap();
    assert_eq!(
        base.classify_points(&test).unwrap(),
        other.classify_points(&test).unwrap()
    );
}

#[test]
fn rotated_representatives_give_the_same_model() {
    let (train, test, _) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let rotated: Vec<GrassmannPoint> = train
        .points()
        .iter()
        .map(|p| p.rotated(&random_orthogonal(p.k(), &mut rng)).unwrap())
        .collect();
    let rotated = LabeledGrassmannSet::new(rotated, train.labels().to_vec()).unwrap();
    let a = gda_fit(&train, KernelSpec::Projection, None, 2).unwrap();
    let b = gda_fit(&rotated, KernelSpec::Projection, None, 2).unwrap();
    assert!(a.gram.max_abs_diff(&b.gram) <= 1e-10);
    let za = a.embed_points(&test).unwrap();
    let zb = b.embed_points(&test).unwrap();
    // eigenvector signs are arbitrary; compare up to per-column sign
    for j in 0..2 {
        let (ca, cb) = (za.column(j), zb.column(j));
        let s = if ca.iter().zip(&cb).map(|(x, y)| x * y).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let diff = ca
            .iter()
            .zip(&cb)
            .map(|(x, y)| (x - s * y).abs())
            .fold(0.0, f64::max);
        let scale = ca.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-6 * scale, "column {j}: {diff}");
    }
    assert_eq!(
        a.classify_points(&test).unwrap(),
        b.classify_points(&test).unwrap()
    );
}

#[test]
fn duplicating_the_training_set_keeps_the_quotient() {
    // feature space of the projection kernel on G(4,1) has dimension 10 < N − C,
    // so the within-class scatter is nonsingular on the range of K and the
    // regularizer is negligible
    let spec = SubspaceClassesSpec {
        classes: 3,
        per_class: 12,
        n: 4,
        k: 1,
        within_angle: 0.3,
        seed: 9,
    };
    let (train, _) = labeled_subspaces(&spec).unwrap();
    let doubled = LabeledGrassmannSet::new(
        train
            .points()
            .iter()
            .chain(train.points())
            .cloned()
            .collect(),
        train
            .labels()
            .iter()
            .chain(train.labels())
            .copied()
            .collect(),
    )
    .unwrap();
    let a = gda_fit(&train, KernelSpec::Projection, Some(1e-6), 2).unwrap();
    let b = gda_fit(&doubled, KernelSpec::Projection, Some(1e-6), 2).unwrap();
    for (qa, qb) in a.quotients.iter().zip(&b.quotients) {
        assert!((qa - qb).abs() <= 1e-6 * qa, "{qa} vs {qb}");
    }
}

#[test]
fn single_class_cannot_be_discriminated() {
    let spec = SubspaceClassesSpec {
        classes: 1,
        per_class: 5,
        ..Default::default()
    };
    let (set, _) = labeled_subspaces(&spec).unwrap();
    assert!(gda_fit(&set, KernelSpec::Projection, None, 1).is_err());
}

#[test]
fn model_round_trips_through_json() {
    let (train, test, _) = benchmark();
    let model = gda_fit(&train, KernelSpec::Projection, None, 2).unwrap();
    let text = serde_json::to_string(&model).unwrap();
    let back: GdaModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back.alpha, model.alpha);
    let rows = model.kernel_rows(&test).unwrap();
    assert_eq!(
        gda_classify(&back, &rows).unwrap(),
        gda_classify(&model, &rows).unwrap()
    );
}

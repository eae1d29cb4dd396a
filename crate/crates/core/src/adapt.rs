//! Domain adaptation along the geodesic between source and target subspaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::manifold::{geodesic_point, log_map, GrassmannPoint};
use crate::numerics::{svd_compact, sym_eig, Matrix};

/// Relative singular-value floor below which PCA directions count as absent.
const RANK_RTOL: f64 = 1e-10;

/// Labeled source data, target data with evaluation-only labels, and the
/// `d`-dimensional PCA subspace of each domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainPair {
    pub source_subspace: GrassmannPoint,
    pub target_subspace: GrassmannPoint,
    pub source_features: Matrix,
    pub source_labels: Vec<usize>,
    pub target_features: Matrix,
    pub target_labels: Vec<usize>,
}

impl DomainPair {
    /// Fits both PCA subspaces (each domain centered separately).
    pub fn from_features(
        source_features: Matrix,
        source_labels: Vec<usize>,
        target_features: Matrix,
        target_labels: Vec<usize>,
        d: usize,
    ) -> Result<Self> {
        let source_subspace = pca_subspace(&source_features, d)?;
        let target_subspace = pca_subspace(&target_features, d)?;
        Self::new(
            source_subspace,
            target_subspace,
            source_features,
            source_labels,
            target_features,
            target_labels,
        )
    }

    pub fn new(
        source_subspace: GrassmannPoint,
        target_subspace: GrassmannPoint,
        source_features: Matrix,
        source_labels: Vec<usize>,
        target_features: Matrix,
        target_labels: Vec<usize>,
    ) -> Result<Self> {
        let n = source_subspace.n();
        if target_subspace.n() != n || target_subspace.k() != source_subspace.k() {
            return Err(dims("source and target subspaces differ in shape"));
        }
        if source_features.cols() != n || target_features.cols() != n {
            return Err(dims(format!(
                "features must have {n} columns to match the subspaces"
            )));
        }
        if source_features.rows() != source_labels.len()
            || target_features.rows() != target_labels.len()
        {
            return Err(dims("one label per feature row is required"));
        }
        Ok(Self {
            source_subspace,
            target_subspace,
            source_features,
            source_labels,
            target_features,
            target_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.source_subspace.k()
    }
}

/// Top-`d` principal directions of the row-centered features.
///
/// `d = n` returns the whole space.
pub fn pca_subspace(features: &Matrix, d: usize) -> Result<GrassmannPoint> {
    let (rows, n) = features.shape();
    if rows < 2 {
        return Err(Error::InvalidMatrix(
            "PCA needs at least two samples".into(),
        ));
    }
    if d == 0 || d > n {
        return Err(Error::InvalidConfig(format!(
            "subspace dimension {d} must lie in 1..={n}"
        )));
    }
    if d == n {
        return GrassmannPoint::from_orthonormal(Matrix::identity(n));
    }
    let mut mean = vec![0.0; n];
    for i in 0..rows {
        for (m, v) in mean.iter_mut().zip(features.row(i)) {
            *m += v / rows as f64;
        }
    }
    let centered = Matrix::from_fn(rows, n, |i, j| features[(i, j)] - mean[j]);
    let svd = svd_compact(&centered)?;
    if svd.s.len() < d || svd.s[d - 1] <= RANK_RTOL * svd.s[0] {
        return Err(Error::InvalidConfig(format!(
            "requested {d} principal directions but the centered data has numerical rank {}",
            svd.s.iter().filter(|&&s| s > RANK_RTOL * svd.s[0]).count()
        )));
    }
    let cols: Vec<usize> = (0..d).collect();
    GrassmannPoint::from_orthonormal(svd.v.select_columns(&cols))
}

/// Subspaces `Φ(t)` on the geodesic from the source to the target subspace.
pub fn sgf_sample(pair: &DomainPair, ts: &[f64]) -> Result<Vec<GrassmannPoint>> {
    let xs = &pair.source_subspace;
    let delta = log_map(xs, &pair.target_subspace)?;
    ts.iter().map(|&t| geodesic_point(xs, &delta, t)).collect()
}

/// Gauss–Legendre nodes (ascending) and weights on `[0, 1]`.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let nf = count as f64;
    for i in 1..=count {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            // P_count(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=count {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = (p1, p0);
            deriv = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / deriv;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push((x + 1.0) / 2.0);
        weights.push(1.0 / ((1.0 - x * x) * deriv * deriv));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    (
        order.iter().map(|&i| nodes[i]).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GfkMatrix {
    pub g: Matrix,
    pub quadrature_nodes: usize,
}

pub const DEFAULT_NODES: usize = 20;

/// `G = ∫₀¹ Φ(t)Φ(t)ᵀ dt` by Gauss–Legendre quadrature.
pub fn gfk_matrix(pair: &DomainPair, nodes: usize) -> Result<GfkMatrix> {
    if nodes == 0 {
        return Err(Error::InvalidConfig(
            "quadrature needs at least one node".into(),
        ));
    }
    let (ts, ws) = gauss_legendre(nodes);
    let points = sgf_sample(pair, &ts)?;
    let n = pair.source_subspace.n();
    let mut g = Matrix::zeros(n, n);
    for (p, w) in points.iter().zip(&ws) {
        g = g.axpy(*w, &p.projector());
    }
    let g = g.symmetrized();
    let eig = sym_eig(&g)?;
    let (lo, hi) = (eig.values[0], eig.values[n - 1]);
    if lo < -1e-8 * hi {
        return Err(Error::NumericalKernel {
            min_eig: lo,
            max_eig: hi,
        });
    }
    let rank = eig.values.iter().filter(|&&v| v > 1e-10 * hi).count();
    log::debug!(
        "GFK matrix: numerical rank {rank} (subspace dimension {})",
        pair.dim()
    );
    Ok(GfkMatrix {
        g,
        quadrature_nodes: nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AdaptMethod {
    NoAdapt,
    Sgf { t: f64 },
    Gfk { nodes: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptOutcome {
    pub method: AdaptMethod,
    pub predictions: Vec<usize>,
    pub accuracy: f64,
    /// Accuracy restricted to each target class; `None` for classes absent from the target.
    pub per_class_accuracy: Vec<Option<f64>>,
}

/// Nearest neighbour under `d(i, j)`; ties go to the lowest training index.
fn nearest_neighbour(
    train_labels: &[usize],
    queries: usize,
    dist: impl Fn(usize, usize) -> f64 + Sync,
) -> Vec<usize> {
    (0..queries)
        .into_par_iter()
        .map(|q| {
            let mut best = (0, f64::INFINITY);
            for i in 0..train_labels.len() {
                let d = dist(q, i);
                if d < best.1 {
                    best = (i, d);
                }
            }
            train_labels[best.0]
        })
        .collect()
}

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// 1-NN with Euclidean distance between rows.
pub fn nn_classify(train: &Matrix, train_labels: &[usize], queries: &Matrix) -> Vec<usize> {
    nearest_neighbour(train_labels, queries.rows(), |q, i| {
        squared_euclidean(queries.row(q), train.row(i))
    })
}

/// 1-NN with `d²(x, y) = xᵀGx + yᵀGy − 2xᵀGy`.
pub fn nn_classify_kernel(
    g: &Matrix,
    train: &Matrix,
    train_labels: &[usize],
    queries: &Matrix,
) -> Vec<usize> {
    let gt = train.matmul(g);
    let self_train: Vec<f64> = (0..train.rows())
        .map(|i| crate::numerics::dot(gt.row(i), train.row(i)))
        .collect();
    let gq = queries.matmul(g);
    let self_query: Vec<f64> = (0..queries.rows())
        .map(|i| crate::numerics::dot(gq.row(i), queries.row(i)))
        .collect();
    let cross = gq.matmul_t(train);
    nearest_neighbour(train_labels, queries.rows(), |q, i| {
        self_query[q] + self_train[i] - 2.0 * cross[(q, i)]
    })
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

fn per_class(predicted: &[usize], truth: &[usize]) -> Vec<Option<f64>> {
    let c = truth.iter().max().map_or(0, |m| m + 1);
    (0..c)
        .map(|class| {
            let idx: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == class).collect();
            if idx.is_empty() {
                None
            } else {
                Some(
                    idx.iter().filter(|&&i| predicted[i] == class).count() as f64
                        / idx.len() as f64,
                )
            }
        })
        .collect()
}

fn predict(pair: &DomainPair, method: AdaptMethod) -> Result<Vec<usize>> {
    Ok(match method {
        AdaptMethod::NoAdapt => nn_classify(
            &pair.source_features,
            &pair.source_labels,
            &pair.target_features,
        ),
        AdaptMethod::Sgf { t } => {
            let phi = sgf_sample(pair, &[t])?.remove(0);
            let src = pair.source_features.matmul(phi.basis());
            let tgt = pair.target_features.matmul(phi.basis());
            nn_classify(&src, &pair.source_labels, &tgt)
        }
        AdaptMethod::Gfk { nodes } => {
            let g = gfk_matrix(pair, nodes)?;
            nn_classify_kernel(
                &g.g,
                &pair.source_features,
                &pair.source_labels,
                &pair.target_features,
            )
        }
    })
}

/// Classifies the target domain from labeled source data. Target labels are
/// only used to score the predictions.
pub fn adapt_classify(pair: &DomainPair, method: AdaptMethod) -> Result<AdaptOutcome> {
    let predictions = predict(pair, method)?;
    Ok(AdaptOutcome {
        method,
        accuracy: accuracy(&predictions, &pair.target_labels),
        per_class_accuracy: per_class(&predictions, &pair.target_labels),
        predictions,
    })
}

/// Source-only model selection for SGF: 2-fold cross-validated 1-NN accuracy
/// on the source domain after projecting onto `Φ(t)`. Folds alternate within
/// each class. Returns the best `t` (ties to the earliest) and all scores.
pub fn select_sgf_t(pair: &DomainPair, grid: &[f64]) -> Result<(f64, Vec<f64>)> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty SGF t grid".into()));
    }
    let labels = &pair.source_labels;
    let mut seen = vec![0usize; labels.iter().max().map_or(0, |m| m + 1)];
    let mut folds: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        folds[seen[l] % 2].push(i);
        seen[l] += 1;
    }
    let phis = sgf_sample(pair, grid)?;
    let scores: Vec<f64> = phis
        .par_iter()
        .map(|phi| {
            let proj = pair.source_features.matmul(phi.basis());
            let mut hits = 0;
            for f in 0..2 {
                let (train, test) = (&folds[f], &folds[1 - f]);
                let tl: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
                let pred = nn_classify(&proj.select_rows(train), &tl, &proj.select_rows(test));
                hits += pred
                    .iter()
                    .zip(test)
                    .filter(|(p, &i)| **p == labels[i])
                    .count();
            }
            hits as f64 / labels.len() as f64
        })
        .collect();
    let best = (0..grid.len())
        .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
        .expect("nonempty grid");
    Ok((grid[best], scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        for count in [1, 2, 5, 20, 40] {
            let (t, w) = gauss_legendre(count);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(t.windows(2).all(|p| p[0] < p[1]));
            // exact up to degree 2·count − 1
            let deg = 2 * count - 1;
            let integral: f64 = t
                .iter()
                .zip(&w)
                .map(|(x, wi)| wi * x.powi(deg as i32))
                .sum();
            assert!(
                (integral - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13,
                "{count}"
            );
        }
    }

    #[test]
    fn line_pca_recovers_direction() {
        let dir = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
        let rows: Vec<Vec<f64>> = [-2.0, -0.5, 0.3, 1.0, 4.0]
            .iter()
            .map(|s| dir.iter().map(|d| s * d + 1.0).collect())
            .collect();
        let p = pca_subspace(&Matrix::from_rows(&rows).unwrap(), 1).unwrap();
        let dot: f64 = (0..3).map(|i| p.basis()[(i, 0)] * dir[i]).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
        assert!(pca_subspace(&Matrix::from_rows(&rows).unwrap(), 2).is_err());
    }

    #[test]
    fn full_dimension_pca_is_the_whole_space() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 5.0]]).unwrap();
        let p = pca_subspace(&m, 2).unwrap();
        assert!(p.same_subspace(&GrassmannPoint::from_orthonormal(Matrix::identity(2)).unwrap()));
    }

    #[test]
    fn nearest_neighbour_ties_go_to_first() {
        let train = Matrix::from_rows(&[[1.0], [-1.0]]).unwrap();
        let q = Matrix::from_rows(&[[0.0], [0.9]]).unwrap();
        assert_eq!(nn_classify(&train, &[4, 7], &q), vec![4, 4]);
        assert_eq!(
            nn_classify(&train, &[4, 7], &Matrix::from_rows(&[[-0.2]]).unwrap()),
            vec![7]
        );
    }

    #[test]
    fn method_json() {
        let m: AdaptMethod = serde_json::from_str(r#"{"method":"sgf","t":0.4}"#).unwrap();
        assert_eq!(m, AdaptMethod::Sgf { t: 0.4 });
        let m: AdaptMethod = serde_json::from_str(r#"{"method":"no-adapt"}"#).unwrap();
        assert_eq!(m, AdaptMethod::NoAdapt);
    }
}

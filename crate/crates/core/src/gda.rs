//! Kernel discriminant analysis for sets of subspaces.

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::kernels::{cross_kernel, gram, KernelSpec};
use crate::manifold::GrassmannPoint;
use crate::numerics::{sym_eig, Matrix};

/// Subspaces with class labels `0..C`, every class nonempty.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawLabeledSet")]
pub struct LabeledGrassmannSet {
    points: Vec<GrassmannPoint>,
    labels: Vec<usize>,
    #[serde(skip_serializing)]
    classes: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawLabeledSet {
    points: Vec<GrassmannPoint>,
    labels: Vec<usize>,
}

impl TryFrom<RawLabeledSet> for LabeledGrassmannSet {
    type Error = Error;

    fn try_from(raw: RawLabeledSet) -> Result<Self> {
        Self::new(raw.points, raw.labels)
    }
}

impl LabeledGrassmannSet {
    pub fn new(points: Vec<GrassmannPoint>, labels: Vec<usize>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(dims(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidConfig("labeled set is empty".into()))?;
        if points
            .iter()
            .any(|p| p.n() != first.n() || p.k() != first.k())
        {
            return Err(dims("points of a labeled set must share n and k"));
        }
        let c = labels.iter().max().map_or(0, |m| m + 1);
        let mut classes = vec![Vec::new(); c];
        for (i, &l) in labels.iter().enumerate() {
            classes[l].push(i);
        }
        if let Some(empty) = classes.iter().position(Vec::is_empty) {
            return Err(Error::InvalidConfig(format!(
                "class {empty} has no members"
            )));
        }
        Ok(Self {
            points,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn points(&self) -> &[GrassmannPoint] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Member indices per class.
    pub fn class_indices(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

/// Within- and between-class scatter in kernel form:
/// `S_w = K(I − V)K`, `S_b = K(V − 1/N)K`, where `V` averages within each class.
pub fn scatter_matrices(k: &Matrix, classes: &[Vec<usize>]) -> Result<(Matrix, Matrix)> {
    let n = k.rows();
    if !k.is_square() || classes.iter().flatten().any(|&i| i >= n) {
        return Err(dims("class index sets do not fit the kernel matrix"));
    }
    let mut v = Matrix::zeros(n, n);
    for members in classes {
        let w = 1.0 / members.len() as f64;
        for &i in members {
            for &j in members {
                v[(i, j)] = w;
            }
        }
    }
    let within = Matrix::identity(n).sub(&v);
    let between = v.map(|x| x - 1.0 / n as f64);
    let sw = k.matmul(&within).matmul(k).symmetrized();
    let sb = k.matmul(&between).matmul(k).symmetrized();
    Ok((sw, sb))
}

/// Top-`m` solutions of `S_b α = λ (S_w + ε²I) α`, normalized so that
/// `αᵀ(S_w + ε²I)α = 1`. Returns the `N`×`m` coefficient matrix and the
/// quotients in descending order.
pub fn discriminant_directions(
    k: &Matrix,
    classes: &[Vec<usize>],
    epsilon: f64,
    m: usize,
) -> Result<(Matrix, Vec<f64>)> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let c = classes.len();
    if m == 0 || m + 1 > c {
        return Err(Error::InvalidConfig(format!(
            "requested {m} discriminant directions but the between-class scatter of {c} classes has rank at most {}",
            c.saturating_sub(1)
        )));
    }
    let n = k.rows();
    let (sw, sb) = scatter_matrices(k, classes)?;
    let reg = sw.add(&Matrix::identity(n).scale(epsilon * epsilon));
    let eig = sym_eig(&reg)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::Degenerate(format!(
            "regularized within-class scatter is not positive definite (min eigenvalue {:e})",
            eig.values[0]
        )));
    }
    let inv_sqrt_vals: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let inv_sqrt = eig
        .vectors
        .scale_columns(&inv_sqrt_vals)
        .matmul_t(&eig.vectors);
    let whitened = inv_sqrt.matmul(&sb).matmul(&inv_sqrt).symmetrized();
    let top = sym_eig(&whitened)?;
    let quotients: Vec<f64> = top.values.iter().rev().take(m).copied().collect();
    let alpha = inv_sqrt.matmul(&top.largest(m));
    Ok((alpha, quotients))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GdaModel {
    pub spec: KernelSpec,
    pub epsilon: f64,
    pub train_points: Vec<GrassmannPoint>,
    pub train_labels: Vec<usize>,
    /// Training Gram matrix `K`.
    pub gram: Matrix,
    /// `N`×`m` coefficients, one discriminant direction per column.
    pub alpha: Matrix,
    /// Rayleigh quotients of the columns of `alpha`, descending.
    pub quotients: Vec<f64>,
    /// `C`×`m` class centroids of the embedded training data.
    pub class_means: Matrix,
}

impl GdaModel {
    pub fn dim(&self) -> usize {
        self.alpha.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_means.rows()
    }

    /// `k(query, train_i)` rows for new points.
    pub fn kernel_rows(&self, queries: &[GrassmannPoint]) -> Result<Matrix> {
        cross_kernel(self.spec, queries, &self.train_points)
    }

    pub fn embed_points(&self, queries: &[GrassmannPoint]) -> Result<Matrix> {
        gda_embed(self, &self.kernel_rows(queries)?)
    }

    pub fn classify_points(&self, queries: &[GrassmannPoint]) -> Result<Vec<usize>> {
        gda_classify(self, &self.kernel_rows(queries)?)
    }
}

/// Default regularizer `1e-4 · tr(K)/N`.
pub fn default_epsilon(k: &Matrix) -> f64 {
    1e-4 * k.trace() / k.rows() as f64
}

pub fn gda_fit(
    data: &LabeledGrassmannSet,
    spec: KernelSpec,
    epsilon: Option<f64>,
    m: usize,
) -> Result<GdaModel> {
    let k = gram(spec, data.points())?.into_entries();
    let epsilon = epsilon.unwrap_or_else(|| default_epsilon(&k));
    let (alpha, quotients) = discriminant_directions(&k, data.class_indices(), epsilon, m)?;
    let embedded = k.matmul(&alpha);
    let mut class_means = Matrix::zeros(data.num_classes(), m);
    for (c, members) in data.class_indices().iter().enumerate() {
        for &i in members {
            for j in 0..m {
                class_means[(c, j)] += embedded[(i, j)] / members.len() as f64;
            }
        }
    }
    Ok(GdaModel {
        spec,
        epsilon,
        train_points: data.points().to_vec(),
        train_labels: data.labels().to_vec(),
        gram: k,
        alpha,
        quotients,
        class_means,
    })
}

/// Coordinates `kernel_rows · A`.
pub fn gda_embed(model: &GdaModel, kernel_rows: &Matrix) -> Result<Matrix> {
    if kernel_rows.cols() != model.alpha.rows() {
        return Err(dims(format!(
            "kernel rows have {} columns but the model was trained on {} points",
            kernel_rows.cols(),
            model.alpha.rows()
        )));
    }
    Ok(kernel_rows.matmul(&model.alpha))
}

/// Nearest class centroid in the embedded space; ties go to the lowest class id.
pub fn gda_classify(model: &GdaModel, kernel_rows: &Matrix) -> Result<Vec<usize>> {
    let z = gda_embed(model, kernel_rows)?;
    Ok((0..z.rows())
        .map(|q| {
            let row = z.row(q);
            let mut best = (0, f64::INFINITY);
            for c in 0..model.num_classes() {
                let d: f64 = row
                    .iter()
                    .zip(model.class_means.row(c))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.1 {
                    best = (c, d);
                }
            }
            best.0
        })
        .collect())
}

//! Spectral clustering, sparse spectral clustering on G(N, k), and Grassmann k-means.

use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::manifold::GrassmannPoint;
use crate::numerics::{dot, sym_eig, Matrix};
use crate::optim::{minimize, Objective, OptimConfig, OptimResult};

/// Symmetric nonnegative weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct Affinity {
    w: Matrix,
}

impl Affinity {
    pub fn new(w: Matrix) -> Result<Self> {
        if !w.is_square() {
            return Err(dims(format!(
                "affinity must be square, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        let asym = w.asymmetry();
        if asym > 1e-12 * w.max_abs().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        if w.as_slice().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidMatrix(
                "affinity entries must be finite and nonnegative".into(),
            ));
        }
        if w.diagonal().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidMatrix(
                "affinity diagonal must be zero".into(),
            ));
        }
        Ok(Self { w })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.w.rows() == 0
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.w.row(i).iter().sum())
            .collect()
    }
}

impl TryFrom<Matrix> for Affinity {
    type Error = Error;

    fn try_from(w: Matrix) -> Result<Self> {
        Self::new(w)
    }
}

impl From<Affinity> for Matrix {
    fn from(a: Affinity) -> Matrix {
        a.w
    }
}

/// `W_ij = exp(−‖xᵢ − xⱼ‖² / (2σ²))` over the rows of `vectors`, zero diagonal.
pub fn affinity(vectors: &Matrix, sigma: f64) -> Result<Affinity> {
    let n = vectors.rows();
    if n < 2 {
        return Err(Error::InvalidConfig(
            "affinity needs at least two points".into(),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let scale = 1.0 / (2.0 * sigma * sigma);
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = vectors
                .row(i)
                .iter()
                .zip(vectors.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let v = (-d2 * scale).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(Affinity { w })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LaplacianKind {
    #[default]
    Unnormalized,
    Normalized,
}

impl FromStr for LaplacianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unnormalized" => Ok(Self::Unnormalized),
            "normalized" => Ok(Self::Normalized),
            other => Err(Error::InvalidConfig(format!(
                "unknown Laplacian '{other}' (expected unnormalized or normalized)"
            ))),
        }
    }
}

/// `D − W`, or `I − D^{-1/2} W D^{-1/2}` with `0^{-1/2} = 0` for isolated vertices.
pub fn laplacian(w: &Affinity, kind: LaplacianKind) -> Matrix {
    let n = w.len();
    let deg = w.degrees();
    let wm = w.matrix();
    match kind {
        LaplacianKind::Unnormalized => {
            Matrix::from_fn(n, n, |i, j| if i == j { deg[i] } else { -wm[(i, j)] })
        }
        LaplacianKind::Normalized => {
            let s: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
                .collect();
            Matrix::from_fn(n, n, |i, j| {
                let off = -s[i] * wm[(i, j)] * s[j];
                if i == j {
                    1.0 + off
                } else {
                    off
                }
            })
        }
    }
}

/// Eigenvectors of the `k` smallest eigenvalues of `l`.
pub fn spectral_embed(l: &Matrix, k: usize) -> Result<GrassmannPoint> {
    if k == 0 || k >= l.rows() {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension {k} must lie in 1..{}",
            l.rows()
        )));
    }
    let eig = sym_eig(l)?;
    GrassmannPoint::from_orthonormal(eig.smallest(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SscConfig {
    pub k: usize,
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub optim: OptimConfig,
    pub normalize_rows: bool,
}

impl Default for SscConfig {
    fn default() -> Self {
        Self {
            k: 3,
            beta: 0.01,
            mu: 1e-3,
            sigma: 1.6,
            optim: OptimConfig::default(),
            normalize_rows: true,
        }
    }
}

impl SscConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        self.optim.validate()
    }
}

/// `⟨UUᵀ, L⟩ + β Σᵢⱼ h_μ((UUᵀ)ᵢⱼ)` with `h_μ(x) = √(x² + μ²) − μ`.
pub struct SscObjective<'a> {
    pub laplacian: &'a Matrix,
    pub beta: f64,
    pub mu: f64,
}

impl SscObjective<'_> {
    fn parts(&self, x: &GrassmannPoint, with_grad: bool) -> (f64, Option<Matrix>) {
        let u = x.basis();
        let (n, k) = u.shape();
        let cols: Vec<Vec<f64>> = (0..k).map(|c| u.column(c)).collect();
        let lu = Matrix::from_fn(n, k, |i, c| dot(self.laplacian.row(i), &cols[c]));
        let smooth = u.inner(&lu);
        if self.beta == 0.0 {
            return (smooth, with_grad.then(|| lu.scale(2.0)));
        }
        let (mu, mu2) = (self.mu, self.mu * self.mu);
        // row i of UUᵀ is formed on the fly; the gradient row is Σⱼ h_μ'(pᵢⱼ)·uⱼ
        let rows: Vec<(f64, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |p, i| {
                    // without a gradient only j ≥ i is needed, off-diagonal terms counted twice
                    let from = if with_grad { 0 } else { i };
                    let p = &mut p[from..];
                    p.fill(0.0);
                    for (c, col) in cols.iter().enumerate() {
                        let a = u[(i, c)];
                        p.iter_mut()
                            .zip(&col[from..])
                            .for_each(|(pj, b)| *pj += a * b);
                    }
                    if !with_grad {
                        let diag = (p[0] * p[0] + mu2).sqrt() - mu;
                        let off: f64 = p[1..].iter().map(|pj| (pj * pj + mu2).sqrt() - mu).sum();
                        return (diag + 2.0 * off, Vec::new());
                    }
                    let mut pen = 0.0;
                    for pj in p.iter_mut() {
                        let r = (*pj * *pj + mu2).sqrt();
                        pen += r - mu;
                        *pj /= r;
                    }
                    (pen, cols.iter().map(|col| dot(p, col)).collect())
                },
            )
            .collect();
        let penalty: f64 = rows.iter().map(|r| r.0).sum();
        let value = smooth + self.beta * penalty;
        let grad = with_grad.then(|| {
            let mut g = lu.scale(2.0);
            for (i, (_, hu)) in rows.iter().enumerate() {
                for (gi, h) in g.row_mut(i).iter_mut().zip(hu) {
                    *gi += 2.0 * self.beta * h;
                }
            }
            g
        });
        (value, grad)
    }
}

impl Objective for SscObjective<'_> {
    fn value(&self, x: &GrassmannPoint) -> f64 {
        self.parts(x, false).0
    }

    fn euclidean_grad(&self, x: &GrassmannPoint) -> Matrix {
        self.parts(x, true).1.expect("gradient requested")
    }

    fn value_and_grad(&self, x: &GrassmannPoint) -> (f64, Matrix) {
        let (v, g) = self.parts(x, true);
        (v, g.expect("gradient requested"))
    }
}

/// Minimizes the sparse spectral objective from the spectral embedding.
/// The minimizer of the returned result is `U`.
pub fn sparse_spectral(l: &Matrix, cfg: &SscConfig) -> Result<OptimResult> {
    cfg.validate()?;
    let init = spectral_embed(l, cfg.k)?;
    let obj = SscObjective {
        laplacian: l,
        beta: cfg.beta,
        mu: cfg.mu,
    };
    minimize(&obj, &init, &cfg.optim)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeans {
    pub labels: Vec<usize>,
    pub centers: Matrix,
    pub inertia: f64,
    pub iterations: usize,
}

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_ITERS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the smallest value, ties to the lowest index.
fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Draws an index with probability proportional to `weights`; uniform when all vanish.
fn weighted_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.random_range(0..weights.len());
    }
    let mut target = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if target < w {
            return i;
        }
        target -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn lloyd(points: &Matrix, k: usize, max_iters: usize, rng: &mut impl Rng) -> KMeans {
    let (n, d) = points.shape();
    // k-means++ seeding
    let mut centers = Matrix::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from_slice(points.row(first));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let pick = weighted_index(&nearest, rng);
        centers.row_mut(c).copy_from_slice(points.row(pick));
        for (i, m) in nearest.iter_mut().enumerate() {
            *m = m.min(sq_dist(points.row(i), centers.row(c)));
        }
    }

    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (c, dd) = argmin((0..k).map(|c| sq_dist(points.row(i), centers.row(c))));
            changed |= labels[i] != c;
            labels[i] = c;
            dist[i] = dd;
        }
        if !changed {
            break;
        }
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, v) in sums.row_mut(labels[i]).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // empty cluster takes the point farthest from its center
                let (far, _) = argmin(dist.iter().map(|v| -v));
                centers.row_mut(c).copy_from_slice(points.row(far));
                dist[far] = 0.0;
                labels[far] = c;
            } else {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centers.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
    }
    for i in 0..n {
        labels[i] = argmin((0..k).map(|c| sq_dist(points.row(i), centers.row(c)))).0;
    }
    let inertia = (0..n)
        .map(|i| sq_dist(points.row(i), centers.row(labels[i])))
        .sum();
    KMeans {
        labels,
        centers,
        inertia,
        iterations,
    }
}

fn distinct_rows(points: &Matrix, at_least: usize) -> bool {
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..points.rows() {
        if reps
            .iter()
            .all(|&r| sq_dist(points.row(r), points.row(i)) > 1e-24)
        {
            reps.push(i);
            if reps.len() >= at_least {
                return true;
            }
        }
    }
    false
}

/// Lloyd's algorithm with k-means++ seeding; keeps the restart of least inertia.
pub fn kmeans(
    points: &Matrix,
    k: usize,
    restarts: usize,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<KMeans> {
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidConfig(
            "k and restarts must be positive".into(),
        ));
    }
    if !distinct_rows(points, k) {
        return Err(Error::Degenerate(format!(
            "fewer than {k} distinct rows among {} points",
            points.rows()
        )));
    }
    let mut best: Option<KMeans> = None;
    for _ in 0..restarts {
        let run = lloyd(points, k, max_iters, rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Rows scaled to unit length; zero rows stay zero.
pub fn normalize_rows(u: &Matrix) -> Matrix {
    let mut out = u.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    out
}

/// k-means on the rows of an embedding.
pub fn cluster_rows(
    u: &Matrix,
    k: usize,
    normalize: bool,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let rows = if normalize {
        normalize_rows(u)
    } else {
        u.clone()
    };
    Ok(kmeans(&rows, k, KMEANS_RESTARTS, KMEANS_ITERS, rng)?.labels)
}

/// Embedding and labels from one spectral clustering run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralRun {
    pub embedding: GrassmannPoint,
    pub labels: Vec<usize>,
}

/// Affinity, Laplacian, bottom-`k` eigenvectors, then k-means on the rows.
pub fn spectral_cluster(
    points: &Matrix,
    k: usize,
    sigma: f64,
    kind: LaplacianKind,
    normalize: bool,
    rng: &mut impl Rng,
) -> Result<SpectralRun> {
    let l = laplacian(&affinity(points, sigma)?, kind);
    let embedding = spectral_embed(&l, k)?;
    let labels = cluster_rows(embedding.basis(), k, normalize, rng)?;
    Ok(SpectralRun { embedding, labels })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SscRun {
    pub embedding: GrassmannPoint,
    pub labels: Vec<usize>,
    /// Objective at the spectral initialization.
    pub initial_value: f64,
    pub optim: OptimResult,
}

/// Sparse spectral clustering of the rows of `points` with bandwidth `cfg.sigma`.
pub fn ssc_cluster(
    points: &Matrix,
    cfg: &SscConfig,
    kind: LaplacianKind,
    rng: &mut impl Rng,
) -> Result<SscRun> {
    cfg.validate()?;
    let l = laplacian(&affinity(points, cfg.sigma)?, kind);
    let obj = SscObjective {
        laplacian: &l,
        beta: cfg.beta,
        mu: cfg.mu,
    };
    let init = spectral_embed(&l, cfg.k)?;
    let initial_value = obj.value(&init);
    let optim = minimize(&obj, &init, &cfg.optim)?;
    let labels = cluster_rows(optim.minimizer.basis(), cfg.k, cfg.normalize_rows, rng)?;
    Ok(SscRun {
        embedding: optim.minimizer.clone(),
        labels,
        initial_value,
        optim,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrassmannKMeans {
    pub centers: Vec<GrassmannPoint>,
    pub labels: Vec<usize>,
    /// `Σ d_P²(Xᵢ, C_label(i))` after every assignment step of the winning restart.
    pub cost_trace: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// `d_P²(X, C) = k − ‖XᵀC‖²_F`.
fn projection_sq(x: &GrassmannPoint, c: &GrassmannPoint) -> f64 {
    let m = x.basis().t_matmul(c.basis());
    (x.k() as f64 - m.inner(&m)).max(0.0)
}

/// Top-`k` eigenvectors of `Σ XᵢXᵢᵀ`, the minimizer of `Σ d_P²`.
fn extrinsic_mean(points: &[&GrassmannPoint]) -> Result<GrassmannPoint> {
    let n = points[0].n();
    let mut s = Matrix::zeros(n, n);
    for p in points {
        s = s.add(&p.basis().matmul_t(p.basis()));
    }
    GrassmannPoint::from_orthonormal(sym_eig(&s.symmetrized())?.largest(points[0].k()))
}

fn grassmann_lloyd(
    points: &[GrassmannPoint],
    k: usize,
    iters: usize,
    rng: &mut impl Rng,
) -> Result<GrassmannKMeans> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| projection_sq(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let c = points[weighted_index(&nearest, rng)].clone();
        for (m, p) in nearest.iter_mut().zip(points) {
            *m = m.min(projection_sq(p, &c));
        }
        centers.push(c);
    }

    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = argmin(centers.iter().map(|c| projection_sq(p, c)));
            changed |= labels[i] != c;
            labels[i] = c;
            dist[i] = d;
        }
        // empty clusters take the point farthest from its center
        for c in 0..k {
            if !labels.contains(&c) {
                let (far, _) = argmin(dist.iter().map(|v| -v));
                centers[c] = points[far].clone();
                labels[far] = c;
                dist[far] = 0.0;
                changed = true;
            }
        }
        trace.push(dist.iter().sum());
        if !changed || iterations >= iters {
            break;
        }
        iterations += 1;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&GrassmannPoint> = (0..n)
                .filter(|&i| labels[i] == c)
                .map(|i| &points[i])
                .collect();
            *center = extrinsic_mean(&members)?;
        }
    }
    Ok(GrassmannKMeans {
        cost: *trace.last().expect("one assignment"),
        centers,
        labels,
        cost_trace: trace,
        iterations,
    })
}

/// Lloyd iterations on G(n, k): assign by projection distance, update each
/// center to the extrinsic mean of its members. Best of `KMEANS_RESTARTS`
/// k-means++ seeded runs.
pub fn grassmann_kmeans(
    points: &[GrassmannPoint],
    k: usize,
    iters: usize,
    rng: &mut impl Rng,
) -> Result<GrassmannKMeans> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidConfig(format!(
            "cluster count {k} must lie in 1..={}",
            points.len()
        )));
    }
    for p in &points[1..] {
        points[0].check_compatible(p)?;
    }
    let mut best: Option<GrassmannKMeans> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = grassmann_lloyd(points, k, iters, rng)?;
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let ra = a.iter().max().map_or(0, |m| m + 1);
    let rb = b.iter().max().map_or(0, |m| m + 1);
    let mut t = vec![vec![0usize; rb]; ra];
    for (&x, &y) in a.iter().zip(b) {
        t[x][y] += 1;
    }
    t
}

/// Maximum-weight assignment on a square matrix (Hungarian method with potentials).
/// Returns `col_of[row]`.
fn max_assignment(weight: &[Vec<f64>]) -> Vec<usize> {
    let n = weight.len();
    let cost = |i: usize, j: usize| -weight[i][j];
    let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Fraction of points labeled correctly under the best one-to-one relabeling.
pub fn matched_accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let t = contingency(predicted, truth);
    let size = t.len().max(t.first().map_or(0, |r| r.len()));
    let weight: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| t.get(i).and_then(|r| r.get(j)).map_or(0.0, |&c| c as f64))
                .collect()
        })
        .collect();
    let col_of = max_assignment(&weight);
    let hits: f64 = (0..size).map(|i| weight[i][col_of[i]]).sum();
    hits / truth.len() as f64
}

/// Adjusted Rand index; 1 for identical partitions up to relabeling.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let pairs = |m: usize| (m * m.saturating_sub(1) / 2) as f64;
    let t = contingency(a, b);
    let index: f64 = t.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = t.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..t.first().map_or(0, |r| r.len()))
        .map(|j| pairs(t.iter().map(|r| r[j]).sum()))
        .sum();
    let expected = rows * cols / pairs(n).max(1.0);
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

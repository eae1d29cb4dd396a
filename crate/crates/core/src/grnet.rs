//! A small network whose hidden states are subspaces.
//!
//! Layers, in order: full-rank linear maps `W_k·X` (FRMap), re-orthonormalization
//! by thin QR (ReOrth), projectors `Q_kQ_kᵀ` (ProjMap), their mean over filters
//! (ProjPooling), the top-`d` eigenvectors of the pooled matrix (OrthMap), one
//! more projection and a fully connected softmax classifier.
//!
//! Gradients come from central finite differences, so only toy sizes are practical.

use std::f64::consts::SQRT_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::gda::LabeledGrassmannSet;
use crate::manifold::GrassmannPoint;
use crate::numerics::{qr_thin, svd_compact, sym_eig, Matrix};

/// Below this eigengap the OrthMap output is not a smooth function of the input.
pub const EIGENGAP_WARN: f64 = 1e-6;

/// Filters must satisfy `σ_min ≥ FULL_RANK_TOL·σ_max`.
pub const FULL_RANK_TOL: f64 = 1e-8;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrNetDims {
    /// ambient dimension of the inputs
    pub n: usize,
    /// subspace dimension of the inputs
    pub k_in: usize,
    /// rows of every filter
    pub m: usize,
    /// OrthMap output dimension
    pub d: usize,
    pub classes: usize,
    pub filters: usize,
}

impl GrNetDims {
    pub fn validate(&self) -> Result<()> {
        let GrNetDims {
            n,
            k_in,
            m,
            d,
            classes,
            filters,
        } = *self;
        if filters == 0 || classes < 2 || d == 0 || k_in == 0 {
            return Err(Error::InvalidConfig(
                "a network needs at least one filter, two classes and positive k_in, d".into(),
            ));
        }
        if !(k_in <= m && m <= n) {
            return Err(Error::InvalidConfig(format!(
                "need k_in <= m <= n, got k_in={k_in}, m={m}, n={n}"
            )));
        }
        if d > m {
            return Err(Error::InvalidConfig(format!(
                "OrthMap dimension {d} exceeds filter rows {m}"
            )));
        }
        Ok(())
    }

    /// Length of the vectorized final projection.
    pub fn feature_len(&self) -> usize {
        self.m * (self.m + 1) / 2
    }

    pub fn parameter_count(&self) -> usize {
        self.filters * self.m * self.n + (self.feature_len() + 1) * self.classes
    }
}

/// Filters `W_k` (`m`×`n`) and the classifier, whose last row is the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GrNetParams {
    dims: GrNetDims,
    filters: Vec<Matrix>,
    fc: Matrix,
}

#[derive(Deserialize)]
struct RawParams {
    dims: GrNetDims,
    filters: Vec<Matrix>,
    fc: Matrix,
}

impl TryFrom<RawParams> for GrNetParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        Self::new(raw.dims, raw.filters, raw.fc)
    }
}

impl GrNetParams {
    pub fn new(dims: GrNetDims, filters: Vec<Matrix>, fc: Matrix) -> Result<Self> {
        dims.validate()?;
        if filters.len() != dims.filters {
            return Err(self::dims(format!(
                "expected {} filters, got {}",
                dims.filters,
                filters.len()
            )));
        }
        for (i, w) in filters.iter().enumerate() {
            if w.shape() != (dims.m, dims.n) {
                return Err(self::dims(format!(
                    "filter {i} is {}x{}, expected {}x{}",
                    w.rows(),
                    w.cols(),
                    dims.m,
                    dims.n
                )));
            }
            let s = svd_compact(w)?.s;
            if s[s.len() - 1] < FULL_RANK_TOL * s[0] {
                return Err(Error::InvalidMatrix(format!(
                    "filter {i} is not full rank (singular values {:e}..{:e})",
                    s[s.len() - 1],
                    s[0]
                )));
            }
        }
        if fc.shape() != (dims.feature_len() + 1, dims.classes) {
            return Err(self::dims(format!(
                "classifier is {}x{}, expected {}x{}",
                fc.rows(),
                fc.cols(),
                dims.feature_len() + 1,
                dims.classes
            )));
        }
        Ok(Self { dims, filters, fc })
    }

    /// Gaussian filters scaled by `1/√n` and a small random classifier.
    pub fn init(dims: GrNetDims, rng: &mut impl Rng) -> Result<Self> {
        dims.validate()?;
        let filters = (0..dims.filters)
            .map(|_| Matrix::random_normal(dims.m, dims.n, rng).scale(1.0 / (dims.n as f64).sqrt()))
            .collect();
        let fc = Matrix::random_normal(dims.feature_len() + 1, dims.classes, rng).scale(0.1);
        Self::new(dims, filters, fc)
    }

    pub fn dims(&self) -> &GrNetDims {
        &self.dims
    }

    pub fn filters(&self) -> &[Matrix] {
        &self.filters
    }

    pub fn fc(&self) -> &Matrix {
        &self.fc
    }

    /// Filters in order, then the classifier, each row-major.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dims.parameter_count());
        for w in &self.filters {
            out.extend_from_slice(w.as_slice());
        }
        out.extend_from_slice(self.fc.as_slice());
        out
    }

    /// Inverse of [`flatten`](Self::flatten). Filters are not rank-checked.
    pub fn unflatten(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.dims.parameter_count() {
            return Err(dims(format!(
                "expected {} parameters, got {}",
                self.dims.parameter_count(),
                theta.len()
            )));
        }
        let block = self.dims.m * self.dims.n;
        let filters = (0..self.dims.filters)
            .map(|i| {
                Matrix::new(
                    self.dims.m,
                    self.dims.n,
                    theta[i * block..(i + 1) * block].to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let fc = Matrix::new(
            self.dims.feature_len() + 1,
            self.dims.classes,
            theta[self.dims.filters * block..].to_vec(),
        )?;
        Ok(Self {
            dims: self.dims,
            filters,
            fc,
        })
    }
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, Serialize)]
pub struct GrNetActivation {
    pub frmap: Vec<Matrix>,
    pub reorth: Vec<Matrix>,
    pub projmap: Vec<Matrix>,
    pub pooled: Matrix,
    /// eigenvalues of the pooled matrix, descending
    pub pooled_eigenvalues: Vec<f64>,
    pub orthmap: Matrix,
    pub final_projection: Matrix,
    pub features: Vec<f64>,
    pub logits: Vec<f64>,
}

impl GrNetActivation {
    /// `λ_d − λ_{d+1}`, or `λ_d` when `d = m`.
    pub fn eigengap(&self) -> f64 {
        let d = self.orthmap.cols();
        let next = self.pooled_eigenvalues.get(d).copied().unwrap_or(0.0);
        self.pooled_eigenvalues[d - 1] - next
    }
}

/// Upper triangle, row by row, with off-diagonal entries scaled by `√2`.
///
/// For symmetric `A`, `B` the dot product of the vectors equals `⟨A, B⟩_F`.
pub fn vectorize_symmetric(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        out.push(a[(i, i)]);
        for j in i + 1..n {
            out.push(SQRT_2 * a[(i, j)]);
        }
    }
    out
}

fn fix_signs(u: &mut Matrix) {
    for j in 0..u.cols() {
        let col = u.column(j);
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            let flipped: Vec<f64> = col.iter().map(|v| -v).collect();
            u.set_column(j, &flipped);
        }
    }
}

fn forward(params: &GrNetParams, x: &GrassmannPoint) -> Result<GrNetActivation> {
    let dm = &params.dims;
    if (x.n(), x.k()) != (dm.n, dm.k_in) {
        return Err(dims(format!(
            "network expects points on G({}, {}), got G({}, {})",
            dm.n,
            dm.k_in,
            x.n(),
            x.k()
        )));
    }
    let f = params.filters.len();
    let mut frmap = Vec::with_capacity(f);
    let mut reorth = Vec::with_capacity(f);
    let mut projmap = Vec::with_capacity(f);
    let mut pooled = Matrix::zeros(dm.m, dm.m);
    for (filter, w) in params.filters.iter().enumerate() {
        let a = w.matmul(x.basis());
        let q = match qr_thin(&a) {
            Ok(qr) => qr.q,
            Err(Error::RankDeficient { column }) => {
                return Err(Error::FilterRankDeficient { filter, column })
            }
            Err(e) => return Err(e),
        };
        let p = q.matmul_t(&q);
        pooled = pooled.axpy(1.0 / f as f64, &p);
        frmap.push(a);
        reorth.push(q);
        projmap.push(p);
    }
    let pooled = pooled.symmetrized();
    let eig = sym_eig(&pooled)?;
    let mut u = eig.largest(dm.d);
    fix_signs(&mut u);
    let final_projection = u.matmul_t(&u);
    let features = vectorize_symmetric(&final_projection);
    let bias = dm.feature_len();
    let logits = (0..dm.classes)
        .map(|c| {
            params.fc[(bias, c)]
                + features
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * params.fc[(i, c)])
                    .sum::<f64>()
        })
        .collect();
    Ok(GrNetActivation {
        frmap,
        reorth,
        projmap,
        pooled,
        pooled_eigenvalues: eig.values.iter().rev().copied().collect(),
        orthmap: u,
        final_projection,
        features,
        logits,
    })
}

/// Logits and all intermediate layers for one input subspace.
pub fn grnet_forward(
    params: &GrNetParams,
    x: &GrassmannPoint,
) -> Result<(Vec<f64>, GrNetActivation)> {
    let act = forward(params, x)?;
    let gap = act.eigengap();
    if gap < EIGENGAP_WARN {
        log::warn!("OrthMap eigengap {gap:e} is below {EIGENGAP_WARN:e}; selected eigenvectors are ill-posed");
    }
    Ok((act.logits.clone(), act))
}

/// `−log softmax(logits)[label]`, computed with a shifted log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + logits.iter().map(|z| (z - top).exp()).sum::<f64>().ln();
    lse - logits[label]
}

fn check_labels(params: &GrNetParams, data: &LabeledGrassmannSet) -> Result<()> {
    let c = data.labels().iter().max().map_or(0, |m| m + 1);
    if c > params.dims.classes {
        return Err(Error::InvalidConfig(format!(
            "labels reach class {} but the network has {} outputs",
            c - 1,
            params.dims.classes
        )));
    }
    Ok(())
}

fn mean_loss(params: &GrNetParams, data: &LabeledGrassmannSet) -> Result<f64> {
    let total = data
        .points()
        .iter()
        .zip(data.labels())
        .map(|(x, &l)| forward(params, x).map(|a| cross_entropy(&a.logits, l)))
        .sum::<Result<f64>>()?;
    Ok(total / data.len() as f64)
}

/// Mean softmax cross-entropy over the set.
pub fn grnet_loss(params: &GrNetParams, data: &LabeledGrassmannSet) -> Result<f64> {
    check_labels(params, data)?;
    mean_loss(params, data)
}

/// Central-difference gradient of the mean loss, in [`GrNetParams::flatten`] order.
pub fn fd_gradient(params: &GrNetParams, data: &LabeledGrassmannSet, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::OutOfRange {
            value: h,
            range: "(0, inf)",
        });
    }
    check_labels(params, data)?;
    let theta = params.flatten();
    (0..theta.len())
        .into_par_iter()
        .map_init(
            || theta.clone(),
            |buf, i| {
                let orig = buf[i];
                buf[i] = orig + h;
                let plus = mean_loss(&params.unflatten(buf)?, data);
                buf[i] = orig - h;
                let minus = mean_loss(&params.unflatten(buf)?, data);
                buf[i] = orig;
                Ok((plus? - minus?) / (2.0 * h))
            },
        )
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct GrNetTrainConfig {
    pub epochs: usize,
    pub step: f64,
    pub fd_step: f64,
}

impl Default for GrNetTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            step: 1.0,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl GrNetTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrNetTrained {
    pub params: GrNetParams,
    /// loss before training, then after every epoch
    pub loss_trace: Vec<f64>,
    /// step length in use when training stopped
    pub final_step: f64,
}

/// Smallest step tried before an epoch is declared stalled.
const MIN_STEP: f64 = 1e-12;

/// Full-batch gradient descent with finite-difference gradients.
///
/// A trial step that raises the loss, produces a non-finite loss or a
/// rank-deficient filter is halved and retried. Training ends early once no
/// step above `1e-12` decreases the loss.
pub fn grnet_train(
    params: &GrNetParams,
    data: &LabeledGrassmannSet,
    cfg: &GrNetTrainConfig,
) -> Result<GrNetTrained> {
    cfg.validate()?;
    check_labels(params, data)?;
    let mut current = params.clone();
    let mut loss = mean_loss(&current, data)?;
    if !loss.is_finite() {
        return Err(Error::Training(format!("initial loss is {loss}")));
    }
    let mut trace = vec![loss];
    let mut step = cfg.step;
    'epochs: for epoch in 0..cfg.epochs {
        let grad = fd_gradient(&current, data, cfg.fd_step)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training(format!(
                "non-finite gradient at epoch {epoch}"
            )));
        }
        let theta = current.flatten();
        let mut saw_nan = false;
        loop {
            let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
            let candidate = current.unflatten(&trial)?;
            match mean_loss(&candidate, data) {
                Ok(l) if l.is_finite() && l <= loss => {
                    current = candidate;
                    loss = l;
                    break;
                }
                Ok(l) => saw_nan |= !l.is_finite(),
                Err(Error::FilterRankDeficient { .. }) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
            if step < MIN_STEP {
                if saw_nan {
                    return Err(Error::Training(format!(
                        "loss stayed non-finite down to step {step:e} at epoch {epoch}"
                    )));
                }
                log::info!("no descent step found at epoch {epoch}; stopping");
                break 'epochs;
            }
        }
        log::debug!("epoch {epoch}: loss {loss:.6}, step {step:e}");
        trace.push(loss);
    }
    // filters could only have drifted through rank-checked forward passes,
    // but re-validate so the returned value honours the type invariant
    let params = GrNetParams::new(current.dims, current.filters, current.fc)?;
    Ok(GrNetTrained {
        params,
        loss_trace: trace,
        final_step: step,
    })
}

pub fn grnet_predict(params: &GrNetParams, points: &[GrassmannPoint]) -> Result<Vec<usize>> {
    points
        .par_iter()
        .map(|x| {
            let a = forward(params, x)?;
            Ok(a.logits
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &z)| {
                    if z > best.1 {
                        (i, z)
                    } else {
                        best
                    }
                })
                .0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::random_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_dims() -> GrNetDims {
        GrNetDims {
            n: 6,
            k_in: 2,
            m: 4,
            d: 2,
            classes: 3,
            filters: 2,
        }
    }

    #[test]
    fn vectorization_preserves_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::random_normal(4, 4, &mut rng).symmetrized();
        let b = Matrix::random_normal(4, 4, &mut rng).symmetrized();
        let (va, vb) = (vectorize_symmetric(&a), vectorize_symmetric(&b));
        assert_eq!(va.len(), 10);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        assert!((dot - a.inner(&b)).abs() <= 1e-12);
    }

    #[test]
    fn flatten_round_trips() {
        let p = GrNetParams::init(small_dims(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let theta = p.flatten();
        assert_eq!(theta.len(), small_dims().parameter_count());
        assert_eq!(p.unflatten(&theta).unwrap(), p);
        assert!(p.unflatten(&theta[1..]).is_err());
    }

    #[test]
    fn pooled_spectrum_lies_in_the_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GrNetParams::init(small_dims(), &mut rng).unwrap();
        for _ in 0..20 {
            let x = random_point(6, 2, &mut rng).unwrap();
            let (_, act) = grnet_forward(&p, &x).unwrap();
            assert!(act.pooled.asymmetry() == 0.0);
            assert!(act
                .pooled_eigenvalues
                .iter()
                .all(|&l| (-1e-12..=1.0 + 1e-12).contains(&l)));
            assert!(act.pooled_eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_filter_is_named() {
        let dims = GrNetDims {
            n: 3,
            k_in: 2,
            m: 2,
            d: 1,
            classes: 2,
            filters: 2,
        };
        let good = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let blind = Matrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let p = GrNetParams::new(dims, vec![good, blind], Matrix::zeros(4, 2)).unwrap();
        // span{e1, e2}: the second filter sees only e1
        let x = GrassmannPoint::from_orthonormal(Matrix::eye(3, 2)).unwrap();
        match grnet_forward(&p, &x) {
            Err(Error::FilterRankDeficient { filter, .. }) => assert_eq!(filter, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_shapes_are_rejected() {
        let mut bad = small_dims();
        bad.d = 5;
        assert!(bad.validate().is_err());
        let singular = Matrix::from_rows(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        let dims = GrNetDims {
            n: 3,
            k_in: 1,
            m: 2,
            d: 1,
            classes: 2,
            filters: 1,
        };
        assert!(GrNetParams::new(dims, vec![singular], Matrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn cross_entropy_is_shift_invariant() {
        let z = [1.0, 2.0, 3.0];
        let shifted = [1001.0, 1002.0, 1003.0];
        assert!((cross_entropy(&z, 0) - cross_entropy(&shifted, 0)).abs() <= 1e-12);
        assert!(cross_entropy(&[0.0, 1e4], 1) < 1e-300);
    }
}

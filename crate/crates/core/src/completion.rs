//! Low-rank matrix completion as optimization over the column space.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::manifold::{random_point, GrassmannPoint};
use crate::numerics::{svd_compact, Matrix};
use crate::optim::{minimize, Objective, OptimConfig, OptimStatus, TraceRecord};

/// Singular values below this fraction of the largest are treated as zero in
/// the least-squares solves.
const PINV_RTOL: f64 = 1e-12;

/// Observation pattern of an `n`×`k` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != rows * cols {
            return Err(dims(format!(
                "mask of {} entries for a {rows}x{cols} matrix",
                observed.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            observed,
        })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![true; rows * cols],
        }
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![false; rows * cols],
        }
    }

    /// Reads a 0/1 matrix; any other entry is an error.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        let observed = m
            .as_slice()
            .iter()
            .map(|&v| {
                if v == 1.0 {
                    Ok(true)
                } else if v == 0.0 {
                    Ok(false)
                } else {
                    Err(Error::InvalidMatrix(format!(
                        "mask entries must be 0 or 1, found {v}"
                    )))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            rows: m.rows(),
            cols: m.cols(),
            observed,
        })
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(
            self.rows,
            self.cols,
            |i, j| if self.get(i, j) { 1.0 } else { 0.0 },
        )
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.observed.len() as f64
    }

    pub fn observed_rows(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.get(i, j)).collect()
    }

    pub fn missing_rows(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| !self.get(i, j)).collect()
    }
}

/// A partially observed matrix `P_Ω(X)`: unobserved entries are stored as exact zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedMatrix {
    values: Matrix,
    mask: Mask,
}

impl MaskedMatrix {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Columns with fewer than `r` observed entries.
    pub fn sparse_columns(&self, r: usize) -> Vec<usize> {
        (0..self.values.cols())
            .filter(|&j| self.mask.observed_rows(j).len() < r)
            .collect()
    }
}

/// `P_Ω(X)`: keeps observed entries and zeroes the rest.
pub fn mask_apply(x: &Matrix, omega: &Mask) -> Result<MaskedMatrix> {
    if x.shape() != omega.shape() {
        return Err(dims(format!(
            "matrix {:?} and mask {:?}",
            x.shape(),
            omega.shape()
        )));
    }
    let values = Matrix::from_fn(x.rows(), x.cols(), |i, j| {
        if omega.get(i, j) {
            x[(i, j)]
        } else {
            0.0
        }
    });
    Ok(MaskedMatrix {
        values,
        mask: omega.clone(),
    })
}

/// Inner least-squares solution of the Frobenius objective at a fixed `U`.
#[derive(Debug, Clone)]
pub struct FrobeniusSolve {
    pub value: f64,
    /// `k`×`r` coefficients, row `j` for column `j`.
    pub w: Matrix,
    /// Columns with fewer than `r` observations (minimum-norm solution used).
    pub underdetermined: Vec<usize>,
    /// Largest condition number among the per-column systems.
    pub max_condition: f64,
}

fn check_shapes(u: &GrassmannPoint, m: &MaskedMatrix) -> Result<()> {
    if u.n() != m.values.rows() {
        return Err(dims(format!(
            "subspace in R^{} for a matrix with {} rows",
            u.n(),
            m.values.rows()
        )));
    }
    Ok(())
}

/// `min_W ‖X_Ω − P_Ω(UWᵀ)‖²_F`, solved column by column.
pub fn objective_frobenius(u: &GrassmannPoint, m: &MaskedMatrix) -> Result<FrobeniusSolve> {
    check_shapes(u, m)?;
    let (_, k) = m.shape();
    let r = u.k();
    let mut w = Matrix::zeros(k, r);
    let mut value = 0.0;
    let mut underdetermined = Vec::new();
    let mut max_condition: f64 = 1.0;
    for j in 0..k {
        let obs = m.mask.observed_rows(j);
        if obs.len() < r {
            underdetermined.push(j);
        }
        if obs.is_empty() {
            continue;
        }
        let uo = u.basis().select_rows(&obs);
        let xo: Vec<f64> = obs.iter().map(|&i| m.values[(i, j)]).collect();
        let svd = svd_compact(&uo)?;
        let smax = svd.s[0];
        let cutoff = PINV_RTOL * smax;
        let mut coef = vec![0.0; r];
        let mut smin = f64::INFINITY;
        for (p, &s) in svd.s.iter().enumerate() {
            if s <= cutoff || s == 0.0 {
                continue;
            }
            smin = smin.min(s);
            let proj: f64 = (0..obs.len()).map(|i| svd.u[(i, p)] * xo[i]).sum::<f64>() / s;
            for (q, c) in coef.iter_mut().enumerate() {
                *c += svd.v[(q, p)] * proj;
            }
        }
        if smin.is_finite() {
            max_condition = max_condition.max(smax / smin);
        } else {
            max_condition = f64::INFINITY;
        }
        let fitted = uo.matvec(&coef);
        value += xo
            .iter()
            .zip(&fitted)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        w.row_mut(j).copy_from_slice(&coef);
    }
    log::trace!("frobenius inner solve: max condition {max_condition:e}");
    Ok(FrobeniusSolve {
        value,
        w,
        underdetermined,
        max_condition,
    })
}

/// Per-column breakdown of the projection-distance objective.
#[derive(Debug, Clone)]
pub struct ProjectionEval {
    pub value: f64,
    pub terms: Vec<f64>,
    /// Columns with observations that are all zero; they contribute 0.
    pub zero_columns: Vec<usize>,
    /// Euclidean gradient with respect to the basis.
    pub grad: Matrix,
}

/// `Σⱼ (1 − σ_max(BⱼᵀU))`, where `Bⱼ` spans the zero-filled column `x̂ⱼ`
/// together with the coordinate axes of its missing rows.
pub fn objective_projection(u: &GrassmannPoint, m: &MaskedMatrix) -> Result<f64> {
    Ok(projection_eval(u, m)?.value)
}

pub fn projection_eval(u: &GrassmannPoint, m: &MaskedMatrix) -> Result<ProjectionEval> {
    check_shapes(u, m)?;
    let (n, k) = m.shape();
    let r = u.k();
    let ub = u.basis();
    let mut terms = vec![0.0; k];
    let mut zero_columns = Vec::new();
    let mut grad = Matrix::zeros(n, r);
    for j in 0..k {
        let missing = m.mask.missing_rows(j);
        if missing.len() == n {
            continue;
        }
        let col = m.values.column(j);
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_columns.push(j);
            continue;
        }
        let xhat: Vec<f64> = col.iter().map(|v| v / norm).collect();
        // BᵀU: first row x̂ᵀU, then the missing rows of U
        let mut bt_u = Matrix::zeros(1 + missing.len(), r);
        for q in 0..r {
            bt_u[(0, q)] = (0..n).map(|i| xhat[i] * ub[(i, q)]).sum();
        }
        for (p, &i) in missing.iter().enumerate() {
            bt_u.row_mut(p + 1).copy_from_slice(ub.row(i));
        }
        let svd = svd_compact(&bt_u)?;
        terms[j] = (1.0 - svd.s[0]).clamp(0.0, 1.0);
        // d σ_max / dU = B·u₁·v₁ᵀ
        let u1 = svd.u.column(0);
        let v1 = svd.v.column(0);
        let mut bu = vec![0.0; n];
        for i in 0..n {
            bu[i] = u1[0] * xhat[i];
        }
        for (p, &i) in missing.iter().enumerate() {
            bu[i] += u1[p + 1];
        }
        for i in 0..n {
            if bu[i] == 0.0 {
                continue;
            }
            for q in 0..r {
                grad[(i, q)] -= bu[i] * v1[q];
            }
        }
    }
    if !zero_columns.is_empty() {
        log::warn!("columns {zero_columns:?} have only zero observations and are ignored");
    }
    Ok(ProjectionEval {
        value: terms.iter().sum(),
        terms,
        zero_columns,
        grad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompletionKind {
    Frobenius,
    #[serde(alias = "projection")]
    ProjectionDistance,
}

impl std::str::FromStr for CompletionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(CompletionKind::Frobenius),
            "projection" | "projection-distance" => Ok(CompletionKind::ProjectionDistance),
            other => Err(Error::InvalidConfig(format!(
                "unknown completion objective '{other}' (expected frobenius or projection)"
            ))),
        }
    }
}

pub struct FrobeniusObjective<'a> {
    pub data: &'a MaskedMatrix,
}

impl Objective for FrobeniusObjective<'_> {
    fn value(&self, u: &GrassmannPoint) -> f64 {
        objective_frobenius(u, self.data).map_or(f64::NAN, |s| s.value)
    }

    fn euclidean_grad(&self, u: &GrassmannPoint) -> Matrix {
        self.value_and_grad(u).1
    }

    fn value_and_grad(&self, u: &GrassmannPoint) -> (f64, Matrix) {
        match objective_frobenius(u, self.data) {
            Ok(s) => {
                // −2·P_Ω(X − UWᵀ)·W; the inner minimizer drops out of the derivative
                let fitted = u.basis().matmul_t(&s.w);
                let resid = mask_apply(&self.data.values.sub(&fitted), &self.data.mask)
                    .expect("shapes checked by the solve");
                (s.value, resid.values.matmul(&s.w).scale(-2.0))
            }
            Err(_) => (f64::NAN, Matrix::zeros(u.n(), u.k())),
        }
    }
}

pub struct ProjectionObjective<'a> {
    pub data: &'a MaskedMatrix,
}

impl Objective for ProjectionObjective<'_> {
    fn value(&self, u: &GrassmannPoint) -> f64 {
        objective_projection(u, self.data).unwrap_or(f64::NAN)
    }

    fn euclidean_grad(&self, u: &GrassmannPoint) -> Matrix {
        self.value_and_grad(u).1
    }

    fn value_and_grad(&self, u: &GrassmannPoint) -> (f64, Matrix) {
        match projection_eval(u, self.data) {
            Ok(e) => (e.value, e.grad),
            Err(_) => (f64::NAN, Matrix::zeros(u.n(), u.k())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub value: f64,
    pub iterations: usize,
    pub status: OptimStatus,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletionResult {
    pub u: GrassmannPoint,
    pub w: Matrix,
    pub x_hat: Matrix,
    /// Value of the chosen objective at `u`.
    pub residual: f64,
    pub objective_kind: CompletionKind,
    pub status: OptimStatus,
    /// Index into `restarts` of the returned run.
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// Multi-start minimization over G(n, r); the best restart wins, ties to the
/// earliest. Restarts run in parallel from seeds drawn up front, so the result
/// does not depend on the thread count.
pub fn complete(
    m: &MaskedMatrix,
    r: usize,
    kind: CompletionKind,
    cfg: &OptimConfig,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<CompletionResult> {
    let (n, k) = m.shape();
    if r == 0 || r > n.min(k) {
        return Err(Error::InvalidConfig(format!(
            "rank {r} must lie in 1..={}",
            n.min(k)
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidConfig(
            "at least one restart is required".into(),
        ));
    }
    cfg.validate()?;
    let sparse = m.sparse_columns(r);
    if !sparse.is_empty() {
        log::warn!("columns {sparse:?} have fewer than {r} observations; their coefficients are not identifiable");
    }
    let seeds: Vec<u64> = (0..restarts).map(|_| rng.random()).collect();
    let runs: Vec<(GrassmannPoint, RestartSummary)> = seeds
        .par_iter()
        .map(|&seed| {
            let init = random_point(n, r, &mut ChaCha8Rng::seed_from_u64(seed))?;
            let res = match kind {
                CompletionKind::Frobenius => minimize(&FrobeniusObjective { data: m }, &init, cfg)?,
                CompletionKind::ProjectionDistance => {
                    minimize(&ProjectionObjective { data: m }, &init, cfg)?
                }
            };
            let summary = RestartSummary {
                seed,
                value: res.value,
                iterations: res.iterations,
                status: res.status,
                trace: res.trace,
            };
            Ok((res.minimizer, summary))
        })
        .collect::<Result<_>>()?;

    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.value.total_cmp(&b.1 .1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let u = runs[best].0.clone();
    let solve = objective_frobenius(&u, m)?;
    let x_hat = u.basis().matmul_t(&solve.w);
    let summaries: Vec<RestartSummary> = runs.into_iter().map(|(_, s)| s).collect();
    Ok(CompletionResult {
        residual: summaries[best].value,
        status: summaries[best].status,
        u,
        w: solve.w,
        x_hat,
        objective_kind: kind,
        best_restart: best,
        restarts: summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap()
    }

    #[test]
    fn full_and_empty_masks() {
        let x = sample();
        assert_eq!(mask_apply(&x, &Mask::full(2, 3)).unwrap().values(), &x);
        assert_eq!(
            mask_apply(&x, &Mask::empty(2, 3)).unwrap().values(),
            &Matrix::zeros(2, 3)
        );
    }

    #[test]
    fn masking_is_idempotent() {
        let x = sample();
        let mask = Mask::new(2, 3, vec![true, false, true, false, true, false]).unwrap();
        let once = mask_apply(&x, &mask).unwrap();
        let twice = mask_apply(once.values(), &mask).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.values()[(0, 1)], 0.0);
        assert_eq!(once.values()[(1, 1)], 5.0);
    }

    #[test]
    fn mask_shape_and_entries_are_checked() {
        assert!(mask_apply(&sample(), &Mask::full(3, 2)).is_err());
        assert!(Mask::new(2, 2, vec![true; 3]).is_err());
        assert!(Mask::from_matrix(&Matrix::from_rows(&[[1.0, 0.5]]).unwrap()).is_err());
        let m = Mask::from_matrix(&Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(m.count(), 1);
        assert_eq!(m.to_matrix(), Matrix::from_rows(&[[1.0, 0.0]]).unwrap());
    }

    #[test]
    fn orthogonal_subspace_leaves_everything_unexplained() {
        // data in span(e1, e2), U = span(e3)
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.0, 0.0]]).unwrap();
        let m = mask_apply(&x, &Mask::full(3, 2)).unwrap();
        let u =
            GrassmannPoint::from_orthonormal(Matrix::from_rows(&[[0.0], [0.0], [1.0]]).unwrap())
                .unwrap();
        let s = objective_frobenius(&u, &m).unwrap();
        assert!((s.value - x.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn missing_and_zero_columns_contribute_nothing() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [0.0, 2.0], [0.0, 0.0]]).unwrap();
        let mask = Mask::new(3, 2, vec![true, false, true, false, false, false]).unwrap();
        let m = mask_apply(&x, &mask).unwrap();
        let u = GrassmannPoint::from_orthonormal(Matrix::eye(3, 1)).unwrap();
        let e = projection_eval(&u, &m).unwrap();
        assert_eq!(e.zero_columns, vec![0]);
        assert_eq!(e.terms, vec![0.0, 0.0]);
    }

    #[test]
    fn consistent_column_has_zero_term() {
        let s = 0.6;
        let c = 0.8;
        let x = Matrix::from_rows(&[[s], [c], [0.0]]).unwrap();
        let m = mask_apply(&x, &Mask::full(3, 1)).unwrap();
        let u = GrassmannPoint::from_orthonormal(
            Matrix::from_rows(&[[s, 0.0], [c, 0.0], [0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        assert!(objective_projection(&u, &m).unwrap() < 1e-15);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "projection".parse::<CompletionKind>().unwrap(),
            CompletionKind::ProjectionDistance
        );
        assert_eq!(
            "frobenius".parse::<CompletionKind>().unwrap(),
            CompletionKind::Frobenius
        );
        assert!("nuclear".parse::<CompletionKind>().is_err());
    }
}

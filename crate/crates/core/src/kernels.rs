//! Positive-definite kernels on the Grassmannian and the Gram matrices they induce.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::manifold::{distance, DistanceMetric, GrassmannPoint};
use crate::numerics::{svd_compact, sym_eig, Matrix};

/// Relative tolerance on negative Gram eigenvalues.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec", into = "RawKernelSpec")]
pub enum KernelSpec {
    /// `‖XᵀY‖²_F`.
    Projection,
    /// `det(XᵀY)²`.
    BinetCauchy,
    /// `exp(−d²/(2σ²))` over a projection or chordal distance.
    GaussianOnDistance { sigma: f64, base: DistanceMetric },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64, base: DistanceMetric) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        if !matches!(base, DistanceMetric::Projection | DistanceMetric::Chordal) {
            return Err(Error::InvalidConfig(format!(
                "gaussian kernel over the {base} distance is not positive definite; use projection or chordal"
            )));
        }
        Ok(KernelSpec::GaussianOnDistance { sigma, base })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::GaussianOnDistance { sigma, base } => {
                Self::gaussian(sigma, base).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Projection => f.write_str("projection"),
            KernelSpec::BinetCauchy => f.write_str("binet-cauchy"),
            KernelSpec::GaussianOnDistance { sigma, base } => {
                write!(f, "gaussian(sigma={sigma}, base={base})")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<DistanceMetric>,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        match raw.kind.as_str() {
            "projection" => Ok(KernelSpec::Projection),
            "binet-cauchy" => Ok(KernelSpec::BinetCauchy),
            "gaussian" => {
                let sigma = raw.sigma.ok_or_else(|| {
                    Error::InvalidConfig("gaussian kernel needs \"sigma\"".into())
                })?;
                KernelSpec::gaussian(sigma, raw.base.unwrap_or(DistanceMetric::Projection))
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown kernel kind '{other}' (expected projection, binet-cauchy or gaussian)"
            ))),
        }
    }
}

impl From<KernelSpec> for RawKernelSpec {
    fn from(k: KernelSpec) -> Self {
        match k {
            KernelSpec::Projection => RawKernelSpec {
                kind: "projection".into(),
                sigma: None,
                base: None,
            },
            KernelSpec::BinetCauchy => RawKernelSpec {
                kind: "binet-cauchy".into(),
                sigma: None,
                base: None,
            },
            KernelSpec::GaussianOnDistance { sigma, base } => RawKernelSpec {
                kind: "gaussian".into(),
                sigma: Some(sigma),
                base: Some(base),
            },
        }
    }
}

pub fn kernel_eval(spec: KernelSpec, x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    if x.n() != y.n() || x.k() != y.k() {
        return Err(dims(format!(
            "kernel between G({},{}) and G({},{})",
            x.n(),
            x.k(),
            y.n(),
            y.k()
        )));
    }
    match spec {
        KernelSpec::Projection => {
            let c = x.basis().t_matmul(y.basis());
            Ok(c.as_slice().iter().map(|v| v * v).sum())
        }
        KernelSpec::BinetCauchy => {
            let s = svd_compact(&x.basis().t_matmul(y.basis()))?.s;
            Ok(s.iter().map(|v| v * v).product())
        }
        KernelSpec::GaussianOnDistance { sigma, base } => {
            let d = distance(base, x, y)?;
            Ok((-d * d / (2.0 * sigma * sigma)).exp())
        }
    }
}

/// Symmetric Gram matrix `Kᵢⱼ = k(Xᵢ, Xⱼ)` that passed the PSD check.
#[derive(Debug, Clone)]
pub struct KernelGram {
    entries: Matrix,
    min_eig: f64,
    max_eig: f64,
}

impl KernelGram {
    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn into_entries(self) -> Matrix {
        self.entries
    }

    /// Extreme eigenvalues found by the PSD check.
    pub fn eig_range(&self) -> (f64, f64) {
        (self.min_eig, self.max_eig)
    }
}

fn check_homogeneous(points: &[GrassmannPoint]) -> Result<()> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidConfig("kernel Gram needs at least one point".into()))?;
    if let Some(p) = points
        .iter()
        .find(|p| p.n() != first.n() || p.k() != first.k())
    {
        return Err(dims(format!(
            "mixed points G({},{}) and G({},{})",
            first.n(),
            first.k(),
            p.n(),
            p.k()
        )));
    }
    Ok(())
}

/// Builds and PSD-checks the Gram matrix. The matrix is not repaired: a
/// violation means the kernel is unsuitable for the data.
pub fn gram(spec: KernelSpec, points: &[GrassmannPoint]) -> Result<KernelGram> {
    spec.validate()?;
    check_homogeneous(points)?;
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| kernel_eval(spec, &points[i], &points[j]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut k = Matrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            k[(i, i + off)] = v;
            k[(i + off, i)] = v;
        }
    }
    let eig = sym_eig(&k)?;
    let min_eig = eig.values[0];
    let max_eig = eig.values[n - 1];
    if min_eig < -PSD_TOL * max_eig.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalKernel { min_eig, max_eig });
    }
    Ok(KernelGram {
        entries: k,
        min_eig,
        max_eig,
    })
}

/// Rectangular kernel block `K[i][j] = k(rows[i], cols[j])`.
pub fn cross_kernel(
    spec: KernelSpec,
    rows: &[GrassmannPoint],
    cols: &[GrassmannPoint],
) -> Result<Matrix> {
    spec.validate()?;
    check_homogeneous(rows)?;
    check_homogeneous(cols)?;
    let data: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|r| {
            cols.iter()
                .map(|c| kernel_eval(spec, r, c))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Matrix::from_rows(&data)
}

/// Distance in the feature space: `√max(0, k(X,X) + k(Y,Y) − 2k(X,Y))`.
pub fn kernel_distance(spec: KernelSpec, x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    let kxx = kernel_eval(spec, x, x)?;
    let kyy = kernel_eval(spec, y, y)?;
    let kxy = kernel_eval(spec, x, y)?;
    Ok((kxx + kyy - 2.0 * kxy).max(0.0).sqrt())
}

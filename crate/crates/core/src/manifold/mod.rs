//! The Grassmann manifold G(n, k) of k-dimensional subspaces of ℝⁿ.
//!
//! A point is stored as an `n`×`k` matrix with orthonormal columns (a
//! *representative*). Two representatives `X` and `X·R`, `R ∈ O(k)`, denote the
//! same point, so nothing in this crate compares bases entrywise: subspace
//! equality goes through the projection distance.

mod distance;
pub mod reference;
mod tangent;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::numerics::{io, qr_thin, Matrix};

pub use distance::{
    distance, distance_from_angles, principal_angles, DistanceMetric, PrincipalAngles,
};
pub use tangent::{exp_map, geodesic_point, log_map, project_to_tangent, TangentVector};

/// Max-abs deviation of `XᵀX` from the identity tolerated for a stored basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Projection distance below which two points are the same subspace.
pub const SAME_SUBSPACE_TOL: f64 = 1e-8;

/// A point on G(n, k), held through an orthonormal `n`×`k` basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct GrassmannPoint {
    basis: Matrix,
}

impl GrassmannPoint {
    /// Orthonormalizes a full-column-rank generator; the span is preserved.
    pub fn from_matrix(a: &Matrix) -> Result<Self> {
        if a.cols() > a.rows() {
            return Err(dims(format!(
                "a {}x{} generator cannot span a subspace of dimension {} in R^{}",
                a.rows(),
                a.cols(),
                a.cols(),
                a.rows()
            )));
        }
        let qr = qr_thin(a)?;
        Ok(Self { basis: qr.q })
    }

    /// Wraps a basis that is already orthonormal to [`ORTHONORMAL_TOL`].
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        if basis.cols() > basis.rows() {
            return Err(dims("more basis vectors than ambient dimensions"));
        }
        let err = basis.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidMatrix(format!(
                "basis is not orthonormal (max |XᵀX - I| = {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub(crate) fn new_unchecked(basis: Matrix) -> Self {
        debug_assert!(basis.orthonormality_error() <= 1e-8);
        Self { basis }
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.basis.rows()
    }

    /// Subspace dimension.
    pub fn k(&self) -> usize {
        self.basis.cols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    /// The orthogonal projector `XXᵀ`, the basis-free form of the point.
    pub fn projector(&self) -> Matrix {
        self.basis.matmul_t(&self.basis)
    }

    /// Another representative `X·R` of the same subspace.
    pub fn rotated(&self, r: &Matrix) -> Result<Self> {
        if r.shape() != (self.k(), self.k()) {
            return Err(dims("rotation must be k x k"));
        }
        Self::from_orthonormal(self.basis.matmul(r))
    }

    pub fn same_subspace(&self, other: &GrassmannPoint) -> bool {
        distance(DistanceMetric::Projection, self, other).is_ok_and(|d| d <= SAME_SUBSPACE_TOL)
    }

    pub(crate) fn check_compatible(&self, other: &GrassmannPoint) -> Result<()> {
        if self.n() != other.n() || self.k() != other.k() {
            return Err(dims(format!(
                "points live on G({},{}) and G({},{})",
                self.n(),
                self.k(),
                other.n(),
                other.k()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Matrix> for GrassmannPoint {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Self::from_orthonormal(m)
    }
}

impl From<GrassmannPoint> for Matrix {
    fn from(p: GrassmannPoint) -> Self {
        p.basis
    }
}

/// Uniformly distributed point: QR of a Gaussian matrix.
///
/// The distribution is invariant under left rotations. G(n, n) has a single
/// point, returned as the identity.
pub fn random_point(n: usize, k: usize, rng: &mut impl Rng) -> Result<GrassmannPoint> {
    if k == 0 || k > n {
        return Err(dims(format!("G({n},{k}) requires 1 <= k <= n")));
    }
    if k == n {
        return Ok(GrassmannPoint::new_unchecked(Matrix::identity(n)));
    }
    loop {
        let g = Matrix::random_normal(n, k, rng);
        // rank deficiency has probability zero; redraw if it happens anyway
        if let Ok(qr) = qr_thin(&g) {
            return Ok(GrassmannPoint::new_unchecked(qr.q));
        }
    }
}

/// Haar-distributed orthogonal `k`×`k` matrix.
pub fn random_orthogonal(k: usize, rng: &mut impl Rng) -> Matrix {
    loop {
        let g = Matrix::random_normal(k, k, rng);
        if let Ok(qr) = qr_thin(&g) {
            return qr.q;
        }
    }
}

/// A point read from disk plus whether the file already held an orthonormal basis.
#[derive(Debug, Clone)]
pub struct LoadedPoint {
    pub point: GrassmannPoint,
    pub was_orthonormal: bool,
}

/// Reads a generator matrix from CSV and orthonormalizes it.
pub fn load_point(path: impl AsRef<Path>) -> Result<LoadedPoint> {
    let m = io::read_matrix(path)?;
    let was_orthonormal = m.cols() <= m.rows() && m.orthonormality_error() <= ORTHONORMAL_TOL;
    let point = GrassmannPoint::from_matrix(&m)?;
    Ok(LoadedPoint {
        point,
        was_orthonormal,
    })
}

pub fn save_point(path: impl AsRef<Path>, p: &GrassmannPoint) -> Result<()> {
    io::write_matrix(path, p.basis())
}

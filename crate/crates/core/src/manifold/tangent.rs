use std::f64::consts::FRAC_PI_2;

use crate::error::{dims, Error, Result};
use crate::numerics::{qr_thin, svd_compact, Matrix, Svd};

use super::{GrassmannPoint, ORTHONORMAL_TOL};

/// `‖XᵀΔ‖_max` tolerated for a tangent vector at `X`.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Smallest admissible gap `π/2 − θ_max` for the logarithm map.
pub const CUT_LOCUS_TOL: f64 = 1e-8;

/// Orthonormality drift after a geodesic step that triggers re-orthonormalization.
const DRIFT_TOL: f64 = 1e-12;

/// A direction `Δ` at a base point `X` with `XᵀΔ = 0`, carrying its compact SVD.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: GrassmannPoint,
    delta: Matrix,
    svd: Svd,
}

impl TangentVector {
    pub fn new(base: GrassmannPoint, delta: Matrix) -> Result<Self> {
        if delta.shape() != base.basis().shape() {
            return Err(dims(format!(
                "tangent of shape {:?} at a point of shape {:?}",
                delta.shape(),
                base.basis().shape()
            )));
        }
        let off = base.basis().t_matmul(&delta).max_abs();
        if off > TANGENCY_TOL * delta.max_abs().max(1.0) {
            return Err(Error::InvalidMatrix(format!(
                "direction is not tangent (max |XᵀΔ| = {off:e})"
            )));
        }
        let svd = svd_compact(&delta)?;
        Ok(Self { base, delta, svd })
    }

    pub fn zero(base: GrassmannPoint) -> Self {
        let delta = Matrix::zeros(base.n(), base.k());
        let svd = svd_compact(&delta).expect("SVD of a zero matrix");
        Self { base, delta, svd }
    }

    pub fn base(&self) -> &GrassmannPoint {
        &self.base
    }

    pub fn delta(&self) -> &Matrix {
        &self.delta
    }

    pub fn svd(&self) -> &Svd {
        &self.svd
    }

    /// Frobenius (canonical metric) norm.
    pub fn norm(&self) -> f64 {
        self.svd.s.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    /// Canonical inner product `tr(ΔᵀΓ)` with another tangent at the same base.
    pub fn inner(&self, other: &TangentVector) -> f64 {
        self.delta.inner(&other.delta)
    }

    /// `s·Δ`, reusing the cached decomposition.
    pub fn scaled(&self, s: f64) -> TangentVector {
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        TangentVector {
            base: self.base.clone(),
            delta: self.delta.scale(s),
            svd: Svd {
                u: self.svd.u.scale(sign),
                s: self.svd.s.iter().map(|v| v * s.abs()).collect(),
                v: self.svd.v.clone(),
            },
        }
    }
}

/// `(I − XXᵀ)·G`: the Riemannian gradient for a Euclidean gradient `G`.
pub fn project_to_tangent(x: &GrassmannPoint, g: &Matrix) -> Result<TangentVector> {
    if g.shape() != x.basis().shape() {
        return Err(dims(format!(
            "gradient of shape {:?} for a point of shape {:?}",
            g.shape(),
            x.basis().shape()
        )));
    }
    let b = x.basis();
    // second pass removes the round-off left by the first
    let once = g.sub(&b.matmul(&b.t_matmul(g)));
    let delta = once.sub(&b.matmul(&b.t_matmul(&once)));
    let svd = svd_compact(&delta)?;
    Ok(TangentVector {
        base: x.clone(),
        delta,
        svd,
    })
}

/// Point `Φ(t) = [XV  U]·[cos Σt; sin Σt]·Vᵀ` on the geodesic leaving `X` along `Δ`.
pub fn geodesic_point(x: &GrassmannPoint, delta: &TangentVector, t: f64) -> Result<GrassmannPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfRange {
            value: t,
            range: "[0, 1]",
        });
    }
    if delta.base.basis().shape() != x.basis().shape()
        || delta.base.basis().max_abs_diff(x.basis()) > 1e-12
    {
        return Err(dims("tangent vector is attached to a different base point"));
    }
    Ok(walk(x, delta, t))
}

pub(crate) fn walk(x: &GrassmannPoint, delta: &TangentVector, t: f64) -> GrassmannPoint {
    if t == 0.0 {
        return x.clone();
    }
    let Svd { u, s, v } = &delta.svd;
    let cos: Vec<f64> = s.iter().map(|sv| (sv * t).cos()).collect();
    let sin: Vec<f64> = s.iter().map(|sv| (sv * t).sin()).collect();
    let moved = x
        .basis()
        .matmul(v)
        .scale_columns(&cos)
        .add(&u.scale_columns(&sin))
        .matmul_t(v);
    let drift = moved.orthonormality_error();
    if drift > DRIFT_TOL {
        if let Ok(qr) = qr_thin(&moved) {
            return GrassmannPoint::new_unchecked(qr.q);
        }
    }
    debug_assert!(drift <= ORTHONORMAL_TOL);
    GrassmannPoint::new_unchecked(moved)
}

/// Exponential map: the geodesic endpoint `Φ(1)`.
pub fn exp_map(x: &GrassmannPoint, delta: &TangentVector) -> Result<GrassmannPoint> {
    geodesic_point(x, delta, 1.0)
}

/// Logarithm map: the tangent `Δ` at `X` with `exp_X(Δ) = Y`, via the
/// cosine-sine decomposition of `[XᵀY; (I − XXᵀ)Y]`.
///
/// Fails with [`Error::CutLocus`] when a principal angle is within
/// [`CUT_LOCUS_TOL`] of π/2, where the minimizing geodesic is not unique.
pub fn log_map(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<TangentVector> {
    x.check_compatible(y)?;
    let (n, k) = (x.n(), x.k());
    let xb = x.basis();
    let cs = svd_compact(&xb.t_matmul(y.basis()))?;
    // Y·B splits into X·A·cos Θ plus an orthogonal-complement part with column norms sin Θ
    let yb = y.basis().matmul(&cs.v);
    let once = yb.sub(&xb.matmul(&xb.t_matmul(&yb)));
    let perp = once.sub(&xb.matmul(&xb.t_matmul(&once)));

    let mut delta = Matrix::zeros(n, k);
    let mut max_angle = 0.0_f64;
    for i in 0..k {
        let col = perp.column(i);
        let sin = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let theta = sin.atan2(cs.s[i]);
        max_angle = max_angle.max(theta);
        if sin == 0.0 || theta == 0.0 {
            continue;
        }
        // Δ += θᵢ · (perpᵢ / sinᵢ) · aᵢᵀ
        let a = cs.u.column(i);
        for r in 0..n {
            let w = theta * col[r] / sin;
            if w == 0.0 {
                continue;
            }
            for (c, &ac) in a.iter().enumerate() {
                delta[(r, c)] += w * ac;
            }
        }
    }
    if FRAC_PI_2 - max_angle < CUT_LOCUS_TOL {
        return Err(Error::CutLocus { max_angle });
    }
    let svd = svd_compact(&delta)?;
    Ok(TangentVector {
        base: x.clone(),
        delta,
        svd,
    })
}

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::svd_compact;

use super::GrassmannPoint;

/// Principal angles θ₁ ≤ … ≤ θ_k between two subspaces, in radians.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalAngles {
    angles: Vec<f64>,
}

impl PrincipalAngles {
    /// Builds angles from the singular values of `XᵀY` (any order).
    /// Values are clamped to `[0, 1]` before `arccos` to absorb round-off.
    pub fn from_cosines(cosines: &[f64]) -> Self {
        let mut angles: Vec<f64> = cosines.iter().map(|c| c.clamp(0.0, 1.0).acos()).collect();
        angles.sort_by(f64::total_cmp);
        Self { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Cosines in descending order.
    pub fn cosines(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.cos()).collect()
    }

    pub fn largest(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Subspace distances that are functions of the principal angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMetric {
    /// Geodesic length `(Σθᵢ²)^½`.
    ArcLength,
    /// `arccos |Π cos θᵢ|`.
    FubiniStudy,
    /// `2(Σ sin²(θᵢ/2))^½`.
    Chordal,
    /// `(Σ sin²θᵢ)^½`.
    Projection,
    /// `(1 − Π cos²θᵢ)^½`.
    BinetCauchy,
    /// Chordal distance divided by √2.
    Procrustes,
}

impl DistanceMetric {
    pub const ALL: [DistanceMetric; 6] = [
        DistanceMetric::ArcLength,
        DistanceMetric::FubiniStudy,
        DistanceMetric::Chordal,
        DistanceMetric::Projection,
        DistanceMetric::BinetCauchy,
        DistanceMetric::Procrustes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::ArcLength => "arc-length",
            DistanceMetric::FubiniStudy => "fubini-study",
            DistanceMetric::Chordal => "chordal",
            DistanceMetric::Projection => "projection",
            DistanceMetric::BinetCauchy => "binet-cauchy",
            DistanceMetric::Procrustes => "procrustes",
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistanceMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown metric '{s}' (expected one of arc-length, fubini-study, chordal, projection, binet-cauchy, procrustes)"
                ))
            })
    }
}

/// Angles from the singular values of `XᵀY` (cosines) and of `(I − XXᵀ)Y` (sines).
///
/// `arccos` loses half the digits near zero angles, so angles whose cosine
/// exceeds `1/√2` are read off the sines instead.
pub fn principal_angles(x: &GrassmannPoint, y: &GrassmannPoint) -> Result<PrincipalAngles> {
    x.check_compatible(y)?;
    let xb = x.basis();
    let cos = svd_compact(&xb.t_matmul(y.basis()))?.s;
    let once = y.basis().sub(&xb.matmul(&xb.t_matmul(y.basis())));
    let resid = once.sub(&xb.matmul(&xb.t_matmul(&once)));
    let mut sin = svd_compact(&resid)?.s;
    sin.reverse();
    let mut angles: Vec<f64> = cos
        .iter()
        .zip(&sin)
        .map(|(&c, &s)| {
            if c * c > 0.5 {
                s.clamp(0.0, 1.0).asin()
            } else {
                c.clamp(0.0, 1.0).acos()
            }
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngles { angles })
}

pub fn distance_from_angles(metric: DistanceMetric, angles: &PrincipalAngles) -> f64 {
    let th = angles.angles();
    match metric {
        DistanceMetric::ArcLength => th.iter().map(|t| t * t).sum::<f64>().sqrt(),
        DistanceMetric::FubiniStudy => th
            .iter()
            .map(|t| t.cos())
            .product::<f64>()
            .abs()
            .min(1.0)
            .acos(),
        DistanceMetric::Chordal => chordal(th),
        DistanceMetric::Projection => th.iter().map(|t| t.sin().powi(2)).sum::<f64>().sqrt(),
        DistanceMetric::BinetCauchy => {
            let p: f64 = th.iter().map(|t| t.cos().powi(2)).product();
            (1.0 - p).max(0.0).sqrt()
        }
        DistanceMetric::Procrustes => chordal(th) / SQRT_2,
    }
}

fn chordal(th: &[f64]) -> f64 {
    2.0 * th
        .iter()
        .map(|t| (t / 2.0).sin().powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn distance(metric: DistanceMetric, x: &GrassmannPoint, y: &GrassmannPoint) -> Result<f64> {
    Ok(distance_from_angles(metric, &principal_angles(x, y)?))
}

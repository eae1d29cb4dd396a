//! Two small subspace pairs with known angles and distances, used by self-tests.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::numerics::Matrix;

use super::{DistanceMetric, GrassmannPoint};

/// Lines in the plane at angle π/3: span(1, 0) and span(1/2, √3/2).
pub fn lines_pair() -> (GrassmannPoint, GrassmannPoint) {
    let x = Matrix::from_rows(&[[1.0], [0.0]]).expect("static shape");
    let y = Matrix::from_rows(&[[0.5], [3f64.sqrt() / 2.0]]).expect("static shape");
    (
        GrassmannPoint::from_orthonormal(x).expect("orthonormal by construction"),
        GrassmannPoint::from_orthonormal(y).expect("orthonormal by construction"),
    )
}

/// Two planes in ℝ³ sharing one direction, second cosine 0.07945931.
pub fn planes_pair() -> (GrassmannPoint, GrassmannPoint) {
    let x = Matrix::from_rows(&[
        [-FRAC_1_SQRT_2, -SQRT_2 / 4.0],
        [FRAC_1_SQRT_2, -SQRT_2 / 4.0],
        [0.0, 3f64.sqrt() / 2.0],
    ])
    .expect("static shape");
    let y = Matrix::from_rows(&[[0.0, FRAC_1_SQRT_2], [1.0, 0.0], [0.0, FRAC_1_SQRT_2]])
        .expect("static shape");
    (
        GrassmannPoint::from_orthonormal(x).expect("orthonormal by construction"),
        GrassmannPoint::from_orthonormal(y).expect("orthonormal by construction"),
    )
}

/// Distances of [`planes_pair`] to six decimals.
pub const PLANES_DISTANCES: [(DistanceMetric, f64); 5] = [
    (DistanceMetric::ArcLength, 1.491253),
    (DistanceMetric::FubiniStudy, 1.491253),
    (DistanceMetric::Chordal, 1.356864),
    (DistanceMetric::Projection, 0.996838),
    (DistanceMetric::BinetCauchy, 0.996838),
];

pub const PLANES_SECOND_COSINE: f64 = 0.07945931;

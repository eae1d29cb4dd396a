//! Seeded synthetic data for the experiments. Every generator draws from a
//! `ChaCha8Rng` seeded with its `seed` field, so equal specs give
//! bit-identical output.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adapt::DomainPair;
use crate::completion::{mask_apply, Mask, MaskedMatrix};
use crate::error::{Error, Result};
use crate::gda::LabeledGrassmannSet;
use crate::manifold::{
    distance, exp_map, project_to_tangent, random_point, DistanceMetric, GrassmannPoint,
};
use crate::numerics::{norm, Matrix};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Concentric noisy circles in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingsSpec {
    pub n_total: usize,
    pub radii: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for RingsSpec {
    fn default() -> Self {
        Self {
            n_total: 600,
            radii: vec![1.0, 2.0, 3.0],
            noise_sd: 0.1,
            seed: 0,
        }
    }
}

impl RingsSpec {
    /// Rings at radii 10, 20, 30 with noise 0.5, the scale used for the
    /// sparse spectral clustering experiment.
    pub fn ssc_preset(seed: u64) -> Self {
        Self {
            n_total: 600,
            radii: vec![10.0, 20.0, 30.0],
            noise_sd: 0.5,
            seed,
        }
    }
}

/// Points split as evenly as possible over the rings (earlier rings take the
/// remainder), uniform angle, Gaussian radial noise. Labels are ring indices.
pub fn three_rings(spec: &RingsSpec) -> Result<(Matrix, Vec<usize>)> {
    let rings = spec.radii.len();
    if rings == 0 || spec.n_total < rings {
        return Err(Error::InvalidConfig(format!(
            "need at least one point per ring ({} points, {rings} rings)",
            spec.n_total
        )));
    }
    if !(spec.noise_sd >= 0.0) {
        return Err(Error::InvalidConfig("noise_sd must be nonnegative".into()));
    }
    let mut rng = rng_for(spec.seed);
    let mut points = Matrix::zeros(spec.n_total, 2);
    let mut labels = Vec::with_capacity(spec.n_total);
    let mut row = 0;
    for (ring, &radius) in spec.radii.iter().enumerate() {
        let count = spec.n_total / rings + usize::from(ring < spec.n_total % rings);
        for _ in 0..count {
            let angle = rng.random_range(0.0..TAU);
            let noise: f64 = rng.sample(StandardNormal);
            let r = radius + spec.noise_sd * noise;
            points[(row, 0)] = r * angle.cos();
            points[(row, 1)] = r * angle.sin();
            labels.push(ring);
            row += 1;
        }
    }
    Ok((points, labels))
}

/// `X = A·Bᵀ` with Gaussian factors and a uniform random mask that keeps
/// every column with at least `r` observations.
pub fn low_rank_masked(
    n: usize,
    k: usize,
    r: usize,
    obs_frac: f64,
    seed: u64,
) -> Result<(MaskedMatrix, Matrix)> {
    if r == 0 || r > n.min(k) {
        return Err(Error::InvalidConfig(format!(
            "rank {r} must lie in 1..={}",
            n.min(k)
        )));
    }
    if !(obs_frac > 0.0 && obs_frac <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "observed fraction {obs_frac} must lie in (0, 1]"
        )));
    }
    let mut rng = rng_for(seed);
    let a = Matrix::random_normal(n, r, &mut rng);
    let b = Matrix::random_normal(k, r, &mut rng);
    let x = a.matmul_t(&b);
    for _ in 0..100 {
        let observed: Vec<bool> = (0..n * k).map(|_| rng.random_bool(obs_frac)).collect();
        let mask = Mask::new(n, k, observed)?;
        if (0..k).all(|j| mask.observed_rows(j).len() >= r) {
            return Ok((mask_apply(&x, &mask)?, x));
        }
    }
    Err(Error::Generation(format!(
        "could not draw a mask with at least {r} observations per column at density {obs_frac} in 100 attempts"
    )))
}

/// Draws a point at tangent distance at most `radius` from `center`.
fn perturb(center: &GrassmannPoint, radius: f64, rng: &mut ChaCha8Rng) -> Result<GrassmannPoint> {
    let len = radius * rng.random::<f64>();
    if len == 0.0 {
        return Ok(center.clone());
    }
    let dir = project_to_tangent(center, &Matrix::random_normal(center.n(), center.k(), rng))?;
    let norm = dir.norm();
    if norm == 0.0 {
        return Ok(center.clone());
    }
    exp_map(center, &dir.scaled(len / norm))
}

fn min_pairwise(points: &[GrassmannPoint], metric: DistanceMetric) -> Result<f64> {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(distance(metric, &points[i], &points[j])?);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubspaceClassesSpec {
    pub classes: usize,
    pub per_class: usize,
    pub n: usize,
    pub k: usize,
    /// Largest geodesic distance of a sample from its class prototype.
    pub within_angle: f64,
    pub seed: u64,
}

impl Default for SubspaceClassesSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            per_class: 20,
            n: 10,
            k: 2,
            within_angle: 0.3,
            seed: 0,
        }
    }
}

/// Class prototypes (the most spread of 20 candidate sets by minimum
/// projection distance) and samples scattered around them. Samples are
/// interleaved by class: sample `i` belongs to class `i mod C`.
pub fn labeled_subspaces(
    spec: &SubspaceClassesSpec,
) -> Result<(LabeledGrassmannSet, Vec<GrassmannPoint>)> {
    if spec.classes == 0 || spec.per_class == 0 {
        return Err(Error::InvalidConfig(
            "need at least one class and one sample per class".into(),
        ));
    }
    if !(spec.within_angle >= 0.0) {
        return Err(Error::InvalidConfig(
            "within_angle must be nonnegative".into(),
        ));
    }
    if spec.within_angle >= std::f64::consts::PI / 8.0 {
        log::warn!(
            "within-class angle {} may blur class boundaries",
            spec.within_angle
        );
    }
    let mut rng = rng_for(spec.seed);
    let mut prototypes = Vec::new();
    let mut spread = f64::NEG_INFINITY;
    for _ in 0..20 {
        let cand = (0..spec.classes)
            .map(|_| random_point(spec.n, spec.k, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let s = if spec.classes > 1 {
            min_pairwise(&cand, DistanceMetric::Projection)?
        } else {
            0.0
        };
        if s > spread {
            spread = s;
            prototypes = cand;
        }
    }
    let total = spec.classes * spec.per_class;
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let c = i % spec.classes;
        points.push(perturb(&prototypes[c], spec.within_angle, &mut rng)?);
        labels.push(c);
    }
    Ok((LabeledGrassmannSet::new(points, labels)?, prototypes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainShiftSpec {
    pub n_per_class: usize,
    pub classes: usize,
    /// Ambient feature dimension.
    pub dim: usize,
    pub rotation_deg: f64,
    /// Dimension of the class-bearing subspace and of the fitted PCA subspaces.
    pub latent_dim: usize,
    /// Standard deviation of each class blob in the latent space.
    pub spread: f64,
    /// Standard deviation of isotropic ambient noise.
    pub noise: f64,
    /// Radius of the circle carrying the class means.
    pub mean_radius: f64,
    pub seed: u64,
}

impl Default for DomainShiftSpec {
    fn default() -> Self {
        Self {
            n_per_class: 40,
            classes: 3,
            dim: 20,
            rotation_deg: 60.0,
            latent_dim: 2,
            spread: 0.6,
            noise: 0.3,
            mean_radius: 2.0,
            seed: 0,
        }
    }
}

/// Source: Gaussian class blobs in a random `latent_dim`-subspace plus ambient
/// noise. Target: fresh blobs pushed through a rotation by `rotation_deg` in
/// the plane spanned by one latent direction and one direction orthogonal to
/// the latent subspace.
pub fn two_domain_shift(spec: &DomainShiftSpec) -> Result<DomainPair> {
    if spec.classes < 2 || spec.dim < 4 || spec.n_per_class == 0 {
        return Err(Error::InvalidConfig(
            "need at least 2 classes, dim >= 4 and one sample per class".into(),
        ));
    }
    if spec.latent_dim == 0 || spec.latent_dim >= spec.dim {
        return Err(Error::InvalidConfig(format!(
            "latent_dim must lie in 1..{}",
            spec.dim
        )));
    }
    let mut rng = rng_for(spec.seed);
    let (dim, ld) = (spec.dim, spec.latent_dim);
    let frame = random_point(dim, ld + 1, &mut rng)?;
    let cols: Vec<usize> = (0..ld).collect();
    let basis = frame.basis().select_columns(&cols);
    let inside = frame.basis().column(0);
    let outside = frame.basis().column(ld);

    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|c| {
            let a = TAU * c as f64 / spec.classes as f64;
            let mut m = vec![0.0; ld];
            m[0] = spec.mean_radius * a.cos();
            if ld > 1 {
                m[1] = spec.mean_radius * a.sin();
            }
            m
        })
        .collect();

    let theta = spec.rotation_deg.to_radians();
    let (cos, sin) = (theta.cos(), theta.sin());
    // R = I + (cos−1)(bbᵀ + ooᵀ) + sin(obᵀ − boᵀ)
    let rotate = |v: &[f64]| -> Vec<f64> {
        let pb: f64 = v.iter().zip(&inside).map(|(a, b)| a * b).sum();
        let po: f64 = v.iter().zip(&outside).map(|(a, b)| a * b).sum();
        (0..dim)
            .map(|i| {
                v[i] + (cos - 1.0) * (pb * inside[i] + po * outside[i])
                    + sin * (pb * outside[i] - po * inside[i])
            })
            .collect()
    };

    let draw = |rotated: bool, rng: &mut ChaCha8Rng| -> (Matrix, Vec<usize>) {
        let total = spec.classes * spec.n_per_class;
        let mut x = Matrix::zeros(total, dim);
        let mut labels = Vec::with_capacity(total);
        for i in 0..total {
            let c = i % spec.classes;
            let z: Vec<f64> = (0..ld)
                .map(|j| means[c][j] + spec.spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let mut v = basis.matvec(&z);
            if rotated {
                v = rotate(&v);
            }
            for (j, val) in v.iter().enumerate() {
                x[(i, j)] = val + spec.noise * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(c);
        }
        (x, labels)
    };
    let (xs, ls) = draw(false, &mut rng);
    let (xt, lt) = draw(true, &mut rng);
    DomainPair::from_features(xs, ls, xt, lt, ld)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstellationSpec {
    pub n: usize,
    pub k: usize,
    pub codewords: usize,
    pub per: usize,
    pub noise_angle: f64,
    pub seed: u64,
}

impl Default for ConstellationSpec {
    fn default() -> Self {
        Self {
            n: 4,
            k: 2,
            codewords: 8,
            per: 50,
            noise_angle: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constellation {
    pub points: Vec<GrassmannPoint>,
    pub labels: Vec<usize>,
    pub codebook: Vec<GrassmannPoint>,
}

/// A random codebook with pairwise chordal distance at least `4·noise_angle`,
/// and `per` perturbed copies of every codeword (interleaved by codeword).
pub fn constellation(spec: &ConstellationSpec) -> Result<Constellation> {
    if spec.codewords == 0 || spec.per == 0 {
        return Err(Error::InvalidConfig(
            "need at least one codeword and one copy".into(),
        ));
    }
    if !(spec.noise_angle >= 0.0) {
        return Err(Error::InvalidConfig(
            "noise_angle must be nonnegative".into(),
        ));
    }
    let mut rng = rng_for(spec.seed);
    let need = 4.0 * spec.noise_angle;
    let mut codebook = None;
    for _ in 0..100 {
        let cand = (0..spec.codewords)
            .map(|_| random_point(spec.n, spec.k, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        if spec.codewords == 1 || min_pairwise(&cand, DistanceMetric::Chordal)? >= need {
            codebook = Some(cand);
            break;
        }
    }
    let codebook = codebook.ok_or_else(|| {
        Error::Generation(format!(
            "no codebook of {} points on G({},{}) with chordal separation {need} in 100 draws; use fewer codewords or less noise",
            spec.codewords, spec.n, spec.k
        ))
    })?;
    let total = spec.codewords * spec.per;
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let c = i % spec.codewords;
        points.push(perturb(&codebook[c], spec.noise_angle, &mut rng)?);
        labels.push(c);
    }
    Ok(Constellation {
        points,
        labels,
        codebook,
    })
}

/// Smallest distance between two points with different labels.
pub fn min_inter_class_distance(points: &Matrix, labels: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.rows() {
        for j in i + 1..points.rows() {
            if labels[i] != labels[j] {
                let d: Vec<f64> = points
                    .row(i)
                    .iter()
                    .zip(points.row(j))
                    .map(|(a, b)| a - b)
                    .collect();
                best = best.min(norm(&d));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_rings_sit_on_their_radii() {
        let spec = RingsSpec {
            n_total: 31,
            noise_sd: 0.0,
            ..Default::default()
        };
        let (x, labels) = three_rings(&spec).unwrap();
        assert_eq!(x.rows(), 31);
        assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 11);
        for i in 0..31 {
            let r = norm(x.row(i));
            assert!((r - spec.radii[labels[i]]).abs() < 1e-12);
        }
    }

    #[test]
    fn well_separated_rings_do_not_touch() {
        let spec = RingsSpec {
            noise_sd: 0.1,
            ..Default::default()
        };
        let (x, labels) = three_rings(&spec).unwrap();
        assert!(min_inter_class_distance(&x, &labels) > 0.0);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = three_rings(&RingsSpec::ssc_preset(3)).unwrap();
        let b = three_rings(&RingsSpec::ssc_preset(3)).unwrap();
        assert_eq!(a, b);
        let (m1, x1) = low_rank_masked(8, 6, 2, 0.7, 5).unwrap();
        let (m2, x2) = low_rank_masked(8, 6, 2, 0.7, 5).unwrap();
        assert_eq!((m1, x1), (m2, x2));
        let spec = ConstellationSpec {
            noise_angle: 0.05,
            ..Default::default()
        };
        let c1 = constellation(&spec).unwrap();
        let c2 = constellation(&spec).unwrap();
        for (p, q) in c1.points.iter().zip(&c2.points) {
            assert_eq!(p.basis(), q.basis());
        }
    }

    #[test]
    fn full_observation_and_exact_rank() {
        let (m, x) = low_rank_masked(10, 7, 3, 1.0, 1).unwrap();
        assert_eq!(m.mask().count(), 70);
        let s = crate::numerics::svd_compact(&x).unwrap().s;
        assert!(s[2] > 1e-8 * s[0]);
        assert!(s[3] <= 1e-8 * s[0]);
    }

    #[test]
    fn impossible_mask_fails_loudly() {
        assert!(matches!(
            low_rank_masked(10, 10, 5, 0.05, 0),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn zero_angle_samples_equal_prototypes() {
        let spec = SubspaceClassesSpec {
            within_angle: 0.0,
            ..Default::default()
        };
        let (set, protos) = labeled_subspaces(&spec).unwrap();
        for (p, &l) in set.points().iter().zip(set.labels()) {
            assert_eq!(p.basis(), protos[l].basis());
        }
        let c = constellation(&ConstellationSpec::default()).unwrap();
        for (p, &l) in c.points.iter().zip(&c.labels) {
            assert_eq!(p.basis(), c.codebook[l].basis());
        }
    }

    #[test]
    fn crowded_codebook_is_rejected() {
        let spec = ConstellationSpec {
            n: 3,
            k: 1,
            codewords: 30,
            noise_angle: 0.3,
            ..Default::default()
        };
        assert!(matches!(constellation(&spec), Err(Error::Generation(_))));
    }
}

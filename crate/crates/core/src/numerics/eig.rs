use nalgebra::SymmetricEigen;

use crate::error::{dims, Error, Result};

use super::Matrix;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Column `i` of `vectors` is the unit eigenvector for `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEig {
    /// Eigenvectors of the `count` smallest eigenvalues, ascending.
    pub fn smallest(&self, count: usize) -> Matrix {
        let idx: Vec<usize> = (0..count).collect();
        self.vectors.select_columns(&idx)
    }

    /// Eigenvectors of the `count` largest eigenvalues, descending.
    pub fn largest(&self, count: usize) -> Matrix {
        let n = self.values.len();
        let idx: Vec<usize> = (0..count).map(|i| n - 1 - i).collect();
        self.vectors.select_columns(&idx)
    }

    pub fn reconstruct(&self) -> Matrix {
        self.vectors
            .scale_columns(&self.values)
            .matmul_t(&self.vectors)
    }
}

const SYMMETRY_TOL: f64 = 1e-8;

/// Symmetric eigendecomposition; the input is symmetrized as `(A + Aᵀ)/2`.
pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    if !a.is_square() {
        return Err(dims(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let n = a.rows();
    let max_iter = 100 * n.max(1);
    let eig = SymmetricEigen::try_new(a.symmetrized().to_nalgebra(), f64::EPSILON, max_iter)
        .ok_or(Error::DecompositionFailed {
            what: "symmetric eigendecomposition",
            iterations: max_iter,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(SymEig { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input() {
        let e = sym_eig(&Matrix::from_diag(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        assert!(e.vectors.map(f64::abs).max_abs_diff(&Matrix::identity(3)) < 1e-15);
    }

    #[test]
    fn swap_matrix() {
        let e = sym_eig(&Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let v0 = e.vectors.column(0);
        let v1 = e.vectors.column(1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v0[0].abs() - h).abs() < 1e-14 && (v0[0] + v0[1]).abs() < 1e-14);
        assert!((v1[0] - v1[1]).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = if trial == 0 {
                10
            } else {
                rng.random_range(1..12)
            };
            let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = b.add(&b.transpose());
            let e = sym_eig(&a).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(e.vectors.orthonormality_error() < 1e-10);
            assert!(e.reconstruct().max_abs_diff(&a) <= 1e-8);
            for (i, &l) in e.values.iter().enumerate() {
                let v = e.vectors.column(i);
                let av = a.matvec(&v);
                assert!(av.iter().zip(&v).all(|(x, y)| (x - l * y).abs() <= 1e-8));
            }
        }
    }

    #[test]
    fn rejects_asymmetric_and_non_square() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig(&a), Err(Error::NotSymmetric { .. })));
        assert!(sym_eig(&Matrix::zeros(2, 3)).is_err());
        // tiny asymmetry is absorbed
        let b = Matrix::from_rows(&[[1.0, 2.0], [2.0 + 1e-12, 1.0]]).unwrap();
        assert!(sym_eig(&b).is_ok());
    }
}

use crate::error::{dims, Error, Result};

use super::Matrix;

/// Thin QR factorization `A = Q·R` of an `n`×`k` matrix, `k ≤ n`.
///
/// `Q` is `n`×`k` with orthonormal columns and `R` is `k`×`k` upper triangular
/// with a nonnegative diagonal, which makes `Q` unique for full-rank input.
#[derive(Debug, Clone)]
pub struct Qr {
    pub q: Matrix,
    pub r: Matrix,
}

/// Relative threshold on `|R_jj| / ‖A‖_F` below which column `j` is declared dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Householder thin QR with the sign convention `R_jj ≥ 0`.
pub fn qr_thin(a: &Matrix) -> Result<Qr> {
    let (n, k) = a.shape();
    if k > n {
        return Err(dims(format!("thin QR needs rows >= cols, got {n}x{k}")));
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Err(Error::RankDeficient { column: 0 });
    }

    // column-major working copy; reflectors are stored separately
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = Matrix::zeros(k, k);

    for j in 0..k {
        let x = &cols[j][j..];
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if xnorm < RANK_TOL * scale {
            return Err(Error::RankDeficient { column: j });
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|t| *t /= vnorm);
        }
        for col in cols.iter_mut().skip(j) {
            apply_reflector(&v, &mut col[j..]);
        }
        for (i, col) in cols.iter().enumerate().skip(j) {
            r[(j, i)] = col[j];
        }
        r[(j, j)] = alpha;
        reflectors.push(v);
    }

    // Q = H_0 H_1 … H_{k-1} applied to the leading k columns of the identity.
    let mut q_cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for col in q_cols.iter_mut() {
        for (j, v) in reflectors.iter().enumerate().rev() {
            apply_reflector(v, &mut col[j..]);
        }
    }

    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for i in j..k {
                r[(j, i)] = -r[(j, i)];
            }
            q_cols[j].iter_mut().for_each(|t| *t = -*t);
        }
    }

    Ok(Qr {
        q: Matrix::from_columns(&q_cols)?,
        r,
    })
}

fn apply_reflector(v: &[f64], x: &mut [f64]) {
    let proj: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    if proj != 0.0 {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= 2.0 * proj * vi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axis_aligned_input() {
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]).unwrap();
        let qr = qr_thin(&a).unwrap();
        assert_eq!(qr.q, Matrix::eye(3, 2));
        assert_eq!(qr.r, Matrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn orthonormal_input_is_reproduced() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = Matrix::from_rows(&[[s, 0.0], [-s, 0.0], [0.0, -1.0]]).unwrap();
        let qr = qr_thin(&a).unwrap();
        assert!(qr.q.max_abs_diff(&a) < 1e-15);
        assert!(qr.r.max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.random_range(1..10);
            let k = rng.random_range(1..=n);
            let a = Matrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
            let qr = qr_thin(&a).unwrap();
            assert!(qr.q.orthonormality_error() <= 1e-10);
            assert!(qr.q.matmul(&qr.r).max_abs_diff(&a) <= 1e-8);
            for i in 0..k {
                assert!(qr.r[(i, i)] >= 0.0);
                for j in 0..i {
                    assert_eq!(qr.r[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn rank_deficiency_names_the_column() {
        let a = Matrix::from_rows(&[[1.0, 2.0, 0.0], [1.0, 2.0, 1.0], [0.0, 0.0, 1.0]]).unwrap();
        match qr_thin(&a) {
            Err(Error::RankDeficient { column }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(matches!(
            qr_thin(&Matrix::zeros(3, 1)),
            Err(Error::RankDeficient { column: 0 })
        ));
        assert!(qr_thin(&Matrix::zeros(2, 3)).is_err());
    }
}

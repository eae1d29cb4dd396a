use crate::error::{Error, Result};

use super::{dot, Matrix};

/// Compact singular value decomposition `A = U·diag(S)·Vᵀ`.
///
/// For an `m`×`n` input, `U` is `m`×`r`, `V` is `n`×`r` with `r = min(m, n)`,
/// both with orthonormal columns, and `S` is sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.u.scale_columns(&self.s).matmul_t(&self.v)
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }
}

/// Compact SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Jacobi keeps small singular values accurate to high relative precision,
/// which is what principal angles near zero need.
pub fn svd_compact(a: &Matrix) -> Result<Svd> {
    if a.rows() >= a.cols() {
        jacobi_tall(a)
    } else {
        let t = jacobi_tall(&a.transpose())?;
        Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        })
    }
}

fn jacobi_tall(a: &Matrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON * (m as f64).max(4.0);
    let max_sweeps = 100 * m.max(n);
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DecompositionFailed {
            what: "Jacobi SVD",
            iterations: max_sweeps,
        });
    }

    let mut sigma: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let w: Vec<Vec<f64>> = order.iter().map(|&i| w[i].clone()).collect();
    let v: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();
    sigma = order.iter().map(|&i| sigma[i]).collect();

    // Left vectors of (numerically) null directions carry no information;
    // replace them by an orthonormal completion so UᵀU = I still holds.
    let smax = sigma.first().copied().unwrap_or(0.0);
    let null_tol = smax * 1e-13;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (j, col) in w.into_iter().enumerate() {
        if sigma[j] > null_tol && sigma[j] > 0.0 {
            u_cols.push(col.iter().map(|x| x / sigma[j]).collect());
        } else {
            let fill = complete_basis(&u_cols, m);
            u_cols.push(fill);
        }
    }

    Ok(Svd {
        u: Matrix::from_columns(&u_cols)?,
        s: sigma,
        v: Matrix::from_columns(&v)?,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        *x = c * xp - s * *y;
        *y = s * xp + c * *y;
    }
}

/// A unit vector orthogonal to every vector in `basis` (assumed orthonormal).
pub(crate) fn complete_basis(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..m {
        let mut cand = vec![0.0; m];
        cand[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj = dot(b, &cand);
                for (c, bi) in cand.iter_mut().zip(b) {
                    *c -= proj * bi;
                }
            }
        }
        let nrm = dot(&cand, &cand).sqrt();
        if nrm > 0.5 {
            return cand.into_iter().map(|x| x / nrm).collect();
        }
        if best.as_ref().is_none_or(|(b, _)| nrm > *b) {
            best = Some((nrm, cand));
        }
    }
    let (nrm, cand) = best.expect("ambient dimension is positive");
    cand.into_iter().map(|x| x / nrm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sym_eig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn check_contract(a: &Matrix, svd: &Svd) {
        assert!(svd.u.orthonormality_error() <= 1e-10);
        assert!(svd.v.orthonormality_error() <= 1e-10);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.s.iter().all(|&s| s >= 0.0));
        let tol = 1e-8 * a.max_abs().max(1.0);
        assert!(svd.reconstruct().max_abs_diff(a) <= tol);
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let svd = svd_compact(&Matrix::identity(3)).unwrap();
        assert_eq!(svd.s, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_input() {
        let svd = svd_compact(&Matrix::from_diag(&[3.0, 2.0, 1.0])).unwrap();
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
        assert_eq!(svd.u, Matrix::identity(3));
        assert_eq!(svd.v, Matrix::identity(3));
    }

    #[test]
    fn random_reconstruction_6x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(6, 4, &mut rng);
        let svd = svd_compact(&a).unwrap();
        assert_eq!(svd.rank(), 4);
        check_contract(&a, &svd);
    }

    #[test]
    fn wide_and_rank_deficient_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random(3, 7, &mut rng);
        let svd = svd_compact(&a).unwrap();
        assert_eq!((svd.u.shape(), svd.v.shape()), ((3, 3), (7, 3)));
        check_contract(&a, &svd);

        // rank one: u vᵀ
        let b = Matrix::from_fn(5, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let svd = svd_compact(&b).unwrap();
        assert!(svd.s[1] < 1e-12 && svd.s[2] < 1e-12);
        check_contract(&b, &svd);

        let z = Matrix::zeros(4, 2);
        let svd = svd_compact(&z).unwrap();
        assert_eq!(svd.s, vec![0.0, 0.0]);
        check_contract(&z, &svd);
    }

    #[test]
    fn thousand_random_reconstructions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let m = rng.random_range(1..9);
            let n = rng.random_range(1..9);
            let a = random(m, n, &mut rng);
            check_contract(&a, &svd_compact(&a).unwrap());
        }
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let a = random(7, 4, &mut rng);
            let svd = svd_compact(&a).unwrap();
            let eig = sym_eig(&a.t_matmul(&a)).unwrap();
            // eigenvalues ascending, singular values descending
            for (s, l) in svd.s.iter().zip(eig.values.iter().rev()) {
                assert!((s - l.max(0.0).sqrt()).abs() <= 1e-7, "{s} vs sqrt({l})");
            }
        }
    }
}

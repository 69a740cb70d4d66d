use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Reciprocal eigenvalues at or below this are treated as infinite.
pub const MU_CUT: f64 = 1e-300;
/// Reciprocal eigenvalues below this fraction of the largest one are rounding
/// noise from the null space of `B`.
pub const MU_REL_CUT: f64 = 1e-13;

/// Lower Cholesky factor of a symmetric matrix. Reports the first failing pivot.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 1e-14 * scale) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Which bilinear form the stored eigenvectors are orthonormal in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    Stiffness,
}

/// Eigenpairs `(lambda_i, u_i)` sorted by ascending eigenvalue, eigenvectors
/// stored as columns and normalized so that `u_i^T A u_j = delta_ij`.
#[derive(Debug, Clone)]
pub struct EigenSet {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub normalization: Normalization,
    /// Number of directions with zero reciprocal eigenvalue that were dropped.
    pub infinite: usize,
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let n = self.vectors.nrows();
        &self.vectors.as_slice()[i * n..(i + 1) * n]
    }

    /// Reciprocal eigenvalues `mu_i = 1 / lambda_i`.
    pub fn reciprocals(&self) -> Vec<f64> {
        self.values.iter().map(|l| 1.0 / l).collect()
    }

    pub fn truncate(mut self, k: usize) -> EigenSet {
        let k = k.min(self.values.len());
        self.values.truncate(k);
        self.vectors = self.vectors.columns(0, k).into_owned();
        self
    }
}

/// Solves `B y = mu A y` for SPD `A` and symmetric PSD `B`, returning
/// `lambda = 1 / mu` in ascending order. `B` is never factorized, so a
/// singular `B` is allowed; its null directions are reported in `infinite`.
pub fn dense_gevp_reciprocal(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<EigenSet> {
    let n = a.nrows();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.nrows() });
    }
    let l = cholesky(a)?;
    // C = L^{-1} B L^{-T}
    let lb = l.solve_lower_triangular(b).expect("nonsingular factor");
    let c = l.solve_lower_triangular(&lb.transpose()).expect("nonsingular factor");
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let mu_max = eig.eigenvalues.max();
    let cut = MU_CUT.max(MU_REL_CUT * mu_max);
    let finite: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] > cut).collect();
    let values = finite.iter().map(|&i| 1.0 / eig.eigenvalues[i]).collect();
    let z = DMatrix::from_fn(n, finite.len(), |r, c| eig.eigenvectors[(r, finite[c])]);
    let lt = l.transpose();
    let mut vectors = lt.solve_upper_triangular(&z).expect("nonsingular factor");
    // deterministic sign: largest-magnitude entry positive
    for mut col in vectors.column_iter_mut() {
        let imax = col.iamax();
        if col[imax] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(EigenSet { values, vectors, normalization: Normalization::Stiffness, infinite: n - finite.len() })
}

/// `x^T M y` for dense `M`.
pub fn quad(m: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    x.dot(&(m * y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &m * m.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn cholesky_reports_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite { pivot: 1 })));
    }

    #[test]
    fn identity_stiffness() {
        let a = DMatrix::identity(2, 2);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        let e = dense_gevp_reciprocal(&a, &b).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_stiffness() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0]));
        let b = DMatrix::identity(2, 2);
        let e = dense_gevp_reciprocal(&a, &b).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14 && (e.values[1] - 8.0).abs() < 1e-14);
        let y0 = e.vectors.column(0).into_owned();
        assert!((quad(&a, &y0, &y0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_b_reports_infinite_directions() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let e = dense_gevp_reciprocal(&a, &b).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.infinite, 2);
        // Schur complement of the {1,2} block onto index 0
        assert!((e.values[0] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn matches_explicit_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_spd(6, &mut rng);
        let b = random_spd(6, &mut rng);
        let e = dense_gevp_reciprocal(&a, &b).unwrap();
        // brute force: eigenvalues of B^{-1} A (nonsymmetric) via its characteristic roots
        let m = b.clone().try_inverse().unwrap() * &a;
        let mut oracle: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-10 * y.abs());
        }
        // residual contract
        let mu = DMatrix::from_diagonal(&DVector::from_vec(e.reciprocals()));
        let res = &b * &e.vectors - &a * &e.vectors * mu;
        assert!(res.abs().max() <= 1e-10 * b.abs().max());
        let gram = e.vectors.transpose() * &a * &e.vectors;
        assert!((gram - DMatrix::identity(6, 6)).abs().max() < 1e-10);
    }

    #[test]
    fn dependent_basis_rejected_with_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::identity(2, 2);
        assert!(matches!(dense_gevp_reciprocal(&a, &b), Err(Error::NotPositiveDefinite { pivot: 1 })));
    }
}

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::condensed::{CondensedSolver, PencilLayout};
use super::dense::{dense_gevp_reciprocal, EigenSet};
use super::sparse::{dot, norm2, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    /// Residual target `|A u - lambda B u| <= tol |A u|` for the first `k` pairs.
    pub tol: f64,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions { tol: 1e-10, seed: 20240101, max_iterations: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceInfo {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub block_size: usize,
    pub seed: u64,
}

fn column(m: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = m.nrows();
    &m.as_slice()[j * n..(j + 1) * n]
}

/// Relative residual `|A u - lambda B u|_2 / |A u|_2`.
pub fn pencil_residual(a: &SparseMatrix, b: &SparseMatrix, lambda: f64, u: &[f64]) -> f64 {
    let au = a.mul_vec(u);
    let bu = b.mul_vec(u);
    let r: Vec<f64> = au.iter().zip(&bu).map(|(x, y)| x - lambda * y).collect();
    norm2(&r) / norm2(&au)
}

/// Smallest `k` finite eigenpairs of `A u = lambda B u` with `B` singular on
/// the skeleton unknowns.
///
/// The iteration runs on the condensed pencil: every block vector is mapped
/// through `A^{-1} B`, whose range is the `A`-harmonic extension of the
/// interior unknowns, followed by Rayleigh-Ritz on the full pencil.
pub fn reference_eigensolve(
    a: &SparseMatrix,
    b: &SparseMatrix,
    layout: PencilLayout,
    k: usize,
    opts: &ReferenceOptions,
) -> Result<(EigenSet, ReferenceInfo)> {
    let solver = CondensedSolver::new(a, layout)?;
    reference_eigensolve_with(a, b, &solver, k, opts)
}

pub fn reference_eigensolve_with(
    a: &SparseMatrix,
    b: &SparseMatrix,
    solver: &CondensedSolver,
    k: usize,
    opts: &ReferenceOptions,
) -> Result<(EigenSet, ReferenceInfo)> {
    let n = a.nrows();
    let ni = solver.layout().n_interior;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > ni {
        return Err(Error::TooManyEigenpairs { requested: k, available: ni });
    }
    let p = (k + k.max(4)).min(ni);
    let inner_tol = 1e-2 * opts.tol;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let mut worst = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let cols: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|j| solver.solve(&b.mul_vec(column(&x, j)), inner_tol))
            .collect::<Result<_>>()?;
        let z = DMatrix::from_fn(n, p, |r, c| cols[c][r]);
        let az: Vec<Vec<f64>> = cols.iter().map(|c| a.mul_vec(c)).collect();
        let bz: Vec<Vec<f64>> = cols.iter().map(|c| b.mul_vec(c)).collect();
        let a_s = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&cols[i], &az[j]) + dot(&cols[j], &az[i])));
        let b_s = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&cols[i], &bz[j]) + dot(&cols[j], &bz[i])));
        let ritz = dense_gevp_reciprocal(&a_s, &b_s)?;
        if ritz.len() < k {
            return Err(Error::EigenNotConverged { residual: f64::INFINITY, iterations: it });
        }
        let m = ritz.len();
        x = &z * &ritz.vectors;
        let residuals: Vec<f64> = (0..k).map(|j| pencil_residual(a, b, ritz.values[j], column(&x, j))).collect();
        worst = residuals.iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let vectors = x.columns(0, k).into_owned();
            let set = EigenSet { values: ritz.values[..k].to_vec(), vectors, normalization: ritz.normalization, infinite: 0 };
            let info = ReferenceInfo { iterations: it, residuals, block_size: p, seed: opts.seed };
            return Ok((set, info));
        }
        if m < p {
            // refill lost directions with fresh random vectors
            let mut full = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
            full.columns_mut(0, m).copy_from(&x);
            x = full;
        }
    }
    Err(Error::EigenNotConverged { residual: worst, iterations: opts.max_iterations })
}

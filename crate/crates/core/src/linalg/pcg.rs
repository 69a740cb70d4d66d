use super::sparse::{axpy, dot, norm2, SparseMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
}

/// Preconditioned conjugate gradients for SPD `a`, stopping when
/// `|b - A x|_2 <= tol |b|_2`.
pub fn pcg(a: &SparseMatrix, b: &[f64], precond: Preconditioner, tol: f64, maxit: usize) -> Result<PcgOutcome> {
    pcg_with_guess(a, b, None, precond, tol, maxit)
}

pub fn pcg_with_guess(
    a: &SparseMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Preconditioner,
    tol: f64,
    maxit: usize,
) -> Result<PcgOutcome> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("pcg tolerance must be positive".into()));
    }
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(PcgOutcome { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let inv_diag: Vec<f64> = match precond {
        Preconditioner::Jacobi => a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect(),
        Preconditioner::None => vec![1.0; n],
    };
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.mul_vec(&x);
        axpy(-1.0, &ax, &mut r);
    }
    let mut res = norm2(&r) / bnorm;
    if res <= tol {
        return Ok(PcgOutcome { x, iterations: 0, residual: res });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=maxit {
        a.mul_vec_into(&p, &mut ap);
        let curv = dot(&p, &ap);
        if curv <= 0.0 {
            return Err(Error::Indefinite(it));
        }
        let alpha = rz / curv;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        res = norm2(&r) / bnorm;
        if res <= tol {
            return Ok(PcgOutcome { x, iterations: it, residual: res });
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::PcgNotConverged { residual: res, iterations: maxit })
}

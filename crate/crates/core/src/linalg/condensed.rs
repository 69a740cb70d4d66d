use nalgebra::DMatrix;

use super::dense::cholesky;
use super::pcg::{pcg_with_guess, Preconditioner};
use super::sparse::{SparseMatrix, TripletBuilder};
use crate::{Error, Result};

/// DOF layout of a pencil whose first `n_interior` unknowns form independent
/// diagonal blocks of size `block` (one per cell) and whose remaining unknowns
/// live on the skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PencilLayout {
    pub n_interior: usize,
    pub block: usize,
}

/// SPD solver for a matrix with [`PencilLayout`] structure: the interior
/// blocks are eliminated exactly and the skeleton Schur complement is solved
/// with Jacobi-preconditioned CG.
#[derive(Debug, Clone)]
pub struct CondensedSolver {
    layout: PencilLayout,
    n: usize,
    block_inverses: Vec<DMatrix<f64>>,
    a_ib: SparseMatrix,
    a_bi: SparseMatrix,
    schur: SparseMatrix,
    pub max_iterations: usize,
}

impl CondensedSolver {
    pub fn new(a: &SparseMatrix, layout: PencilLayout) -> Result<CondensedSolver> {
        let n = a.nrows();
        let PencilLayout { n_interior, block } = layout;
        if block == 0 || n_interior % block != 0 || n_interior > n {
            return Err(Error::InvalidArgument(format!("bad pencil layout {layout:?} for dimension {n}")));
        }
        let interior: Vec<usize> = (0..n_interior).collect();
        let skeleton: Vec<usize> = (n_interior..n).collect();
        let nb = skeleton.len();

        let mut block_inverses = Vec::with_capacity(n_interior / block);
        for c in 0..n_interior / block {
            let base = c * block;
            let mut d = DMatrix::zeros(block, block);
            for i in 0..block {
                for (j, v) in a.row(base + i) {
                    if j >= base && j < base + block {
                        d[(i, j - base)] = v;
                    } else if j < n_interior {
                        return Err(Error::InvalidArgument("interior blocks are coupled".into()));
                    }
                }
            }
            let l = cholesky(&d).map_err(|_| Error::NotPositiveDefinite { pivot: base })?;
            let inv = l.solve_lower_triangular(&DMatrix::identity(block, block)).expect("nonsingular");
            block_inverses.push(inv.transpose() * inv);
        }

        let a_ib = a.select(&interior, &skeleton);
        let a_bi = a.select(&skeleton, &interior);
        let a_bb = a.select(&skeleton, &skeleton);

        let mut tb = TripletBuilder::new(nb, nb);
        for i in 0..nb {
            for (j, v) in a_bb.row(i) {
                tb.push(i, j, v);
            }
        }
        for (c, inv) in block_inverses.iter().enumerate() {
            let base = c * block;
            let mut cols: Vec<usize> = (0..block).flat_map(|i| a_ib.row(base + i).map(|(j, _)| j)).collect();
            cols.sort_unstable();
            cols.dedup();
            let coupling = DMatrix::from_fn(block, cols.len(), |i, j| a_ib.get(base + i, cols[j]));
            let update = coupling.transpose() * inv * &coupling;
            for (p, &ci) in cols.iter().enumerate() {
                for (q, &cj) in cols.iter().enumerate() {
                    // symmetric by construction, mirror to keep it exact
                    let v = if p <= q { update[(p, q)] } else { update[(q, p)] };
                    tb.push(ci, cj, -v);
                }
            }
        }
        let schur = tb.finalize(true);
        Ok(CondensedSolver {
            layout,
            n,
            block_inverses,
            a_ib,
            a_bi,
            schur,
            max_iterations: 20_000,
        })
    }

    pub fn layout(&self) -> PencilLayout {
        self.layout
    }

    pub fn schur(&self) -> &SparseMatrix {
        &self.schur
    }

    fn apply_block_inverse(&self, f: &[f64]) -> Vec<f64> {
        let bs = self.layout.block;
        let mut out = vec![0.0; f.len()];
        for (c, inv) in self.block_inverses.iter().enumerate() {
            let base = c * bs;
            for i in 0..bs {
                out[base + i] = (0..bs).map(|j| inv[(i, j)] * f[base + j]).sum();
            }
        }
        out
    }

    /// Solves `A x = f`; `tol` is the relative residual target of the
    /// skeleton system.
    pub fn solve(&self, f: &[f64], tol: f64) -> Result<Vec<f64>> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: f.len() });
        }
        let ni = self.layout.n_interior;
        let (f0, fb) = f.split_at(ni);
        let y0 = self.apply_block_inverse(f0);
        let xb = if self.n > ni {
            let mut g = fb.to_vec();
            let t = self.a_bi.mul_vec(&y0);
            for (gi, ti) in g.iter_mut().zip(&t) {
                *gi -= ti;
            }
            pcg_with_guess(&self.schur, &g, None, Preconditioner::Jacobi, tol, self.max_iterations)?.x
        } else {
            Vec::new()
        };
        let mut rhs0 = f0.to_vec();
        if !xb.is_empty() {
            let t = self.a_ib.mul_vec(&xb);
            for (ri, ti) in rhs0.iter_mut().zip(&t) {
                *ri -= ti;
            }
        }
        let mut x = self.apply_block_inverse(&rhs0);
        x.extend(xb);
        Ok(x)
    }
}

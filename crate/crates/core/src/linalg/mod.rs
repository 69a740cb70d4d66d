//! Sparse and dense linear algebra used by the eigensolvers.

pub mod condensed;
pub mod dense;
pub mod eigen;
pub mod pcg;
pub mod sparse;

pub use condensed::{CondensedSolver, PencilLayout};
pub use dense::{cholesky, dense_gevp_reciprocal, EigenSet, Normalization};
pub use eigen::{pencil_residual, reference_eigensolve, reference_eigensolve_with, ReferenceInfo, ReferenceOptions};
pub use pcg::{pcg, pcg_with_guess, PcgOutcome, Preconditioner};
pub use sparse::{axpy, dot, norm2, SparseMatrix, TripletBuilder};

//! Weak Galerkin eigensolver for second-order elliptic eigenvalue problems on
//! the unit square, with augmented subspace iterations that accelerate the
//! fine-space solve using a coarse conforming linear space.
//!
//! The crate is organized bottom-up:
//!
//! * [`mesh`]: structured triangulations and regular refinement
//! * [`polybasis`]: quadrature, scalar bases and Raviart-Thomas bases
//! * [`wgspace`]: the WG space, weak gradient, projections, assembly and prolongations
//! * [`linalg`]: sparse storage, PCG, dense pencils and the reference eigensolver
//! * [`augsub`]: the augmented subspace iterations and their error metrics
//! * [`expcli`]: experiment configuration, rate fitting and report writers



pub mod augsub;
pub mod expcli;
pub mod linalg;
pub mod mesh;
pub mod polybasis;
pub mod wgspace;


pub use augsub::{FineProblem, IterationTrace};
pub use linalg::{EigenSet, SparseMatrix};
pub use mesh::TriMesh;
pub use wgspace::{WgSpace, WgVector};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported quadrature degree {degree} (max {max})")]
    UnsupportedDegree { degree: usize, max: usize },
    #[error("degenerate triangle (area {0:e})")]
    DegenerateCell(f64),
    #[error("mesh with n = {fine} is not a dyadic refinement of n = {coarse}")]
    NotNested { coarse: usize, fine: usize },
    #[error("coefficient is not symmetric positive definite on cell {0}")]
    NonSpdCoefficient(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("conjugate gradients did not converge: relative residual {residual:e} after {iterations} iterations")]
    PcgNotConverged { residual: f64, iterations: usize },
    #[error("negative curvature detected at conjugate gradient iteration {0}")]
    Indefinite(usize),
    #[error("eigensolver did not converge: worst residual {residual:e} after {iterations} iterations")]
    EigenNotConverged { residual: f64, iterations: usize },
    #[error("requested {requested} eigenpairs but only {available} are available")]
    TooManyEigenpairs { requested: usize, available: usize },
    #[error("vector has zero b-norm")]
    ZeroBNorm,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

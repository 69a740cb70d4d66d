// Evaluates the discrete weak gradient of a projected function.
use std::sync::Arc;

use wgeig::wgspace::{Boundary, WgSpace};
use wgeig::TriMesh;

/// Largest deviation of the weak gradient of Q_h(f) from grad f at cell centroids.
pub fn run(n: usize, degree: usize) -> wgeig::Result<f64> {
    let space = WgSpace::with_boundary(Arc::new(TriMesh::build_uniform(n)?), degree, Boundary::Kept)?;
    let f = |p: [f64; 2]| 2.0 * p[0] - 0.5 * p[1] + 1.0;
    let v = space.project_qh(&f);
    let mut worst: f64 = 0.0;
    for k in 0..space.mesh().num_cells() {
        let g = space.weak_gradient_at(k, v.as_slice(), space.mesh().cell_centroid(k))?;
        worst = worst.max((g[0] - 2.0).abs()).max((g[1] + 0.5).abs());
    }
    Ok(worst)
}

fn main() -> wgeig::Result<()> {
    for r in [0, 1] {
        println!("degree {r}: max gradient error on a linear {:.3e}", run(16, r)?);
    }
    Ok(())
}

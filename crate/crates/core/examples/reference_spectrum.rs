// Computes the lowest Laplace eigenvalues on the unit square and compares with the exact ones.
use std::f64::consts::PI;
use std::sync::Arc;

use wgeig::augsub::FineProblem;
use wgeig::linalg::ReferenceOptions;
use wgeig::wgspace::WgSpace;
use wgeig::TriMesh;

/// Returns (discrete, exact) pairs for the first `k` eigenvalues.
pub fn run(n: usize, degree: usize, k: usize) -> wgeig::Result<Vec<(f64, f64)>> {
    let problem = FineProblem::new(WgSpace::new(Arc::new(TriMesh::build_uniform(n)?), degree)?)?;
    let (set, _) = problem.reference(k, &ReferenceOptions::default())?;
    let mut exact: Vec<f64> = (1..6)
        .flat_map(|i| (1..6).map(move |j| PI * PI * (i * i + j * j) as f64))
        .collect();
    exact.sort_by(f64::total_cmp);
    Ok(set.values.iter().copied().zip(exact).collect())
}

fn main() -> wgeig::Result<()> {
    for degree in [0, 1] {
        println!("degree {degree}");
        for (i, (l, e)) in run(32, degree, 4)?.into_iter().enumerate() {
            println!("  lambda_{} = {l:.10}  exact {e:.10}  rel err {:.2e}", i + 1, (l - e).abs() / e);
        }
    }
    Ok(())
}

// Targets one interior eigenpair, starting from the coarse-mesh approximation.
use std::sync::Arc;

use wgeig::augsub::{run_algorithm_single, FineProblem, IterationOptions};
use wgeig::linalg::ReferenceOptions;
use wgeig::wgspace::WgSpace;
use wgeig::TriMesh;

/// Returns the eigenvalue after each step together with the reference value.
pub fn run(fine_n: usize, coarse_n: usize, target: usize, iters: usize) -> wgeig::Result<(Vec<f64>, f64)> {
    let problem = FineProblem::new(WgSpace::new(Arc::new(TriMesh::build_uniform(fine_n)?), 0)?)?;
    let (reference, _) = problem.reference(target + 2, &ReferenceOptions::default())?;
    let coarse = TriMesh::build_uniform(coarse_n)?;
    let opts = IterationOptions { iters, ..IterationOptions::default() };
    let trace = run_algorithm_single(&problem, &coarse, &reference, target, &opts)?;
    let history = trace.entries.iter().map(|e| e.lambdas[0]).collect();
    Ok((history, reference.values[target - 1]))
}

fn main() -> wgeig::Result<()> {
    let (history, exact) = run(32, 8, 4, 10)?;
    for (i, l) in history.iter().enumerate() {
        println!("step {i:>2}  lambda {l:.12}  gap {:.3e}", l - exact);
    }
    Ok(())
}

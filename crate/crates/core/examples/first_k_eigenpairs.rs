// Runs the augmented subspace iteration for the first k eigenpairs and prints the error history.
use std::sync::Arc;

use wgeig::augsub::{run_algorithm_k, FineProblem, IterationOptions};
use wgeig::linalg::ReferenceOptions;
use wgeig::wgspace::WgSpace;
use wgeig::{IterationTrace, TriMesh};

pub fn run(fine_n: usize, coarse_n: usize, k: usize, iters: usize) -> wgeig::Result<IterationTrace> {
    let problem = FineProblem::new(WgSpace::new(Arc::new(TriMesh::build_uniform(fine_n)?), 0)?)?;
    let (reference, _) = problem.reference(k + 2, &ReferenceOptions::default())?;
    let coarse = TriMesh::build_uniform(coarse_n)?;
    let opts = IterationOptions { iters, ..IterationOptions::default() };
    run_algorithm_k(&problem, &coarse, &reference, k, &opts)
}

fn main() -> wgeig::Result<()> {
    let trace = run(32, 8, 3, 8)?;
    for e in &trace.entries {
        let errs: Vec<String> = e.a_err.iter().map(|x| format!("{x:.3e}")).collect();
        println!("iter {:>2}  a-errors [{}]", e.iter, errs.join(", "));
    }
    println!("final eigenvalues {:?}", trace.final_lambdas());
    Ok(())
}

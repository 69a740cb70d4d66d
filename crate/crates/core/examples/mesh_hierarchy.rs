// Builds a dyadic mesh hierarchy and prints entity counts per level.
use wgeig::TriMesh;

/// Returns (n, vertices, edges, cells) for each level, refining from `n0` `levels` times.
pub fn run(n0: usize, levels: usize) -> wgeig::Result<Vec<(usize, usize, usize, usize)>> {
    let mut mesh = TriMesh::build_uniform(n0)?;
    let mut rows = Vec::with_capacity(levels + 1);
    for _ in 0..=levels {
        rows.push((mesh.n(), mesh.num_vertices(), mesh.num_edges(), mesh.num_cells()));
        mesh = mesh.refine();
    }
    Ok(rows)
}

fn main() -> wgeig::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9}", "n", "vertices", "edges", "cells");
    for (n, v, e, c) in run(2, 5)? {
        println!("{n:>5} {v:>9} {e:>9} {c:>9}");
    }
    Ok(())
}

//! Structured triangulations of the unit square.
//!
//! Every mesh in this module is the `n x n` grid of sub-squares, each cut along
//! its positive-slope diagonal. Entities are numbered canonically: vertices
//! lexicographically by `(x, y)`, cells by their sorted vertex triple and edges
//! by their `(lo, hi)` vertex pair. Because of this, `refine(build_uniform(n))`
//! and `build_uniform(2 * n)` produce the same numbering.

use serde::Serialize;

use crate::{Error, Result};

pub type Point = [f64; 2];

/// Where a fine edge sits relative to a coarser mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeParent {
    /// Part of a coarse edge, covering the parameter range `[t0, t1]` of that
    /// edge's own parametrization (lower vertex at `t = 0`).
    OnEdge { edge: usize, t0: f64, t1: f64 },
    /// Inside a coarse cell.
    InCell { cell: usize },
}

#[derive(Debug, Clone)]
pub struct Parents {
    pub cells: Vec<usize>,
    pub edges: Vec<EdgeParent>,
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    n: usize,
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    // (edge index, +1 when the edge normal is outward for this cell, -1 otherwise)
    cell_edges: Vec<[(usize, f64); 3]>,
    edge_cells: Vec<[Option<usize>; 2]>,
    edge_normals: Vec<Point>,
    boundary: Vec<bool>,
    cell_keys: Vec<[usize; 3]>,
    parents: Option<Parents>,
}

impl TriMesh {
    /// Unit square split into `n x n` squares, two triangles each.
    pub fn build_uniform(n: usize) -> Result<TriMesh> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh subdivision count must be positive".into()));
        }
        let np = n + 1;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(np * np);
        for i in 0..np {
            for j in 0..np {
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
        let id = |i: usize, j: usize| i * np + j;
        let mut cells = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        let (mesh, _, _) = Self::canonicalize(n, vertices, cells);
        Ok(mesh)
    }

    /// Regular refinement: every triangle is split into four through its edge
    /// midpoints. The result records the coarse parent of every cell and edge.
    pub fn refine(&self) -> TriMesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for &[a, b] in &self.edges {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        let mut raw_cell_parent = Vec::with_capacity(4 * self.cells.len());
        for (k, c) in self.cells.iter().enumerate() {
            // m[j] is the midpoint of the edge opposite local vertex j
            let m: [usize; 3] = std::array::from_fn(|j| nv + self.cell_edges[k][j].0);
            cells.push([c[0], m[2], m[1]]);
            cells.push([c[1], m[0], m[2]]);
            cells.push([c[2], m[1], m[0]]);
            cells.push([m[0], m[1], m[2]]);
            raw_cell_parent.extend([k; 4]);
        }
        let (mut fine, vperm_inv, cell_order) = Self::canonicalize(2 * self.n, vertices, cells);

        let parent_cells: Vec<usize> = cell_order.iter().map(|&raw| raw_cell_parent[raw]).collect();
        let parent_edges = fine
            .edges
            .iter()
            .enumerate()
            .map(|(e, &[a, b])| {
                let (ra, rb) = (vperm_inv[a], vperm_inv[b]);
                match (ra < nv, rb < nv) {
                    (true, false) | (false, true) => {
                        let (v, mid) = if ra < nv { (ra, rb) } else { (rb, ra) };
                        let edge = mid - nv;
                        let (t0, t1) = if self.edges[edge][0] == v { (0.0, 0.5) } else { (0.5, 1.0) };
                        EdgeParent::OnEdge { edge, t0, t1 }
                    }
                    (false, false) => {
                        let k = fine.edge_cells[e][0].expect("every edge has a cell");
                        EdgeParent::InCell { cell: parent_cells[k] }
                    }
                    (true, true) => unreachable!("refined edges never join two coarse vertices"),
                }
            })
            .collect();
        fine.parents = Some(Parents { cells: parent_cells, edges: parent_edges });
        fine
    }

    // Returns the mesh, the map new vertex -> raw vertex, and new cell -> raw cell.
    fn canonicalize(n: usize, raw_vertices: Vec<Point>, raw_cells: Vec<[usize; 3]>) -> (TriMesh, Vec<usize>, Vec<usize>) {
        let mut vorder: Vec<usize> = (0..raw_vertices.len()).collect();
        vorder.sort_by(|&a, &b| {
            let (pa, pb) = (raw_vertices[a], raw_vertices[b]);
            pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
        });
        let mut vmap = vec![0; raw_vertices.len()];
        for (new, &old) in vorder.iter().enumerate() {
            vmap[old] = new;
        }
        let vertices: Vec<Point> = vorder.iter().map(|&i| raw_vertices[i]).collect();

        // keep counterclockwise orientation, start at the smallest index
        let mut keyed: Vec<([usize; 3], [usize; 3], usize)> = raw_cells
            .iter()
            .enumerate()
            .map(|(raw, c)| {
                let c = c.map(|v| vmap[v]);
                let s = (0..3).min_by_key(|&j| c[j]).unwrap();
                let rotated = [c[s], c[(s + 1) % 3], c[(s + 2) % 3]];
                let mut key = c;
                key.sort_unstable();
                (key, rotated, raw)
            })
            .collect();
        keyed.sort_unstable_by_key(|t| t.0);
        let cell_keys: Vec<[usize; 3]> = keyed.iter().map(|t| t.0).collect();
        let cells: Vec<[usize; 3]> = keyed.iter().map(|t| t.1).collect();
        let cell_order: Vec<usize> = keyed.iter().map(|t| t.2).collect();

        let mut edges: Vec<[usize; 2]> = cells
            .iter()
            .flat_map(|c| (0..3).map(move |j| sorted_pair(c[(j + 1) % 3], c[(j + 2) % 3])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut edge_cells = vec![[None, None]; edges.len()];
        let mut local_edges = Vec::with_capacity(cells.len());
        for (k, c) in cells.iter().enumerate() {
            let le: [usize; 3] = std::array::from_fn(|j| {
                let key = sorted_pair(c[(j + 1) % 3], c[(j + 2) % 3]);
                edges.binary_search(&key).expect("edge registered")
            });
            for &e in &le {
                let slot = &mut edge_cells[e];
                if slot[0].is_none() {
                    slot[0] = Some(k);
                } else {
                    slot[1] = Some(k);
                }
            }
            local_edges.push(le);
        }
        let boundary: Vec<bool> = edge_cells.iter().map(|s| s[1].is_none()).collect();

        let edge_normals: Vec<Point> = edges
            .iter()
            .zip(&edge_cells)
            .map(|(&[a, b], cs)| {
                let (pa, pb) = (vertices[a], vertices[b]);
                let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                let len = dx.hypot(dy);
                let mut nrm = [dy / len, -dx / len];
                let owner = cells[cs[0].unwrap()];
                let cen = centroid(&owner.map(|v| vertices[v]));
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if nrm[0] * (mid[0] - cen[0]) + nrm[1] * (mid[1] - cen[1]) < 0.0 {
                    nrm = [-nrm[0], -nrm[1]];
                }
                nrm
            })
            .collect();

        let cell_edges = local_edges
            .iter()
            .enumerate()
            .map(|(k, le)| le.map(|e| (e, if edge_cells[e][0] == Some(k) { 1.0 } else { -1.0 })))
            .collect();

        let mesh = TriMesh {
            n,
            vertices,
            cells,
            edges,
            cell_edges,
            edge_cells,
            edge_normals,
            boundary,
            cell_keys,
            parents: None,
        };
        (mesh, vorder, cell_order)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh size `sqrt(2) / n`.
    pub fn h(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Local edge `j` is the edge opposite local vertex `j`.
    pub fn cell_edges(&self, cell: usize) -> [(usize, f64); 3] {
        self.cell_edges[cell]
    }

    pub fn edge_cells(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_cells[edge]
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.boundary[edge]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Vertices on `∂Ω` are exactly those with a coordinate equal to 0 or 1.
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let p = self.vertices[v];
        p.iter().any(|&c| c == 0.0 || c == 1.0)
    }

    pub fn parents(&self) -> Option<&Parents> {
        self.parents.as_ref()
    }

    pub fn cell_coords(&self, cell: usize) -> [Point; 3] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        signed_area(&self.cell_coords(cell))
    }

    pub fn cell_centroid(&self, cell: usize) -> Point {
        centroid(&self.cell_coords(cell))
    }

    pub fn edge_coords(&self, edge: usize) -> [Point; 2] {
        self.edges[edge].map(|v| self.vertices[v])
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edge_coords(edge);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn edge_midpoint(&self, edge: usize) -> Point {
        let [a, b] = self.edge_coords(edge);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    /// Unit normal pointing out of the lower-indexed incident cell.
    pub fn edge_normal(&self, edge: usize) -> Point {
        self.edge_normals[edge]
    }

    /// Point at parameter `t` along the edge, from its lower vertex.
    pub fn edge_point(&self, edge: usize, t: f64) -> Point {
        let [a, b] = self.edge_coords(edge);
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    /// Parameter of the orthogonal projection of `p` onto the edge line.
    pub fn edge_param(&self, edge: usize, p: Point) -> f64 {
        let [a, b] = self.edge_coords(edge);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)
    }

    /// Index of the vertex at lattice position `(i, j)`, i.e. `(i/n, j/n)`.
    pub fn vertex_at(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&sorted_pair(a, b)).ok()
    }

    /// Cell containing `p`. Points on shared boundaries resolve to one of the
    /// candidate cells deterministically.
    pub fn locate(&self, p: Point) -> Option<usize> {
        if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
            return None;
        }
        let n = self.n;
        let (x, y) = (p[0] * n as f64, p[1] * n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let j = (y.floor() as usize).min(n - 1);
        let (a, b, c, d) = (
            self.vertex_at(i, j),
            self.vertex_at(i + 1, j),
            self.vertex_at(i + 1, j + 1),
            self.vertex_at(i, j + 1),
        );
        let mut key = if x - i as f64 >= y - j as f64 { [a, b, c] } else { [a, c, d] };
        key.sort_unstable();
        self.cell_keys.binary_search(&key).ok()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump<'a> {
            n: usize,
            vertices: &'a [Point],
            cells: &'a [[usize; 3]],
            edges: &'a [[usize; 2]],
            boundary_edges: &'a [bool],
        }
        serde_json::to_value(Dump {
            n: self.n,
            vertices: &self.vertices,
            cells: &self.cells,
            edges: &self.edges,
            boundary_edges: &self.boundary,
        })
        .expect("mesh dump serializes")
    }
}

/// Parent relation between a coarse mesh and a nested fine mesh, possibly
/// several refinement levels apart.
#[derive(Debug, Clone)]
pub struct Nesting {
    pub cell_parent: Vec<usize>,
    pub edge_parent: Vec<EdgeParent>,
}

impl Nesting {
    pub fn new(coarse: &TriMesh, fine: &TriMesh) -> Result<Nesting> {
        let ratio = fine.n / coarse.n;
        if !fine.n.is_multiple_of(coarse.n) || !ratio.is_power_of_two() {
            return Err(Error::NotNested { coarse: coarse.n, fine: fine.n });
        }
        let cell_parent = (0..fine.num_cells())
            .map(|k| coarse.locate(fine.cell_centroid(k)).ok_or(Error::NotNested { coarse: coarse.n, fine: fine.n }))
            .collect::<Result<Vec<_>>>()?;

        let nc = coarse.n as f64;
        let edge_parent = (0..fine.num_edges())
            .map(|e| {
                let m = fine.edge_midpoint(e);
                let (x, y) = (m[0] * nc, m[1] * nc);
                let is_int = |v: f64| v == v.round();
                let ends = if is_int(x) {
                    let (i, j) = (x as usize, y.floor() as usize);
                    Some((coarse.vertex_at(i, j), coarse.vertex_at(i, j + 1)))
                } else if is_int(y) {
                    let (i, j) = (x.floor() as usize, y as usize);
                    Some((coarse.vertex_at(i, j), coarse.vertex_at(i + 1, j)))
                } else if is_int(x - y) && x.floor() - y.floor() == x - y {
                    let (i, j) = (x.floor() as usize, y.floor() as usize);
                    Some((coarse.vertex_at(i, j), coarse.vertex_at(i + 1, j + 1)))
                } else {
                    None
                };
                match ends.and_then(|(a, b)| coarse.edge_between(a, b)) {
                    Some(edge) => {
                        let [p, q] = fine.edge_coords(e);
                        let (ta, tb) = (coarse.edge_param(edge, p), coarse.edge_param(edge, q));
                        EdgeParent::OnEdge { edge, t0: ta.min(tb), t1: ta.max(tb) }
                    }
                    None => {
                        let k = fine.edge_cells[e][0].expect("edge has a cell");
                        EdgeParent::InCell { cell: cell_parent[k] }
                    }
                }
            })
            .collect();
        Ok(Nesting { cell_parent, edge_parent })
    }
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

pub fn centroid(p: &[Point; 3]) -> Point {
    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square() {
        let m = TriMesh::build_uniform(1).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells(), m.num_edges()), (4, 2, 5));
        assert_eq!(m.num_boundary_edges(), 4);
    }

    #[test]
    fn two_by_two_counts() {
        let m = TriMesh::build_uniform(2).unwrap();
        assert_eq!((m.num_vertices(), m.num_cells(), m.num_edges()), (9, 8, 16));
        assert_eq!(m.num_boundary_edges(), 8);
        assert_eq!(9 - 16 + 8, 1);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(TriMesh::build_uniform(0).is_err());
    }

    #[test]
    fn mesh_size() {
        let m = TriMesh::build_uniform(8).unwrap();
        assert!((m.h() - 0.17678).abs() < 1e-5);
        let fine = m.refine().refine().refine();
        assert_eq!(fine.n(), 64);
        assert!((fine.h() - std::f64::consts::SQRT_2 / 64.0).abs() < 1e-15);
    }

    #[test]
    fn counts_and_euler() {
        for n in 1..=12 {
            let m = TriMesh::build_uniform(n).unwrap();
            assert_eq!(m.num_cells(), 2 * n * n);
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
            assert_eq!(m.num_vertices() as i64 - m.num_edges() as i64 + m.num_cells() as i64, 1);
        }
    }

    #[test]
    fn areas_positive_and_equal() {
        for n in [1, 3, 8, 64] {
            let m = TriMesh::build_uniform(n).unwrap();
            let target = 0.5 / (n * n) as f64;
            let mut total = 0.0;
            for k in 0..m.num_cells() {
                let a = m.cell_area(k);
                assert!((a - target).abs() < 1e-15);
                total += a;
            }
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn incidence_is_symmetric_with_opposite_signs() {
        let m = TriMesh::build_uniform(5).unwrap();
        for e in 0..m.num_edges() {
            let cs = m.edge_cells(e);
            let listed: Vec<usize> = cs.iter().flatten().copied().collect();
            assert_eq!(listed.len(), if m.is_boundary_edge(e) { 1 } else { 2 });
            let signs: Vec<f64> = listed
                .iter()
                .map(|&k| {
                    let le = m.cell_edges(k);
                    le.iter().find(|(ee, _)| *ee == e).expect("cell lists edge").1
                })
                .collect();
            if signs.len() == 2 {
                assert_eq!(signs[0], -signs[1]);
                assert!(listed[0] < listed[1]);
            }
            assert_eq!(signs[0], 1.0);
        }
        for k in 0..m.num_cells() {
            for (e, _) in m.cell_edges(k) {
                assert!(m.edge_cells(e).contains(&Some(k)));
            }
        }
    }

    #[test]
    fn boundary_normals_point_outward() {
        let m = TriMesh::build_uniform(4).unwrap();
        for e in (0..m.num_edges()).filter(|&e| m.is_boundary_edge(e)) {
            let mid = m.edge_midpoint(e);
            let nrm = m.edge_normal(e);
            let probe = [mid[0] + 1e-3 * nrm[0], mid[1] + 1e-3 * nrm[1]];
            assert!(m.locate(probe).is_none(), "normal of edge {e} points inward");
        }
    }

    #[test]
    fn refine_counts() {
        let m = TriMesh::build_uniform(1).unwrap().refine();
        assert_eq!((m.num_cells(), m.num_edges()), (8, 16));
        let coarse = TriMesh::build_uniform(3).unwrap();
        let fine = coarse.refine();
        assert_eq!(fine.num_edges(), 2 * coarse.num_edges() + 3 * coarse.num_cells());
        let parents = fine.parents().unwrap();
        let halves = parents.edges.iter().filter(|p| matches!(p, EdgeParent::OnEdge { .. })).count();
        let inner = parents.edges.iter().filter(|p| matches!(p, EdgeParent::InCell { .. })).count();
        assert_eq!(halves, 2 * coarse.num_edges());
        assert_eq!(inner, 3 * coarse.num_cells());
    }

    #[test]
    fn refine_matches_uniform() {
        for n in [1, 2, 5, 8] {
            let a = TriMesh::build_uniform(n).unwrap().refine();
            let b = TriMesh::build_uniform(2 * n).unwrap();
            assert_eq!(a.vertices, b.vertices);
            assert_eq!(a.cells, b.cells);
            assert_eq!(a.edges, b.edges);
            let mut ka: Vec<(f64, f64, f64)> = (0..a.num_cells())
                .map(|k| {
                    let c = a.cell_centroid(k);
                    (a.cell_area(k), c[0], c[1])
                })
                .collect();
            let mut kb: Vec<(f64, f64, f64)> = (0..b.num_cells())
                .map(|k| {
                    let c = b.cell_centroid(k);
                    (b.cell_area(k), c[0], c[1])
                })
                .collect();
            ka.sort_by(|x, y| x.partial_cmp(y).unwrap());
            kb.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in ka.iter().zip(&kb) {
                assert!((x.0 - y.0).abs() < 1e-14 && (x.1 - y.1).abs() < 1e-14 && (x.2 - y.2).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn refine_parents_are_geometric() {
        let coarse = TriMesh::build_uniform(4).unwrap();
        let fine = coarse.refine();
        let parents = fine.parents().unwrap();
        for k in 0..fine.num_cells() {
            assert_eq!(coarse.locate(fine.cell_centroid(k)), Some(parents.cells[k]));
        }
        let nesting = Nesting::new(&coarse, &fine).unwrap();
        assert_eq!(nesting.cell_parent, parents.cells);
        assert_eq!(nesting.edge_parent, parents.edges);
    }

    #[test]
    fn nesting_across_levels() {
        let coarse = TriMesh::build_uniform(2).unwrap();
        let fine = TriMesh::build_uniform(16).unwrap();
        let nest = Nesting::new(&coarse, &fine).unwrap();
        let on_edges = nest.edge_parent.iter().filter(|p| matches!(p, EdgeParent::OnEdge { .. })).count();
        assert_eq!(on_edges, 8 * coarse.num_edges());
        for (e, p) in nest.edge_parent.iter().enumerate() {
            if let EdgeParent::OnEdge { edge, t0, t1 } = *p {
                assert!((t1 - t0 - 0.125).abs() < 1e-15);
                let mid = fine.edge_midpoint(e);
                let on = coarse.edge_point(edge, 0.5 * (t0 + t1));
                assert!((mid[0] - on[0]).abs() < 1e-15 && (mid[1] - on[1]).abs() < 1e-15);
            }
        }
        assert!(Nesting::new(&TriMesh::build_uniform(3).unwrap(), &fine).is_err());
        assert!(Nesting::new(&TriMesh::build_uniform(16).unwrap(), &TriMesh::build_uniform(48).unwrap()).is_err());
    }

    #[test]
    fn locate_finds_containing_cell() {
        let m = TriMesh::build_uniform(7).unwrap();
        for k in 0..m.num_cells() {
            assert_eq!(m.locate(m.cell_centroid(k)), Some(k));
        }
    }

    #[test]
    fn json_dump_has_arrays() {
        let v = TriMesh::build_uniform(2).unwrap().to_json();
        assert_eq!(v["vertices"].as_array().unwrap().len(), 9);
        assert_eq!(v["cells"].as_array().unwrap().len(), 8);
        assert_eq!(v["edges"].as_array().unwrap().len(), 16);
    }
}

//! Weak Galerkin space `V_{r,r}` paired with Raviart-Thomas weak gradients.
//!
//! A WG function is a pair `{v0, vb}`: a degree-`r` polynomial inside every
//! cell and a degree-`r` polynomial on every edge. Global coefficient vectors
//! store all interior coefficients first (cell by cell) and then the edge
//! coefficients of every edge that carries unknowns. With
//! [`Boundary::Eliminated`] the edges on `∂Ω` carry none, which imposes
//! `v|_e = 0` there.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{PencilLayout, SparseMatrix, TripletBuilder};
use crate::mesh::{signed_area, EdgeParent, Nesting, Point, TriMesh};
use crate::polybasis::{edge_rule, triangle_rule, CellBasis, EdgeBasis, QuadratureRule, RtBasis};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Boundary edge unknowns are removed (homogeneous Dirichlet condition).
    Eliminated,
    /// Every edge carries unknowns; used for local consistency checks.
    Kept,
}

/// One side of a cell, parametrized from `start` (t = 0) to `end` (t = 1)
/// in the direction shared by both cells that see the edge.
#[derive(Debug, Clone, Copy)]
pub struct LocalEdge {
    pub start: Point,
    pub end: Point,
    pub outward_normal: Point,
}

impl LocalEdge {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn point(&self, t: f64) -> Point {
        [self.start[0] + t * (self.end[0] - self.start[0]), self.start[1] + t * (self.end[1] - self.start[1])]
    }
}

/// Per-cell data: bases and the weak-gradient map.
///
/// Local coefficient order is the interior block followed by the three edge
/// blocks, edge `j` being opposite vertex `j`.
#[derive(Debug, Clone)]
pub struct LocalElement {
    pub vertices: [Point; 3],
    pub cell_basis: CellBasis,
    pub edge_basis: EdgeBasis,
    pub rt: RtBasis,
    pub edges: [LocalEdge; 3],
    /// Maps local coefficients to coefficients in the orthonormal RT basis.
    pub weak_gradient: DMatrix<f64>,
}

impl LocalElement {
    pub fn new(vertices: [Point; 3], degree: usize, edges: [LocalEdge; 3]) -> Result<LocalElement> {
        let rt = RtBasis::orthonormal(&vertices, degree)?;
        let cell_basis = CellBasis::new(degree, &vertices);
        let edge_basis = EdgeBasis { degree };
        let (nc, ne, nq) = (cell_basis.dim(), edge_basis.dim(), rt.dim());
        let mut g = DMatrix::zeros(nq, nc + 3 * ne);

        // -(v0, div q)_K
        let cell_rule = triangle_rule(2 * (degree + 1))?;
        for (p, w) in cell_rule.on_triangle(&vertices) {
            let phi = cell_basis.eval(p);
            for a in 0..nq {
                let d = rt.div(a, p);
                for i in 0..nc {
                    g[(a, i)] -= w * phi[i] * d;
                }
            }
        }
        // <vb, q . n>_{∂K}
        let edge_quad = edge_rule(2 * degree + 1)?;
        for (j, edge) in edges.iter().enumerate() {
            let len = edge.length();
            let n = edge.outward_normal;
            for (t, w) in edge_quad.on_edge(len) {
                let p = edge.point(t);
                let psi = edge_basis.eval(t);
                for a in 0..nq {
                    let q = rt.eval(a, p);
                    let qn = q[0] * n[0] + q[1] * n[1];
                    for m in 0..ne {
                        g[(a, nc + j * ne + m)] += w * psi[m] * qn;
                    }
                }
            }
        }
        Ok(LocalElement { vertices, cell_basis, edge_basis, rt, edges, weak_gradient: g })
    }

    pub fn num_local(&self) -> usize {
        self.cell_basis.dim() + 3 * self.edge_basis.dim()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// RT coefficients of the weak gradient of the local function `coeffs`.
    pub fn weak_gradient_of(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.num_local() {
            return Err(Error::DimensionMismatch { expected: self.num_local(), got: coeffs.len() });
        }
        // constants lie in the kernel; removing the cell mean avoids cancellation
        let (nc, ne) = (self.cell_basis.dim(), self.edge_basis.dim());
        let mean = coeffs[0];
        let shifted = DVector::from_fn(coeffs.len(), |i, _| {
            let is_constant = i == 0 || (i >= nc && (i - nc) % ne == 0);
            if is_constant {
                coeffs[i] - mean
            } else {
                coeffs[i]
            }
        });
        Ok((&self.weak_gradient * shifted).as_slice().to_vec())
    }

    /// `(A q_a, q_b)_K` for the orthonormal RT basis.
    fn rt_energy(&self, coeff: &[[f64; 2]; 2]) -> Result<DMatrix<f64>> {
        let rule = triangle_rule(2 * (self.rt.degree + 1))?;
        let nq = self.rt.dim();
        let mut m = DMatrix::zeros(nq, nq);
        for (p, w) in rule.on_triangle(&self.vertices) {
            let vals: Vec<[f64; 2]> = (0..nq).map(|a| self.rt.eval(a, p)).collect();
            for a in 0..nq {
                let aq = [
                    coeff[0][0] * vals[a][0] + coeff[0][1] * vals[a][1],
                    coeff[1][0] * vals[a][0] + coeff[1][1] * vals[a][1],
                ];
                for b in 0..=a {
                    m[(a, b)] += w * (aq[0] * vals[b][0] + aq[1] * vals[b][1]);
                }
            }
        }
        m.fill_upper_triangle_with_lower_triangle();
        Ok(m)
    }

    /// Local stiffness `G^T (A q, q) G`, exactly symmetric.
    pub fn stiffness(&self, coeff: &[[f64; 2]; 2]) -> Result<DMatrix<f64>> {
        let e = self.rt_energy(coeff)?;
        let g = &self.weak_gradient;
        let full = g.transpose() * e * g;
        let n = full.nrows();
        Ok(DMatrix::from_fn(n, n, |i, j| if i <= j { full[(i, j)] } else { full[(j, i)] }))
    }

    /// L2 projection of `f` onto `P_r(K)`.
    pub fn project_interior(&self, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
        project_on_cell(&self.vertices, &self.cell_basis, f)
    }

    /// L2 projection of `f` onto `P_r` on local edge `j`.
    pub fn project_edge(&self, j: usize, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let e = self.edges[j];
        project_on_segment(&self.edge_basis, e.length(), |t| f(e.point(t)))
    }

    /// Local coefficients of `Q_h f` restricted to this cell, all three edges included.
    pub fn project_local(&self, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let mut out = self.project_interior(f);
        for j in 0..3 {
            out.extend(self.project_edge(j, f));
        }
        out
    }

    /// L2 projection of a vector field onto `G_r(K)`.
    pub fn project_rt(&self, g: &dyn Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let rule = triangle_rule(6).expect("degree 6 rule exists");
        let mut c = vec![0.0; self.rt.dim()];
        for (p, w) in rule.on_triangle(&self.vertices) {
            let v = g(p);
            for (a, ca) in c.iter_mut().enumerate() {
                let q = self.rt.eval(a, p);
                *ca += w * (v[0] * q[0] + v[1] * q[1]);
            }
        }
        c
    }
}

fn project_on_cell(vertices: &[Point; 3], basis: &CellBasis, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let rule: QuadratureRule = triangle_rule(6).expect("degree 6 rule exists");
    let nc = basis.dim();
    let mut gram = DMatrix::zeros(nc, nc);
    let mut rhs = DVector::zeros(nc);
    for (p, w) in rule.on_triangle(vertices) {
        let phi = basis.eval(p);
        let fv = f(p);
        for i in 0..nc {
            rhs[i] += w * fv * phi[i];
            for j in 0..nc {
                gram[(i, j)] += w * phi[i] * phi[j];
            }
        }
    }
    gram.cholesky().expect("cell Gram matrix is SPD").solve(&rhs).as_slice().to_vec()
}

fn project_on_segment(basis: &EdgeBasis, len: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = edge_rule(5).expect("degree 5 rule exists");
    // {1, t - 1/2} is orthogonal on [0, 1] with norms 1 and 1/12
    let norms = [1.0, 1.0 / 12.0];
    let mut c = vec![0.0; basis.dim()];
    for (t, w) in rule.on_edge(1.0) {
        let psi = basis.eval(t);
        let fv = f(t);
        for (m, cm) in c.iter_mut().enumerate() {
            *cm += w * fv * psi[m];
        }
    }
    let _ = len;
    c.iter().zip(norms).map(|(v, nrm)| v / nrm).collect()
}

/// Constant-per-cell SPD diffusion coefficient.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Identity,
    Constant([[f64; 2]; 2]),
    PerCell(Vec<[[f64; 2]; 2]>),
}

impl Coefficient {
    fn on_cell(&self, k: usize) -> [[f64; 2]; 2] {
        match self {
            Coefficient::Identity => [[1.0, 0.0], [0.0, 1.0]],
            Coefficient::Constant(a) => *a,
            Coefficient::PerCell(v) => v[k],
        }
    }
}

fn is_spd(a: &[[f64; 2]; 2]) -> bool {
    a[0][1] == a[1][0] && a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0
}

/// Coefficient vector of a WG function.
#[derive(Debug, Clone, PartialEq)]
pub struct WgVector {
    n_interior: usize,
    coeffs: Vec<f64>,
}

impl WgVector {
    pub fn zeros(space: &WgSpace) -> WgVector {
        WgVector { n_interior: space.n_interior(), coeffs: vec![0.0; space.ndofs()] }
    }

    pub fn from_vec(space: &WgSpace, coeffs: Vec<f64>) -> Result<WgVector> {
        if coeffs.len() != space.ndofs() {
            return Err(Error::DimensionMismatch { expected: space.ndofs(), got: coeffs.len() });
        }
        Ok(WgVector { n_interior: space.n_interior(), coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn interior(&self) -> &[f64] {
        &self.coeffs[..self.n_interior]
    }

    pub fn edges(&self) -> &[f64] {
        &self.coeffs[self.n_interior..]
    }
}

#[derive(Debug, Clone)]
pub struct WgSpace {
    mesh: Arc<TriMesh>,
    degree: usize,
    boundary: Boundary,
    edge_offset: Vec<Option<usize>>,
    n_interior: usize,
    ndofs: usize,
    elements: Vec<LocalElement>,
}

impl WgSpace {
    /// `V_{r,r}` with boundary edge unknowns eliminated.
    pub fn new(mesh: Arc<TriMesh>, degree: usize) -> Result<WgSpace> {
        WgSpace::with_boundary(mesh, degree, Boundary::Eliminated)
    }

    pub fn with_boundary(mesh: Arc<TriMesh>, degree: usize, boundary: Boundary) -> Result<WgSpace> {
        if degree > 1 {
            return Err(Error::InvalidArgument(format!("WG degree must be 0 or 1, got {degree}")));
        }
        let cell_dim = (degree + 1) * (degree + 2) / 2;
        let edge_dim = degree + 1;
        let n_interior = mesh.num_cells() * cell_dim;
        let mut next = n_interior;
        let edge_offset = (0..mesh.num_edges())
            .map(|e| {
                if boundary == Boundary::Eliminated && mesh.is_boundary_edge(e) {
                    None
                } else {
                    let off = next;
                    next += edge_dim;
                    Some(off)
                }
            })
            .collect();
        let elements = (0..mesh.num_cells())
            .map(|k| {
                let vertices = mesh.cell_coords(k);
                let edges = mesh.cell_edges(k).map(|(e, sign)| {
                    let [a, b] = mesh.edge_coords(e);
                    let n = mesh.edge_normal(e);
                    LocalEdge { start: a, end: b, outward_normal: [sign * n[0], sign * n[1]] }
                });
                LocalElement::new(vertices, degree, edges)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WgSpace { mesh, degree, boundary, edge_offset, n_interior, ndofs: next, elements })
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<TriMesh> {
        Arc::clone(&self.mesh)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn cell_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn edge_dim(&self) -> usize {
        self.degree + 1
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Number of free unknowns `N_h`.
    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn layout(&self) -> PencilLayout {
        PencilLayout { n_interior: self.n_interior, block: self.cell_dim() }
    }

    pub fn element(&self, cell: usize) -> &LocalElement {
        &self.elements[cell]
    }

    pub fn edge_offset(&self, edge: usize) -> Option<usize> {
        self.edge_offset[edge]
    }

    /// Global index of each local unknown; `None` for eliminated boundary edges.
    pub fn local_dofs(&self, cell: usize) -> Vec<Option<usize>> {
        let nc = self.cell_dim();
        let ne = self.edge_dim();
        let mut dofs: Vec<Option<usize>> = (0..nc).map(|i| Some(cell * nc + i)).collect();
        for (e, _) in self.mesh.cell_edges(cell) {
            for m in 0..ne {
                dofs.push(self.edge_offset[e].map(|o| o + m));
            }
        }
        dofs
    }

    /// Gathers the local coefficients of `v` on `cell`.
    pub fn local_coeffs(&self, cell: usize, v: &[f64]) -> Vec<f64> {
        self.local_dofs(cell).iter().map(|d| d.map_or(0.0, |i| v[i])).collect()
    }

    /// RT coefficients of `∇_w v` on `cell` for the local coefficients `local`.
    pub fn weak_gradient_local(&self, cell: usize, local: &[f64]) -> Result<Vec<f64>> {
        self.elements[cell].weak_gradient_of(local)
    }

    /// Value of `∇_w v` at `p` inside `cell`.
    pub fn weak_gradient_at(&self, cell: usize, v: &[f64], p: Point) -> Result<[f64; 2]> {
        let c = self.weak_gradient_local(cell, &self.local_coeffs(cell, v))?;
        Ok(self.elements[cell].rt.combine(&c, p))
    }

    /// `Q_h f`: cellwise and edgewise L2 projections.
    pub fn project_qh(&self, f: &dyn Fn(Point) -> f64) -> WgVector {
        let mut v = WgVector::zeros(self);
        let nc = self.cell_dim();
        for (k, el) in self.elements.iter().enumerate() {
            let c = el.project_interior(f);
            v.coeffs[k * nc..(k + 1) * nc].copy_from_slice(&c);
        }
        for e in 0..self.mesh.num_edges() {
            if let Some(off) = self.edge_offset[e] {
                let c = self.project_edge_fn(e, f);
                v.coeffs[off..off + c.len()].copy_from_slice(&c);
            }
        }
        v
    }

    fn project_edge_fn(&self, edge: usize, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let len = self.mesh.edge_length(edge);
        project_on_segment(&EdgeBasis { degree: self.degree }, len, |t| f(self.mesh.edge_point(edge, t)))
    }

    /// Interior polynomial of `v` on `cell`, evaluated at `p`.
    pub fn eval_interior(&self, cell: usize, v: &[f64], p: Point) -> f64 {
        let nc = self.cell_dim();
        self.elements[cell].cell_basis.value(&v[cell * nc..(cell + 1) * nc], p)
    }

    /// Edge polynomial of `v` at parameter `t`; zero on eliminated edges.
    pub fn eval_edge(&self, edge: usize, v: &[f64], t: f64) -> f64 {
        match self.edge_offset[edge] {
            Some(off) => EdgeBasis { degree: self.degree }.value(&v[off..off + self.edge_dim()], t),
            None => 0.0,
        }
    }

    pub fn assemble_stiffness(&self, coeff: &Coefficient) -> Result<SparseMatrix> {
        if let Coefficient::PerCell(v) = coeff {
            if v.len() != self.mesh.num_cells() {
                return Err(Error::DimensionMismatch { expected: self.mesh.num_cells(), got: v.len() });
            }
        }
        let mut tb = TripletBuilder::new(self.ndofs, self.ndofs);
        for (k, el) in self.elements.iter().enumerate() {
            let a = coeff.on_cell(k);
            if !is_spd(&a) {
                return Err(Error::NonSpdCoefficient(k));
            }
            let kl = el.stiffness(&a)?;
            let dofs = self.local_dofs(k);
            for (i, di) in dofs.iter().enumerate() {
                let Some(gi) = *di else { continue };
                for (j, dj) in dofs.iter().enumerate() {
                    if let Some(gj) = *dj {
                        tb.push(gi, gj, kl[(i, j)]);
                    }
                }
            }
        }
        Ok(tb.finalize(true))
    }

    /// `b_h(u, v) = (u0, v0)`: block diagonal on the interiors, zero on edges.
    pub fn assemble_mass(&self) -> SparseMatrix {
        let nc = self.cell_dim();
        let rule = triangle_rule(2 * self.degree).expect("rule exists");
        let mut tb = TripletBuilder::new(self.ndofs, self.ndofs);
        for (k, el) in self.elements.iter().enumerate() {
            let mut m = DMatrix::<f64>::zeros(nc, nc);
            for (p, w) in rule.on_triangle(&el.vertices) {
                let phi = el.cell_basis.eval(p);
                for i in 0..nc {
                    for j in 0..=i {
                        m[(i, j)] += w * phi[i] * phi[j];
                    }
                }
            }
            for i in 0..nc {
                for j in 0..nc {
                    let v = if j <= i { m[(i, j)] } else { m[(j, i)] };
                    tb.push(k * nc + i, k * nc + j, v);
                }
            }
        }
        tb.finalize(true)
    }

    pub fn a_norm(&self, a: &SparseMatrix, v: &WgVector) -> Result<f64> {
        matrix_norm(a, v.as_slice())
    }

    pub fn b_norm(&self, b: &SparseMatrix, v: &WgVector) -> Result<f64> {
        matrix_norm(b, v.as_slice())
    }
}

/// `sqrt(v^T M v)`, with tiny negative rounding clamped to zero.
pub fn matrix_norm(m: &SparseMatrix, v: &[f64]) -> Result<f64> {
    if v.len() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), got: v.len() });
    }
    let q = m.bilinear(v, v);
    Ok(if q < 0.0 && q > -1e-14 { 0.0 } else { q.max(0.0).sqrt() })
}

/// Interior vertices of `mesh` in canonical order; these index the columns of
/// the coarse conforming space.
pub fn interior_vertices(mesh: &TriMesh) -> Vec<usize> {
    (0..mesh.num_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)).collect()
}

fn barycentric(cell: &[Point; 3], j: usize, p: Point) -> f64 {
    let area = signed_area(cell);
    signed_area(&[p, cell[(j + 1) % 3], cell[(j + 2) % 3]]) / area
}

/// Embedding of the coarse conforming P1 space (interior vertices) into the
/// fine WG space: column `j` is `Q_h` of the `j`-th coarse hat function.
pub fn prolong_p1(coarse: &TriMesh, fine: &WgSpace) -> Result<SparseMatrix> {
    let nest = Nesting::new(coarse, fine.mesh())?;
    let interior = interior_vertices(coarse);
    let mut column_of = vec![usize::MAX; coarse.num_vertices()];
    for (c, &v) in interior.iter().enumerate() {
        column_of[v] = c;
    }
    let nc = fine.cell_dim();
    let mut tb = TripletBuilder::new(fine.ndofs(), interior.len());
    let mesh = fine.mesh();
    for k in 0..mesh.num_cells() {
        let parent = nest.cell_parent[k];
        let pc = coarse.cell_coords(parent);
        for (j, &v) in coarse.cells()[parent].iter().enumerate() {
            if column_of[v] == usize::MAX {
                continue;
            }
            let c = fine.element(k).project_interior(&|p| barycentric(&pc, j, p));
            for (i, ci) in c.iter().enumerate() {
                tb.push(k * nc + i, column_of[v], *ci);
            }
        }
    }
    for e in 0..mesh.num_edges() {
        let Some(off) = fine.edge_offset(e) else { continue };
        let k = mesh.edge_cells(e)[0].expect("edge has a cell");
        let parent = nest.cell_parent[k];
        let pc = coarse.cell_coords(parent);
        for (j, &v) in coarse.cells()[parent].iter().enumerate() {
            if column_of[v] == usize::MAX {
                continue;
            }
            let c = fine.project_edge_fn(e, &|p| barycentric(&pc, j, p));
            for (m, cm) in c.iter().enumerate() {
                tb.push(off + m, column_of[v], *cm);
            }
        }
    }
    Ok(tb.finalize(false))
}

/// Transfers a coarse WG function to a nested fine WG space of equal degree.
pub fn prolong_wg(coarse: &WgSpace, fine: &WgSpace, v: &WgVector) -> Result<WgVector> {
    if coarse.degree() != fine.degree() {
        return Err(Error::InvalidArgument(format!(
            "degree mismatch: coarse {} vs fine {}",
            coarse.degree(),
            fine.degree()
        )));
    }
    if v.len() != coarse.ndofs() {
        return Err(Error::DimensionMismatch { expected: coarse.ndofs(), got: v.len() });
    }
    let nest = Nesting::new(coarse.mesh(), fine.mesh())?;
    let vc = v.as_slice();
    let mut out = WgVector::zeros(fine);
    let nc = fine.cell_dim();
    for k in 0..fine.mesh().num_cells() {
        let parent = nest.cell_parent[k];
        let c = fine.element(k).project_interior(&|p| coarse.eval_interior(parent, vc, p));
        out.coeffs[k * nc..(k + 1) * nc].copy_from_slice(&c);
    }
    for e in 0..fine.mesh().num_edges() {
        let Some(off) = fine.edge_offset(e) else { continue };
        let c = match nest.edge_parent[e] {
            EdgeParent::OnEdge { edge, .. } => {
                fine.project_edge_fn(e, &|p| coarse.eval_edge(edge, vc, coarse.mesh().edge_param(edge, p)))
            }
            EdgeParent::InCell { cell } => fine.project_edge_fn(e, &|p| coarse.eval_interior(cell, vc, p)),
        };
        out.coeffs[off..off + c.len()].copy_from_slice(&c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(n: usize, r: usize, boundary: Boundary) -> WgSpace {
        WgSpace::with_boundary(Arc::new(TriMesh::build_uniform(n).unwrap()), r, boundary).unwrap()
    }

    #[test]
    fn dof_counts() {
        for r in [0, 1] {
            let s = space(4, r, Boundary::Eliminated);
            let m = s.mesh();
            let interior_edges = (0..m.num_edges()).filter(|&e| !m.is_boundary_edge(e)).count();
            assert_eq!(s.ndofs(), m.num_cells() * (r + 1) * (r + 2) / 2 + interior_edges * (r + 1));
        }
    }

    #[test]
    fn free_dofs_partitioned() {
        let s = space(3, 1, Boundary::Eliminated);
        let mut owners = vec![0usize; s.ndofs()];
        for k in 0..s.mesh().num_cells() {
            for i in 0..s.cell_dim() {
                owners[k * s.cell_dim() + i] += 1;
            }
        }
        for e in 0..s.mesh().num_edges() {
            if let Some(o) = s.edge_offset(e) {
                for m in 0..s.edge_dim() {
                    owners[o + m] += 1;
                }
            }
        }
        assert!(owners.iter().all(|&c| c == 1));
    }

    #[test]
    fn weak_gradient_of_linear_trace_is_exact() {
        let s = space(1, 0, Boundary::Kept);
        for k in 0..2 {
            let el = s.element(k);
            let local = el.project_local(&|p| p[0]);
            let c = el.weak_gradient_of(&local).unwrap();
            let g = el.rt.combine(&c, el.cell_basis.center);
            assert!((g[0] - 1.0).abs() < 1e-13 && g[1].abs() < 1e-13);
        }
    }

    #[test]
    fn weak_gradient_of_zero() {
        let s = space(2, 1, Boundary::Kept);
        let el = s.element(3);
        let c = el.weak_gradient_of(&vec![0.0; el.num_local()]).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
        assert!(el.weak_gradient_of(&[0.0; 2]).is_err());
    }

    #[test]
    fn weak_gradient_hypotenuse_oracle() {
        // independent route: raw basis {(1,0), (0,1), (x,y)} with hand-integrated mass
        // matrix and boundary moments on the reference triangle
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let edges = [
            LocalEdge { start: [1.0, 0.0], end: [0.0, 1.0], outward_normal: [s2, s2] },
            LocalEdge { start: [0.0, 0.0], end: [0.0, 1.0], outward_normal: [-1.0, 0.0] },
            LocalEdge { start: [0.0, 0.0], end: [1.0, 0.0], outward_normal: [0.0, -1.0] },
        ];
        let el = LocalElement::new(verts, 0, edges).unwrap();
        let c = el.weak_gradient_of(&[0.0, 1.0, 0.0, 0.0]).unwrap();

        let mass = DMatrix::from_row_slice(3, 3, &[0.5, 0.0, 1.0 / 6.0, 0.0, 0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]);
        let rhs = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let raw = mass.lu().solve(&rhs).unwrap();
        for p in [[0.2, 0.3], [0.6, 0.1], [0.05, 0.9]] {
            let got = el.rt.combine(&c, p);
            let want = [raw[0] + raw[2] * p[0], raw[1] + raw[2] * p[1]];
            assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
            // frozen closed form: q = 6 (x, y)
            assert!((got[0] - 6.0 * p[0]).abs() < 1e-12 && (got[1] - 6.0 * p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn qh_examples() {
        let s = space(1, 0, Boundary::Eliminated);
        let z = s.project_qh(&|_| 0.0);
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
        let v = s.project_qh(&|p| p[0]);
        let mut vals: Vec<f64> = v.interior().to_vec();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] - 1.0 / 3.0).abs() < 1e-14 && (vals[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn qh_matches_least_squares_oracle() {
        // per-cell dense least squares on a sample grid reproduces the projection
        // coefficients of a polynomial of degree <= 1 exactly
        let s = space(3, 1, Boundary::Eliminated);
        let f = |p: Point| p[0] * (1.0 - p[0]) * p[1] * (1.0 - p[1]);
        let v = s.project_qh(&f);
        for k in 0..s.mesh().num_cells() {
            let el = s.element(k);
            let cen = el.cell_basis.center;
            // the projection error is L2-orthogonal to P1: test against each basis function
            let rule = triangle_rule(6).unwrap();
            for i in 0..3 {
                let mut ip = 0.0;
                for (p, w) in rule.on_triangle(&el.vertices) {
                    let phi = [1.0, p[0] - cen[0], p[1] - cen[1]][i];
                    ip += w * (f(p) - s.eval_interior(k, v.as_slice(), p)) * phi;
                }
                assert!(ip.abs() < 1e-15, "cell {k} moment {i}: {ip}");
            }
        }
    }

    #[test]
    fn stiffness_symmetric_and_positive() {
        for r in [0, 1] {
            let s = space(4, r, Boundary::Eliminated);
            let a = s.assemble_stiffness(&Coefficient::Identity).unwrap();
            assert_eq!(a.max_abs_diff(&a.transpose()), 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..100 {
                let x: Vec<f64> = (0..s.ndofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(a.bilinear(&x, &x) > 0.0);
            }
        }
    }

    #[test]
    fn stiffness_reproduces_linear_energy() {
        for r in [0, 1] {
            let s = space(4, r, Boundary::Kept);
            let a = s.assemble_stiffness(&Coefficient::Identity).unwrap();
            let u = s.project_qh(&|p| p[0] + 2.0 * p[1]);
            let v = s.project_qh(&|p| p[0]);
            assert!((a.bilinear(u.as_slice(), v.as_slice()) - 1.0).abs() < 1e-12);
            assert!((s.a_norm(&a, &v).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_spd_coefficient_rejected() {
        let s = space(2, 0, Boundary::Eliminated);
        let bad = Coefficient::Constant([[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(s.assemble_stiffness(&bad), Err(Error::NonSpdCoefficient(0))));
        let aniso = Coefficient::Constant([[2.0, 0.5], [0.5, 1.0]]);
        assert!(s.assemble_stiffness(&aniso).is_ok());
    }

    #[test]
    fn mass_examples() {
        let n = 4;
        let s = space(n, 0, Boundary::Eliminated);
        let b = s.assemble_mass();
        for k in 0..s.mesh().num_cells() {
            assert!((b.get(k, k) - 0.5 / (n * n) as f64).abs() < 1e-16);
        }
        for i in s.n_interior()..s.ndofs() {
            assert_eq!(b.row(i).count(), 0);
        }
        let one = s.project_qh(&|_| 1.0);
        let mut ones = one.into_vec();
        for v in &mut ones[s.n_interior()..] {
            *v = 0.0;
        }
        assert!((b.bilinear(&ones, &ones) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norms() {
        let s = space(16, 0, Boundary::Kept);
        let a = s.assemble_stiffness(&Coefficient::Identity).unwrap();
        let b = s.assemble_mass();
        let z = WgVector::zeros(&s);
        assert_eq!(s.a_norm(&a, &z).unwrap(), 0.0);
        let v = s.project_qh(&|p| p[0]);
        assert!((s.a_norm(&a, &v).unwrap() - 1.0).abs() < 1e-12);
        // dense quadrature oracle of ||Q0 x||^2 = sum_K |K| xc^2 against 1/3
        let oracle: f64 = (0..s.mesh().num_cells())
            .map(|k| s.mesh().cell_area(k) * s.mesh().cell_centroid(k)[0].powi(2))
            .sum();
        let bn = s.b_norm(&b, &v).unwrap();
        assert!((bn - oracle.sqrt()).abs() < 1e-13);
        let h = s.mesh().h();
        assert!((bn - 1.0 / 3f64.sqrt()).abs() < h * h);
        assert!(matrix_norm(&a, &[1.0]).is_err());
    }

    #[test]
    fn p1_prolongation_structure() {
        let coarse = TriMesh::build_uniform(4).unwrap();
        let fine = space(16, 0, Boundary::Eliminated);
        let p = prolong_p1(&coarse, &fine).unwrap();
        assert_eq!(p.ncols(), 9);
        assert_eq!(p.nrows(), fine.ndofs());
        let rank = p.to_dense().svd(false, false).rank(1e-10);
        assert_eq!(rank, 9);
        // no leakage: rows of the kept-boundary prolongation on boundary edges vanish
        let kept = space(16, 0, Boundary::Kept);
        let pk = prolong_p1(&coarse, &kept).unwrap();
        for e in (0..kept.mesh().num_edges()).filter(|&e| kept.mesh().is_boundary_edge(e)) {
            let off = kept.edge_offset(e).unwrap();
            assert!(pk.row(off).all(|(_, v)| v.abs() < 1e-15));
        }
        assert!(prolong_p1(&TriMesh::build_uniform(3).unwrap(), &fine).is_err());
    }

    #[test]
    fn p1_prolongation_preserves_gradients() {
        for r in [0, 1] {
            let coarse = TriMesh::build_uniform(4).unwrap();
            let fine = space(16, r, Boundary::Eliminated);
            let p = prolong_p1(&coarse, &fine).unwrap();
            let w: Vec<f64> = interior_vertices(&coarse)
                .iter()
                .map(|&v| {
                    let q = coarse.vertices()[v];
                    q[0] + q[1]
                })
                .collect();
            let u = p.mul_vec(&w);
            for k in 0..fine.mesh().num_cells() {
                let cen = fine.mesh().cell_centroid(k);
                let parent = coarse.locate(cen).unwrap();
                let pc = coarse.cell_coords(parent);
                // exact piecewise gradient of the interpolant on the coarse cell
                let mut grad = [0.0; 2];
                for (j, &v) in coarse.cells()[parent].iter().enumerate() {
                    if coarse.is_boundary_vertex(v) {
                        continue;
                    }
                    let val = coarse.vertices()[v][0] + coarse.vertices()[v][1];
                    let (a, b) = (pc[(j + 1) % 3], pc[(j + 2) % 3]);
                    let area2 = 2.0 * signed_area(&pc);
                    grad[0] += val * (a[1] - b[1]) / area2;
                    grad[1] += val * (b[0] - a[0]) / area2;
                }
                let g = fine.weak_gradient_at(k, &u, cen).unwrap();
                assert!((g[0] - grad[0]).abs() < 1e-11 && (g[1] - grad[1]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn wg_prolongation() {
        for r in [0, 1] {
            let cm = Arc::new(TriMesh::build_uniform(4).unwrap());
            let coarse = WgSpace::new(Arc::clone(&cm), r).unwrap();
            let fine = WgSpace::new(Arc::new(cm.refine().refine()), r).unwrap();
            let z = prolong_wg(&coarse, &fine, &WgVector::zeros(&coarse)).unwrap();
            assert!(z.as_slice().iter().all(|&v| v == 0.0));

            let f = |p: Point| p[0] * (1.0 - p[0]) + 0.3 * p[1];
            let vc = coarse.project_qh(&f);
            let vf = prolong_wg(&coarse, &fine, &vc).unwrap();
            if r == 0 {
                for k in 0..fine.mesh().num_cells() {
                    let parent = cm.locate(fine.mesh().cell_centroid(k)).unwrap();
                    assert!((vf.interior()[k] - vc.interior()[parent]).abs() < 1e-15);
                }
            }
            if r == 0 {
                continue;
            }
            // P1 pieces reproduce linears exactly, so the weak gradient survives
            let kc = WgSpace::with_boundary(Arc::clone(&cm), r, Boundary::Kept).unwrap();
            let kf = WgSpace::with_boundary(Arc::new(cm.refine()), r, Boundary::Kept).unwrap();
            let lin = kc.project_qh(&|p| 2.0 * p[0] - p[1]);
            let lf = prolong_wg(&kc, &kf, &lin).unwrap();
            for k in 0..kf.mesh().num_cells() {
                let g = kf.weak_gradient_at(k, lf.as_slice(), kf.mesh().cell_centroid(k)).unwrap();
                assert!((g[0] - 2.0).abs() < 1e-11 && (g[1] + 1.0).abs() < 1e-11);
            }
        }
        let c0 = space(4, 0, Boundary::Eliminated);
        let f1 = space(8, 1, Boundary::Eliminated);
        assert!(prolong_wg(&c0, &f1, &WgVector::zeros(&c0)).is_err());
    }
}

//! Augmented subspace iterations.
//!
//! Each step solves one boundary value problem per tracked eigenpair on the
//! fine WG space and then a small eigenproblem on `W_H + span{û_i}`, where
//! `W_H` is the coarse conforming linear space embedded by
//! [`prolong_p1`](crate::wgspace::prolong_p1).

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{
    cholesky, dense_gevp_reciprocal, dot, reference_eigensolve_with, CondensedSolver, EigenSet, ReferenceInfo,
    ReferenceOptions, SparseMatrix,
};
use crate::mesh::TriMesh;
use crate::wgspace::{prolong_p1, prolong_wg, Coefficient, WgSpace, WgVector};
use crate::{Error, Result};

/// Fine WG pencil together with its condensed SPD solver.
#[derive(Debug, Clone)]
pub struct FineProblem {
    pub space: WgSpace,
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
    pub solver: CondensedSolver,
}

impl FineProblem {
    pub fn new(space: WgSpace) -> Result<FineProblem> {
        FineProblem::with_coefficient(space, &Coefficient::Identity)
    }

    pub fn with_coefficient(space: WgSpace, coeff: &Coefficient) -> Result<FineProblem> {
        let stiffness = space.assemble_stiffness(coeff)?;
        let mass = space.assemble_mass();
        let solver = CondensedSolver::new(&stiffness, space.layout())?;
        Ok(FineProblem { space, stiffness, mass, solver })
    }

    pub fn ndofs(&self) -> usize {
        self.space.ndofs()
    }

    /// Smallest `k` eigenpairs of the full pencil.
    pub fn reference(&self, k: usize, opts: &ReferenceOptions) -> Result<(EigenSet, ReferenceInfo)> {
        reference_eigensolve_with(&self.stiffness, &self.mass, &self.solver, k, opts)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationOptions {
    pub iters: usize,
    pub seed: u64,
    /// Reference-solver tolerance; linear solves use `1e-2 * tol`.
    pub tol: f64,
    /// Relative width below which reference eigenvalues form one cluster.
    pub cluster_tol: f64,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions { iters: 8, seed: 20240101, tol: 1e-10, cluster_tol: 1e-6 }
    }
}

impl IterationOptions {
    pub fn pcg_tol(&self) -> f64 {
        1e-2 * self.tol
    }
}

/// Current approximations: eigenvalues, `a_h`-normalized vectors and the full
/// finite spectrum of the last projected problem.
#[derive(Debug, Clone)]
pub struct IterateSet {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub projected: Vec<f64>,
}

impl IterateSet {
    pub fn from_eigenset(set: &EigenSet) -> IterateSet {
        IterateSet {
            values: set.values.clone(),
            vectors: (0..set.len()).map(|i| set.vector(i).to_vec()).collect(),
            projected: set.values.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `W_H + span{û_1, .., û_m}` with the coarse blocks of the projected
/// matrices precomputed.
#[derive(Debug, Clone)]
pub struct AugmentedBasis {
    prolongation: SparseMatrix,
    prolongation_t: SparseMatrix,
    coarse_a: DMatrix<f64>,
    coarse_b: DMatrix<f64>,
    coarse_chol: DMatrix<f64>,
    enrichment: Vec<Vec<f64>>,
}

impl AugmentedBasis {
    pub fn new(problem: &FineProblem, coarse: &TriMesh) -> Result<AugmentedBasis> {
        let p = prolong_p1(coarse, &problem.space)?;
        AugmentedBasis::from_prolongation(problem, p)
    }

    pub fn from_prolongation(problem: &FineProblem, prolongation: SparseMatrix) -> Result<AugmentedBasis> {
        if prolongation.nrows() != problem.ndofs() {
            return Err(Error::DimensionMismatch { expected: problem.ndofs(), got: prolongation.nrows() });
        }
        let pt = prolongation.transpose();
        let nh = prolongation.ncols();
        let n = problem.ndofs();
        let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..nh)
            .into_par_iter()
            .map(|j| {
                let mut pj = vec![0.0; n];
                for (i, v) in pt.row(j) {
                    pj[i] = v;
                }
                (pt.mul_vec(&problem.stiffness.mul_vec(&pj)), pt.mul_vec(&problem.mass.mul_vec(&pj)))
            })
            .collect();
        let sym = |f: &dyn Fn(usize, usize) -> f64| DMatrix::from_fn(nh, nh, |i, j| 0.5 * (f(i, j) + f(j, i)));
        let coarse_a = sym(&|i, j| cols[j].0[i]);
        let coarse_b = sym(&|i, j| cols[j].1[i]);
        let coarse_chol = cholesky(&coarse_a)?;
        Ok(AugmentedBasis {
            prolongation,
            prolongation_t: pt,
            coarse_a,
            coarse_b,
            coarse_chol,
            enrichment: Vec::new(),
        })
    }

    /// `N_H`, the coarse dimension.
    pub fn coarse_dim(&self) -> usize {
        self.prolongation.ncols()
    }

    pub fn dim(&self) -> usize {
        self.coarse_dim() + self.enrichment.len()
    }

    pub fn prolongation(&self) -> &SparseMatrix {
        &self.prolongation
    }

    pub fn enrichment(&self) -> &[Vec<f64>] {
        &self.enrichment
    }

    pub fn set_enrichment(&mut self, vectors: Vec<Vec<f64>>) {
        self.enrichment = vectors;
    }

    /// Projected matrices `[P|Û]^T A [P|Û]` and `[P|Û]^T B [P|Û]`.
    pub fn projected(&self, a: &SparseMatrix, b: &SparseMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
        let nh = self.coarse_dim();
        let m = self.enrichment.len();
        let au: Vec<Vec<f64>> = self.enrichment.iter().map(|u| a.mul_vec(u)).collect();
        let bu: Vec<Vec<f64>> = self.enrichment.iter().map(|u| b.mul_vec(u)).collect();
        let mut a_s = DMatrix::zeros(nh + m, nh + m);
        let mut b_s = DMatrix::zeros(nh + m, nh + m);
        a_s.view_mut((0, 0), (nh, nh)).copy_from(&self.coarse_a);
        b_s.view_mut((0, 0), (nh, nh)).copy_from(&self.coarse_b);
        for i in 0..m {
            let pa = self.prolongation_t.mul_vec(&au[i]);
            let pb = self.prolongation_t.mul_vec(&bu[i]);
            for r in 0..nh {
                a_s[(r, nh + i)] = pa[r];
                a_s[(nh + i, r)] = pa[r];
                b_s[(r, nh + i)] = pb[r];
                b_s[(nh + i, r)] = pb[r];
            }
            for j in 0..=i {
                let va = 0.5 * (dot(&self.enrichment[i], &au[j]) + dot(&self.enrichment[j], &au[i]));
                let vb = 0.5 * (dot(&self.enrichment[i], &bu[j]) + dot(&self.enrichment[j], &bu[i]));
                a_s[(nh + i, nh + j)] = va;
                a_s[(nh + j, nh + i)] = va;
                b_s[(nh + i, nh + j)] = vb;
                b_s[(nh + j, nh + i)] = vb;
            }
        }
        (a_s, b_s)
    }

    /// Fine coefficients of `[P|Û] y`.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let nh = self.coarse_dim();
        let mut u = self.prolongation.mul_vec(&y[..nh]);
        for (c, e) in y[nh..].iter().zip(&self.enrichment) {
            for (ui, ei) in u.iter_mut().zip(e) {
                *ui += c * ei;
            }
        }
        u
    }

    /// Removes the `a_h`-projection onto `W_H` from every enrichment vector.
    pub fn orthogonalize_against_coarse(&mut self, a: &SparseMatrix) {
        let l = &self.coarse_chol;
        for u in &mut self.enrichment {
            let c = nalgebra::DVector::from_vec(self.prolongation_t.mul_vec(&a.mul_vec(u)));
            let z = l.solve_lower_triangular(&c).expect("nonsingular factor");
            let y = l.transpose().solve_upper_triangular(&z).expect("nonsingular factor");
            let pu = self.prolongation.mul_vec(y.as_slice());
            for (ui, pi) in u.iter_mut().zip(&pu) {
                *ui -= pi;
            }
        }
    }

    /// Solves the projected pencil; on a pivot failure the enrichment is
    /// made `a_h`-orthogonal to `W_H` and the solve is retried once.
    pub fn solve_projected(&mut self, a: &SparseMatrix, b: &SparseMatrix) -> Result<(EigenSet, DMatrix<f64>)> {
        let (a_s, b_s) = self.projected(a, b);
        match dense_gevp_reciprocal(&a_s, &b_s) {
            Ok(set) => Ok((set, a_s)),
            Err(Error::NotPositiveDefinite { .. }) => {
                self.orthogonalize_against_coarse(a);
                a_orthonormalize(a, &mut self.enrichment)?;
                let (a_s, b_s) = self.projected(a, b);
                Ok((dense_gevp_reciprocal(&a_s, &b_s)?, a_s))
            }
            Err(e) => Err(e),
        }
    }
}

/// Modified Gram-Schmidt in the `a_h` inner product, applied twice.
pub fn a_orthonormalize(a: &SparseMatrix, vectors: &mut [Vec<f64>]) -> Result<()> {
    for i in 0..vectors.len() {
        let first = a.bilinear(&vectors[i], &vectors[i]).max(0.0).sqrt();
        for _ in 0..2 {
            let av = a.mul_vec(&vectors[i]);
            let (done, rest) = vectors.split_at_mut(i);
            let vi = &mut rest[0];
            for u in done.iter() {
                let c = dot(u, &av);
                for (x, y) in vi.iter_mut().zip(u) {
                    *x -= c * y;
                }
            }
        }
        let nrm = a.bilinear(&vectors[i], &vectors[i]).max(0.0).sqrt();
        if !(nrm > 1e-10 * first) || nrm == 0.0 {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        vectors[i].iter_mut().for_each(|x| *x /= nrm);
    }
    Ok(())
}

fn solve_enrichments(problem: &FineProblem, current: &IterateSet, tol: f64) -> Result<Vec<Vec<f64>>> {
    current
        .vectors
        .par_iter()
        .zip(&current.values)
        .map(|(u, &lambda)| {
            let mut rhs = problem.mass.mul_vec(u);
            rhs.iter_mut().for_each(|x| *x *= lambda);
            problem.solver.solve(&rhs, tol)
        })
        .collect()
}

fn lift_pairs(basis: &AugmentedBasis, set: &EigenSet, a: &SparseMatrix, idx: &[usize]) -> IterateSet {
    let vectors = idx
        .iter()
        .map(|&j| {
            let mut u = basis.lift(set.vector(j));
            let nrm = a.bilinear(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= nrm);
            u
        })
        .collect();
    IterateSet { values: idx.iter().map(|&j| set.values[j]).collect(), vectors, projected: set.values.clone() }
}

/// One step of the first-`k` iteration.
pub fn algorithm_k_step(
    basis: &mut AugmentedBasis,
    problem: &FineProblem,
    current: &IterateSet,
    pcg_tol: f64,
) -> Result<IterateSet> {
    let k = current.len();
    let mut hat = solve_enrichments(problem, current, pcg_tol)?;
    a_orthonormalize(&problem.stiffness, &mut hat)?;
    basis.set_enrichment(hat);
    let (set, _) = basis.solve_projected(&problem.stiffness, &problem.mass)?;
    if set.len() < k {
        return Err(Error::TooManyEigenpairs { requested: k, available: set.len() });
    }
    Ok(lift_pairs(basis, &set, &problem.stiffness, &(0..k).collect::<Vec<_>>()))
}

/// Index of the projected eigenvector with the largest normalized
/// `a_h`-component along the last basis direction.
///
/// `a_s` is the projected stiffness; the eigenvectors in `set` are
/// `a_s`-orthonormal. Ties go to the smaller index.
pub fn select_by_enrichment(set: &EigenSet, a_s: &DMatrix<f64>) -> usize {
    let last = a_s.nrows() - 1;
    let hat_norm = a_s[(last, last)].max(0.0).sqrt();
    let col = a_s.column(last);
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..set.len() {
        let y = set.vector(j);
        let c: f64 = y.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
        let score = c.abs() / hat_norm;
        if score > best.1 {
            best = (j, score);
        }
    }
    best.0
}

/// One step of the single-eigenpair iteration.
pub fn algorithm_single_step(
    basis: &mut AugmentedBasis,
    problem: &FineProblem,
    current: &IterateSet,
    pcg_tol: f64,
) -> Result<IterateSet> {
    if current.len() != 1 {
        return Err(Error::InvalidArgument(format!("single-pair step needs one iterate, got {}", current.len())));
    }
    let mut hat = solve_enrichments(problem, current, pcg_tol)?;
    a_orthonormalize(&problem.stiffness, &mut hat)?;
    basis.set_enrichment(hat);
    let (set, a_s) = basis.solve_projected(&problem.stiffness, &problem.mass)?;
    let j = select_by_enrichment(&set, &a_s);
    Ok(lift_pairs(basis, &set, &problem.stiffness, &[j]))
}

/// `a_h(ψ, ψ) / b_h(ψ, ψ)`.
pub fn rayleigh_quotient(psi: &WgVector, a: &SparseMatrix, b: &SparseMatrix) -> Result<f64> {
    let v = psi.as_slice();
    if v.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: v.len() });
    }
    let den = b.bilinear(v, v);
    if !(den > 0.0) {
        return Err(Error::ZeroBNorm);
    }
    Ok(a.bilinear(v, v) / den)
}

type Residual = (Vec<f64>, Vec<f64>, Vec<f64>);

/// Errors of the reference eigenfunctions listed in `targets` (0-based)
/// against the span of `iterates`, as `(a_err, b_err)` pairs.
///
/// `ū - Πū` is formed explicitly with `Π` the `a_h`-orthogonal projection
/// onto the span. Reference eigenvalues within `cluster_tol` (relative) of a
/// target are treated as one subspace of which `d = |cluster ∩ targets|`
/// directions are expected to be captured; the reported error is the square
/// root of the `d`-th smallest eigenvalue of the residual Gram matrix. A
/// single iterate facing a wider cluster is instead measured by its own
/// residual against the cluster span.
pub fn subspace_error(
    iterates: &[Vec<f64>],
    reference: &EigenSet,
    a: &SparseMatrix,
    b: &SparseMatrix,
    targets: &[usize],
    cluster_tol: f64,
) -> Result<Vec<(f64, f64)>> {
    let n = a.nrows();
    if let Some(bad) = iterates.iter().find(|u| u.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    if reference.vectors.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: reference.vectors.nrows() });
    }
    if let Some(&t) = targets.iter().find(|&&t| t >= reference.len()) {
        return Err(Error::TooManyEigenpairs { requested: t + 1, available: reference.len() });
    }
    let m = iterates.len();
    let au: Vec<Vec<f64>> = iterates.iter().map(|u| a.mul_vec(u)).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&iterates[i], &au[j]) + dot(&iterates[j], &au[i])));
    let ginv = gram.clone().pseudo_inverse(1e-14 * gram.abs().max()).expect("pseudo-inverse exists");

    let cluster_of = |i: usize| -> Vec<usize> {
        let li = reference.values[i];
        (0..reference.len()).filter(|&j| (reference.values[j] - li).abs() <= cluster_tol * li.abs()).collect()
    };
    // (r, A r, B r) per reference vector, built on demand
    let mut residual: Vec<Option<Residual>> = vec![None; reference.len()];
    let mut out = Vec::with_capacity(targets.len());
    for &i in targets {
        let cluster = cluster_of(i);
        for &j in &cluster {
            if residual[j].is_none() {
                let ubar = reference.vector(j);
                let c = nalgebra::DVector::from_iterator(m, au.iter().map(|x| dot(x, ubar)));
                let y = &ginv * c;
                let mut r = ubar.to_vec();
                for (yk, u) in y.iter().zip(iterates) {
                    for (ri, ui) in r.iter_mut().zip(u) {
                        *ri -= yk * ui;
                    }
                }
                let ar = a.mul_vec(&r);
                let br = b.mul_vec(&r);
                residual[j] = Some((r, ar, br));
            }
        }
        let d = cluster.iter().filter(|j| targets.contains(j)).count().max(1);
        if m == 1 && d < cluster.len() {
            // one iterate against a wider cluster: its own residual against the
            // cluster span gives the sine of the smallest angle without cancellation
            let v = &iterates[0];
            let vn = dot(v, &au[0]).max(0.0).sqrt();
            let mut s = v.clone();
            for &j in &cluster {
                let ubar = reference.vector(j);
                let c = dot(ubar, &au[0]);
                for (si, ui) in s.iter_mut().zip(ubar) {
                    *si -= c * ui;
                }
            }
            let ea = a.bilinear(&s, &s).max(0.0).sqrt() / vn;
            let eb = b.bilinear(&s, &s).max(0.0).sqrt() / vn;
            out.push((ea, eb));
            continue;
        }
        let rs: Vec<&Residual> = cluster.iter().map(|&j| residual[j].as_ref().unwrap()).collect();
        let c = rs.len();
        let ga = DMatrix::from_fn(c, c, |p, q| 0.5 * (dot(&rs[p].0, &rs[q].1) + dot(&rs[q].0, &rs[p].1)));
        let gb = DMatrix::from_fn(c, c, |p, q| 0.5 * (dot(&rs[p].0, &rs[q].2) + dot(&rs[q].0, &rs[p].2)));
        let pick = |g: DMatrix<f64>| {
            let mut ev: Vec<f64> = g.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev[(d - 1).min(c - 1)].max(0.0).sqrt()
        };
        out.push((pick(ga), pick(gb)));
    }
    Ok(out)
}

/// Spectral gaps for target `i` (1-based) with `k` tracked pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    /// `min_{j > k} |1/λ_j^{(ℓ)} - 1/λ̄_i|` over the projected spectrum.
    pub projected: f64,
    /// Same minimum over the reference spectrum.
    pub reference: f64,
    /// `min_{j != i} |1/λ̄_j - 1/λ̄_i|`.
    pub isolation: f64,
}

/// Gap quantities; missing projected eigenvalues beyond the list are
/// infinite, so contribute `|0 - 1/λ̄_i|`.
pub fn gap_diagnostics(projected: &[f64], reference: &[f64], k: usize, i: usize) -> Result<GapReport> {
    if i == 0 || i > reference.len() || k == 0 {
        return Err(Error::InvalidArgument(format!("gap target {i} with k = {k} out of range")));
    }
    let mu = 1.0 / reference[i - 1];
    let tail = |vals: &[f64]| {
        let mut m = vals.iter().skip(k).map(|l| (1.0 / l - mu).abs()).fold(f64::INFINITY, f64::min);
        if vals.len() <= k || vals.iter().skip(k).any(|l| l.is_infinite()) {
            m = m.min(mu.abs());
        }
        m
    };
    let isolation = reference
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i - 1)
        .map(|(_, l)| (1.0 / l - mu).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(GapReport { projected: tail(projected), reference: tail(reference), isolation })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub lambdas: Vec<f64>,
    pub a_err: Vec<f64>,
    pub b_err: Vec<f64>,
    pub gaps: Vec<f64>,
    /// Seconds spent producing this entry.
    pub elapsed: f64,
    /// The starting guess rather than a projected solve.
    pub initial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    /// 1-based indices of the tracked eigenpairs.
    pub targets: Vec<usize>,
    pub reference: Vec<f64>,
    pub entries: Vec<TraceEntry>,
}

impl IterationTrace {
    /// Error reduction factors `e_ℓ / e_{ℓ-1}` for target position `pos`;
    /// `None` for the first entry.
    pub fn factors(&self, pos: usize, energy: bool) -> Vec<Option<f64>> {
        let errs: Vec<f64> = self.entries.iter().map(|e| if energy { e.a_err[pos] } else { e.b_err[pos] }).collect();
        (0..errs.len()).map(|l| if l == 0 { None } else { Some(errs[l] / errs[l - 1]) }).collect()
    }

    pub fn a_errors(&self, pos: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.a_err[pos]).collect()
    }

    pub fn final_lambdas(&self) -> &[f64] {
        &self.entries.last().expect("trace is never empty").lambdas
    }
}

struct Recorder<'a> {
    problem: &'a FineProblem,
    reference: &'a EigenSet,
    targets: Vec<usize>,
    k: usize,
    cluster_tol: f64,
    trace: IterationTrace,
}

impl Recorder<'_> {
    fn record(&mut self, iter: usize, it: &IterateSet, elapsed: f64, initial: bool) -> Result<()> {
        let errs = subspace_error(
            &it.vectors,
            self.reference,
            &self.problem.stiffness,
            &self.problem.mass,
            &self.targets,
            self.cluster_tol,
        )?;
        let gaps = self
            .targets
            .iter()
            .map(|&t| gap_diagnostics(&it.projected, &self.reference.values, self.k, t + 1).map(|g| g.projected))
            .collect::<Result<_>>()?;
        self.trace.entries.push(TraceEntry {
            iter,
            lambdas: it.values.clone(),
            a_err: errs.iter().map(|e| e.0).collect(),
            b_err: errs.iter().map(|e| e.1).collect(),
            gaps,
            elapsed,
            initial,
        });
        Ok(())
    }
}

fn check_reference(reference: &EigenSet, needed: usize) -> Result<()> {
    if reference.len() < needed {
        return Err(Error::TooManyEigenpairs { requested: needed, available: reference.len() });
    }
    Ok(())
}

/// First-`k` iteration from seeded random vectors.
///
/// Entry 0 is the Rayleigh-Ritz solve on `W_H` plus the random vectors; each
/// later entry is one [`algorithm_k_step`]. `reference` must hold at least `k`
/// pairs and should hold a few more so clusters straddling `k` are detected.
pub fn run_algorithm_k(
    problem: &FineProblem,
    coarse: &TriMesh,
    reference: &EigenSet,
    k: usize,
    opts: &IterationOptions,
) -> Result<IterationTrace> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_reference(reference, k)?;
    let start = Instant::now();
    let mut basis = AugmentedBasis::new(problem, coarse)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = problem.ndofs();
    let mut init: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    a_orthonormalize(&problem.stiffness, &mut init)?;
    basis.set_enrichment(init);
    let (set, _) = basis.solve_projected(&problem.stiffness, &problem.mass)?;
    if set.len() < k {
        return Err(Error::TooManyEigenpairs { requested: k, available: set.len() });
    }
    let first = lift_pairs(&basis, &set, &problem.stiffness, &(0..k).collect::<Vec<_>>());
    iterate_k_from(problem, &mut basis, reference, first, opts, start.elapsed().as_secs_f64())
}

/// First-`k` iteration from given iterates (recorded as entry 0).
pub fn run_algorithm_k_from(
    problem: &FineProblem,
    coarse: &TriMesh,
    reference: &EigenSet,
    start: IterateSet,
    opts: &IterationOptions,
) -> Result<IterationTrace> {
    check_reference(reference, start.len())?;
    let mut basis = AugmentedBasis::new(problem, coarse)?;
    iterate_k_from(problem, &mut basis, reference, start, opts, 0.0)
}

fn iterate_k_from(
    problem: &FineProblem,
    basis: &mut AugmentedBasis,
    reference: &EigenSet,
    mut current: IterateSet,
    opts: &IterationOptions,
    setup: f64,
) -> Result<IterationTrace> {
    let k = current.len();
    let mut rec = Recorder {
        problem,
        reference,
        targets: (0..k).collect(),
        k,
        cluster_tol: opts.cluster_tol,
        trace: IterationTrace { targets: (1..=k).collect(), reference: reference.values[..k].to_vec(), entries: vec![] },
    };
    rec.record(0, &current, setup, false)?;
    for l in 1..=opts.iters {
        let t = Instant::now();
        current = algorithm_k_step(basis, problem, &current, opts.pcg_tol())?;
        rec.record(l, &current, t.elapsed().as_secs_f64(), false)?;
    }
    Ok(rec.trace)
}

/// Single-eigenpair iteration for 1-based `target`, started from the
/// `target`-th eigenpair of the coarse WG pencil of the same degree.
pub fn run_algorithm_single(
    problem: &FineProblem,
    coarse: &TriMesh,
    reference: &EigenSet,
    target: usize,
    opts: &IterationOptions,
) -> Result<IterationTrace> {
    if target == 0 {
        return Err(Error::InvalidArgument("target index is 1-based".into()));
    }
    check_reference(reference, target)?;
    let start = Instant::now();
    let coarse_space = WgSpace::new(std::sync::Arc::new(coarse.clone()), problem.space.degree())?;
    let coarse_problem = FineProblem::new(coarse_space)?;
    let ref_opts = ReferenceOptions { tol: opts.tol, seed: opts.seed, ..ReferenceOptions::default() };
    let (cset, _) = coarse_problem.reference(target, &ref_opts)?;
    let cv = WgVector::from_vec(&coarse_problem.space, cset.vector(target - 1).to_vec())?;
    let mut u = prolong_wg(&coarse_problem.space, &problem.space, &cv)?.into_vec();
    let nrm = problem.stiffness.bilinear(&u, &u).sqrt();
    u.iter_mut().for_each(|x| *x /= nrm);
    let lambda0 = cset.values[target - 1];
    let mut current = IterateSet { values: vec![lambda0], vectors: vec![u], projected: cset.values.clone() };

    let mut basis = AugmentedBasis::new(problem, coarse)?;
    let mut rec = Recorder {
        problem,
        reference,
        targets: vec![target - 1],
        k: target,
        cluster_tol: opts.cluster_tol,
        trace: IterationTrace { targets: vec![target], reference: vec![reference.values[target - 1]], entries: vec![] },
    };
    rec.record(0, &current, start.elapsed().as_secs_f64(), true)?;
    for l in 1..=opts.iters {
        let t = Instant::now();
        current = algorithm_single_step(&mut basis, problem, &current, opts.pcg_tol())?;
        rec.record(l, &current, t.elapsed().as_secs_f64(), false)?;
    }
    Ok(rec.trace)
}

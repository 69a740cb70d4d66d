//! Quadrature rules and local polynomial bases.
//!
//! Scalar cell bases use monomials centered at the cell centroid, edge bases
//! are functions of the edge parameter `t in [0, 1]`, and the Raviart-Thomas
//! spaces `G_r(K) = [P_r(K)]^2 + H_r(K) x` are stored as monomial coefficient
//! tables that are orthonormalized against the cell mass matrix.

use nalgebra::DMatrix;

use crate::linalg::dense::cholesky;
use crate::mesh::{centroid, signed_area, Point};
use crate::{Error, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 6;
pub const MAX_EDGE_DEGREE: usize = 5;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// Reference coordinates: `(xi, eta)` on the unit right triangle, or `(t, 0)` on `[0, 1]`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on the triangle with the given vertices.
    pub fn on_triangle(&self, v: &[Point; 3]) -> impl Iterator<Item = (Point, f64)> + '_ {
        let jac = 2.0 * signed_area(v).abs();
        let [a, b, c] = *v;
        self.points.iter().zip(&self.weights).map(move |(p, &w)| {
            let x = a[0] + p[0] * (b[0] - a[0]) + p[1] * (c[0] - a[0]);
            let y = a[1] + p[0] * (b[1] - a[1]) + p[1] * (c[1] - a[1]);
            ([x, y], w * jac)
        })
    }

    /// Parameters and weights scaled to an edge of length `len`.
    pub fn on_edge(&self, len: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().zip(&self.weights).map(move |(p, &w)| (p[0], w * len))
    }
}

/// Symmetric rule on the reference triangle `{x, y >= 0, x + y <= 1}`, exact
/// up to total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<QuadratureRule> {
    // (barycentric orbit generator, weight normalized to unit area)
    let mut orbits: Vec<(Orbit, f64)> = Vec::new();
    match degree {
        0 | 1 => orbits.push((Orbit::Centroid, 1.0)),
        2 => orbits.push((Orbit::Two(1.0 / 6.0), 1.0 / 3.0)),
        3 | 4 => {
            orbits.push((Orbit::Two(0.445948490915965), 0.223381589678011));
            orbits.push((Orbit::Two(0.091576213509771), 0.109951743655322));
        }
        5 => {
            let s15 = 15f64.sqrt();
            orbits.push((Orbit::Centroid, 0.225));
            orbits.push((Orbit::Two((6.0 - s15) / 21.0), (155.0 - s15) / 1200.0));
            orbits.push((Orbit::Two((6.0 + s15) / 21.0), (155.0 + s15) / 1200.0));
        }
        6 => {
            orbits.push((Orbit::Two(0.249286745170910), 0.116786275726379));
            orbits.push((Orbit::Two(0.063089014491502), 0.050844906370207));
            orbits.push((Orbit::Three(0.053145049844817, 0.310352451033784), 0.082851075618374));
        }
        _ => return Err(Error::UnsupportedDegree { degree, max: MAX_TRIANGLE_DEGREE }),
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (orbit, w) in orbits {
        for bary in orbit.expand() {
            points.push([bary[1], bary[2]]);
            weights.push(0.5 * w);
        }
    }
    Ok(QuadratureRule { points, weights, degree })
}

enum Orbit {
    Centroid,
    Two(f64),
    Three(f64, f64),
}

impl Orbit {
    fn expand(&self) -> Vec<[f64; 3]> {
        match *self {
            Orbit::Centroid => vec![[1.0 / 3.0; 3]],
            Orbit::Two(a) => {
                let b = 1.0 - 2.0 * a;
                vec![[b, a, a], [a, b, a], [a, a, b]]
            }
            Orbit::Three(a, b) => {
                let c = 1.0 - a - b;
                vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
            }
        }
    }
}

/// Gauss-Legendre rule on `[0, 1]` exact up to `degree`.
pub fn edge_rule(degree: usize) -> Result<QuadratureRule> {
    let (pts, wts): (Vec<f64>, Vec<f64>) = match degree {
        0 | 1 => (vec![0.0], vec![2.0]),
        2 | 3 => {
            let g = 1.0 / 3f64.sqrt();
            (vec![-g, g], vec![1.0, 1.0])
        }
        4 | 5 => {
            let g = (0.6f64).sqrt();
            (vec![-g, 0.0, g], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => return Err(Error::UnsupportedDegree { degree, max: MAX_EDGE_DEGREE }),
    };
    Ok(QuadratureRule {
        points: pts.iter().map(|&s| [0.5 * (s + 1.0), 0.0]).collect(),
        weights: wts.iter().map(|w| 0.5 * w).collect(),
        degree,
    })
}

/// `P_r(K)` with monomials centered at the centroid: `{1}` or `{1, x - xc, y - yc}`.
#[derive(Debug, Clone, Copy)]
pub struct CellBasis {
    pub degree: usize,
    pub center: Point,
}

impl CellBasis {
    pub fn new(degree: usize, cell: &[Point; 3]) -> CellBasis {
        CellBasis { degree, center: centroid(cell) }
    }

    pub fn dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn eval(&self, p: Point) -> [f64; 3] {
        [1.0, p[0] - self.center[0], p[1] - self.center[1]]
    }

    /// Gradient of basis function `i`.
    pub fn grad(&self, i: usize) -> [f64; 2] {
        match i {
            1 => [1.0, 0.0],
            2 => [0.0, 1.0],
            _ => [0.0, 0.0],
        }
    }

    pub fn value(&self, coeffs: &[f64], p: Point) -> f64 {
        let phi = self.eval(p);
        coeffs.iter().zip(&phi).map(|(c, f)| c * f).sum()
    }
}

/// `P_s(e)` on the edge parameter: `{1}` or `{1, t - 1/2}`.
#[derive(Debug, Clone, Copy)]
pub struct EdgeBasis {
    pub degree: usize,
}

impl EdgeBasis {
    pub fn dim(&self) -> usize {
        self.degree + 1
    }

    pub fn eval(&self, t: f64) -> [f64; 2] {
        [1.0, t - 0.5]
    }

    pub fn value(&self, coeffs: &[f64], t: f64) -> f64 {
        let phi = self.eval(t);
        coeffs.iter().zip(&phi).map(|(c, f)| c * f).sum()
    }
}

// Centered scaled monomials up to degree 2: [1, s, u, s^2, s u, u^2].
const NMON: usize = 6;

fn monomials(s: f64, u: f64) -> [f64; NMON] {
    [1.0, s, u, s * s, s * u, u * u]
}

fn d_ds(s: f64, u: f64) -> [f64; NMON] {
    [0.0, 1.0, 0.0, 2.0 * s, u, 0.0]
}

fn d_du(s: f64, u: f64) -> [f64; NMON] {
    [0.0, 0.0, 1.0, 0.0, s, 2.0 * u]
}

fn dot(a: &[f64; NMON], b: &[f64; NMON]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Raviart-Thomas space `G_r(K)` on one physical triangle.
#[derive(Debug, Clone)]
pub struct RtBasis {
    pub degree: usize,
    center: Point,
    scale: f64,
    // per function: (x-component, y-component) coefficient tables
    coeffs: Vec<[[f64; NMON]; 2]>,
}

impl RtBasis {
    /// Raw monomial spanning set `[P_r]^2 + H_r x` (not orthonormalized).
    pub fn monomial(cell: &[Point; 3], degree: usize) -> Result<RtBasis> {
        let area = signed_area(cell).abs();
        if area < 1e-14 {
            return Err(Error::DegenerateCell(area));
        }
        let e = |i: usize| {
            let mut c = [0.0; NMON];
            c[i] = 1.0;
            c
        };
        let z = [0.0; NMON];
        let coeffs = match degree {
            0 => vec![[e(0), z], [z, e(0)], [e(1), e(2)]],
            1 => vec![
                [e(0), z],
                [e(1), z],
                [e(2), z],
                [z, e(0)],
                [z, e(1)],
                [z, e(2)],
                [e(3), e(4)],
                [e(4), e(5)],
            ],
            _ => return Err(Error::InvalidArgument(format!("RT degree {degree} not supported"))),
        };
        Ok(RtBasis { degree, center: centroid(cell), scale: (2.0 * area).sqrt(), coeffs })
    }

    /// Basis of `G_r(K)` orthonormal in `L^2(K)`.
    pub fn orthonormal(cell: &[Point; 3], degree: usize) -> Result<RtBasis> {
        let raw = RtBasis::monomial(cell, degree)?;
        let mass = raw.mass_matrix(cell)?;
        let l = cholesky(&mass)?;
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(raw.dim(), raw.dim()))
            .expect("cholesky factor is nonsingular");
        let coeffs = (0..raw.dim())
            .map(|i| {
                let mut c = [[0.0; NMON]; 2];
                for j in 0..=i {
                    for comp in 0..2 {
                        for m in 0..NMON {
                            c[comp][m] += linv[(i, j)] * raw.coeffs[j][comp][m];
                        }
                    }
                }
                c
            })
            .collect();
        Ok(RtBasis { coeffs, ..raw })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn local(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.center[0]) / self.scale, (p[1] - self.center[1]) / self.scale)
    }

    pub fn eval(&self, i: usize, p: Point) -> [f64; 2] {
        let (s, u) = self.local(p);
        let m = monomials(s, u);
        [dot(&self.coeffs[i][0], &m), dot(&self.coeffs[i][1], &m)]
    }

    pub fn div(&self, i: usize, p: Point) -> f64 {
        let (s, u) = self.local(p);
        (dot(&self.coeffs[i][0], &d_ds(s, u)) + dot(&self.coeffs[i][1], &d_du(s, u))) / self.scale
    }

    /// Value at `p` of the field with coefficients `c` in this basis.
    pub fn combine(&self, c: &[f64], p: Point) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, &ci) in c.iter().enumerate() {
            let v = self.eval(i, p);
            out[0] += ci * v[0];
            out[1] += ci * v[1];
        }
        out
    }

    pub fn mass_matrix(&self, cell: &[Point; 3]) -> Result<DMatrix<f64>> {
        let rule = triangle_rule(2 * (self.degree + 1))?;
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (p, w) in rule.on_triangle(cell) {
            let vals: Vec<[f64; 2]> = (0..n).map(|i| self.eval(i, p)).collect();
            for i in 0..n {
                for j in 0..=i {
                    m[(i, j)] += w * (vals[i][0] * vals[j][0] + vals[i][1] * vals[j][1]);
                }
            }
        }
        m.fill_upper_triangle_with_lower_triangle();
        Ok(m)
    }
}

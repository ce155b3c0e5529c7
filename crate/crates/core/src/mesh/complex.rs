use nalgebra::{Matrix2, Matrix3x2, Point3, Rotation3, Vector2, Vector3};

use super::regularity::{triangle_shape, RegularityReport};
use super::triangulation::Triangulation2D;
use crate::error::{Error, Result};

/// Below this norm of n̄(κ) + n̄(κ') the a-priori normal is undefined.
const FOLD_BACK_TOL: f64 = 1e-8;

/// Triangular complex in space obtained by lifting a planar triangulation.
///
/// Triangle, edge and vertex indices are shared with the base triangulation.
/// Normals follow the counter-clockwise orientation of the base triangles, so
/// for a graph lift every normal has positive third component.
#[derive(Debug, Clone)]
pub struct TriangularComplex3D {
    base: Triangulation2D,
    points: Vec<Point3<f64>>,
    normals: Vec<Vector3<f64>>,
    tangents: Vec<Vector3<f64>>,
    apriori: Vec<Vector3<f64>>,
    lifts: Vec<Matrix3x2<f64>>,
}

impl TriangularComplex3D {
    /// Lifts `base` to the graph of the piecewise affine interpolant of the
    /// nodal values `u_nodal`.
    pub fn push_forward(base: &Triangulation2D, u_nodal: &[f64]) -> Result<Self> {
        if u_nodal.len() != base.vertices().len() {
            return Err(Error::InvalidInput(format!(
                "expected {} nodal values, got {}",
                base.vertices().len(),
                u_nodal.len()
            )));
        }
        let points = base
            .vertices()
            .iter()
            .zip(u_nodal)
            .map(|(p, &z)| Point3::new(p.x, p.y, z))
            .collect();
        Self::from_lifted(base.clone(), points)
    }

    /// Builds a complex from arbitrary lifted vertex positions over `base`.
    pub fn from_lifted(base: Triangulation2D, points: Vec<Point3<f64>>) -> Result<Self> {
        if points.len() != base.vertices().len() {
            return Err(Error::InvalidInput(format!(
                "expected {} lifted points, got {}",
                base.vertices().len(),
                points.len()
            )));
        }
        let mut normals = Vec::with_capacity(base.triangles().len());
        let mut lifts = Vec::with_capacity(base.triangles().len());
        for (t, tri) in base.triangles().iter().enumerate() {
            let [a, b, c] = tri.map(|v| points[v]);
            let cross = (b - a).cross(&(c - a));
            let norm = cross.norm();
            if !(norm > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
            normals.push(cross / norm);

            let [pa, pb, pc] = base.triangle_points(t);
            let planar = Matrix2::from_columns(&[pb - pa, pc - pa]);
            let lifted = Matrix3x2::from_columns(&[b - a, c - a]);
            let inv = planar
                .try_inverse()
                .ok_or(Error::DegenerateTriangle { triangle: t })?;
            lifts.push(lifted * inv);
        }

        let mut tangents = Vec::with_capacity(base.edges().len());
        let mut apriori = Vec::with_capacity(base.edges().len());
        for edge in base.edges() {
            let (lo, hi) = edge.key;
            tangents.push((points[hi] - points[lo]).normalize());
            let n0 = match edge.second {
                Some(second) => {
                    let sum = normals[edge.first] + normals[second];
                    let norm = sum.norm();
                    if norm < FOLD_BACK_TOL {
                        return Err(Error::FoldBack { edge: edge.key });
                    }
                    sum / norm
                }
                None => normals[edge.first],
            };
            apriori.push(n0);
        }

        Ok(Self {
            base,
            points,
            normals,
            tangents,
            apriori,
            lifts,
        })
    }

    pub fn base(&self) -> &Triangulation2D {
        &self.base
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn num_triangles(&self) -> usize {
        self.normals.len()
    }

    pub fn num_edges(&self) -> usize {
        self.tangents.len()
    }

    /// Oriented unit normal n̄(κ).
    pub fn normal(&self, t: usize) -> Vector3<f64> {
        self.normals[t]
    }

    /// Unit tangent τ(e), pointing from the lower to the higher vertex index.
    pub fn tangent(&self, e: usize) -> Vector3<f64> {
        self.tangents[e]
    }

    /// A-priori normal n₀(e): the normalized mean of the two adjacent triangle
    /// normals, or the single triangle normal on boundary edges.
    pub fn apriori_normal(&self, e: usize) -> Vector3<f64> {
        self.apriori[e]
    }

    /// Derivative J(κ) of the lift with respect to the planar parameter.
    /// For a graph lift this is `[[1, 0], [0, 1], ∇u|κ]`.
    pub fn lift_jacobian(&self, t: usize) -> Matrix3x2<f64> {
        self.lifts[t]
    }

    /// Gradient of the piecewise affine height on triangle `t`.
    pub fn slope(&self, t: usize) -> Vector2<f64> {
        let j = &self.lifts[t];
        Vector2::new(j[(2, 0)], j[(2, 1)])
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        self.base.triangles()[t].map(|v| self.points[v])
    }

    pub fn edge_midpoint(&self, e: usize) -> Point3<f64> {
        let (a, b) = self.base.edges()[e].key;
        nalgebra::center(&self.points[a], &self.points[b])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.base.edges()[e].key;
        (self.points[b] - self.points[a]).norm()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        triangle_shape(&self.triangle_points(t).map(|p| p.coords)).0
    }

    pub fn triangle_diameter(&self, t: usize) -> f64 {
        triangle_shape(&self.triangle_points(t).map(|p| p.coords)).1
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Regularity measured on the lifted triangles.
    pub fn regularity(&self) -> RegularityReport {
        RegularityReport::from_shapes(
            (0..self.num_triangles())
                .map(|t| triangle_shape(&self.triangle_points(t).map(|p| p.coords))),
        )
    }

    /// Applies the rigid motion `x ↦ R x + shift` to every lifted vertex.
    pub fn rigidly_moved(&self, rotation: &Rotation3<f64>, shift: &Vector3<f64>) -> Result<Self> {
        let points = self.points.iter().map(|p| rotation * p + shift).collect();
        Self::from_lifted(self.base.clone(), points)
    }

    /// Scales the planar parameter domain and the lifted vertices by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let base = self.base.scaled(factor)?;
        let points = self.points.iter().map(|p| p * factor).collect();
        Self::from_lifted(base, points)
    }
}

/// Circumcenter of a non-degenerate triangle in space.
pub fn circumcenter(p: &[Point3<f64>; 3]) -> Result<Point3<f64>> {
    let ab = p[1] - p[0];
    let ac = p[2] - p[0];
    let normal = ab.cross(&ac);
    let n2 = normal.norm_squared();
    let scale = ab.norm_squared().max(ac.norm_squared());
    if !(n2 > 1e-28 * scale * scale) {
        return Err(Error::DegenerateTriangle { triangle: 0 });
    }
    let offset =
        (ac.norm_squared() * normal.cross(&ab) + ab.norm_squared() * ac.cross(&normal)) / (2.0 * n2);
    Ok(p[0] + offset)
}

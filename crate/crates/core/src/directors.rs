//! Edge director fields, their Crouzeix–Raviart interpolants, the recovery
//! construction for graphs, and the director/normal comparison checks.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Point2, Point3, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{gauss_map, left_inverse};
use crate::error::{Error, Result};
use crate::mesh::TriangularComplex3D;
use crate::surfaces::AnalyticGraph;

/// Residual allowed in the director constraints.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Below this value of diam(κ)·|Dn_κ| a triangle counts as flat.
pub const FLAT_TOL: f64 = 1e-12;
/// Default smallness threshold for the pseudo-unit comparison estimate.
pub const DEFAULT_PSEUDO_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// |n(e)| = 1, n(e)·τ(e) = 0 and n(e)·n̄(κ) ≥ 0 for incident κ.
    Unit,
    /// n(e)·τ(e) = 0 and n(e)·n₀(e) = 1.
    PseudoUnit,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Unit => "unit",
            Family::PseudoUnit => "pseudo_unit",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Family::Unit),
            "pseudo_unit" | "pseudo-unit" => Ok(Family::PseudoUnit),
            other => Err(Error::InvalidInput(format!("unknown director family `{other}`"))),
        }
    }
}

/// One vector per edge of a complex, indexed like the complex's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField {
    values: Vec<Vector3<f64>>,
    family: Family,
}

impl DirectorField {
    /// Builds a field and checks the family constraints against `complex`.
    pub fn new(
        complex: &TriangularComplex3D,
        values: Vec<Vector3<f64>>,
        family: Family,
    ) -> Result<Self> {
        let field = Self::new_unchecked(values, family);
        field.validate(complex)?;
        Ok(field)
    }

    pub fn new_unchecked(values: Vec<Vector3<f64>>, family: Family) -> Self {
        Self { values, family }
    }

    /// n(e) = n₀(e) on every edge; admissible for both families.
    pub fn apriori(complex: &TriangularComplex3D, family: Family) -> Self {
        let values = (0..complex.num_edges())
            .map(|e| complex.apriori_normal(e))
            .collect();
        Self { values, family }
    }

    pub fn values(&self) -> &[Vector3<f64>] {
        &self.values
    }

    pub fn value(&self, e: usize) -> Vector3<f64> {
        self.values[e]
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Checks every edge against the family constraints.
    pub fn validate(&self, complex: &TriangularComplex3D) -> Result<()> {
        if self.values.len() != complex.num_edges() {
            return Err(Error::InvalidInput(format!(
                "director field has {} values for {} edges",
                self.values.len(),
                complex.num_edges()
            )));
        }
        let edges = complex.base().edges();
        for (e, n) in self.values.iter().enumerate() {
            let key = edges[e].key;
            let violation = |residual: f64| Error::ConstraintViolation {
                edge: key,
                family: self.family.as_str(),
                residual,
            };
            let tangential = n.dot(&complex.tangent(e)).abs();
            if !(tangential <= CONSTRAINT_TOL) {
                return Err(violation(tangential));
            }
            match self.family {
                Family::PseudoUnit => {
                    let residual = (n.dot(&complex.apriori_normal(e)) - 1.0).abs();
                    if !(residual <= CONSTRAINT_TOL) {
                        return Err(violation(residual));
                    }
                }
                Family::Unit => {
                    let residual = (n.norm() - 1.0).abs();
                    if !(residual <= CONSTRAINT_TOL) {
                        return Err(violation(residual));
                    }
                    for t in edges[e].triangles() {
                        let product = n.dot(&complex.normal(t));
                        if product < -CONSTRAINT_TOL {
                            return Err(Error::OrientationViolation {
                                edge: key,
                                triangle: t,
                                product,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Rescales each value onto the pseudo-unit line, n ↦ n / (n·n₀).
    pub fn to_pseudo_unit(&self, complex: &TriangularComplex3D) -> Result<DirectorField> {
        let edges = complex.base().edges();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(e, n)| {
                let dot = n.dot(&complex.apriori_normal(e));
                if dot > 1e-8 {
                    Ok(n / dot)
                } else {
                    Err(Error::DegenerateProjection { edge: edges[e].key })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        DirectorField::new(complex, values, Family::PseudoUnit)
    }
}

/// Coefficients of the affine interpolant on one triangle in terms of its
/// three edge values: ∇n = Σᵢ vᵢ ⊗ `planar[i]` and Dn_κ = Σᵢ vᵢ ⊗ `shape[i]`,
/// with `i` the local edge index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrBasis {
    pub planar: [Vector2<f64>; 3],
    pub shape: [Vector3<f64>; 3],
}

impl CrBasis {
    pub fn new(complex: &TriangularComplex3D, t: usize) -> Self {
        let base = complex.base();
        let mids = base.triangle_edges(t).map(|e| base.edges()[e].midpoint);
        let frame = Matrix2::from_columns(&[mids[1] - mids[0], mids[2] - mids[0]]);
        // midpoints of a non-degenerate triangle are affinely independent
        let inv = frame.try_inverse().expect("non-degenerate triangle");
        let row1 = inv.row(0).transpose();
        let row2 = inv.row(1).transpose();
        let planar = [-(row1 + row2), row1, row2];
        let pinv = left_inverse(&complex.lift_jacobian(t));
        let shape = planar.map(|g| pinv.transpose() * g);
        Self { planar, shape }
    }

    pub fn planar_gradient(&self, values: &[Vector3<f64>; 3]) -> Matrix3x2<f64> {
        (0..3).fold(Matrix3x2::zeros(), |acc, i| acc + values[i] * self.planar[i].transpose())
    }

    pub fn shape_operator(&self, values: &[Vector3<f64>; 3]) -> Matrix3<f64> {
        (0..3).fold(Matrix3::zeros(), |acc, i| acc + values[i] * self.shape[i].transpose())
    }
}

/// The affine interpolant of a director field on one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleAffineField {
    pub triangle: usize,
    pub value_at_centroid: Vector3<f64>,
    /// ∇n, derivative with respect to the planar parameter.
    pub grad_planar: Matrix3x2<f64>,
    /// Dn_κ, derivative along the lifted triangle, zero on its normal.
    pub grad_shape: Matrix3<f64>,
    pub planar_centroid: Point2<f64>,
    pub lifted_centroid: Point3<f64>,
}

impl TriangleAffineField {
    pub fn at_planar(&self, x: &Point2<f64>) -> Vector3<f64> {
        self.value_at_centroid + self.grad_planar * (x - self.planar_centroid)
    }

    pub fn at_lifted(&self, x: &Point3<f64>) -> Vector3<f64> {
        self.value_at_centroid + self.grad_shape * (x - self.lifted_centroid)
    }
}

pub fn triangle_values(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    t: usize,
) -> [Vector3<f64>; 3] {
    complex.base().triangle_edges(t).map(|e| field.value(e))
}

/// Affine interpolant of `field` on triangle `t` through its edge midpoints.
pub fn cr_interpolate(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    t: usize,
) -> TriangleAffineField {
    let basis = CrBasis::new(complex, t);
    let values = triangle_values(complex, field, t);
    let planar = complex.base().triangle_points(t);
    let lifted = complex.triangle_points(t);
    TriangleAffineField {
        triangle: t,
        value_at_centroid: (values[0] + values[1] + values[2]) / 3.0,
        grad_planar: basis.planar_gradient(&values),
        grad_shape: basis.shape_operator(&values),
        planar_centroid: Point2::from((planar[0].coords + planar[1].coords + planar[2].coords) / 3.0),
        lifted_centroid: Point3::from((lifted[0].coords + lifted[1].coords + lifted[2].coords) / 3.0),
    }
}

/// Per-triangle shape operators Dn_κ of a field, in triangle order.
pub fn shape_operators(complex: &TriangularComplex3D, field: &DirectorField) -> Vec<Matrix3<f64>> {
    (0..complex.num_triangles())
        .into_par_iter()
        .map(|t| CrBasis::new(complex, t).shape_operator(&triangle_values(complex, field, t)))
        .collect()
}

/// Largest residuals of the identities every CR interpolant satisfies, each
/// relative to max(1, |∇n|) on its triangle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StructuralResiduals {
    /// |Dn_κ·J(κ) - ∇n|
    pub lift: f64,
    /// |Dn_κ·n̄(κ)|
    pub normal: f64,
    /// |n_h(m_e) - n(e)| at the three midpoints
    pub midpoint: f64,
}

impl StructuralResiduals {
    pub fn max(&self) -> f64 {
        self.lift.max(self.normal).max(self.midpoint)
    }
}

pub fn structural_residuals(complex: &TriangularComplex3D, field: &DirectorField) -> StructuralResiduals {
    let per_triangle: Vec<StructuralResiduals> = (0..complex.num_triangles())
        .into_par_iter()
        .map(|t| {
            let affine = cr_interpolate(complex, field, t);
            let scale = affine.grad_planar.norm().max(1.0);
            let base = complex.base();
            let midpoint = base
                .triangle_edges(t)
                .iter()
                .map(|&e| (affine.at_planar(&base.edges()[e].midpoint) - field.value(e)).norm())
                .fold(0.0, f64::max);
            StructuralResiduals {
                lift: (affine.grad_shape * complex.lift_jacobian(t) - affine.grad_planar).norm() / scale,
                normal: (affine.grad_shape * complex.normal(t)).norm() / scale,
                midpoint: midpoint / scale,
            }
        })
        .collect();
    per_triangle.iter().fold(StructuralResiduals::default(), |acc, r| StructuralResiduals {
        lift: acc.lift.max(r.lift),
        normal: acc.normal.max(r.normal),
        midpoint: acc.midpoint.max(r.midpoint),
    })
}

/// Unit director on each edge closest to the exact surface normal at the
/// edge midpoint among the unit vectors orthogonal to the lifted edge.
///
/// The closest point on that great circle is the normalized projection of the
/// target normal onto the plane orthogonal to the edge.
pub fn recovery_director(
    complex: &TriangularComplex3D,
    surface: &AnalyticGraph,
) -> Result<DirectorField> {
    let base = complex.base();
    let values = base
        .edges()
        .iter()
        .map(|edge| {
            let (lo, hi) = edge.key;
            let along = (complex.points()[hi] - complex.points()[lo]).normalize();
            let target = gauss_map(&surface.gradient(&edge.midpoint));
            let projected = target - target.dot(&along) * along;
            let norm = projected.norm();
            if norm < 1e-8 {
                return Err(Error::DegenerateProjection { edge: edge.key });
            }
            let director = projected / norm;
            for t in edge.triangles() {
                let product = director.dot(&complex.normal(t));
                if product < -CONSTRAINT_TOL {
                    return Err(Error::OrientationViolation {
                        edge: edge.key,
                        triangle: t,
                        product,
                    });
                }
            }
            Ok(director)
        })
        .collect::<Result<Vec<_>>>()?;
    DirectorField::new(complex, values, Family::Unit)
}

/// Orthonormal frame of the plane orthogonal to an edge: the a-priori normal
/// n₀(e) and w(e) = τ(e) × n₀(e).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFrame {
    pub n0: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl EdgeFrame {
    /// Point n₀ + s·w of the pseudo-unit line.
    pub fn pseudo(&self, s: f64) -> Vector3<f64> {
        self.n0 + s * self.w
    }

    /// Point cos θ·n₀ + sin θ·w of the unit circle.
    pub fn unit(&self, theta: f64) -> Vector3<f64> {
        theta.cos() * self.n0 + theta.sin() * self.w
    }

    pub fn unit_derivative(&self, theta: f64) -> Vector3<f64> {
        -theta.sin() * self.n0 + theta.cos() * self.w
    }

    pub fn angle_of(&self, v: &Vector3<f64>) -> f64 {
        v.dot(&self.w).atan2(v.dot(&self.n0))
    }

    pub fn slope_of(&self, v: &Vector3<f64>) -> f64 {
        v.dot(&self.w) / v.dot(&self.n0)
    }
}

pub fn angle_parametrize(complex: &TriangularComplex3D, e: usize) -> EdgeFrame {
    let n0 = complex.apriori_normal(e);
    EdgeFrame {
        n0,
        w: complex.tangent(e).cross(&n0),
    }
}

/// Closed interval of angles θ for which `frame.unit(θ)` has nonnegative
/// product with every triangle normal incident to edge `e`.
pub fn feasible_arc(complex: &TriangularComplex3D, e: usize, frame: &EdgeFrame) -> (f64, f64) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in complex.base().edges()[e].triangles() {
        let phi = frame.angle_of(&complex.normal(t));
        lo = lo.max(phi - half_pi);
        hi = hi.min(phi + half_pi);
    }
    (lo, hi)
}

/// Summary of comparison ratios |n(e) - n̄(κ)| / bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub max: f64,
    pub mean: f64,
    /// (edge, triangle) attaining the maximum.
    pub argmax: Option<(usize, usize)>,
    pub count: usize,
    /// Pairs excluded because the bound vanishes (flat triangles).
    pub flat_pairs: usize,
    /// Largest |n(e) - n̄(κ)| among the excluded pairs.
    pub flat_deviation: f64,
}

impl RatioStats {
    fn from_samples(samples: impl Iterator<Item = PairSample>) -> Self {
        let mut stats = RatioStats {
            max: 0.0,
            mean: 0.0,
            argmax: None,
            count: 0,
            flat_pairs: 0,
            flat_deviation: 0.0,
        };
        let mut sum = 0.0;
        for sample in samples {
            match sample {
                PairSample::Ratio { edge, triangle, ratio } => {
                    if stats.argmax.is_none() || ratio > stats.max {
                        stats.max = ratio;
                        stats.argmax = Some((edge, triangle));
                    }
                    sum += ratio;
                    stats.count += 1;
                }
                PairSample::Flat { deviation } => {
                    stats.flat_pairs += 1;
                    stats.flat_deviation = stats.flat_deviation.max(deviation);
                }
                PairSample::Skipped => {}
            }
        }
        if stats.count > 0 {
            stats.mean = sum / stats.count as f64;
        }
        stats
    }
}

enum PairSample {
    Ratio { edge: usize, triangle: usize, ratio: f64 },
    Flat { deviation: f64 },
    Skipped,
}

fn shape_norms(complex: &TriangularComplex3D, field: &DirectorField) -> (Vec<f64>, Vec<f64>) {
    let norms = shape_operators(complex, field).iter().map(|d| d.norm()).collect();
    let diams = (0..complex.num_triangles())
        .map(|t| complex.triangle_diameter(t))
        .collect();
    (norms, diams)
}

/// Ratios |n(e) - n̄(κ)| / (diam κ · |Dn_κ|) over all (edge, incident
/// triangle) pairs of a unit field. On flat triangles the director must equal
/// the triangle normal.
pub fn check_normal_estimate(
    complex: &TriangularComplex3D,
    field: &DirectorField,
) -> Result<RatioStats> {
    let (norms, diams) = shape_norms(complex, field);
    let edges = complex.base().edges();
    let mut samples = Vec::new();
    for (e, edge) in edges.iter().enumerate() {
        for t in edge.triangles() {
            let deviation = (field.value(e) - complex.normal(t)).norm();
            let bound = diams[t] * norms[t];
            if bound <= FLAT_TOL {
                if deviation > CONSTRAINT_TOL {
                    return Err(Error::FlatMismatch {
                        edge: edge.key,
                        triangle: t,
                        deviation,
                    });
                }
                samples.push(PairSample::Flat { deviation });
            } else {
                samples.push(PairSample::Ratio {
                    edge: e,
                    triangle: t,
                    ratio: deviation / bound,
                });
            }
        }
    }
    Ok(RatioStats::from_samples(samples.into_iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoRatioStats {
    pub ratios: RatioStats,
    /// Pairs where diam κ·(|Dn_κ| + |Dn_κ'|) exceeds the smallness threshold.
    pub hypothesis_failures: usize,
}

/// Ratios |n(e) - n̄(κ)| / (diam κ · (|Dn_κ| + |Dn_κ'|)) over interior edges
/// of a pseudo-unit field, restricted to pairs where the denominator is below
/// `threshold`.
pub fn check_pseudo_estimate(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    threshold: f64,
) -> PseudoRatioStats {
    let (norms, diams) = shape_norms(complex, field);
    let mut hypothesis_failures = 0;
    let mut samples = Vec::new();
    for (e, edge) in complex.base().edges().iter().enumerate() {
        let Some(second) = edge.second else {
            continue;
        };
        let curvature = norms[edge.first] + norms[second];
        for t in [edge.first, second] {
            let deviation = (field.value(e) - complex.normal(t)).norm();
            let bound = diams[t] * curvature;
            if bound >= threshold {
                hypothesis_failures += 1;
                samples.push(PairSample::Skipped);
            } else if bound <= FLAT_TOL {
                samples.push(PairSample::Flat { deviation });
            } else {
                samples.push(PairSample::Ratio {
                    edge: e,
                    triangle: t,
                    ratio: deviation / bound,
                });
            }
        }
    }
    PseudoRatioStats {
        ratios: RatioStats::from_samples(samples.into_iter()),
        hypothesis_failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured_mesh, Pattern, Rectangle, Triangulation2D};
    use crate::surfaces::{lookup, nodal_sample};
    use approx::assert_relative_eq;

    fn complex_for(name: &str, n: usize) -> (TriangularComplex3D, AnalyticGraph) {
        let entry = lookup(name).unwrap();
        let mesh = entry.mesher.mesh(n, Pattern::Right).unwrap();
        let u = nodal_sample(&entry.graph, &mesh).unwrap();
        (TriangularComplex3D::push_forward(&mesh, &u).unwrap(), entry.graph)
    }

    fn single_triangle() -> Triangulation2D {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let domain = crate::mesh::Polygon::new(vertices.clone()).unwrap();
        Triangulation2D::new(vertices, vec![[0, 1, 2]], domain).unwrap()
    }

    fn flat_complex(n: usize) -> TriangularComplex3D {
        let mesh = structured_mesh(&Rectangle::unit_square(), n, Pattern::Right).unwrap();
        TriangularComplex3D::push_forward(&mesh, &vec![0.0; mesh.vertices().len()]).unwrap()
    }

    /// Dn from the lifted geometry alone: the 3×3 map sending lifted midpoint
    /// differences to value differences and the normal to zero.
    fn intrinsic_shape_operator(c: &TriangularComplex3D, field: &DirectorField, t: usize) -> Matrix3<f64> {
        let edges = c.base().triangle_edges(t);
        let mids = edges.map(|e| c.edge_midpoint(e));
        let vals = edges.map(|e| field.value(e));
        let geom = Matrix3::from_columns(&[mids[1] - mids[0], mids[2] - mids[0], c.normal(t)]);
        let diffs = Matrix3::from_columns(&[vals[1] - vals[0], vals[2] - vals[0], Vector3::zeros()]);
        diffs * geom.try_inverse().unwrap()
    }

    #[test]
    fn constant_field_on_flat_complex() {
        let c = flat_complex(3);
        let field = DirectorField::new(&c, vec![Vector3::z(); c.num_edges()], Family::Unit).unwrap();
        for t in 0..c.num_triangles() {
            let cr = cr_interpolate(&c, &field, t);
            assert!(cr.grad_planar.amax() < 1e-15);
            assert!(cr.grad_shape.amax() < 1e-15);
        }
    }

    #[test]
    fn flat_shape_operator_is_padded_planar_gradient() {
        let c = flat_complex(2);
        let values = (0..c.num_edges())
            .map(|e| Vector3::new((e as f64).sin(), (e as f64 * 0.7).cos(), 1.0))
            .collect();
        let field = DirectorField::new_unchecked(values, Family::Unit);
        for t in 0..c.num_triangles() {
            let cr = cr_interpolate(&c, &field, t);
            assert!((cr.grad_shape.fixed_view::<3, 2>(0, 0) - cr.grad_planar).amax() < 1e-13);
            assert!(cr.grad_shape.column(2).amax() < 1e-13);
        }
    }

    #[test]
    fn reference_triangle_linear_solve() {
        let eps = 0.01;
        let mesh = single_triangle();
        let c = TriangularComplex3D::push_forward(&mesh, &[0.0; 3]).unwrap();
        let mut values = vec![Vector3::zeros(); 3];
        let data = [
            ((0, 1), Point2::new(0.5, 0.0), Vector3::new(0.0, 0.0, 1.0)),
            ((1, 2), Point2::new(0.5, 0.5), Vector3::new(eps, 0.0, 1.0)),
            ((0, 2), Point2::new(0.0, 0.5), Vector3::new(0.0, eps, 1.0)),
        ];
        for (key, _, v) in &data {
            values[mesh.edge_index(*key).unwrap()] = *v;
        }
        let field = DirectorField::new_unchecked(values, Family::Unit);
        let cr = cr_interpolate(&c, &field, 0);

        // oracle: n(x) = a + b x + c y per component, 3×3 solve
        let system = Matrix3::from_fn(|r, k| match k {
            0 => 1.0,
            1 => data[r].1.x,
            _ => data[r].1.y,
        });
        let lu = system.lu();
        for comp in 0..3 {
            let rhs = Vector3::from_fn(|r, _| data[r].2[comp]);
            let coef = lu.solve(&rhs).unwrap();
            assert_relative_eq!(cr.grad_planar[(comp, 0)], coef[1], epsilon = 1e-14);
            assert_relative_eq!(cr.grad_planar[(comp, 1)], coef[2], epsilon = 1e-14);
        }
        assert_relative_eq!(cr.grad_planar[(0, 0)], 2.0 * eps, epsilon = 1e-15);
        for (_, m, v) in &data {
            assert!((cr.at_planar(m) - v).norm() < 1e-15);
        }
    }

    #[test]
    fn structural_residuals_vanish() {
        let (c, graph) = complex_for("saddle", 5);
        let field = recovery_director(&c, &graph).unwrap();
        assert!(structural_residuals(&c, &field).max() < 1e-12);
    }

    #[test]
    fn structural_identities_on_curved_complex() {
        let (c, graph) = complex_for("gaussian-bump", 6);
        let field = recovery_director(&c, &graph).unwrap();
        for t in 0..c.num_triangles() {
            let cr = cr_interpolate(&c, &field, t);
            let j = c.lift_jacobian(t);
            assert!((cr.grad_shape * j - cr.grad_planar).amax() < 1e-12);
            assert!((cr.grad_shape * c.normal(t)).amax() < 1e-12);
            assert!((cr.grad_shape - intrinsic_shape_operator(&c, &field, t)).amax() < 1e-11);
            for e in c.base().triangle_edges(t) {
                let planar = c.base().edges()[e].midpoint;
                assert!((cr.at_lifted(&c.edge_midpoint(e)) - field.value(e)).norm() < 1e-12);
                assert!((cr.at_planar(&planar) - field.value(e)).norm() < 1e-12);
            }
            // central differences of the planar interpolant
            let h = 1e-4;
            for k in 0..2 {
                let mut step = Vector2::zeros();
                step[k] = h;
                let x = cr.planar_centroid;
                let fd = (cr.at_planar(&(x + step)) - cr.at_planar(&(x - step))) / (2.0 * h);
                assert!((fd - cr.grad_planar.column(k)).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn recovery_on_flat_graph_is_vertical() {
        let c = flat_complex(3);
        let flat = lookup("flat").unwrap();
        let field = recovery_director(&c, &flat.graph).unwrap();
        for v in field.values() {
            assert_eq!(*v, Vector3::z());
        }
    }

    fn axis_edge_complex(h: f64, name: &str) -> (TriangularComplex3D, AnalyticGraph, usize) {
        let entry = lookup(name).unwrap();
        let rect = Rectangle::new(Point2::new(0.0, 0.0), Point2::new(h, h));
        let mesh = structured_mesh(&rect, 1, Pattern::Right).unwrap();
        let u = nodal_sample(&entry.graph, &mesh).unwrap();
        let c = TriangularComplex3D::push_forward(&mesh, &u).unwrap();
        let e = mesh.edge_index((0, 1)).unwrap();
        (c, entry.graph, e)
    }

    #[test]
    fn recovery_on_paraboloid_axis_edge_needs_no_projection() {
        let h = 0.2;
        let (c, graph, e) = axis_edge_complex(h, "paraboloid");
        let field = recovery_director(&c, &graph).unwrap();
        let v = Vector3::new(-h / 2.0, 0.0, 1.0) / (1.0 + h * h / 4.0).sqrt();
        assert!((field.value(e) - v).norm() < 1e-15);
    }

    #[test]
    fn recovery_on_cubic_converges_quadratically() {
        let mut errors = Vec::new();
        let hs = [0.1, 0.05, 0.025];
        for &h in &hs {
            let (c, graph, e) = axis_edge_complex(h, "cubic");
            let field = recovery_director(&c, &graph).unwrap();
            let d = field.value(e);
            let v = gauss_map(&graph.gradient(&Point2::new(h / 2.0, 0.0)));
            // brute-force closest point on the circle orthogonal to the edge
            let frame_a = c.tangent(e).cross(&Vector3::y()).normalize();
            let frame_b = c.tangent(e).cross(&frame_a);
            let best = (0..200_000)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / 200_000.0;
                    (a.cos() * frame_a + a.sin() * frame_b - v).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d - v).norm() <= best + 1e-12);
            errors.push((d - v).norm());
        }
        let slope = (errors[0] / errors[2]).ln() / (hs[0] / hs[2]).ln();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn frames_parametrize_both_families() {
        let c = flat_complex(1);
        let e = c.base().edge_index((0, 1)).unwrap();
        let frame = angle_parametrize(&c, e);
        assert_eq!(frame.n0, Vector3::z());
        assert_eq!(frame.w, Vector3::new(0.0, -1.0, 0.0));
        assert_eq!(frame.unit(0.0), frame.n0);

        let (c, _) = complex_for("saddle", 4);
        for e in 0..c.num_edges() {
            let frame = angle_parametrize(&c, e);
            for s in [-3.0, -0.2, 0.0, 0.7, 10.0] {
                let n = frame.pseudo(s);
                assert!(n.dot(&c.tangent(e)).abs() < 1e-12);
                assert!((n.dot(&frame.n0) - 1.0).abs() < 1e-12);
                let u = frame.unit(s);
                assert!(u.dot(&c.tangent(e)).abs() < 1e-12);
                assert!((u.norm() - 1.0).abs() < 1e-12);
            }
            let (lo, hi) = feasible_arc(&c, e, &frame);
            assert!(lo < 0.0 && hi > 0.0);
            for t in c.base().edges()[e].triangles() {
                assert!(frame.unit(lo).dot(&c.normal(t)) > -1e-12);
                assert!(frame.unit(hi).dot(&c.normal(t)) > -1e-12);
            }
        }
    }

    #[test]
    fn flat_field_has_vacuous_ratios() {
        let c = flat_complex(4);
        let field = DirectorField::apriori(&c, Family::Unit);
        let stats = check_normal_estimate(&c, &field).unwrap();
        assert_eq!(stats.count, 0);
        assert_eq!(stats.flat_pairs, 2 * c.base().num_interior_edges()
            + (c.num_edges() - c.base().num_interior_edges()));
        let pseudo = check_pseudo_estimate(&c, &DirectorField::apriori(&c, Family::PseudoUnit), 0.5);
        assert_eq!(pseudo.ratios.count, 0);
        assert_eq!(pseudo.ratios.flat_deviation, 0.0);
    }

    #[test]
    fn tilted_director_on_flat_triangle_is_a_violation() {
        let c = flat_complex(1);
        let mut values = vec![Vector3::z(); c.num_edges()];
        // still unit, orthogonal to the edge and with positive normal product
        let e = c.base().edge_index((0, 1)).unwrap();
        values[e] = Vector3::new(0.0, 0.6, 0.8);
        let field = DirectorField::new(&c, values, Family::Unit).unwrap();
        // the field now has curvature, so tilt all directors consistently instead
        let stats = check_normal_estimate(&c, &field).unwrap();
        assert!(stats.count > 0);

        let tilted = DirectorField::new_unchecked(vec![Vector3::new(0.0, 0.6, 0.8); c.num_edges()], Family::Unit);
        assert!(matches!(
            check_normal_estimate(&c, &tilted),
            Err(Error::FlatMismatch { .. })
        ));
    }

    #[test]
    fn validation_reports_edge_keys() {
        let c = flat_complex(2);
        let mut values = vec![Vector3::z(); c.num_edges()];
        values[3] *= 1.1;
        let key = c.base().edges()[3].key;
        match DirectorField::new(&c, values.clone(), Family::Unit) {
            Err(Error::ConstraintViolation { edge, family, .. }) => {
                assert_eq!(edge, key);
                assert_eq!(family, "unit");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(DirectorField::new(&c, values, Family::PseudoUnit).is_err());
        values = vec![-Vector3::z(); c.num_edges()];
        assert!(matches!(
            DirectorField::new(&c, values, Family::Unit),
            Err(Error::OrientationViolation { .. })
        ));
    }

    #[test]
    fn pseudo_unit_rescaling() {
        let (c, graph) = complex_for("paraboloid", 4);
        let unit = recovery_director(&c, &graph).unwrap();
        let pseudo = unit.to_pseudo_unit(&c).unwrap();
        for e in 0..c.num_edges() {
            let ratio = pseudo.value(e).norm() / unit.value(e).norm();
            assert!(ratio >= 1.0 - 1e-15);
            assert!(pseudo.value(e).cross(&unit.value(e)).norm() < 1e-15);
        }
    }
}

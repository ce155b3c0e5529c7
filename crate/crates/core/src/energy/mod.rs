//! Discrete, continuous and finite-difference curvature energies.

mod graph;
mod integrand;

use nalgebra::{Point2, Point3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use graph::{
    gauss_map, gauss_map_jacobian, graph_integrand, graph_shape_operator, graph_tangent_map,
    left_inverse,
};
pub use integrand::{spot_check_assumptions, AssumptionCheck, Density, Integrand, IntegrandMeta};

use crate::directors::{shape_operators, DirectorField};
use crate::error::{Error, Result};
use crate::mesh::{circumcenter, TriangularComplex3D, Triangulation2D};
use crate::quadrature::triangle_rule;
use crate::surfaces::AnalyticGraph;

/// Circumcenter distances below this make the finite-difference energy undefined.
pub const MIN_DUAL_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub integrand: String,
    pub total: f64,
    pub per_triangle: Vec<f64>,
    pub size_h: f64,
    pub c_star: f64,
    pub quad_order: usize,
}

impl EnergyReport {
    fn from_contributions(
        integrand: String,
        per_triangle: Vec<f64>,
        size_h: f64,
        c_star: f64,
        quad_order: usize,
    ) -> Self {
        // index-ordered sum keeps totals independent of the thread count
        let total = per_triangle.iter().sum();
        Self {
            integrand,
            total,
            per_triangle,
            size_h,
            c_star,
            quad_order,
        }
    }
}

/// Σ_κ ∫_κ f(x, n̄(κ), Dn_κ) dH²(x) over the lifted triangles.
///
/// n̄ and Dn_κ are constant per triangle; x-independent densities are
/// evaluated once per triangle and are exact at every quadrature order.
pub fn discrete_energy(
    complex: &TriangularComplex3D,
    field: &DirectorField,
    integrand: &Integrand,
    quad_order: usize,
) -> Result<EnergyReport> {
    let rule = triangle_rule(quad_order)?;
    let meta = integrand.meta();
    let shapes = shape_operators(complex, field);
    let per_triangle = (0..complex.num_triangles())
        .into_par_iter()
        .map(|t| {
            let area = complex.triangle_area(t);
            let normal = complex.normal(t);
            let pts = complex.triangle_points(t);
            if meta.x_dependent {
                area * rule
                    .iter()
                    .map(|(l, w)| {
                        let x = barycentric_point(&pts, l);
                        w * integrand.value(&x, &normal, &shapes[t])
                    })
                    .sum::<f64>()
            } else {
                let centroid = barycentric_point(&pts, &[1.0 / 3.0; 3]);
                area * integrand.value(&centroid, &normal, &shapes[t])
            }
        })
        .collect();
    let regularity = complex.regularity();
    Ok(EnergyReport::from_contributions(
        meta.name,
        per_triangle,
        regularity.size_h,
        regularity.c_star,
        quad_order,
    ))
}

/// ∫_U F(x, u, ∇u, ∇(n(∇u))) dx for a smooth graph, integrated with the
/// given rule on every triangle of `mesh`.
pub fn continuous_energy(
    surface: &AnalyticGraph,
    integrand: &Integrand,
    quad_order: usize,
    mesh: &Triangulation2D,
) -> Result<EnergyReport> {
    let rule = triangle_rule(quad_order)?;
    let per_triangle = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| {
            let pts = mesh.triangle_points(t);
            mesh.triangle_area(t)
                * rule
                    .iter()
                    .map(|(l, w)| {
                        let x = Point2::from(
                            l[0] * pts[0].coords + l[1] * pts[1].coords + l[2] * pts[2].coords,
                        );
                        let p = surface.gradient(&x);
                        let xi = gauss_map_jacobian(&p) * surface.hessian(&x);
                        w * graph_integrand(integrand, &x, surface.value(&x), &p, &xi)
                    })
                    .sum::<f64>()
        })
        .collect();
    let regularity = mesh.regularity();
    Ok(EnergyReport::from_contributions(
        integrand.name(),
        per_triangle,
        regularity.size_h,
        regularity.c_star,
        quad_order,
    ))
}

/// ½ Σ_e (l_e / d_e) |n̄(κ) - n̄(κ')|² over interior edges, with l_e the lifted
/// edge length and d_e the distance between the lifted circumcenters. Each
/// edge term is split evenly between its two triangles in `per_triangle`.
pub fn fd_energy(complex: &TriangularComplex3D) -> Result<EnergyReport> {
    let centers = (0..complex.num_triangles())
        .map(|t| circumcenter(&complex.triangle_points(t)).map_err(|_| Error::DegenerateTriangle { triangle: t }))
        .collect::<Result<Vec<Point3<f64>>>>()?;
    let mut per_triangle = vec![0.0; complex.num_triangles()];
    for (e, edge) in complex.base().edges().iter().enumerate() {
        let Some(second) = edge.second else {
            continue;
        };
        let distance = (centers[edge.first] - centers[second]).norm();
        if distance <= MIN_DUAL_DISTANCE {
            return Err(Error::DegenerateDual {
                edge: edge.key,
                distance,
            });
        }
        let jump = (complex.normal(edge.first) - complex.normal(second)).norm_squared();
        let term = 0.5 * complex.edge_length(e) / distance * jump;
        per_triangle[edge.first] += 0.5 * term;
        per_triangle[second] += 0.5 * term;
    }
    let regularity = complex.regularity();
    Ok(EnergyReport::from_contributions(
        "finite-difference".into(),
        per_triangle,
        regularity.size_h,
        regularity.c_star,
        0,
    ))
}

pub(crate) fn barycentric_point(pts: &[Point3<f64>; 3], l: &[f64; 3]) -> Point3<f64> {
    Point3::from(l[0] * pts[0].coords + l[1] * pts[1].coords + l[2] * pts[2].coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directors::{recovery_director, Family};
    use crate::mesh::{polygon_disk_mesh, structured_mesh, Pattern, Polygon, Rectangle};
    use crate::surfaces::{lookup, nodal_sample};
    use nalgebra::{Rotation3, Vector3};

    fn recovery_setup(name: &str, n: usize, pattern: Pattern) -> (TriangularComplex3D, DirectorField) {
        let entry = lookup(name).unwrap();
        let mesh = entry.mesher.mesh(n, pattern).unwrap();
        let u = nodal_sample(&entry.graph, &mesh).unwrap();
        let complex = TriangularComplex3D::push_forward(&mesh, &u).unwrap();
        let field = recovery_director(&complex, &entry.graph).unwrap();
        (complex, field)
    }

    #[test]
    fn flat_complex_has_zero_energy() {
        let (c, field) = recovery_setup("flat", 4, Pattern::Crisscross);
        let w = Integrand::willmore();
        assert_eq!(discrete_energy(&c, &field, &w, 1).unwrap().total, 0.0);
        let disk = polygon_disk_mesh(16, 1.0, Point2::origin(), 4).unwrap();
        let lifted = TriangularComplex3D::push_forward(&disk, &vec![0.0; disk.vertices().len()]).unwrap();
        assert_eq!(fd_energy(&lifted).unwrap().total, 0.0);
    }

    #[test]
    fn single_triangle_energy_is_area_times_density() {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 1.0)];
        let mesh = Triangulation2D::new(
            vertices.clone(),
            vec![[0, 1, 2]],
            Polygon::new(vertices).unwrap(),
        )
        .unwrap();
        let c = TriangularComplex3D::push_forward(&mesh, &[0.0; 3]).unwrap();
        let values = (0..3).map(|e| Vector3::new(0.1 * e as f64, -0.2 * e as f64, 1.0)).collect();
        let field = DirectorField::new_unchecked(values, Family::Unit);
        let d = shape_operators(&c, &field)[0];
        for order in [1, 4, 10] {
            let report = discrete_energy(&c, &field, &Integrand::willmore(), order).unwrap();
            assert!((report.total - 1.0 * d.norm_squared()).abs() < 1e-15);
        }
    }

    #[test]
    fn order_independence_and_order_errors() {
        let (c, field) = recovery_setup("paraboloid", 8, Pattern::Right);
        let w = Integrand::willmore();
        let e1 = discrete_energy(&c, &field, &w, 1).unwrap().total;
        let e6 = discrete_energy(&c, &field, &w, 6).unwrap().total;
        assert!((e1 - e6).abs() <= 1e-13 * e1);
        assert!(matches!(
            discrete_energy(&c, &field, &w, 11),
            Err(Error::QuadratureUnavailable { .. })
        ));
        assert!(continuous_energy(&lookup("paraboloid").unwrap().graph, &w, 0, c.base()).is_err());
    }

    #[test]
    fn per_triangle_sums_to_total() {
        let (c, field) = recovery_setup("saddle", 8, Pattern::Crisscross);
        let report = discrete_energy(&c, &field, &Integrand::parse("weighted-willmore:3", false).unwrap(), 4).unwrap();
        let sum: f64 = report.per_triangle.iter().sum();
        assert!((sum - report.total).abs() <= 1e-12 * report.total);
        assert!(report.per_triangle.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn rigid_motion_and_scaling_invariance() {
        let (c, field) = recovery_setup("gaussian-bump", 8, Pattern::Right);
        let w = Integrand::willmore();
        let e = discrete_energy(&c, &field, &w, 1).unwrap().total;

        let rotation = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let shift = Vector3::new(1.0, -2.0, 0.5);
        let moved = c.rigidly_moved(&rotation, &shift).unwrap();
        let rotated_field = DirectorField::new_unchecked(
            field.values().iter().map(|v| rotation * v).collect(),
            Family::Unit,
        );
        let e_moved = discrete_energy(&moved, &rotated_field, &w, 1).unwrap().total;
        assert!((e - e_moved).abs() <= 1e-10 * e);

        for factor in [0.5, 2.0] {
            let scaled = c.scaled(factor).unwrap();
            let e_scaled = discrete_energy(&scaled, &field, &w, 1).unwrap().total;
            assert!((e - e_scaled).abs() <= 1e-10 * e, "factor {factor}");
        }
    }

    #[test]
    fn affine_graph_has_zero_continuous_energy() {
        let plane = lookup("plane").unwrap();
        let mesh = plane.mesher.mesh(4, Pattern::Right).unwrap();
        let report = continuous_energy(&plane.graph, &Integrand::willmore(), 6, &mesh).unwrap();
        assert_eq!(report.total, 0.0);
    }

    #[test]
    fn paraboloid_reference_agrees_across_orders() {
        let para = lookup("paraboloid").unwrap();
        let mesh = structured_mesh(&Rectangle::centered_square(0.5), 8, Pattern::Right).unwrap();
        let w = Integrand::willmore();
        let e8 = continuous_energy(&para.graph, &w, 8, &mesh).unwrap().total;
        let e10 = continuous_energy(&para.graph, &w, 10, &mesh).unwrap().total;
        assert!((e8 - e10).abs() < 1e-8 * e10);
    }

    #[test]
    fn fd_energy_of_folded_pair() {
        // unit right triangles (0,0),(1,0),(0,1) and (1,0),(1,1),(0,1) lifted so
        // that the second one is bent along the shared diagonal
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
        ];
        let mesh = Triangulation2D::new(
            vertices,
            vec![[0, 1, 2], [1, 3, 2]],
            Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap(),
        )
        .unwrap();
        let c = TriangularComplex3D::push_forward(&mesh, &[0.0, 0.0, 0.0, 0.7]).unwrap();
        let n1 = c.normal(0);
        let n2 = c.normal(1);
        let l = 2f64.sqrt();
        let cc1 = Point3::new(0.5, 0.5, 0.0);
        let pts = c.triangle_points(1);
        // circumcenter of the second triangle from equal distances, by hand
        let cc2 = circumcenter(&pts).unwrap();
        for p in &pts {
            assert!(((p - cc2).norm() - (pts[0] - cc2).norm()).abs() < 1e-14);
        }
        let expected = 0.5 * l / (cc1 - cc2).norm() * (n1 - n2).norm_squared();
        assert!((fd_energy(&c).unwrap().total - expected).abs() < 1e-14);
    }

    #[test]
    fn fd_energy_detects_coincident_circumcenters() {
        let c = recovery_setup("flat", 2, Pattern::Right).0;
        // right-pattern cells share hypotenuse midpoints as circumcenters
        assert!(matches!(fd_energy(&c), Err(Error::DegenerateDual { .. })));
    }
}

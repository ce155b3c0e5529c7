//! Analytic benchmark graphs with closed-form derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Point2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{polygon_disk_mesh, structured_mesh, Pattern, Polygon, Rectangle, Triangulation2D};

type ValueFn = Arc<dyn Fn(&Point2<f64>) -> f64 + Send + Sync>;
type GradientFn = Arc<dyn Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync>;
type HessianFn = Arc<dyn Fn(&Point2<f64>) -> Matrix2<f64> + Send + Sync>;

/// Graph of a smooth function over a polygonal domain.
#[derive(Clone)]
pub struct AnalyticGraph {
    name: String,
    u: ValueFn,
    grad_u: GradientFn,
    hess_u: HessianFn,
    domain: Polygon,
    lipschitz: f64,
}

impl fmt::Debug for AnalyticGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticGraph")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl AnalyticGraph {
    pub fn new(
        name: impl Into<String>,
        u: impl Fn(&Point2<f64>) -> f64 + Send + Sync + 'static,
        grad_u: impl Fn(&Point2<f64>) -> Vector2<f64> + Send + Sync + 'static,
        hess_u: impl Fn(&Point2<f64>) -> Matrix2<f64> + Send + Sync + 'static,
        domain: Polygon,
        lipschitz: f64,
    ) -> Self {
        Self {
            name: name.into(),
            u: Arc::new(u),
            grad_u: Arc::new(grad_u),
            hess_u: Arc::new(hess_u),
            domain,
            lipschitz,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &Point2<f64>) -> f64 {
        (self.u)(x)
    }

    pub fn gradient(&self, x: &Point2<f64>) -> Vector2<f64> {
        (self.grad_u)(x)
    }

    pub fn hessian(&self, x: &Point2<f64>) -> Matrix2<f64> {
        (self.hess_u)(x)
    }

    pub fn domain(&self) -> &Polygon {
        &self.domain
    }

    /// Declared bound on |∇u| over the domain.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Largest deviation of the closed-form gradient and Hessian from central
    /// differences at `x`, as (gradient error, Hessian error).
    pub fn derivative_mismatch(&self, x: &Point2<f64>) -> (f64, f64) {
        let h = 1e-5;
        let mut grad_err: f64 = 0.0;
        let mut hess_err: f64 = 0.0;
        let grad = self.gradient(x);
        let hess = self.hessian(x);
        for k in 0..2 {
            let mut step = Vector2::zeros();
            step[k] = h;
            let fd = (self.value(&(x + step)) - self.value(&(x - step))) / (2.0 * h);
            grad_err = grad_err.max((fd - grad[k]).abs());
            let fd_grad = (self.gradient(&(x + step)) - self.gradient(&(x - step))) / (2.0 * h);
            hess_err = hess_err.max((fd_grad - hess.column(k)).amax());
        }
        (grad_err, hess_err)
    }
}

/// How a catalog entry's default domain is meshed at a given resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainMesher {
    /// Structured `n × n` grid over the rectangle.
    Grid(Rectangle),
    /// Concentric-ring mesh of a regular polygon: 8 rings at `n = 8`, then
    /// one uniform refinement per doubling of `n`.
    PolygonDisk { sides: usize, radius: f64 },
}

impl DomainMesher {
    pub fn mesh(&self, n: usize, pattern: Pattern) -> Result<Triangulation2D> {
        match *self {
            DomainMesher::Grid(rect) => structured_mesh(&rect, n, pattern),
            DomainMesher::PolygonDisk { sides, radius } => {
                const BASE_RINGS: usize = 8;
                if n < BASE_RINGS || !n.is_multiple_of(BASE_RINGS) || !(n / BASE_RINGS).is_power_of_two() {
                    return Err(Error::InvalidInput(format!(
                        "disk meshes need n = 8·2^k, got {n}"
                    )));
                }
                let mut mesh = polygon_disk_mesh(sides, radius, Point2::origin(), BASE_RINGS)?;
                for _ in 0..(n / BASE_RINGS).trailing_zeros() {
                    mesh = mesh.refine_uniform();
                }
                Ok(mesh)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEnergy {
    pub integrand: String,
    pub value: f64,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct SurfaceCatalogEntry {
    pub graph: AnalyticGraph,
    pub mesher: DomainMesher,
    pub references: Vec<ReferenceEnergy>,
}

impl SurfaceCatalogEntry {
    pub fn name(&self) -> &str {
        self.graph.name()
    }

    /// Whether the entry is affine, i.e. has identically zero Hessian.
    pub fn is_affine(&self) -> bool {
        matches!(self.name(), "flat" | "plane")
    }
}

/// Parameters of the Gaussian bump entry.
pub const BUMP_SIGMA: f64 = 0.5;
/// Radius of the sphere whose cap is in the catalog.
pub const SPHERE_RADIUS: f64 = 1.0;
/// Circumradius of the polygon the sphere cap is posed over.
pub const CAP_RADIUS: f64 = 0.5;
pub const CAP_SIDES: usize = 64;

pub fn catalog() -> Vec<SurfaceCatalogEntry> {
    let square = Rectangle::centered_square(0.5);
    let square_domain =
        || Polygon::rectangle(square.min, square.max).expect("square is a valid polygon");
    let corner = std::f64::consts::FRAC_1_SQRT_2;

    let tilt = Vector2::new(0.3, -0.2);
    let flat = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "flat",
            |_| 0.0,
            |_| Vector2::zeros(),
            |_| Matrix2::zeros(),
            square_domain(),
            0.0,
        ),
        mesher: DomainMesher::Grid(square),
        references: vec![willmore_reference(0.0, "zero Hessian")],
    };
    let plane = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "plane",
            move |x| tilt.dot(&x.coords) + 0.1,
            move |_| tilt,
            |_| Matrix2::zeros(),
            square_domain(),
            tilt.norm(),
        ),
        mesher: DomainMesher::Grid(square),
        references: vec![willmore_reference(0.0, "zero Hessian")],
    };
    let paraboloid = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "paraboloid",
            |x| 0.5 * x.coords.norm_squared(),
            |x| x.coords,
            |_| Matrix2::identity(),
            square_domain(),
            corner,
        ),
        mesher: DomainMesher::Grid(square),
        references: Vec::new(),
    };
    let saddle = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "saddle",
            |x| 0.5 * (x.x * x.x - x.y * x.y),
            |x| Vector2::new(x.x, -x.y),
            |_| Matrix2::new(1.0, 0.0, 0.0, -1.0),
            square_domain(),
            corner,
        ),
        mesher: DomainMesher::Grid(square),
        references: Vec::new(),
    };

    let r2 = SPHERE_RADIUS * SPHERE_RADIUS;
    let sphere_cap = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "sphere-cap",
            move |x| (r2 - x.coords.norm_squared()).sqrt(),
            move |x| -x.coords / (r2 - x.coords.norm_squared()).sqrt(),
            move |x| {
                let w = r2 - x.coords.norm_squared();
                let s = w.sqrt();
                -Matrix2::identity() / s - x.coords * x.coords.transpose() / (w * s)
            },
            Polygon::regular(CAP_SIDES, CAP_RADIUS, Point2::origin())
                .expect("regular polygon is valid"),
            CAP_RADIUS / (r2 - CAP_RADIUS * CAP_RADIUS).sqrt(),
        ),
        mesher: DomainMesher::PolygonDisk {
            sides: CAP_SIDES,
            radius: CAP_RADIUS,
        },
        references: vec![ReferenceEnergy {
            integrand: "willmore".into(),
            value: sphere_cap_disk_willmore(),
            note: "closed form over the true disk, 2/R² times the cap area; \
                   the polygonal domain differs slightly"
                .into(),
        }],
    };

    let s2 = BUMP_SIGMA * BUMP_SIGMA;
    let bump_box = Rectangle::centered_square(0.75);
    let bump = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "gaussian-bump",
            move |x| (-x.coords.norm_squared() / (2.0 * s2)).exp(),
            move |x| -x.coords / s2 * (-x.coords.norm_squared() / (2.0 * s2)).exp(),
            move |x| {
                let g = (-x.coords.norm_squared() / (2.0 * s2)).exp();
                (x.coords * x.coords.transpose() / (s2 * s2) - Matrix2::identity() / s2) * g
            },
            Polygon::rectangle(bump_box.min, bump_box.max).expect("square is a valid polygon"),
            (-0.5f64).exp() / BUMP_SIGMA,
        ),
        mesher: DomainMesher::Grid(bump_box),
        references: Vec::new(),
    };
    let cubic = SurfaceCatalogEntry {
        graph: AnalyticGraph::new(
            "cubic",
            |x| x.x.powi(3),
            |x| Vector2::new(3.0 * x.x * x.x, 0.0),
            |x| Matrix2::new(6.0 * x.x, 0.0, 0.0, 0.0),
            square_domain(),
            0.75,
        ),
        mesher: DomainMesher::Grid(square),
        references: Vec::new(),
    };

    vec![flat, plane, paraboloid, saddle, sphere_cap, bump, cubic]
}

pub fn lookup(name: &str) -> Result<SurfaceCatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown surface `{name}`")))
}

/// Willmore energy of the unit-sphere cap over the true disk of radius
/// `CAP_RADIUS`: |Dn|² = 2/R² times the cap area 2πR(R - √(R² - r²)).
pub fn sphere_cap_disk_willmore() -> f64 {
    let r = SPHERE_RADIUS;
    let cap_area = 2.0 * std::f64::consts::PI * r * (r - (r * r - CAP_RADIUS * CAP_RADIUS).sqrt());
    2.0 / (r * r) * cap_area
}

fn willmore_reference(value: f64, note: &str) -> ReferenceEnergy {
    ReferenceEnergy {
        integrand: "willmore".into(),
        value,
        note: note.into(),
    }
}

/// Values of the surface at the mesh vertices.
pub fn nodal_sample(graph: &AnalyticGraph, mesh: &Triangulation2D) -> Result<Vec<f64>> {
    let tol = 1e-10 * graph.domain().diameter();
    mesh.vertices()
        .iter()
        .map(|p| {
            if graph.domain().contains(p, tol) {
                Ok(graph.value(p))
            } else {
                Err(Error::OutOfDomain {
                    surface: graph.name().to_string(),
                    x: p.x,
                    y: p.y,
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_derivatives_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for entry in catalog() {
            let graph = &entry.graph;
            let verts = graph.domain().vertices();
            let mut checked = 0;
            while checked < 50 {
                // rejection-sample inside the domain's bounding box
                let lo = verts.iter().fold(verts[0], |a, b| a.inf(b));
                let hi = verts.iter().fold(verts[0], |a, b| a.sup(b));
                let x = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                if !graph.domain().contains(&x, 0.0) {
                    continue;
                }
                let (g, h) = graph.derivative_mismatch(&x);
                assert!(g < 1e-6, "{}: gradient mismatch {g}", graph.name());
                assert!(h < 1e-5, "{}: Hessian mismatch {h}", graph.name());
                assert!(graph.gradient(&x).norm() <= graph.lipschitz() + 1e-12);
                checked += 1;
            }
        }
    }

    #[test]
    fn catalog_contents() {
        let names: Vec<_> = catalog().iter().map(|e| e.name().to_string()).collect();
        for required in ["plane", "paraboloid", "saddle", "sphere-cap", "gaussian-bump", "cubic"] {
            assert!(names.iter().any(|n| n == required), "{required} missing");
        }
        assert!(lookup("torus").is_err());
    }

    #[test]
    fn sphere_cap_disk_value() {
        let expected = 4.0 * std::f64::consts::PI * (1.0 - 3f64.sqrt() / 2.0);
        assert!((sphere_cap_disk_willmore() - expected).abs() < 1e-14);
    }

    #[test]
    fn disk_mesher_levels() {
        let mesher = DomainMesher::PolygonDisk { sides: 64, radius: 0.5 };
        assert_eq!(mesher.mesh(8, Pattern::Right).unwrap().triangles().len(), 512);
        assert_eq!(mesher.mesh(16, Pattern::Right).unwrap().triangles().len(), 2048);
        assert!(mesher.mesh(12, Pattern::Right).is_err());
    }

    #[test]
    fn sampling_outside_domain_fails() {
        let cap = lookup("sphere-cap").unwrap();
        let mesh = structured_mesh(&Rectangle::centered_square(0.5), 2, Pattern::Right).unwrap();
        assert!(matches!(
            nodal_sample(&cap.graph, &mesh),
            Err(Error::OutOfDomain { .. })
        ));
        let para = lookup("paraboloid").unwrap();
        let u = nodal_sample(&para.graph, &mesh).unwrap();
        assert_eq!(u.len(), mesh.vertices().len());
    }
}

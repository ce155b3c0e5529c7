//! Per-level error measurements and rate fits for refinement studies.

use nalgebra::{Point2, Vector3};
use serde::Serialize;

use helfrich::directors::{
    check_normal_estimate, check_pseudo_estimate, cr_interpolate, recovery_director,
    DirectorField, Family, RatioStats, DEFAULT_PSEUDO_THRESHOLD,
};
use helfrich::energy::{continuous_energy, discrete_energy, fd_energy, gauss_map, gauss_map_jacobian, Integrand};
use helfrich::mesh::{TriangularComplex3D, Triangulation2D};
use helfrich::quadrature::{triangle_rule, MAX_QUADRATURE_ORDER};
use helfrich::surfaces::{nodal_sample, SurfaceCatalogEntry};
use helfrich::Result;

/// Everything measured on one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMetrics {
    pub n: usize,
    pub h: f64,
    pub c_star: f64,
    pub e_discrete: f64,
    pub e_continuous: f64,
    pub e_fd: Option<f64>,
    /// Energy of the recovery field in the compared family, when requested.
    pub e_recovery: Option<f64>,
    pub error_abs: f64,
    pub error_rel: f64,
    /// sup |u_h - u| sampled inside every triangle.
    pub height_sup: f64,
    /// ‖∇u_h - ∇u‖ in L².
    pub slope_l2: f64,
    /// max over edges of |n_h(m) - 𝐧(∇u(m))| at the edge midpoints.
    pub director_midpoint: f64,
    /// sup |∇n_h - ∇(𝐧(∇u))| sampled inside every triangle.
    pub director_gradient_sup: f64,
    pub unit_ratio: RatioStats,
    pub pseudo_ratio: RatioStats,
    pub pseudo_hypothesis_failures: usize,
}

/// How directors are produced on each level.
pub trait DirectorSource {
    fn field(&self, complex: &TriangularComplex3D, surface: &SurfaceCatalogEntry) -> Result<DirectorField>;
}

pub struct Recovery;

impl DirectorSource for Recovery {
    fn field(&self, complex: &TriangularComplex3D, surface: &SurfaceCatalogEntry) -> Result<DirectorField> {
        recovery_director(complex, &surface.graph)
    }
}

impl<F> DirectorSource for F
where
    F: Fn(&TriangularComplex3D, &SurfaceCatalogEntry) -> Result<DirectorField>,
{
    fn field(&self, complex: &TriangularComplex3D, surface: &SurfaceCatalogEntry) -> Result<DirectorField> {
        self(complex, surface)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelOptions {
    pub quad_order: usize,
    pub reference_order: usize,
    pub with_fd: bool,
    pub pseudo_threshold: f64,
    pub compare_recovery: Option<Family>,
}

impl Default for LevelOptions {
    fn default() -> Self {
        Self {
            quad_order: 4,
            reference_order: MAX_QUADRATURE_ORDER,
            with_fd: false,
            pseudo_threshold: DEFAULT_PSEUDO_THRESHOLD,
            compare_recovery: None,
        }
    }
}

pub fn lift(surface: &SurfaceCatalogEntry, mesh: &Triangulation2D) -> Result<TriangularComplex3D> {
    let u = nodal_sample(&surface.graph, mesh)?;
    TriangularComplex3D::push_forward(mesh, &u)
}

/// Measures one level on `mesh`, which must lie in the surface's domain.
pub fn measure_level(
    surface: &SurfaceCatalogEntry,
    integrand: &Integrand,
    n: usize,
    mesh: &Triangulation2D,
    source: &dyn DirectorSource,
    options: &LevelOptions,
) -> Result<LevelMetrics> {
    let complex = lift(surface, mesh)?;
    let field = source.field(&complex, surface)?;
    let discrete = discrete_energy(&complex, &field, integrand, options.quad_order)?;
    let continuous = continuous_energy(&surface.graph, integrand, options.reference_order, mesh)?;
    let e_fd = if options.with_fd {
        Some(fd_energy(&complex)?.total)
    } else {
        None
    };
    let error_abs = (discrete.total - continuous.total).abs();
    let error_rel = if continuous.total != 0.0 {
        error_abs / continuous.total.abs()
    } else {
        error_abs
    };
    let errors = interpolation_errors(surface, &complex, &field)?;

    // the comparison estimates are stated for the recovery construction
    let recovery = recovery_director(&complex, &surface.graph)?;
    let unit_ratio = check_normal_estimate(&complex, &recovery)?;
    let projected = recovery.to_pseudo_unit(&complex)?;
    let pseudo = check_pseudo_estimate(&complex, &projected, options.pseudo_threshold);
    let e_recovery = match options.compare_recovery {
        Some(Family::Unit) => Some(discrete_energy(&complex, &recovery, integrand, options.quad_order)?.total),
        Some(Family::PseudoUnit) => {
            Some(discrete_energy(&complex, &projected, integrand, options.quad_order)?.total)
        }
        None => None,
    };
    let regularity = mesh.regularity();
    Ok(LevelMetrics {
        n,
        h: regularity.size_h,
        c_star: regularity.c_star,
        e_discrete: discrete.total,
        e_continuous: continuous.total,
        e_fd,
        e_recovery,
        error_abs,
        error_rel,
        height_sup: errors.height_sup,
        slope_l2: errors.slope_l2,
        director_midpoint: errors.director_midpoint,
        director_gradient_sup: errors.director_gradient_sup,
        unit_ratio,
        pseudo_ratio: pseudo.ratios,
        pseudo_hypothesis_failures: pseudo.hypothesis_failures,
    })
}

struct InterpolationErrors {
    height_sup: f64,
    slope_l2: f64,
    director_midpoint: f64,
    director_gradient_sup: f64,
}

fn interpolation_errors(
    surface: &SurfaceCatalogEntry,
    complex: &TriangularComplex3D,
    field: &DirectorField,
) -> Result<InterpolationErrors> {
    let graph = &surface.graph;
    let mesh = complex.base();
    let rule = triangle_rule(MAX_QUADRATURE_ORDER)?;
    let mut height_sup = 0.0f64;
    let mut slope_sq = 0.0;
    let mut director_gradient_sup = 0.0f64;
    for t in 0..mesh.triangles().len() {
        let pts = mesh.triangle_points(t);
        let lifted = complex.triangle_points(t);
        let slope = complex.slope(t);
        let affine = cr_interpolate(complex, field, t);
        let area = mesh.triangle_area(t);
        for (l, w) in rule.iter() {
            let x = Point2::from(l[0] * pts[0].coords + l[1] * pts[1].coords + l[2] * pts[2].coords);
            let uh = l[0] * lifted[0].z + l[1] * lifted[1].z + l[2] * lifted[2].z;
            height_sup = height_sup.max((uh - graph.value(&x)).abs());
            let p = graph.gradient(&x);
            slope_sq += area * w * (slope - p).norm_squared();
            let exact = gauss_map_jacobian(&p) * graph.hessian(&x);
            director_gradient_sup = director_gradient_sup.max((affine.grad_planar - exact).norm());
        }
    }
    let director_midpoint = mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let exact: Vector3<f64> = gauss_map(&graph.gradient(&edge.midpoint));
            (field.value(e) - exact).norm()
        })
        .fold(0.0, f64::max);
    Ok(InterpolationErrors {
        height_sup,
        slope_l2: slope_sq.sqrt(),
        director_midpoint,
        director_gradient_sup,
    })
}

/// Observed convergence rates of an error sequence against mesh sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// log(e_{k-1}/e_k) / log(h_{k-1}/h_k), one per consecutive pair.
    pub successive: Vec<f64>,
    /// Least-squares slope of log e against log h over all levels.
    pub slope: f64,
}

pub fn fit_rates(h: &[f64], err: &[f64]) -> RateFit {
    let successive = h
        .windows(2)
        .zip(err.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    RateFit {
        successive,
        slope: least_squares_slope(h, err),
    }
}

/// Slope of the least-squares line through (log h, log err). NaN when fewer
/// than two levels have positive error.
pub fn least_squares_slope(h: &[f64], err: &[f64]) -> f64 {
    let points: Vec<(f64, f64)> = h
        .iter()
        .zip(err)
        .filter(|(_, e)| **e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if points.len() < 2 {
        return f64::NAN;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Richardson extrapolation from three values on meshes refined by a fixed
/// ratio, with the order estimated from the values themselves. Returns the
/// extrapolated value and the observed order.
pub fn richardson(coarse: f64, medium: f64, fine: f64, ratio: f64) -> (f64, f64) {
    let order = ((coarse - medium) / (medium - fine)).abs().ln() / ratio.ln();
    let factor = ratio.powf(order);
    (fine + (fine - medium) / (factor - 1.0), order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let err: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        let fit = fit_rates(&h, &err);
        assert!(fit.successive.iter().all(|r| (r - 2.0).abs() < 1e-12));
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn slope_ignores_exact_zeros() {
        assert!(least_squares_slope(&[1.0, 0.5], &[0.0, 0.0]).is_nan());
    }

    #[test]
    fn richardson_recovers_limit() {
        let value = |h: f64| 2.0 + 0.3 * h.powi(3);
        let (limit, order) = richardson(value(0.4), value(0.2), value(0.1), 2.0);
        assert!((limit - 2.0).abs() < 1e-14);
        assert!((order - 3.0).abs() < 1e-10);
    }
}

use nalgebra::{Matrix2x3, Matrix3, Matrix3x2, Point2, Point3, Vector2, Vector3};

use super::integrand::Integrand;

/// Upward unit normal of a graph with gradient `p`: (-p, 1) / √(1 + |p|²).
pub fn gauss_map(p: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(-p.x, -p.y, 1.0) / (1.0 + p.norm_squared()).sqrt()
}

/// Closed-form 3×2 Jacobian of [`gauss_map`].
pub fn gauss_map_jacobian(p: &Vector2<f64>) -> Matrix3x2<f64> {
    let s2 = 1.0 + p.norm_squared();
    let s = s2.sqrt();
    let v = Vector3::new(-p.x, -p.y, 1.0);
    let mut jac = -(v * p.transpose()) / (s2 * s);
    jac[(0, 0)] -= 1.0 / s;
    jac[(1, 1)] -= 1.0 / s;
    jac
}

/// The 3×2 matrix `[[1, 0], [0, 1], [p₁, p₂]]` mapping parameter directions
/// to tangent vectors of a graph with gradient `p`.
pub fn graph_tangent_map(p: &Vector2<f64>) -> Matrix3x2<f64> {
    Matrix3x2::new(1.0, 0.0, 0.0, 1.0, p.x, p.y)
}

/// Moore–Penrose left inverse (JᵀJ)⁻¹Jᵀ of a full-rank 3×2 matrix.
pub fn left_inverse(j: &Matrix3x2<f64>) -> Matrix2x3<f64> {
    let gram = j.transpose() * j;
    let inv = gram
        .try_inverse()
        .expect("tangent map has full column rank");
    inv * j.transpose()
}

/// Shape operator A = ξ·J(p)⁺ of a graph with gradient `p` and normal
/// derivative ξ with respect to the parameter.
pub fn graph_shape_operator(p: &Vector2<f64>, xi: &Matrix3x2<f64>) -> Matrix3<f64> {
    xi * left_inverse(&graph_tangent_map(p))
}

/// Area density of the graph energy: f((x, z), n(p), ξJ(p)⁺)·√(1 + |p|²).
pub fn graph_integrand(
    integrand: &Integrand,
    x: &Point2<f64>,
    z: f64,
    p: &Vector2<f64>,
    xi: &Matrix3x2<f64>,
) -> f64 {
    let a = graph_shape_operator(p, xi);
    integrand.value(&Point3::new(x.x, x.y, z), &gauss_map(p), &a) * (1.0 + p.norm_squared()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gauss_map_values() {
        assert_eq!(gauss_map(&Vector2::zeros()), Vector3::z());
        let n = gauss_map(&Vector2::new(1.0, 0.0));
        assert!((n - Vector3::new(-1.0, 0.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn gauss_map_orthogonal_to_graph_tangents() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = Vector2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let t = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = gauss_map(&p);
            assert!((n.norm() - 1.0).abs() < 1e-15);
            assert!(n.z > 0.0);
            assert!(n.dot(&Vector3::new(t.x, t.y, t.dot(&p))).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..100 {
            let p = Vector2::new(rng.gen_range(-1.4..1.4), rng.gen_range(-1.4..1.4));
            let jac = gauss_map_jacobian(&p);
            for k in 0..2 {
                let mut step = Vector2::zeros();
                step[k] = h;
                let fd = (gauss_map(&(p + step)) - gauss_map(&(p - step))) / (2.0 * h);
                assert!((fd - jac.column(k)).amax() < 1e-6);
            }
        }
    }

    #[test]
    fn left_inverse_of_tilted_tangent_map() {
        // JᵀJ = [[2, 0], [0, 1]] by hand
        let pinv = left_inverse(&graph_tangent_map(&Vector2::new(1.0, 0.0)));
        let expected = Matrix2x3::new(0.5, 0.0, 0.5, 0.0, 1.0, 0.0);
        assert!((pinv - expected).amax() < 1e-15);
    }

    #[test]
    fn graph_integrand_examples() {
        let w = Integrand::willmore();
        let xi = Matrix3x2::new(0.3, -1.0, 2.0, 0.5, 0.1, 0.7);
        let flat = graph_integrand(&w, &Point2::origin(), 0.0, &Vector2::zeros(), &xi);
        assert!((flat - xi.norm_squared()).abs() < 1e-14);
        assert_eq!(
            graph_integrand(&w, &Point2::origin(), 0.0, &Vector2::new(0.4, 2.0), &Matrix3x2::zeros()),
            0.0
        );
        // first row of A is (1/2, 0, 1/2)
        let xi = Matrix3x2::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let value = graph_integrand(&w, &Point2::origin(), 0.0, &Vector2::new(1.0, 0.0), &xi);
        assert!((value - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn saddle_density_at_origin() {
        // D n(0) Hess = -diag(1, -1) in the top block; |·|² = 2
        let hess = nalgebra::Matrix2::new(1.0, 0.0, 0.0, -1.0);
        let xi = gauss_map_jacobian(&Vector2::zeros()) * hess;
        let value = graph_integrand(&Integrand::willmore(), &Point2::origin(), 0.0, &Vector2::zeros(), &xi);
        assert!((value - 2.0).abs() < 1e-15);
    }
}

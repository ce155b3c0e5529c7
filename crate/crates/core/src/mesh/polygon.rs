use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple polygon in the plane, stored counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point2<f64>>,
}

impl Polygon {
    pub fn new(mut vertices: Vec<Point2<f64>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        let signed = shoelace(&vertices);
        if signed.abs() == 0.0 || !signed.is_finite() {
            return Err(Error::InvalidInput("polygon has zero area".into()));
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn rectangle(min: Point2<f64>, max: Point2<f64>) -> Result<Self> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    /// Regular polygon with `sides` vertices on the circle of the given radius,
    /// the first vertex at angle zero.
    pub fn regular(sides: usize, radius: f64, center: Point2<f64>) -> Result<Self> {
        let vertices = (0..sides)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
                center + radius * Vector2::new(angle.cos(), angle.sin())
            })
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Largest distance between two polygon vertices.
    pub fn diameter(&self) -> f64 {
        let mut diam: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                diam = diam.max((b - a).norm());
            }
        }
        diam
    }

    /// Whether `p` lies in the closed polygon, allowing points within `tol`
    /// of the boundary.
    pub fn contains(&self, p: &Point2<f64>, tol: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if segment_distance(p, &a, &b) <= tol {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn shoelace(vertices: &[Point2<f64>]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

fn segment_distance(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + t * ab)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clockwise_input_is_reoriented() {
        let poly = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!((poly.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn containment_includes_boundary() {
        let poly = Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap();
        assert!(poly.contains(&Point2::new(0.5, 0.5), 0.0));
        assert!(poly.contains(&Point2::new(1.0, 0.3), 1e-12));
        assert!(!poly.contains(&Point2::new(1.1, 0.3), 1e-12));
    }

    #[test]
    fn regular_polygon_area() {
        let poly = Polygon::regular(64, 0.5, Point2::origin()).unwrap();
        let expected = 0.5 * 64.0 * 0.25 * (2.0 * std::f64::consts::PI / 64.0).sin();
        assert!((poly.area() - expected).abs() < 1e-14);
    }
}

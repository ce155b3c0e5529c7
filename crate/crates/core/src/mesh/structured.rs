use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};

use super::polygon::Polygon;
use super::triangulation::Triangulation2D;
use crate::error::{Error, Result};

/// How each cell of a structured grid is split into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    /// Two right triangles per cell, split along the (0,0)-(1,1) diagonal.
    Right,
    /// Four triangles per cell around an added cell-center vertex.
    Crisscross,
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "right" => Ok(Pattern::Right),
            "crisscross" => Ok(Pattern::Crisscross),
            other => Err(Error::InvalidInput(format!("unknown mesh pattern `{other}`"))),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Right => "right",
            Pattern::Crisscross => "crisscross",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub min: Point2<f64>,
    pub max: Point2<f64>,
}

impl Rectangle {
    pub fn new(min: Point2<f64>, max: Point2<f64>) -> Self {
        Self { min, max }
    }

    pub fn unit_square() -> Self {
        Self::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    /// The square [-r, r]².
    pub fn centered_square(half_width: f64) -> Self {
        Self::new(
            Point2::new(-half_width, -half_width),
            Point2::new(half_width, half_width),
        )
    }
}

/// `n × n` grid of cells over `rect`, each split according to `pattern`.
pub fn structured_mesh(rect: &Rectangle, n: usize, pattern: Pattern) -> Result<Triangulation2D> {
    if n == 0 {
        return Err(Error::InvalidInput("subdivision count must be at least 1".into()));
    }
    let domain = Polygon::rectangle(rect.min, rect.max)?;
    let step = Vector2::new(
        (rect.max.x - rect.min.x) / n as f64,
        (rect.max.y - rect.min.y) / n as f64,
    );
    let grid = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            // pin the last row/column to the rectangle so the boundary is exact
            let x = if i == n { rect.max.x } else { rect.min.x + i as f64 * step.x };
            let y = if j == n { rect.max.y } else { rect.min.y + j as f64 * step.y };
            vertices.push(Point2::new(x, y));
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let a = grid(i, j);
            let b = grid(i + 1, j);
            let c = grid(i + 1, j + 1);
            let d = grid(i, j + 1);
            match pattern {
                Pattern::Right => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                Pattern::Crisscross => {
                    let m = vertices.len();
                    vertices.push(nalgebra::center(&vertices[a], &vertices[c]));
                    triangles.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
                }
            }
        }
    }
    Triangulation2D::assemble(vertices, triangles, domain)
}

/// Triangulation of the regular `sides`-gon inscribed in the circle of radius
/// `radius` around `center`, built from `rings` concentric rings. Ring `k`
/// carries `sides * k / rings` equally spaced vertices; the outermost ring is
/// the polygon itself.
pub fn polygon_disk_mesh(
    sides: usize,
    radius: f64,
    center: Point2<f64>,
    rings: usize,
) -> Result<Triangulation2D> {
    if rings == 0 || sides < 3 || !sides.is_multiple_of(rings) {
        return Err(Error::InvalidInput(format!(
            "ring count {rings} must be positive and divide the side count {sides}"
        )));
    }
    let per_ring = sides / rings;
    let domain = Polygon::regular(sides, radius, center)?;
    let mut vertices = vec![center];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(vertices.len());
        let count = per_ring * k;
        let r = radius * k as f64 / rings as f64;
        for j in 0..count {
            let angle = 2.0 * PI * j as f64 / count as f64;
            vertices.push(center + r * Vector2::new(angle.cos(), angle.sin()));
        }
    }
    let mut triangles = Vec::new();
    for k in 1..=rings {
        let outer = per_ring * k;
        let out = |j: usize| ring_start[k] + j % outer;
        if k == 1 {
            for j in 0..outer {
                triangles.push([0, out(j), out(j + 1)]);
            }
            continue;
        }
        let inner = per_ring * (k - 1);
        let inn = |i: usize| ring_start[k - 1] + i % inner;
        let (mut i, mut j) = (0usize, 0usize);
        while i < inner || j < outer {
            // advance along whichever ring has the next vertex at smaller angle
            let next_in = (i + 1) as f64 / inner as f64;
            let next_out = (j + 1) as f64 / outer as f64;
            if j < outer && (i == inner || next_out <= next_in) {
                triangles.push([inn(i), out(j), out(j + 1)]);
                j += 1;
            } else {
                triangles.push([inn(i), out(j), inn(i + 1)]);
                i += 1;
            }
        }
    }
    Triangulation2D::assemble(vertices, triangles, domain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn right_pattern_counts() {
        let t = structured_mesh(&Rectangle::unit_square(), 1, Pattern::Right).unwrap();
        assert_eq!(t.triangles().len(), 2);
        let t = structured_mesh(&Rectangle::unit_square(), 2, Pattern::Right).unwrap();
        assert_eq!(t.triangles().len(), 8);
        assert!((t.regularity().size_h - 2f64.sqrt() / 2.0).abs() < 1e-15);
        let t = structured_mesh(&Rectangle::unit_square(), 4, Pattern::Right).unwrap();
        assert_eq!(t.triangles().len(), 32);
        assert_eq!(t.edges().len(), 56);
        assert!((t.regularity().c_star - 0.25).abs() < 1e-14);
    }

    #[test]
    fn crisscross_counts() {
        let t = structured_mesh(&Rectangle::unit_square(), 2, Pattern::Crisscross).unwrap();
        assert_eq!(t.triangles().len(), 16);
        // base h, height h/2: area h²/4 over diam h²
        assert!((t.regularity().c_star - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_subdivisions_rejected() {
        assert!(structured_mesh(&Rectangle::unit_square(), 0, Pattern::Right).is_err());
    }

    #[test]
    fn generated_meshes_pass_full_validation() {
        for mesh in [
            structured_mesh(&Rectangle::centered_square(0.5), 5, Pattern::Right).unwrap(),
            structured_mesh(&Rectangle::centered_square(0.5), 5, Pattern::Crisscross).unwrap(),
            polygon_disk_mesh(64, 0.5, Point2::origin(), 8).unwrap(),
        ] {
            Triangulation2D::new(
                mesh.vertices().to_vec(),
                mesh.triangles().to_vec(),
                mesh.domain().clone(),
            )
            .unwrap();
        }
    }

    #[test]
    fn disk_mesh_is_regular() {
        let t = polygon_disk_mesh(64, 0.5, Point2::origin(), 8).unwrap();
        assert_eq!(t.triangles().len(), 8 * 64);
        assert!(t.regularity().c_star > 0.15, "{:?}", t.regularity());
        assert!((t.total_area() - t.domain().area()).abs() < 1e-13);
    }
}

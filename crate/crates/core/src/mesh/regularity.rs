use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Default lower bound on area / diam² accepted as regular.
pub const DEFAULT_REGULARITY_THRESHOLD: f64 = 0.05;

/// Mesh size and shape-regularity constant of a triangle family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Largest triangle diameter.
    pub size_h: f64,
    /// Smallest ratio area / diam² over all triangles, at most √3/4.
    pub c_star: f64,
    pub worst_triangle: usize,
}

impl RegularityReport {
    pub(crate) fn from_shapes(shapes: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut report = RegularityReport {
            size_h: 0.0,
            c_star: f64::INFINITY,
            worst_triangle: 0,
        };
        for (t, (area, diam)) in shapes.enumerate() {
            report.size_h = report.size_h.max(diam);
            let ratio = area / (diam * diam);
            if ratio < report.c_star {
                report.c_star = ratio;
                report.worst_triangle = t;
            }
        }
        report
    }

    pub fn is_regular(&self, threshold: f64) -> bool {
        self.c_star >= threshold
    }
}

/// Area and diameter of a triangle in space.
pub fn triangle_shape(p: &[Vector3<f64>; 3]) -> (f64, f64) {
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    let diam = (p[1] - p[0])
        .norm()
        .max((p[2] - p[1]).norm())
        .max((p[0] - p[2]).norm());
    (area, diam)
}

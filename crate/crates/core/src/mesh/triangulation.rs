use std::collections::BTreeMap;

use nalgebra::{Point2, Vector2};

use super::polygon::Polygon;
use super::regularity::{triangle_shape, RegularityReport};
use crate::error::{EdgeKey, Error, Result};

const AREA_REL_TOL: f64 = 1e-10;
const DEGENERATE_REL_TOL: f64 = 1e-14;
const BARYCENTRIC_TOL: f64 = 1e-10;

/// An edge of a triangulation with its one or two incident triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub key: EdgeKey,
    pub first: usize,
    pub second: Option<usize>,
    pub midpoint: Point2<f64>,
}

impl Edge {
    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }

    pub fn triangles(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

/// Validated planar triangulation of a polygon.
///
/// Triangles are stored counter-clockwise. Local edge `i` of a triangle joins
/// its local vertices `i` and `(i + 1) % 3`. Edges are sorted by their vertex
/// key, so edge indices are deterministic for a given vertex numbering.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation2D {
    vertices: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    domain: Polygon,
}

impl Triangulation2D {
    /// Validates the input and builds the edge table.
    pub fn new(
        vertices: Vec<Point2<f64>>,
        triangles: Vec<[usize; 3]>,
        domain: Polygon,
    ) -> Result<Self> {
        let mesh = Self::assemble(vertices, triangles, domain)?;
        mesh.check_complex()?;
        mesh.check_coverage()?;
        Ok(mesh)
    }

    /// Builds the edge table and checks orientation and degeneracy, but skips
    /// the pairwise intersection and coverage checks. Used for meshes whose
    /// validity follows from construction.
    pub(crate) fn assemble(
        vertices: Vec<Point2<f64>>,
        mut triangles: Vec<[usize; 3]>,
        domain: Polygon,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidInput("no triangles".into()));
        }
        let mut used = vec![false; vertices.len()];
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(Error::InvalidInput(format!(
                        "triangle {t} references vertex {v}, but only {} vertices exist",
                        vertices.len()
                    )));
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let twice_area = (b - a).perp(&(c - a));
            let diam2 = (b - a)
                .norm_squared()
                .max((c - b).norm_squared())
                .max((a - c).norm_squared());
            if !(twice_area.abs() > DEGENERATE_REL_TOL * diam2) {
                return Err(Error::DegenerateTriangle { triangle: t });
            }
            if twice_area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidInput(format!(
                "vertex {v} is not used by any triangle"
            )));
        }

        let mut incidence: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                incidence
                    .entry(edge_key(tri[i], tri[(i + 1) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        let mut index_of = BTreeMap::new();
        let mut edges = Vec::with_capacity(incidence.len());
        for (key, tris) in incidence {
            if tris.len() > 2 {
                return Err(Error::ComplexViolation {
                    first: tris[0],
                    second: tris[2],
                    reason: format!("edge {key:?} is shared by {} triangles", tris.len()),
                });
            }
            index_of.insert(key, edges.len());
            edges.push(Edge {
                key,
                first: tris[0],
                second: tris.get(1).copied(),
                midpoint: nalgebra::center(&vertices[key.0], &vertices[key.1]),
            });
        }
        let triangle_edges = triangles
            .iter()
            .map(|tri| {
                [0, 1, 2].map(|i| index_of[&edge_key(tri[i], tri[(i + 1) % 3])])
            })
            .collect();

        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            domain,
        })
    }

    pub fn vertices(&self) -> &[Point2<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edge indices of triangle `t`, local edge `i` joining local vertices `i`, `i+1`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn domain(&self) -> &Polygon {
        &self.domain
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_interior()).count()
    }

    pub fn edge_index(&self, key: EdgeKey) -> Option<usize> {
        self.edges.binary_search_by(|e| e.key.cmp(&key)).ok()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2<f64>; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * (b - a).perp(&(c - a))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn regularity(&self) -> RegularityReport {
        RegularityReport::from_shapes((0..self.triangles.len()).map(|t| {
            let [a, b, c] = self.triangle_points(t);
            triangle_shape(&[a.coords.push(0.0), b.coords.push(0.0), c.coords.push(0.0)])
        }))
    }

    /// Copy with every vertex and the domain scaled by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Triangulation2D> {
        let vertices = self.vertices.iter().map(|p| p * factor).collect();
        let domain = Polygon::new(self.domain.vertices().iter().map(|p| p * factor).collect())?;
        Self::assemble(vertices, self.triangles.clone(), domain)
    }

    /// Splits every triangle into four by its edge midpoints. The new vertex
    /// of edge `e` gets index `num_vertices + e`.
    pub fn refine_uniform(&self) -> Triangulation2D {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|e| e.midpoint));
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [e01, e12, e20] = self.triangle_edges[t].map(|e| nv + e);
            triangles.push([tri[0], e01, e20]);
            triangles.push([e01, tri[1], e12]);
            triangles.push([e20, e12, tri[2]]);
            triangles.push([e01, e12, e20]);
        }
        Self::assemble(vertices, triangles, self.domain.clone())
            .expect("midpoint refinement of a valid triangulation is valid")
    }

    fn check_coverage(&self) -> Result<()> {
        let scale = self.domain.diameter();
        for (v, p) in self.vertices.iter().enumerate() {
            if !self.domain.contains(p, 1e-10 * scale) {
                return Err(Error::CoverageGap {
                    reason: format!("vertex {v} at ({}, {}) lies outside the domain", p.x, p.y),
                });
            }
        }
        let domain_area = self.domain.area();
        let covered = self.total_area();
        if (covered - domain_area).abs() > AREA_REL_TOL * domain_area {
            return Err(Error::CoverageGap {
                reason: format!("triangle area {covered} differs from domain area {domain_area}"),
            });
        }
        Ok(())
    }

    /// Pairwise intersection test restricted to triangles whose bounding
    /// boxes share a cell of a uniform background grid.
    fn check_complex(&self) -> Result<()> {
        let nt = self.triangles.len();
        let (mut lo, mut hi) = (self.vertices[0], self.vertices[0]);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let extent = hi - lo;
        let cells_per_side = ((nt as f64).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = Vector2::new(
            (extent.x / cells_per_side as f64).max(f64::MIN_POSITIVE),
            (extent.y / cells_per_side as f64).max(f64::MIN_POSITIVE),
        );
        let cell_of = |p: &Point2<f64>| {
            let i = (((p.x - lo.x) / cell.x) as usize).min(cells_per_side - 1);
            let j = (((p.y - lo.y) / cell.y) as usize).min(cells_per_side - 1);
            (i, j)
        };
        let bbox_cells = |t: usize| {
            let pts = self.triangle_points(t);
            let mut pmin = pts[0];
            let mut pmax = pts[0];
            for p in &pts[1..] {
                pmin = pmin.inf(p);
                pmax = pmax.sup(p);
            }
            // pad by a hair so touching boxes land in a common cell
            let pad = Vector2::new(1e-9 * extent.x, 1e-9 * extent.y);
            (cell_of(&(pmin - pad)), cell_of(&(pmax + pad)))
        };

        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells_per_side * cells_per_side];
        for t in 0..nt {
            let ((i0, j0), (i1, j1)) = bbox_cells(t);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid[j * cells_per_side + i].push(t);
                }
            }
        }

        let mut seen = vec![usize::MAX; nt];
        for t in 0..nt {
            let ((i0, j0), (i1, j1)) = bbox_cells(t);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &s in &grid[j * cells_per_side + i] {
                        if s <= t || seen[s] == t {
                            continue;
                        }
                        seen[s] = t;
                        self.check_pair(t, s)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_pair(&self, t: usize, s: usize) -> Result<()> {
        let tri_t = self.triangles[t];
        let tri_s = self.triangles[s];
        let violation = |reason: String| Error::ComplexViolation {
            first: t,
            second: s,
            reason,
        };
        let mut sorted_t = tri_t;
        let mut sorted_s = tri_s;
        sorted_t.sort_unstable();
        sorted_s.sort_unstable();
        if sorted_t == sorted_s {
            return Err(violation("duplicate triangle".into()));
        }
        for (tri_a, tri_b) in [(tri_t, tri_s), (tri_s, tri_t)] {
            let pts = tri_a.map(|v| self.vertices[v]);
            for &v in tri_b.iter().filter(|v| !tri_a.contains(v)) {
                if point_in_closed_triangle(&self.vertices[v], &pts) {
                    return Err(violation(format!(
                        "vertex {v} lies on a triangle it does not belong to"
                    )));
                }
            }
        }
        for i in 0..3 {
            let (a, b) = (tri_t[i], tri_t[(i + 1) % 3]);
            for k in 0..3 {
                let (c, d) = (tri_s[k], tri_s[(k + 1) % 3]);
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if segments_cross(
                    &self.vertices[a],
                    &self.vertices[b],
                    &self.vertices[c],
                    &self.vertices[d],
                ) {
                    return Err(violation(format!(
                        "edges ({a}, {b}) and ({c}, {d}) cross"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn point_in_closed_triangle(p: &Point2<f64>, tri: &[Point2<f64>; 3]) -> bool {
    let [a, b, c] = tri;
    let det = (b - a).perp(&(c - a));
    let l1 = (b - p).perp(&(c - p)) / det;
    let l2 = (c - p).perp(&(a - p)) / det;
    let l3 = 1.0 - l1 - l2;
    l1 >= -BARYCENTRIC_TOL && l2 >= -BARYCENTRIC_TOL && l3 >= -BARYCENTRIC_TOL
}

fn segments_cross(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>, d: &Point2<f64>) -> bool {
    let scale = (b - a).norm() * (d - c).norm();
    let tol = 1e-12 * scale;
    let o1 = (b - a).perp(&(c - a));
    let o2 = (b - a).perp(&(d - a));
    let o3 = (d - c).perp(&(a - c));
    let o4 = (d - c).perp(&(b - c));
    ((o1 > tol && o2 < -tol) || (o1 < -tol && o2 > tol))
        && ((o3 > tol && o4 < -tol) || (o3 < -tol && o4 > tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::rectangle(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap()
    }

    fn square_vertices() -> Vec<Point2<f64>> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn two_triangle_square() {
        let t = Triangulation2D::new(square_vertices(), vec![[0, 1, 2], [0, 2, 3]], unit_square())
            .unwrap();
        assert_eq!(t.triangles().len(), 2);
        assert_eq!(t.edges().len(), 5);
        assert_eq!(t.num_interior_edges(), 1);
        let keys: Vec<_> = t.edges().iter().map(|e| e.key).collect();
        assert_eq!(keys, vec![(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]);
        assert_eq!(t.edges()[1].midpoint, Point2::new(0.5, 0.5));
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let t = Triangulation2D::new(square_vertices(), vec![[0, 2, 1], [0, 3, 2]], unit_square())
            .unwrap();
        for k in 0..2 {
            assert!(t.triangle_area(k) > 0.0);
        }
    }

    #[test]
    fn colinear_triangle_rejected() {
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        let domain = Polygon::new(vec![vertices[0], vertices[2], vertices[3]]).unwrap();
        let err = Triangulation2D::new(vertices, vec![[0, 1, 2], [0, 2, 3]], domain).unwrap_err();
        assert_eq!(err, Error::DegenerateTriangle { triangle: 0 });
    }

    #[test]
    fn hanging_node_is_a_complex_violation() {
        // the right triangle shares only half of the hypotenuse-free edge x = 1
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 2.0),
            Point2::new(1.0, 1.0),
            Point2::new(2.0, 0.0),
        ];
        let domain = Polygon::new(vec![
            vertices[0],
            vertices[1],
            vertices[4],
            vertices[3],
            vertices[2],
        ])
        .unwrap();
        let err = Triangulation2D::new(vertices, vec![[0, 1, 2], [1, 4, 3]], domain).unwrap_err();
        assert!(matches!(err, Error::ComplexViolation { .. }), "{err:?}");
    }

    #[test]
    fn overlapping_triangles_rejected() {
        let vertices = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.6, 0.6),
        ];
        let domain = Polygon::new(vec![vertices[0], vertices[1], vertices[3], vertices[2]])
            .unwrap();
        // (0,1,3) and (0,3,2) cover the quad; (0,1,2) overlaps both
        let err = Triangulation2D::new(vertices, vec![[0, 1, 3], [0, 1, 2]], domain).unwrap_err();
        assert!(matches!(err, Error::ComplexViolation { .. }), "{err:?}");
    }

    #[test]
    fn missing_triangle_is_a_coverage_gap() {
        let err =
            Triangulation2D::new(square_vertices(), vec![[0, 1, 2]], unit_square()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_) | Error::CoverageGap { .. }));
        let mut vertices = square_vertices();
        vertices.push(Point2::new(0.5, 0.5));
        let err = Triangulation2D::new(
            vertices,
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4]],
            unit_square(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::CoverageGap { .. }), "{err:?}");
    }

    #[test]
    fn bad_index_rejected() {
        let err =
            Triangulation2D::new(square_vertices(), vec![[0, 1, 7]], unit_square()).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn refinement_counts() {
        let t = Triangulation2D::new(square_vertices(), vec![[0, 1, 2], [0, 2, 3]], unit_square())
            .unwrap();
        let r = t.refine_uniform();
        assert_eq!(r.triangles().len(), 8);
        assert_eq!(r.vertices().len(), 9);
        assert!((r.total_area() - 1.0).abs() < 1e-14);
        // the refined mesh also passes the full validation
        Triangulation2D::new(r.vertices().to_vec(), r.triangles().to_vec(), unit_square())
            .unwrap();
    }
}

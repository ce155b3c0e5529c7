//! Planar triangulations of polygonal domains and their lifts to graphs.

mod complex;
mod polygon;
mod regularity;
mod structured;
mod triangulation;

pub use complex::{circumcenter, TriangularComplex3D};
pub use polygon::Polygon;
pub use regularity::{triangle_shape, RegularityReport, DEFAULT_REGULARITY_THRESHOLD};
pub use structured::{polygon_disk_mesh, structured_mesh, Pattern, Rectangle};
pub use triangulation::{edge_key, Edge, Triangulation2D};

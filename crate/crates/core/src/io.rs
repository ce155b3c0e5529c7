//! Versioned plain-text format for meshes, nodal heights and edge directors.
//!
//! ```text
//! helfrich-disc v1
//! domain <k>
//! <x> <y>            (k lines)
//! vertices <n>
//! <x> <y>            (n lines)
//! triangles <m>
//! <i> <j> <k>        (m lines)
//! nodal <n>          (optional)
//! <z>                (n lines)
//! directors <e> <family>   (optional)
//! <a> <b> <nx> <ny> <nz>   (one line per edge, keyed by its sorted vertex pair)
//! ```
//!
//! Reals are written with 17 significant digits so a round trip is exact.

use std::fmt::Write as _;

use nalgebra::{Point2, Vector3};

use crate::directors::Family;
use crate::error::{Error, Result};
use crate::mesh::{edge_key, Polygon, Triangulation2D};
use crate::EdgeKey;

pub const FORMAT_HEADER: &str = "helfrich-disc v1";

/// Director values keyed by edge.
pub type DirectorEntries = Vec<(EdgeKey, Vector3<f64>)>;

/// Contents of a mesh file. Directors are stored by edge key so they survive
/// any renumbering of the edge table.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFile {
    pub mesh: Triangulation2D,
    pub nodal: Option<Vec<f64>>,
    pub directors: Option<(Family, DirectorEntries)>,
}

impl MeshFile {
    pub fn new(mesh: Triangulation2D) -> Self {
        Self {
            mesh,
            nodal: None,
            directors: None,
        }
    }

    /// Director values in the mesh's edge order.
    pub fn director_values(&self) -> Result<Option<(Family, Vec<Vector3<f64>>)>> {
        let Some((family, entries)) = &self.directors else {
            return Ok(None);
        };
        let mut values = vec![None; self.mesh.edges().len()];
        for (key, value) in entries {
            let e = self.mesh.edge_index(*key).ok_or_else(|| {
                Error::InvalidInput(format!("director given for missing edge {key:?}"))
            })?;
            values[e] = Some(*value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(e, v)| {
                v.ok_or_else(|| {
                    Error::InvalidInput(format!("no director for edge {:?}", self.mesh.edges()[e].key))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some((*family, values)))
    }
}

pub fn write_mesh_file(file: &MeshFile) -> String {
    let mut out = String::new();
    let real = |v: f64| format!("{v:.16e}");
    let mesh = &file.mesh;
    // writing into a String cannot fail
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(out, "domain {}", mesh.domain().vertices().len()).unwrap();
    for p in mesh.domain().vertices() {
        writeln!(out, "{} {}", real(p.x), real(p.y)).unwrap();
    }
    writeln!(out, "vertices {}", mesh.vertices().len()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{} {}", real(p.x), real(p.y)).unwrap();
    }
    writeln!(out, "triangles {}", mesh.triangles().len()).unwrap();
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    if let Some(nodal) = &file.nodal {
        writeln!(out, "nodal {}", nodal.len()).unwrap();
        for z in nodal {
            writeln!(out, "{}", real(*z)).unwrap();
        }
    }
    if let Some((family, entries)) = &file.directors {
        writeln!(out, "directors {} {}", entries.len(), family.as_str()).unwrap();
        for ((a, b), v) in entries {
            writeln!(out, "{a} {b} {} {} {}", real(v.x), real(v.y), real(v.z)).unwrap();
        }
    }
    out
}

/// Director entries of a field in edge order, ready for `MeshFile::directors`.
pub fn director_entries(mesh: &Triangulation2D, values: &[Vector3<f64>]) -> DirectorEntries {
    mesh.edges().iter().map(|e| e.key).zip(values.iter().copied()).collect()
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<&'a str> {
        for (i, raw) in self.inner.by_ref() {
            let trimmed = raw.trim();
            if !trimmed.is_empty() && !trimmed.starts_with('#') {
                self.line = i + 1;
                return Some(trimmed);
            }
        }
        None
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        match self.next_content() {
            Some(line) => Ok(line),
            None => {
                self.line += 1;
                Err(self.error(format!("unexpected end of file, expected {what}")))
            }
        }
    }

    fn fields<T: std::str::FromStr>(&self, line: &str, count: usize) -> Result<Vec<T>> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != count {
            return Err(self.error(format!("expected {count} fields, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|p| p.parse::<T>().map_err(|_| self.error(format!("cannot parse `{p}`"))))
            .collect()
    }

    fn section(&mut self, name: &str) -> Result<(usize, Vec<&'a str>)> {
        let line = self.expect(name)?;
        self.section_from(line, name)
    }

    fn section_from(&self, line: &'a str, name: &str) -> Result<(usize, Vec<&'a str>)> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.error(format!("expected section `{name}`")));
        }
        let count = parts
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| self.error(format!("section `{name}` needs a count")))?;
        Ok((count, parts.collect()))
    }
}

pub fn read_mesh_file(text: &str) -> Result<MeshFile> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let header = lines.expect("header")?;
    if header != FORMAT_HEADER {
        return Err(lines.error(format!("expected header `{FORMAT_HEADER}`")));
    }
    let points = |lines: &mut Lines, name: &str| -> Result<Vec<Point2<f64>>> {
        let (count, _) = lines.section(name)?;
        (0..count)
            .map(|_| {
                let line = lines.expect("a point")?;
                let v: Vec<f64> = lines.fields(line, 2)?;
                Ok(Point2::new(v[0], v[1]))
            })
            .collect()
    };
    let domain = points(&mut lines, "domain")?;
    let vertices = points(&mut lines, "vertices")?;
    let (count, _) = lines.section("triangles")?;
    let triangles = (0..count)
        .map(|_| {
            let line = lines.expect("a triangle")?;
            let v: Vec<usize> = lines.fields(line, 3)?;
            Ok([v[0], v[1], v[2]])
        })
        .collect::<Result<Vec<_>>>()?;
    let domain_line = lines.line;
    let domain = Polygon::new(domain).map_err(|e| Error::Parse {
        line: domain_line,
        message: e.to_string(),
    })?;
    let mesh = Triangulation2D::new(vertices, triangles, domain)?;

    let mut file = MeshFile::new(mesh);
    while let Some(line) = lines.next_content() {
        if line.starts_with("nodal") {
            if file.nodal.is_some() {
                return Err(lines.error("duplicate nodal section"));
            }
            let (count, _) = lines.section_from(line, "nodal")?;
            if count != file.mesh.vertices().len() {
                return Err(lines.error("nodal count differs from vertex count"));
            }
            let values = (0..count)
                .map(|_| {
                    let line = lines.expect("a nodal value")?;
                    Ok(lines.fields::<f64>(line, 1)?[0])
                })
                .collect::<Result<Vec<_>>>()?;
            file.nodal = Some(values);
        } else if line.starts_with("directors") {
            if file.directors.is_some() {
                return Err(lines.error("duplicate directors section"));
            }
            let (count, rest) = lines.section_from(line, "directors")?;
            let family: Family = rest
                .first()
                .ok_or_else(|| lines.error("directors section needs a family"))?
                .parse()
                .map_err(|_| lines.error("unknown director family"))?;
            let mut entries = Vec::with_capacity(count);
            for _ in 0..count {
                let line = lines.expect("a director")?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 5 {
                    return Err(lines.error(format!("expected 5 fields, found {}", parts.len())));
                }
                let a: usize = lines.fields(parts[0], 1)?[0];
                let b: usize = lines.fields(parts[1], 1)?[0];
                let v: Vec<f64> = lines.fields(&parts[2..].join(" "), 3)?;
                if file.mesh.edge_index(edge_key(a, b)).is_none() {
                    return Err(lines.error(format!("({a}, {b}) is not an edge of the mesh")));
                }
                entries.push((edge_key(a, b), Vector3::new(v[0], v[1], v[2])));
            }
            file.directors = Some((family, entries));
        } else {
            return Err(lines.error(format!("unknown section `{line}`")));
        }
    }
    Ok(file)
}

pub fn read_mesh_path(path: &std::path::Path) -> Result<MeshFile> {
    read_mesh_file(&std::fs::read_to_string(path)?)
}

pub fn write_mesh_path(path: &std::path::Path, file: &MeshFile) -> Result<()> {
    std::fs::write(path, write_mesh_file(file))?;
    Ok(())
}

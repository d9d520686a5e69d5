//! Plain-text file formats: fields, OFF meshes, legacy VTK and trace CSV.
//!
//! Field files start with `spherosim-field v1 <vertices> <level>` followed by
//! one `y1 y2 y3 m1 m2 m3` line per vertex. Reading rebuilds the icosphere of
//! the stated level and rejects files whose vertex positions disagree with it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::dynamics::TracePoint;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{build_icosphere, TriMesh};
use crate::vec3::{dot, norm, normalize, sub};

pub const FIELD_MAGIC: &str = "spherosim-field";
pub const FIELD_VERSION: u32 = 1;
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Largest allowed distance between stored and rebuilt vertex positions.
const POSITION_TOL: f64 = 1e-9;
/// Stored values are renormalized if they are this close to unit length.
const UNIT_SLACK: f64 = 1e-6;

pub fn write_field<W: Write>(m: &Field, mut w: W) -> Result<()> {
    let mesh = m.mesh();
    writeln!(w, "{FIELD_MAGIC} v{FIELD_VERSION} {} {}", mesh.n_vertices(), mesh.level())?;
    for (y, v) in mesh.vertices().iter().zip(m.values()) {
        writeln!(w, "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}", y[0], y[1], y[2], v[0], v[1], v[2])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(line: usize, what: &str) -> Error {
    Error::InvalidInput(format!("field file line {line}: {what}"))
}

pub fn read_field<R: BufRead>(r: R) -> Result<Field> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != FIELD_MAGIC {
        return Err(parse_err(1, "expected 'spherosim-field v1 <vertices> <level>'"));
    }
    if parts[1] != format!("v{FIELD_VERSION}") {
        return Err(parse_err(1, &format!("unsupported version {}", parts[1])));
    }
    let n: usize = parts[2].parse().map_err(|_| parse_err(1, "bad vertex count"))?;
    let level: usize = parts[3].parse().map_err(|_| parse_err(1, "bad level"))?;
    let mesh = build_icosphere(level)?;
    if mesh.n_vertices() != n {
        return Err(parse_err(1, &format!("level {level} has {} vertices, header says {n}", mesh.n_vertices())));
    }
    let mut values = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lno = i + 2;
        let x: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(lno, &format!("bad number {t:?}"))))
            .collect::<Result<_>>()?;
        if x.len() != 6 {
            return Err(parse_err(lno, "expected 6 numbers"));
        }
        let k = values.len();
        if k >= n {
            return Err(parse_err(lno, "more rows than vertices"));
        }
        if norm(sub([x[0], x[1], x[2]], mesh.vertex(k))) > POSITION_TOL {
            return Err(parse_err(lno, "vertex position does not match the icosphere"));
        }
        let v = [x[3], x[4], x[5]];
        if !v.iter().all(|c| c.is_finite()) || (norm(v) - 1.0).abs() > UNIT_SLACK {
            return Err(parse_err(lno, "value is not a unit vector"));
        }
        // keep exact round trips; renormalize values written with fewer digits
        values.push(if (norm(v) - 1.0).abs() < 1e-14 { v } else { normalize(v) });
    }
    if values.len() != n {
        return Err(parse_err(n + 1, &format!("{} rows for {n} vertices", values.len())));
    }
    Field::new(mesh, values)
}

pub fn save_field(m: &Field, path: &Path) -> Result<()> {
    write_field(m, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: &Path) -> Result<Field> {
    read_field(BufReader::new(File::open(path)?))
}

/// Object File Format: vertices and counter-clockwise triangles.
pub fn write_off<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} {}", mesh.n_vertices(), mesh.triangles().len(), mesh.edges().len())?;
    for y in mesh.vertices() {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", y[0], y[1], y[2])?;
    }
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    w.flush()?;
    Ok(())
}

/// Legacy ASCII VTK polydata with point vectors `m` and scalars `m . nu`.
pub fn write_vtk<W: Write>(m: &Field, mut w: W) -> Result<()> {
    let mesh = m.mesh();
    let nt = mesh.triangles().len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "spherosim field, level {}", mesh.level())?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for y in mesh.vertices() {
        writeln!(w, "{:.12e} {:.12e} {:.12e}", y[0], y[1], y[2])?;
    }
    writeln!(w, "POLYGONS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    writeln!(w, "VECTORS m double")?;
    for v in m.values() {
        writeln!(w, "{:.12e} {:.12e} {:.12e}", v[0], v[1], v[2])?;
    }
    writeln!(w, "SCALARS m_dot_nu double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for (v, y) in m.values().iter().zip(mesh.vertices()) {
        writeln!(w, "{:.12e}", dot(*v, *y))?;
    }
    w.flush()?;
    Ok(())
}

/// Trace CSV: a schema comment, the column header, one row per record.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], mut w: W) -> Result<()> {
    writeln!(w, "# schema_version={TRACE_SCHEMA_VERSION}")?;
    writeln!(w, "{}", TracePoint::CSV_HEADER)?;
    for tp in trace {
        writeln!(w, "{}", tp.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

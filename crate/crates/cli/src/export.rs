//! Field export: one CSV per nodal field, an element CSV and a legacy VTK file.
//!
//! Floating values are written with 17 significant digits, which round-trips
//! every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use asymfmo::Mesh;

use crate::error::CliError;

pub type ElementVector = [f64; 2];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_len(path: &Path, what: &str, expected: usize, actual: usize) -> Result<(), CliError> {
    if expected == actual {
        Ok(())
    } else {
        Err(CliError::Data {
            path: path.to_path_buf(),
            message: format!("{what} has {actual} values, mesh needs {expected}"),
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::io(path, source),
        other => CliError::Data {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// `x,y,value`, one row per node in node order.
pub fn write_nodal_csv(path: &Path, mesh: &Mesh, values: &[f64]) -> Result<(), CliError> {
    check_len(path, "nodal field", mesh.node_count(), values.len())?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["x", "y", "value"])
        .map_err(|e| csv_error(path, e))?;
    for (p, v) in mesh.coords().iter().zip(values) {
        w.write_record([fmt(p[0]), fmt(p[1]), fmt(*v)])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// The `value` column of a nodal CSV.
pub fn read_nodal_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "value"] {
        return Err(CliError::Data {
            path: path.to_path_buf(),
            message: format!(
                "expected header x,y,value, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut values = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let v = record
            .get(2)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| CliError::Data {
                path: path.to_path_buf(),
                message: format!("row {} has no numeric value", row + 2),
            })?;
        values.push(v);
    }
    Ok(values)
}

/// Element-centered columns: `x,y` of the centroid followed by the named fields.
pub fn write_element_csv(
    path: &Path,
    mesh: &Mesh,
    columns: &[(&str, &[f64])],
) -> Result<(), CliError> {
    for (name, values) in columns {
        check_len(path, name, mesh.element_count(), values.len())?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<&str> = ["x", "y"]
        .into_iter()
        .chain(columns.iter().map(|(n, _)| *n))
        .collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for e in 0..mesh.element_count() {
        let c = mesh.centroid(e);
        let row: Vec<String> = [c[0], c[1]]
            .into_iter()
            .chain(columns.iter().map(|(_, v)| v[e]))
            .map(fmt)
            .collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Named data attached to a VTK file.
#[derive(Debug, Default)]
pub struct VtkData<'a> {
    pub point_scalars: Vec<(&'a str, &'a [f64])>,
    pub cell_scalars: Vec<(&'a str, &'a [f64])>,
    pub cell_ints: Vec<(&'a str, Vec<i32>)>,
    pub cell_vectors: Vec<(&'a str, &'a [ElementVector])>,
}

/// Legacy ASCII unstructured grid of bilinear quads (cell type 9).
pub fn write_vtk(path: &Path, mesh: &Mesh, title: &str, data: &VtkData) -> Result<(), CliError> {
    for (name, v) in &data.point_scalars {
        check_len(path, name, mesh.node_count(), v.len())?;
    }
    for (name, v) in &data.cell_scalars {
        check_len(path, name, mesh.element_count(), v.len())?;
    }
    for (name, v) in &data.cell_ints {
        check_len(path, name, mesh.element_count(), v.len())?;
    }
    for (name, v) in &data.cell_vectors {
        check_len(path, name, mesh.element_count(), v.len())?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_vtk_body(&mut w, mesh, title, data).map_err(|e| CliError::io(path, e))
}

fn write_vtk_body(
    w: &mut impl Write,
    mesh: &Mesh,
    title: &str,
    data: &VtkData,
) -> std::io::Result<()> {
    let (nn, ne) = (mesh.node_count(), mesh.element_count());
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nn} double")?;
    for p in mesh.coords() {
        writeln!(w, "{} {} 0", fmt(p[0]), fmt(p[1]))?;
    }
    writeln!(w, "CELLS {ne} {}", 5 * ne)?;
    for el in mesh.elements() {
        writeln!(w, "4 {} {} {} {}", el[0], el[1], el[2], el[3])?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "9")?;
    }
    if !data.point_scalars.is_empty() {
        writeln!(w, "POINT_DATA {nn}")?;
        for (name, values) in &data.point_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(w, "{}", fmt(*v))?;
            }
        }
    }
    if !(data.cell_scalars.is_empty() && data.cell_ints.is_empty() && data.cell_vectors.is_empty())
    {
        writeln!(w, "CELL_DATA {ne}")?;
        for (name, values) in &data.cell_vectors {
            writeln!(w, "VECTORS {name} double")?;
            for v in *values {
                writeln!(w, "{} {} 0", fmt(v[0]), fmt(v[1]))?;
            }
        }
        for (name, values) in &data.cell_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(w, "{}", fmt(*v))?;
            }
        }
        for (name, values) in &data.cell_ints {
            writeln!(w, "SCALARS {name} int 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in values {
                writeln!(w, "{v}")?;
            }
        }
    }
    w.flush()
}

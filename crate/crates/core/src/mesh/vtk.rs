//! Legacy ASCII VTK export of tetrahedral meshes with nodal scalar fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TetMesh;
use crate::error::{Error, Result};

const VTK_TETRA: u8 = 10;

/// A nodal scalar field with the name it is exported under.
#[derive(Debug, Clone, Copy)]
pub struct NamedField<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

impl<'a> NamedField<'a> {
    pub fn new(name: &'a str, values: &'a [f64]) -> Self {
        Self { name, values }
    }
}

pub fn write_vtk(mesh: &TetMesh, fields: &[NamedField<'_>]) -> Result<String> {
    let n = mesh.node_count();
    for f in fields {
        if f.values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.values.len(),
                context: "vtk point field",
            });
        }
        if f.name.is_empty() || f.name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!(
                "vtk field name `{}` must be nonempty without whitespace",
                f.name
            )));
        }
    }

    let m = mesh.tet_count();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "vascond tetrahedral mesh");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 5 * m);
    for t in mesh.tets() {
        let _ = writeln!(s, "4 {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{VTK_TETRA}");
    }
    let _ = writeln!(s, "CELL_DATA {m}");
    let _ = writeln!(s, "SCALARS label int 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for l in mesh.tet_labels() {
        let _ = writeln!(s, "{l}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
        for f in fields {
            let _ = writeln!(s, "SCALARS {} double 1", f.name);
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in f.values {
                let _ = writeln!(s, "{v:?}");
            }
        }
    }
    Ok(s)
}

pub fn export_vtk(mesh: &TetMesh, fields: &[NamedField<'_>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = write_vtk(mesh, fields)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

//! CSV artifacts. Floats are written in shortest round-trip form, so files
//! are reproducible and read back exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{AtlasReport, PrdHistogram};
use crate::mesh::TetMesh;

/// Writes `node,x,y,z,<columns>` for the listed nodes. Columns hold values
/// for every mesh node.
pub fn write_nodal_csv(
    path: &Path,
    mesh: &TetMesh,
    nodes: &[usize],
    columns: &[(&str, &[f64])],
) -> Result<()> {
    for (_, values) in columns {
        if values.len() != mesh.node_count() {
            return Err(Error::DimensionMismatch {
                expected: mesh.node_count(),
                found: values.len(),
                context: "nodal csv column",
            });
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["node", "x", "y", "z"];
    header.extend(columns.iter().map(|c| c.0));
    w.write_record(&header)?;
    for &n in nodes {
        let p = mesh.nodes()[n];
        let mut row = vec![n.to_string(), p[0].to_string(), p[1].to_string(), p[2].to_string()];
        row.extend(columns.iter().map(|c| c.1[n].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads one column of a nodal CSV onto all `node_count` nodes; nodes
/// absent from the file get NaN.
pub fn read_nodal_column(path: &Path, node_count: usize, column: &str) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let node_col = find("node")?;
    let value_col = find(column)?;
    let mut out = vec![f64::NAN; node_count];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let node: usize = rec
            .get(node_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad node index".into()))?;
        if node >= node_count {
            return Err(bad(format!("node {node} out of range for {node_count} nodes")));
        }
        out[node] = rec
            .get(value_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad value in column `{column}`")))?;
    }
    Ok(out)
}

pub fn write_metrics_csv(path: &Path, reports: &[AtlasReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["model", "RDM", "MAG", "PRD_max"])?;
    for r in reports {
        w.write_record([
            r.model.name(),
            r.rdm.to_string(),
            r.mag.to_string(),
            r.prd_max.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_histogram_csv(path: &Path, h: &PrdHistogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_left", "bin_right", "volume_fraction"])?;
    for b in &h.bins {
        w.write_record([
            b.left.to_string(),
            b.right.to_string(),
            b.volume_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

//! Plain-text `.tmesh` format.
//!
//! ```text
//! tmesh 1
//! labels <count>
//! <id> <region> <name>
//! nodes <count>
//! <x> <y> <z>
//! tets <count>
//! <i> <j> <k> <l> <label>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Coordinates are in
//! meters and written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{LabelEntry, LabelTable, Region, TetMesh};
use crate::error::{Error, Result};

const MAGIC: &str = "tmesh";
const VERSION: u32 = 1;

pub fn write_mesh(mesh: &TetMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "labels {}", mesh.label_table().entries().len());
    for e in mesh.label_table().entries() {
        let _ = writeln!(s, "{} {} {}", e.id, e.region.as_str(), e.name);
    }
    let _ = writeln!(s, "nodes {}", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "tets {}", mesh.tet_count());
    for (t, l) in mesh.tets().iter().zip(mesh.tet_labels()) {
        let _ = writeln!(s, "{} {} {} {} {}", t[0], t[1], t[2], t[3], l);
    }
    s
}

pub fn save_mesh(mesh: &TetMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mesh(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Next non-comment line as (1-based number, tokens).
    fn next(&mut self, expect: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(self.err(self.last + 1, format!("unexpected end of file, expected {expect}")))
    }

    fn section(&mut self, keyword: &str) -> Result<usize> {
        let (ln, tok) = self.next(keyword)?;
        match tok.as_slice() {
            [k, n] if *k == keyword => n
                .parse()
                .map_err(|_| self.err(ln, format!("invalid {keyword} count `{n}`"))),
            _ => Err(self.err(ln, format!("expected `{keyword} <count>`"))),
        }
    }

    fn record<T: FromStr, const N: usize>(&mut self, what: &str) -> Result<(usize, [T; N])> {
        let (ln, tok) = self.next(what)?;
        if tok.len() != N {
            return Err(self.err(ln, format!("{what}: expected {N} fields, found {}", tok.len())));
        }
        let mut parsed = Vec::with_capacity(N);
        for t in &tok {
            parsed.push(
                t.parse::<T>()
                    .map_err(|_| self.err(ln, format!("{what}: invalid field `{t}`")))?,
            );
        }
        let arr: [T; N] = parsed
            .try_into()
            .unwrap_or_else(|_| unreachable!("length checked above"));
        Ok((ln, arr))
    }
}

pub fn read_mesh(text: &str, path: &Path) -> Result<TetMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        last: 0,
    };

    let (ln, header) = lines.next("header")?;
    match header.as_slice() {
        [m, v] if *m == MAGIC => {
            if v.parse::<u32>().ok() != Some(VERSION) {
                return Err(lines.err(ln, format!("unsupported version `{v}`")));
            }
        }
        _ => return Err(lines.err(ln, format!("expected `{MAGIC} {VERSION}` header"))),
    }

    let n_labels = lines.section("labels")?;
    let mut entries = Vec::with_capacity(n_labels);
    for _ in 0..n_labels {
        let (ln, tok) = lines.next("label entry")?;
        let [id, region, name] = tok.as_slice() else {
            return Err(lines.err(ln, "label entry: expected `<id> <region> <name>`"));
        };
        let id = id
            .parse()
            .map_err(|_| lines.err(ln, format!("invalid label id `{id}`")))?;
        let region = Region::parse(region)
            .ok_or_else(|| lines.err(ln, format!("unknown region `{region}`")))?;
        entries.push(LabelEntry::new(id, region, *name));
    }
    let table = LabelTable::new(entries)?;

    let n_nodes = lines.section("nodes")?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, p) = lines.record::<f64, 3>("node")?;
        if p.iter().any(|x| !x.is_finite()) {
            return Err(lines.err(ln, "node: non-finite coordinate"));
        }
        nodes.push(p);
    }

    let n_tets = lines.section("tets")?;
    let mut tets = Vec::with_capacity(n_tets);
    let mut labels = Vec::with_capacity(n_tets);
    for _ in 0..n_tets {
        let (_, r) = lines.record::<u64, 5>("tet")?;
        tets.push([r[0], r[1], r[2], r[3]].map(|v| v as usize));
        labels.push(u32::try_from(r[4]).map_err(|_| {
            Error::Structural(format!("tet label {} out of range", r[4]))
        })?);
    }
    if let Ok((ln, _)) = lines.next("end of file") {
        return Err(lines.err(ln, "trailing data after tets section"));
    }

    TetMesh::new(nodes, tets, labels, table)
}

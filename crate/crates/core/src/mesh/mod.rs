//! Labeled tetrahedral meshes.
//!
//! A single conforming [`TetMesh`] carries every tissue compartment. Each
//! tetrahedron has an integer label, and the [`LabelTable`] maps labels to a
//! [`Region`]: the arterial domain, the microcirculation domain, or tissue
//! that takes part in neither solve. Region subsets used by the solvers are
//! described by a [`Subdomain`], which owns the local numbering of the nodes
//! it touches.

mod generate;
pub mod geometry;
mod io;
mod surface;
mod vtk;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{
    generate_box_mesh, generate_embedded_cylinder, generate_unit_cube_mesh, BoxSpec, CylinderSpec,
};
pub use geometry::Point;
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};
pub use surface::{
    extract_interface, extract_subdomain_boundary, FaceSelection, SurfaceMesh,
};
pub use vtk::{export_vtk, write_vtk, NamedField};

/// Role a tissue label plays in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Segmented arteries, where the pressure equation is solved.
    Artery,
    /// Tissue containing microvessels, where the concentration is solved.
    Microcirculation,
    /// Conductive tissue without microvessels (CSF, ventricles).
    Excluded,
    /// Tissue carried by the segmentation but absent from the atlas (skull, skin).
    Insulating,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Artery,
        Region::Microcirculation,
        Region::Excluded,
        Region::Insulating,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Artery => "artery",
            Region::Microcirculation => "microcirculation",
            Region::Excluded => "excluded",
            Region::Insulating => "insulating",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn is_conductive(self) -> bool {
        !matches!(self, Region::Insulating)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub id: u32,
    pub region: Region,
    pub name: String,
}

impl LabelEntry {
    pub fn new(id: u32, region: Region, name: impl Into<String>) -> Self {
        Self {
            id,
            region,
            name: name.into(),
        }
    }
}

/// Declared tissue labels, kept sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelTable {
    entries: Vec<LabelEntry>,
}

impl LabelTable {
    pub fn new(mut entries: Vec<LabelEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Structural(format!(
                    "label {} declared twice",
                    pair[0].id
                )));
            }
        }
        for e in &entries {
            if e.name.is_empty() || e.name.chars().any(char::is_whitespace) {
                return Err(Error::Structural(format!(
                    "label {} has an empty or whitespace-containing name",
                    e.id
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LabelEntry] {
        &self.entries
    }

    pub fn get(&self, id: u32) -> Option<&LabelEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn region(&self, id: u32) -> Option<Region> {
        self.get(id).map(|e| e.region)
    }
}

/// Tetrahedral volume mesh with one tissue label per element.
///
/// Construction validates indices and labels and reorients every element to
/// positive signed volume. The mesh is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    nodes: Vec<Point>,
    tets: Vec<[usize; 4]>,
    tet_labels: Vec<u32>,
    labels: LabelTable,
}

impl TetMesh {
    pub fn new(
        nodes: Vec<Point>,
        mut tets: Vec<[usize; 4]>,
        tet_labels: Vec<u32>,
        labels: LabelTable,
    ) -> Result<Self> {
        if tets.len() != tet_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: tets.len(),
                found: tet_labels.len(),
                context: "tet labels",
            });
        }
        let mut referenced = vec![false; nodes.len()];
        for (t, tet) in tets.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= nodes.len() {
                    return Err(Error::Structural(format!(
                        "tet {t} references node {v}, but the mesh has {} nodes",
                        nodes.len()
                    )));
                }
                referenced[v] = true;
            }
            let coords = tet.map(|v| nodes[v]);
            let vol = geometry::signed_volume(&coords);
            let scale = geometry::max_edge_length(&coords).powi(3);
            if !(vol.abs() > 1e-14 * scale) {
                return Err(Error::DegenerateElement {
                    element: t,
                    message: format!("signed volume {vol:e}"),
                });
            }
            if vol < 0.0 {
                tet.swap(2, 3);
            }
        }
        if let Some(v) = referenced.iter().position(|r| !r) {
            return Err(Error::Structural(format!(
                "node {v} is not referenced by any tet"
            )));
        }
        for (t, &l) in tet_labels.iter().enumerate() {
            if labels.get(l).is_none() {
                return Err(Error::Structural(format!(
                    "tet {t} carries undeclared label {l}"
                )));
            }
        }
        Ok(Self {
            nodes,
            tets,
            tet_labels,
            labels,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn tet_labels(&self) -> &[u32] {
        &self.tet_labels
    }

    pub fn label_table(&self) -> &LabelTable {
        &self.labels
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_coords(&self, t: usize) -> [Point; 4] {
        self.tets[t].map(|v| self.nodes[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        geometry::signed_volume(&self.tet_coords(t))
    }

    pub fn tet_centroid(&self, t: usize) -> Point {
        geometry::centroid(&self.tet_coords(t))
    }

    pub fn tet_region(&self, t: usize) -> Region {
        // Labels are validated at construction.
        self.labels
            .region(self.tet_labels[t])
            .expect("label validated at construction")
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tet_count()).map(|t| self.tet_volume(t)).sum()
    }

    /// Replaces the label table; every label in use must stay declared.
    pub fn with_label_table(self, labels: LabelTable) -> Result<Self> {
        Self::new(self.nodes, self.tets, self.tet_labels, labels)
    }

    /// Renumbers nodes so that old node `i` becomes node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
                context: "node permutation",
            });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(
                    "node permutation is not a bijection".into(),
                ));
            }
        }
        let mut nodes = vec![[0.0; 3]; n];
        for (old, &new) in perm.iter().enumerate() {
            nodes[new] = self.nodes[old];
        }
        let tets = self.tets.iter().map(|t| t.map(|v| perm[v])).collect();
        Self::new(nodes, tets, self.tet_labels.clone(), self.labels.clone())
    }

    /// Lumped nodal volumes: each node receives a quarter of every adjacent
    /// element volume, restricted to elements accepted by `keep`.
    pub fn lumped_node_volumes(&self, keep: impl Fn(usize) -> bool) -> Vec<f64> {
        let mut w = vec![0.0; self.node_count()];
        for t in (0..self.tet_count()).filter(|&t| keep(t)) {
            let q = self.tet_volume(t) / 4.0;
            for &v in &self.tets[t] {
                w[v] += q;
            }
        }
        w
    }
}

/// Local numbering for the nodes touched by a subset of elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    local_to_global: Vec<usize>,
    global_to_local: Vec<Option<usize>>,
}

impl DofMap {
    pub fn identity(n: usize) -> Self {
        Self {
            local_to_global: (0..n).collect(),
            global_to_local: (0..n).map(Some).collect(),
        }
    }

    fn from_nodes(global_count: usize, nodes: BTreeSet<usize>) -> Self {
        let local_to_global: Vec<usize> = nodes.into_iter().collect();
        let mut global_to_local = vec![None; global_count];
        for (l, &g) in local_to_global.iter().enumerate() {
            global_to_local[g] = Some(l);
        }
        Self {
            local_to_global,
            global_to_local,
        }
    }

    pub fn len(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_to_global.is_empty()
    }

    pub fn global_count(&self) -> usize {
        self.global_to_local.len()
    }

    pub fn to_global(&self, local: usize) -> usize {
        self.local_to_global[local]
    }

    pub fn to_local(&self, global: usize) -> Option<usize> {
        self.global_to_local.get(global).copied().flatten()
    }

    pub fn globals(&self) -> &[usize] {
        &self.local_to_global
    }

    /// Scatters local values into a global array, filling absent nodes.
    pub fn scatter(&self, local: &[f64], fill: f64) -> Vec<f64> {
        let mut out = vec![fill; self.global_count()];
        for (l, &g) in self.local_to_global.iter().enumerate() {
            out[g] = local[l];
        }
        out
    }
}

/// A set of elements plus the local numbering of the nodes they touch.
#[derive(Debug, Clone)]
pub struct Subdomain {
    tets: Vec<usize>,
    dofs: DofMap,
}

impl Subdomain {
    pub fn whole(mesh: &TetMesh) -> Self {
        Self {
            tets: (0..mesh.tet_count()).collect(),
            dofs: DofMap::identity(mesh.node_count()),
        }
    }

    pub fn from_regions(mesh: &TetMesh, regions: &[Region]) -> Result<Self> {
        let tets: Vec<usize> = (0..mesh.tet_count())
            .filter(|&t| regions.contains(&mesh.tet_region(t)))
            .collect();
        if tets.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no elements in regions {:?}",
                regions
            )));
        }
        Ok(Self::from_tets(mesh, tets))
    }

    pub fn from_tets(mesh: &TetMesh, tets: Vec<usize>) -> Self {
        let nodes: BTreeSet<usize> = tets.iter().flat_map(|&t| mesh.tets()[t]).collect();
        Self {
            dofs: DofMap::from_nodes(mesh.node_count(), nodes),
            tets,
        }
    }

    pub fn tets(&self) -> &[usize] {
        &self.tets
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn contains_tet(&self, t: usize) -> bool {
        self.tets.binary_search(&t).is_ok()
    }

    pub fn volume(&self, mesh: &TetMesh) -> f64 {
        self.tets.iter().map(|&t| mesh.tet_volume(t)).sum()
    }
}

//! Boundary and interface triangles extracted from a [`TetMesh`].

use std::collections::HashMap;

use super::geometry::{centroid, dot, norm, scale, sub, triangle_area_normal, Point};
use super::{Region, Subdomain, TetMesh};
use crate::error::{Error, Result};

/// Local vertex triples of the four tet faces, face `i` opposite vertex `i`.
const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

/// Triangles referencing nodes of a parent [`TetMesh`], each with an outward
/// unit normal, area and the parent element on the designated side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurfaceMesh {
    triangles: Vec<[usize; 3]>,
    normals: Vec<Point>,
    parents: Vec<usize>,
    /// Element on the far side of the face, if any.
    neighbors: Vec<Option<usize>>,
    areas: Vec<f64>,
    centroids: Vec<Point>,
}

impl SurfaceMesh {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Point] {
        &self.normals
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn neighbors(&self) -> &[Option<usize>] {
        &self.neighbors
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Sorted, deduplicated node ids used by the surface.
    pub fn node_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.triangles.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Area-weighted sum of unit normals; vanishes for closed surfaces.
    pub fn vector_area(&self) -> Point {
        let mut s = [0.0; 3];
        for (n, a) in self.normals.iter().zip(&self.areas) {
            for k in 0..3 {
                s[k] += n[k] * a;
            }
        }
        s
    }

    /// Keeps triangles whose index and centroid satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(usize, Point) -> bool) -> SurfaceMesh {
        let mut out = SurfaceMesh::default();
        for i in 0..self.len() {
            if keep(i, self.centroids[i]) {
                out.triangles.push(self.triangles[i]);
                out.normals.push(self.normals[i]);
                out.parents.push(self.parents[i]);
                out.neighbors.push(self.neighbors[i]);
                out.areas.push(self.areas[i]);
                out.centroids.push(self.centroids[i]);
            }
        }
        out
    }

    fn push_face(&mut self, mesh: &TetMesh, tet: usize, face: usize, neighbor: Option<usize>) {
        let t = mesh.tets()[tet];
        let [i, j, k] = TET_FACES[face].map(|l| t[l]);
        let nodes = mesh.nodes();
        let (a, b, c) = (nodes[i], nodes[j], nodes[k]);
        let mut n = triangle_area_normal(a, b, c);
        let fc = centroid(&[a, b, c]);
        let outward = sub(fc, mesh.tet_centroid(tet));
        let tri = if dot(n, outward) < 0.0 {
            n = scale(n, -1.0);
            [i, k, j]
        } else {
            [i, j, k]
        };
        let len = norm(n);
        self.triangles.push(tri);
        self.normals.push(scale(n, 1.0 / len));
        self.parents.push(tet);
        self.neighbors.push(neighbor);
        self.areas.push(0.5 * len);
        self.centroids.push(fc);
    }
}

/// What lies on the other side of the faces to extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSelection {
    /// Faces shared with an element of the given region.
    Interface(Region),
    /// Faces with no neighboring element.
    OuterBoundary,
    /// Every face not shared with another element of the same region.
    Boundary,
}

type FaceKey = [usize; 3];

fn face_key(tet: &[usize; 4], face: usize) -> FaceKey {
    let mut k = TET_FACES[face].map(|l| tet[l]);
    k.sort_unstable();
    k
}

/// Map from each face to the (at most two) elements containing it.
fn face_adjacency(mesh: &TetMesh) -> Result<HashMap<FaceKey, [Option<usize>; 2]>> {
    let mut map: HashMap<FaceKey, [Option<usize>; 2]> = HashMap::with_capacity(2 * mesh.tet_count());
    for (t, tet) in mesh.tets().iter().enumerate() {
        for f in 0..4 {
            let slot = map.entry(face_key(tet, f)).or_insert([None, None]);
            match slot {
                [None, _] => slot[0] = Some(t),
                [Some(_), None] => slot[1] = Some(t),
                _ => {
                    return Err(Error::Structural(format!(
                        "face {:?} shared by more than two elements",
                        face_key(tet, f)
                    )))
                }
            }
        }
    }
    Ok(map)
}

fn extract_where(
    mesh: &TetMesh,
    in_a: impl Fn(usize) -> bool,
    keep_neighbor: impl Fn(Option<usize>) -> bool,
) -> Result<SurfaceMesh> {
    let adjacency = face_adjacency(mesh)?;
    let mut out = SurfaceMesh::default();
    for (t, tet) in mesh.tets().iter().enumerate() {
        if !in_a(t) {
            continue;
        }
        for f in 0..4 {
            let pair = adjacency[&face_key(tet, f)];
            let other = if pair[0] == Some(t) { pair[1] } else { pair[0] };
            if keep_neighbor(other) {
                out.push_face(mesh, t, f, other);
            }
        }
    }
    Ok(out)
}

/// Faces of `region_a` selected by `other`, with normals pointing out of
/// `region_a`. Extracting the interface of a region with itself is empty.
pub fn extract_interface(
    mesh: &TetMesh,
    region_a: Region,
    other: FaceSelection,
) -> Result<SurfaceMesh> {
    if !(0..mesh.tet_count()).any(|t| mesh.tet_region(t) == region_a) {
        return Err(Error::InvalidArgument(format!(
            "region {} has no elements",
            region_a.as_str()
        )));
    }
    let in_a = |t: usize| mesh.tet_region(t) == region_a;
    match other {
        FaceSelection::Interface(b) if b == region_a => Ok(SurfaceMesh::default()),
        FaceSelection::Interface(b) => {
            extract_where(mesh, in_a, |n| n.is_some_and(|n| mesh.tet_region(n) == b))
        }
        FaceSelection::OuterBoundary => extract_where(mesh, in_a, |n| n.is_none()),
        FaceSelection::Boundary => {
            extract_where(mesh, in_a, |n| n.is_none_or(|n| mesh.tet_region(n) != region_a))
        }
    }
}

/// All faces on the boundary of a subdomain, normals pointing outward.
pub fn extract_subdomain_boundary(mesh: &TetMesh, sub: &Subdomain) -> Result<SurfaceMesh> {
    extract_where(
        mesh,
        |t| sub.contains_tet(t),
        |n| n.is_none_or(|n| !sub.contains_tet(n)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        generate_embedded_cylinder, generate_unit_cube_mesh, BoxSpec, CylinderSpec, LabelEntry,
    };
    use std::collections::BTreeSet;

    fn cylinder_mesh() -> TetMesh {
        generate_embedded_cylinder(&CylinderSpec {
            domain: BoxSpec::cube(1.0, 16),
            center: [0.5; 3],
            axis: [0.0, 0.0, 1.0],
            radius: 0.2,
            length: 0.8,
            artery: LabelEntry::new(1, Region::Artery, "vessel"),
            tissue: LabelEntry::new(2, Region::Microcirculation, "tissue"),
        })
        .unwrap()
    }

    #[test]
    fn cube_outer_boundary() {
        let m = generate_unit_cube_mesh(1).unwrap();
        let s = extract_interface(&m, Region::Microcirculation, FaceSelection::OuterBoundary).unwrap();
        assert_eq!(s.len(), 12);
        assert!((s.total_area() - 6.0).abs() < 1e-14);
        for (n, c) in s.normals().iter().zip(s.centroids()) {
            assert!((norm(*n) - 1.0).abs() < 1e-12);
            // outward from the cube center
            assert!(dot(*n, sub(*c, [0.5; 3])) > 0.0);
        }
    }

    #[test]
    fn closed_surface_vector_area_vanishes() {
        for n in 1..=4 {
            let m = generate_unit_cube_mesh(n).unwrap();
            let s = extract_subdomain_boundary(&m, &Subdomain::whole(&m)).unwrap();
            assert!(norm(s.vector_area()) < 1e-10);
        }
        let s = extract_interface(&cylinder_mesh(), Region::Artery, FaceSelection::Boundary).unwrap();
        assert!(norm(s.vector_area()) < 1e-10);
    }

    #[test]
    fn self_interface_is_empty() {
        let m = cylinder_mesh();
        let s = extract_interface(&m, Region::Artery, FaceSelection::Interface(Region::Artery)).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn interface_is_symmetric_up_to_normal_sign() {
        let m = cylinder_mesh();
        let ab = extract_interface(&m, Region::Artery, FaceSelection::Interface(Region::Microcirculation)).unwrap();
        let ba = extract_interface(&m, Region::Microcirculation, FaceSelection::Interface(Region::Artery)).unwrap();
        let key = |s: &SurfaceMesh| -> BTreeSet<[usize; 3]> {
            s.triangles()
                .iter()
                .map(|t| {
                    let mut k = *t;
                    k.sort_unstable();
                    k
                })
                .collect()
        };
        assert_eq!(key(&ab), key(&ba));
        assert_eq!(ab.len(), ba.len());
        // opposite orientation for the same face
        let normal_of: HashMap<[usize; 3], Point> = ba
            .triangles()
            .iter()
            .zip(ba.normals())
            .map(|(t, n)| {
                let mut k = *t;
                k.sort_unstable();
                (k, *n)
            })
            .collect();
        for (t, n) in ab.triangles().iter().zip(ab.normals()) {
            let mut k = *t;
            k.sort_unstable();
            assert!((dot(*n, normal_of[&k]) + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_interface_area_matches_lateral_surface() {
        let m = cylinder_mesh();
        let s = extract_interface(&m, Region::Artery, FaceSelection::Interface(Region::Microcirculation)).unwrap();
        let (r, len, h) = (0.2, 0.8, 1.0 / 16.0);
        // Lateral band at least one cell away from either cap, rescaled to full length.
        let band: f64 = s
            .centroids()
            .iter()
            .zip(s.areas())
            .filter(|(c, _)| (c[2] - 0.5).abs() < len / 2.0 - h)
            .map(|(_, a)| a)
            .sum();
        let lateral = band * len / (len - 2.0 * h);
        let exact = 2.0 * std::f64::consts::PI * r * len;
        assert!(((lateral - exact) / exact).abs() < 0.2, "{lateral} vs {exact}");
        let closed = 2.0 * std::f64::consts::PI * r * (len + r);
        assert!(((s.total_area() - closed) / closed).abs() < 0.2);
        let v = s.vector_area();
        assert!(v.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn empty_region_rejected() {
        let m = generate_unit_cube_mesh(1).unwrap();
        assert!(extract_interface(&m, Region::Artery, FaceSelection::OuterBoundary).is_err());
    }
}

//! Structured test geometries.

use super::geometry::{dot, norm, signed_volume, sub, Point};
use super::{LabelEntry, LabelTable, Region, TetMesh};
use crate::error::{Error, Result};

/// Axis-aligned box split into `cells[k]` equal intervals along axis `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub origin: Point,
    pub extents: [f64; 3],
    pub cells: [usize; 3],
}

impl BoxSpec {
    pub fn cube(edge: f64, n: usize) -> Self {
        Self {
            origin: [0.0; 3],
            extents: [edge; 3],
            cells: [n; 3],
        }
    }

    pub fn cell_size(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.extents[k] / self.cells[k] as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.cells.contains(&0) {
            return Err(Error::InvalidArgument(
                "box needs at least one cell per axis".into(),
            ));
        }
        if self.extents.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "box extents must be positive, got {:?}",
                self.extents
            )));
        }
        Ok(())
    }
}

/// Kuhn subdivision of the unit cube: six tets per cell sharing the main
/// diagonal, one per permutation of the axes.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn box_geometry(spec: &BoxSpec) -> (Vec<Point>, Vec<[usize; 4]>) {
    let [nx, ny, nz] = spec.cells;
    let h = spec.cell_size();
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                // Snap the far faces exactly onto the box extents.
                let coord = |idx: usize, n: usize, axis: usize| {
                    if idx == n {
                        spec.origin[axis] + spec.extents[axis]
                    } else {
                        spec.origin[axis] + idx as f64 * h[axis]
                    }
                };
                nodes.push([coord(i, nx, 0), coord(j, ny, 1), coord(k, nz, 2)]);
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for path in KUHN_PATHS {
                    let mut corner = [i, j, k];
                    let mut tet = [id(i, j, k), 0, 0, 0];
                    for (step, &axis) in path.iter().enumerate() {
                        corner[axis] += 1;
                        tet[step + 1] = id(corner[0], corner[1], corner[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    (nodes, tets)
}

/// Structured box mesh with a single label.
pub fn generate_box_mesh(spec: &BoxSpec, label: LabelEntry) -> Result<TetMesh> {
    spec.validate()?;
    let (nodes, tets) = box_geometry(spec);
    let labels = vec![label.id; tets.len()];
    TetMesh::new(nodes, tets, labels, LabelTable::new(vec![label])?)
}

/// Unit cube with `n` cells per axis, `(n+1)^3` nodes and `6 n^3` tets.
///
/// All elements carry label 0 (`domain`, microcirculation region); use
/// [`TetMesh::with_label_table`] to reassign the region.
pub fn generate_unit_cube_mesh(n: usize) -> Result<TetMesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "unit cube needs n >= 1 subdivisions".into(),
        ));
    }
    generate_box_mesh(
        &BoxSpec::cube(1.0, n),
        LabelEntry::new(0, Region::Microcirculation, "domain"),
    )
}

/// A finite cylinder (the artery) embedded in a structured box (the tissue).
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSpec {
    pub domain: BoxSpec,
    pub center: Point,
    /// Axis direction; normalized internally.
    pub axis: Point,
    pub radius: f64,
    pub length: f64,
    pub artery: LabelEntry,
    pub tissue: LabelEntry,
}

/// Fraction of the cell size within which nodes are moved onto the cylinder
/// surface before labeling.
const SNAP_FRACTION: f64 = 0.35;

/// Smallest allowed ratio of snapped to original element volume.
const SNAP_MIN_VOLUME_RATIO: f64 = 0.05;

struct Cylinder {
    center: Point,
    axis: Point,
    radius: f64,
    half_length: f64,
}

impl Cylinder {
    /// Axial and radial coordinates plus the unit radial direction.
    fn local(&self, p: Point) -> (f64, f64, Point) {
        let d = sub(p, self.center);
        let along = dot(d, self.axis);
        let radial = sub(d, self.axis.map(|x| x * along));
        let rho = norm(radial);
        let dir = if rho > 0.0 { radial.map(|x| x / rho) } else { [0.0; 3] };
        (along, rho, dir)
    }

    fn contains(&self, p: Point) -> bool {
        let (along, rho, _) = self.local(p);
        along.abs() <= self.half_length && rho <= self.radius
    }

    fn point(&self, along: f64, rho: f64, dir: Point) -> Point {
        [0, 1, 2].map(|k| self.center[k] + along * self.axis[k] + rho * dir[k])
    }

    /// Closest point on the surface of the solid cylinder.
    fn closest_surface_point(&self, p: Point) -> Point {
        let (along, rho, dir) = self.local(p);
        let (r, hl) = (self.radius, self.half_length);
        if along.abs() <= hl && rho <= r {
            if r - rho <= hl - along.abs() && rho > 0.0 {
                self.point(along, r, dir)
            } else {
                self.point(hl.copysign(along), rho, dir)
            }
        } else {
            self.point(along.clamp(-hl, hl), rho.min(r), dir)
        }
    }
}

/// Moves nodes onto the cylinder surface: every node within `reach` of it and
/// the nearer endpoint of every edge crossing it. Nodes are visited nearest
/// first and a move is skipped if it would flatten or invert an element.
fn snap_nodes(nodes: &mut [Point], tets: &[[usize; 4]], cyl: &Cylinder, reach: f64) {
    let targets: Vec<Point> = nodes.iter().map(|&p| cyl.closest_surface_point(p)).collect();
    let dist: Vec<f64> = nodes.iter().zip(&targets).map(|(p, q)| norm(sub(*q, *p))).collect();
    let inside: Vec<bool> = nodes.iter().map(|&p| cyl.contains(p)).collect();

    let mut candidate: Vec<bool> = dist.iter().map(|&d| d < reach).collect();
    let mut incident = vec![Vec::new(); nodes.len()];
    for (t, tet) in tets.iter().enumerate() {
        for (i, &a) in tet.iter().enumerate() {
            incident[a].push(t);
            for &b in &tet[i + 1..] {
                if inside[a] != inside[b] {
                    candidate[if dist[a] <= dist[b] { a } else { b }] = true;
                }
            }
        }
    }

    let volumes: Vec<f64> = tets.iter().map(|t| signed_volume(&t.map(|v| nodes[v]))).collect();
    let mut order: Vec<usize> = (0..nodes.len()).filter(|&i| candidate[i] && dist[i] > 0.0).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    for i in order {
        let old = nodes[i];
        nodes[i] = targets[i];
        let ok = incident[i].iter().all(|&t| {
            signed_volume(&tets[t].map(|v| nodes[v])) / volumes[t] >= SNAP_MIN_VOLUME_RATIO
        });
        if !ok {
            nodes[i] = old;
        }
    }
}

/// Embeds a cylinder in a box mesh. Nodes near the cylinder surface are
/// snapped onto it; elements whose centroid then falls inside take the artery
/// label, all others the tissue label.
pub fn generate_embedded_cylinder(spec: &CylinderSpec) -> Result<TetMesh> {
    let dom = &spec.domain;
    dom.validate()?;
    let axis_len = norm(spec.axis);
    if !(axis_len > 0.0) {
        return Err(Error::InvalidArgument("cylinder axis must be nonzero".into()));
    }
    if !(spec.radius > 0.0 && spec.length > 0.0) {
        return Err(Error::InvalidArgument(
            "cylinder radius and length must be positive".into(),
        ));
    }
    if spec.artery.id == spec.tissue.id {
        return Err(Error::InvalidArgument(
            "artery and tissue labels must differ".into(),
        ));
    }
    let a = spec.axis.map(|x| x / axis_len);

    for k in 0..3 {
        let half = a[k].abs() * spec.length / 2.0 + spec.radius * (1.0 - a[k] * a[k]).max(0.0).sqrt();
        let lo = dom.origin[k];
        let hi = dom.origin[k] + dom.extents[k];
        if !(spec.center[k] - half > lo && spec.center[k] + half < hi) {
            return Err(Error::InvalidArgument(format!(
                "cylinder touches or leaves the box along axis {k}"
            )));
        }
    }
    let h = dom.cell_size().into_iter().fold(0.0_f64, f64::max);
    if spec.radius < 3.0 * h {
        return Err(Error::InvalidArgument(format!(
            "cylinder radius {} spans fewer than 3 cells of size {h}",
            spec.radius
        )));
    }

    let cyl = Cylinder {
        center: spec.center,
        axis: a,
        radius: spec.radius,
        half_length: spec.length / 2.0,
    };
    let (mut nodes, tets) = box_geometry(dom);
    let h_min = dom.cell_size().into_iter().fold(f64::INFINITY, f64::min);
    snap_nodes(&mut nodes, &tets, &cyl, SNAP_FRACTION * h_min);
    let labels: Vec<u32> = tets
        .iter()
        .map(|tet| {
            if cyl.contains(super::geometry::centroid(&tet.map(|v| nodes[v]))) {
                spec.artery.id
            } else {
                spec.tissue.id
            }
        })
        .collect();
    if !labels.contains(&spec.artery.id) {
        return Err(Error::InvalidArgument(
            "no element centroid lies inside the cylinder".into(),
        ));
    }
    let table = LabelTable::new(vec![spec.artery.clone(), spec.tissue.clone()])?;
    TetMesh::new(nodes, tets, labels, table)
}

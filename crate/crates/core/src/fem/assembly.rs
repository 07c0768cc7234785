//! Global assembly over subdomains and surfaces.
//!
//! Matrices and vectors are numbered by the local dofs of the subdomain (or
//! the [`DofMap`] passed alongside a surface). Coefficients are piecewise
//! constant: one value per element of the subdomain, or per triangle.

use super::element::{element_mass, element_stiffness, face_mass_from_area, tet_gradients, ElementMatrix};
use crate::error::{Error, Result};
use crate::mesh::geometry::{dot, Point};
use crate::mesh::{DofMap, Subdomain, SurfaceMesh, TetMesh};
use crate::sparsela::CsrMatrix;

fn check_coefficients(coeff: &[f64], expected: usize, context: &'static str) -> Result<()> {
    if coeff.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: coeff.len(),
            context,
        });
    }
    if let Some(&c) = coeff.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::Parameter {
            quantity: context,
            value: c,
            reason: "coefficients must be finite and nonnegative",
        });
    }
    Ok(())
}

fn tagged(t: usize, e: Error) -> Error {
    match e {
        Error::DegenerateElement { message, .. } => Error::DegenerateElement { element: t, message },
        other => other,
    }
}

pub fn tet_stiffness(mesh: &TetMesh, t: usize) -> Result<ElementMatrix<4>> {
    Ok(ElementMatrix {
        nodes: mesh.tets()[t],
        values: element_stiffness(&mesh.tet_coords(t)).map_err(|e| tagged(t, e))?,
    })
}

pub fn tet_mass(mesh: &TetMesh, t: usize) -> Result<ElementMatrix<4>> {
    Ok(ElementMatrix {
        nodes: mesh.tets()[t],
        values: element_mass(&mesh.tet_coords(t)).map_err(|e| tagged(t, e))?,
    })
}

fn scatter_tet(dofs: &DofMap, e: &ElementMatrix<4>, out: &mut Vec<(usize, usize, f64)>) {
    let local = e.nodes.map(|g| dofs.to_local(g).expect("subdomain node"));
    for i in 0..4 {
        for j in 0..4 {
            out.push((local[i], local[j], e.values[i][j]));
        }
    }
}

fn assemble_volume(
    mesh: &TetMesh,
    sub: &Subdomain,
    coeff: &[f64],
    context: &'static str,
    element: fn(&TetMesh, usize) -> Result<ElementMatrix<4>>,
) -> Result<CsrMatrix> {
    check_coefficients(coeff, sub.tets().len(), context)?;
    let n = sub.dofs().len();
    let mut triplets = Vec::with_capacity(16 * sub.tets().len());
    for (&t, &c) in sub.tets().iter().zip(coeff) {
        let e = element(mesh, t)?.scaled(c);
        scatter_tet(sub.dofs(), &e, &mut triplets);
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// `K_ij = sum_T c_T int_T grad(psi_i) . grad(psi_j)`.
pub fn assemble_stiffness(mesh: &TetMesh, sub: &Subdomain, coeff: &[f64]) -> Result<CsrMatrix> {
    assemble_volume(mesh, sub, coeff, "stiffness coefficient", tet_stiffness)
}

/// `M_ij = sum_T c_T int_T psi_i psi_j`.
pub fn assemble_volume_mass(mesh: &TetMesh, sub: &Subdomain, coeff: &[f64]) -> Result<CsrMatrix> {
    assemble_volume(mesh, sub, coeff, "mass coefficient", tet_mass)
}

fn local_triangle(dofs: &DofMap, tri: &[usize; 3]) -> Result<[usize; 3]> {
    let mut out = [0; 3];
    for (o, &g) in out.iter_mut().zip(tri) {
        *o = dofs.to_local(g).ok_or(Error::IndexOutOfRange {
            index: g,
            bound: dofs.len(),
            context: "surface node in dof map",
        })?;
    }
    Ok(out)
}

/// `M_ij = sum_F c_F int_F psi_i psi_j` over surface triangles.
pub fn assemble_boundary_mass(surface: &SurfaceMesh, dofs: &DofMap, coeff: &[f64]) -> Result<CsrMatrix> {
    check_coefficients(coeff, surface.len(), "boundary coefficient")?;
    let n = dofs.len();
    let mut triplets = Vec::with_capacity(9 * surface.len());
    for ((tri, &area), &c) in surface.triangles().iter().zip(surface.areas()).zip(coeff) {
        let local = local_triangle(dofs, tri)?;
        let m = face_mass_from_area(area);
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((local[i], local[j], c * m[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// `b_i = int_surface d psi_i` for a density given per triangle corner,
/// which may jump between triangles.
pub fn assemble_boundary_load_corners(
    surface: &SurfaceMesh,
    dofs: &DofMap,
    corner_density: &[[f64; 3]],
) -> Result<Vec<f64>> {
    if corner_density.len() != surface.len() {
        return Err(Error::DimensionMismatch {
            expected: surface.len(),
            found: corner_density.len(),
            context: "corner densities",
        });
    }
    let mut b = vec![0.0; dofs.len()];
    for ((tri, &area), d) in surface.triangles().iter().zip(surface.areas()).zip(corner_density) {
        if d.iter().all(|&x| x == 0.0) {
            continue;
        }
        let local = local_triangle(dofs, tri)?;
        let m = face_mass_from_area(area);
        for i in 0..3 {
            b[local[i]] += (0..3).map(|j| m[i][j] * d[j]).sum::<f64>();
        }
    }
    Ok(b)
}

/// `b_i = int_surface d psi_i` for a continuous P1 density indexed by global
/// node id, integrated exactly.
pub fn assemble_boundary_load(surface: &SurfaceMesh, dofs: &DofMap, density: &[f64]) -> Result<Vec<f64>> {
    let corners = surface
        .triangles()
        .iter()
        .map(|tri| {
            let mut c = [0.0; 3];
            for (ci, &g) in c.iter_mut().zip(tri) {
                *ci = *density.get(g).ok_or(Error::IndexOutOfRange {
                    index: g,
                    bound: density.len(),
                    context: "nodal density",
                })?;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_boundary_load_corners(surface, dofs, &corners)
}

/// `b_i = int_sub g psi_i` for a P1 density indexed by global node id.
pub fn assemble_volume_load(mesh: &TetMesh, sub: &Subdomain, density: &[f64]) -> Result<Vec<f64>> {
    if density.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.node_count(),
            found: density.len(),
            context: "nodal density",
        });
    }
    let mut b = vec![0.0; sub.dofs().len()];
    for &t in sub.tets() {
        let e = tet_mass(mesh, t)?;
        for i in 0..4 {
            let li = sub.dofs().to_local(e.nodes[i]).expect("subdomain node");
            b[li] += (0..4).map(|j| e.values[i][j] * density[e.nodes[j]]).sum::<f64>();
        }
    }
    Ok(b)
}

/// `b_i = sum_T int_T v_T . grad(psi_i)` for one vector per subdomain element.
pub fn assemble_gradient_load(mesh: &TetMesh, sub: &Subdomain, per_tet: &[Point]) -> Result<Vec<f64>> {
    if per_tet.len() != sub.tets().len() {
        return Err(Error::DimensionMismatch {
            expected: sub.tets().len(),
            found: per_tet.len(),
            context: "per-element vectors",
        });
    }
    let mut b = vec![0.0; sub.dofs().len()];
    for (&t, v) in sub.tets().iter().zip(per_tet) {
        let (vol, g) = tet_gradients(&mesh.tet_coords(t)).map_err(|e| tagged(t, e))?;
        for (i, &node) in mesh.tets()[t].iter().enumerate() {
            b[sub.dofs().to_local(node).expect("subdomain node")] += vol * dot(*v, g[i]);
        }
    }
    Ok(b)
}

/// Evaluates `f` at each subdomain element centroid.
pub fn sample_at_centroids(mesh: &TetMesh, sub: &Subdomain, f: impl Fn(Point) -> f64) -> Vec<f64> {
    sub.tets().iter().map(|&t| f(mesh.tet_centroid(t))).collect()
}

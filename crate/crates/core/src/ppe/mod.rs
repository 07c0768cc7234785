//! Pressure-Poisson equation on the arterial domain.
//!
//! The wall condition `dp/dn = -zeta lambda p` and the reference pressure
//! `p0` enter through a bordered system: the nodal unknowns `p_hat` are
//! augmented by a scalar background level `p_bar`,
//!
//! ```text
//! [ K + M   a ] [ p_hat ]   [ b ]
//! [ a^T     d ] [ p_bar ] = [ d ]
//! ```
//!
//! with `M = int zeta lambda psi_i psi_j`, `a = int zeta lambda psi_i` and
//! `d = int zeta lambda p0` over the wall. The total pressure is
//! `p_hat + p_bar`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_load_corners, assemble_boundary_mass, assemble_gradient_load,
    assemble_stiffness,
};
use crate::field::FieldSummary;
use crate::hemo::{DerivedParams, HemoConfig};
use crate::mesh::geometry::dot;
use crate::mesh::{DofMap, Subdomain, SurfaceMesh, TetMesh};
use crate::sparsela::{solve_spd, CgOptions, CsrMatrix, SolveReport};

/// Body-force terms in the right-hand side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpeForcing {
    /// `b_i = int_wall rho psi_i f . n`.
    #[default]
    WallFlux,
    /// The wall flux plus the volume term `-int rho f . grad(psi_i)`. For a
    /// constant body force on a closed wall the two cancel.
    Full,
}

#[derive(Debug, Clone)]
pub struct PpeSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    dofs: DofMap,
}

impl PpeSystem {
    /// Number of nodal unknowns, excluding the background level.
    pub fn node_unknowns(&self) -> usize {
        self.dofs.len()
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }
}

/// `zeta lambda` per wall triangle.
fn wall_coefficients(wall: &SurfaceMesh, wall_lambda: &[f64], zeta: f64) -> Result<Vec<f64>> {
    if wall.is_empty() {
        return Err(Error::InvalidArgument(
            "arterial wall is empty; the pressure system would be singular".into(),
        ));
    }
    if wall_lambda.len() != wall.len() {
        return Err(Error::DimensionMismatch {
            expected: wall.len(),
            found: wall_lambda.len(),
            context: "wall lambda",
        });
    }
    let coeff: Vec<f64> = wall_lambda.iter().map(|l| zeta * l).collect();
    if !coeff.iter().any(|&c| c > 0.0) {
        return Err(Error::InvalidArgument(
            "wall coefficient zeta*lambda vanishes on the whole wall".into(),
        ));
    }
    Ok(coeff)
}

pub fn assemble_ppe_system(
    mesh: &TetMesh,
    omega: &Subdomain,
    wall: &SurfaceMesh,
    wall_lambda: &[f64],
    params: &DerivedParams,
    cfg: &HemoConfig,
    forcing: PpeForcing,
) -> Result<PpeSystem> {
    let coeff = wall_coefficients(wall, wall_lambda, params.zeta)?;
    let dofs = omega.dofs();
    let n = dofs.len();

    let k = assemble_stiffness(mesh, omega, &vec![1.0; omega.tets().len()])?;
    let m = assemble_boundary_mass(wall, dofs, &coeff)?;
    let a_corners: Vec<[f64; 3]> = coeff.iter().map(|&c| [c; 3]).collect();
    let a = assemble_boundary_load_corners(wall, dofs, &a_corners)?;
    let d: f64 = coeff.iter().zip(wall.areas()).map(|(c, area)| c * cfg.p0 * area).sum();

    let flux: Vec<[f64; 3]> = wall
        .normals()
        .iter()
        .map(|nrm| [cfg.rho * dot(cfg.body_force, *nrm); 3])
        .collect();
    let mut b = assemble_boundary_load_corners(wall, dofs, &flux)?;
    if forcing == PpeForcing::Full {
        let rf = cfg.body_force.map(|f| -cfg.rho * f);
        let vol = assemble_gradient_load(mesh, omega, &vec![rf; omega.tets().len()])?;
        b.iter_mut().zip(&vol).for_each(|(bi, vi)| *bi += vi);
    }

    let km = k.add_scaled(1.0, &m, 1.0)?;
    let mut triplets = Vec::with_capacity(km.nnz() + 2 * n + 1);
    km.extend_triplets(0, &mut triplets);
    for (i, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            triplets.push((i, n, ai));
            triplets.push((n, i, ai));
        }
    }
    triplets.push((n, n, d));
    let matrix = CsrMatrix::from_triplets(n + 1, n + 1, &triplets)?;
    b.push(d);
    Ok(PpeSystem {
        matrix,
        rhs: b,
        dofs: dofs.clone(),
    })
}

/// Solution of the pressure system on the arterial nodes.
#[derive(Debug, Clone)]
pub struct PressureField {
    dofs: DofMap,
    p_hat: Vec<f64>,
    p_bar: f64,
    total: Vec<f64>,
    pub report: SolveReport,
}

impl PressureField {
    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }

    /// `p_hat + p_bar` per arterial node (Pa).
    pub fn total(&self) -> &[f64] {
        &self.total
    }

    /// Total pressure on every mesh node, `fill` outside the arterial domain.
    pub fn to_global(&self, fill: f64) -> Vec<f64> {
        self.dofs.scatter(&self.total, fill)
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary::of(&self.total).expect("arterial domain has nodes")
    }

    pub fn max_abs(&self) -> f64 {
        self.total.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn solve_ppe(system: &PpeSystem, opts: &CgOptions) -> Result<PressureField> {
    let (x, report) = solve_spd(&system.matrix, &system.rhs, opts)?;
    let n = system.node_unknowns();
    let p_bar = x[n];
    let p_hat = x[..n].to_vec();
    let total = p_hat.iter().map(|p| p + p_bar).collect();
    Ok(PressureField {
        dofs: system.dofs.clone(),
        p_hat,
        p_bar,
        total,
        report,
    })
}

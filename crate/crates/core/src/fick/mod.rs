//! Steady diffusion-reaction of the excess blood concentration in the
//! microcirculation domain.
//!
//! `-div(sigma lambda grad c) + sigma lambda eps c = s`, where `sigma` is the
//! diffusivity, `eps` the decay coefficient and `s` the arterial outflow
//! `zeta lambda p` on the wall. All other boundaries are zero-flux.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_load_corners, assemble_stiffness, assemble_volume_mass};
use crate::field::FieldSummary;
use crate::hemo::DerivedParams;
use crate::mesh::{DofMap, Subdomain, SurfaceMesh, TetMesh};
use crate::sparsela::{solve_spd, CgOptions, CsrMatrix, SolveReport};

/// Wall pressures at or below this fraction of `p0` are treated as zero, so
/// solver round-off in a vanishing pressure field does not seed a source.
pub const PRESSURE_FLOOR: f64 = 1e-8;

/// Source density `s = zeta lambda p` at the three corners of each wall
/// triangle. It may jump between triangles where `lambda` does.
#[derive(Debug, Clone, PartialEq)]
pub struct WallSource {
    corners: Vec<[f64; 3]>,
}

impl WallSource {
    pub fn from_corners(corners: Vec<[f64; 3]>) -> Self {
        Self { corners }
    }

    pub fn corners(&self) -> &[[f64; 3]] {
        &self.corners
    }

    /// `int_wall s`.
    pub fn total(&self, wall: &SurfaceMesh) -> f64 {
        self.corners
            .iter()
            .zip(wall.areas())
            .map(|(c, a)| a * (c[0] + c[1] + c[2]) / 3.0)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.corners.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Wall source `zeta lambda p` per triangle corner from nodal pressure on
/// every mesh node; non-finite entries mark nodes without a value.
pub fn build_source(
    pressure: &[f64],
    wall: &SurfaceMesh,
    wall_lambda: &[f64],
    params: &DerivedParams,
    p0: f64,
) -> Result<WallSource> {
    if wall_lambda.len() != wall.len() {
        return Err(Error::DimensionMismatch {
            expected: wall.len(),
            found: wall_lambda.len(),
            context: "wall lambda",
        });
    }
    let floor = PRESSURE_FLOOR * p0.abs();
    let corners = wall
        .triangles()
        .iter()
        .zip(wall_lambda)
        .map(|(tri, &lambda)| {
            let mut s = [0.0; 3];
            for (sk, &g) in s.iter_mut().zip(tri) {
                let p = pressure
                    .get(g)
                    .copied()
                    .filter(|p| p.is_finite())
                    .ok_or_else(|| Error::Structural(format!("wall node {g} has no pressure value")))?;
                *sk = if p.abs() <= floor { 0.0 } else { params.zeta * lambda * p };
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WallSource { corners })
}

/// Stiffness with coefficient `sigma lambda` plus mass with `sigma lambda eps`.
pub fn assemble_fick_system(
    mesh: &TetMesh,
    micro: &Subdomain,
    element_lambda: &[f64],
    params: &DerivedParams,
) -> Result<CsrMatrix> {
    if element_lambda.len() != micro.tets().len() {
        return Err(Error::DimensionMismatch {
            expected: micro.tets().len(),
            found: element_lambda.len(),
            context: "element lambda",
        });
    }
    if !element_lambda.iter().any(|&l| l > 0.0) {
        return Err(Error::InvalidArgument(
            "lambda vanishes on the whole microcirculation domain".into(),
        ));
    }
    let diffusion: Vec<f64> = element_lambda.iter().map(|l| params.diffusivity * l).collect();
    let reaction: Vec<f64> = diffusion.iter().map(|d| d * params.decay).collect();
    let k = assemble_stiffness(mesh, micro, &diffusion)?;
    let m = assemble_volume_mass(mesh, micro, &reaction)?;
    k.add_scaled(1.0, &m, 1.0)
}

/// `b_i = int_wall s phi_i` on the microcirculation nodes.
pub fn assemble_source_load(wall: &SurfaceMesh, dofs: &DofMap, source: &WallSource) -> Result<Vec<f64>> {
    assemble_boundary_load_corners(wall, dofs, source.corners())
}

/// How the raw concentration is mapped to a volume fraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcentrationScale {
    /// Scale so that the largest wall value equals `theta * A_a * xi_bar_a`.
    #[default]
    WallTarget,
    /// Multiply the raw field by a fixed factor.
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct ConcentrationField {
    dofs: DofMap,
    raw: Vec<f64>,
    scale: f64,
    pub report: SolveReport,
}

impl ConcentrationField {
    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// Solver output before scaling.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled(&self) -> Vec<f64> {
        self.raw.iter().map(|c| c * self.scale).collect()
    }

    /// Scaled field clipped to `[0, 1]`, for the mixture models.
    pub fn clamped(&self) -> Vec<f64> {
        self.scaled().into_iter().map(|c| c.clamp(0.0, 1.0)).collect()
    }

    /// Clamped field on every mesh node; zero outside the domain.
    pub fn clamped_global(&self) -> Vec<f64> {
        self.dofs.scatter(&self.clamped(), 0.0)
    }

    pub fn summary(&self) -> FieldSummary {
        FieldSummary::of(&self.scaled()).expect("microcirculation domain has nodes")
    }

    /// Applies `rule`; `wall_nodes` are global ids of the wall.
    pub fn normalize(
        &mut self,
        rule: ConcentrationScale,
        wall_nodes: &[usize],
        params: &DerivedParams,
        theta: f64,
    ) -> Result<()> {
        self.scale = match rule {
            ConcentrationScale::Fixed(s) if s.is_finite() => s,
            ConcentrationScale::Fixed(s) => {
                return Err(Error::Parameter {
                    quantity: "concentration scale",
                    value: s,
                    reason: "must be finite",
                })
            }
            ConcentrationScale::WallTarget => {
                let peak = wall_nodes
                    .iter()
                    .filter_map(|&g| self.dofs.to_local(g))
                    .map(|l| self.raw[l].abs())
                    .fold(0.0, f64::max);
                if peak > 0.0 {
                    theta * params.a_a * params.xi_bar_a / peak
                } else {
                    1.0
                }
            }
        };
        Ok(())
    }
}

pub fn solve_fick(system: &CsrMatrix, load: &[f64], dofs: &DofMap, opts: &CgOptions) -> Result<ConcentrationField> {
    if load.len() != dofs.len() {
        return Err(Error::DimensionMismatch {
            expected: dofs.len(),
            found: load.len(),
            context: "concentration load",
        });
    }
    let (raw, report) = solve_spd(system, load, opts)?;
    Ok(ConcentrationField {
        dofs: dofs.clone(),
        raw,
        scale: 1.0,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hemo::{derive_params, HemoConfig};
    use crate::mesh::{
        extract_interface, generate_box_mesh, generate_embedded_cylinder, BoxSpec, CylinderSpec,
        FaceSelection, LabelEntry, Region,
    };
    use crate::ppe::{assemble_ppe_system, solve_ppe, PpeForcing, PressureField};

    fn params() -> DerivedParams {
        derive_params(&HemoConfig::table2(), 2.4e8).unwrap()
    }

    fn cylinder() -> TetMesh {
        generate_embedded_cylinder(&CylinderSpec {
            domain: BoxSpec::cube(0.1, 16),
            center: [0.05; 3],
            axis: [1.0, 0.0, 0.0],
            radius: 0.02,
            length: 0.08,
            artery: LabelEntry::new(1, Region::Artery, "vessel"),
            tissue: LabelEntry::new(2, Region::Microcirculation, "grey_matter"),
        })
        .unwrap()
    }

    struct Chain {
        mesh: TetMesh,
        wall: SurfaceMesh,
        lambda: Vec<f64>,
        micro: Subdomain,
        pressure: PressureField,
    }

    fn chain(force: [f64; 3]) -> Chain {
        let mesh = cylinder();
        let omega = Subdomain::from_regions(&mesh, &[Region::Artery]).unwrap();
        let micro = Subdomain::from_regions(&mesh, &[Region::Microcirculation]).unwrap();
        let wall = extract_interface(&mesh, Region::Artery, FaceSelection::Boundary).unwrap();
        let lambda = vec![1.0; wall.len()];
        let mut cfg = HemoConfig::table2();
        cfg.body_force = force;
        let sys = assemble_ppe_system(&mesh, &omega, &wall, &lambda, &params(), &cfg, PpeForcing::WallFlux).unwrap();
        let pressure = solve_ppe(&sys, &CgOptions::default()).unwrap();
        Chain { mesh, wall, lambda, micro, pressure }
    }

    #[test]
    fn zero_pressure_gives_zero_source_and_concentration() {
        let c = chain([0.0; 3]);
        let p0 = HemoConfig::table2().p0;
        let s = build_source(&c.pressure.to_global(f64::NAN), &c.wall, &c.lambda, &params(), p0).unwrap();
        assert!(s.is_zero());
        let a = assemble_fick_system(&c.mesh, &c.micro, &vec![1.0; c.micro.tets().len()], &params()).unwrap();
        let b = assemble_source_load(&c.wall, c.micro.dofs(), &s).unwrap();
        let conc = solve_fick(&a, &b, c.micro.dofs(), &CgOptions::default()).unwrap();
        assert!(conc.raw().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn source_is_linear_in_zeta_and_totals_match() {
        let c = chain([0.0, 0.0, -9.81]);
        let p0 = HemoConfig::table2().p0;
        let p = params();
        let s1 = build_source(&c.pressure.to_global(f64::NAN), &c.wall, &c.lambda, &p, p0).unwrap();
        let mut p2 = p;
        p2.zeta *= 2.0;
        let s2 = build_source(&c.pressure.to_global(f64::NAN), &c.wall, &c.lambda, &p2, p0).unwrap();
        for (a, b) in s1.corners().iter().flatten().zip(s2.corners().iter().flatten()) {
            assert_eq!(2.0 * a, *b);
        }
        // uniform p and lambda: total = zeta lambda p |wall|
        let uniform = WallSource::from_corners(vec![[p.zeta * 3.0; 3]; c.wall.len()]);
        let want = p.zeta * 3.0 * c.wall.total_area();
        assert!((uniform.total(&c.wall) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn flux_balance() {
        let c = chain([0.0, 0.0, -9.81]);
        let s = build_source(&c.pressure.to_global(f64::NAN), &c.wall, &c.lambda, &params(), HemoConfig::table2().p0).unwrap();
        let b = assemble_source_load(&c.wall, c.micro.dofs(), &s).unwrap();
        let total = s.total(&c.wall);
        let scale = s.corners().iter().flatten().map(|v| v.abs()).fold(0.0, f64::max) * c.wall.total_area();
        assert!((b.iter().sum::<f64>() - total).abs() <= 1e-10 * scale);
    }

    #[test]
    fn operator_on_constants_is_reaction_mass() {
        let mesh = cylinder();
        let micro = Subdomain::from_regions(&mesh, &[Region::Microcirculation]).unwrap();
        let p = params();
        let a = assemble_fick_system(&mesh, &micro, &vec![1.0; micro.tets().len()], &p).unwrap();
        let y = a.spmv(&vec![1.0; a.cols()]).unwrap();
        let lumped = mesh.lumped_node_volumes(|t| micro.contains_tet(t));
        let coef = p.diffusivity * p.decay;
        for (l, &g) in micro.dofs().globals().iter().enumerate() {
            let want = coef * lumped[g];
            assert!((y[l] - want).abs() <= 1e-9 * want, "{} vs {want}", y[l]);
        }
        assert!(a.is_symmetric(1e-12));
    }

    #[test]
    fn zero_lambda_rejected() {
        let mesh = cylinder();
        let micro = Subdomain::from_regions(&mesh, &[Region::Microcirculation]).unwrap();
        assert!(assemble_fick_system(&mesh, &micro, &vec![0.0; micro.tets().len()], &params()).is_err());
    }

    #[test]
    fn doubling_source_doubles_concentration() {
        let mesh = cylinder();
        let micro = Subdomain::from_regions(&mesh, &[Region::Microcirculation]).unwrap();
        let wall = extract_interface(&mesh, Region::Artery, FaceSelection::Boundary).unwrap();
        let a = assemble_fick_system(&mesh, &micro, &vec![1.0; micro.tets().len()], &params()).unwrap();
        let solve = |v: f64| {
            let s = WallSource::from_corners(vec![[v; 3]; wall.len()]);
            let b = assemble_source_load(&wall, micro.dofs(), &s).unwrap();
            solve_fick(&a, &b, micro.dofs(), &CgOptions::with_tol(1e-12)).unwrap()
        };
        let (c1, c2) = (solve(1.0), solve(2.0));
        let peak = c1.raw().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for (x, y) in c1.raw().iter().zip(c2.raw()) {
            assert!((2.0 * x - y).abs() < 1e-9 * peak);
        }
    }

    #[test]
    fn positive_source_keeps_concentration_nonnegative_and_decaying() {
        let mesh = cylinder();
        let micro = Subdomain::from_regions(&mesh, &[Region::Microcirculation]).unwrap();
        let wall = extract_interface(&mesh, Region::Artery, FaceSelection::Boundary).unwrap();
        let a = assemble_fick_system(&mesh, &micro, &vec![1.0; micro.tets().len()], &params()).unwrap();
        let s = WallSource::from_corners(vec![[1.0; 3]; wall.len()]);
        let b = assemble_source_load(&wall, micro.dofs(), &s).unwrap();
        let c = solve_fick(&a, &b, micro.dofs(), &CgOptions::with_tol(1e-12)).unwrap();
        let max = c.raw().iter().fold(f64::MIN, |m, &v| m.max(v));
        let min = c.raw().iter().fold(f64::MAX, |m, &v| m.min(v));
        assert!(min >= -1e-10 * max, "min {min} max {max}");

        // Shell means by distance from the cylinder surface.
        let h = 0.1 / 16.0;
        let lumped = mesh.lumped_node_volumes(|t| micro.contains_tet(t));
        let mut shells = [(0.0, 0.0); 8];
        for (l, &g) in micro.dofs().globals().iter().enumerate() {
            let x = mesh.nodes()[g];
            let rho = ((x[1] - 0.05).powi(2) + (x[2] - 0.05).powi(2)).sqrt();
            let ax = (x[0] - 0.05).abs() - 0.04;
            let d = if ax <= 0.0 { (rho - 0.02).max(0.0) } else { (ax * ax + (rho - 0.02).max(0.0).powi(2)).sqrt() };
            let k = (d / h) as usize;
            if k < shells.len() {
                shells[k].0 += lumped[g] * c.raw()[l];
                shells[k].1 += lumped[g];
            }
        }
        let means: Vec<f64> = shells.iter().filter(|s| s.1 > 0.0).map(|s| s.0 / s.1).collect();
        for w in means.windows(2) {
            assert!(w[1] <= w[0], "{means:?}");
        }
    }

    #[test]
    fn wall_target_normalization() {
        let c = chain([0.0, 0.0, -9.81]);
        let p = params();
        let theta = HemoConfig::table2().theta;
        let s = build_source(&c.pressure.to_global(f64::NAN), &c.wall, &c.lambda, &p, HemoConfig::table2().p0).unwrap();
        let a = assemble_fick_system(&c.mesh, &c.micro, &vec![1.0; c.micro.tets().len()], &p).unwrap();
        let b = assemble_source_load(&c.wall, c.micro.dofs(), &s).unwrap();
        let mut conc = solve_fick(&a, &b, c.micro.dofs(), &CgOptions::default()).unwrap();
        let wall_nodes = c.wall.node_ids();
        conc.normalize(ConcentrationScale::WallTarget, &wall_nodes, &p, theta).unwrap();
        let target = theta * p.a_a * p.xi_bar_a;
        let scaled = conc.dofs().scatter(&conc.scaled(), 0.0);
        let peak = wall_nodes.iter().map(|&g| scaled[g].abs()).fold(0.0, f64::max);
        assert!((peak - target).abs() < 1e-12 * target);
        assert!(conc.clamped().iter().all(|&v| (0.0..=1.0).contains(&v)));
        conc.normalize(ConcentrationScale::Fixed(2.0), &wall_nodes, &p, theta).unwrap();
        assert_eq!(conc.scale(), 2.0);
        assert!(conc.normalize(ConcentrationScale::Fixed(f64::NAN), &wall_nodes, &p, theta).is_err());
    }

    #[test]
    fn missing_pressure_node_reported() {
        let c = chain([0.0; 3]);
        let other = generate_box_mesh(&BoxSpec::cube(0.1, 2), LabelEntry::new(2, Region::Microcirculation, "t")).unwrap();
        let outer = extract_interface(&other, Region::Microcirculation, FaceSelection::OuterBoundary).unwrap();
        let far = outer.filter(|_, x| x[0] > 0.09);
        let lambda = vec![1.0; far.len()];
        let err = build_source(&c.pressure.to_global(f64::NAN), &far, &lambda, &params(), 1.0);
        assert!(matches!(err, Err(Error::Structural(_))));
    }
}

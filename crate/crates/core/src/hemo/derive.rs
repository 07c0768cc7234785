use std::f64::consts::PI;

use serde::Serialize;

use super::config::HemoConfig;
use crate::error::{Error, Result};
use crate::mesh::{Region, Subdomain, SurfaceMesh, TetMesh};

/// Closed-form parameters of the wall condition and the diffusion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    /// Arteriole, capillary and venule cross-section areas (m^2).
    pub a_a: f64,
    pub a_c: f64,
    pub a_v: f64,
    /// Mean microvessel length density over the arterial wall (1/m^2).
    pub xi_bar: f64,
    /// Arteriole share of `xi_bar` (1/m^2).
    pub xi_bar_a: f64,
    /// Arteriole length (m).
    pub length: f64,
    /// Wall-condition coefficient.
    pub zeta: f64,
    /// Diffusivity (m^2/s).
    pub diffusivity: f64,
    /// Decay coefficient.
    pub decay: f64,
}

pub fn cross_section_area(diameter: f64) -> Result<f64> {
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::Parameter {
            quantity: "diameter",
            value: diameter,
            reason: "must be positive and finite",
        });
    }
    Ok(PI * diameter * diameter / 4.0)
}

/// Ratio of the arteriole count density to the total microvessel density.
pub fn arteriole_fraction(cfg: &HemoConfig) -> Result<f64> {
    let a_a = cross_section_area(cfg.diameters.arteriole)?;
    let a_c = cross_section_area(cfg.diameters.capillary)?;
    let a_v = cross_section_area(cfg.diameters.venule)?;
    let g = cfg.area_fractions;
    Ok(1.0 / (1.0 + a_a * g.capillary / (a_c * g.arteriole) + a_a * g.venule / (a_v * g.arteriole)))
}

fn require_positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter {
            quantity,
            value,
            reason: "derived value must be positive and finite",
        })
    }
}

pub fn derive_params(cfg: &HemoConfig, xi_bar: f64) -> Result<DerivedParams> {
    require_positive("mean wall length density", xi_bar)?;
    let a_a = cross_section_area(cfg.diameters.arteriole)?;
    let a_c = cross_section_area(cfg.diameters.capillary)?;
    let a_v = cross_section_area(cfg.diameters.venule)?;
    let g = cfg.area_fractions;
    let xi_bar_a = require_positive("arteriole length density", xi_bar * arteriole_fraction(cfg)?)?;
    let flow_term = 8.0 * PI * cfg.mu * cfg.q;
    let length = require_positive(
        "arteriole length",
        a_a * a_a * cfg.theta * cfg.p0 * xi_bar_a / flow_term,
    )?;
    let bracket = 1.0 / a_a + g.capillary / (a_c * g.arteriole) + g.venule / (a_v * g.arteriole);
    let zeta = require_positive(
        "wall coefficient",
        flow_term / (a_a * cfg.theta * cfg.p0 * xi_bar) * bracket,
    )?;
    let diffusivity = require_positive("diffusivity", a_a * cfg.p0 / (8.0 * PI * cfg.mu))?;
    let decay = require_positive("decay coefficient", cfg.theta / length)?;
    Ok(DerivedParams {
        a_a,
        a_c,
        a_v,
        xi_bar,
        xi_bar_a,
        length,
        zeta,
        diffusivity,
        decay,
    })
}

/// Length density seen by each wall triangle: that of the element across
/// the face. Faces bordering tissue without microvessels, or the outside of
/// the mesh, get zero.
pub fn wall_xi(mesh: &TetMesh, wall: &SurfaceMesh, cfg: &HemoConfig) -> Result<Vec<f64>> {
    wall.neighbors()
        .iter()
        .map(|n| match n {
            Some(t) if mesh.tet_region(*t) == Region::Microcirculation => cfg.xi(mesh.tet_labels()[*t]),
            _ => Ok(0.0),
        })
        .collect()
}

/// Area-weighted mean of a per-triangle value.
pub fn xi_bar(surface: &SurfaceMesh, xi: &[f64]) -> Result<f64> {
    if xi.len() != surface.len() {
        return Err(Error::DimensionMismatch {
            expected: surface.len(),
            found: xi.len(),
            context: "per-triangle length density",
        });
    }
    let area = surface.total_area();
    if !(area > 0.0) {
        return Err(Error::InvalidArgument("surface has zero total area".into()));
    }
    Ok(surface.areas().iter().zip(xi).map(|(a, x)| a * x).sum::<f64>() / area)
}

/// `lambda = xi / xi_bar`.
pub fn lambda_field(xi: &[f64], xi_bar: f64) -> Result<Vec<f64>> {
    require_positive("mean wall length density", xi_bar)?;
    Ok(xi.iter().map(|x| x / xi_bar).collect())
}

/// Length density of each element of a microcirculation subdomain.
pub fn element_xi(mesh: &TetMesh, sub: &Subdomain, cfg: &HemoConfig) -> Result<Vec<f64>> {
    sub.tets().iter().map(|&t| cfg.xi(mesh.tet_labels()[t])).collect()
}

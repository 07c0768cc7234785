//! Effective-conductivity mixture models and nodal conductivity atlases.
//!
//! The fluid phase is blood with conductivity `σ_f`; the matrix phase is the
//! tissue background `σ_m`. `c` is the excess blood volume fraction.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hemo::HemoConfig;
use crate::mesh::{Region, TetMesh};

/// Archie cementation factor for spherical inclusions.
pub const BETA_SPHERES: f64 = 1.5;
/// Archie cementation factor for cylindrical inclusions.
pub const BETA_CYLINDERS: f64 = 5.0 / 3.0;

fn check_fraction(c: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Parameter {
            quantity: "volume fraction",
            value: c,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

fn check_conductivities(sigma_m: f64, sigma_f: f64) -> Result<()> {
    for (quantity, value) in [("matrix conductivity", sigma_m), ("fluid conductivity", sigma_f)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Parameter {
                quantity,
                value,
                reason: "must be finite and positive",
            });
        }
    }
    Ok(())
}

/// Archie's law `σ_m (1-c)^τ + σ_f c^β` with `τ = log(1-c^β) / log(1-c)`.
pub fn archie_sigma(c: f64, sigma_m: f64, sigma_f: f64, beta: f64) -> Result<f64> {
    check_fraction(c)?;
    check_conductivities(sigma_m, sigma_f)?;
    if !(beta.is_finite() && beta > 1.0) {
        return Err(Error::Parameter {
            quantity: "cementation factor",
            value: beta,
            reason: "must exceed 1",
        });
    }
    if c == 0.0 {
        return Ok(sigma_m);
    }
    if c == 1.0 {
        return Ok(sigma_f);
    }
    let cb = c.powf(beta);
    let tau = (-cb).ln_1p() / (-c).ln_1p();
    Ok(within_phases(sigma_m * (tau * (-c).ln_1p()).exp() + sigma_f * cb, sigma_m, sigma_f))
}

/// Removes rounding excursions outside the phase conductivities.
fn within_phases(sigma: f64, sigma_m: f64, sigma_f: f64) -> f64 {
    sigma.clamp(sigma_m.min(sigma_f), sigma_m.max(sigma_f))
}

/// Hashin-Shtrikman `(σ⁻, σ⁺)`. The labeling holds for `σ_f > σ_m`.
pub fn hs_bounds(c: f64, sigma_m: f64, sigma_f: f64) -> Result<(f64, f64)> {
    check_fraction(c)?;
    check_conductivities(sigma_m, sigma_f)?;
    if c == 0.0 {
        return Ok((sigma_m, sigma_m));
    }
    if c == 1.0 {
        return Ok((sigma_f, sigma_f));
    }
    let d = sigma_f - sigma_m;
    let upper = sigma_f * (1.0 - 3.0 * (1.0 - c) * d / (3.0 * sigma_f - c * d));
    let lower = sigma_m * (1.0 + 3.0 * c * d / (3.0 * sigma_m + (1.0 - c) * d));
    Ok((within_phases(lower, sigma_m, sigma_f), within_phases(upper, sigma_m, sigma_f)))
}

/// Conductivity model used for an atlas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureModel {
    Background,
    Archie { beta: f64 },
    HsLower,
    HsUpper,
}

impl MixtureModel {
    /// The five standard models, background first.
    pub const STANDARD: [MixtureModel; 5] = [
        MixtureModel::Background,
        MixtureModel::Archie { beta: BETA_SPHERES },
        MixtureModel::Archie { beta: BETA_CYLINDERS },
        MixtureModel::HsLower,
        MixtureModel::HsUpper,
    ];

    pub fn name(&self) -> String {
        match *self {
            MixtureModel::Background => "background".into(),
            MixtureModel::Archie { beta } if beta == BETA_SPHERES => "archie_3_2".into(),
            MixtureModel::Archie { beta } if beta == BETA_CYLINDERS => "archie_5_3".into(),
            MixtureModel::Archie { beta } => format!("archie_{beta}"),
            MixtureModel::HsLower => "hs_lower".into(),
            MixtureModel::HsUpper => "hs_upper".into(),
        }
    }

    /// Accepts the standard names and `archie_<beta>` with a decimal beta.
    pub fn parse(s: &str) -> Result<Self> {
        let m = match s.trim() {
            "background" => MixtureModel::Background,
            "archie_3_2" => MixtureModel::Archie { beta: BETA_SPHERES },
            "archie_5_3" => MixtureModel::Archie { beta: BETA_CYLINDERS },
            "hs_lower" => MixtureModel::HsLower,
            "hs_upper" => MixtureModel::HsUpper,
            other => {
                let beta = other
                    .strip_prefix("archie_")
                    .and_then(|b| b.parse::<f64>().ok())
                    .filter(|b| b.is_finite() && *b > 1.0)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown model `{other}`")))?;
                MixtureModel::Archie { beta }
            }
        };
        Ok(m)
    }

    pub fn is_mixture(&self) -> bool {
        !matches!(self, MixtureModel::Background)
    }

    /// Effective conductivity at fraction `c`; the background ignores `c`.
    pub fn sigma(&self, c: f64, sigma_m: f64, sigma_f: f64) -> Result<f64> {
        match *self {
            MixtureModel::Background => Ok(sigma_m),
            MixtureModel::Archie { beta } => archie_sigma(c, sigma_m, sigma_f, beta),
            MixtureModel::HsLower => hs_bounds(c, sigma_m, sigma_f).map(|b| b.0),
            MixtureModel::HsUpper => hs_bounds(c, sigma_m, sigma_f).map(|b| b.1),
        }
    }
}

impl fmt::Display for MixtureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl Serialize for MixtureModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

/// Tissue class of a mesh node for atlas purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    /// Touches an artery element; carries the blood conductivity.
    Vessel,
    /// Conductive tissue node with its dominant label and region.
    Tissue { label: u32, region: Region },
    /// Touches only insulating elements; outside the atlas.
    Outside,
}

/// Nodes touching an artery are vessel nodes. Other nodes take the
/// conductive label with the largest adjacent volume, ties to the smaller
/// label id.
pub fn classify_nodes(mesh: &TetMesh) -> Vec<NodeClass> {
    let mut vessel = vec![false; mesh.node_count()];
    let mut volumes: Vec<Vec<(u32, f64)>> = vec![Vec::new(); mesh.node_count()];
    for t in 0..mesh.tet_count() {
        let region = mesh.tet_region(t);
        if !region.is_conductive() {
            continue;
        }
        let label = mesh.tet_labels()[t];
        let v = mesh.tet_volume(t);
        for &n in &mesh.tets()[t] {
            if region == Region::Artery {
                vessel[n] = true;
            }
            match volumes[n].iter_mut().find(|e| e.0 == label) {
                Some(e) => e.1 += v,
                None => volumes[n].push((label, v)),
            }
        }
    }
    let table = mesh.label_table();
    vessel
        .into_iter()
        .zip(volumes)
        .map(|(is_vessel, vols)| {
            if is_vessel {
                return NodeClass::Vessel;
            }
            let best = vols.into_iter().min_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            match best {
                Some((label, _)) => NodeClass::Tissue {
                    label,
                    region: table.region(label).unwrap_or(Region::Excluded),
                },
                None => NodeClass::Outside,
            }
        })
        .collect()
}

/// Nodal conductivity over the conductive nodes of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityAtlas {
    model: MixtureModel,
    sigma: Vec<Option<f64>>,
}

impl ConductivityAtlas {
    /// Atlas from stored per-node values, e.g. read back from disk.
    pub fn from_values(model: MixtureModel, sigma: Vec<Option<f64>>) -> Result<Self> {
        if let Some(s) = sigma.iter().flatten().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Parameter {
                quantity: "atlas conductivity",
                value: *s,
                reason: "must be finite and positive",
            });
        }
        Ok(Self { model, sigma })
    }

    pub fn model(&self) -> MixtureModel {
        self.model
    }

    /// Per-node conductivity; `None` outside the atlas.
    pub fn values(&self) -> &[Option<f64>] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Conductivities of the nodes inside the atlas, in node order.
    pub fn conductive(&self) -> Vec<f64> {
        self.sigma.iter().flatten().copied().collect()
    }

    /// Every node, with `fill` outside the atlas.
    pub fn dense(&self, fill: f64) -> Vec<f64> {
        self.sigma.iter().map(|s| s.unwrap_or(fill)).collect()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.sigma.iter().map(Option::is_some).collect()
    }
}

/// Builds the atlas of `model`. `c` is a nodal fraction over all mesh nodes
/// and is read only at microcirculation nodes.
pub fn build_atlas(
    mesh: &TetMesh,
    cfg: &HemoConfig,
    c: &[f64],
    model: MixtureModel,
) -> Result<ConductivityAtlas> {
    if c.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.node_count(),
            found: c.len(),
            context: "nodal volume fraction",
        });
    }
    let sigma_f = cfg.sigma_f;
    let sigma = classify_nodes(mesh)
        .into_iter()
        .zip(c)
        .map(|(class, &ci)| match class {
            NodeClass::Vessel => Ok(Some(sigma_f)),
            NodeClass::Outside => Ok(None),
            NodeClass::Tissue { label, region } => {
                let sigma_m = cfg.sigma_m(label)?;
                if region == Region::Microcirculation {
                    model.sigma(ci, sigma_m, sigma_f).map(Some)
                } else {
                    Ok(Some(sigma_m))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConductivityAtlas { model, sigma })
}

/// Where an Archie curve leaves the Hashin-Shtrikman interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketCheck {
    pub sigma_m: f64,
    pub sigma_f: f64,
    pub model: MixtureModel,
    pub samples: usize,
    /// Samples with `archie < σ⁻`.
    pub below_lower: usize,
    /// Samples with `archie > σ⁺`.
    pub above_upper: usize,
    /// Largest excursion outside the interval.
    pub max_excursion: f64,
}

impl BracketCheck {
    pub fn bracketed(&self) -> bool {
        self.below_lower == 0 && self.above_upper == 0
    }
}

/// Compares both standard Archie curves against the HS interval on a grid of
/// `samples` interior fractions.
pub fn check_bracketing(sigma_m: f64, sigma_f: f64, samples: usize) -> Result<Vec<BracketCheck>> {
    [BETA_SPHERES, BETA_CYLINDERS]
        .into_iter()
        .map(|beta| {
            let mut check = BracketCheck {
                sigma_m,
                sigma_f,
                model: MixtureModel::Archie { beta },
                samples,
                below_lower: 0,
                above_upper: 0,
                max_excursion: 0.0,
            };
            for i in 1..=samples {
                let c = i as f64 / (samples + 1) as f64;
                let a = archie_sigma(c, sigma_m, sigma_f, beta)?;
                let (lo, hi) = hs_bounds(c, sigma_m, sigma_f)?;
                if a < lo {
                    check.below_lower += 1;
                    check.max_excursion = check.max_excursion.max(lo - a);
                }
                if a > hi {
                    check.above_upper += 1;
                    check.max_excursion = check.max_excursion.max(a - hi);
                }
            }
            Ok(check)
        })
        .collect()
}

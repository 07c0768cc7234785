use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::units::{Quantity, Tagged};
use crate::error::{Error, Result};
use crate::mesh::{LabelEntry, LabelTable, Point, Region};

const TABLE2_JSON: &str = include_str!("../../presets/table2.json");

/// Arteriole, capillary and venule values of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Microvessels {
    pub arteriole: f64,
    pub capillary: f64,
    pub venule: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tissue {
    pub name: String,
    /// Background conductivity (S/m); `None` for tissue outside the atlas.
    pub sigma_m: Option<f64>,
    /// Microvessel length density (1/m^2); `None` where there is no microcirculation.
    pub xi: Option<f64>,
}

/// Physical parameters in SI units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HemoConfig {
    /// Blood density (kg/m^3).
    pub rho: f64,
    /// Dynamic viscosity (Pa s).
    pub mu: f64,
    /// Total blood flow through the arterial wall (m^3/s).
    pub q: f64,
    /// Fraction of the pressure that drops along an arteriole.
    pub theta: f64,
    /// Reference pressure (Pa).
    pub p0: f64,
    /// Microvessel diameters (m).
    pub diameters: Microvessels,
    /// Fractions of the total microvessel cross-section area.
    pub area_fractions: Microvessels,
    /// Body force per unit mass (m/s^2).
    pub body_force: Point,
    /// Blood conductivity (S/m).
    pub sigma_f: f64,
    pub beta: f64,
    pub tissues: BTreeMap<u32, Tissue>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMicrovessels {
    arteriole: Tagged,
    capillary: Tagged,
    venule: Tagged,
}

impl RawMicrovessels {
    fn to_si(&self, q: Quantity) -> Result<Microvessels> {
        Ok(Microvessels {
            arteriole: self.arteriole.to_si(q)?,
            capillary: self.capillary.to_si(q)?,
            venule: self.venule.to_si(q)?,
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTissue {
    label: u32,
    name: String,
    #[serde(default)]
    sigma_m: Option<Tagged>,
    #[serde(default)]
    xi: Option<Tagged>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    blood_density: Tagged,
    viscosity: Tagged,
    total_flow: Tagged,
    pressure_decay: Tagged,
    reference_pressure: Tagged,
    diameters: RawMicrovessels,
    area_fractions: RawMicrovessels,
    body_force: Point,
    blood_conductivity: Tagged,
    cementation: f64,
    tissues: Vec<RawTissue>,
}

impl RawConfig {
    fn to_si(&self) -> Result<HemoConfig> {
        let mut tissues = BTreeMap::new();
        for t in &self.tissues {
            let tissue = Tissue {
                name: t.name.clone(),
                sigma_m: t.sigma_m.as_ref().map(|v| v.to_si(Quantity::Conductivity)).transpose()?,
                xi: t.xi.as_ref().map(|v| v.to_si(Quantity::LengthDensity)).transpose()?,
            };
            if tissues.insert(t.label, tissue).is_some() {
                return Err(Error::Config(format!("tissue label {} listed twice", t.label)));
            }
        }
        Ok(HemoConfig {
            rho: self.blood_density.to_si(Quantity::Density)?,
            mu: self.viscosity.to_si(Quantity::Viscosity)?,
            q: self.total_flow.to_si(Quantity::VolumeFlow)?,
            theta: self.pressure_decay.to_si(Quantity::Fraction)?,
            p0: self.reference_pressure.to_si(Quantity::Pressure)?,
            diameters: self.diameters.to_si(Quantity::Length)?,
            area_fractions: self.area_fractions.to_si(Quantity::Fraction)?,
            body_force: self.body_force,
            sigma_f: self.blood_conductivity.to_si(Quantity::Conductivity)?,
            beta: self.cementation,
            tissues,
        })
    }
}

fn positive(quantity: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            quantity,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn nonnegative(quantity: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            quantity,
            value,
            reason: "must be nonnegative and finite",
        })
    }
}

impl HemoConfig {
    /// Parses a JSON config, converts to SI and validates.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let cfg = raw.to_si()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// The shipped default parameters.
    pub fn table2() -> Self {
        Self::from_json_str(TABLE2_JSON).expect("shipped preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "table2" => Ok(Self::table2()),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("blood density", self.rho)?;
        positive("viscosity", self.mu)?;
        positive("total flow", self.q)?;
        positive("reference pressure", self.p0)?;
        positive("arteriole diameter", self.diameters.arteriole)?;
        positive("capillary diameter", self.diameters.capillary)?;
        positive("venule diameter", self.diameters.venule)?;
        positive("blood conductivity", self.sigma_f)?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Parameter {
                quantity: "pressure decay fraction",
                value: self.theta,
                reason: "must lie in (0, 1]",
            });
        }
        positive("arteriole area fraction", self.area_fractions.arteriole)?;
        nonnegative("capillary area fraction", self.area_fractions.capillary)?;
        nonnegative("venule area fraction", self.area_fractions.venule)?;
        let g = self.area_fractions;
        let sum = g.arteriole + g.capillary + g.venule;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter {
                quantity: "area fraction sum",
                value: sum,
                reason: "must equal 1",
            });
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(Error::Parameter {
                quantity: "cementation factor",
                value: self.beta,
                reason: "must exceed 1",
            });
        }
        if let Some(&f) = self.body_force.iter().find(|f| !f.is_finite()) {
            return Err(Error::Parameter {
                quantity: "body force",
                value: f,
                reason: "must be finite",
            });
        }
        for t in self.tissues.values() {
            if let Some(s) = t.sigma_m {
                positive("background conductivity", s)?;
            }
            if let Some(x) = t.xi {
                positive("microvessel length density", x)?;
            }
        }
        Ok(())
    }

    pub fn tissue(&self, label: u32) -> Option<&Tissue> {
        self.tissues.get(&label)
    }

    /// Microvessel length density of a microcirculation label.
    pub fn xi(&self, label: u32) -> Result<f64> {
        self.tissue(label)
            .and_then(|t| t.xi)
            .ok_or(Error::MissingLabel {
                label,
                what: "microvessel length density",
            })
    }

    pub fn sigma_m(&self, label: u32) -> Result<f64> {
        self.tissue(label)
            .and_then(|t| t.sigma_m)
            .ok_or(Error::MissingLabel {
                label,
                what: "background conductivity",
            })
    }

    /// Checks that every label the pipeline reads has the entries it needs.
    pub fn check_labels(&self, table: &LabelTable) -> Result<()> {
        for e in table.entries() {
            match e.region {
                Region::Microcirculation => {
                    self.xi(e.id)?;
                    self.sigma_m(e.id)?;
                }
                Region::Excluded => {
                    self.sigma_m(e.id)?;
                }
                Region::Artery | Region::Insulating => {}
            }
        }
        Ok(())
    }
}

/// Label table matching the tissue ids of the shipped preset.
pub fn table2_labels() -> LabelTable {
    let region = |id: u32| match id {
        1 => Region::Artery,
        16 | 17 => Region::Excluded,
        18 | 19 => Region::Insulating,
        _ => Region::Microcirculation,
    };
    let entries = HemoConfig::table2()
        .tissues
        .iter()
        .map(|(&id, t)| LabelEntry::new(id, region(id), t.name.clone()))
        .collect();
    LabelTable::new(entries).expect("preset labels are unique")
}

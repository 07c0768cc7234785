//! Conversion of tagged config quantities to SI.

use serde::Deserialize;

use crate::error::{Error, Result};

pub const MMHG_TO_PA: f64 = 133.322;
pub const ML_PER_MIN_TO_M3_PER_S: f64 = 1.0 / 6.0e7;

/// Physical dimension of a config entry; selects the accepted unit tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Pressure,
    VolumeFlow,
    Fraction,
    Length,
    Density,
    Viscosity,
    Acceleration,
    Conductivity,
    LengthDensity,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Pressure => "pressure",
            Quantity::VolumeFlow => "volume flow",
            Quantity::Fraction => "fraction",
            Quantity::Length => "length",
            Quantity::Density => "density",
            Quantity::Viscosity => "viscosity",
            Quantity::Acceleration => "acceleration",
            Quantity::Conductivity => "conductivity",
            Quantity::LengthDensity => "length density",
        }
    }

    fn factor(self, unit: &str) -> Option<f64> {
        let f = match (self, unit) {
            (Quantity::Pressure, "Pa") => 1.0,
            (Quantity::Pressure, "kPa") => 1e3,
            (Quantity::Pressure, "mmHg" | "Hgmm") => MMHG_TO_PA,
            (Quantity::VolumeFlow, "m3/s") => 1.0,
            (Quantity::VolumeFlow, "ml/min") => ML_PER_MIN_TO_M3_PER_S,
            (Quantity::VolumeFlow, "l/min") => 1e3 * ML_PER_MIN_TO_M3_PER_S,
            (Quantity::Fraction, "1") => 1.0,
            (Quantity::Fraction, "%") => 1e-2,
            (Quantity::Length, "m") => 1.0,
            (Quantity::Length, "mm") => 1e-3,
            (Quantity::Length, "um") => 1e-6,
            (Quantity::Density, "kg/m3") => 1.0,
            (Quantity::Density, "g/cm3") => 1e3,
            (Quantity::Viscosity, "Pa*s") => 1.0,
            (Quantity::Viscosity, "mPa*s" | "cP") => 1e-3,
            (Quantity::Acceleration, "m/s2") => 1.0,
            (Quantity::Conductivity, "S/m") => 1.0,
            (Quantity::LengthDensity, "1/m2") => 1.0,
            (Quantity::LengthDensity, "1/mm2") => 1e6,
            _ => return None,
        };
        Some(f)
    }
}

/// Converts `value` given in `unit` to SI.
pub fn convert_units(quantity: Quantity, value: f64, unit: &str) -> Result<f64> {
    let f = quantity.factor(unit).ok_or_else(|| Error::UnknownUnit {
        quantity: quantity.name().to_string(),
        unit: unit.to_string(),
    })?;
    Ok(value * f)
}

/// A config number: bare numbers are SI, objects carry a unit tag.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Tagged {
    Si(f64),
    WithUnit(WithUnit),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WithUnit {
    pub value: f64,
    pub unit: String,
}

impl Tagged {
    pub fn to_si(&self, quantity: Quantity) -> Result<f64> {
        match self {
            Tagged::Si(v) => Ok(*v),
            Tagged::WithUnit(w) => convert_units(quantity, w.value, &w.unit),
        }
    }
}

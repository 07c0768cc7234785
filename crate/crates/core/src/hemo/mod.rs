//! Physical parameters, unit handling and the closed-form Hagen-Poiseuille
//! derivations of the wall and diffusion coefficients.

mod config;
mod derive;
mod units;

pub use config::{table2_labels, HemoConfig, Microvessels, Tissue};
pub use derive::{
    arteriole_fraction, cross_section_area, derive_params, element_xi, lambda_field, wall_xi,
    xi_bar, DerivedParams,
};
pub use units::{convert_units, Quantity, Tagged, WithUnit, ML_PER_MIN_TO_M3_PER_S, MMHG_TO_PA};

//! Difference measures between conductivity atlases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::TetMesh;
use crate::mixture::{ConductivityAtlas, MixtureModel};

/// Number of bins of a PRD histogram.
pub const HISTOGRAM_BINS: usize = 20;
/// PRD (%) at or below which nodes are left out of the histogram.
pub const PRD_THRESHOLD: f64 = 0.1;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
            context: "conductivity vectors",
        });
    }
    Ok(())
}

fn l1(v: &[f64], quantity: &'static str) -> Result<f64> {
    let n: f64 = v.iter().map(|x| x.abs()).sum();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Parameter {
            quantity,
            value: n,
            reason: "norm must be finite and positive",
        });
    }
    Ok(n)
}

/// Relative difference measure (%): `100 ‖σ_eff/‖σ_eff‖₁ − σ_bg/‖σ_bg‖₁‖₁`.
pub fn rdm(sigma_eff: &[f64], sigma_bg: &[f64]) -> Result<f64> {
    check_lengths(sigma_eff, sigma_bg)?;
    let ne = l1(sigma_eff, "effective conductivity 1-norm")?;
    let nb = l1(sigma_bg, "background conductivity 1-norm")?;
    let d: f64 = sigma_eff
        .iter()
        .zip(sigma_bg)
        .map(|(e, b)| (e / ne - b / nb).abs())
        .sum();
    Ok(100.0 * d)
}

/// Magnitude measure (%): `100 ‖σ_eff‖₁/‖σ_bg‖₁ − 100`.
pub fn mag(sigma_eff: &[f64], sigma_bg: &[f64]) -> Result<f64> {
    check_lengths(sigma_eff, sigma_bg)?;
    let nb = l1(sigma_bg, "background conductivity 1-norm")?;
    let ne: f64 = sigma_eff.iter().map(|x| x.abs()).sum();
    Ok(100.0 * ne / nb - 100.0)
}

/// Pointwise relative difference (%): `100 |σ_eff,i − σ_bg,i| / ‖σ_bg‖∞`.
pub fn prd(sigma_eff: &[f64], sigma_bg: &[f64]) -> Result<Vec<f64>> {
    check_lengths(sigma_eff, sigma_bg)?;
    let m = sigma_bg.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Parameter {
            quantity: "background conductivity max-norm",
            value: m,
            reason: "norm must be finite and positive",
        });
    }
    Ok(sigma_eff
        .iter()
        .zip(sigma_bg)
        .map(|(e, b)| 100.0 * (e - b).abs() / m)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub volume_fraction: f64,
}

/// Volume-weighted PRD histogram; empty when no node exceeds the threshold.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PrdHistogram {
    pub bins: Vec<HistogramBin>,
}

impl PrdHistogram {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total_fraction(&self) -> f64 {
        self.bins.iter().map(|b| b.volume_fraction).sum()
    }
}

/// Equal-width bins on `[0.1, max PRD]` over nodes with PRD above 0.1 %.
/// Weights are normalized by the total weight of all nodes.
pub fn prd_histogram(prd: &[f64], weights: &[f64]) -> Result<PrdHistogram> {
    check_lengths(prd, weights)?;
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Parameter {
            quantity: "node weight",
            value: w,
            reason: "must be finite and nonnegative",
        });
    }
    let total: f64 = weights.iter().sum();
    let selected: Vec<(f64, f64)> = prd
        .iter()
        .zip(weights)
        .filter(|(p, _)| **p > PRD_THRESHOLD)
        .map(|(p, w)| (*p, *w))
        .collect();
    if selected.is_empty() || total <= 0.0 {
        return Ok(PrdHistogram::default());
    }
    let max = selected.iter().fold(PRD_THRESHOLD, |m, s| m.max(s.0));
    let width = (max - PRD_THRESHOLD) / HISTOGRAM_BINS as f64;
    let mut bins: Vec<HistogramBin> = (0..HISTOGRAM_BINS)
        .map(|i| HistogramBin {
            left: PRD_THRESHOLD + i as f64 * width,
            right: if i + 1 == HISTOGRAM_BINS {
                max
            } else {
                PRD_THRESHOLD + (i + 1) as f64 * width
            },
            volume_fraction: 0.0,
        })
        .collect();
    for (p, w) in selected {
        let i = (((p - PRD_THRESHOLD) / width) as usize).min(HISTOGRAM_BINS - 1);
        bins[i].volume_fraction += w / total;
    }
    Ok(PrdHistogram { bins })
}

/// Comparison of one effective atlas against the background.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtlasReport {
    pub model: MixtureModel,
    pub rdm: f64,
    pub mag: f64,
    pub prd_max: f64,
    /// PRD per atlas node, in node order.
    #[serde(skip)]
    pub prd: Vec<f64>,
    pub histogram: PrdHistogram,
}

/// Lumped node volumes over conductive elements, restricted to atlas nodes.
pub fn atlas_node_weights(mesh: &TetMesh, atlas: &ConductivityAtlas) -> Result<Vec<f64>> {
    if atlas.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch {
            expected: mesh.node_count(),
            found: atlas.len(),
            context: "atlas nodes",
        });
    }
    let w = mesh.lumped_node_volumes(|t| mesh.tet_region(t).is_conductive());
    Ok(w.into_iter()
        .zip(atlas.values())
        .filter(|(_, s)| s.is_some())
        .map(|(w, _)| w)
        .collect())
}

/// RDM, MAG, PRD and the PRD histogram of `effective` against `background`.
/// Both atlases must cover the same nodes.
pub fn compare_atlases(
    mesh: &TetMesh,
    effective: &ConductivityAtlas,
    background: &ConductivityAtlas,
) -> Result<AtlasReport> {
    if effective.mask() != background.mask() {
        return Err(Error::Structural(
            "atlases cover different node sets".into(),
        ));
    }
    let eff = effective.conductive();
    let bg = background.conductive();
    let weights = atlas_node_weights(mesh, background)?;
    let p = prd(&eff, &bg)?;
    Ok(AtlasReport {
        model: effective.model(),
        rdm: rdm(&eff, &bg)?,
        mag: mag(&eff, &bg)?,
        prd_max: p.iter().fold(0.0, |m: f64, x| m.max(*x)),
        histogram: prd_histogram(&p, &weights)?,
        prd: p,
    })
}

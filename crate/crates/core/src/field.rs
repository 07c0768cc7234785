//! Summaries of nodal fields.

use serde::Serialize;

/// Range and interdecile range of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSummary {
    pub min: f64,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
}

/// Linearly interpolated quantile of sorted data, `q` in [0, 1].
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

impl FieldSummary {
    /// `None` for an empty field.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q10: quantile_sorted(&v, 0.1),
            median: quantile_sorted(&v, 0.5),
            q90: quantile_sorted(&v, 0.9),
            max: v[v.len() - 1],
        })
    }
}

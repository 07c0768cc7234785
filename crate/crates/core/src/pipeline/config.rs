//! Run configuration and mesh sources.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fick::ConcentrationScale;
use crate::hemo::HemoConfig;
use crate::mesh::{
    generate_box_mesh, generate_embedded_cylinder, load_mesh, BoxSpec, CylinderSpec, LabelEntry,
    Region, TetMesh,
};
use crate::mixture::MixtureModel;
use crate::ppe::PpeForcing;
use crate::sparsela::CgOptions;

pub const ARTERY_LABEL: u32 = 1;
pub const TISSUE_LABEL: u32 = 2;

fn artery_entry() -> LabelEntry {
    LabelEntry::new(ARTERY_LABEL, Region::Artery, "blood_vessels")
}

fn tissue_entry() -> LabelEntry {
    LabelEntry::new(TISSUE_LABEL, Region::Microcirculation, "grey_matter")
}

/// Where the mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// Box of arterial tissue only.
    Cube { n: usize, edge: f64 },
    /// Cylindrical artery along a coordinate axis through the box center.
    Cylinder {
        n: usize,
        edge: f64,
        radius: f64,
        length: f64,
        axis: usize,
    },
    File(PathBuf),
}

impl Default for MeshSource {
    fn default() -> Self {
        MeshSource::Cylinder {
            n: 16,
            edge: 0.1,
            radius: 0.02,
            length: 0.08,
            axis: 0,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for mesh key `{key}`")))
}

fn key_values(spec: &str) -> Result<Vec<(&str, &str)>> {
    spec.split(',')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("expected key=value in mesh spec, got `{kv}`")))
        })
        .collect()
}

impl MeshSource {
    /// Parses `gen:cube:<n>`, `gen:cube:n=..,edge=..`,
    /// `gen:cylinder[:n=..,edge=..,radius=..,length=..,axis=x|y|z]` or a path.
    pub fn parse(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("gen:") else {
            return Ok(MeshSource::File(PathBuf::from(s)));
        };
        let (kind, args) = rest.split_once(':').unwrap_or((rest, ""));
        match kind {
            "cube" => {
                let (mut n, mut edge) = (8, 0.1);
                if let Ok(v) = args.parse::<usize>() {
                    n = v;
                } else {
                    for (k, v) in key_values(args)? {
                        match k {
                            "n" => n = parse_value(k, v)?,
                            "edge" => edge = parse_value(k, v)?,
                            _ => return Err(Error::Config(format!("unknown cube key `{k}`"))),
                        }
                    }
                }
                Ok(MeshSource::Cube { n, edge })
            }
            "cylinder" => {
                let MeshSource::Cylinder {
                    mut n,
                    mut edge,
                    mut radius,
                    mut length,
                    mut axis,
                } = MeshSource::default()
                else {
                    unreachable!()
                };
                for (k, v) in key_values(args)? {
                    match k {
                        "n" => n = parse_value(k, v)?,
                        "edge" => edge = parse_value(k, v)?,
                        "radius" => radius = parse_value(k, v)?,
                        "length" => length = parse_value(k, v)?,
                        "axis" => {
                            axis = match v {
                                "x" => 0,
                                "y" => 1,
                                "z" => 2,
                                _ => return Err(Error::Config(format!("axis must be x, y or z, got `{v}`"))),
                            }
                        }
                        _ => return Err(Error::Config(format!("unknown cylinder key `{k}`"))),
                    }
                }
                Ok(MeshSource::Cylinder {
                    n,
                    edge,
                    radius,
                    length,
                    axis,
                })
            }
            other => Err(Error::Config(format!("unknown mesh generator `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<TetMesh> {
        match self {
            MeshSource::Cube { n, edge } => generate_box_mesh(&BoxSpec::cube(*edge, *n), artery_entry()),
            MeshSource::Cylinder {
                n,
                edge,
                radius,
                length,
                axis,
            } => {
                let mut dir = [0.0; 3];
                dir[*axis] = 1.0;
                generate_embedded_cylinder(&CylinderSpec {
                    domain: BoxSpec::cube(*edge, *n),
                    center: [0.5 * edge; 3],
                    axis: dir,
                    radius: *radius,
                    length: *length,
                    artery: artery_entry(),
                    tissue: tissue_entry(),
                })
            }
            MeshSource::File(p) => load_mesh(p),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            MeshSource::Cube { n, edge } => format!("gen:cube:n={n},edge={edge}"),
            MeshSource::Cylinder {
                n,
                edge,
                radius,
                length,
                axis,
            } => format!(
                "gen:cylinder:n={n},edge={edge},radius={radius},length={length},axis={}",
                ["x", "y", "z"][*axis]
            ),
            MeshSource::File(p) => p.display().to_string(),
        }
    }
}

/// Physical parameters: a preset name, a JSON file path, or an inline object.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum HemoSource {
    Named(String),
    Inline(serde_json::Value),
}

impl Default for HemoSource {
    fn default() -> Self {
        HemoSource::Named("table2".into())
    }
}

impl HemoSource {
    pub fn load(&self, base: &Path) -> Result<HemoConfig> {
        match self {
            HemoSource::Named(name) if name.ends_with(".json") => HemoConfig::load(&base.join(name)),
            HemoSource::Named(name) => HemoConfig::preset(name),
            HemoSource::Inline(v) => HemoConfig::from_json_str(&v.to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipelineConfig {
    #[serde(default)]
    mesh: Option<String>,
    #[serde(default)]
    hemo: HemoSource,
    #[serde(default)]
    models: Option<Vec<String>>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    max_iter: Option<usize>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    concentration_scale: ConcentrationScale,
    #[serde(default)]
    forcing: PpeForcing,
}

/// Everything a pipeline run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub mesh: MeshSource,
    pub hemo: HemoConfig,
    pub models: Vec<MixtureModel>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub out: PathBuf,
    pub concentration_scale: ConcentrationScale,
    pub forcing: PpeForcing,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::default(),
            hemo: HemoConfig::table2(),
            models: MixtureModel::STANDARD.to_vec(),
            tol: CgOptions::default().tol,
            max_iter: None,
            out: PathBuf::from("out"),
            concentration_scale: ConcentrationScale::default(),
            forcing: PpeForcing::default(),
        }
    }
}

/// Parses a comma-separated model list.
pub fn parse_models(list: &str) -> Result<Vec<MixtureModel>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(MixtureModel::parse)
        .collect()
}

impl PipelineConfig {
    /// Parses JSON; relative paths resolve against `base`.
    pub fn from_json_str(text: &str, base: &Path) -> Result<Self> {
        let raw: RawPipelineConfig = serde_json::from_str(text)?;
        let defaults = Self::default();
        let mesh = match raw.mesh {
            Some(s) => match MeshSource::parse(&s)? {
                MeshSource::File(p) => MeshSource::File(base.join(p)),
                m => m,
            },
            None => defaults.mesh,
        };
        let models = match raw.models {
            Some(list) => list.iter().map(|m| MixtureModel::parse(m)).collect::<Result<_>>()?,
            None => defaults.models,
        };
        let cfg = Self {
            mesh,
            hemo: raw.hemo.load(base)?,
            models,
            tol: raw.tol.unwrap_or(defaults.tol),
            max_iter: raw.max_iter,
            out: raw.out.map(|p| base.join(p)).unwrap_or(defaults.out),
            concentration_scale: raw.concentration_scale,
            forcing: raw.forcing,
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == Some(0) {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        self.hemo.validate()
    }

    pub fn cg_options(&self) -> CgOptions {
        CgOptions {
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    /// Models in the requested order, with duplicates removed.
    pub fn unique_models(&self) -> Vec<MixtureModel> {
        let mut out: Vec<MixtureModel> = Vec::new();
        for m in &self.models {
            if !out.contains(m) {
                out.push(*m);
            }
        }
        out
    }
}

/// Inputs recorded in the run manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RecordedInputs {
    pub mesh: String,
    pub models: Vec<MixtureModel>,
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub concentration_scale: ConcentrationScale,
    pub forcing: PpeForcing,
    pub hemo: HemoConfig,
}

impl From<&PipelineConfig> for RecordedInputs {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            mesh: c.mesh.describe(),
            models: c.unique_models(),
            tol: c.tol,
            max_iter: c.max_iter,
            concentration_scale: c.concentration_scale,
            forcing: c.forcing,
            hemo: c.hemo.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sources() {
        assert_eq!(
            MeshSource::parse("gen:cube:6").unwrap(),
            MeshSource::Cube { n: 6, edge: 0.1 }
        );
        assert_eq!(
            MeshSource::parse("gen:cube:n=4,edge=1").unwrap(),
            MeshSource::Cube { n: 4, edge: 1.0 }
        );
        assert_eq!(MeshSource::parse("gen:cylinder").unwrap(), MeshSource::default());
        assert_eq!(
            MeshSource::parse("gen:cylinder:n=20,radius=0.015,axis=z").unwrap(),
            MeshSource::Cylinder {
                n: 20,
                edge: 0.1,
                radius: 0.015,
                length: 0.08,
                axis: 2
            }
        );
        assert_eq!(
            MeshSource::parse("head.tmesh").unwrap(),
            MeshSource::File("head.tmesh".into())
        );
        assert!(MeshSource::parse("gen:sphere").is_err());
        assert!(MeshSource::parse("gen:cylinder:axis=w").is_err());
        assert!(MeshSource::parse("gen:cylinder:radius").is_err());
    }

    #[test]
    fn describe_round_trips() {
        for s in [MeshSource::default(), MeshSource::Cube { n: 3, edge: 0.5 }] {
            assert_eq!(MeshSource::parse(&s.describe()).unwrap(), s);
        }
    }

    #[test]
    fn json_defaults_and_overrides() {
        let c = PipelineConfig::from_json_str("{}", Path::new("/base")).unwrap();
        assert_eq!(c.models.len(), 5);
        assert_eq!(c.mesh, MeshSource::default());
        let c = PipelineConfig::from_json_str(
            r#"{"mesh": "m.tmesh", "models": ["hs_upper"], "tol": 1e-8, "out": "o",
                "forcing": "full", "concentration_scale": {"fixed": 2.0}}"#,
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(c.mesh, MeshSource::File("/base/m.tmesh".into()));
        assert_eq!(c.models, vec![MixtureModel::HsUpper]);
        assert_eq!(c.out, PathBuf::from("/base/o"));
        assert_eq!(c.forcing, PpeForcing::Full);
        assert_eq!(c.concentration_scale, ConcentrationScale::Fixed(2.0));
        assert!(PipelineConfig::from_json_str(r#"{"model": []}"#, Path::new(".")).is_err());
    }

    #[test]
    fn empty_model_list_rejected() {
        let c = PipelineConfig::from_json_str(r#"{"models": []}"#, Path::new(".")).unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn inline_hemo() {
        let mut v: serde_json::Value =
            serde_json::from_str(include_str!("../../presets/table2.json")).unwrap();
        v["body_force"] = serde_json::json!([0.0, 0.0, 0.0]);
        let text = serde_json::json!({ "hemo": v }).to_string();
        let c = PipelineConfig::from_json_str(&text, Path::new(".")).unwrap();
        assert_eq!(c.hemo.body_force, [0.0; 3]);
    }

    #[test]
    fn duplicate_models_collapse() {
        let c = PipelineConfig {
            models: parse_models("hs_lower,background,hs_lower").unwrap(),
            ..PipelineConfig::default()
        };
        assert_eq!(c.unique_models(), vec![MixtureModel::HsLower, MixtureModel::Background]);
    }
}

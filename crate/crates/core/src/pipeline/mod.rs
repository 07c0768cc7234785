//! End-to-end run: pressure, concentration, conductivity atlases, metrics.
//!
//! Each stage is also exposed on its own, together with writers and readers
//! for its artifacts, so a stage can consume the files of the previous one.

mod config;
mod output;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fick::{
    assemble_fick_system, assemble_source_load, build_source, solve_fick, ConcentrationField,
    ConcentrationScale,
};
use crate::field::FieldSummary;
use crate::hemo::{
    derive_params, element_xi, lambda_field, wall_xi, xi_bar, DerivedParams, HemoConfig,
};
use crate::mesh::{
    export_vtk, extract_interface, save_mesh, FaceSelection, NamedField, Region, Subdomain,
    SurfaceMesh, TetMesh,
};
use crate::metrics::{compare_atlases, AtlasReport};
use crate::mixture::{build_atlas, check_bracketing, BracketCheck, ConductivityAtlas, MixtureModel};
use crate::ppe::{assemble_ppe_system, solve_ppe, PpeForcing, PressureField};
use crate::sparsela::{CgOptions, SolveReport};

pub use config::{
    parse_models, HemoSource, MeshSource, PipelineConfig, RecordedInputs, ARTERY_LABEL,
    TISSUE_LABEL,
};
pub use output::{read_nodal_column, write_histogram_csv, write_metrics_csv, write_nodal_csv};

pub const PRESSURE_FIELD: &str = "pressure_Pa";
pub const CONCENTRATION_FIELD: &str = "c";
pub const SCALED_CONCENTRATION_FIELD: &str = "c_scaled";
pub const BACKGROUND_FIELD: &str = "sigma_background";

/// Grid size used for the Archie/HS bracketing report.
const BRACKET_SAMPLES: usize = 99;

/// Domains, wall and derived coefficients shared by the solves.
#[derive(Debug, Clone)]
pub struct Hemodynamics {
    pub omega: Subdomain,
    pub micro: Subdomain,
    pub wall: SurfaceMesh,
    pub wall_lambda: Vec<f64>,
    pub element_lambda: Vec<f64>,
    pub params: DerivedParams,
}

impl Hemodynamics {
    pub fn prepare(mesh: &TetMesh, cfg: &HemoConfig) -> Result<Self> {
        cfg.check_labels(mesh.label_table())?;
        let omega = Subdomain::from_regions(mesh, &[Region::Artery])?;
        let micro = Subdomain::from_regions(mesh, &[Region::Microcirculation])?;
        let wall = extract_interface(mesh, Region::Artery, FaceSelection::Boundary)?;
        let xi = wall_xi(mesh, &wall, cfg)?;
        let mean = xi_bar(&wall, &xi)?;
        let params = derive_params(cfg, mean)?;
        let wall_lambda = lambda_field(&xi, mean)?;
        let element_lambda = lambda_field(&element_xi(mesh, &micro, cfg)?, mean)?;
        Ok(Self {
            omega,
            micro,
            wall,
            wall_lambda,
            element_lambda,
            params,
        })
    }

    pub fn pressure(
        &self,
        mesh: &TetMesh,
        cfg: &HemoConfig,
        forcing: PpeForcing,
        opts: &CgOptions,
    ) -> Result<PressureField> {
        let system = assemble_ppe_system(
            mesh,
            &self.omega,
            &self.wall,
            &self.wall_lambda,
            &self.params,
            cfg,
            forcing,
        )?;
        solve_ppe(&system, opts)
    }

    /// `pressure` holds a value on every wall node; other entries are unused.
    pub fn concentration(
        &self,
        mesh: &TetMesh,
        cfg: &HemoConfig,
        pressure: &[f64],
        scale: ConcentrationScale,
        opts: &CgOptions,
    ) -> Result<ConcentrationField> {
        let source = build_source(pressure, &self.wall, &self.wall_lambda, &self.params, cfg.p0)?;
        let system = assemble_fick_system(mesh, &self.micro, &self.element_lambda, &self.params)?;
        let load = assemble_source_load(&self.wall, self.micro.dofs(), &source)?;
        let mut c = solve_fick(&system, &load, self.micro.dofs(), opts)?;
        c.normalize(scale, &self.wall.node_ids(), &self.params, cfg.theta)?;
        Ok(c)
    }
}

/// Background atlas plus one atlas per requested model.
pub fn build_atlases(
    mesh: &TetMesh,
    cfg: &HemoConfig,
    c: &[f64],
    models: &[MixtureModel],
) -> Result<(ConductivityAtlas, Vec<ConductivityAtlas>)> {
    let background = build_atlas(mesh, cfg, c, MixtureModel::Background)?;
    let atlases = models
        .iter()
        .map(|&m| build_atlas(mesh, cfg, c, m))
        .collect::<Result<Vec<_>>>()?;
    Ok((background, atlases))
}

/// Reports for every mixture atlas, in order.
pub fn atlas_reports(
    mesh: &TetMesh,
    background: &ConductivityAtlas,
    atlases: &[ConductivityAtlas],
) -> Result<Vec<AtlasReport>> {
    atlases
        .iter()
        .filter(|a| a.model().is_mixture())
        .map(|a| compare_atlases(mesh, a, background))
        .collect()
}

/// Archie/HS bracketing for every microcirculation background conductivity
/// present in the mesh.
pub fn bracketing_report(mesh: &TetMesh, cfg: &HemoConfig) -> Result<Vec<BracketCheck>> {
    let labels: BTreeSet<u32> = (0..mesh.tet_count())
        .filter(|&t| mesh.tet_region(t) == Region::Microcirculation)
        .map(|t| mesh.tet_labels()[t])
        .collect();
    let mut sigmas: Vec<f64> = labels
        .into_iter()
        .map(|l| cfg.sigma_m(l))
        .collect::<Result<_>>()?;
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut out = Vec::new();
    for s in sigmas {
        out.extend(check_bracketing(s, cfg.sigma_f, BRACKET_SAMPLES)?);
    }
    Ok(out)
}

fn nodes_of(dofs: &crate::mesh::DofMap) -> Vec<usize> {
    let mut v = dofs.globals().to_vec();
    v.sort_unstable();
    v
}

fn file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub fn atlas_file_stem(model: MixtureModel) -> String {
    format!("atlas_{}", model.name())
}

pub fn atlas_field_name(model: MixtureModel) -> String {
    match model {
        MixtureModel::Background => BACKGROUND_FIELD.into(),
        m => format!("sigma_{}", m.name()),
    }
}

pub fn write_mesh_files(dir: &Path, mesh: &TetMesh) -> Result<Vec<String>> {
    save_mesh(mesh, file(dir, "mesh.tmesh"))?;
    export_vtk(mesh, &[], file(dir, "mesh.vtk"))?;
    Ok(vec!["mesh.tmesh".into(), "mesh.vtk".into()])
}

pub fn write_pressure_files(dir: &Path, mesh: &TetMesh, p: &PressureField) -> Result<Vec<String>> {
    let values = p.to_global(0.0);
    write_nodal_csv(
        &file(dir, "pressure.csv"),
        mesh,
        &nodes_of(p.dofs()),
        &[(PRESSURE_FIELD, &values)],
    )?;
    export_vtk(mesh, &[NamedField::new(PRESSURE_FIELD, &values)], file(dir, "pressure.vtk"))?;
    Ok(vec!["pressure.csv".into(), "pressure.vtk".into()])
}

/// Nodal pressure from `pressure.csv`; NaN off the arterial domain.
pub fn read_pressure(path: &Path, mesh: &TetMesh) -> Result<Vec<f64>> {
    read_nodal_column(path, mesh.node_count(), PRESSURE_FIELD)
}

pub fn write_concentration_files(
    dir: &Path,
    mesh: &TetMesh,
    c: &ConcentrationField,
) -> Result<Vec<String>> {
    let scaled = c.dofs().scatter(&c.scaled(), 0.0);
    let clamped = c.clamped_global();
    write_nodal_csv(
        &file(dir, "concentration.csv"),
        mesh,
        &nodes_of(c.dofs()),
        &[(SCALED_CONCENTRATION_FIELD, &scaled), (CONCENTRATION_FIELD, &clamped)],
    )?;
    export_vtk(
        mesh,
        &[
            NamedField::new(SCALED_CONCENTRATION_FIELD, &scaled),
            NamedField::new(CONCENTRATION_FIELD, &clamped),
        ],
        file(dir, "concentration.vtk"),
    )?;
    Ok(vec!["concentration.csv".into(), "concentration.vtk".into()])
}

/// Clamped volume fraction from `concentration.csv`; NaN off the
/// microcirculation domain.
pub fn read_concentration(path: &Path, mesh: &TetMesh) -> Result<Vec<f64>> {
    read_nodal_column(path, mesh.node_count(), CONCENTRATION_FIELD)
}

pub fn write_atlas_files(
    dir: &Path,
    mesh: &TetMesh,
    background: &ConductivityAtlas,
    atlas: &ConductivityAtlas,
) -> Result<Vec<String>> {
    let stem = atlas_file_stem(atlas.model());
    let nodes: Vec<usize> = (0..atlas.len()).filter(|&i| atlas.values()[i].is_some()).collect();
    let bg = background.dense(0.0);
    let eff = atlas.dense(0.0);
    let name = atlas_field_name(atlas.model());
    let mut columns: Vec<(&str, &[f64])> = vec![(BACKGROUND_FIELD, &bg)];
    if atlas.model().is_mixture() {
        columns.push((&name, &eff));
    }
    write_nodal_csv(&file(dir, &format!("{stem}.csv")), mesh, &nodes, &columns)?;
    let fields: Vec<NamedField<'_>> = columns.iter().map(|(n, v)| NamedField::new(n, v)).collect();
    export_vtk(mesh, &fields, file(dir, &format!("{stem}.vtk")))?;
    Ok(vec![format!("{stem}.csv"), format!("{stem}.vtk")])
}

/// Reads `atlas_<model>.csv` from `dir`.
pub fn read_atlas(dir: &Path, mesh: &TetMesh, model: MixtureModel) -> Result<ConductivityAtlas> {
    read_atlas_pair(dir, mesh, model).map(|p| p.1)
}

/// Background and effective atlas stored together in `atlas_<model>.csv`.
pub fn read_atlas_pair(
    dir: &Path,
    mesh: &TetMesh,
    model: MixtureModel,
) -> Result<(ConductivityAtlas, ConductivityAtlas)> {
    let path = file(dir, &format!("{}.csv", atlas_file_stem(model)));
    let to_atlas = |m: MixtureModel, column: &str| -> Result<ConductivityAtlas> {
        let values = read_nodal_column(&path, mesh.node_count(), column)?;
        ConductivityAtlas::from_values(m, values.into_iter().map(|v| (!v.is_nan()).then_some(v)).collect())
    };
    Ok((
        to_atlas(MixtureModel::Background, BACKGROUND_FIELD)?,
        to_atlas(model, &atlas_field_name(model))?,
    ))
}

pub fn write_report_files(dir: &Path, reports: &[AtlasReport]) -> Result<Vec<String>> {
    write_metrics_csv(&file(dir, "metrics.csv"), reports)?;
    let mut files = vec!["metrics.csv".to_string()];
    for r in reports {
        let name = format!("prd_histogram_{}.csv", r.model.name());
        write_histogram_csv(&file(dir, &name), &r.histogram)?;
        files.push(name);
    }
    Ok(files)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub nodes: usize,
    pub tets: usize,
    pub artery_nodes: usize,
    pub microcirculation_nodes: usize,
    pub wall_triangles: usize,
    pub wall_area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaInfo {
    pub wall: Option<FieldSummary>,
    pub element: Option<FieldSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PressureInfo {
    pub solver: SolveReport,
    pub p_bar: f64,
    pub total: FieldSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationInfo {
    pub solver: SolveReport,
    pub scale: f64,
    pub scaled: FieldSummary,
    /// Nodes whose scaled value fell outside [0, 1].
    pub clamped_nodes: usize,
}

/// Machine-readable record of a run, written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub status: RunStatus,
    pub failed_stage: Option<&'static str>,
    pub error: Option<String>,
    pub inputs: RecordedInputs,
    pub mesh: Option<MeshInfo>,
    pub derived: Option<DerivedParams>,
    pub lambda: Option<LambdaInfo>,
    pub pressure: Option<PressureInfo>,
    pub concentration: Option<ConcentrationInfo>,
    pub bracketing: Vec<BracketCheck>,
    pub metrics: Vec<AtlasReport>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Self {
            status: RunStatus::Running,
            failed_stage: None,
            error: None,
            inputs: cfg.into(),
            mesh: None,
            derived: None,
            lambda: None,
            pressure: None,
            concentration: None,
            bracketing: Vec::new(),
            metrics: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = file(dir, "manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// In-memory results of a complete run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mesh: TetMesh,
    pub pressure: PressureField,
    pub concentration: ConcentrationField,
    pub background: ConductivityAtlas,
    pub atlases: Vec<ConductivityAtlas>,
    pub reports: Vec<AtlasReport>,
    pub manifest: Manifest,
}

type Staged<T> = std::result::Result<T, (&'static str, Error)>;

fn stage<T>(name: &'static str, r: Result<T>) -> Staged<T> {
    r.map_err(|e| (name, e))
}

fn execute(cfg: &PipelineConfig, m: &mut Manifest) -> Staged<RunOutcome> {
    let dir = cfg.out.as_path();
    let opts = cfg.cg_options();

    let mesh = stage("mesh", cfg.mesh.build())?;
    let hemo = stage("hemo", Hemodynamics::prepare(&mesh, &cfg.hemo))?;
    m.mesh = Some(MeshInfo {
        nodes: mesh.node_count(),
        tets: mesh.tet_count(),
        artery_nodes: hemo.omega.dofs().len(),
        microcirculation_nodes: hemo.micro.dofs().len(),
        wall_triangles: hemo.wall.len(),
        wall_area: hemo.wall.total_area(),
    });
    m.derived = Some(hemo.params);
    m.lambda = Some(LambdaInfo {
        wall: FieldSummary::of(&hemo.wall_lambda),
        element: FieldSummary::of(&hemo.element_lambda),
    });
    m.outputs.extend(stage("output", write_mesh_files(dir, &mesh))?);

    let pressure = stage("ppe", hemo.pressure(&mesh, &cfg.hemo, cfg.forcing, &opts))?;
    m.pressure = Some(PressureInfo {
        solver: pressure.report,
        p_bar: pressure.p_bar(),
        total: pressure.summary(),
    });
    m.outputs.extend(stage("output", write_pressure_files(dir, &mesh, &pressure))?);

    let concentration = stage(
        "fick",
        hemo.concentration(
            &mesh,
            &cfg.hemo,
            &pressure.to_global(f64::NAN),
            cfg.concentration_scale,
            &opts,
        ),
    )?;
    m.concentration = Some(ConcentrationInfo {
        solver: concentration.report,
        scale: concentration.scale(),
        scaled: concentration.summary(),
        clamped_nodes: concentration
            .scaled()
            .iter()
            .filter(|c| !(0.0..=1.0).contains(*c))
            .count(),
    });
    m.outputs
        .extend(stage("output", write_concentration_files(dir, &mesh, &concentration))?);

    let models = cfg.unique_models();
    let (background, atlases) = stage(
        "atlas",
        build_atlases(&mesh, &cfg.hemo, &concentration.clamped_global(), &models),
    )?;
    m.bracketing = stage("atlas", bracketing_report(&mesh, &cfg.hemo))?;
    for a in &atlases {
        m.outputs
            .extend(stage("output", write_atlas_files(dir, &mesh, &background, a))?);
    }

    let reports = stage("metrics", atlas_reports(&mesh, &background, &atlases))?;
    m.metrics = reports.clone();
    m.outputs.extend(stage("output", write_report_files(dir, &reports))?);

    Ok(RunOutcome {
        mesh,
        pressure,
        concentration,
        background,
        atlases,
        reports,
        manifest: m.clone(),
    })
}

/// Runs every stage and writes all artifacts and `manifest.json` to
/// `cfg.out`. On a stage failure the manifest is still written, marked
/// partial, and the error names the stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let mut manifest = Manifest::new(cfg);
    match execute(cfg, &mut manifest) {
        Ok(mut outcome) => {
            manifest.status = RunStatus::Complete;
            manifest.outputs.push("manifest.json".into());
            manifest.write(&cfg.out)?;
            outcome.manifest = manifest;
            Ok(outcome)
        }
        Err((name, err)) => {
            manifest.status = RunStatus::Partial;
            manifest.failed_stage = Some(name);
            manifest.error = Some(err.to_string());
            manifest.outputs.push("manifest.json".into());
            // the stage error takes precedence over a failed manifest write
            let _ = manifest.write(&cfg.out);
            Err(err.in_stage(name))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;

    fn small(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            mesh: MeshSource::parse("gen:cylinder:n=12,radius=0.03").unwrap(),
            out: dir.to_path_buf(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn run_writes_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&small(dir.path())).unwrap();
        assert_eq!(out.atlases.len(), 5);
        assert_eq!(out.reports.len(), 4);
        for f in &out.manifest.outputs {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        for name in ["atlas_archie_3_2.csv", "prd_histogram_hs_upper.csv", "pressure.vtk"] {
            assert!(out.manifest.outputs.iter().any(|o| o == name), "{name}");
        }
        assert_eq!(out.manifest.status, RunStatus::Complete);
    }

    #[test]
    fn stage_files_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(&small(dir.path())).unwrap();
        let p = read_pressure(&dir.path().join("pressure.csv"), &out.mesh).unwrap();
        let expected = out.pressure.to_global(f64::NAN);
        for (x, y) in p.iter().zip(&expected) {
            assert!(x == y || (x.is_nan() && y.is_nan()));
        }
        let c = read_concentration(&dir.path().join("concentration.csv"), &out.mesh).unwrap();
        for (x, y) in c.iter().zip(out.concentration.clamped_global()) {
            assert!(*x == y || (x.is_nan() && y == 0.0));
        }
        for a in &out.atlases {
            let back = read_atlas(dir.path(), &out.mesh, a.model()).unwrap();
            assert_eq!(back.values(), a.values());
        }
    }

    #[test]
    fn failing_stage_marks_manifest_partial() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            mesh: MeshSource::Cube { n: 3, edge: 0.1 },
            ..small(dir.path())
        };
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "hemo", .. }), "{err}");
        assert_eq!(err.kind(), ErrorKind::Validation);
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], "partial");
        assert_eq!(v["failed_stage"], "hemo");
    }

    #[test]
    fn empty_models_fail_before_output() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig {
            models: vec![],
            out: dir.path().join("never"),
            ..PipelineConfig::default()
        };
        assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
        assert!(!dir.path().join("never").exists());
    }
}

//! `vascond` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vascond::hemo::HemoConfig;
use vascond::mixture::MixtureModel;
use vascond::pipeline::{
    atlas_reports, build_atlases, parse_models, read_atlas_pair, read_concentration,
    read_pressure, run_pipeline, write_atlas_files, write_concentration_files, write_mesh_files,
    write_pressure_files, write_report_files, Hemodynamics, MeshSource, PipelineConfig,
};
use vascond::ppe::PpeForcing;
use vascond::{Error, ErrorKind, Result};

#[derive(Parser)]
#[command(name = "vascond", version, about = "Blood-aware conductivity atlases from a labeled tetrahedral mesh")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or load) a mesh and write mesh.tmesh and mesh.vtk.
    MeshGen(Common),
    /// Solve for arterial pressure; writes pressure.csv and pressure.vtk.
    SolvePpe(Common),
    /// Solve for the microcirculation concentration from a pressure file.
    SolveFick {
        #[command(flatten)]
        common: Common,
        /// Pressure CSV; defaults to <out>/pressure.csv.
        #[arg(long)]
        pressure: Option<PathBuf>,
    },
    /// Build conductivity atlases from a concentration file.
    BuildAtlas {
        #[command(flatten)]
        common: Common,
        /// Concentration CSV; defaults to <out>/concentration.csv.
        #[arg(long)]
        concentration: Option<PathBuf>,
    },
    /// Compare atlases against the background; writes metrics.csv and histograms.
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Directory holding atlas_<model>.csv files; defaults to <out>.
        #[arg(long)]
        atlas_dir: Option<PathBuf>,
    },
    /// Run every stage and write a manifest.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Forcing {
    WallFlux,
    Full,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset, e.g. table2.
    #[arg(long)]
    preset: Option<String>,
    /// Mesh file or generator: gen:cube:<n>, gen:cylinder[:key=val,...].
    #[arg(long)]
    mesh: Option<String>,
    /// Comma-separated models: background, archie_3_2, archie_5_3, hs_lower, hs_upper.
    #[arg(long)]
    models: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relative residual tolerance of the linear solves.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the linear solves.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Pressure forcing.
    #[arg(long, value_enum)]
    forcing: Option<Forcing>,
}

impl Common {
    /// Config file first, then flag overrides.
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(name) = &self.preset {
            cfg.hemo = HemoConfig::preset(name)?;
        }
        if let Some(m) = &self.mesh {
            cfg.mesh = MeshSource::parse(m)?;
        }
        if let Some(list) = &self.models {
            cfg.models = parse_models(list)?;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if self.max_iter.is_some() {
            cfg.max_iter = self.max_iter;
        }
        if let Some(f) = self.forcing {
            cfg.forcing = match f {
                Forcing::WallFlux => PpeForcing::WallFlux,
                Forcing::Full => PpeForcing::Full,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn prepare_out(cfg: &PipelineConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::Io {
        path: cfg.out.clone(),
        source: e,
    })?;
    Ok(&cfg.out)
}

fn report(files: &[String], dir: &Path) {
    for f in files {
        println!("wrote {}", dir.join(f).display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::MeshGen(common) => {
            let cfg = common.resolve()?;
            let mesh = cfg.mesh.build()?;
            let dir = prepare_out(&cfg)?;
            report(&write_mesh_files(dir, &mesh)?, dir);
            println!("{} nodes, {} tetrahedra", mesh.node_count(), mesh.tet_count());
        }
        Command::SolvePpe(common) => {
            let cfg = common.resolve()?;
            let mesh = cfg.mesh.build()?;
            let hemo = Hemodynamics::prepare(&mesh, &cfg.hemo)?;
            let p = hemo.pressure(&mesh, &cfg.hemo, cfg.forcing, &cfg.cg_options())?;
            let dir = prepare_out(&cfg)?;
            report(&write_pressure_files(dir, &mesh, &p)?, dir);
            let s = p.summary();
            println!("pressure range [{:.6e}, {:.6e}] Pa, p_bar {:.6e} Pa", s.min, s.max, p.p_bar());
        }
        Command::SolveFick { common, pressure } => {
            let cfg = common.resolve()?;
            let mesh = cfg.mesh.build()?;
            let hemo = Hemodynamics::prepare(&mesh, &cfg.hemo)?;
            let path = pressure.unwrap_or_else(|| cfg.out.join("pressure.csv"));
            let p = read_pressure(&path, &mesh)?;
            let c = hemo.concentration(&mesh, &cfg.hemo, &p, cfg.concentration_scale, &cfg.cg_options())?;
            let dir = prepare_out(&cfg)?;
            report(&write_concentration_files(dir, &mesh, &c)?, dir);
            let s = c.summary();
            println!("concentration range [{:.6e}, {:.6e}], scale {:.6e}", s.min, s.max, c.scale());
        }
        Command::BuildAtlas { common, concentration } => {
            let cfg = common.resolve()?;
            let mesh = cfg.mesh.build()?;
            let path = concentration.unwrap_or_else(|| cfg.out.join("concentration.csv"));
            let c = read_concentration(&path, &mesh)?;
            let (background, atlases) = build_atlases(&mesh, &cfg.hemo, &c, &cfg.unique_models())?;
            let dir = prepare_out(&cfg)?;
            for a in &atlases {
                report(&write_atlas_files(dir, &mesh, &background, a)?, dir);
            }
        }
        Command::Metrics { common, atlas_dir } => {
            let cfg = common.resolve()?;
            let mesh = cfg.mesh.build()?;
            let src = atlas_dir.unwrap_or_else(|| cfg.out.clone());
            let mut reports = Vec::new();
            for m in cfg.unique_models().into_iter().filter(MixtureModel::is_mixture) {
                let (bg, eff) = read_atlas_pair(&src, &mesh, m)?;
                reports.extend(atlas_reports(&mesh, &bg, &[eff])?);
            }
            let dir = prepare_out(&cfg)?;
            report(&write_report_files(dir, &reports)?, dir);
            print_reports(&reports);
        }
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let outcome = run_pipeline(&cfg)?;
            report(&outcome.manifest.outputs, &cfg.out);
            print_reports(&outcome.reports);
        }
    }
    Ok(())
}

fn print_reports(reports: &[vascond::metrics::AtlasReport]) {
    for r in reports {
        println!(
            "{:<12} RDM {:>10.6} %  MAG {:>10.6} %  PRD max {:>10.6} %",
            r.model.name(),
            r.rdm,
            r.mag,
            r.prd_max
        );
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Numerical => 2,
        ErrorKind::Validation | ErrorKind::Io => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

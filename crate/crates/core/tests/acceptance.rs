//! Acceptance suite: one PASS/FAIL line per criterion; nonzero exit on any failure.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use vascond::fem::{
    assemble_boundary_load_corners, assemble_boundary_mass, assemble_stiffness,
    assemble_volume_mass, element_stiffness, face_mass,
};
use vascond::fick::{assemble_fick_system, assemble_source_load, solve_fick, WallSource};
use vascond::hemo::{derive_params, lambda_field, DerivedParams, HemoConfig};
use vascond::mesh::{
    extract_interface, generate_box_mesh, generate_unit_cube_mesh, BoxSpec, FaceSelection,
    LabelEntry, Point, Region, Subdomain, TetMesh,
};
use vascond::metrics::{mag, prd, prd_histogram, rdm};
use vascond::mixture::{archie_sigma, hs_bounds, BETA_CYLINDERS, BETA_SPHERES};
use vascond::pipeline::{run_pipeline, Hemodynamics, MeshSource, PipelineConfig};
use vascond::ppe::{assemble_ppe_system, solve_ppe, PpeForcing};
use vascond::sparsela::{solve_spd, CgOptions};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn grid() -> impl Iterator<Item = f64> {
    (1..=99).map(|i| i as f64 / 100.0)
}

fn archie_identity() -> Check {
    let mut worst = 0.0f64;
    for sm in [0.14, 0.33] {
        for beta in [BETA_SPHERES, BETA_CYLINDERS] {
            for c in grid() {
                let s = archie_sigma(c, sm, 0.70, beta).map_err(err)?;
                worst = worst.max((s - (sm + (0.70 - sm) * c.powf(beta))).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:.3e} > 1e-12"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

fn hs_bounds_check() -> Check {
    for sm in [0.14, 0.33] {
        for c in grid() {
            let (lo, hi) = hs_bounds(c, sm, 0.70).map_err(err)?;
            ensure(lo <= hi + 1e-14, || format!("lower {lo} above upper {hi} at c={c}"))?;
        }
        let (lo, hi) = hs_bounds(0.0, sm, 0.70).map_err(err)?;
        ensure((lo - sm).abs() <= 1e-14 && (hi - sm).abs() <= 1e-14, || "c=0 endpoint".into())?;
        let (lo, hi) = hs_bounds(1.0, sm, 0.70).map_err(err)?;
        ensure((lo - 0.70).abs() <= 1e-14 && (hi - 0.70).abs() <= 1e-14, || "c=1 endpoint".into())?;
    }
    let (lo, hi) = hs_bounds(0.5, 0.33, 0.70).map_err(err)?;
    let (lo6, hi6) = (format!("{lo:.6}"), format!("{hi:.6}"));
    ensure(lo6 == "0.485872", || format!("lower at c=0.5 is {lo6}"))?;
    ensure(hi6 == "0.497128", || format!("upper at c=0.5 is {hi6}"))?;
    // exact rational values: 0.33 (1 + 0.555/1.175) and 0.7 (1 - 0.555/1.915)
    ensure((lo - 0.4858723404255319).abs() <= 1e-15, || format!("lower {lo}"))?;
    ensure((hi - 0.4971279373368146).abs() <= 1e-15, || format!("upper {hi}"))?;
    Ok(format!("c=0.5: lower {lo6}, upper {hi6}"))
}

fn parameter_oracles() -> Check {
    let p = derive_params(&HemoConfig::table2(), 2.4e8).map_err(err)?;
    let cases = [
        ("diffusivity", p.diffusivity, 2.124819375e-4),
        ("arteriole length", p.length, 0.05048471418704045),
        ("decay", p.decay, 13.86558310316614),
        ("zeta", p.zeta, 19.80797586166592),
        ("arteriole share", p.xi_bar_a / p.xi_bar, 0.02500956998851601),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in cases {
        let rel = ((got - want) / want).abs();
        ensure(rel <= 1e-10, || format!("{name}: {got} vs {want} (rel {rel:.3e})"))?;
        worst = worst.max(rel);
    }
    Ok(format!("max relative deviation {worst:.3e}"))
}

fn exact(p: Point) -> f64 {
    p[0].exp() * (p[1] + 0.5).sin() * (0.5 * p[2]).cos()
}

fn exact_grad(p: Point) -> Point {
    let (e, s, c) = (p[0].exp(), (p[1] + 0.5).sin(), (0.5 * p[2]).cos());
    [e * s * c, e * (p[1] + 0.5).cos() * c, -0.5 * e * s * (0.5 * p[2]).sin()]
}

/// Degree-2 rule on a tetrahedron in barycentric coordinates.
const QA: f64 = 0.5854101966249685;
const QB: f64 = 0.1381966011250105;

fn robin_l2_error(n: usize) -> Result<f64, String> {
    let mesh = generate_unit_cube_mesh(n).map_err(err)?;
    let sub = Subdomain::whole(&mesh);
    let boundary = extract_interface(&mesh, Region::Microcirculation, FaceSelection::OuterBoundary)
        .map_err(err)?;
    let k = assemble_stiffness(&mesh, &sub, &vec![1.0; mesh.tet_count()]).map_err(err)?;
    let kappa = vec![1.0; boundary.len()];
    let a = k
        .add_scaled(1.0, &assemble_boundary_mass(&boundary, sub.dofs(), &kappa).map_err(err)?, 1.0)
        .map_err(err)?;

    // volume load: mass matrix times the interpolant of f = u / 4
    let m = assemble_volume_mass(&mesh, &sub, &vec![1.0; mesh.tet_count()]).map_err(err)?;
    let f: Vec<f64> = mesh.nodes().iter().map(|&p| 0.25 * exact(p)).collect();
    let mut b = m.spmv(&f).map_err(err)?;
    // Robin data g = du/dn + u, interpolated per face with that face's normal
    let g: Vec<[f64; 3]> = boundary
        .triangles()
        .iter()
        .zip(boundary.normals())
        .map(|(tri, nrm)| {
            tri.map(|v| {
                let p = mesh.nodes()[v];
                let gr = exact_grad(p);
                gr[0] * nrm[0] + gr[1] * nrm[1] + gr[2] * nrm[2] + exact(p)
            })
        })
        .collect();
    let bg = assemble_boundary_load_corners(&boundary, sub.dofs(), &g).map_err(err)?;
    b.iter_mut().zip(&bg).for_each(|(x, y)| *x += y);

    let (u, _) = solve_spd(&a, &b, &CgOptions::with_tol(1e-12)).map_err(err)?;
    let mut e2 = 0.0;
    for t in 0..mesh.tet_count() {
        let tet = mesh.tets()[t];
        let xs = mesh.tet_coords(t);
        let w = mesh.tet_volume(t) / 4.0;
        for q in 0..4 {
            let bary: [f64; 4] = std::array::from_fn(|i| if i == q { QA } else { QB });
            let mut p = [0.0; 3];
            let mut uh = 0.0;
            for i in 0..4 {
                for d in 0..3 {
                    p[d] += bary[i] * xs[i][d];
                }
                uh += bary[i] * u[tet[i]];
            }
            e2 += w * (uh - exact(p)).powi(2);
        }
    }
    Ok(e2.sqrt())
}

fn robin_convergence() -> Check {
    let e8 = robin_l2_error(8)?;
    let e16 = robin_l2_error(16)?;
    let ratio = e8 / e16;
    let detail = format!("L2 errors {e8:.4e} (n=8), {e16:.4e} (n=16), ratio {ratio:.3}");
    ensure((3.5..=4.5).contains(&ratio), || detail.clone())?;
    Ok(detail)
}

fn unforced() -> HemoConfig {
    HemoConfig {
        body_force: [0.0; 3],
        ..HemoConfig::table2()
    }
}

fn ppe_zero_forcing() -> Check {
    let cfg = unforced();
    let limit = 1e-8 * cfg.p0;
    let opts = CgOptions::default();

    let cube = generate_box_mesh(
        &BoxSpec::cube(0.1, 8),
        LabelEntry::new(1, Region::Artery, "blood_vessels"),
    )
    .map_err(err)?;
    let omega = Subdomain::whole(&cube);
    let wall = extract_interface(&cube, Region::Artery, FaceSelection::Boundary).map_err(err)?;
    let params = derive_params(&cfg, 2.4e8).map_err(err)?;
    let lambda = vec![1.0; wall.len()];
    let sys = assemble_ppe_system(&cube, &omega, &wall, &lambda, &params, &cfg, PpeForcing::WallFlux)
        .map_err(err)?;
    let cube_max = solve_ppe(&sys, &opts).map_err(err)?.max_abs();

    let cyl = MeshSource::default().build().map_err(err)?;
    let hemo = Hemodynamics::prepare(&cyl, &cfg).map_err(err)?;
    let mut cyl_max = 0.0f64;
    for forcing in [PpeForcing::WallFlux, PpeForcing::Full] {
        cyl_max = cyl_max.max(hemo.pressure(&cyl, &cfg, forcing, &opts).map_err(err)?.max_abs());
    }
    let detail = format!("max |p|: cube {cube_max:.3e} Pa, cylinder {cyl_max:.3e} Pa, limit {limit:.3e} Pa");
    ensure(cube_max <= limit && cyl_max <= limit, || detail.clone())?;
    Ok(detail)
}

fn fick_bar() -> Check {
    let spec = BoxSpec {
        origin: [0.0; 3],
        extents: [1.0, 0.005, 0.005],
        cells: [200, 1, 1],
    };
    let mesh: TetMesh =
        generate_box_mesh(&spec, LabelEntry::new(2, Region::Microcirculation, "bar")).map_err(err)?;
    let micro = Subdomain::whole(&mesh);
    let params: DerivedParams = derive_params(&HemoConfig::table2(), 2.4e8).map_err(err)?;
    let lambda = lambda_field(&vec![2.4e8; mesh.tet_count()], 2.4e8).map_err(err)?;
    let end = extract_interface(&mesh, Region::Microcirculation, FaceSelection::OuterBoundary)
        .map_err(err)?
        .filter(|_, c| c[0].abs() < 1e-12);
    let s0 = 1.0;
    let source = WallSource::from_corners(vec![[s0; 3]; end.len()]);
    let a = assemble_fick_system(&mesh, &micro, &lambda, &params).map_err(err)?;
    let b = assemble_source_load(&end, micro.dofs(), &source).map_err(err)?;
    let c = solve_fick(&a, &b, micro.dofs(), &CgOptions::with_tol(1e-12)).map_err(err)?;

    let k = params.decay.sqrt();
    let len = 1.0;
    let analytic =
        |x: f64| s0 * (k * (len - x)).cosh() / (params.diffusivity * k * (k * len).sinh());
    let w = mesh.lumped_node_volumes(|_| true);
    let (mut num, mut den) = (0.0, 0.0);
    for (g, &ci) in micro.dofs().globals().iter().zip(c.raw()) {
        let exact = analytic(mesh.nodes()[*g][0]);
        num += w[*g] * (ci - exact).powi(2);
        den += w[*g] * exact * exact;
    }
    let rel = (num / den).sqrt();
    let detail = format!("relative L2 error {:.4} %", 100.0 * rel);
    ensure(rel <= 0.01, || detail.clone())?;
    Ok(detail)
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let cfg = PipelineConfig {
        out: dir.path().to_path_buf(),
        ..PipelineConfig::default()
    };
    ensure(cfg.hemo.sigma_f > 0.33, || "blood must be more conductive".into())?;
    let out = run_pipeline(&cfg).map_err(err)?;
    let c = out.concentration.clamped_global();
    let bg = out.background.values();
    let mut positive_nodes = 0;
    for a in out.atlases.iter().filter(|a| a.model().is_mixture()) {
        for (i, (e, b)) in a.values().iter().zip(bg).enumerate() {
            let (Some(e), Some(b)) = (e, b) else {
                ensure(e.is_none() && b.is_none(), || format!("node {i}: atlas domains differ"))?;
                continue;
            };
            ensure(e >= b, || format!("{}: node {i} below background", a.model()))?;
            if c[i] == 0.0 {
                ensure(e == b, || format!("{}: node {i} differs where c = 0", a.model()))?;
            } else if e > b {
                positive_nodes += 1;
            }
        }
    }
    let mut mags = Vec::new();
    for r in &out.reports {
        ensure(r.mag > 0.0, || format!("{}: MAG {} not positive", r.model, r.mag))?;
        mags.push(format!("{} {:.4e}", r.model, r.mag));
        let eff = out
            .atlases
            .iter()
            .find(|a| a.model() == r.model)
            .ok_or("missing atlas")?
            .conductive();
        let base = out.background.conductive();
        // a relative rounding error e in a 1-norm moves RDM by up to 100 e
        let tol = 100.0 * eff.len() as f64 * f64::EPSILON;
        for alpha in [0.5, 3.0, 1e3] {
            let scaled: Vec<f64> = eff.iter().map(|s| alpha * s).collect();
            let d = (rdm(&scaled, &base).map_err(err)? - r.rdm).abs();
            ensure(d <= tol, || format!("{}: RDM changes by {d:.3e} > {tol:.3e} under scaling", r.model))?;
        }
    }
    ensure(out.reports.len() == 4, || format!("{} reports", out.reports.len()))?;
    Ok(format!("{positive_nodes} raised node values; MAG %: {}", mags.join(", ")))
}

fn element_goldens() -> Check {
    let k = element_stiffness(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        .map_err(err)?;
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let want = match (i, j) {
                (0, 0) => 0.5,
                (0, _) | (_, 0) => -1.0 / 6.0,
                _ if i == j => 1.0 / 6.0,
                _ => 0.0,
            };
            worst = worst.max((k[i][j] - want).abs());
        }
    }
    let m = face_mass(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).map_err(err)?;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
            worst = worst.max((m[i][j] - want).abs());
        }
    }
    ensure(worst <= 1e-14, || format!("max deviation {worst:.3e}"))?;
    Ok(format!("max deviation {worst:.3e}"))
}

fn metrics_goldens() -> Check {
    let bg = [0.33, 0.14, 1.79, 0.70];
    let twice: Vec<f64> = bg.iter().map(|s| 2.0 * s).collect();
    let up: Vec<f64> = bg.iter().map(|s| 1.0216 * s).collect();
    let mut raised = bg;
    raised[0] += 0.537;
    let mut full = bg;
    full[1] += 1.79;
    let cases = [
        ("rdm equal", rdm(&bg, &bg), 0.0),
        ("rdm scaled", rdm(&twice, &bg), 0.0),
        ("rdm disjoint", rdm(&[1.0, 0.0], &[0.0, 1.0]), 200.0),
        ("mag equal", mag(&bg, &bg), 0.0),
        ("mag doubled", mag(&twice, &bg), 100.0),
        ("mag 1.0216", mag(&up, &bg), 2.16),
        ("prd equal", prd(&bg, &bg).map(|p| p.iter().fold(0.0, |m: f64, x| m.max(*x))), 0.0),
        ("prd full", prd(&full, &bg).map(|p| p[1]), 100.0),
        ("prd csf", prd(&raised, &bg).map(|p| p[0]), 30.0),
    ];
    let mut worst = 0.0f64;
    for (name, got, want) in cases {
        let got = got.map_err(err)?;
        let d = (got - want).abs();
        ensure(d <= 1e-12, || format!("{name}: {got} vs {want}"))?;
        worst = worst.max(d);
    }
    ensure(prd_histogram(&[0.05, 0.1], &[1.0, 1.0]).map_err(err)?.is_empty(), || {
        "histogram below threshold not empty".into()
    })?;
    let h = prd_histogram(&[1.0, 20.0], &[1.0, 1.0]).map_err(err)?;
    let occupied: Vec<f64> = h.bins.iter().map(|b| b.volume_fraction).filter(|w| *w > 0.0).collect();
    ensure(
        occupied.len() == 2 && occupied.iter().all(|w| (w - 0.5).abs() <= 1e-12),
        || format!("two-group histogram {occupied:?}"),
    )?;
    Ok(format!("max deviation {worst:.3e}"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "Archie identity", budget: Duration::from_secs(1), run: archie_identity },
        Criterion { id: 2, name: "Hashin-Shtrikman bounds", budget: Duration::from_secs(1), run: hs_bounds_check },
        Criterion { id: 3, name: "parameter oracles", budget: Duration::from_secs(1), run: parameter_oracles },
        Criterion { id: 4, name: "Robin FEM convergence", budget: Duration::from_secs(60), run: robin_convergence },
        Criterion { id: 5, name: "PPE zero forcing", budget: Duration::from_secs(30), run: ppe_zero_forcing },
        Criterion { id: 6, name: "Fick 1D bar", budget: Duration::from_secs(10), run: fick_bar },
        Criterion { id: 7, name: "end-to-end monotonicity", budget: Duration::from_secs(120), run: end_to_end },
        Criterion { id: 8, name: "element goldens", budget: Duration::from_secs(1), run: element_goldens },
        Criterion { id: 9, name: "metrics goldens", budget: Duration::from_secs(1), run: metrics_goldens },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= c.budget {
                Ok(d)
            } else {
                Err(format!("{d}; runtime {elapsed:.2?} over {:?}", c.budget))
            }
        });
        match result {
            Ok(d) => println!("PASS [{}] {}: {d} ({elapsed:.2?})", c.id, c.name),
            Err(d) => {
                failed += 1;
                println!("FAIL [{}] {}: {d} ({elapsed:.2?})", c.id, c.name);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

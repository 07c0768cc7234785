use std::fs;

use vascond::hemo::{derive_params, HemoConfig};
use vascond::pipeline::{run_pipeline, MeshSource, PipelineConfig};

fn small(out: &std::path::Path) -> PipelineConfig {
    PipelineConfig {
        mesh: MeshSource::parse("gen:cylinder:n=12,radius=0.03").unwrap(),
        out: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

#[test]
fn unforced_run_reproduces_background() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.hemo.body_force = [0.0; 3];
    let out = run_pipeline(&cfg).unwrap();
    assert!(out.pressure.max_abs() <= 1e-8 * cfg.hemo.p0);
    assert!(out.concentration.clamped().iter().all(|&c| c == 0.0));
    for a in &out.atlases {
        assert_eq!(a.values(), out.background.values(), "{}", a.model());
    }
    assert_eq!(out.reports.len(), 4);
    for r in &out.reports {
        assert_eq!((r.rdm, r.mag, r.prd_max), (0.0, 0.0, 0.0));
        assert!(r.histogram.is_empty());
    }
}

#[test]
fn manifest_records_every_derived_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let fields = serde_json::to_value(derive_params(&HemoConfig::table2(), 1.0).unwrap()).unwrap();
    let derived = &v["derived"];
    for (key, _) in fields.as_object().unwrap() {
        let stored = derived[key].as_f64().unwrap_or_else(|| panic!("missing {key}"));
        let direct = serde_json::to_value(out.manifest.derived.unwrap()).unwrap()[key]
            .as_f64()
            .unwrap();
        assert_eq!(stored, direct, "{key}");
    }
    for key in ["inputs", "mesh", "lambda", "pressure", "concentration", "bracketing", "metrics"] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert_eq!(v["status"], "complete");
    assert_eq!(v["pressure"]["solver"]["converged"], true);
    assert_eq!(v["inputs"]["models"].as_array().unwrap().len(), 5);
}

#[test]
fn effective_atlases_ordered_by_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&small(dir.path())).unwrap();
    let mag = |name: &str| out.reports.iter().find(|r| r.model.name() == name).unwrap().mag;
    // c^(3/2) >= c^(5/3) on [0, 1]; HS bounds are ordered
    assert!(mag("archie_3_2") >= mag("archie_5_3"));
    assert!(mag("hs_upper") >= mag("hs_lower"));
    for r in &out.reports {
        let total = r.histogram.total_fraction();
        assert!((0.0..=1.0 + 1e-12).contains(&total));
    }
}

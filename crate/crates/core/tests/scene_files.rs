use std::path::Path;

use scanscope_core::{parse_scene, parse_scene_file, SceneError, SensingPoint, Vec3};

fn repo_file(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

#[test]
fn shipped_estimate_scene_has_the_estimate_geometry() {
    let cfg = parse_scene_file(repo_file("scenes/single_spin_estimate.json")).unwrap();
    let scene = cfg.build().unwrap();
    let g = scene.probe.geometry;
    assert_eq!(g.diameter, 1e-9);
    assert_eq!(g.standoff, 5e-10);
    assert_eq!(g.sensing_point, SensingPoint::Edge);
    assert_eq!(scene.probe.line.linewidth_fwhm, 2e-3);
    let spins = scene.sample.spins();
    assert_eq!(spins.len(), 1);
    assert_eq!(spins[0].position, Vec3::ZERO);
    let m = spins[0].moment;
    assert!(m.x == 0.0 && m.y == 0.0 && (m.z - 9.28e-24).abs() < 0.01e-24);
    assert_eq!(parse_scene(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn invalid_corpus_fails_with_documented_classes() {
    let cases: &[(&str, &str)] = &[
        ("[1, 2", "syntax"),
        ("{}", "type"),
        (
            r#"{ "sample": { "spins": [] }, "extra": 1 }"#,
            "unknown_key",
        ),
        (
            r#"{ "sample": { "spins": [ { "position_nm": [0, 0, 0], "spin": 1 } ] } }"#,
            "unknown_key",
        ),
        (
            r#"{ "sample": { "spins": [] }, "noise": { "seed": 3 } }"#,
            "unknown_key",
        ),
        (
            r#"{ "sample": { "spins": [] }, "sweep": { "mode": "time_sweep" } }"#,
            "type",
        ),
        (
            r#"{ "sample": { "spins": [] }, "probe": { "line": { "linewidth_T": "huge" } } }"#,
            "type",
        ),
        (
            r#"{ "sample": { "spins": [] }, "sweep": { "points": -3 } }"#,
            "type",
        ),
        (
            r#"{ "sample": { "spins": [] }, "sweep": { "start": 0.3, "stop": 0.1 } }"#,
            "invariant",
        ),
        (
            r#"{ "sample": { "spins": [] }, "probe": { "geometry": { "standoff_nm": 0 } } }"#,
            "invariant",
        ),
        (
            r#"{ "sample": { "spins": [ { "position_nm": [0, 0, 0], "moment_direction": [0, 0, 0] } ] } }"#,
            "invariant",
        ),
        (
            r#"{ "sample": { "spins": [] }, "modality": { "kind": "stm", "positioning_jitter_rms_nm": -1 } }"#,
            "invariant",
        ),
        (
            r#"{ "sample": { "spins": [] }, "report": { "photon_budget": 0 } }"#,
            "invariant",
        ),
    ];
    for (text, class) in cases {
        let err = parse_scene(text).expect_err(text);
        assert_eq!(err.class(), *class, "{text}: {err}");
        if let SceneError::Invariant(v) = &err {
            assert!(!v.is_empty());
        }
    }
}

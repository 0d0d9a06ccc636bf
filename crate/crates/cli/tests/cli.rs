use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn r3bp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_r3bp")).args(args).output().expect("spawn r3bp")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json document")
}

#[test]
fn lagrange_document() {
    let doc = json_of(&r3bp(&["lagrange", "--mu", "0.1"]));
    assert_eq!(doc["command"], "lagrange");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(doc["config_hash"].as_str().unwrap().len(), 64);
    let r = &doc["result"];
    let pts = r["points"].as_array().unwrap();
    assert_eq!(pts.len(), 5);
    let h: Vec<f64> = pts.iter().map(|p| p["h"].as_f64().unwrap()).collect();
    assert!(h[0] < h[1] && h[1] <= h[2] && h[2] < h[3]);
    assert!((h[3] - h[4]).abs() <= 1e-12);
    assert_eq!(r["checks"]["collinear_ordered"], true);
    assert!(r["checks"]["max_grad_norm"].as_f64().unwrap() <= 1e-12);
    // L1 between the primaries, nearer the light Earth at +1/2.
    let q1 = pts[0]["q"][0].as_f64().unwrap();
    assert!(q1 > 0.0 && q1 < 0.5);
}

#[test]
fn floats_have_seventeen_digits() {
    let out = r3bp(&["kepler"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("\"period\": 6.2831853071795853e0"), "{s}");
}

#[test]
fn equivariant_homology_is_rank_one() {
    let doc = json_of(&r3bp(&["homology", "--window", "-5", "6", "--equivariant"]));
    let ranks = doc["result"]["ranks"].as_array().unwrap();
    let interior: Vec<&Value> = ranks.iter().filter(|r| r["reliable"] == true).collect();
    assert_eq!(interior.len(), 10);
    assert!(interior.iter().all(|r| r["rank"] == 1));
    assert_eq!(doc["config"]["window"], serde_json::json!([-5, 6]));
}

#[test]
fn index_is_exact_rational() {
    let doc = json_of(&r3bp(&["index", "--family", "g1", "--k", "3"]));
    assert_eq!(doc["result"]["index"], serde_json::json!({ "num": 7, "den": 2 }));
}

#[test]
fn chords_carry_exact_indices() {
    let doc = json_of(&r3bp(&["chords", "--action-bound", "7"]));
    let cs = doc["result"]["chords"].as_array().unwrap();
    assert!(!cs.is_empty());
    for c in cs {
        let k = c["k"].as_i64().unwrap();
        assert_eq!(c["index"], serde_json::json!({ "num": 2 * k + 1, "den": 2 }), "{c}");
    }
}

#[test]
fn config_errors_point_at_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"seed_grid": {"n_psi": "many"}}"#).unwrap();
    let out = r3bp(&["shoot", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/seed_grid/n_psi"), "{err}");

    std::fs::write(&path, r#"{"tolerances": {"rtoll": 1e-9}}"#).unwrap();
    let out = r3bp(&["shoot", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/tolerances/rtoll"));

    std::fs::write(&path, r#"{"d": -1.6, "d_offset": 0.001}"#).unwrap();
    let out = r3bp(&["shoot", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(&path, r#"{"mu": 0.3, "d_offset": 0.002}"#).unwrap();
    let doc = json_of(&r3bp(&["energies", "--config", path.to_str().unwrap(), "--d", "-2.0"]));
    assert_eq!(doc["config"]["mu"].as_f64(), Some(0.3));
    assert_eq!(doc["config"]["d"].as_f64(), Some(-2.0));
    assert!(doc["config"]["d_offset"].is_null());
    assert_eq!(doc["result"]["regime"], "below_l1");
}

#[test]
fn precondition_and_convergence_exit_codes() {
    assert_eq!(r3bp(&["lagrange", "--mu", "0"]).status.code(), Some(2));
    assert_eq!(r3bp(&["chords", "--phi0", "4"]).status.code(), Some(2));
    assert_eq!(r3bp(&["kepler", "--d", "-1"]).status.code(), Some(2));
    // A grid too coarse in time to bracket any crossing finds nothing.
    let dir = tempfile::tempdir().unwrap();
    let out = r3bp(&["shoot", "--t-max", "0.01", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("shoot.json")).unwrap()).unwrap();
    assert_eq!(doc["status"], "convergence_failure");
}

#[test]
fn shoot_writes_trajectory_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = r3bp(&["shoot", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&std::fs::read(dir.path().join("shoot.json")).unwrap()).unwrap();
    let first = &doc["result"]["orbits"][0];
    assert_eq!(first["hit"], "left_of_moon");
    let csv = std::fs::read_to_string(dir.path().join(first["csv"].as_str().unwrap())).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,z1,z2,w1,w2,K"));
    for l in lines {
        let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 6);
        assert!(cells[5].abs() < 1e-8);
    }
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

/// Set `R3BP_UPDATE_SCHEMAS=1` to regenerate the shipped schemas.
#[test]
fn shipped_schemas_are_current() {
    let update = std::env::var_os("R3BP_UPDATE_SCHEMAS").is_some();
    for (name, schema) in r3bp_cli::schemas() {
        let bytes = r3bp_cli::output::to_json_bytes(&schema);
        let path = schema_dir().join(format!("{name}.schema.json"));
        if update {
            std::fs::create_dir_all(schema_dir()).unwrap();
            std::fs::write(&path, &bytes).unwrap();
            continue;
        }
        let shipped = std::fs::read(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert!(shipped == bytes, "{} is stale; rerun with R3BP_UPDATE_SCHEMAS=1", path.display());
    }
    let out = r3bp(&["schema", "homology"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, std::fs::read(schema_dir().join("homology.schema.json")).unwrap());
}

#[test]
fn defaults_round_trip_through_schema_config() {
    // The resolved config echoed in a document is itself a valid config.
    let dir = tempfile::tempdir().unwrap();
    let doc = json_of(&r3bp(&["classify", "--horizon", "5"]));
    let path = dir.path().join("c.json");
    std::fs::write(&path, serde_json::to_vec(&doc["config"]).unwrap()).unwrap();
    let again = json_of(&r3bp(&["classify", "--config", path.to_str().unwrap()]));
    assert_eq!(doc["config_hash"], again["config_hash"]);
    assert_eq!(doc["result"], again["result"]);
}

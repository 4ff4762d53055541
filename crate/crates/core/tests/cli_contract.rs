use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn linkdeg(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkdeg"))
        .env("LINKDEG_CONFIG", config)
        .args(args)
        .output()
        .expect("binary runs")
}

fn records(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn records_are_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("state.json");
    for method in ["simplicial", "kronecker", "regular"] {
        let args = ["degree", "--map", "circle-power-2", "--method", method];
        let (x, y) = (&records(&linkdeg(&cfg, &args))[0], &records(&linkdeg(&cfg, &args))[0]);
        assert_eq!(x["schema"], 1);
        assert_eq!(x["value"], y["value"]);
        assert_eq!(x["rounded"], y["rounded"]);
        assert_eq!(x["config_hash"], y["config_hash"]);
        assert_eq!(x["provenance"], y["provenance"]);
        assert_eq!(x["rounded"], 2, "{method}");
    }
}

#[test]
fn calibrate_is_idempotent_and_iota_link_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("state.json");
    let small = ["--nodes", "48", "--refinement", "3"];
    let first = records(&linkdeg(&cfg, &[&["calibrate"][..], &small].concat()));
    let stored = std::fs::read_to_string(&cfg).unwrap();
    let second = records(&linkdeg(&cfg, &[&["calibrate"][..], &small].concat()));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), stored);
    assert_eq!(first[0]["value"], second[0]["value"]);
    let sign: Value = serde_json::from_str(&stored).unwrap();
    assert!(sign["global_sign"] == 1 || sign["global_sign"] == -1);

    let link = records(&linkdeg(&cfg, &[&["link", "--iota1", "0,0,0", "--iota2", "0,0"][..], &small].concat()));
    assert_eq!(link[0]["rounded"], 1);
    let reflected = records(&linkdeg(
        &cfg,
        &[&["link", "--iota1", "0,0,0", "--iota2", "0,0", "--iota2-reflected"][..], &small].concat(),
    ));
    assert_eq!(reflected[0]["rounded"], -1);
}

#[test]
fn classical_pairs_need_no_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("state.json");
    let r = records(&linkdeg(&cfg, &["link", "--pair", "torus-curve-2"]));
    assert_eq!(r[0]["rounded"], -2);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("state.json");
    assert_eq!(linkdeg(&cfg, &["degree", "--map", "no-such-map"]).status.code(), Some(2));
    assert_eq!(
        linkdeg(&cfg, &["link", "--iota1", "2,0,0", "--iota2", "0,0", "--nodes", "16", "--refinement", "1"]).status.code(),
        Some(2)
    );
    std::fs::write(&cfg, "{\"global_sign\": 3}").unwrap();
    assert_eq!(linkdeg(&cfg, &["link", "--iota1", "0,0,0", "--iota2", "0,0"]).status.code(), Some(2));
    // clap rejects unknown flags with its own usage code
    assert_eq!(linkdeg(&cfg, &["degree", "--bogus"]).status.code(), Some(2));
}

#[test]
fn catalog_listing_covers_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let r = records(&linkdeg(&dir.path().join("s.json"), &["catalog"]));
    let text = serde_json::to_string(&r).unwrap();
    for name in linkdeg::catalog::names() {
        assert!(text.contains(&format!("\"{name}\"")), "{name} missing");
    }
}

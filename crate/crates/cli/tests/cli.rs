use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lacuna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .env_remove("LACUNA_CACHE_DIR")
        .env_remove("LACUNA_MAX_TERMS")
        .env_remove("LACUNA_PARTITION_BUDGET")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("machine-readable error")
}

#[test]
fn verify_jacobi() {
    let out = lacuna(&["verify", "--identity", "jacobi", "--terms", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "ok");
}

#[test]
fn verify_hook_identities() {
    for args in [
        &["verify", "--identity", "euler", "--terms", "3000"][..],
        &["verify", "--identity", "nekrasov-okounkov", "--terms", "15", "--b", "3"],
        &["verify", "--identity", "han", "--terms", "15", "--a", "2", "--b", "5", "--c", "3"],
        &["verify", "--identity", "hecke", "--terms", "3000", "--seed", "5"],
    ] {
        let out = lacuna(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert_eq!(json(&out)["status"], "ok");
    }
}

#[test]
fn meta_optimal_level() {
    let out = lacuna(&["meta", "--a", "4", "--b", "5", "--c", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["optimal_level"], 2304);
    for key in ["a", "b", "c", "r", "weight", "level", "character_D", "classification", "cusp_orders"] {
        assert!(!v[key].is_null(), "{key}");
    }
}

#[test]
fn classify_desk_box() {
    let out = lacuna(&["classify", "--a", "4..6", "--c", "2..12", "--b-max", "99"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["complete"], true);
    let survivors: Vec<Vec<u64>> = serde_json::from_value(v["survivors"].clone()).unwrap();
    assert_eq!(survivors, vec![vec![4, 5, 3], vec![4, 5, 5], vec![4, 5, 11]]);
    for r in v["reports"].as_array().unwrap() {
        if r["status"]["kind"] == "eliminated" {
            assert_ne!(r["status"]["witness"], "0");
        }
    }
}

#[test]
fn output_is_deterministic() {
    let args = ["classify", "--a", "4..5", "--c", "2..6", "--jobs", "3"];
    let first = lacuna(&args);
    let second = lacuna(&["classify", "--a", "4..5", "--c", "2..6", "--jobs", "1"]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(lacuna(&args).stdout, first.stdout);
}

#[test]
fn hecke_test_record() {
    let out = lacuna(&["hecke-test", "--a", "4", "--b", "9", "--c", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["p"], 23);
    assert_eq!(v["eliminated"], true);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["a", "b", "c", "eliminated", "m0", "p", "witness"]);

    let out = lacuna(&["hecke-test", "--a", "4", "--b", "5", "--c", "3", "--p", "47"]);
    assert_eq!(json(&out)["eliminated"], false);

    let out = lacuna(&["hecke-test", "--a", "4", "--b", "5", "--c", "3", "--p", "25"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "precondition");
}

#[test]
fn s_search_and_interpolate() {
    let v = json(&lacuna(&["s-search", "--a-prime", "30"]));
    assert_eq!(v["s"], 71);
    let out = lacuna(&["s-search", "--a-prime", "30", "--limit", "50"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["s"].is_null());

    let v = json(&lacuna(&["interpolate", "--a", "4", "--c", "1", "--m", "4"]));
    let p = &v["polynomials"][0];
    assert_eq!(p["coeffs"], serde_json::json!(["5", "-1"]));
    assert_eq!(p["odd_roots"], serde_json::json!([5]));
}

#[test]
fn usage_errors_exit_one() {
    for args in [&["frobnicate"][..], &["meta", "--a", "4"], &[], &["verify", "--identity", "han", "--terms", "5"]] {
        let out = lacuna(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_json(&out)["error"], "usage");
    }
}

#[test]
fn env_limits_apply() {
    let out = Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(["expand", "--a", "4", "--b", "5", "--c", "3", "--trunc", "10000"])
        .env("LACUNA_MAX_TERMS", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "resource_limit");

    let out = Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(["cores", "--a", "5", "--m", "45"])
        .env("LACUNA_PARTITION_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(json(&out)["generating_function"].is_string());
}

fn read_series(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn cache_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["expand", "--a", "5", "--b", "9", "--c", "2", "--trunc", "3000"];
    let plain = lacuna(&args);
    let miss = lacuna(&[&args[..], &["--cache-dir", cache]].concat());
    let hit = lacuna(&[&args[..], &["--cache-dir", cache]].concat());
    assert_eq!(plain.stdout, miss.stdout);
    assert_eq!(miss.stdout, hit.stdout);
    let file = dir.path().join("qseries_expand_f_a5_b9_c2_T3000.series");
    let text = read_series(&file);
    assert!(text.starts_with("# T=3000\n"));

    // a stored file is what the next run reads
    fs::write(&file, "# T=3000\n0\t7\n").unwrap();
    let forged = json(&lacuna(&[&args[..], &["--cache-dir", cache]].concat()));
    assert_eq!(forged["terms"][0]["coefficient"], "7");
}

#[test]
fn csv_and_tsv_projections() {
    let out = lacuna(&["expand", "--a", "4", "--b", "5", "--c", "3", "--trunc", "100", "--format", "tsv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("exponent\tcoefficient\n27\t1\n"), "{text}");
    let out = lacuna(&["meta", "--a", "4", "--b", "5", "--c", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,b,c,r,weight,level,optimal_level,character_D,classification");
    assert_eq!(lines[1], "4,5,3,27,2,6912,2304,12,cuspidal");
}

#[test]
fn saved_config_replays() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let direct = lacuna(&["density", "--a", "1", "--b", "3", "--c", "2", "--x", "10000", "--save-config", path.to_str().unwrap()]);
    assert_eq!(direct.status.code(), Some(0));
    let replay = lacuna(&["--config", path.to_str().unwrap()]);
    assert_eq!(replay.stdout, direct.stdout);
    let saved: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved["command"]["command"], "density");
}

#[test]
fn classify_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cp = dir.path().join("checkpoint.json");
    let args = |resume: &Path| {
        vec![
            "classify".to_string(),
            "--a".into(),
            "4..5".into(),
            "--c".into(),
            "2..5".into(),
            "--cache-dir".into(),
            cache.to_str().unwrap().into(),
            "--resume".into(),
            resume.to_str().unwrap().into(),
        ]
    };
    let fresh = Command::new(env!("CARGO_BIN_EXE_lacuna")).args(args(&cp)).output().unwrap();
    assert_eq!(fresh.status.code(), Some(0));
    let done: Vec<String> = serde_json::from_str(&fs::read_to_string(&cp).unwrap()).unwrap();
    assert_eq!(done.len(), 8);

    // drop half the checkpoint; the rest is recomputed
    fs::write(&cp, serde_json::to_string(&done[..4]).unwrap()).unwrap();
    let resumed = Command::new(env!("CARGO_BIN_EXE_lacuna")).args(args(&cp)).output().unwrap();
    assert_eq!(resumed.stdout, fresh.stdout);

    let plain = lacuna(&["classify", "--a", "4..5", "--c", "2..5"]);
    assert_eq!(plain.stdout, fresh.stdout);

    let out = lacuna(&["classify", "--a", "4", "--c", "2", "--resume", cp.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn incomplete_classify_is_flagged() {
    let out = lacuna(&["classify", "--a", "5", "--c", "2..3", "--s-limit", "30"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["complete"], false);
}

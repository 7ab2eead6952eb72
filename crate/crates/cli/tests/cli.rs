use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_switchlab"));
    c.env_remove("SWITCHLAB_SEED");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn schema() -> Value {
    serde_json::from_slice(&run(&["schema"]).stdout).unwrap()
}

fn kind_of(name: &str) -> &'static str {
    if name.starts_with("oracle") {
        "oracleConfig"
    } else {
        "experimentConfig"
    }
}

#[test]
fn schema_validates_every_fixture() {
    let s = schema();
    let mut n = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let cfg: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let compiled = jsonschema::JSONSchema::compile(&s[kind_of(&name)]).unwrap();
        assert!(compiled.is_valid(&cfg), "{name}");
        let space = jsonschema::JSONSchema::compile(&s["varSpace"]).unwrap();
        assert!(space.is_valid(&cfg["space"]), "{name}");
        n += 1;
    }
    assert!(n >= 3);
}

#[test]
fn schema_rejects_negative_trials_and_unknown_fields() {
    let s = schema();
    let compiled = jsonschema::JSONSchema::compile(&s["experimentConfig"]).unwrap();
    let mut cfg: Value = serde_json::from_str(&fs::read_to_string(configs().join("switch_tiny.json")).unwrap()).unwrap();
    cfg["trials"] = (-1).into();
    assert!(!compiled.is_valid(&cfg));
    cfg["trials"] = 10.into();
    assert!(compiled.is_valid(&cfg));
    cfg["extra"] = true.into();
    assert!(!compiled.is_valid(&cfg));
}

#[test]
fn schema_roundtrips() {
    let out = run(&["schema"]);
    assert!(out.status.success());
    let parsed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let again = serde_json::to_vec_pretty(&parsed).unwrap();
    assert_eq!(serde_json::from_slice::<Value>(&again).unwrap(), parsed);
    let one = run(&["schema", "--kind", "varSpace"]);
    assert_eq!(serde_json::from_slice::<Value>(&one.stdout).unwrap(), parsed["varSpace"]);
}

#[test]
fn growth_prints_csv() {
    let out = run(&["growth", "--k", "2", "--range", "3..20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,f,iter_ℓ,2^n,pass_ℓ,iter_m,pass_m");
    assert_eq!(lines.len(), 19);
    assert_eq!(lines[1], "3,4,4,8,true,16,true");
    for l in &lines[1..] {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!((cols[4], cols[6]), ("true", "true"), "{l}");
    }
}

#[test]
fn malformed_config_exits_2_with_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    let mut cfg: Value =
        serde_json::from_str(&fs::read_to_string(configs().join("switch_tiny.json")).unwrap()).unwrap();
    cfg["trials"] = (-3).into();
    fs::write(&p, cfg.to_string()).unwrap();
    let out = run(&["switch-experiment", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["instancePath"], "/trials");
    assert_eq!(err["schemaPath"], "/properties/trials/minimum");

    fs::write(&p, "{ not json").unwrap();
    assert_eq!(run(&["sample", "--config", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["sample"]).status.code(), Some(2));
}

#[test]
fn encode_roundtrip_reports_members() {
    let cfg = configs().join("switch_tiny.json");
    let out = run(&["encode-roundtrip", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["enumerated"], 2401);
    assert!(rep["members"].as_u64().unwrap() > 0);
    assert_eq!(rep["members"], rep["distinctCodes"]);
}

#[test]
fn exhaustion_exits_3() {
    let cfg = configs().join("switch_tiny.json");
    // 2^4 outcomes cannot cover 2401
    let out = run(&["encode-roundtrip", "--config", cfg.to_str().unwrap(), "--budget", "4"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("o.json");
    let mut o: Value =
        serde_json::from_str(&fs::read_to_string(configs().join("oracle_tiny.json")).unwrap()).unwrap();
    o["maxTries"] = 1.into();
    o["starQuota"] = 8.into();
    fs::write(&p, o.to_string()).unwrap();
    let out = run(&["build-oracle", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "exhausted");
}

#[test]
fn verify_oracle_fails_on_tampered_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oracle_tiny.json");
    let cfg = cfg.to_str().unwrap();
    let table = dir.path().join("t.json");
    let out = run(&["build-oracle", "--config", cfg, "--out", table.to_str().unwrap()]);
    assert!(out.status.success());
    let ok = run(&["verify-oracle", "--config", cfg, "--table", table.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    // flip one designated bit of the first input
    let mut built: Value = serde_json::from_slice(&fs::read(&table).unwrap()).unwrap();
    let d = &built["table"]["designated"]["0"][0];
    let (y1, y2, y3) = (d["y1"].as_u64().unwrap(), d["y2"].as_u64().unwrap(), d["y3"].as_u64().unwrap());
    // canonical order inside word "0": y1, y2, y3 each below 8
    let idx = ((y1 * 8 + y2) * 8 + y3) as usize;
    let mut bits: Vec<char> = built["table"]["bits"].as_str().unwrap().chars().collect();
    bits[idx] = if bits[idx] == '1' { '0' } else { '1' };
    built["table"]["bits"] = bits.into_iter().collect::<String>().into();
    fs::write(&table, built.to_string()).unwrap();
    let bad = run(&["verify-oracle", "--config", cfg, "--table", table.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn seed_comes_from_env_and_is_logged() {
    let cfg = configs().join("switch_tiny.json");
    let out = bin().args(["sample", "--config", cfg.to_str().unwrap()]).env("SWITCHLAB_SEED", "77").output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["masterSeed"], 77);
    let flag = run(&["sample", "--config", cfg.to_str().unwrap(), "--seed", "77"]);
    assert_eq!(flag.stdout, out.stdout);
}

#[test]
fn bitmap_and_stage_log_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("oracle_tiny.json");
    let bm = dir.path().join("t.bin");
    let log = dir.path().join("t.jsonl");
    let table = dir.path().join("t.json");
    let out = run(&[
        "build-oracle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
        "--bitmap",
        bm.to_str().unwrap(),
        "--stage-log",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&bm).unwrap().len(), 1024 / 8);
    let side: Value = serde_json::from_slice(&fs::read(dir.path().join("t.bin.json")).unwrap()).unwrap();
    assert_eq!(side["varCount"], 1024);
    assert_eq!(side["masterSeed"], 0);
    let lines = fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), 1024);
    for l in lines.lines() {
        let _: Value = serde_json::from_str(l).unwrap();
    }
}

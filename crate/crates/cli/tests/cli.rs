use std::path::Path;
use std::process::{Command, Output};

use dicat_core::cells::Op;
use dicat_core::findicat::{DicatFile, FinDicat};

fn dicat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dicat")).args(args).output().expect("the binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// ℤ/3 as a one-object category, with `a·a` optionally planted wrong.
fn z3_bundle(aa: &str) -> String {
    let names = ["1", "a", "aa"];
    let mut comp = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let v = if (i, j) == (1, 1) { aa } else { names[(i + j) % 3] };
            comp.push(format!("[\"{}\", \"{}\", \"{v}\"]", names[i], names[j]));
        }
    }
    let mors: Vec<String> = names.iter().map(|n| format!("{{\"id\": \"{n}\", \"src\": \"*\", \"dst\": \"*\"}}")).collect();
    format!(
        "{{\"schema\": \"fincat/v1\", \"categories\": [{{\"name\": \"Z3\", \"objects\": [\"*\"], \"morphisms\": [{}], \"composition\": [{}], \"identities\": {{\"*\": \"1\"}}}}]}}",
        mors.join(", "),
        comp.join(", ")
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn cocycle_checks() {
    let o = dicat(&["check", "--instance", "cocycle", "--group", "z2", "--omega", "nontrivial"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS: 38/38 axioms passed"));
    // each axiom line carries its citation
    assert!(stdout(&o).contains("\"pentagon for the horizontal associator\""));
    let o = dicat(&["check", "--instance", "cocycle", "--tamper", "1,1,1"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("FAIL  D3-17 ")), "{out}");
    assert!(out.contains("[1,1,1,1]"), "{out}");
}

#[test]
fn scrambled_morita_check_passes() {
    let o = dicat(&["check", "--instance", "morita", "--scramble", "--seed", "3", "--tol", "1e-8"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn json_reports_and_axiom_globs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let p = path.to_str().unwrap();
    let o = dicat(&["check", "--instance", "cocycle", "--axioms", "D3-1*,D3-2", "--format", "json", "--report", p]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "pass");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], "report/v1");
    let ids: Vec<&str> = v["axioms"].as_array().unwrap().iter().map(|a| a["id"].as_str().unwrap()).collect();
    assert!(ids.contains(&"D3-2") && ids.contains(&"D3-17") && ids.contains(&"D3-1"));
    assert!(ids.iter().all(|i| *i == "D3-2" || i.starts_with("D3-1")), "{ids:?}");
    let o = dicat(&["check", "--instance", "cocycle", "--axioms", "D9-*"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no axiom matches D9-*"));
}

#[test]
fn reports_are_identical_across_runs_and_thread_counts() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_dicat"))
            .args(["check", "--instance", "cocycle", "--group", "s3", "--omega", "nontrivial", "--format", "json", "--seed", "5"])
            .env("DICAT_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        o.stdout
    };
    assert_eq!(run("1"), run("4"));
    assert_eq!(run("1"), run("1"));
    let o = Command::new(env!("CARGO_BIN_EXE_dicat")).args(["check", "--instance", "cocycle"]).env("DICAT_THREADS", "0").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn mutations() {
    let o = dicat(&["mutate", "--instance", "cocycle", "--group", "z2", "--omega", "nontrivial", "--target", "D2-12"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).lines().next().unwrap().contains("detected by"));
    let o = dicat(&["mutate", "--instance", "morita", "--probes", "small", "--target", "D2-1", "--at", "seeded"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = dicat(&["mutate", "--instance", "cocycle", "--target", "D2-12", "--scale", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("mutation undetected"));
    assert!(stderr(&o).contains("mutation undetected"));
    let o = dicat(&["mutate", "--instance", "cocycle", "--target", "D2-42"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown mutation target D2-42"));
    // i is not a cube root of unity
    let o = dicat(&["mutate", "--instance", "cocycle", "--group", "z3", "--target", "D2-12", "--scale", "0,1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot rescale D2-12"));
    let o = dicat(&["mutate", "--instance", "cocycle", "--group", "z3", "--target", "D2-12", "--scale=-0.5,0.8660254037844386", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], "mutation/v1");
    assert_eq!(v["detected"], true);
}

#[test]
fn validate_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &z3_bundle("aa"));
    let o = dicat(&["validate", &good]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let bad = write(dir.path(), "bad.json", &z3_bundle("1"));
    let o = dicat(&["validate", &bad]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("associativity fails at (a,a,aa)"), "{}", stdout(&o));

    let mut f = DicatFile::from_instance(&FinDicat::trivial());
    let whole = write(dir.path(), "whole.json", &f.to_json());
    assert_eq!(code(&dicat(&["validate", &whole])), 0);
    let o = dicat(&["check", "--file", &whole]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    f.d1.remove(Op::Il.key());
    let missing = write(dir.path(), "missing.json", &f.to_json());
    let o = dicat(&["validate", &missing, "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("missing structure functor i_l"), "{}", stdout(&o));
    let o = dicat(&["check", "--file", &missing]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("axioms skipped"));
}

#[test]
fn malformed_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let junk = write(dir.path(), "junk.json", "{ not json");
    assert_eq!(code(&dicat(&["validate", &junk])), 2);
    let other = write(dir.path(), "other.json", "{\"schema\": \"weird/v3\"}");
    let o = dicat(&["check", "--file", &other]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unsupported schema weird/v3"));
    assert_eq!(code(&dicat(&["validate", "/nonexistent/file.json"])), 2);
    assert_eq!(code(&dicat(&["check", "--instance", "cocycle", "--group", "z7"])), 2);
    assert_eq!(code(&dicat(&["check", "--instance", "cocycle", "--tamper", "0,1,1"])), 2);
    assert_eq!(code(&dicat(&["check", "--instance", "cocycle", "--tamper", "1,1"])), 2);
    assert_eq!(code(&dicat(&["check", "--instance", "morita", "--probes", "huge"])), 2);
    assert_eq!(code(&dicat(&["check", "--tol", "-1"])), 2);
    assert_eq!(code(&dicat(&["check", "--format", "yaml"])), 2);
    assert_eq!(code(&dicat(&["frobnicate"])), 2);
}

#[test]
fn user_files_for_both_instance_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let c = dicat_cocycle::preset("z3", "nontrivial").unwrap();
    let cf = write(dir.path(), "c.json", &dicat_cocycle::CocycleFile::from_instance(&c).to_json());
    assert_eq!(code(&dicat(&["check", "--file", &cf])), 0);
    assert_eq!(code(&dicat(&["check", "--file", &cf, "--tamper", "1,1,1"])), 1);
    assert_eq!(code(&dicat(&["validate", &cf])), 0);
    let m = dicat_morita::MoritaFile::from_probes("small", &dicat_morita::preset_probes("small", 0).unwrap());
    let mf = write(dir.path(), "m.json", &m.to_json());
    let o = dicat(&["check", "--file", &mf, "--probe-cap", "20"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&dicat(&["validate", &mf])), 0);
}

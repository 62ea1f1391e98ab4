//! End-to-end runs of the `hofa` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn hofa(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hofa"));
    cmd.args(args).env_remove("HOFA_THREADS").env_remove("HOFA_BUDGET");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write(dir: &TempDir, name: &str, doc: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_vec(doc).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn diagnostic(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

/// e_3 of x1*x2 + x3^2 over F_3^3, as a field table.
fn quadratic_phase(dir: &TempDir) -> PathBuf {
    let values: Vec<u32> = (0..27u32).map(|i| ((i / 9) * ((i / 3) % 3) + (i % 3) * (i % 3)) % 3).collect();
    write(dir, "quad.json", &json!({"schema_version": "v1", "p": 3, "n": 3, "codomain": "field", "values": values}))
}

fn random_disk(dir: &TempDir, name: &str, p: u32, n: u32) -> PathBuf {
    let size = p.pow(n) as usize;
    let values: Vec<[f64; 2]> = (0..size).map(|i| {
        let t = (i as f64 * 0.7548776662).fract() * std::f64::consts::TAU;
        let r = 0.3 + 0.7 * (i as f64 * 0.5698402910).fract();
        [r * t.cos(), r * t.sin()]
    }).collect();
    write(dir, name, &json!({"schema_version": "v1", "p": p, "n": n, "codomain": "disk", "values": values}))
}

fn system(dir: &TempDir, name: &str, p: u32, k: usize, forms: Value, flag: Option<Value>) -> PathBuf {
    let mut doc = json!({"schema_version": "v1", "p": p, "k": k, "forms": forms});
    if let Some(f) = flag {
        doc["flag"] = f;
    }
    write(dir, name, &doc)
}

#[test]
fn gowers_of_quadratic_phase_is_one() {
    let dir = TempDir::new().unwrap();
    let t = quadratic_phase(&dir);
    let r = report(&hofa(&["gowers", "--table", s(&t), "--k", "3"], &[]));
    assert!((r["result"]["norm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r["schema_version"], "v1");
    assert_eq!(r["mode"]["kind"], "exact");
    assert_eq!(r["tolerance"]["kind"], "roundoff");
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["config"]["seed"], 0);
}

#[test]
fn true_complexity_of_four_term_progression() {
    let dir = TempDir::new().unwrap();
    let sys = system(&dir, "ap4.json", 5, 2, json!([[1, 0], [1, 1], [1, 2], [1, 3]]), None);
    let r = report(&hofa(&["system", "--system", s(&sys), "--true-complexity"], &[]));
    assert_eq!(r["result"]["true_complexity"], 2);
}

#[test]
fn system_report_covers_components_isomorphism_and_products() {
    let dir = TempDir::new().unwrap();
    let ap = system(&dir, "ap.json", 3, 2, json!([[1, 0], [1, 1], [1, 2]]), Some(json!([1, 1])));
    let ap2 = system(&dir, "ap2.json", 3, 2, json!([[1, 0], [1, 2], [1, 1]]), Some(json!([1, 1])));
    let r = report(&hofa(&["system", "--system", s(&ap)], &[]));
    assert_eq!(r["result"]["cs_complexity"]["value"], 1);
    assert_eq!(r["result"]["components"].as_array().unwrap().len(), 1);
    let r = report(&hofa(&["system", "--system", s(&ap), "--isomorphic-to", s(&ap2), "--product-with", s(&ap2)], &[]));
    assert!(r["result"]["isomorphism"].to_string().to_lowercase().contains("isomorphic"));
    assert!(r["result"]["flagged_product"]["forms"].as_array().unwrap().len() >= 3);
    assert_eq!(r["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn malformed_json_exits_65_with_position() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"schema_version\": \"v1\",\n \"p\": 3,,}").unwrap();
    let out = hofa(&["gowers", "--table", s(&path)], &[]);
    assert_eq!(out.status.code(), Some(65));
    let d = diagnostic(&out);
    assert_eq!(d["error"]["kind"], "malformed_input");
    assert!(d["error"]["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn schema_violations_carry_json_pointers() {
    let dir = TempDir::new().unwrap();
    let disk = write(&dir, "d.json", &json!({"schema_version": "v1", "p": 2, "n": 1, "codomain": "disk", "values": [[0.1, 0.0], [1.5, 0.0]]}));
    let out = hofa(&["gowers", "--table", s(&disk)], &[]);
    assert_eq!(out.status.code(), Some(65));
    assert_eq!(diagnostic(&out)["error"]["pointer"], "/values/1");

    let field = write(&dir, "f.json", &json!({"schema_version": "v1", "p": 5, "n": 1, "codomain": "field", "values": [0, 1, 7, 3, 4]}));
    let out = hofa(&["gowers", "--table", s(&field)], &[]);
    assert_eq!(out.status.code(), Some(65));
    assert_eq!(diagnostic(&out)["error"]["pointer"], "/values/2");

    let sys = write(&dir, "s.json", &json!({"schema_version": "v1", "p": 3, "k": "two", "forms": []}));
    let out = hofa(&["system", "--system", s(&sys)], &[]);
    assert_eq!(out.status.code(), Some(65));
    assert_eq!(diagnostic(&out)["error"]["pointer"], "/k");

    let unversioned = write(&dir, "u.json", &json!({"p": 2, "n": 1, "codomain": "disk", "values": [[0, 0], [0, 0]]}));
    let out = hofa(&["gowers", "--table", s(&unversioned)], &[]);
    assert_eq!(diagnostic(&out)["error"]["pointer"], "/schema_version");
}

#[test]
fn unknown_command_exits_64() {
    assert_eq!(hofa(&["frobnicate"], &[]).status.code(), Some(64));
}

#[test]
fn validation_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let dup = system(&dir, "dup.json", 3, 2, json!([[1, 0], [1, 0]]), None);
    let out = hofa(&["system", "--system", s(&dup)], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"]["kind"], "validation");
    assert_eq!(hofa(&["gowers"], &[]).status.code(), Some(2));
    let t = random_disk(&dir, "t.json", 2, 3);
    assert_eq!(hofa(&["gowers", "--table", s(&t), "--k", "0"], &[]).status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_66_unless_mc_given() {
    let dir = TempDir::new().unwrap();
    let t = random_disk(&dir, "t.json", 3, 3);
    let out = hofa(&["gowers", "--table", s(&t), "--k", "3", "--budget", "100"], &[]);
    assert_eq!(out.status.code(), Some(66));
    assert_eq!(diagnostic(&out)["error"]["kind"], "budget_exceeded");
    let out = hofa(&["gowers", "--table", s(&t), "--k", "3"], &[("HOFA_BUDGET", "100")]);
    assert_eq!(out.status.code(), Some(66));

    let exact = report(&hofa(&["gowers", "--table", s(&t), "--k", "3"], &[]));
    let mc = report(&hofa(&["gowers", "--table", s(&t), "--k", "3", "--budget", "100", "--mc", "20000", "--seed", "5"], &[]));
    assert_eq!(mc["mode"]["kind"], "monte_carlo");
    assert_eq!(mc["mode"]["seed"], 5);
    assert_eq!(mc["tolerance"]["kind"], "statistical");
    let half = mc["tolerance"]["half_width"].as_f64().unwrap();
    let diff = (mc["result"]["norm"].as_f64().unwrap() - exact["result"]["norm"].as_f64().unwrap()).abs();
    // The norm is a fourth root of the sampled quantity; allow generous slack.
    assert!(diff < 0.2, "diff {diff}, half width {half}");
    assert_eq!(mc["config"]["budget"], 100);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let t = random_disk(&dir, "t.json", 3, 3);
    let args = ["gowers", "--table", s(&t), "--k", "3", "--budget", "100", "--mc", "5000", "--seed", "11"];
    let a = hofa(&args, &[]);
    let b = hofa(&args, &[]);
    assert_eq!(report(&a)["mode"]["kind"], "monte_carlo");
    assert_eq!(a.stdout, b.stdout);
    let one = hofa(&args, &[("HOFA_THREADS", "1")]);
    let ra: Value = serde_json::from_slice(&a.stdout).unwrap();
    let r1: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_eq!(ra["result"], r1["result"]);
    assert_eq!(r1["config"]["threads"], 1);
}

#[test]
fn out_file_and_csv_format() {
    let dir = TempDir::new().unwrap();
    let t = random_disk(&dir, "t.json", 2, 3);
    let out = dir.path().join("spec.csv");
    let r = hofa(&["fourier", "--table", s(&t), "--format", "csv", "--out", s(&out)], &[]);
    assert_eq!(r.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("index,re,im\n"));
    assert_eq!(text.lines().count(), 9);

    let r = hofa(&["gowers", "--table", s(&t), "--format", "csv"], &[]);
    let text = String::from_utf8(r.stdout).unwrap();
    assert!(text.starts_with("pointer,value\n"));
    assert!(text.contains("/schema_version,v1\n"));
    assert!(text.contains("/result/norm,"));
    assert!(text.contains("/inputs/0/sha256,"));
}

#[test]
fn average_variants() {
    let dir = TempDir::new().unwrap();
    let t = random_disk(&dir, "t.json", 3, 2);
    let ap = system(&dir, "ap.json", 3, 2, json!([[1, 0], [1, 1], [1, 2]]), Some(json!([1, 1])));
    let plain = report(&hofa(&["average", "--system", s(&ap), "--table", s(&t)], &[]));
    assert!(plain["result"]["abs"].as_f64().unwrap() <= 1.0);
    let per = report(&hofa(&["average", "--system", s(&ap), "--per-form", s(&t), s(&t), s(&t)], &[]));
    assert_eq!(plain["result"]["value"], per["result"]["value"]);
    let flagged = report(&hofa(&["average", "--system", s(&ap), "--table", s(&t), "--flagged"], &[]));
    assert_eq!(flagged["result"]["table"]["values"].as_array().unwrap().len(), 9);
    let boundary = report(&hofa(&["average", "--system", s(&ap), "--table", s(&t), "--boundary"], &[]));
    assert_eq!(boundary["result"]["kind"], "boundary_function");
}

#[test]
fn decompose_and_rank() {
    let dir = TempDir::new().unwrap();
    let t = random_disk(&dir, "t.json", 2, 4);
    let r = report(&hofa(&["decompose", "--table", s(&t), "--degree", "2", "--delta", "0.25"], &[]));
    let rep = &r["result"]["report"];
    assert!(rep["flagged"].as_bool().unwrap() || rep["achieved_norm"].as_f64().unwrap() <= 0.25);

    let poly = write(&dir, "q.json", &json!({"schema_version": "v1", "p": 2, "n": 4, "expr": "x1*x2 + x3*x4"}));
    let r = report(&hofa(&["rank", "--poly", s(&poly), "--r-max", "2"], &[]));
    // x1x2 + x3x4 needs all four coordinates: rank > 2 is verified.
    assert_eq!(r["result"]["report"]["rank_kind"], "quadratic-closed-form");
    assert_eq!(r["result"]["report"]["exceeds"], 2);
}

#[test]
fn testers_from_files() {
    let dir = TempDir::new().unwrap();
    let linear: Vec<u32> = (0..64u32).map(|i| ((i >> 5) ^ (i >> 2)) & 1).collect();
    let t = write(&dir, "lin.json", &json!({"schema_version": "v1", "p": 2, "n": 6, "codomain": "field", "values": linear}));
    let r = report(&hofa(&["test", "uniformity", "--table", s(&t), "--degree", "1", "--samples", "2000"], &[]));
    assert!((r["result"]["estimate"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["result"]["queries"], 8000);

    // Accept when f(x) + f(x+y) + f(x+z) + f(x+y+z) = 0.
    let decision: Vec<u8> = (0..16u32).map(|z| u8::from(z.count_ones() % 2 == 0)).collect();
    let tester = write(&dir, "tester.json", &json!({
        "schema_version": "v1", "p": 2,
        "sampler": {"linear_pattern": {"k": 3, "forms": [[1,0,0],[1,1,0],[1,0,1],[1,1,1]]}},
        "decision": decision, "theta_minus": 0.52, "theta_plus": 0.75, "epsilon": 0.5, "delta": 0.2
    }));
    let r = report(&hofa(&["test", "generic", "--tester", s(&tester), "--table", s(&t), "--trials", "1000"], &[]));
    assert_eq!(r["result"]["acceptance"], 1.0);
    let r = report(&hofa(&["test", "generic", "--tester", s(&tester), "--table", s(&t), "--exact"], &[]));
    assert_eq!(r["mode"]["kind"], "exact");
    let r = report(&hofa(&["test", "symmetrize", "--tester", s(&tester), "--table", s(&t), "--trials", "2000"], &[]));
    assert_eq!(r["result"]["within_3_sigma"], true);
    let small: Vec<u32> = (0..16u32).map(|i| (i * 7 / 3) % 2).collect();
    let f = write(&dir, "small.json", &json!({"schema_version": "v1", "p": 2, "n": 4, "codomain": "field", "values": small}));
    let r = report(&hofa(&["test", "profile", "--tester", s(&tester), "--table", s(&f)], &[]));
    assert_eq!(r["result"]["evaluation"]["within_correction"], true);
}

#[test]
fn interior_and_distributional() {
    let dir = TempDir::new().unwrap();
    let ap = system(&dir, "ap.json", 3, 2, json!([[1, 0], [1, 1], [1, 2]]), None);
    let pair = system(&dir, "pair.json", 3, 2, json!([[1, 0], [1, 1]]), None);
    let out = hofa(&["interior", "--system", s(&ap), s(&pair), "--n", "2", "--trials", "5"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&hofa(&["interior", "--system", s(&ap), s(&pair), "--n", "2", "--trials", "5", "--gate", "report"], &[]));
    assert_eq!(r["result"]["hypothesis_violations"].as_array().unwrap().len(), 1);

    let values: Vec<f64> = (0..16).map(|i| (i as f64 * 0.618).fract()).collect();
    let t = write(&dir, "r.json", &json!({"schema_version": "v1", "p": 2, "n": 4, "codomain": "real", "values": values}));
    let schur = system(&dir, "schur.json", 2, 2, json!([[1, 0], [0, 1], [1, 1]]), None);
    let r = report(&hofa(&["distributional", "--table", s(&t), "--system", s(&schur), "--beta", "1,1,1", "--seeds", "20"], &[]));
    assert_eq!(r["result"]["concentration"]["seeds"], 20);
}

use std::process::Command;

fn nestlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nestlab"))
        .args(args)
        .env_remove("NESTLAB_BITS")
        .output()
        .expect("run nestlab")
}

fn json(out: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

const FIB: &str = "-1.8705286321646448888906174192698158530716";

#[test]
fn renormalizable_exits_zero() {
    let out = nestlab(&["nest", "--c", "-1", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["termination"]["reason"], "renormalizable");
    assert!(v["termination"]["level"].as_u64().unwrap() <= 2);
}

#[test]
fn degenerate_exits_zero() {
    let out = nestlab(&["nest", "--c", "-2", "--depth", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["termination"]["reason"], "degenerate");
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(nestlab(&["nest", "--c", "abc"]).status.code(), Some(2));
    assert_eq!(nestlab(&["nest", "--c", "-1.5", "--bits", "8"]).status.code(), Some(2));
    assert_eq!(nestlab(&["locate", "--itinerary", "Q"]).status.code(), Some(2));
    assert_eq!(nestlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn precision_exhaustion_exits_three() {
    // Returns near c = -2 outrun 64 bits within a few levels.
    let out = nestlab(&["nest", "--c", "-1.985", "--depth", "8", "--bits", "64", "--no-suites"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["termination"]["reason"], "precision_exhausted");
}

#[test]
fn fibonacci_report_has_kappa_n() {
    let out = nestlab(&["nest", "--c", FIB, "--depth", "10", "--bits", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 10);
    for (i, l) in levels.iter().enumerate() {
        assert_eq!(l["kappa"].as_u64().unwrap() as usize, i + 1);
    }
    assert!(v["suites"].as_array().unwrap().iter().all(|s| s["pass"] == true));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = nestlab(&["nest", "--c", FIB, "--depth", "8", "--no-timestamp", "-o", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn export_matches_direct_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    nestlab(&["nest", "--c", FIB, "--depth", "6", "-o", report.to_str().unwrap()]);
    let exported = nestlab(&["export", "-i", report.to_str().unwrap()]);
    assert_eq!(exported.status.code(), Some(0));
    let direct = nestlab(&["nest", "--c", FIB, "--depth", "6", "--format", "csv"]);
    assert_eq!(exported.stdout, direct.stdout);
    let text = String::from_utf8(direct.stdout).unwrap();
    assert!(text.starts_with("n,mu,lambda,lambda_star,alpha,K,rho,kappa,in_L,r_n,interval_count,omega_n\n"));
}

#[test]
fn env_sets_precision() {
    let out = Command::new(env!("CARGO_BIN_EXE_nestlab"))
        .args(["nest", "--c", FIB, "--depth", "3", "--no-suites"])
        .env("NESTLAB_BITS", "128")
        .output()
        .unwrap();
    assert_eq!(json(&out)["parameter"]["bits"], 128);
}

#[test]
fn verify_small_geometry_run() {
    let out = nestlab(&["verify", "--suite", "geometry", "--trials", "200", "--seed", "5", "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert!(v.as_array().unwrap().iter().all(|s| s["violations"] == 0));
}

#[test]
fn locate_short_itinerary() {
    let out = nestlab(&["locate", "--itinerary", "C,N", "--digits", "12", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let c: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((-2.0..-0.25).contains(&c));
}

#[test]
fn scan_reports_every_row() {
    let out = nestlab(&["scan", "--steps", "10", "--depth", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    assert_eq!(rows.as_array().unwrap().len(), 10);
}

use kmlift::cli::run_command;
use serde_json::Value;
use std::path::PathBuf;

fn dir(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel).display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("kmlift").chain(args.iter().copied());
    let code = run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn lattice_info_on_u() {
    let v = run_json(&["lattice", "info", &dir("corpus/u.json")]);
    assert_eq!(v["rank"], 2);
    assert_eq!(v["signature"], serde_json::json!([1, 1]));
    assert_eq!(v["discriminant"]["trivial"], true);
}

#[test]
fn usage_errors_exit_two() {
    let u = dir("corpus/u.json");
    assert_eq!(run(&["theta", &u, "--tau", "0,1", "--alpha", "1,0", "--radius", "-1"]).0, 2);
    assert_eq!(run(&["theta", &u, "--tau", "0,-1", "--alpha", "1,0"]).0, 2);
    assert_eq!(run(&["lattice", "info", "/nonexistent.json"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["poly", "--alpha", "1,x"]).0, 2);
}

#[test]
fn weil_residuals_are_small() {
    let v = run_json(&["weil", &dir("corpus/a2_u.json"), "--word", "ST"]);
    for k in ["st_cubed_vs_s_squared", "s_squared_commutes_with_t", "unitarity"] {
        assert!(v["residuals"][k].as_f64().unwrap() < 1e-12, "{k}");
    }
    assert_eq!(v["matrix"].as_array().unwrap().len(), 3);
}

#[test]
fn fourier_and_strip_agree() {
    let l = dir("corpus/a1_u.json");
    let f = dir("data/a1_u_form.json");
    let common = ["--lattice", &l, "--cusp-form", &f, "--alpha", "1,0", "--lambda", "1/2"];
    let mut a: Vec<&str> = vec!["lift", "fourier"];
    a.extend(common);
    let b = run_json(&a);
    a.extend(["--method", "quadrature"]);
    let q = run_json(&a);
    let (vb, vq) = (b["value"][0].as_f64().unwrap(), q["value"][0].as_f64().unwrap());
    assert!(vb.abs() > 1e-4);
    assert!((vb - vq).abs() < 1e-10 * vb.abs());

    let mut s: Vec<&str> = vec!["lift", "verify-strip"];
    s.extend(common);
    let st = run_json(&s);
    assert!(st["residuals"]["difference"].as_f64().unwrap() < 1e-9);
}

#[test]
fn output_is_deterministic() {
    let l = dir("corpus/a1_u.json");
    let f = dir("data/a1_u_form.json");
    let args = ["lift", "fourier", "--lattice", &l, "--cusp-form", &f, "--alpha", "0,1", "--lambda", "1", "--csv"];
    let (c1, o1, _) = run(&args);
    let (c2, o2, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(o1, o2);
    assert!(o1.starts_with("t,h,re,im\n"));
}

#[test]
fn tables_then_eliminate_round_trip() {
    let l = dir("corpus/a1_u.json");
    let f = dir("data/a1_u_form.json");
    let (code, tables, err) = run(&["lift", "tables", "--lattice", &l, "--cusp-form", &f, "--cutoff", "2"]);
    assert_eq!(code, 0, "{err}");
    let path = std::env::temp_dir().join(format!("kmlift_tables_{}.json", std::process::id()));
    std::fs::write(&path, tables).unwrap();
    let v = run_json(&["lift", "eliminate", "--lattice", &l, "--tables", path.to_str().unwrap(), "--cutoff", "2"]);
    std::fs::remove_file(&path).ok();
    let rec = v["recovered"].as_array().unwrap();
    assert_eq!(rec.len(), 2);
    let expect = [("1", 1.0), ("1/4", 0.75)];
    for (n, c) in expect {
        let r = rec.iter().find(|r| r["n"] == n).unwrap();
        assert!((r["c"][0].as_f64().unwrap() - c).abs() < 1e-8);
    }
}

#[test]
fn verify_corpus_passes() {
    let (code, out, err) = run(&["verify", "--corpus", &dir("corpus")]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["failed"], 0);
    let recs = v["records"].as_array().unwrap();
    assert!(recs.len() > 50);
    for r in recs {
        for k in ["criterion", "check", "value", "tolerance", "pass"] {
            assert!(!r[k].is_null(), "{k} missing");
        }
    }
}

#[test]
fn verify_fails_under_impossible_tolerance() {
    let path = std::env::temp_dir().join(format!("kmlift_cfg_{}.json", std::process::id()));
    let (_, out, _) = run(&["verify", "--corpus", &dir("corpus"), "--criterion", "5"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let mut cfg = v["config"].clone();
    for t in cfg["tolerances"].as_object_mut().unwrap().values_mut() {
        *t = serde_json::json!(1e-300);
    }
    std::fs::write(&path, cfg.to_string()).unwrap();
    let (code, _, _) = run(&["verify", "--corpus", &dir("corpus"), "--criterion", "5", "--config", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(code, 1);
}

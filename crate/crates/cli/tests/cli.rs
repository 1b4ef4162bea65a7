use std::path::Path;
use std::process::Command;

use qflow_cli::document::decode_document;

fn qflow(args: &[&str], cache: Option<&Path>) -> (i32, String, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qflow"));
    cmd.args(args).env_remove("QFLOW_CACHE");
    if let Some(c) = cache {
        cmd.env("QFLOW_CACHE", c);
    }
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn params_document() {
    let (code, out, _) = qflow(&["params", "--n", "5"], None);
    assert_eq!(code, 0);
    let doc = decode_document(&out).unwrap();
    assert_eq!(doc.schema, "qflow/params/v1");
    assert_eq!(doc.data["a"], 6.5);
    let (code, out, err) = qflow(&["params", "--n", "4"], None);
    assert_eq!((code, out.as_str()), (2, ""));
    assert!(err.contains("n must be ≥ 5"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["delaunay", "--n", "5", "--eps", "0.9"][..],
        &["delaunay", "--n", "5"],
        &["glue", "--eps", "0.3,0.2"],
        &["sweep", "--eps", "0.3,,0.2", "--what", "glue"],
        &["frobnicate"],
        &[],
        &["modesolve", "--n", "5", "--eps", "0.2", "--delta", "3.0"],
    ] {
        assert_eq!(qflow(args, None).0, 2, "{args:?}");
    }
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope").join("t.csv");
    let (code, _, _) = qflow(&["delaunay", "--n", "5", "--eps", "0.2", "--trajectory", missing.to_str().unwrap()], None);
    assert_eq!(code, 4);
    let (code, _, _) = qflow(&["params", "--config", dir.path().join("absent.toml").to_str().unwrap()], None);
    assert_eq!(code, 4);
}

#[test]
fn delaunay_cache_hit_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let args = ["delaunay", "--n", "5", "--eps", "0.2", "--check"];
    let (c1, first, _) = qflow(&args, Some(&cache));
    let (c2, second, _) = qflow(&args, Some(&cache));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(first, second);
    // one miss, one hit: a single appended record
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 1);
    let doc = decode_document(&first).unwrap();
    assert_eq!(doc.data["verification"]["all_pass"], true);
    // and the uncached run agrees
    assert_eq!(qflow(&args, None).1, first);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "n = 6\neps = 0.3\n[schedule]\nb = 0.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (code, out, _) = qflow(&["params", "--config", c], None);
    assert_eq!(code, 0);
    assert_eq!(decode_document(&out).unwrap().data["n"], 6);
    let (_, out, _) = qflow(&["params", "--config", c, "--n", "8"], None);
    assert_eq!(decode_document(&out).unwrap().data["n"], 8);
    std::fs::write(&cfg, "n = 6\nbogus = 1\n").unwrap();
    assert_eq!(qflow(&["params", "--config", c], None).0, 2);
}

#[test]
fn explain_lists_defaults() {
    let (code, out, _) = qflow(&["--explain"], None);
    assert_eq!(code, 0);
    for key in ["n = 5", "step", "tol", "l_max", "delta0", "delta1", "delta2", "m = 0.04", "QFLOW_CACHE"] {
        assert!(out.contains(key), "{key}");
    }
}

#[test]
fn n2n_determinants() {
    let (code, out, _) = qflow(&["n2n", "--n", "5", "--lmax", "10"], None);
    assert_eq!(code, 0);
    let doc = decode_document(&out).unwrap();
    let rows = doc.data["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let l = row["l"].as_f64().unwrap();
        let det = row["det"].as_f64().unwrap();
        assert!((det - (2.0 * l + 3.0).powi(2)).abs() < 1e-12 * det);
    }
}

#[test]
fn modes_and_modesolve() {
    let (code, out, _) = qflow(&["modes", "--n", "5", "--lmax", "3"], None);
    assert_eq!(code, 0);
    let doc = decode_document(&out).unwrap();
    assert_eq!(doc.data["rows"][2]["mu_plus"], 4.5);
    assert_eq!(doc.data["rows"][0]["D_l"], -2.0);

    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("w.csv");
    let (code, out, _) =
        qflow(&["modesolve", "--n", "5", "--eps", "0.3", "--t-end", "10", "--profile", prof.to_str().unwrap()], None);
    assert_eq!(code, 0);
    let ratio = decode_document(&out).unwrap().data["ratio"].as_f64().unwrap();
    assert!((ratio / qflow_core::cylinder::HIGH_MODE_RATIO_PIN - 1.0).abs() < 0.01, "{ratio}");
    let csv = std::fs::read_to_string(prof).unwrap();
    assert!(csv.starts_with("t,f,w\n"));
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn glue_manifest_norms() {
    let (code, out, _) = qflow(&["glue", "--n", "5", "--eps", "0.2"], None);
    assert_eq!(code, 0);
    let doc = decode_document(&out).unwrap();
    assert_eq!(doc.schema, "qflow/glue/v1");
    let norms = doc.data["mismatch_after"].as_array().unwrap();
    assert_eq!(norms.len(), 4);
    assert!(norms.iter().all(|v| v.as_f64().unwrap() < 1e-8));
    assert!(doc.data["pde_residual"].as_f64().unwrap() > 0.0);
}

#[test]
fn glue_sweep_csv() {
    let (code, out, _) = qflow(&["sweep", "--n", "5", "--eps", "0.3,0.2,0.1,0.05", "--what", "glue"], None);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_reader(out.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let (mm, pde, eps) = (col("mismatch_max"), col("pde_residual"), col("eps"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let get = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    assert_eq!(rows.iter().map(|r| get(r, eps)).collect::<Vec<_>>(), vec![0.3, 0.2, 0.1, 0.05]);
    for r in &rows {
        assert!(get(r, mm) < 1e-8);
    }
    for w in rows.windows(2) {
        assert!(get(&w[1], pde) < get(&w[0], pde));
    }
}

#[test]
fn out_dir_receives_the_document() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = qflow(&["params", "--n", "6", "--out-dir", dir.path().to_str().unwrap()], None);
    assert_eq!(code, 0);
    let path = dir.path().join("params.json");
    assert_eq!(out.trim(), path.display().to_string());
    decode_document(&std::fs::read_to_string(path).unwrap()).unwrap();
}

#[test]
fn verify_rejects_other_schema_versions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("old.json");
    std::fs::write(&bad, r#"{"schema":"qflow/params/v0","data":{}}"#).unwrap();
    let (code, _, err) = qflow(&["verify", "--input", bad.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(err.contains("version 0"), "{err}");
}

//! Replays the fuzz seeds through the same invariants the fuzz targets check.

use std::path::PathBuf;

use qflow_cli::cache::{decode_line, encode_line};
use qflow_cli::config::parse_config;
use qflow_cli::document::{decode_document, parse_schema};
use qflow_cli::grid::parse_eps_grid;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn cache_line_seeds() {
    for (name, text) in seeds("cache_line") {
        let ok = match decode_line(&text) {
            Ok(rec) => {
                let line = encode_line(&rec);
                assert_eq!(encode_line(&decode_line(line.trim_end()).unwrap()), line);
                true
            }
            Err(_) => false,
        };
        assert_eq!(ok, name.starts_with('n'), "{name}");
    }
}

#[test]
fn config_seeds() {
    for (name, text) in seeds("config") {
        assert_eq!(parse_config(&text).is_ok(), name != "unknown_key", "{name}");
    }
}

#[test]
fn document_seeds() {
    for (name, text) in seeds("document") {
        let res = decode_document(&text);
        if let Ok(doc) = &res {
            assert!(parse_schema(&doc.schema).is_ok());
        }
        assert_eq!(res.is_ok(), !["foreign", "future_version"].contains(&name.as_str()), "{name}");
    }
}

#[test]
fn eps_grid_seeds() {
    for (name, text) in seeds("eps_grid") {
        let res = parse_eps_grid(&text);
        if let Ok(grid) = &res {
            assert!(!grid.is_empty() && grid.iter().all(|e| e.is_finite() && *e > 0.0));
        }
        assert_eq!(res.is_ok(), ["standard", "spaces"].contains(&name.as_str()), "{name}");
    }
}

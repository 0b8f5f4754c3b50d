//! Replays the checked-in fuzz seeds through the same round-trip checks the
//! fuzz targets make.

use std::fs;
use std::path::PathBuf;

use ptkho::cli::{parse_config, parse_snapshot, parse_time_series, render_time_series, FitSpec};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = String::from_utf8_lossy(&fs::read(&p).unwrap()).into_owned();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds_round_trip() {
    let mut accepted = 0;
    for (path, text) in seeds("parse_config") {
        if let Ok(config) = parse_config(&text) {
            assert_eq!(parse_config(&config.render()).unwrap(), config, "{}", path.display());
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn time_series_seeds_round_trip() {
    for (path, text) in seeds("parse_time_series") {
        let records = parse_time_series(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let rendered = render_time_series(&records);
        assert_eq!(render_time_series(&parse_time_series(&rendered).unwrap()), rendered);
    }
}

#[test]
fn fit_spec_seeds_round_trip() {
    for (path, text) in seeds("parse_fit_spec") {
        let spec: FitSpec = text.parse().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(spec.to_string().parse::<FitSpec>().unwrap(), spec);
    }
}

#[test]
fn snapshot_seeds_parse() {
    for (path, text) in seeds("parse_snapshot") {
        let (_, rows) = parse_snapshot(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(rows.len(), 3);
    }
}

//! Helpers shared by the integration tests: fixture loading, a reference
//! diagram interpreter, formula oracles and diagram generators.
#![allow(dead_code)]

pub mod gen;
pub mod interp;
pub mod oracle;

use std::path::PathBuf;

use rcrskit::diagram::{load, Diagram, LoadOptions};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> Diagram {
    load(fixture_path(name), &LoadOptions::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every fixture file, by stem, in name order.
pub fn corpus_names() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "json").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

pub fn corpus() -> Vec<(String, Diagram)> {
    corpus_names().into_iter().map(|n| (n.clone(), fixture(&n))).collect()
}

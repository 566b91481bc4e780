#![allow(dead_code)]

use std::path::PathBuf;

use lcs_core::graph::{MixedGraph, NodeSet};
use lcs_core::projection::latent_project;

pub fn fixture(name: &str) -> MixedGraph {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    MixedGraph::from_json_str(&text).unwrap()
}

/// DAG fixture projected over the given latent labels.
pub fn projected(name: &str, latents: &[&str]) -> MixedGraph {
    let dag = fixture(name);
    let lat: NodeSet = dag.indices_of(latents).unwrap();
    latent_project(&dag, &lat).unwrap()
}

pub fn two_paths() -> MixedGraph {
    projected("two_paths_dag.json", &[])
}

pub fn collider_child() -> MixedGraph {
    projected("collider_child_dag.json", &[])
}

pub fn hidden_cause() -> MixedGraph {
    projected("hidden_cause_dag.json", &["L"])
}

pub fn mildew() -> MixedGraph {
    projected("mildew_dag.json", &["meldug_3", "temp_2"])
}

pub fn set(g: &MixedGraph, labels: &[&str]) -> NodeSet {
    g.indices_of(labels).unwrap()
}

pub fn names(g: &MixedGraph, s: &NodeSet) -> Vec<String> {
    let mut v = g.labels_of(s);
    v.sort();
    v
}

pub fn sorted(xs: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

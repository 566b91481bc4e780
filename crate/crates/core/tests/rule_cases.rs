mod common;

use common::*;
use lcs_core::adjustment::{
    brute_force_adjustment_search, gac_satisfied, gac_satisfied_backdoor, lcs, rule_r2, LcsConfig, LcsRun, Rule,
    Verdict,
};
use lcs_core::graph::MixedGraph;
use lcs_core::independence::CiEngine;
use lcs_core::local::{learn_local_pag, LearnerConfig};
use lcs_core::projection::mag_to_pag;
use lcs_core::NodeSet;

fn run(g: &MixedGraph, x: &str, y: &str) -> LcsRun {
    let mut e = CiEngine::oracle(g.clone()).unwrap().with_cache();
    let all: NodeSet = (0..g.n()).collect();
    lcs(&mut e, g.index_of(x).unwrap(), g.index_of(y).unwrap(), &all, &LcsConfig::default(), None).unwrap()
}

fn witness(g: &MixedGraph, r: &LcsRun) -> (Option<String>, Vec<String>) {
    let w = r.outcome.witness.as_ref().expect("a rule fired");
    (w.s.map(|s| g.label(s).to_string()), names(g, &w.z))
}

#[test]
fn two_paths_adjustment_is_valid() {
    let g = two_paths();
    let r = run(&g, "X", "Y");
    let Verdict::IdentifiableNonZero { adjustment, .. } = &r.outcome.verdict else { panic!("{:?}", r.outcome) };
    let pag = mag_to_pag(&g).unwrap();
    let (x, y) = (g.index_of("X").unwrap(), g.index_of("Y").unwrap());
    assert!(gac_satisfied(&pag, x, y, adjustment).unwrap());
    assert!(gac_satisfied_backdoor(&g, x, y, adjustment).unwrap());
    assert!(brute_force_adjustment_search(&pag, x, y).unwrap().contains(&set(&g, &["V5"])));
    assert_eq!(witness(&g, &r).1, sorted(&["V5"]));
}

#[test]
fn collider_child_r2_returns_parent() {
    let g = collider_child();
    let mut e = CiEngine::oracle(g.clone()).unwrap().with_cache();
    let all: NodeSet = (0..g.n()).collect();
    let (ls, _) = learn_local_pag(&mut e, g.index_of("X").unwrap(), &all, &LearnerConfig::default()).unwrap();
    let w = rule_r2(&mut e, &ls, g.index_of("Y").unwrap()).unwrap().expect("R2 applies");
    assert_eq!(names(&g, &w.z), sorted(&["V3"]));
}

#[test]
fn collider_child_r1_already_fires_with_empty_set() {
    // V3 -> X -> Y with V3 independent of Y given X: R1 holds for S = V3, Z = {}.
    let g = collider_child();
    let r = run(&g, "X", "Y");
    assert_eq!(r.outcome.rule, Rule::R1);
    assert_eq!(witness(&g, &r), (Some("V3".into()), vec![]));
    let pag = mag_to_pag(&g).unwrap();
    let (x, y) = (g.index_of("X").unwrap(), g.index_of("Y").unwrap());
    assert!(gac_satisfied(&pag, x, y, &NodeSet::new()).unwrap());
}

#[test]
fn hidden_cause_zero_effects() {
    let g = hidden_cause();
    let a = run(&g, "V2", "V4");
    assert_eq!((a.outcome.rule, &a.outcome.verdict), (Rule::R3a, &Verdict::Zero));
    assert_eq!(witness(&g, &a), (None, vec![]));
    let b = run(&g, "V2", "V3");
    assert_eq!((b.outcome.rule, &b.outcome.verdict), (Rule::R3b, &Verdict::Zero));
    assert_eq!(witness(&g, &b), (Some("V1".into()), vec![]));
}

#[test]
fn mildew_foto_4_on_dm_4() {
    let g = mildew();
    let r = run(&g, "foto_4", "dm_4");
    assert_eq!(r.outcome.rule, Rule::R1);
    assert_eq!(witness(&g, &r).1, sorted(&["lai_4"]));
}

#[test]
fn mildew_dm_2_on_dm_4() {
    let g = mildew();
    let r = run(&g, "dm_2", "dm_4");
    assert_eq!(r.outcome.rule, Rule::R2);
    assert_eq!(witness(&g, &r), (None, sorted(&["dm_1", "foto_2"])));
}

#[test]
fn mildew_lai_3_on_straaling_4() {
    let g = mildew();
    let r = run(&g, "lai_3", "straaling_4");
    assert_eq!(r.outcome.verdict, Verdict::Zero);
    assert_eq!(r.outcome.rule, Rule::R3a);
}

#[test]
fn mildew_foto_2_on_mikro_2() {
    let g = mildew();
    let r = run(&g, "foto_2", "mikro_2");
    assert_eq!(r.outcome.verdict, Verdict::Zero);
    assert_eq!(witness(&g, &r), (Some("straaling_2".into()), vec![]));
}

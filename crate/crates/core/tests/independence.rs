mod common;

use common::*;
use lcs_core::adjustment::{lcs, LcsConfig};
use lcs_core::estimate::ScmSpec;
use lcs_core::graph::MixedGraph;
use lcs_core::independence::CiEngine;
use lcs_core::local::LogEvent;
use lcs_core::simbench::sample;
use lcs_core::NodeSet;

#[test]
fn hidden_cause_marginal_independence() {
    let g = hidden_cause();
    let mut e = CiEngine::oracle(g.clone()).unwrap();
    assert!(e.is_independent(g.index_of("V2").unwrap(), g.index_of("V4").unwrap(), &NodeSet::new()).unwrap());
}

#[test]
fn fisher_z_null_rejects_near_alpha() {
    let dag = MixedGraph::dag_from_labels(&["A", "B"], &[]).unwrap();
    let scm = ScmSpec::unit(dag).unwrap();
    let runs = 400;
    let accepted = (0..runs)
        .filter(|&s| {
            let d = sample(&scm, 10_000, s).unwrap();
            CiEngine::fisher_z(&d, 0.05).unwrap().is_independent(0, 1, &NodeSet::new()).unwrap()
        })
        .count();
    // Binomial(400, 0.95) has sd about 4.4; allow four of them.
    assert!((362..=398).contains(&accepted), "{accepted}/{runs}");
}

#[test]
fn fisher_z_detects_unit_edge() {
    let dag = MixedGraph::dag_from_labels(&["X", "Y"], &[("X", "Y")]).unwrap();
    let d = sample(&ScmSpec::unit(dag).unwrap(), 10_000, 3).unwrap();
    assert!(!CiEngine::fisher_z(&d, 0.05).unwrap().is_independent(0, 1, &NodeSet::new()).unwrap());
}

#[test]
fn counter_equals_logged_queries() {
    let g = two_paths();
    let mut e = CiEngine::oracle(g.clone()).unwrap().with_cache().with_log();
    let all: NodeSet = (0..g.n()).collect();
    let run = lcs(&mut e, g.index_of("X").unwrap(), g.index_of("Y").unwrap(), &all, &LcsConfig::default(), None).unwrap();
    assert_eq!(run.outcome.n_tests, e.test_count());
    // The learner moves its queries into the run log; the rules leave theirs
    // in the engine.
    let learner = run.log.events.iter().filter(|ev| matches!(ev, LogEvent::Query(_))).count();
    assert_eq!((learner + e.take_log().len()) as u64, run.outcome.n_tests);
}

//! DAG with latents to MAG, MAG to PAG, and visibility of directed edges.

use std::collections::BTreeMap;

use crate::error::{LcsError, Result};
use crate::graph::{Edge, GraphKind, Mark, MixedGraph, NodeSet};
use crate::orient::Orienter;

/// Exhaustive subset searches stop above this many candidate nodes.
const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdjacencyTest {
    /// Separation by the observed ancestors of the pair (exact, polynomial).
    #[default]
    AncestralSet,
    /// Search every subset of the other observed nodes.
    Exhaustive,
}

/// Marginalizes `latents` out of `dag`.
pub fn latent_project(dag: &MixedGraph, latents: &NodeSet) -> Result<MixedGraph> {
    latent_project_with(dag, latents, AdjacencyTest::AncestralSet)
}

pub fn latent_project_with(dag: &MixedGraph, latents: &NodeSet, method: AdjacencyTest) -> Result<MixedGraph> {
    if dag.kind() != GraphKind::Dag {
        return Err(LcsError::WrongKind { expected: "dag".into(), found: dag.kind().to_string() });
    }
    let report = dag.validate();
    if !report.is_valid() {
        return Err(LcsError::InvalidGraph(report.violations[0].to_string()));
    }
    for &l in latents {
        dag.check(l)?;
    }
    let observed: Vec<usize> = (0..dag.n()).filter(|v| !latents.contains(v)).collect();
    if observed.is_empty() {
        return Err(LcsError::InvalidArguments("every node is latent".into()));
    }
    if method == AdjacencyTest::Exhaustive && observed.len() > EXHAUSTIVE_LIMIT + 2 {
        return Err(LcsError::SizeGuard(format!("{} observed nodes for exhaustive projection", observed.len())));
    }
    let anc: Vec<NodeSet> = (0..dag.n()).map(|v| dag.ancestors(v).expect("in range")).collect();
    let labels: Vec<String> = observed.iter().map(|&v| dag.label(v).to_string()).collect();
    let mut edges = Vec::new();
    for (i, &a) in observed.iter().enumerate() {
        for (j, &b) in observed.iter().enumerate().skip(i + 1) {
            let adjacent = match method {
                AdjacencyTest::AncestralSet => {
                    let z: NodeSet = anc[a]
                        .union(&anc[b])
                        .copied()
                        .filter(|v| *v != a && *v != b && !latents.contains(v))
                        .collect();
                    !dag.m_separated(a, b, &z)?
                }
                AdjacencyTest::Exhaustive => {
                    let rest: Vec<usize> = observed.iter().copied().filter(|&v| v != a && v != b).collect();
                    !any_subset_separates(dag, a, b, &rest)
                }
            };
            if adjacent {
                let edge = if anc[b].contains(&a) {
                    Edge::directed(i, j)
                } else if anc[a].contains(&b) {
                    Edge::directed(j, i)
                } else {
                    Edge::bidirected(i, j)
                };
                edges.push(edge);
            }
        }
    }
    MixedGraph::from_edges(GraphKind::Mag, &labels, &edges)
}

fn any_subset_separates(g: &MixedGraph, a: usize, b: usize, pool: &[usize]) -> bool {
    let mut mask = vec![false; g.n()];
    for bits in 0u64..(1u64 << pool.len()) {
        for (k, &v) in pool.iter().enumerate() {
            mask[v] = bits >> k & 1 == 1;
        }
        if !g.m_connected_mask(a, b, &mask) {
            return true;
        }
    }
    false
}

/// A set m-separating the non-adjacent pair `a`, `b` in a DAG or MAG.
///
/// Tries the ancestors of the pair first, which suffices in any maximal
/// ancestral graph, then falls back to exhaustive search when the graph is
/// small enough.
pub fn find_sepset(g: &MixedGraph, a: usize, b: usize) -> Option<NodeSet> {
    let mut seeds = NodeSet::new();
    seeds.insert(a);
    seeds.insert(b);
    let mut z = g.ancestors_of_set(&seeds);
    z.remove(&a);
    z.remove(&b);
    let mut mask = vec![false; g.n()];
    for &v in &z {
        mask[v] = true;
    }
    if !g.m_connected_mask(a, b, &mask) {
        return Some(z);
    }
    let pool: Vec<usize> = (0..g.n()).filter(|&v| v != a && v != b).collect();
    if pool.len() > EXHAUSTIVE_LIMIT {
        return None;
    }
    for bits in 0u64..(1u64 << pool.len()) {
        for (k, &v) in pool.iter().enumerate() {
            mask[v] = bits >> k & 1 == 1;
        }
        if !g.m_connected_mask(a, b, &mask) {
            return Some(pool.iter().enumerate().filter(|(k, _)| bits >> k & 1 == 1).map(|(_, &v)| v).collect());
        }
    }
    None
}

/// The PAG of the Markov equivalence class of `mag`.
pub fn mag_to_pag(mag: &MixedGraph) -> Result<MixedGraph> {
    if mag.kind() != GraphKind::Mag {
        return Err(LcsError::WrongKind { expected: "mag".into(), found: mag.kind().to_string() });
    }
    let report = mag.validate();
    if !report.is_valid() {
        return Err(LcsError::InvalidGraph(report.violations[0].to_string()));
    }
    let n = mag.n();
    let mut o = Orienter::new(mag.labels().to_vec());
    for e in mag.edges() {
        o.add_circle_edge(e.a, e.b);
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if !mag.adjacent(a, b) {
                let s = find_sepset(mag, a, b).expect("validated MAG is maximal");
                o.certify_nonadjacent(a, b, s);
            }
        }
    }
    o.orient_all();
    debug_assert!(o.conflicts.is_empty());
    Ok(o.to_graph())
}

/// Whether the directed edge `x -> y` is visible.
///
/// Visible means some `s` not adjacent to `y` either has an edge into `x`, or
/// reaches `x` through a collider path into `x` whose interior vertices are
/// all parents of `y`. Every directed edge of a DAG is visible.
pub fn is_visible(g: &MixedGraph, x: usize, y: usize) -> bool {
    if g.kind() == GraphKind::Dag {
        return g.is_directed(x, y);
    }
    is_visible_with(g, x, y, |a, b| !g.adjacent(a, b))
}

/// [`is_visible`] with an explicit non-adjacency predicate, for graphs where
/// a missing edge does not imply a certified non-adjacency.
pub fn is_visible_with<F: Fn(usize, usize) -> bool>(g: &MixedGraph, x: usize, y: usize, nonadjacent: F) -> bool {
    if !g.is_directed(x, y) {
        return false;
    }
    let candidate = |s: usize| s != x && s != y && nonadjacent(s, y);
    let mut seen = vec![false; g.n()];
    seen[x] = true;
    let mut stack = Vec::new();
    for &v in g.neighbors(x) {
        if g.endpoint(v, x) != Some(Mark::Arrow) {
            continue;
        }
        if candidate(v) {
            return true;
        }
        // v continues the path only as a collider that is a parent of y
        if g.endpoint(x, v) == Some(Mark::Arrow) && g.is_directed(v, y) {
            seen[v] = true;
            stack.push(v);
        }
    }
    while let Some(v) = stack.pop() {
        for &w in g.neighbors(v) {
            if seen[w] || g.endpoint(w, v) != Some(Mark::Arrow) {
                continue;
            }
            if candidate(w) {
                return true;
            }
            if g.endpoint(v, w) == Some(Mark::Arrow) && g.is_directed(w, y) {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Visibility of every directed edge, keyed by `(tail, head)`.
pub fn visible_edges(g: &MixedGraph) -> BTreeMap<(usize, usize), bool> {
    let mut out = BTreeMap::new();
    for e in g.edges() {
        let (from, to) = match (e.mark_a, e.mark_b) {
            (Mark::Tail, Mark::Arrow) => (e.a, e.b),
            (Mark::Arrow, Mark::Tail) => (e.b, e.a),
            _ => continue,
        };
        out.insert((from, to), is_visible(g, from, to));
    }
    out
}

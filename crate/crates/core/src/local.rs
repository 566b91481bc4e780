//! Markov-blanket discovery and local PAG learning around a target.
//!
//! The learner processes one variable at a time. For a variable `v` it finds
//! the Markov blanket by total conditioning and settles every adjacency of `v`
//! exactly (a blanket member is separable from `v` iff some subset of the rest
//! of either blanket separates them). Non-adjacencies among the neighbours of
//! `v` are searched to a bounded depth, and arrowheads already certified by
//! the tests are oriented.
//! Rules then run on the certified knowledge only, so every tail or arrow it
//! produces agrees with the global PAG under an oracle.
//!
//! Variable order is the engine's column order throughout.

use std::collections::{BTreeMap, VecDeque};

use itertools::Itertools;
use serde::Serialize;

use crate::error::{LcsError, Result};
use crate::graph::{Mark, MixedGraph, NodeSet};
use crate::independence::{CiEngine, CiRecord};
use crate::orient::{Conflict, Firing, Orienter};

#[derive(Debug, Clone)]
pub struct LearnerConfig {
    /// Largest separating set tried. `None` searches every size.
    pub max_sepset_size: Option<usize>,
    /// Largest separating set tried for pairs of neighbours of the node being
    /// processed.
    pub pair_depth: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { max_sepset_size: None, pair_depth: 3 }
    }
}

/// Blanket of `x`: every `v` still dependent on `x` given all other observed
/// variables. One query per candidate.
pub fn total_conditioning_mb(engine: &mut CiEngine, x: usize, observed: &NodeSet) -> Result<NodeSet> {
    if !observed.contains(&x) {
        return Err(LcsError::InvalidArguments(format!("target {x} is not observed")));
    }
    if observed.len() < 2 {
        return Err(LcsError::InvalidArguments("need at least two observed variables".into()));
    }
    let mut mb = NodeSet::new();
    for &v in observed {
        if v == x {
            continue;
        }
        let mut rest = observed.clone();
        rest.remove(&x);
        rest.remove(&v);
        if !engine.is_independent(x, v, &rest)? {
            mb.insert(v);
        }
    }
    Ok(mb)
}

#[derive(Debug, Clone)]
pub struct LearnerState {
    pub center: usize,
    pub waitlist: VecDeque<usize>,
    pub done: NodeSet,
    pub knowledge: Orienter,
    pub blankets: BTreeMap<usize, NodeSet>,
}

impl LearnerState {
    pub fn new(center: usize, labels: Vec<String>) -> Self {
        LearnerState {
            center,
            waitlist: VecDeque::from([center]),
            done: NodeSet::new(),
            knowledge: Orienter::new(labels),
            blankets: BTreeMap::new(),
        }
    }

    fn mb_plus(&self) -> Option<NodeSet> {
        self.blankets.get(&self.center).map(|mb| {
            let mut s = mb.clone();
            s.insert(self.center);
            s
        })
    }

    /// Unprocessed nodes reached from an undetermined edge inside `mb_plus`
    /// along edges that carry no arrowhead; an arrowhead blocks the path.
    fn circle_reachable_unprocessed(&self, mb_plus: &NodeSet) -> Vec<usize> {
        let k = &self.knowledge;
        let circled = |u: usize, w: usize| k.endpoint(u, w) == Some(Mark::Circle) || k.endpoint(w, u) == Some(Mark::Circle);
        let open = |u: usize, w: usize| k.endpoint(u, w) != Some(Mark::Arrow) && k.endpoint(w, u) != Some(Mark::Arrow);
        let mut seen = NodeSet::new();
        let mut queue = VecDeque::new();
        for &u in mb_plus {
            if k.neighbors(u).any(|w| mb_plus.contains(&w) && circled(u, w)) && seen.insert(u) {
                queue.push_back(u);
            }
        }
        let mut out = Vec::new();
        while let Some(u) = queue.pop_front() {
            for w in k.neighbors(u) {
                if open(u, w) && seen.insert(w) {
                    if !self.done.contains(&w) {
                        out.push(w);
                    }
                    queue.push_back(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn refresh_waitlist(&mut self) {
        let Some(mb_plus) = self.mb_plus() else { return };
        let mut wanted: Vec<usize> = mb_plus.iter().copied().filter(|v| !self.done.contains(v)).collect();
        for v in self.circle_reachable_unprocessed(&mb_plus) {
            if !wanted.contains(&v) {
                wanted.push(v);
            }
        }
        let mut next: VecDeque<usize> = self.waitlist.iter().copied().filter(|v| wanted.contains(v)).collect();
        for v in wanted {
            if !next.contains(&v) {
                next.push_back(v);
            }
        }
        self.waitlist = next;
    }
}

/// Stop conditions for the waitlist loop:
/// (a) `MB+(x)` is fully processed and no edge inside it carries a circle;
/// (b) the waitlist is empty;
/// (c) `MB+(x)` is fully processed and every arrowhead-free path that starts
///     on an undetermined edge inside it ends before an unprocessed node.
pub fn stop_rules_met(state: &LearnerState, x: usize) -> bool {
    if state.waitlist.is_empty() {
        return true;
    }
    let Some(mb) = state.blankets.get(&x) else { return false };
    let mut mb_plus = mb.clone();
    mb_plus.insert(x);
    if !mb_plus.iter().all(|v| state.done.contains(v)) {
        return false;
    }
    let k = &state.knowledge;
    let no_circles = mb_plus.iter().all(|&u| {
        mb_plus.iter().all(|&w| u == w || !k.adjacent(u, w) || k.endpoint(u, w) != Some(Mark::Circle))
    });
    no_circles || state.circle_reachable_unprocessed(&mb_plus).is_empty()
}

/// Learned neighbourhood of a target together with the sets the
/// identification rules read.
#[derive(Debug, Clone)]
pub struct LocalStructure {
    pub center: usize,
    pub fragment: MixedGraph,
    pub mb: NodeSet,
    pub pa: NodeSet,
    pub ch: NodeSet,
    pub ncpa: NodeSet,
    pub pa_star: NodeSet,
    pub poss_de: NodeSet,
    pub processed: Vec<usize>,
    pub blankets: BTreeMap<usize, NodeSet>,
    pub knowledge: Orienter,
}

impl LocalStructure {
    /// Certified non-adjacency in the learned knowledge.
    pub fn nonadjacent(&self, a: usize, b: usize) -> bool {
        self.knowledge.nonadjacent(a, b)
    }

    /// Fragment restricted to nodes touching a learned edge plus the center.
    pub fn fragment_region(&self) -> MixedGraph {
        let mut keep: NodeSet = self.processed.iter().copied().collect();
        keep.insert(self.center);
        for e in self.fragment.edges() {
            keep.insert(e.a);
            keep.insert(e.b);
        }
        self.fragment.induced_subgraph(&keep)
    }
}

/// Audit trail of one learner run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LearnerLog {
    pub events: Vec<LogEvent>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Process { node: String, blanket: Vec<String> },
    Query(CiRecord),
    Orient(Firing),
    Conflict(Conflict),
}

fn subsets_by_size(pool: &[usize], max: usize) -> impl Iterator<Item = NodeSet> + '_ {
    (0..=max.min(pool.len())).flat_map(move |k| pool.iter().copied().combinations(k).map(|c| c.into_iter().collect()))
}

fn search_sepset(engine: &mut CiEngine, a: usize, b: usize, pool: &[usize], max: usize) -> Result<Option<NodeSet>> {
    for s in subsets_by_size(pool, max) {
        if engine.is_independent(a, b, &s)? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

fn blanket(
    engine: &mut CiEngine,
    blankets: &mut BTreeMap<usize, NodeSet>,
    v: usize,
    observed: &NodeSet,
) -> Result<NodeSet> {
    if let Some(mb) = blankets.get(&v) {
        return Ok(mb.clone());
    }
    let mb = total_conditioning_mb(engine, v, observed)?;
    blankets.insert(v, mb.clone());
    Ok(mb)
}

/// Learns the PAG around `x`.
pub fn learn_local_pag(
    engine: &mut CiEngine,
    x: usize,
    observed: &NodeSet,
    config: &LearnerConfig,
) -> Result<(LocalStructure, LearnerLog)> {
    if !observed.contains(&x) {
        return Err(LcsError::InvalidArguments(format!("target `{}` is not observed", engine.labels()[x])));
    }
    let labels = engine.labels().to_vec();
    let mut state = LearnerState::new(x, labels.clone());
    let mut log = LearnerLog::default();
    let mut processed = Vec::new();
    let mut seen_firings = 0;
    let mut seen_conflicts = 0;

    while !stop_rules_met(&state, x) && processed.len() < observed.len() {
        let v = state.waitlist.pop_front().expect("non-empty waitlist");
        process_node(engine, &mut state, v, observed, config)?;
        let blanket = state.blankets[&v].clone();
        log.events.push(LogEvent::Process { node: labels[v].clone(), blanket: blanket.iter().map(|&u| labels[u].clone()).collect() });
        for r in engine.take_log() {
            log.events.push(LogEvent::Query(r));
        }
        state.knowledge.orient_colliders();
        state.knowledge.apply_rules();
        for f in &state.knowledge.firings[seen_firings..] {
            log.events.push(LogEvent::Orient(f.clone()));
        }
        for c in &state.knowledge.conflicts[seen_conflicts..] {
            log.events.push(LogEvent::Conflict(c.clone()));
        }
        seen_firings = state.knowledge.firings.len();
        seen_conflicts = state.knowledge.conflicts.len();
        state.done.insert(v);
        processed.push(v);
        state.refresh_waitlist();
    }

    let fragment = state.knowledge.to_graph();
    let mb = state.blankets[&x].clone();
    let sets = derive_sets(&fragment, x, &mb);
    Ok((
        LocalStructure {
            center: x,
            fragment,
            mb,
            pa: sets.pa,
            ch: sets.ch,
            ncpa: sets.ncpa,
            pa_star: sets.pa_star,
            poss_de: sets.poss_de,
            processed,
            blankets: state.blankets,
            knowledge: state.knowledge,
        },
        log,
    ))
}

fn process_node(
    engine: &mut CiEngine,
    state: &mut LearnerState,
    v: usize,
    observed: &NodeSet,
    config: &LearnerConfig,
) -> Result<()> {
    let mb = blanket(engine, &mut state.blankets, v, observed)?;
    let exact_cap = config.max_sepset_size.unwrap_or(usize::MAX);

    // outside the blanket: separated by the blanket itself
    for &w in observed {
        let k = &mut state.knowledge;
        if w != v && !mb.contains(&w) && !k.adjacent(v, w) && !k.nonadjacent(v, w) {
            k.certify_nonadjacent(v, w, mb.clone());
        }
    }

    // exact adjacencies inside the blanket: v and w are separable iff some
    // subset of either blanket separates them, so search the smaller one
    let mut spouse_seps: Vec<(usize, NodeSet)> = Vec::new();
    for &w in &mb {
        if !state.knowledge.adjacent(v, w) && !state.knowledge.nonadjacent(v, w) {
            let mb_w = blanket(engine, &mut state.blankets, w, observed)?;
            let pool: Vec<usize> = if mb_w.len() < mb.len() {
                mb_w.iter().copied().filter(|&u| u != v).collect()
            } else {
                mb.iter().copied().filter(|&u| u != w).collect()
            };
            match search_sepset(engine, v, w, &pool, exact_cap)? {
                Some(s) => state.knowledge.certify_nonadjacent(v, w, s),
                None => state.knowledge.add_circle_edge(v, w),
            }
        }
        if let Some(s) = state.knowledge.sepset(v, w) {
            spouse_seps.push((w, s.clone()));
        }
    }
    let k = &mut state.knowledge;
    let adj: Vec<usize> = mb.iter().copied().filter(|&w| k.adjacent(v, w)).collect();

    // non-adjacencies among neighbours, searched inside MB+(v) up to a depth;
    // an unresolved pair is settled exactly once either endpoint is processed
    let pair_cap = config.pair_depth.min(exact_cap);
    for (i, &a) in adj.iter().enumerate() {
        for &c in &adj[i + 1..] {
            if k.adjacent(a, c) || k.nonadjacent(a, c) {
                continue;
            }
            let pool: Vec<usize> = mb.iter().copied().chain([v]).filter(|&u| u != a && u != c).sorted().collect();
            if let Some(s) = search_sepset(engine, a, c, &pool, pair_cap)? {
                k.certify_nonadjacent(a, c, s);
            }
        }
    }

    // b adjacent to v, outside the v/w separating set, and dependent on w
    // given it: the edge v - b has an arrowhead at b
    for (w, sep) in spouse_seps {
        for &b in &adj {
            if sep.contains(&b) || b == w || k.adjacent(b, w) || k.endpoint(v, b) == Some(Mark::Arrow) {
                continue;
            }
            if !engine.is_independent(b, w, &sep)? {
                k.set_mark(v, b, Mark::Arrow, "S2");
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DerivedSets {
    pub pa: NodeSet,
    pub ch: NodeSet,
    pub ncpa: NodeSet,
    pub pa_star: NodeSet,
    pub poss_de: NodeSet,
}

/// Parents, children, non-collider possible parents, augmented parents and
/// possible descendants of `x` read off a PAG fragment. `mb` bounds the
/// subgraph used for the non-collider check.
pub fn derive_sets(fragment: &MixedGraph, x: usize, mb: &NodeSet) -> DerivedSets {
    let pa: NodeSet = fragment.parents(x).iter().copied().collect();
    let ch: NodeSet = fragment.children(x).iter().copied().collect();
    let mut poss_de = fragment.possible_descendants_of(&[x]);
    poss_de.remove(&x);

    let mut mb_plus = mb.clone();
    mb_plus.insert(x);
    let ncpa: NodeSet = fragment
        .neighbors(x)
        .iter()
        .copied()
        .filter(|&v| fragment.endpoint(x, v) == Some(Mark::Circle) && fragment.endpoint(v, x) == Some(Mark::Arrow))
        .filter(|&v| {
            let arrowheads = fragment
                .neighbors(v)
                .iter()
                .filter(|&&w| mb_plus.contains(&w) && fragment.endpoint(w, v) == Some(Mark::Arrow))
                .count();
            arrowheads < 2
        })
        .collect();

    let pa_star = arrow_collider_reach(fragment, x, &poss_de);
    DerivedSets { pa, ch, ncpa, pa_star, poss_de }
}

/// Endpoints of arrow-collider paths from `x` that avoid `poss_de`.
fn arrow_collider_reach(g: &MixedGraph, x: usize, poss_de: &NodeSet) -> NodeSet {
    let n = g.n();
    let mut out = NodeSet::new();
    // visited directed edges (prev, v)
    let mut seen = vec![false; n * n];
    let mut stack = Vec::new();
    for &v in g.neighbors(x) {
        if g.endpoint(v, x) == Some(Mark::Arrow) && !poss_de.contains(&v) {
            out.insert(v);
            seen[x * n + v] = true;
            stack.push((x, v));
        }
    }
    while let Some((prev, v)) = stack.pop() {
        if g.endpoint(prev, v) != Some(Mark::Arrow) {
            continue;
        }
        for &w in g.neighbors(v) {
            if w == x || w == prev || poss_de.contains(&w) || g.endpoint(w, v) != Some(Mark::Arrow) {
                continue;
            }
            if !seen[v * n + w] {
                seen[v * n + w] = true;
                out.insert(w);
                stack.push((v, w));
            }
        }
    }
    out
}

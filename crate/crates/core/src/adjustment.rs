//! Adjustment criterion, local identification rules and the LCS driver.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{LcsError, Result};
use crate::estimate::estimate_effect_ols;
use crate::graph::{GraphKind, Mark, MixedGraph, NodeSet};
use crate::independence::{CiEngine, Dataset};
use crate::local::{learn_local_pag, LearnerConfig, LearnerLog, LocalStructure};
use crate::projection::{is_visible, is_visible_with};

/// Brute-force adjustment search refuses graphs with more candidate nodes.
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    R1,
    R2,
    R3a,
    R3b,
    None,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3a => "R3a",
            Rule::R3b => "R3b",
            Rule::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleWitness {
    pub s: Option<usize>,
    pub z: NodeSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    IdentifiableNonZero { adjustment: NodeSet, effect: Option<f64> },
    Zero,
    NonIdentifiable,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::IdentifiableNonZero { .. } => "identifiable",
            Verdict::Zero => "zero",
            Verdict::NonIdentifiable => "non_identifiable",
        }
    }

    pub fn adjustment(&self) -> Option<&NodeSet> {
        match self {
            Verdict::IdentifiableNonZero { adjustment, .. } => Some(adjustment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcsOutcome {
    pub verdict: Verdict,
    pub rule: Rule,
    pub witness: Option<RuleWitness>,
    pub n_tests: u64,
    /// Set when a configured search cap cut the enumeration short.
    pub cap_exceeded: bool,
}

impl LcsOutcome {
    fn from_rule(rule: Rule, witness: Option<RuleWitness>, n_tests: u64) -> Self {
        let verdict = match rule {
            Rule::R1 | Rule::R2 => Verdict::IdentifiableNonZero {
                adjustment: witness.as_ref().expect("R1/R2 carry a witness").z.clone(),
                effect: None,
            },
            Rule::R3a | Rule::R3b => Verdict::Zero,
            Rule::None => Verdict::NonIdentifiable,
        };
        LcsOutcome { verdict, rule, witness, n_tests, cap_exceeded: false }
    }

    /// JSON result object with labels in place of indices.
    pub fn to_json(&self, labels: &[String], runtime_ms: u128) -> serde_json::Value {
        let (adj, effect) = match &self.verdict {
            Verdict::IdentifiableNonZero { adjustment, effect } => {
                (adjustment.iter().map(|&v| labels[v].clone()).collect::<Vec<_>>(), *effect)
            }
            Verdict::Zero => (Vec::new(), Some(0.0)),
            Verdict::NonIdentifiable => (Vec::new(), None),
        };
        serde_json::json!({
            "case": self.verdict.label(),
            "rule": self.rule.as_str(),
            "adjustment_set": adj,
            "effect": effect,
            "n_tests": self.n_tests,
            "runtime_ms": runtime_ms as u64,
        })
    }
}

// ---------------------------------------------------------------------------
// Graphical criterion

fn pd_step(g: &MixedGraph, u: usize, w: usize) -> bool {
    g.endpoint(w, u) != Some(Mark::Arrow)
}

/// Nodes that reach `y` along possibly directed paths avoiding `avoid`.
fn pd_reaches(g: &MixedGraph, y: usize, avoid: usize) -> Vec<bool> {
    let mut ok = vec![false; g.n()];
    ok[y] = true;
    let mut stack = vec![y];
    while let Some(w) = stack.pop() {
        for &u in g.neighbors(w) {
            if u != avoid && !ok[u] && pd_step(g, u, w) {
                ok[u] = true;
                stack.push(u);
            }
        }
    }
    ok
}

/// Every node lying on some possibly directed path from `x` to `y`.
fn nodes_on_pd_paths(g: &MixedGraph, x: usize, y: usize) -> NodeSet {
    let reach = pd_reaches(g, y, x);
    let mut on = vec![false; g.n()];
    let mut path = vec![x];
    let mut in_path = vec![false; g.n()];
    in_path[x] = true;
    fn dfs(g: &MixedGraph, y: usize, reach: &[bool], path: &mut Vec<usize>, in_path: &mut [bool], on: &mut [bool]) {
        let u = *path.last().unwrap();
        for &w in g.neighbors(u) {
            if in_path[w] || !reach[w] || !pd_step(g, u, w) {
                continue;
            }
            if w == y {
                for &p in path.iter() {
                    on[p] = true;
                }
                on[y] = true;
                continue;
            }
            // skip branches whose nodes are all already known to be on a path
            path.push(w);
            in_path[w] = true;
            dfs(g, y, reach, path, in_path, on);
            in_path[w] = false;
            path.pop();
        }
    }
    if x != y {
        dfs(g, y, &reach, &mut path, &mut in_path, &mut on);
    }
    (0..g.n()).filter(|&v| on[v]).collect()
}

/// Possible descendants of every node other than `x` on a possibly directed
/// path from `x` to `y`.
pub fn forb_set(g: &MixedGraph, x: usize, y: usize) -> Result<NodeSet> {
    g.check(x)?;
    g.check(y)?;
    if x == y {
        return Err(LcsError::InvalidArguments("x and y must differ".into()));
    }
    let mut on = nodes_on_pd_paths(g, x, y);
    on.remove(&x);
    let seeds: Vec<usize> = on.into_iter().collect();
    if seeds.is_empty() {
        return Ok(NodeSet::new());
    }
    Ok(g.possible_descendants_of(&seeds))
}

/// Children `c` of `x` whose edge starts a possibly directed path to `y`.
fn first_edges(g: &MixedGraph, x: usize, y: usize) -> Vec<usize> {
    let reach = pd_reaches(g, y, x);
    g.neighbors(x).iter().copied().filter(|&c| reach[c] && pd_step(g, x, c)).collect()
}

/// Every possibly directed path from `x` to `y` starts with a visible edge
/// out of `x`.
pub fn amenable(g: &MixedGraph, x: usize, y: usize) -> bool {
    first_edges(g, x, y).into_iter().all(|c| g.is_directed(x, c) && is_visible(g, x, c))
}

/// Precomputed generalized adjustment criterion for one `(x, y)` pair.
#[derive(Debug, Clone)]
pub struct GacChecker {
    x: usize,
    y: usize,
    amenable: bool,
    forb: NodeSet,
    /// Definite-status non-causal paths as (definite non-colliders, colliders
    /// with their reflexive descendants).
    paths: Vec<(Vec<usize>, Vec<NodeSet>)>,
}

impl GacChecker {
    /// Path-based route: works on MAGs and PAGs alike.
    pub fn new(g: &MixedGraph, x: usize, y: usize) -> Result<Self> {
        let forb = forb_set(g, x, y)?;
        let amen = amenable(g, x, y);
        let mut paths = Vec::new();
        let mut path = vec![x];
        let mut in_path = vec![false; g.n()];
        in_path[x] = true;
        collect_definite_paths(g, y, &mut path, &mut in_path, &mut Vec::new(), &mut Vec::new(), &mut paths);
        Ok(GacChecker { x, y, amenable: amen, forb, paths })
    }

    pub fn is_amenable(&self) -> bool {
        self.amenable
    }

    pub fn forb(&self) -> &NodeSet {
        &self.forb
    }

    pub fn check(&self, z: &NodeSet) -> bool {
        if z.contains(&self.x) || z.contains(&self.y) || !self.amenable || z.iter().any(|v| self.forb.contains(v)) {
            return false;
        }
        self.paths.iter().all(|(noncolliders, colliders)| {
            noncolliders.iter().any(|v| z.contains(v)) || colliders.iter().any(|de| de.is_disjoint(z))
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Collider,
    NonCollider,
    Indefinite,
}

fn status(g: &MixedGraph, a: usize, b: usize, c: usize) -> Status {
    let (ma, mc) = (g.endpoint(a, b), g.endpoint(c, b));
    if ma == Some(Mark::Arrow) && mc == Some(Mark::Arrow) {
        Status::Collider
    } else if ma == Some(Mark::Tail)
        || mc == Some(Mark::Tail)
        || (ma == Some(Mark::Circle) && mc == Some(Mark::Circle) && !g.adjacent(a, c))
    {
        Status::NonCollider
    } else {
        Status::Indefinite
    }
}

fn collect_definite_paths(
    g: &MixedGraph,
    y: usize,
    path: &mut Vec<usize>,
    in_path: &mut [bool],
    noncolliders: &mut Vec<usize>,
    colliders: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, Vec<NodeSet>)>,
) {
    let u = *path.last().unwrap();
    for &w in g.neighbors(u) {
        if in_path[w] {
            continue;
        }
        let mut pushed = None;
        if path.len() >= 2 {
            let a = path[path.len() - 2];
            match status(g, a, u, w) {
                Status::Collider => {
                    colliders.push(u);
                    pushed = Some(true);
                }
                Status::NonCollider => {
                    noncolliders.push(u);
                    pushed = Some(false);
                }
                Status::Indefinite => continue,
            }
        }
        if w == y {
            path.push(w);
            let causal = path.windows(2).all(|e| pd_step(g, e[0], e[1]));
            if !causal {
                let des = colliders.iter().map(|&c| g.descendants(c).expect("in range")).collect();
                out.push((noncolliders.clone(), des));
            }
            path.pop();
        } else {
            path.push(w);
            in_path[w] = true;
            collect_definite_paths(g, y, path, in_path, noncolliders, colliders, out);
            in_path[w] = false;
            path.pop();
        }
        match pushed {
            Some(true) => {
                colliders.pop();
            }
            Some(false) => {
                noncolliders.pop();
            }
            None => {}
        }
    }
}

/// Generalized adjustment criterion for `z` relative to `(x, y)`.
pub fn gac_satisfied(g: &MixedGraph, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
    for &v in z {
        g.check(v)?;
    }
    Ok(GacChecker::new(g, x, y)?.check(z))
}

/// Separation route for DAGs and MAGs: amenable, disjoint from Forb, and
/// m-separating `x` and `y` once the first edge of every possibly directed
/// path from `x` to `y` is removed.
pub fn gac_satisfied_backdoor(g: &MixedGraph, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
    if g.kind() == GraphKind::Pag {
        return Err(LcsError::WrongKind { expected: "dag or mag".into(), found: g.kind().to_string() });
    }
    if z.contains(&x) || z.contains(&y) || !amenable(g, x, y) {
        return Ok(false);
    }
    let forb = forb_set(g, x, y)?;
    if z.iter().any(|v| forb.contains(v)) {
        return Ok(false);
    }
    let cut: Vec<usize> = first_edges(g, x, y);
    let edges: Vec<_> = g.edges().into_iter().filter(|e| !(e.a == x && cut.contains(&e.b)) && !(e.b == x && cut.contains(&e.a))).collect();
    let pbd = MixedGraph::from_edges(g.kind(), g.labels(), &edges)?;
    pbd.m_separated(x, y, z)
}

/// Every valid adjustment set over the nodes other than `x` and `y`.
pub fn brute_force_adjustment_search(g: &MixedGraph, x: usize, y: usize) -> Result<Vec<NodeSet>> {
    let pool: Vec<usize> = (0..g.n()).filter(|&v| v != x && v != y).collect();
    if pool.len() > BRUTE_FORCE_LIMIT {
        return Err(LcsError::SizeGuard(format!("{} candidate nodes (limit {BRUTE_FORCE_LIMIT})", pool.len())));
    }
    let checker = GacChecker::new(g, x, y)?;
    let mut out = Vec::new();
    for k in 0..=pool.len() {
        for combo in pool.iter().copied().combinations(k) {
            let z: NodeSet = combo.into_iter().collect();
            if checker.check(&z) {
                out.push(z);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Local rules

#[derive(Debug, Clone, Default)]
pub struct RuleConfig {
    /// Largest conditioning set tried by R1 and R3. `None` is exact.
    pub max_subset_size: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct LcsConfig {
    pub learner: LearnerConfig,
    pub rules: RuleConfig,
}

/// Search order for rule candidates: definite parents, then other nodes with
/// an arrowhead at `x`, then the rest; node order within each class.
fn ordered(ls: &LocalStructure, set: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let g = &ls.fragment;
    let x = ls.center;
    set.into_iter()
        .sorted_by_key(|&v| {
            let class = if ls.pa.contains(&v) {
                0
            } else if g.endpoint(v, x) == Some(Mark::Arrow) {
                1
            } else {
                2
            };
            (class, v)
        })
        .collect()
}

fn z_subsets(pool: &[usize], cap: Option<usize>) -> impl Iterator<Item = NodeSet> + '_ {
    let max = cap.unwrap_or(pool.len()).min(pool.len());
    (0..=max).flat_map(move |k| pool.iter().copied().combinations(k).map(|c| c.into_iter().collect()))
}

/// Candidates for `S`: blanket members other than `y` and the possible
/// descendants of `x` (which include the children).
fn s_candidates(ls: &LocalStructure, y: usize) -> Vec<usize> {
    ordered(ls, ls.mb.iter().copied().filter(|&v| v != y && !ls.ch.contains(&v) && !ls.poss_de.contains(&v)))
}

/// Candidates for members of `Z`: blanket members outside `PossDe(x)`.
fn z_pool(ls: &LocalStructure, y: usize) -> Vec<usize> {
    ordered(ls, ls.mb.iter().copied().filter(|&v| v != y && !ls.poss_de.contains(&v)))
}

/// R1: some `S` dependent on `y` given `Z` and independent
/// of `y` given `Z` plus `x`.
pub fn rule_r1(engine: &mut CiEngine, ls: &LocalStructure, y: usize, cfg: &RuleConfig) -> Result<Option<RuleWitness>> {
    let x = ls.center;
    let ss = s_candidates(ls, y);
    let pool = z_pool(ls, y);
    for z in z_subsets(&pool, cfg.max_subset_size) {
        for &s in &ss {
            if z.contains(&s) {
                continue;
            }
            if !engine.is_independent(s, y, &z)? {
                let mut zx = z.clone();
                zx.insert(x);
                if engine.is_independent(s, y, &zx)? {
                    return Ok(Some(RuleWitness { s: Some(s), z }));
                }
            }
        }
    }
    Ok(None)
}

/// Whether every possibly directed path out of `x` towards `y` in the
/// learned fragment starts with a visible edge. When `y` lies outside the
/// learned region every child edge must be visible.
fn fragment_amenable(ls: &LocalStructure, y: usize) -> bool {
    let g = &ls.fragment;
    let x = ls.center;
    let y_known = !g.neighbors(y).is_empty() || ls.processed.contains(&y);
    let firsts: Vec<usize> = if y_known {
        first_edges(g, x, y)
    } else {
        g.neighbors(x).iter().copied().filter(|&c| pd_step(g, x, c)).collect()
    };
    firsts.into_iter().all(|c| g.is_directed(x, c) && is_visible_with(g, x, c, |a, b| ls.nonadjacent(a, b)))
}

/// R2: with every mark at `x` determined, every neighbour a
/// parent, a non-collider possible parent or a child, and the fragment
/// amenable, `Pa(x) ∪ NCPa(x)` adjusts, provided `x` and `y` stay dependent
/// given it.
pub fn rule_r2(engine: &mut CiEngine, ls: &LocalStructure, y: usize) -> Result<Option<RuleWitness>> {
    let g = &ls.fragment;
    let x = ls.center;
    let nb = g.neighbors(x);
    if nb.iter().any(|&v| g.endpoint(v, x) == Some(Mark::Circle)) {
        return Ok(None);
    }
    if nb.iter().any(|v| !(ls.pa.contains(v) || ls.ncpa.contains(v) || ls.ch.contains(v))) {
        return Ok(None);
    }
    let z: NodeSet = ls.pa.union(&ls.ncpa).copied().collect();
    if z.contains(&y) || !fragment_amenable(ls, y) {
        return Ok(None);
    }
    if engine.is_independent(x, y, &z)? {
        return Ok(None);
    }
    Ok(Some(RuleWitness { s: None, z }))
}

/// R3, the zero-effect rule. Clause (a): `x` independent of `y` given
/// some `Z`. Clause (b): some `S` dependent on `x` given `Z` but independent
/// of `y` given `Z`.
pub fn rule_r3(
    engine: &mut CiEngine,
    ls: &LocalStructure,
    y: usize,
    cfg: &RuleConfig,
) -> Result<Option<(Rule, RuleWitness)>> {
    let x = ls.center;
    let pool = z_pool(ls, y);
    for z in z_subsets(&pool, cfg.max_subset_size) {
        if engine.is_independent(x, y, &z)? {
            return Ok(Some((Rule::R3a, RuleWitness { s: None, z })));
        }
    }
    let ss = s_candidates(ls, y);
    for z in z_subsets(&pool, cfg.max_subset_size) {
        for &s in &ss {
            if z.contains(&s) {
                continue;
            }
            if !engine.is_independent(s, x, &z)? && engine.is_independent(s, y, &z)? {
                return Ok(Some((Rule::R3b, RuleWitness { s: Some(s), z })));
            }
        }
    }
    Ok(None)
}

/// Everything one LCS run produced besides the outcome.
#[derive(Debug, Clone)]
pub struct LcsRun {
    pub outcome: LcsOutcome,
    pub local: LocalStructure,
    pub log: LearnerLog,
}

/// Learns the structure around `x` and applies R1, R2 and R3 in order. With
/// `data`, an identified effect is estimated by least squares.
pub fn lcs(
    engine: &mut CiEngine,
    x: usize,
    y: usize,
    observed: &NodeSet,
    cfg: &LcsConfig,
    data: Option<&Dataset>,
) -> Result<LcsRun> {
    if x == y {
        return Err(LcsError::InvalidArguments("treatment and outcome must differ".into()));
    }
    if !observed.contains(&y) {
        return Err(LcsError::InvalidArguments(format!("outcome `{}` is not observed", engine.labels()[y])));
    }
    let (local, log) = learn_local_pag(engine, x, observed, &cfg.learner)?;
    let (rule, witness) = if let Some(w) = rule_r1(engine, &local, y, &cfg.rules)? {
        (Rule::R1, Some(w))
    } else if let Some(w) = rule_r2(engine, &local, y)? {
        (Rule::R2, Some(w))
    } else if let Some((r, w)) = rule_r3(engine, &local, y, &cfg.rules)? {
        (r, Some(w))
    } else {
        (Rule::None, None)
    };
    let mut outcome = LcsOutcome::from_rule(rule, witness, engine.test_count());
    if let (Some(d), Verdict::IdentifiableNonZero { adjustment, effect }) = (data, &mut outcome.verdict) {
        let labels = engine.labels();
        let zl: Vec<&str> = adjustment.iter().map(|&v| labels[v].as_str()).collect();
        *effect = Some(estimate_effect_ols(d, &labels[x], &labels[y], &zl)?);
    }
    Ok(LcsRun { outcome, local, log })
}

#[derive(Debug, Clone, Default)]
pub struct EhsConfig {
    /// Stop after this many `(S, Z)` pairs.
    pub max_pairs: Option<u64>,
}

/// Exhaustive global search in the style of the pretreatment-assuming
/// baseline: every `S` and every `Z` over all other observed variables is
/// tested, and the first witness in (|Z|, node order) wins.
pub fn ehs_baseline(engine: &mut CiEngine, x: usize, y: usize, observed: &NodeSet, cfg: &EhsConfig) -> Result<LcsOutcome> {
    if x == y || !observed.contains(&x) || !observed.contains(&y) {
        return Err(LcsError::InvalidArguments("x and y must be distinct observed variables".into()));
    }
    let pool: Vec<usize> = observed.iter().copied().filter(|&v| v != x && v != y).collect();
    let mut best: Option<RuleWitness> = None;
    let mut pairs = 0u64;
    let mut capped = false;
    'outer: for k in 0..pool.len() {
        for combo in pool.iter().copied().combinations(k) {
            let z: NodeSet = combo.into_iter().collect();
            for &s in &pool {
                if z.contains(&s) {
                    continue;
                }
                if cfg.max_pairs.is_some_and(|m| pairs >= m) {
                    capped = true;
                    break 'outer;
                }
                pairs += 1;
                if !engine.is_independent(s, y, &z)? {
                    let mut zx = z.clone();
                    zx.insert(x);
                    if engine.is_independent(s, y, &zx)? && best.is_none() {
                        best = Some(RuleWitness { s: Some(s), z: z.clone() });
                    }
                }
            }
        }
    }
    if capped {
        log::warn!("EHS search cap of {pairs} pairs reached");
    }
    let rule = if best.is_some() { Rule::R1 } else { Rule::None };
    let mut out = LcsOutcome::from_rule(rule, best, engine.test_count());
    out.cap_exceeded = capped;
    Ok(out)
}

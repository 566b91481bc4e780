//! Mixed graphs with tail/arrow/circle endpoint marks.
//!
//! One representation covers DAGs, MAGs and PAGs; the [`GraphKind`] tag says
//! which invariants a value is expected to satisfy (see [`MixedGraph::validate`]).
//!
//! Ancestor and descendant sets are **reflexive**: `v` is always a member of
//! its own ancestor, descendant and possible-descendant sets.
//!
//! Nodes are addressed by dense indices inside the library. Labels are the
//! only identity that ever appears in serialized formats.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LcsError, Result};

pub type NodeSet = BTreeSet<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Dag,
    Mag,
    Pag,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphKind::Dag => "dag",
            GraphKind::Mag => "mag",
            GraphKind::Pag => "pag",
        };
        f.write_str(s)
    }
}

/// An edge with a mark at each endpoint. `A -> B` is `(Tail, Arrow)`,
/// `A <-> B` is `(Arrow, Arrow)`, `A o-> B` is `(Circle, Arrow)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub mark_a: Mark,
    pub mark_b: Mark,
}

impl Edge {
    pub fn directed(from: usize, to: usize) -> Self {
        Edge { a: from, b: to, mark_a: Mark::Tail, mark_b: Mark::Arrow }
    }

    pub fn bidirected(a: usize, b: usize) -> Self {
        Edge { a, b, mark_a: Mark::Arrow, mark_b: Mark::Arrow }
    }

    pub fn new(a: usize, b: usize, mark_a: Mark, mark_b: Mark) -> Self {
        Edge { a, b, mark_a, mark_b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathKind {
    DirectedPath,
    PossiblyDirectedPath,
    ColliderPath,
    ArrowColliderPath,
}

/// A single violated invariant found by [`MixedGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DirectedCycle(Vec<String>),
    AlmostDirectedCycle { spouse_a: String, spouse_b: String },
    IllegalCircle { a: String, b: String },
    NonDirectedEdgeInDag { a: String, b: String },
    UndirectedEdge { a: String, b: String },
    NonMaximal { a: String, b: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DirectedCycle(c) => write!(f, "directed cycle through {}", c.join(" -> ")),
            Violation::AlmostDirectedCycle { spouse_a, spouse_b } => write!(
                f,
                "almost directed cycle: {spouse_a} <-> {spouse_b} with an ancestral relation between them"
            ),
            Violation::IllegalCircle { a, b } => write!(f, "circle mark on edge {a} - {b}"),
            Violation::NonDirectedEdgeInDag { a, b } => write!(f, "non-directed edge {a} - {b} in a DAG"),
            Violation::UndirectedEdge { a, b } => write!(f, "undirected edge {a} - {b} (selection bias is not modeled)"),
            Violation::NonMaximal { a, b } => write!(f, "non-adjacent {a} and {b} cannot be m-separated"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Immutable mixed graph.
#[derive(Debug, Clone)]
pub struct MixedGraph {
    kind: GraphKind,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    /// `marks[u * n + v]` is the mark at `v` on the edge `u - v`.
    marks: Vec<Option<Mark>>,
    neighbors: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.labels == other.labels && self.marks == other.marks
    }
}

impl MixedGraph {
    /// Builds a graph, rejecting duplicate labels, self-loops and multi-edges.
    pub fn from_edges<S: AsRef<str>>(kind: GraphKind, labels: &[S], edges: &[Edge]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        let n = labels.len();
        let mut index = HashMap::with_capacity(n);
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(LcsError::DuplicateNode(l.clone()));
            }
        }
        let mut marks = vec![None; n * n];
        for e in edges {
            if e.a >= n {
                return Err(LcsError::NodeOutOfRange(e.a));
            }
            if e.b >= n {
                return Err(LcsError::NodeOutOfRange(e.b));
            }
            if e.a == e.b {
                return Err(LcsError::SelfLoop(labels[e.a].clone()));
            }
            if marks[e.a * n + e.b].is_some() {
                return Err(LcsError::MultiEdge(labels[e.a].clone(), labels[e.b].clone()));
            }
            marks[e.a * n + e.b] = Some(e.mark_b);
            marks[e.b * n + e.a] = Some(e.mark_a);
        }
        Ok(Self::from_mark_matrix(kind, labels, index, marks))
    }

    /// Builds from a mark matrix already known to be symmetric in presence.
    pub(crate) fn from_marks(kind: GraphKind, labels: Vec<String>, marks: Vec<Option<Mark>>) -> Self {
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self::from_mark_matrix(kind, labels, index, marks)
    }

    fn from_mark_matrix(
        kind: GraphKind,
        labels: Vec<String>,
        index: HashMap<String, usize>,
        marks: Vec<Option<Mark>>,
    ) -> Self {
        let n = labels.len();
        let mut neighbors = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for u in 0..n {
            for v in 0..n {
                if let Some(at_v) = marks[u * n + v] {
                    neighbors[u].push(v);
                    let at_u = marks[v * n + u].expect("mark matrix must be symmetric in presence");
                    if at_u == Mark::Tail && at_v == Mark::Arrow {
                        children[u].push(v);
                        parents[v].push(u);
                    }
                }
            }
        }
        MixedGraph { kind, labels, index, marks, neighbors, parents, children }
    }

    /// Builds a graph from labels and `(from, to)` directed pairs.
    pub fn dag_from_labels(labels: &[&str], arcs: &[(&str, &str)]) -> Result<Self> {
        Self::from_labeled(GraphKind::Dag, labels, arcs.iter().map(|(a, b)| (*a, Mark::Tail, Mark::Arrow, *b)))
    }

    /// Builds a graph from `(a, mark_at_a, mark_at_b, b)` tuples.
    pub fn from_labeled<'a, I>(kind: GraphKind, labels: &[&str], edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Mark, Mark, &'a str)>,
    {
        let lookup: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut out = Vec::new();
        for (a, ma, mb, b) in edges {
            let ia = *lookup.get(a).ok_or_else(|| LcsError::UnknownNode(a.to_string()))?;
            let ib = *lookup.get(b).ok_or_else(|| LcsError::UnknownNode(b.to_string()))?;
            out.push(Edge::new(ia, ib, ma, mb));
        }
        Self::from_edges(kind, labels, &out)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn with_kind(&self, kind: GraphKind) -> Self {
        let mut g = self.clone();
        g.kind = kind;
        g
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| LcsError::UnknownNode(label.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<NodeSet> {
        labels.iter().map(|l| self.index_of(l.as_ref())).collect()
    }

    pub fn labels_of<'a, I: IntoIterator<Item = &'a usize>>(&self, set: I) -> Vec<String> {
        set.into_iter().map(|&v| self.labels[v].clone()).collect()
    }

    pub(crate) fn check(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(LcsError::NodeOutOfRange(v))
        }
    }

    /// Mark at `at` on the edge between `other` and `at`, if the edge exists.
    #[inline]
    pub fn endpoint(&self, other: usize, at: usize) -> Option<Mark> {
        self.marks[other * self.n() + at]
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.marks[a * self.n() + b].is_some()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Definite parents: `p -> v`.
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    /// Definite children: `v -> c`.
    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn spouses(&self, v: usize) -> Vec<usize> {
        self.neighbors[v].iter().copied().filter(|&w| self.is_bidirected(v, w)).collect()
    }

    pub fn is_directed(&self, from: usize, to: usize) -> bool {
        self.endpoint(to, from) == Some(Mark::Tail) && self.endpoint(from, to) == Some(Mark::Arrow)
    }

    pub fn is_bidirected(&self, a: usize, b: usize) -> bool {
        self.endpoint(a, b) == Some(Mark::Arrow) && self.endpoint(b, a) == Some(Mark::Arrow)
    }

    /// Edges with `a < b`, in index order.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for &b in &self.neighbors[a] {
                if a < b {
                    out.push(Edge::new(a, b, self.endpoint(b, a).unwrap(), self.endpoint(a, b).unwrap()));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Reflexive ancestors along definite directed edges.
    pub fn ancestors(&self, v: usize) -> Result<NodeSet> {
        self.check(v)?;
        Ok(self.closure(&[v], |g, u| g.parents(u)))
    }

    /// Reflexive descendants along definite directed edges.
    pub fn descendants(&self, v: usize) -> Result<NodeSet> {
        self.check(v)?;
        Ok(self.closure(&[v], |g, u| g.children(u)))
    }

    pub fn ancestors_of_set(&self, set: &NodeSet) -> NodeSet {
        let seeds: Vec<usize> = set.iter().copied().collect();
        self.closure(&seeds, |g, u| g.parents(u))
    }

    fn closure<'a, F>(&'a self, seeds: &[usize], step: F) -> NodeSet
    where
        F: Fn(&'a Self, usize) -> &'a [usize],
    {
        let mut seen = vec![false; self.n()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for &w in step(self, u) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.n()).filter(|&i| seen[i]).collect()
    }

    pub(crate) fn ancestor_mask(&self, seeds: &[bool]) -> Vec<bool> {
        let mut seen = seeds.to_vec();
        let mut stack: Vec<usize> = (0..self.n()).filter(|&i| seeds[i]).collect();
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        seen
    }

    /// Nodes reachable from `v` along paths whose every edge lacks an
    /// arrowhead at the end nearer to `v` (reflexive).
    pub fn possible_descendants(&self, v: usize) -> Result<NodeSet> {
        self.check(v)?;
        Ok(self.possible_descendants_of(&[v]))
    }

    pub(crate) fn possible_descendants_of(&self, seeds: &[usize]) -> NodeSet {
        let mut seen = vec![false; self.n()];
        let mut stack = Vec::new();
        for &s in seeds {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
        while let Some(u) = stack.pop() {
            for &w in &self.neighbors[u] {
                if !seen[w] && self.endpoint(w, u) != Some(Mark::Arrow) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.n()).filter(|&i| seen[i]).collect()
    }

    /// m-separation of `x` and `y` given `z` (d-separation on DAGs).
    pub fn m_separated(&self, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
        self.check(x)?;
        self.check(y)?;
        if self.kind == GraphKind::Pag {
            return Err(LcsError::WrongKind { expected: "dag or mag".into(), found: self.kind.to_string() });
        }
        if x == y || z.contains(&x) || z.contains(&y) {
            return Err(LcsError::InvalidArguments("x, y and Z must be pairwise disjoint".into()));
        }
        for &v in z {
            self.check(v)?;
        }
        let mut mask = vec![false; self.n()];
        for &v in z {
            mask[v] = true;
        }
        Ok(!self.m_connected_mask(x, y, &mask))
    }

    /// Reachability ("Bayes-ball") form of m-connection over walks.
    /// Circle marks, if any, are treated as non-arrowheads.
    pub(crate) fn m_connected_mask(&self, x: usize, y: usize, z: &[bool]) -> bool {
        let n = self.n();
        let anc = self.ancestor_mask(z);
        // state index: 2 * node + (arrived with arrowhead at node)
        let mut seen = vec![false; 2 * n];
        let mut stack = Vec::with_capacity(2 * n);
        for &w in &self.neighbors[x] {
            let into = self.endpoint(x, w) == Some(Mark::Arrow);
            let s = 2 * w + into as usize;
            if !seen[s] {
                seen[s] = true;
                stack.push((w, into));
            }
        }
        while let Some((v, into)) = stack.pop() {
            if v == y {
                return true;
            }
            for &w in &self.neighbors[v] {
                if w == x {
                    continue;
                }
                let out_at_v = self.endpoint(w, v) == Some(Mark::Arrow);
                let collider = into && out_at_v;
                let pass = if collider { anc[v] } else { !z[v] };
                if !pass {
                    continue;
                }
                let into_w = self.endpoint(v, w) == Some(Mark::Arrow);
                let s = 2 * w + into_w as usize;
                if !seen[s] {
                    seen[s] = true;
                    stack.push((w, into_w));
                }
            }
        }
        false
    }

    /// Nodes reachable from `v` over bidirected edges only, `v` excluded.
    pub fn district(&self, v: usize) -> Result<NodeSet> {
        self.check(v)?;
        let mut d = self.district_plus(v);
        d.remove(&v);
        Ok(d)
    }

    fn district_plus(&self, v: usize) -> NodeSet {
        let mut seen = NodeSet::new();
        seen.insert(v);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &w in &self.neighbors[u] {
                if self.is_bidirected(u, w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Markov blanket in a DAG or MAG: parents, children, and the districts of
    /// `v` and of its children together with the parents of every member.
    pub fn markov_blanket(&self, v: usize) -> Result<NodeSet> {
        self.check(v)?;
        if self.kind == GraphKind::Pag {
            return Err(LcsError::WrongKind { expected: "dag or mag".into(), found: self.kind.to_string() });
        }
        let mut core = self.district_plus(v);
        for &c in self.children(v) {
            core.extend(self.district_plus(c));
        }
        let mut mb = core.clone();
        for &u in &core {
            mb.extend(self.parents(u).iter().copied());
        }
        mb.remove(&v);
        Ok(mb)
    }

    /// All path kinds that `path` satisfies.
    pub fn classify_path(&self, path: &[usize]) -> Result<BTreeSet<PathKind>> {
        if path.len() < 2 {
            return Err(LcsError::InvalidArguments("a path needs at least two nodes".into()));
        }
        for &v in path {
            self.check(v)?;
        }
        let distinct: BTreeSet<usize> = path.iter().copied().collect();
        if distinct.len() != path.len() {
            return Err(LcsError::InvalidArguments("path nodes must be distinct".into()));
        }
        for w in path.windows(2) {
            if !self.adjacent(w[0], w[1]) {
                return Err(LcsError::NotAdjacent(self.labels[w[0]].clone(), self.labels[w[1]].clone()));
            }
        }
        let mut kinds = BTreeSet::new();
        if path.windows(2).all(|w| self.is_directed(w[0], w[1])) {
            kinds.insert(PathKind::DirectedPath);
        }
        if path.windows(2).all(|w| self.endpoint(w[1], w[0]) != Some(Mark::Arrow)) {
            kinds.insert(PathKind::PossiblyDirectedPath);
        }
        let interior_colliders = path.windows(3).all(|w| self.is_collider(w[0], w[1], w[2]));
        if path.len() >= 3 && interior_colliders {
            kinds.insert(PathKind::ColliderPath);
        }
        if interior_colliders && self.endpoint(path[1], path[0]) == Some(Mark::Arrow) {
            kinds.insert(PathKind::ArrowColliderPath);
        }
        Ok(kinds)
    }

    /// `b` has arrowheads from both `a` and `c`.
    #[inline]
    pub fn is_collider(&self, a: usize, b: usize, c: usize) -> bool {
        self.endpoint(a, b) == Some(Mark::Arrow) && self.endpoint(c, b) == Some(Mark::Arrow)
    }

    /// Topological order over definite directed edges, or `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &c in &self.children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Reports every violated invariant for the graph's kind. An empty report
    /// means the graph is valid.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let lab = |v: usize| self.labels[v].clone();
        for e in self.edges() {
            let circle = e.mark_a == Mark::Circle || e.mark_b == Mark::Circle;
            if circle && self.kind != GraphKind::Pag {
                violations.push(Violation::IllegalCircle { a: lab(e.a), b: lab(e.b) });
            }
            if self.kind == GraphKind::Dag && !(self.is_directed(e.a, e.b) || self.is_directed(e.b, e.a)) {
                violations.push(Violation::NonDirectedEdgeInDag { a: lab(e.a), b: lab(e.b) });
            }
            if e.mark_a == Mark::Tail && e.mark_b == Mark::Tail {
                violations.push(Violation::UndirectedEdge { a: lab(e.a), b: lab(e.b) });
            }
        }
        if let Some(cycle) = self.find_directed_cycle() {
            violations.push(Violation::DirectedCycle(cycle.into_iter().map(lab).collect()));
        }
        if self.kind != GraphKind::Dag {
            let n = self.n();
            let anc: Vec<NodeSet> = (0..n).map(|v| self.closure(&[v], |g, u| g.parents(u))).collect();
            for e in self.edges() {
                if self.is_bidirected(e.a, e.b) && (anc[e.b].contains(&e.a) || anc[e.a].contains(&e.b)) {
                    violations.push(Violation::AlmostDirectedCycle { spouse_a: lab(e.a), spouse_b: lab(e.b) });
                }
            }
        }
        if self.kind == GraphKind::Mag && violations.is_empty() {
            for a in 0..self.n() {
                for b in (a + 1)..self.n() {
                    if !self.adjacent(a, b) && crate::projection::find_sepset(self, a, b).is_none() {
                        violations.push(Violation::NonMaximal { a: lab(a), b: lab(b) });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    fn find_directed_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.n();
        let mut state = vec![0u8; n];
        let mut stack_path: Vec<usize> = Vec::new();
        fn dfs(g: &MixedGraph, u: usize, state: &mut [u8], path: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[u] = 1;
            path.push(u);
            for &c in g.children(u) {
                if state[c] == 1 {
                    let start = path.iter().position(|&p| p == c).unwrap();
                    let mut cyc = path[start..].to_vec();
                    cyc.push(c);
                    return Some(cyc);
                }
                if state[c] == 0 {
                    if let Some(cyc) = dfs(g, c, state, path) {
                        return Some(cyc);
                    }
                }
            }
            path.pop();
            state[u] = 2;
            None
        }
        for v in 0..n {
            if state[v] == 0 {
                if let Some(c) = dfs(self, v, &mut state, &mut stack_path) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Induced subgraph over `keep` (kept in index order), same kind.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> MixedGraph {
        let order: Vec<usize> = keep.iter().copied().collect();
        let labels: Vec<String> = order.iter().map(|&v| self.labels[v].clone()).collect();
        let m = order.len();
        let mut marks = vec![None; m * m];
        for (i, &u) in order.iter().enumerate() {
            for (j, &v) in order.iter().enumerate() {
                marks[i * m + j] = self.endpoint(u, v);
            }
        }
        MixedGraph::from_marks(self.kind, labels, marks)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            kind: self.kind,
            nodes: self.labels.clone(),
            edges: self
                .edges()
                .into_iter()
                .map(|e| EdgeJson {
                    a: self.labels[e.a].clone(),
                    b: self.labels[e.b].clone(),
                    mark_a: e.mark_a,
                    mark_b: e.mark_b,
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("graph serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: GraphJson = serde_json::from_str(s)?;
        Self::try_from(raw)
    }

    /// Readable edge listing such as `X -> Y`, `A o-> B`, sorted.
    pub fn edge_strings(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .edges()
            .into_iter()
            .map(|e| {
                let (l, r, ml, mr) = if self.labels[e.a] <= self.labels[e.b] {
                    (e.a, e.b, e.mark_a, e.mark_b)
                } else {
                    (e.b, e.a, e.mark_b, e.mark_a)
                };
                let left = match ml {
                    Mark::Tail => "-",
                    Mark::Arrow => "<",
                    Mark::Circle => "o",
                };
                let right = match mr {
                    Mark::Tail => "-",
                    Mark::Arrow => ">",
                    Mark::Circle => "o",
                };
                format!("{} {}-{} {}", self.labels[l], left, right, self.labels[r])
            })
            .collect();
        out.sort();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeJson {
    pub a: String,
    pub b: String,
    pub mark_a: Mark,
    pub mark_b: Mark,
}

/// Serialized form: `{"kind":"dag|mag|pag","nodes":[...],"edges":[{"a","b","mark_a","mark_b"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub kind: GraphKind,
    pub nodes: Vec<String>,
    pub edges: Vec<EdgeJson>,
}

impl TryFrom<GraphJson> for MixedGraph {
    type Error = LcsError;

    fn try_from(raw: GraphJson) -> Result<Self> {
        let lookup: HashMap<&str, usize> = raw.nodes.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut edges = Vec::with_capacity(raw.edges.len());
        for e in &raw.edges {
            let a = *lookup.get(e.a.as_str()).ok_or_else(|| LcsError::UnknownNode(e.a.clone()))?;
            let b = *lookup.get(e.b.as_str()).ok_or_else(|| LcsError::UnknownNode(e.b.clone()))?;
            edges.push(Edge::new(a, b, e.mark_a, e.mark_b));
        }
        MixedGraph::from_edges(raw.kind, &raw.nodes, &edges)
    }
}

//! Orientation engine for PAG marks in the no-selection-bias setting.
//!
//! The engine holds a partially known graph: every stored edge is a certified
//! adjacency, and every pair in `nonadj` is a certified non-adjacency with a
//! separating set. Pairs in neither are unknown and no rule ever fires on
//! them, which keeps orientations sound when only part of the graph has been
//! learned.
//!
//! Only circle marks are overwritten. A disagreeing write to a tail or arrow
//! is recorded as a [`Conflict`] and dropped (first write wins).

use std::collections::HashMap;

use serde::Serialize;

use crate::graph::{GraphKind, Mark, MixedGraph, NodeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub edge: (String, String),
    pub at: String,
    pub kept: Mark,
    pub rejected: Mark,
    pub rule: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Firing {
    pub rule: &'static str,
    pub edge: (String, String),
    pub at: String,
    pub mark: Mark,
}

#[derive(Debug, Clone)]
pub struct Orienter {
    n: usize,
    labels: Vec<String>,
    marks: Vec<Option<Mark>>,
    nonadj: HashMap<(usize, usize), NodeSet>,
    pub conflicts: Vec<Conflict>,
    pub firings: Vec<Firing>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Orienter {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        Orienter {
            n,
            labels,
            marks: vec![None; n * n],
            nonadj: HashMap::new(),
            conflicts: Vec::new(),
            firings: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds a certified `a o-o b` edge; existing edges are left untouched.
    pub fn add_circle_edge(&mut self, a: usize, b: usize) {
        debug_assert!(!self.nonadj.contains_key(&key(a, b)));
        if self.marks[a * self.n + b].is_none() {
            self.marks[a * self.n + b] = Some(Mark::Circle);
            self.marks[b * self.n + a] = Some(Mark::Circle);
        }
    }

    pub fn certify_nonadjacent(&mut self, a: usize, b: usize, sepset: NodeSet) {
        debug_assert!(!self.adjacent(a, b));
        self.nonadj.entry(key(a, b)).or_insert(sepset);
    }

    #[inline]
    pub fn endpoint(&self, other: usize, at: usize) -> Option<Mark> {
        self.marks[other * self.n + at]
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.marks[a * self.n + b].is_some()
    }

    #[inline]
    pub fn nonadjacent(&self, a: usize, b: usize) -> bool {
        self.nonadj.contains_key(&key(a, b))
    }

    pub fn sepset(&self, a: usize, b: usize) -> Option<&NodeSet> {
        self.nonadj.get(&key(a, b))
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&w| self.marks[v * self.n + w].is_some())
    }

    fn is(&self, other: usize, at: usize, m: Mark) -> bool {
        self.endpoint(other, at) == Some(m)
    }

    /// `from -> to`.
    fn directed(&self, from: usize, to: usize) -> bool {
        self.is(to, from, Mark::Tail) && self.is(from, to, Mark::Arrow)
    }

    /// Sets the mark at `at` on the edge `other - at`. Returns whether the
    /// graph changed.
    pub fn set_mark(&mut self, other: usize, at: usize, mark: Mark, rule: &'static str) -> bool {
        let idx = other * self.n + at;
        match self.marks[idx] {
            None => false,
            Some(Mark::Circle) if mark != Mark::Circle => {
                self.marks[idx] = Some(mark);
                self.firings.push(Firing {
                    rule,
                    edge: (self.labels[other].clone(), self.labels[at].clone()),
                    at: self.labels[at].clone(),
                    mark,
                });
                true
            }
            Some(m) if m == mark || mark == Mark::Circle => false,
            Some(m) => {
                self.conflicts.push(Conflict {
                    edge: (self.labels[other].clone(), self.labels[at].clone()),
                    at: self.labels[at].clone(),
                    kept: m,
                    rejected: mark,
                    rule,
                });
                false
            }
        }
    }

    /// Orients `a *-> b <-* c` for every certified unshielded triple whose
    /// separating set excludes `b`.
    pub fn orient_colliders(&mut self) -> bool {
        let mut changed = false;
        for b in 0..self.n {
            let nb: Vec<usize> = self.neighbors(b).collect();
            for (i, &a) in nb.iter().enumerate() {
                for &c in &nb[i + 1..] {
                    if let Some(s) = self.sepset(a, c) {
                        if !s.contains(&b) {
                            changed |= self.set_mark(a, b, Mark::Arrow, "R0");
                            changed |= self.set_mark(c, b, Mark::Arrow, "R0");
                        }
                    }
                }
            }
        }
        changed
    }

    /// Applies the orientation rules until a fixed point.
    pub fn apply_rules(&mut self) {
        loop {
            let mut changed = false;
            changed |= self.rule1();
            changed |= self.rule2();
            changed |= self.rule3();
            changed |= self.rule4();
            changed |= self.rule8();
            changed |= self.rule9();
            changed |= self.rule10();
            if !changed {
                break;
            }
        }
    }

    /// `a *-> b o-* c`, `a`,`c` non-adjacent: `b -> c`.
    fn rule1(&mut self) -> bool {
        let mut changed = false;
        for b in 0..self.n {
            let nb: Vec<usize> = self.neighbors(b).collect();
            for &a in &nb {
                if !self.is(a, b, Mark::Arrow) {
                    continue;
                }
                for &c in &nb {
                    if c != a && self.is(c, b, Mark::Circle) && self.nonadjacent(a, c) {
                        changed |= self.set_mark(c, b, Mark::Tail, "R1");
                        changed |= self.set_mark(b, c, Mark::Arrow, "R1");
                    }
                }
            }
        }
        changed
    }

    /// `a -> b *-> c` or `a *-> b -> c`, with `a *-o c`: arrowhead at `c`.
    fn rule2(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.n {
            for c in self.neighbors(a).collect::<Vec<_>>() {
                if !self.is(a, c, Mark::Circle) {
                    continue;
                }
                let fires = self.neighbors(a).any(|b| {
                    b != c
                        && self.adjacent(b, c)
                        && ((self.directed(a, b) && self.is(b, c, Mark::Arrow))
                            || (self.is(a, b, Mark::Arrow) && self.directed(b, c)))
                });
                if fires {
                    changed |= self.set_mark(a, c, Mark::Arrow, "R2");
                }
            }
        }
        changed
    }

    /// `a *-> b <-* c`, `a *-o t o-* c`, `a`,`c` non-adjacent, `t *-o b`:
    /// arrowhead at `b` on `t - b`.
    fn rule3(&mut self) -> bool {
        let mut changed = false;
        for b in 0..self.n {
            let nb: Vec<usize> = self.neighbors(b).collect();
            for &t in &nb {
                if !self.is(t, b, Mark::Circle) {
                    continue;
                }
                let fires = nb.iter().any(|&a| {
                    a != t
                        && self.is(a, b, Mark::Arrow)
                        && self.is(a, t, Mark::Circle)
                        && nb.iter().any(|&c| {
                            c != t
                                && c != a
                                && self.is(c, b, Mark::Arrow)
                                && self.is(c, t, Mark::Circle)
                                && self.nonadjacent(a, c)
                        })
                });
                if fires {
                    changed |= self.set_mark(t, b, Mark::Arrow, "R3");
                }
            }
        }
        changed
    }

    /// Discriminating paths `<th, ..., a, b, c>` for `b` with `b o-* c`.
    fn rule4(&mut self) -> bool {
        let mut changed = false;
        for c in 0..self.n {
            for b in self.neighbors(c).collect::<Vec<_>>() {
                if !self.is(c, b, Mark::Circle) {
                    continue;
                }
                if let Some((th, a)) = self.discriminating_search(b, c) {
                    let in_sep = self.sepset(th, c).map_or(false, |s| s.contains(&b));
                    if in_sep {
                        changed |= self.set_mark(c, b, Mark::Tail, "R4");
                        changed |= self.set_mark(b, c, Mark::Arrow, "R4");
                    } else {
                        changed |= self.set_mark(c, b, Mark::Arrow, "R4");
                        changed |= self.set_mark(b, c, Mark::Arrow, "R4");
                        changed |= self.set_mark(a, b, Mark::Arrow, "R4");
                        changed |= self.set_mark(b, a, Mark::Arrow, "R4");
                    }
                }
            }
        }
        changed
    }

    /// Breadth-first search backwards from `b` over colliders that are parents
    /// of `c`. Returns `(th, a)`: the first endpoint certified non-adjacent to
    /// `c`, and the path vertex next to `b`.
    fn discriminating_search(&self, b: usize, c: usize) -> Option<(usize, usize)> {
        let mut seen = vec![false; self.n];
        let mut first = vec![usize::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[b] = true;
        seen[c] = true;
        // each queued v is a parent of c with an arrowhead at v from its path successor
        for a in self.neighbors(b) {
            if !seen[a] && self.is(b, a, Mark::Arrow) && self.directed(a, c) {
                seen[a] = true;
                first[a] = a;
                queue.push_back(a);
            }
        }
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if seen[w] || !self.is(w, v, Mark::Arrow) {
                    continue;
                }
                if self.nonadjacent(w, c) {
                    return Some((w, first[v]));
                }
                if self.directed(w, c) && self.is(v, w, Mark::Arrow) {
                    seen[w] = true;
                    first[w] = first[v];
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// `a -> b -> c` (or `a -o b -> c`) with `a o-> c`: `a -> c`.
    fn rule8(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.n {
            for c in self.neighbors(a).collect::<Vec<_>>() {
                if !(self.is(c, a, Mark::Circle) && self.is(a, c, Mark::Arrow)) {
                    continue;
                }
                let fires = self.neighbors(a).any(|b| {
                    b != c
                        && self.directed(b, c)
                        && self.is(b, a, Mark::Tail)
                        && (self.is(a, b, Mark::Arrow) || self.is(a, b, Mark::Circle))
                });
                if fires {
                    changed |= self.set_mark(c, a, Mark::Tail, "R8");
                }
            }
        }
        changed
    }

    /// Edge `u - v` is possibly directed from `u` to `v`.
    fn pd_edge(&self, u: usize, v: usize) -> bool {
        matches!(self.endpoint(v, u), Some(m) if m != Mark::Arrow) && matches!(self.endpoint(u, v), Some(m) if m != Mark::Tail)
    }

    /// All second vertices `m` of uncovered possibly directed paths
    /// `<start, m, ..., end>`, for paths not passing through `avoid`.
    fn uncovered_pd_first_vertices(&self, start: usize, end: usize, avoid: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for m in self.neighbors(start).collect::<Vec<_>>() {
            if m == avoid || !self.pd_edge(start, m) {
                continue;
            }
            if m == end {
                out.push(m);
                continue;
            }
            let mut on_path = vec![false; self.n];
            on_path[start] = true;
            on_path[m] = true;
            on_path[avoid] = true;
            if self.extend_uncovered(start, m, end, &mut on_path) {
                out.push(m);
            }
        }
        out
    }

    fn extend_uncovered(&self, prev: usize, cur: usize, end: usize, on_path: &mut [bool]) -> bool {
        for next in self.neighbors(cur).collect::<Vec<_>>() {
            if on_path[next] || !self.pd_edge(cur, next) || !self.nonadjacent(prev, next) {
                continue;
            }
            if next == end {
                return true;
            }
            on_path[next] = true;
            let found = self.extend_uncovered(cur, next, end, on_path);
            on_path[next] = false;
            if found {
                return true;
            }
        }
        false
    }

    /// `a o-> c` with an uncovered possibly directed path `<a, b, t, ..., c>`
    /// where `b` and `c` are non-adjacent: `a -> c`.
    fn rule9(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.n {
            for c in self.neighbors(a).collect::<Vec<_>>() {
                if !(self.is(c, a, Mark::Circle) && self.is(a, c, Mark::Arrow)) {
                    continue;
                }
                let mut fires = false;
                for b in self.neighbors(a).collect::<Vec<_>>() {
                    if b == c || !self.pd_edge(a, b) || !self.nonadjacent(b, c) {
                        continue;
                    }
                    let mut on_path = vec![false; self.n];
                    on_path[a] = true;
                    on_path[b] = true;
                    if self.extend_uncovered(a, b, c, &mut on_path) {
                        fires = true;
                        break;
                    }
                }
                if fires {
                    changed |= self.set_mark(c, a, Mark::Tail, "R9");
                }
            }
        }
        changed
    }

    /// `a o-> c`, `b -> c <- t`, uncovered possibly directed paths from `a`
    /// to `b` and to `t` whose second vertices are distinct and non-adjacent:
    /// `a -> c`.
    fn rule10(&mut self) -> bool {
        let mut changed = false;
        for a in 0..self.n {
            for c in self.neighbors(a).collect::<Vec<_>>() {
                if !(self.is(c, a, Mark::Circle) && self.is(a, c, Mark::Arrow)) {
                    continue;
                }
                let parents: Vec<usize> = self.neighbors(c).filter(|&p| p != a && self.directed(p, c)).collect();
                let mut fires = false;
                'outer: for (i, &b) in parents.iter().enumerate() {
                    let mu = self.uncovered_pd_first_vertices(a, b, c);
                    if mu.is_empty() {
                        continue;
                    }
                    for &t in &parents[i + 1..] {
                        let om = self.uncovered_pd_first_vertices(a, t, c);
                        for &m in &mu {
                            for &w in &om {
                                if m != w && self.nonadjacent(m, w) {
                                    fires = true;
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                if fires {
                    changed |= self.set_mark(c, a, Mark::Tail, "R10");
                }
            }
        }
        changed
    }

    pub fn to_graph(&self) -> MixedGraph {
        MixedGraph::from_marks(GraphKind::Pag, self.labels.clone(), self.marks.clone())
    }

    /// Runs the full procedure on a fully known skeleton.
    pub fn orient_all(&mut self) {
        self.orient_colliders();
        self.apply_rules();
    }
}

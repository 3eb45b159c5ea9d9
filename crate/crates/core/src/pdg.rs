//! Program dependency graph over canonical statements.
//!
//! An edge `a -> b` means statement `a` depends on `b`: either `a` reads a
//! name whose reaching definition is `b` (data), or `b` is the nearest guard
//! enclosing `a` (control). Reaching definitions follow the structured form:
//! definitions made inside a guarded body merge with the ones from before
//! the guard once the body ends, because the body may not run. A `while`
//! guard additionally depends on the in-body recomputation of its condition;
//! those are the only edges that point forward.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::canon::{CanonicalProgram, StmtKind};

/// Separator between statements of a serialized path or n-gram window.
pub const PATH_SEP: &str = "⇐";
/// Separator between the paths that make up one PDG n-gram term.
pub const TERM_SEP: &str = " ∥ ";
/// Upper bound on paths enumerated per anchor. Hub statements (a temp read
/// by dozens of lines) can otherwise explode combinatorially at n = 7.
pub const MAX_PATHS_PER_ANCHOR: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    deps: Vec<Vec<usize>>,
}

impl DependencyGraph {
    fn new(node_count: usize) -> Self {
        DependencyGraph {
            node_count,
            edges: BTreeSet::new(),
            deps: vec![Vec::new(); node_count],
        }
    }

    fn add(&mut self, from: usize, to: usize) {
        if from != to && self.edges.insert((from, to)) {
            self.deps[from].push(to);
        }
    }

    fn seal(&mut self) {
        for d in &mut self.deps {
            d.sort_unstable();
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Sorted, deduplicated `(from, to)` pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Statements `node` depends on, ascending.
    pub fn dependencies(&self, node: usize) -> &[usize] {
        &self.deps[node]
    }
}

struct Frame {
    guard: usize,
    body_depth: usize,
    is_while: bool,
    before: HashMap<String, BTreeSet<usize>>,
}

struct Unit {
    defs: HashMap<String, BTreeSet<usize>>,
    frames: Vec<Frame>,
}

fn merge(into: &mut HashMap<String, BTreeSet<usize>>, from: HashMap<String, BTreeSet<usize>>) {
    for (k, v) in from {
        into.entry(k).or_default().extend(v);
    }
}

pub fn build_pdg(program: &CanonicalProgram) -> DependencyGraph {
    let stmts = &program.statements;
    let mut g = DependencyGraph::new(stmts.len());
    let mut cur = Unit {
        defs: HashMap::new(),
        frames: Vec::new(),
    };
    let mut outer: Vec<Unit> = Vec::new();

    let close = |g: &mut DependencyGraph, unit: &mut Unit, frame: Frame| {
        if frame.is_while {
            for r in &stmts[frame.guard].reads {
                if let Some(ds) = unit.defs.get(r) {
                    for &d in ds.iter().filter(|&&d| d > frame.guard) {
                        g.add(frame.guard, d);
                    }
                }
            }
        }
        merge(&mut unit.defs, frame.before);
    };

    for (i, s) in stmts.iter().enumerate() {
        while cur.frames.last().is_some_and(|f| f.body_depth > s.depth) {
            let f = cur.frames.pop().expect("frame");
            close(&mut g, &mut cur, f);
        }
        if s.kind == StmtKind::End {
            while let Some(f) = cur.frames.pop() {
                close(&mut g, &mut cur, f);
            }
            if let Some(u) = outer.pop() {
                cur = u;
            }
            continue;
        }
        if let Some(f) = cur.frames.last() {
            g.add(i, f.guard);
        }
        if s.kind == StmtKind::Begin {
            outer.push(std::mem::replace(
                &mut cur,
                Unit {
                    defs: HashMap::new(),
                    frames: Vec::new(),
                },
            ));
            continue;
        }
        for r in &s.reads {
            if let Some(ds) = cur.defs.get(r) {
                for &d in ds {
                    g.add(i, d);
                }
            }
        }
        for w in &s.writes {
            let e = cur.defs.entry(w.clone()).or_default();
            if s.kills() {
                e.clear();
            }
            e.insert(i);
        }
        if s.kind.is_guard() {
            cur.frames.push(Frame {
                guard: i,
                body_depth: s.depth + 1,
                is_while: s.kind == StmtKind::GuardWhile,
                before: cur.defs.clone(),
            });
        }
    }
    g.seal();
    g
}

/// Backward dependency paths from one anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackwardPathSet {
    pub anchor: usize,
    pub paths: Vec<Vec<usize>>,
}

/// All simple paths of `n` nodes starting at `anchor`, plus shorter paths
/// that cannot be extended.
pub fn backward_paths(g: &DependencyGraph, anchor: usize, n: usize) -> BackwardPathSet {
    backward_paths_with(g, anchor, n, true)
}

/// As [`backward_paths`]; with `keep_maximal = false` truncated paths are
/// dropped (an anchor may then have no paths at all).
pub fn backward_paths_with(
    g: &DependencyGraph,
    anchor: usize,
    n: usize,
    keep_maximal: bool,
) -> BackwardPathSet {
    assert!(n >= 1, "gram length must be at least 1");
    assert!(anchor < g.node_count, "anchor out of range");
    let mut paths = Vec::new();
    let mut path = vec![anchor];
    walk(g, n, keep_maximal, &mut path, &mut paths);
    BackwardPathSet { anchor, paths }
}

fn walk(
    g: &DependencyGraph,
    n: usize,
    keep_maximal: bool,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if out.len() >= MAX_PATHS_PER_ANCHOR {
        return;
    }
    if path.len() == n {
        out.push(path.clone());
        return;
    }
    let last = *path.last().expect("non-empty path");
    let mut extended = false;
    for &next in g.dependencies(last) {
        if path.contains(&next) {
            continue;
        }
        extended = true;
        path.push(next);
        walk(g, n, keep_maximal, path, out);
        path.pop();
    }
    if !extended && keep_maximal {
        out.push(path.clone());
    }
}

/// Statement texts along a path, anchor first, joined with `⇐`.
pub fn serialize_path(program: &CanonicalProgram, path: &[usize]) -> String {
    path.iter()
        .map(|&i| program.statements[i].text.as_str())
        .collect::<Vec<_>>()
        .join(PATH_SEP)
}

/// Graphviz rendering; node labels are statement texts.
pub fn to_dot(program: &CanonicalProgram, g: &DependencyGraph) -> String {
    let mut out = String::from("digraph pdg {\n  node [shape=box, fontname=\"monospace\"];\n");
    for (i, s) in program.statements.iter().enumerate() {
        let label = s.text.replace('\\', "\\\\").replace('"', "\\\"");
        let _ = writeln!(out, "  n{i} [label=\"{i}: {label}\"];");
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}

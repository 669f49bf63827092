//! Mixed graphs with endpoint marks.
//!
//! Every edge is an unordered node pair carrying one [`EdgeMark`] at each end,
//! which lets a single type represent DAGs, CPDAGs, ADMGs, MAGs, PAGs and
//! selection diagrams. Directed `a -> b` is `(Tail at a, Arrow at b)`,
//! undirected is `(Tail, Tail)`, bidirected is `(Arrow, Arrow)` and PAG circles
//! use [`EdgeMark::Circle`].
//!
//! A node pair holds at most one edge. The single exception is an ADMG, where
//! a directed edge and a bidirected edge may share a pair (the "bow" pattern
//! produced by latent projection).

mod chordal;
mod equivalence;
mod separation;
mod surgery;
mod text;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chordal::{detect_selection_bias, is_chordal};
pub use equivalence::{
    ancestral_violations, apply_meek_rules, consistent_extension, cpdag_of, is_maximal, mag_of,
    MeekRule,
};
pub(crate) use equivalence::find_meek_step;
pub use separation::{anterior_set, separated};
pub use surgery::{latent_projection, mutilate};
pub use text::{from_text, to_dot, to_text, ParseError};

/// Mark at one end of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeMark {
    Tail,
    Arrow,
    Circle,
}

impl EdgeMark {
    pub fn symbol(self) -> char {
        match self {
            EdgeMark::Tail => 't',
            EdgeMark::Arrow => 'a',
            EdgeMark::Circle => 'c',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            't' => Some(EdgeMark::Tail),
            'a' => Some(EdgeMark::Arrow),
            'c' => Some(EdgeMark::Circle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphKind {
    Dag,
    Cpdag,
    Admg,
    Mag,
    Pag,
    SelectionDiagram,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Dag => "DAG",
            GraphKind::Cpdag => "CPDAG",
            GraphKind::Admg => "ADMG",
            GraphKind::Mag => "MAG",
            GraphKind::Pag => "PAG",
            GraphKind::SelectionDiagram => "SelectionDiagram",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "DAG" => Some(GraphKind::Dag),
            "CPDAG" => Some(GraphKind::Cpdag),
            "ADMG" => Some(GraphKind::Admg),
            "MAG" => Some(GraphKind::Mag),
            "PAG" => Some(GraphKind::Pag),
            "SelectionDiagram" => Some(GraphKind::SelectionDiagram),
            _ => None,
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a variable stands for in a configurable-system model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Option,
    Performance,
    Latent,
    SNode,
    SelectionVar,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Option => "option",
            NodeRole::Performance => "performance",
            NodeRole::Latent => "latent",
            NodeRole::SNode => "s_node",
            NodeRole::SelectionVar => "selection_var",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "option" => Some(NodeRole::Option),
            "performance" => Some(NodeRole::Performance),
            "latent" => Some(NodeRole::Latent),
            "s_node" => Some(NodeRole::SNode),
            "selection_var" => Some(NodeRole::SelectionVar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("invalid node name `{0}` (expected [A-Za-z0-9_.-]+)")]
    InvalidName(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("nodes `{0}` and `{1}` are already joined by an edge")]
    DuplicateEdge(String, String),
    #[error("node sets overlap at `{0}`")]
    OverlappingSets(String),
    #[error("graph kind {found} not accepted here (expected {expected})")]
    WrongKind { expected: String, found: GraphKind },
    #[error("invalid {kind}: {reason}")]
    Invalid { kind: GraphKind, reason: String },
    #[error("directed cycle through `{0}`")]
    Cyclic(String),
    #[error("{0}")]
    Input(String),
}

/// One edge as seen from a canonical orientation (`a` index < `b` index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub mark_a: EdgeMark,
    pub mark_b: EdgeMark,
}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

#[derive(Debug, Clone)]
pub struct MixedGraph {
    kind: GraphKind,
    names: Vec<String>,
    index: HashMap<String, usize>,
    roles: Vec<Option<NodeRole>>,
    /// `marks[a * n + b]` is the mark at `b` on the edge joining `a` and `b`.
    marks: Vec<Option<EdgeMark>>,
    /// ADMG only: an additional bidirected edge next to a directed one.
    bow: Vec<bool>,
}

impl MixedGraph {
    pub fn new(kind: GraphKind) -> Self {
        MixedGraph {
            kind,
            names: Vec::new(),
            index: HashMap::new(),
            roles: Vec::new(),
            marks: Vec::new(),
            bow: Vec::new(),
        }
    }

    pub fn with_nodes<S: AsRef<str>>(kind: GraphKind, names: &[S]) -> Result<Self, GraphError> {
        let mut g = MixedGraph::new(kind);
        for n in names {
            g.add_node(n.as_ref())?;
        }
        Ok(g)
    }

    /// Builds a DAG from `a -> b` pairs; nodes are created in order of appearance.
    pub fn dag_from_edges(edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let mut g = MixedGraph::new(GraphKind::Dag);
        for (a, b) in edges {
            g.ensure_node(a)?;
            g.ensure_node(b)?;
            g.add_directed(a, b)?;
        }
        g.validate()?;
        Ok(g)
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn set_kind(&mut self, kind: GraphKind) {
        self.kind = kind;
    }

    pub fn with_kind(mut self, kind: GraphKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, GraphError> {
        names.iter().map(|s| self.index_of(s.as_ref())).collect()
    }

    pub fn names_of(&self, idx: impl IntoIterator<Item = usize>) -> Vec<String> {
        idx.into_iter().map(|i| self.names[i].clone()).collect()
    }

    pub fn add_node(&mut self, name: &str) -> Result<usize, GraphError> {
        if !valid_name(name) {
            return Err(GraphError::InvalidName(name.to_string()));
        }
        if self.index.contains_key(name) {
            return Err(GraphError::DuplicateNode(name.to_string()));
        }
        let old = self.n();
        let n = old + 1;
        let mut marks = vec![None; n * n];
        let mut bow = vec![false; n * n];
        for a in 0..old {
            for b in 0..old {
                marks[a * n + b] = self.marks[a * old + b];
                bow[a * n + b] = self.bow[a * old + b];
            }
        }
        self.marks = marks;
        self.bow = bow;
        self.names.push(name.to_string());
        self.roles.push(None);
        self.index.insert(name.to_string(), old);
        Ok(old)
    }

    pub fn ensure_node(&mut self, name: &str) -> Result<usize, GraphError> {
        match self.index.get(name) {
            Some(&i) => Ok(i),
            None => self.add_node(name),
        }
    }

    pub fn role(&self, i: usize) -> Option<NodeRole> {
        self.roles[i]
    }

    pub fn role_of(&self, name: &str) -> Result<Option<NodeRole>, GraphError> {
        Ok(self.roles[self.index_of(name)?])
    }

    pub fn set_role(&mut self, name: &str, role: NodeRole) -> Result<(), GraphError> {
        let i = self.index_of(name)?;
        self.roles[i] = Some(role);
        Ok(())
    }

    pub fn set_role_idx(&mut self, i: usize, role: Option<NodeRole>) {
        self.roles[i] = role;
    }

    /// Nodes carrying `role`, in node order.
    pub fn nodes_with_role(&self, role: NodeRole) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.roles[i] == Some(role)).collect()
    }

    /// Mark at `to` on the (primary) edge between `from` and `to`.
    #[inline]
    pub fn endpoint(&self, from: usize, to: usize) -> Option<EdgeMark> {
        self.marks[from * self.n() + to]
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.marks[a * self.n() + b].is_some()
    }

    #[inline]
    pub fn has_bow(&self, a: usize, b: usize) -> bool {
        self.bow[a * self.n() + b]
    }

    /// `a -> b`
    #[inline]
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.endpoint(b, a) == Some(EdgeMark::Tail) && self.endpoint(a, b) == Some(EdgeMark::Arrow)
    }

    #[inline]
    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.endpoint(a, b) == Some(EdgeMark::Tail) && self.endpoint(b, a) == Some(EdgeMark::Tail)
    }

    #[inline]
    pub fn is_bidirected(&self, a: usize, b: usize) -> bool {
        self.has_bow(a, b)
            || (self.endpoint(a, b) == Some(EdgeMark::Arrow)
                && self.endpoint(b, a) == Some(EdgeMark::Arrow))
    }

    /// Adds an edge with `mark_a` at `a` and `mark_b` at `b`.
    pub fn add_edge_idx(
        &mut self,
        a: usize,
        b: usize,
        mark_a: EdgeMark,
        mark_b: EdgeMark,
    ) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(self.names[a].clone()));
        }
        let n = self.n();
        if self.adjacent(a, b) {
            let existing = (self.endpoint(b, a).unwrap(), self.endpoint(a, b).unwrap());
            let bidir = (EdgeMark::Arrow, EdgeMark::Arrow);
            let new_is_bidir = (mark_a, mark_b) == bidir;
            let old_is_bidir = existing == bidir;
            let directed = |x: (EdgeMark, EdgeMark)| {
                matches!(
                    x,
                    (EdgeMark::Tail, EdgeMark::Arrow) | (EdgeMark::Arrow, EdgeMark::Tail)
                )
            };
            if self.kind == GraphKind::Admg && !self.has_bow(a, b) {
                if new_is_bidir && directed(existing) {
                    self.bow[a * n + b] = true;
                    self.bow[b * n + a] = true;
                    return Ok(());
                }
                if old_is_bidir && directed((mark_a, mark_b)) {
                    self.marks[a * n + b] = Some(mark_b);
                    self.marks[b * n + a] = Some(mark_a);
                    self.bow[a * n + b] = true;
                    self.bow[b * n + a] = true;
                    return Ok(());
                }
            }
            return Err(GraphError::DuplicateEdge(
                self.names[a].clone(),
                self.names[b].clone(),
            ));
        }
        self.marks[a * n + b] = Some(mark_b);
        self.marks[b * n + a] = Some(mark_a);
        Ok(())
    }

    pub fn add_edge(
        &mut self,
        a: &str,
        b: &str,
        mark_a: EdgeMark,
        mark_b: EdgeMark,
    ) -> Result<(), GraphError> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        self.add_edge_idx(ia, ib, mark_a, mark_b)
    }

    pub fn add_directed(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        self.add_edge(a, b, EdgeMark::Tail, EdgeMark::Arrow)
    }

    pub fn add_bidirected(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        self.add_edge(a, b, EdgeMark::Arrow, EdgeMark::Arrow)
    }

    pub fn add_undirected(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        self.add_edge(a, b, EdgeMark::Tail, EdgeMark::Tail)
    }

    /// Overwrites (or creates) the primary edge between `a` and `b`.
    pub fn set_edge_idx(&mut self, a: usize, b: usize, mark_a: EdgeMark, mark_b: EdgeMark) {
        assert_ne!(a, b, "self-loop");
        let n = self.n();
        self.marks[a * n + b] = Some(mark_b);
        self.marks[b * n + a] = Some(mark_a);
    }

    /// Sets the mark at `to` on an existing edge between `from` and `to`.
    pub fn set_endpoint(&mut self, from: usize, to: usize, mark: EdgeMark) {
        let n = self.n();
        debug_assert!(self.marks[from * n + to].is_some());
        self.marks[from * n + to] = Some(mark);
    }

    pub fn remove_edge_idx(&mut self, a: usize, b: usize) {
        let n = self.n();
        self.marks[a * n + b] = None;
        self.marks[b * n + a] = None;
        self.bow[a * n + b] = false;
        self.bow[b * n + a] = false;
    }

    /// Removes only the extra bidirected edge of a bow, if any.
    pub(crate) fn remove_bow(&mut self, a: usize, b: usize) {
        let n = self.n();
        self.bow[a * n + b] = false;
        self.bow[b * n + a] = false;
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&b| self.adjacent(a, b))
    }

    /// Every edge touching `a` as `(other, mark at a, mark at other)`, bows included.
    pub fn incident(&self, a: usize) -> impl Iterator<Item = (usize, EdgeMark, EdgeMark)> + '_ {
        (0..self.n()).flat_map(move |b| {
            let primary = self
                .endpoint(a, b)
                .map(|mb| (b, self.endpoint(b, a).unwrap(), mb));
            let extra = self
                .has_bow(a, b)
                .then_some((b, EdgeMark::Arrow, EdgeMark::Arrow));
            primary.into_iter().chain(extra)
        })
    }

    pub fn parents(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&u| self.is_directed(u, v))
    }

    pub fn children(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&u| self.is_directed(v, u))
    }

    pub fn spouses(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&u| self.is_bidirected(v, u))
    }

    /// Canonical edge list, ordered by `(a, b)` with `a < b`. Bows appear twice.
    pub fn edges(&self) -> Vec<Edge> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if let Some(mb) = self.endpoint(a, b) {
                    out.push(Edge {
                        a,
                        b,
                        mark_a: self.endpoint(b, a).unwrap(),
                        mark_b: mb,
                    });
                }
                if self.has_bow(a, b) {
                    out.push(Edge {
                        a,
                        b,
                        mark_a: EdgeMark::Arrow,
                        mark_b: EdgeMark::Arrow,
                    });
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// `set` plus all nodes with a directed path into it.
    pub fn ancestors_mask(&self, set: &[usize]) -> Vec<bool> {
        self.closure(set, |g, v, u| g.is_directed(u, v))
    }

    /// `set` plus all nodes reachable from it along directed edges.
    pub fn descendants_mask(&self, set: &[usize]) -> Vec<bool> {
        self.closure(set, |g, v, u| g.is_directed(v, u))
    }

    pub(crate) fn closure(
        &self,
        set: &[usize],
        step: impl Fn(&MixedGraph, usize, usize) -> bool,
    ) -> Vec<bool> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in set {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for u in 0..n {
                if !seen[u] && self.adjacent(v, u) && step(self, v, u) {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Topological order of the directed part, or the node on a cycle.
    pub fn topological_order(&self) -> Result<Vec<usize>, GraphError> {
        let n = self.n();
        let mut indeg: Vec<usize> = (0..n).map(|v| self.parents(v).count()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children(v).collect::<Vec<_>>() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).unwrap();
            return Err(GraphError::Cyclic(self.names[stuck].clone()));
        }
        Ok(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    /// Induced subgraph on `keep` (node order preserved).
    pub fn induced(&self, keep: &[usize]) -> MixedGraph {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut g = MixedGraph::new(self.kind);
        for &i in &keep {
            let j = g.add_node(&self.names[i]).expect("names already valid");
            g.roles[j] = self.roles[i];
        }
        for (x, &i) in keep.iter().enumerate() {
            for (y, &j) in keep.iter().enumerate().skip(x + 1) {
                if let Some(mj) = self.endpoint(i, j) {
                    g.set_edge_idx(x, y, self.endpoint(j, i).unwrap(), mj);
                }
                if self.has_bow(i, j) {
                    let n = g.n();
                    g.bow[x * n + y] = true;
                    g.bow[y * n + x] = true;
                }
            }
        }
        g
    }

    /// Same nodes and roles, no edges.
    pub fn empty_like(&self) -> MixedGraph {
        let mut g = self.clone();
        g.marks.iter_mut().for_each(|m| *m = None);
        g.bow.iter_mut().for_each(|m| *m = false);
        g
    }

    /// Checks the structural invariants attached to the graph kind.
    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |reason: String| GraphError::Invalid {
            kind: self.kind,
            reason,
        };
        if self.kind != GraphKind::Admg && self.bow.iter().any(|&b| b) {
            return Err(invalid("parallel edges are only allowed in an ADMG".into()));
        }
        for (i, r) in self.roles.iter().enumerate() {
            if *r == Some(NodeRole::SNode) && self.kind != GraphKind::SelectionDiagram {
                return Err(invalid(format!(
                    "s_node role on `{}` outside a selection diagram",
                    self.names[i]
                )));
            }
        }
        let edges = self.edges();
        match self.kind {
            GraphKind::Dag => {
                for e in &edges {
                    if !matches!(
                        (e.mark_a, e.mark_b),
                        (EdgeMark::Tail, EdgeMark::Arrow) | (EdgeMark::Arrow, EdgeMark::Tail)
                    ) {
                        return Err(invalid(format!(
                            "edge {}-{} is not directed",
                            self.names[e.a], self.names[e.b]
                        )));
                    }
                }
                self.topological_order()?;
            }
            GraphKind::Cpdag => {
                if edges
                    .iter()
                    .any(|e| e.mark_a == EdgeMark::Circle || e.mark_b == EdgeMark::Circle)
                    || edges
                        .iter()
                        .any(|e| e.mark_a == EdgeMark::Arrow && e.mark_b == EdgeMark::Arrow)
                {
                    return Err(invalid("only directed and undirected edges allowed".into()));
                }
                self.topological_order()?;
            }
            GraphKind::Admg | GraphKind::SelectionDiagram => {
                for e in &edges {
                    let ok = matches!(
                        (e.mark_a, e.mark_b),
                        (EdgeMark::Tail, EdgeMark::Arrow)
                            | (EdgeMark::Arrow, EdgeMark::Tail)
                            | (EdgeMark::Arrow, EdgeMark::Arrow)
                    );
                    if !ok {
                        return Err(invalid(format!(
                            "edge {}-{} must be directed or bidirected",
                            self.names[e.a], self.names[e.b]
                        )));
                    }
                }
                self.topological_order()?;
                if self.kind == GraphKind::SelectionDiagram {
                    for s in self.nodes_with_role(NodeRole::SNode) {
                        for (other, at_s, at_other) in self.incident(s) {
                            if !(at_s == EdgeMark::Tail && at_other == EdgeMark::Arrow) {
                                return Err(invalid(format!(
                                    "S-node `{}` has a non-outgoing edge with `{}`",
                                    self.names[s], self.names[other]
                                )));
                            }
                        }
                    }
                }
            }
            GraphKind::Mag => {
                if edges
                    .iter()
                    .any(|e| e.mark_a == EdgeMark::Circle || e.mark_b == EdgeMark::Circle)
                {
                    return Err(invalid("circle marks are not allowed in a MAG".into()));
                }
                if let Some(v) = ancestral_violations(self).into_iter().next() {
                    return Err(invalid(v));
                }
            }
            GraphKind::Pag => {}
        }
        Ok(())
    }

    fn canonical_edges(&self) -> BTreeSet<(String, String, EdgeMark, EdgeMark)> {
        self.edges()
            .into_iter()
            .map(|e| {
                let (a, b) = (&self.names[e.a], &self.names[e.b]);
                if a <= b {
                    (a.clone(), b.clone(), e.mark_a, e.mark_b)
                } else {
                    (b.clone(), a.clone(), e.mark_b, e.mark_a)
                }
            })
            .collect()
    }

    fn canonical_roles(&self) -> BTreeSet<(String, NodeRole)> {
        (0..self.n())
            .filter_map(|i| self.roles[i].map(|r| (self.names[i].clone(), r)))
            .collect()
    }
}

/// Graphs compare by node names, roles and edges, independent of node order.
impl PartialEq for MixedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.n() == other.n()
            && self.names.iter().all(|n| other.contains(n))
            && self.canonical_roles() == other.canonical_roles()
            && self.canonical_edges() == other.canonical_edges()
    }
}

impl Eq for MixedGraph {}

impl fmt::Display for MixedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_text(self))
    }
}

//! Line-oriented graph documents and DOT export.
//!
//! ```text
//! kind: DAG
//! nodes: A,B,C
//! role: A=option
//! edge: A t-a C
//! ```
//!
//! Marks are `t` (tail), `a` (arrow) and `c` (circle); the first mark sits at
//! the left node. Blank lines and `#` comments are ignored. A missing `kind:`
//! line is inferred from the marks.

use std::fmt::Write as _;

use thiserror::Error;

use super::{EdgeMark, GraphKind, MixedGraph, NodeRole};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, field `{field}`: {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

pub fn to_text(g: &MixedGraph) -> String {
    let mut s = String::new();
    writeln!(s, "kind: {}", g.kind()).unwrap();
    writeln!(s, "nodes: {}", g.names().join(",")).unwrap();
    for i in 0..g.n() {
        if let Some(r) = g.role(i) {
            writeln!(s, "role: {}={}", g.name(i), r.as_str()).unwrap();
        }
    }
    for e in g.edges() {
        writeln!(
            s,
            "edge: {} {}-{} {}",
            g.name(e.a),
            e.mark_a.symbol(),
            e.mark_b.symbol(),
            g.name(e.b)
        )
        .unwrap();
    }
    s
}

fn err(line: usize, field: &str, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn from_text(input: &str) -> Result<MixedGraph, ParseError> {
    let mut kind: Option<GraphKind> = None;
    let mut nodes: Option<(usize, Vec<String>)> = None;
    let mut roles = Vec::new();
    let mut edges = Vec::new();
    for (no, raw) in input.lines().enumerate() {
        let line_no = no + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(err(line_no, "line", format!("expected `key: value`, got `{line}`")));
        };
        let value = value.trim();
        match key.trim() {
            "kind" => {
                kind = Some(
                    GraphKind::parse(value)
                        .ok_or_else(|| err(line_no, "kind", format!("unknown kind `{value}`")))?,
                );
            }
            "nodes" => {
                if nodes.is_some() {
                    return Err(err(line_no, "nodes", "duplicate nodes header"));
                }
                let list = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
                nodes = Some((line_no, list));
            }
            "role" => {
                let (name, role) = value
                    .split_once('=')
                    .ok_or_else(|| err(line_no, "role", "expected `name=role`"))?;
                let role = NodeRole::parse(role.trim())
                    .ok_or_else(|| err(line_no, "role", format!("unknown role `{}`", role.trim())))?;
                roles.push((line_no, name.trim().to_string(), role));
            }
            "edge" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(err(line_no, "edge", "expected `a <mark>-<mark> b`"));
                }
                let marks: Vec<char> = parts[1].chars().collect();
                if marks.len() != 3 || marks[1] != '-' {
                    return Err(err(line_no, "edge", format!("bad mark pair `{}`", parts[1])));
                }
                let ma = EdgeMark::from_symbol(marks[0])
                    .ok_or_else(|| err(line_no, "edge", format!("bad mark `{}`", marks[0])))?;
                let mb = EdgeMark::from_symbol(marks[2])
                    .ok_or_else(|| err(line_no, "edge", format!("bad mark `{}`", marks[2])))?;
                edges.push((line_no, parts[0].to_string(), ma, mb, parts[2].to_string()));
            }
            other => return Err(err(line_no, other, "unknown field")),
        }
    }
    let (nodes_line, names) = nodes.ok_or_else(|| err(0, "nodes", "missing nodes header"))?;
    let kind = kind.unwrap_or_else(|| infer_kind(edges.iter().map(|e| (e.2, e.3))));
    let mut g = MixedGraph::new(kind);
    for name in &names {
        g.add_node(name)
            .map_err(|e| err(nodes_line, "nodes", e.to_string()))?;
    }
    for (line_no, name, role) in roles {
        g.set_role(&name, role)
            .map_err(|e| err(line_no, "role", e.to_string()))?;
    }
    for (line_no, a, ma, mb, b) in edges {
        g.add_edge(&a, &b, ma, mb)
            .map_err(|e| err(line_no, "edge", e.to_string()))?;
    }
    g.validate().map_err(|e| err(0, "graph", e.to_string()))?;
    Ok(g)
}

fn infer_kind(marks: impl Iterator<Item = (EdgeMark, EdgeMark)>) -> GraphKind {
    let (mut circle, mut undirected, mut bidirected) = (false, false, false);
    for (a, b) in marks {
        circle |= a == EdgeMark::Circle || b == EdgeMark::Circle;
        undirected |= a == EdgeMark::Tail && b == EdgeMark::Tail;
        bidirected |= a == EdgeMark::Arrow && b == EdgeMark::Arrow;
    }
    match (circle, undirected, bidirected) {
        (true, _, _) => GraphKind::Pag,
        (false, true, true) => GraphKind::Mag,
        (false, true, false) => GraphKind::Cpdag,
        (false, false, true) => GraphKind::Admg,
        (false, false, false) => GraphKind::Dag,
    }
}

fn dot_head(m: EdgeMark) -> &'static str {
    match m {
        EdgeMark::Tail => "none",
        EdgeMark::Arrow => "normal",
        EdgeMark::Circle => "odot",
    }
}

/// DOT rendering. Every edge is emitted as `a -> b` with explicit head and
/// tail decorations so all mark combinations are visible.
pub fn to_dot(g: &MixedGraph) -> String {
    let mut s = String::from("digraph G {\n");
    for i in 0..g.n() {
        let shape = match g.role(i) {
            Some(NodeRole::Performance) => " [shape=box]",
            Some(NodeRole::Latent) => " [style=dashed]",
            Some(NodeRole::SNode) | Some(NodeRole::SelectionVar) => " [shape=square]",
            _ => "",
        };
        writeln!(s, "  \"{}\"{};", g.name(i), shape).unwrap();
    }
    for e in g.edges() {
        writeln!(
            s,
            "  \"{}\" -> \"{}\" [dir=both, arrowtail={}, arrowhead={}];",
            g.name(e.a),
            g.name(e.b),
            dot_head(e.mark_a),
            dot_head(e.mark_b)
        )
        .unwrap();
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collider() -> MixedGraph {
        MixedGraph::dag_from_edges(&[("A", "C"), ("B", "C")]).unwrap()
    }

    #[test]
    fn round_trip_examples() {
        let mut graphs = vec![
            collider(),
            MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap(),
            MixedGraph::new(GraphKind::Dag),
        ];
        let mut bow = MixedGraph::with_nodes(GraphKind::Admg, &["X", "Y"]).unwrap();
        bow.add_directed("X", "Y").unwrap();
        bow.add_bidirected("X", "Y").unwrap();
        graphs.push(bow);
        let mut pag = MixedGraph::with_nodes(GraphKind::Pag, &["X", "Y", "Z"]).unwrap();
        pag.add_edge("X", "Y", EdgeMark::Circle, EdgeMark::Circle).unwrap();
        pag.add_edge("Y", "Z", EdgeMark::Circle, EdgeMark::Arrow).unwrap();
        pag.set_role("X", NodeRole::Option).unwrap();
        graphs.push(pag);
        let mut sd = MixedGraph::with_nodes(GraphKind::SelectionDiagram, &["O", "perf", "S"])
            .unwrap();
        sd.add_directed("O", "perf").unwrap();
        sd.add_directed("S", "perf").unwrap();
        sd.set_role("S", NodeRole::SNode).unwrap();
        graphs.push(sd);
        for g in graphs {
            let text = to_text(&g);
            assert_eq!(from_text(&text).unwrap(), g, "{text}");
        }
    }

    #[test]
    fn empty_graph_document() {
        let g = MixedGraph::new(GraphKind::Dag);
        let text = to_text(&g);
        assert_eq!(text, "kind: DAG\nnodes: \n");
        assert_eq!(from_text(&text).unwrap().edge_count(), 0);
    }

    #[test]
    fn collider_dot_has_two_edges() {
        let dot = to_dot(&collider());
        assert_eq!(dot.matches("->").count(), 2);
        assert!(dot.contains("arrowhead=normal"));
        assert!(dot.contains("arrowtail=none"));
    }

    #[test]
    fn circle_marks_render_as_odot() {
        let mut g = MixedGraph::with_nodes(GraphKind::Pag, &["X", "Y"]).unwrap();
        g.add_edge("X", "Y", EdgeMark::Circle, EdgeMark::Arrow).unwrap();
        assert!(to_dot(&g).contains("arrowtail=odot"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = from_text("nodes: A,B\nedge: A t-x B\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (2, "edge"));
        let e = from_text("nodes: A,B\nedge: A t-a Q\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = from_text("nodes: A\nrole: A=wizard\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (2, "role"));
        let e = from_text("edge: A t-a B\n").unwrap_err();
        assert_eq!(e.field, "nodes");
        let e = from_text("nodes: A\nbogus line\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn kind_inference() {
        let g = from_text("nodes: X,Y\nedge: X t-a Y\n").unwrap();
        assert_eq!(g.kind(), GraphKind::Dag);
        let g = from_text("nodes: X,Y\nedge: X c-c Y\n").unwrap();
        assert_eq!(g.kind(), GraphKind::Pag);
    }
}

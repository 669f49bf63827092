//! Recoverability of conditionals from selection-biased samples.
//!
//! The selection graph carries one or more nodes with the selection-variable
//! role: the indicator that a unit entered the sample, a child of the
//! variables selection depends on.

use std::collections::BTreeMap;

use serde::Serialize;

use super::QueryError;
use crate::graph::{EdgeMark, MixedGraph, NodeRole};

/// Adds a selection indicator `name` with an edge from every input.
pub fn add_selection_node<S: AsRef<str>>(g: &MixedGraph, inputs: &[S], name: &str) -> Result<MixedGraph, QueryError> {
    let mut out = g.clone();
    let s = out.add_node(name)?;
    out.set_role_idx(s, Some(NodeRole::SelectionVar));
    for v in inputs {
        let i = out.index_of(v.as_ref())?;
        out.add_edge_idx(i, s, EdgeMark::Tail, EdgeMark::Arrow)?;
    }
    Ok(out)
}

/// Whether `P(y|x)` equals `P(y|x, S=1)`, i.e. S ⟂ Y | X.
pub fn s_recoverable<S: AsRef<str>>(gs: &MixedGraph, x: &[S], y: &[S]) -> Result<bool, QueryError> {
    let s = gs.nodes_with_role(NodeRole::SelectionVar);
    if s.is_empty() {
        return Err(QueryError::Input("the graph has no selection node".into()));
    }
    let xi = gs.indices_of(x)?;
    let yi = gs.indices_of(y)?;
    if xi.iter().any(|v| yi.contains(v)) || s.iter().any(|v| xi.contains(v) || yi.contains(v)) {
        return Err(QueryError::Input("x, y and the selection node must be disjoint".into()));
    }
    Ok(gs.separated_idx(&s, &yi, &xi))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoverabilityRow {
    pub option: String,
    pub perf: String,
    /// `P(perf | option)` is recoverable.
    pub recoverable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecoverabilityReport {
    pub rows: Vec<RecoverabilityRow>,
    /// `P(perf | all options)` is recoverable.
    pub given_all_options: BTreeMap<String, bool>,
}

/// Recoverability of each (option, performance) conditional, and of each
/// performance metric given every option.
pub fn recoverability_report<S: AsRef<str>>(
    gs: &MixedGraph,
    options: &[S],
    perf: &[S],
) -> Result<RecoverabilityReport, QueryError> {
    let mut rows = Vec::new();
    let mut given_all_options = BTreeMap::new();
    for p in perf {
        let p = p.as_ref();
        for o in options {
            rows.push(RecoverabilityRow {
                option: o.as_ref().to_string(),
                perf: p.to_string(),
                recoverable: s_recoverable(gs, &[o.as_ref()], &[p])?,
            });
        }
        let all: Vec<&str> = options.iter().map(|o| o.as_ref()).collect();
        given_all_options.insert(p.to_string(), s_recoverable(gs, &all, &[p])?);
    }
    Ok(RecoverabilityReport { rows, given_all_options })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_s(edges: &[(&str, &str)], inputs: &[&str]) -> MixedGraph {
        add_selection_node(&MixedGraph::dag_from_edges(edges).unwrap(), inputs, "S").unwrap()
    }

    #[test]
    fn recoverability_examples() {
        // selection driven by X: screened off by conditioning on X
        assert!(s_recoverable(&with_s(&[("X", "Y")], &["X"]), &["X"], &["Y"]).unwrap());
        // selection driven by Y itself
        assert!(!s_recoverable(&with_s(&[("X", "Y")], &["Y"]), &["X"], &["Y"]).unwrap());
        // selection downstream of Y through another node
        assert!(!s_recoverable(&with_s(&[("X", "Y"), ("Y", "W")], &["W"]), &["X"], &["Y"]).unwrap());
        let plain = MixedGraph::dag_from_edges(&[("X", "Y")]).unwrap();
        assert!(s_recoverable(&plain, &["X"], &["Y"]).is_err());
    }

    #[test]
    fn option_driven_selection_is_benign_given_all_options() {
        let g = with_s(&[("o1", "perf"), ("o2", "perf")], &["o1"]);
        let r = recoverability_report(&g, &["o1", "o2"], &["perf"]).unwrap();
        assert!(r.given_all_options["perf"]);
        // P(perf | o2) alone still mixes over the biased o1
        assert!(!r.rows.iter().find(|row| row.option == "o2").unwrap().recoverable);
        let g = with_s(&[("o1", "perf")], &["perf"]);
        let r = recoverability_report(&g, &["o1"], &["perf"]).unwrap();
        assert!(!r.given_all_options["perf"]);
        let empty = recoverability_report(&with_s(&[("o1", "perf")], &["o1"]), &[] as &[&str], &["perf"]).unwrap();
        assert!(!empty.given_all_options["perf"]);
    }
}

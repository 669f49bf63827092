//! Selection diagrams and transport of effects from a source to a target
//! environment.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::Serialize;

use super::estimand::{Estimand, ProbTerm, World};
use super::identify::{causal_graph, id_effect};
use super::{CausalQuery, QueryError};
use crate::graph::{EdgeMark, GraphKind, MixedGraph, NodeRole};

/// A causal graph shared by two environments plus S-nodes pointing at the
/// variables whose mechanisms may differ.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDiagram {
    graph: MixedGraph,
    /// S-node name → the node it points at.
    s_nodes: BTreeMap<String, String>,
}

impl SelectionDiagram {
    /// The diagram as one graph, S-nodes included.
    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn s_nodes(&self) -> &BTreeMap<String, String> {
        &self.s_nodes
    }

    /// The shared causal graph with S-nodes removed.
    pub fn shared(&self) -> MixedGraph {
        let keep: Vec<usize> = (0..self.graph.n())
            .filter(|&v| !self.s_nodes.contains_key(self.graph.name(v)))
            .collect();
        let mut g = self.graph.induced(&keep);
        g.set_kind(if g.edges().iter().any(|e| e.mark_a == EdgeMark::Arrow && e.mark_b == EdgeMark::Arrow) {
            GraphKind::Admg
        } else {
            GraphKind::Dag
        });
        g
    }

    /// Reads a diagram back from a graph whose S-nodes carry the S-node role.
    pub fn from_graph(g: &MixedGraph) -> Result<Self, QueryError> {
        let mut s_nodes = BTreeMap::new();
        for s in g.nodes_with_role(NodeRole::SNode) {
            let targets: Vec<usize> = g.neighbors(s).collect();
            let ok = targets.len() == 1 && g.is_directed(s, targets[0]);
            if !ok {
                return Err(QueryError::Input(format!(
                    "S-node `{}` must have exactly one outgoing edge and nothing else",
                    g.name(s)
                )));
            }
            s_nodes.insert(g.name(s).to_string(), g.name(targets[0]).to_string());
        }
        Ok(SelectionDiagram {
            graph: g.clone().with_kind(GraphKind::SelectionDiagram),
            s_nodes,
        })
    }
}

/// Adds `S_<v> -> v` for every suspect `v`; the shared graph is untouched.
pub fn build_selection_diagram<S: AsRef<str>>(
    shared: &MixedGraph,
    suspects: &[S],
) -> Result<SelectionDiagram, QueryError> {
    if !matches!(shared.kind(), GraphKind::Dag | GraphKind::Admg) {
        return Err(QueryError::WrongKind(shared.kind()));
    }
    let mut g = shared.clone();
    let mut s_nodes = BTreeMap::new();
    for v in suspects {
        let v = v.as_ref();
        let target = shared.index_of(v)?;
        let mut name = format!("S_{v}");
        while g.contains(&name) {
            name.push('_');
        }
        let s = g.add_node(&name)?;
        g.set_role_idx(s, Some(NodeRole::SNode));
        g.add_edge_idx(s, target, EdgeMark::Tail, EdgeMark::Arrow)?;
        s_nodes.insert(name, v.to_string());
    }
    g.set_kind(GraphKind::SelectionDiagram);
    Ok(SelectionDiagram { graph: g, s_nodes })
}

/// Which distributions a transport may draw on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Available {
    pub source_experiments: bool,
    pub source_observational: bool,
    pub target_observational: bool,
}

/// Causal `P(y|do(x),c)` or statistical `P(y|x,c)` relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    #[default]
    Causal,
    Statistical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportQuery {
    pub source: MixedGraph,
    pub target: MixedGraph,
    pub diagram: SelectionDiagram,
    pub query: CausalQuery,
    pub relation: Relation,
    pub available: Available,
}

impl TransportQuery {
    /// Both environments share the diagram's causal graph.
    pub fn from_diagram(diagram: SelectionDiagram, query: CausalQuery, available: Available) -> Self {
        let shared = diagram.shared();
        TransportQuery {
            source: shared.clone(),
            target: shared,
            diagram,
            query,
            relation: Relation::Causal,
            available,
        }
    }

    pub fn statistical(mut self) -> Self {
        self.relation = Relation::Statistical;
        self
    }
}

/// Estimand built from target observations alone, if the relation is
/// identifiable in the target graph.
pub fn trivially_transportable(tq: &TransportQuery) -> Result<Option<Estimand>, QueryError> {
    if !tq.available.target_observational {
        return Err(QueryError::Input("target observations are required".into()));
    }
    let q = &tq.query;
    let mut e = match tq.relation {
        Relation::Statistical => {
            causal_graph(&tq.target)?.indices_of(&q.outcome)?;
            let mut given = q.treatment.clone();
            given.extend(q.conditioning.iter().cloned());
            given.sort();
            Estimand::prob(q.outcome.clone(), given)
        }
        Relation::Causal => match id_effect(&tq.target, q)?.estimand {
            Some(e) => e,
            None => return Ok(None),
        },
    };
    e.retag(World::Target);
    Ok(Some(e))
}

/// Smallest set `Z` (then lexicographically first) of non-descendants of the
/// treatment with S ⟂ Y | X, Z once edges into X are cut, and the transport
/// formula `Σ_z P(y|do(x),z) P*(z)`.
pub fn s_admissible_adjustment(tq: &TransportQuery) -> Result<Option<(Vec<String>, Estimand)>, QueryError> {
    if !tq.available.source_experiments {
        return Err(QueryError::Input("source experiments are required".into()));
    }
    let g = tq.diagram.graph();
    let q = &tq.query;
    let x = g.indices_of(&q.treatment)?;
    let y = g.indices_of(&q.outcome)?;
    let c = g.indices_of(&q.conditioning)?;
    let s: Vec<usize> = g.indices_of(&tq.diagram.s_nodes().keys().cloned().collect::<Vec<_>>())?;
    let cut = g.mutilate_idx(&x, &[]);
    let desc = g.descendants_mask(&x);
    let mut pool: Vec<usize> = (0..g.n())
        .filter(|&v| !desc[v] && !y.contains(&v) && !c.contains(&v) && !s.contains(&v))
        .filter(|&v| g.role(v) != Some(NodeRole::Latent))
        .collect();
    pool.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    for k in 0..=pool.len() {
        for z in pool.iter().copied().combinations(k) {
            let mut cond: Vec<usize> = x.iter().chain(&z).chain(&c).copied().collect();
            cond.sort_unstable();
            if s.is_empty() || cut.separated_idx(&s, &y, &cond) {
                let z_names = g.names_of(z);
                return Ok(Some((z_names.clone(), transport_formula(q, &z_names))));
            }
        }
    }
    Ok(None)
}

fn transport_formula(q: &CausalQuery, z: &[String]) -> Estimand {
    let mut given: Vec<String> = z.iter().chain(&q.conditioning).cloned().collect();
    given.sort();
    let experimental = Estimand::Prob(ProbTerm {
        world: World::Experimental,
        vars: q.outcome.clone(),
        given,
        intervened: q.treatment.clone(),
    });
    if z.is_empty() {
        return experimental;
    }
    let target = Estimand::Prob(ProbTerm {
        world: World::Target,
        vars: z.to_vec(),
        given: q.conditioning.clone(),
        intervened: Vec::new(),
    });
    Estimand::sum(z.to_vec(), Estimand::product(vec![experimental, target]))
}

//! Intervention surgery and latent projection.

use std::collections::BTreeSet;

use super::{EdgeMark, GraphError, GraphKind, MixedGraph, NodeRole};

/// Removes every edge with an arrowhead at a member of `cut_incoming` and every
/// directed edge leaving a member of `cut_outgoing`. The node set is unchanged.
pub fn mutilate<S: AsRef<str>>(
    g: &MixedGraph,
    cut_incoming: &[S],
    cut_outgoing: &[S],
) -> Result<MixedGraph, GraphError> {
    let cin = g.indices_of(cut_incoming)?;
    let cout = g.indices_of(cut_outgoing)?;
    Ok(g.mutilate_idx(&cin, &cout))
}

impl MixedGraph {
    pub fn mutilate_idx(&self, cut_incoming: &[usize], cut_outgoing: &[usize]) -> MixedGraph {
        let n = self.n();
        let mut cin = vec![false; n];
        cut_incoming.iter().for_each(|&v| cin[v] = true);
        let mut cout = vec![false; n];
        cut_outgoing.iter().for_each(|&v| cout[v] = true);

        let mut out = self.clone();
        for a in 0..n {
            for b in 0..n {
                if a == b || !self.adjacent(a, b) {
                    continue;
                }
                let at_b = self.endpoint(a, b).unwrap();
                let at_a = self.endpoint(b, a).unwrap();
                let arrow_into_cut = cin[b] && at_b == EdgeMark::Arrow;
                let leaves_cut = cout[a] && at_a == EdgeMark::Tail && at_b == EdgeMark::Arrow;
                if arrow_into_cut || leaves_cut {
                    // keeps a bidirected bow partner only when it survives on its own
                    let bow = self.has_bow(a, b) && !cin[a] && !cin[b];
                    out.remove_edge_idx(a, b);
                    if bow {
                        out.set_edge_idx(a, b, EdgeMark::Arrow, EdgeMark::Arrow);
                    }
                } else if self.has_bow(a, b) && (cin[a] || cin[b]) {
                    out.remove_bow(a, b);
                }
            }
        }
        out
    }
}

/// Projects a DAG with latent nodes onto its observed nodes as an ADMG.
///
/// `a -> b` when a directed path from `a` to `b` passes through latents only;
/// `a <-> b` when both are reached from a common latent along latent-only
/// directed paths.
pub fn latent_projection<S: AsRef<str>>(
    dag: &MixedGraph,
    latents: &[S],
) -> Result<MixedGraph, GraphError> {
    if dag.kind() != GraphKind::Dag {
        return Err(GraphError::WrongKind {
            expected: "DAG".into(),
            found: dag.kind(),
        });
    }
    let lat: BTreeSet<usize> = dag.indices_of(latents)?.into_iter().collect();
    let n = dag.n();
    let observed: Vec<usize> = (0..n).filter(|v| !lat.contains(v)).collect();
    let mut out = MixedGraph::new(GraphKind::Admg);
    for &v in &observed {
        out.add_node(dag.name(v))?;
        if let Some(r) = dag.role(v) {
            if r != NodeRole::Latent {
                out.set_role(dag.name(v), r)?;
            }
        }
    }
    // observed nodes reachable from `start` through latent intermediates
    let reach = |start: usize| -> Vec<usize> {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        let mut hits = Vec::new();
        while let Some(v) = stack.pop() {
            for c in dag.children(v) {
                if seen[c] {
                    continue;
                }
                seen[c] = true;
                if lat.contains(&c) {
                    stack.push(c);
                } else {
                    hits.push(c);
                }
            }
        }
        hits.sort_unstable();
        hits
    };
    let mut directed = BTreeSet::new();
    let mut bidirected = BTreeSet::new();
    for &a in &observed {
        for b in reach(a) {
            directed.insert((a, b));
        }
    }
    for &l in &lat {
        let hits = reach(l);
        for (i, &a) in hits.iter().enumerate() {
            for &b in &hits[i + 1..] {
                bidirected.insert((a.min(b), a.max(b)));
            }
        }
    }
    for (a, b) in directed {
        out.add_edge(dag.name(a), dag.name(b), EdgeMark::Tail, EdgeMark::Arrow)?;
    }
    for (a, b) in bidirected {
        out.add_edge(dag.name(a), dag.name(b), EdgeMark::Arrow, EdgeMark::Arrow)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> MixedGraph {
        MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap()
    }

    #[test]
    fn cut_incoming_removes_parent_edges() {
        let g = mutilate(&chain(), &["B"], &[]).unwrap();
        let b = g.index_of("B").unwrap();
        assert_eq!(g.parents(b).count(), 0);
        assert!(g.is_directed(b, g.index_of("C").unwrap()));
        assert_eq!(g.n(), 3);
    }

    #[test]
    fn cut_outgoing_removes_child_edges() {
        let g = mutilate(&chain(), &[], &["B"]).unwrap();
        assert!(g.is_directed(0, 1));
        assert!(!g.adjacent(1, 2));
    }

    #[test]
    fn identity_when_nothing_cut() {
        let g = chain();
        let none: &[&str] = &[];
        assert_eq!(mutilate(&g, none, none).unwrap(), g);
    }

    #[test]
    fn bidirected_cut_by_incoming_only() {
        let mut g = MixedGraph::with_nodes(GraphKind::Admg, &["X", "Y"]).unwrap();
        g.add_directed("X", "Y").unwrap();
        g.add_bidirected("X", "Y").unwrap();
        let m = mutilate(&g, &[] as &[&str], &["X"]).unwrap();
        assert!(m.is_bidirected(0, 1));
        assert!(!m.is_directed(0, 1));
        let m = mutilate(&g, &["X"], &[] as &[&str]).unwrap();
        assert!(m.is_directed(0, 1));
        assert!(!m.is_bidirected(0, 1));
        let m = mutilate(&g, &["Y"], &[] as &[&str]).unwrap();
        assert_eq!(m.edge_count(), 0);
    }

    #[test]
    fn projection_of_confounder_and_mediator() {
        let g = MixedGraph::dag_from_edges(&[("L", "X"), ("L", "Y"), ("X", "M"), ("M", "Y")])
            .unwrap();
        let p = latent_projection(&g, &["L", "M"]).unwrap();
        let (x, y) = (p.index_of("X").unwrap(), p.index_of("Y").unwrap());
        assert!(p.is_directed(x, y));
        assert!(p.is_bidirected(x, y));
        assert_eq!(p.n(), 2);
    }
}

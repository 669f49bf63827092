//! d-/m-separation by reachability over (node, arrival mark) states.

use std::collections::{BTreeSet, VecDeque};

use super::{EdgeMark, GraphError, MixedGraph};

impl MixedGraph {
    /// m-separation of `x` and `y` given `z` (d-separation on a DAG).
    ///
    /// A collider (arrowheads at both incident ends) passes iff it is an ancestor
    /// of some member of `z`; any other node passes iff it is not in `z`. Circle
    /// marks count as non-arrowheads.
    pub fn separated_idx(&self, x: &[usize], y: &[usize], z: &[usize]) -> bool {
        let n = self.n();
        if x.is_empty() || y.is_empty() {
            return true;
        }
        let mut in_z = vec![false; n];
        for &v in z {
            in_z[v] = true;
        }
        let mut in_y = vec![false; n];
        for &v in y {
            in_y[v] = true;
        }
        let an_z = self.ancestors_mask(z);

        // visited[v][arrived_with_arrowhead]
        let mut visited = vec![[false; 2]; n];
        let mut queue = VecDeque::new();
        for &s in x {
            if in_y[s] {
                return false;
            }
            for (w, _, at_w) in self.incident(s) {
                let state = (w, at_w == EdgeMark::Arrow);
                if !visited[w][state.1 as usize] {
                    visited[w][state.1 as usize] = true;
                    queue.push_back(state);
                }
            }
        }
        while let Some((w, arrow_in)) = queue.pop_front() {
            if in_y[w] {
                return false;
            }
            for (u, at_w, at_u) in self.incident(w) {
                let collider = arrow_in && at_w == EdgeMark::Arrow;
                let pass = if collider { an_z[w] } else { !in_z[w] };
                if !pass {
                    continue;
                }
                let next = at_u == EdgeMark::Arrow;
                if !visited[u][next as usize] {
                    visited[u][next as usize] = true;
                    queue.push_back((u, next));
                }
            }
        }
        true
    }

    /// `v` plus every node with a path into `v` whose edges are undirected or
    /// point toward `v`.
    pub fn anterior_mask(&self, set: &[usize]) -> Vec<bool> {
        self.closure(set, |g, v, u| g.is_directed(u, v) || g.is_undirected(u, v))
    }
}

/// Name-based m-separation check; `x`, `y` and `z` must be pairwise disjoint.
pub fn separated<S: AsRef<str>>(
    g: &MixedGraph,
    x: &[S],
    y: &[S],
    z: &[S],
) -> Result<bool, GraphError> {
    let (xi, yi, zi) = (g.indices_of(x)?, g.indices_of(y)?, g.indices_of(z)?);
    check_disjoint(g, &[&xi, &yi, &zi])?;
    Ok(g.separated_idx(&xi, &yi, &zi))
}

pub(crate) fn check_disjoint(g: &MixedGraph, sets: &[&[usize]]) -> Result<(), GraphError> {
    let mut seen = BTreeSet::new();
    for set in sets {
        let local: BTreeSet<usize> = set.iter().copied().collect();
        for v in local {
            if !seen.insert(v) {
                return Err(GraphError::OverlappingSets(g.name(v).to_string()));
            }
        }
    }
    Ok(())
}

/// Anterior set of `v` (including `v`), as names in node order.
pub fn anterior_set(g: &MixedGraph, v: &str) -> Result<BTreeSet<String>, GraphError> {
    let i = g.index_of(v)?;
    let mask = g.anterior_mask(&[i]);
    Ok((0..g.n())
        .filter(|&u| mask[u])
        .map(|u| g.name(u).to_string())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphKind;

    fn collider() -> MixedGraph {
        MixedGraph::dag_from_edges(&[("A", "C"), ("B", "C")]).unwrap()
    }

    #[test]
    fn collider_blocks_marginally() {
        let g = collider();
        assert!(separated(&g, &["A"], &["B"], &[]).unwrap());
        assert!(!separated(&g, &["A"], &["B"], &["C"]).unwrap());
    }

    #[test]
    fn descendant_of_collider_opens_it() {
        let g = MixedGraph::dag_from_edges(&[("A", "C"), ("B", "C"), ("C", "D")]).unwrap();
        assert!(!separated(&g, &["A"], &["B"], &["D"]).unwrap());
    }

    #[test]
    fn chain_and_fork_block_when_conditioned() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap();
        assert!(!separated(&g, &["A"], &["C"], &[]).unwrap());
        assert!(separated(&g, &["A"], &["C"], &["B"]).unwrap());
    }

    #[test]
    fn bidirected_paths() {
        let mut g = MixedGraph::with_nodes(GraphKind::Admg, &["X", "M", "Y"]).unwrap();
        g.add_directed("X", "M").unwrap();
        g.add_bidirected("M", "Y").unwrap();
        // X -> M <-> Y: M is a collider
        assert!(separated(&g, &["X"], &["Y"], &[]).unwrap());
        let mut h = MixedGraph::with_nodes(GraphKind::Admg, &["X", "M", "Y"]).unwrap();
        h.add_directed("X", "M").unwrap();
        h.add_bidirected("M", "Y").unwrap();
        assert!(!separated(&h, &["X"], &["Y"], &["M"]).unwrap());
        let mut k = MixedGraph::with_nodes(GraphKind::Admg, &["X", "M", "Y"]).unwrap();
        k.add_bidirected("X", "M").unwrap();
        k.add_bidirected("M", "Y").unwrap();
        assert!(separated(&k, &["X"], &["Y"], &[]).unwrap());
        assert!(!separated(&k, &["X"], &["Y"], &["M"]).unwrap());
    }

    #[test]
    fn errors_on_unknown_and_overlap() {
        let g = collider();
        assert!(matches!(
            separated(&g, &["A"], &["Q"], &[]),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(matches!(
            separated(&g, &["A"], &["B"], &["A"]),
            Err(GraphError::OverlappingSets(_))
        ));
    }

    #[test]
    fn anterior_examples() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap();
        let a = anterior_set(&g, "C").unwrap();
        assert_eq!(a, ["A", "B", "C"].iter().map(|s| s.to_string()).collect());

        let mut h = MixedGraph::with_nodes(GraphKind::Mag, &["A", "B", "C"]).unwrap();
        h.add_undirected("A", "B").unwrap();
        h.add_directed("B", "C").unwrap();
        let a = anterior_set(&h, "C").unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(anterior_set(&h, "A").unwrap().len(), 2);
        assert!(anterior_set(&h, "Z").is_err());
    }
}

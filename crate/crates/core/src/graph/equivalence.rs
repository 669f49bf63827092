//! Equivalence-class constructions: CPDAGs via Meek closure, MAGs via
//! marginalization/conditioning, and ancestral-graph checks.

use std::collections::BTreeSet;

use super::{EdgeMark, GraphError, GraphKind, MixedGraph, NodeRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeekRule {
    R1,
    R2,
    R3,
    R4,
}

fn orient(g: &mut MixedGraph, a: usize, b: usize) {
    g.set_edge_idx(a, b, EdgeMark::Tail, EdgeMark::Arrow);
}

/// First Meek orientation `a -> b` (scanning `a`, then `b`, in index order)
/// that `allow` accepts.
pub(crate) fn find_meek_step(
    g: &MixedGraph,
    allow: &dyn Fn(usize, usize) -> bool,
) -> Option<(MeekRule, usize, usize)> {
    let n = g.n();
    for a in 0..n {
        for b in 0..n {
            if !g.is_undirected(a, b) || !allow(a, b) {
                continue;
            }
            // R1: c -> a - b, c and b nonadjacent  =>  a -> b
            if (0..n).any(|c| c != b && g.is_directed(c, a) && !g.adjacent(c, b)) {
                return Some((MeekRule::R1, a, b));
            }
            // R2: a -> c -> b with a - b  =>  a -> b
            if (0..n).any(|c| g.is_directed(a, c) && g.is_directed(c, b)) {
                return Some((MeekRule::R2, a, b));
            }
            // R3: a - c -> b, a - d -> b, c and d nonadjacent  =>  a -> b
            let mids: Vec<usize> = (0..n)
                .filter(|&c| g.is_undirected(a, c) && g.is_directed(c, b))
                .collect();
            for (i, &c) in mids.iter().enumerate() {
                if mids[i + 1..].iter().any(|&d| !g.adjacent(c, d)) {
                    return Some((MeekRule::R3, a, b));
                }
            }
            // R4: a - c -> d -> b, a adjacent d, c and b nonadjacent  =>  a -> b
            for c in (0..n).filter(|&c| c != b && g.is_undirected(a, c) && !g.adjacent(c, b)) {
                if (0..n).any(|d| g.is_directed(c, d) && g.is_directed(d, b) && g.adjacent(a, d)) {
                    return Some((MeekRule::R4, a, b));
                }
            }
        }
    }
    None
}

/// Applies Meek rules R1-R4 to a fixpoint on a graph with tail/arrow marks.
/// Returns the orientations performed, in order.
pub fn apply_meek_rules(g: &mut MixedGraph) -> Vec<(MeekRule, usize, usize)> {
    let mut log = Vec::new();
    while let Some((rule, a, b)) = find_meek_step(g, &|_, _| true) {
        orient(g, a, b);
        log.push((rule, a, b));
    }
    log
}

/// CPDAG of a DAG: skeleton, v-structures, then Meek closure.
pub fn cpdag_of(g: &MixedGraph) -> Result<MixedGraph, GraphError> {
    if g.kind() != GraphKind::Dag {
        return Err(GraphError::WrongKind {
            expected: "DAG".into(),
            found: g.kind(),
        });
    }
    g.validate()?;
    let n = g.n();
    let mut out = g.empty_like();
    out.set_kind(GraphKind::Cpdag);
    for e in g.edges() {
        out.set_edge_idx(e.a, e.b, EdgeMark::Tail, EdgeMark::Tail);
    }
    for c in 0..n {
        let pa: Vec<usize> = g.parents(c).collect();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !g.adjacent(a, b) {
                    orient(&mut out, a, c);
                    orient(&mut out, b, c);
                }
            }
        }
    }
    apply_meek_rules(&mut out);
    Ok(out)
}

/// A DAG in the equivalence class of a PDAG (Dor-Tarsi extension).
pub fn consistent_extension(pdag: &MixedGraph) -> Result<MixedGraph, GraphError> {
    let n = pdag.n();
    let mut work = pdag.clone();
    let mut out = pdag.clone();
    out.set_kind(GraphKind::Dag);
    let mut alive = vec![true; n];
    for _ in 0..n {
        let pick = (0..n).find(|&x| {
            alive[x]
                && !(0..n).any(|y| alive[y] && work.is_directed(x, y))
                && (0..n)
                    .filter(|&y| alive[y] && work.is_undirected(x, y))
                    .all(|y| {
                        (0..n)
                            .filter(|&z| z != y && alive[z] && work.adjacent(x, z))
                            .all(|z| work.adjacent(y, z))
                    })
        });
        let Some(x) = pick else {
            return Err(GraphError::Invalid {
                kind: pdag.kind(),
                reason: "no consistent DAG extension exists".into(),
            });
        };
        for y in 0..n {
            if alive[y] && work.is_undirected(x, y) {
                orient(&mut out, y, x);
            }
        }
        alive[x] = false;
        for y in 0..n {
            if work.adjacent(x, y) {
                work.remove_edge_idx(x, y);
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// MAG over the observed nodes of `g` after marginalizing `latents` and
/// conditioning on `selection`.
pub fn mag_of<S: AsRef<str>>(
    g: &MixedGraph,
    latents: &[S],
    selection: &[S],
) -> Result<MixedGraph, GraphError> {
    if g.kind() != GraphKind::Dag {
        return Err(GraphError::WrongKind {
            expected: "DAG".into(),
            found: g.kind(),
        });
    }
    g.validate()?;
    let lat = g.indices_of(latents)?;
    let sel = g.indices_of(selection)?;
    super::separation::check_disjoint(g, &[&lat, &sel])?;
    let hidden: BTreeSet<usize> = lat.iter().chain(&sel).copied().collect();
    let observed: Vec<usize> = (0..g.n()).filter(|v| !hidden.contains(v)).collect();
    if observed.is_empty() {
        return Err(GraphError::Input("no observed nodes remain".into()));
    }
    let mut out = MixedGraph::new(GraphKind::Mag);
    for &v in &observed {
        let j = out.add_node(g.name(v))?;
        out.set_role_idx(j, g.role(v));
    }
    for (i, &a) in observed.iter().enumerate() {
        for (j, &b) in observed.iter().enumerate().skip(i + 1) {
            let mut seeds = sel.clone();
            seeds.extend([a, b]);
            let an = g.ancestors_mask(&seeds);
            let mut cond: Vec<usize> = observed
                .iter()
                .copied()
                .filter(|&v| v != a && v != b && an[v])
                .collect();
            cond.extend(&sel);
            if g.separated_idx(&[a], &[b], &cond) {
                continue;
            }
            let mut sa = sel.clone();
            sa.push(a);
            let mut sb = sel.clone();
            sb.push(b);
            let mark_b = if g.ancestors_mask(&sa)[b] {
                EdgeMark::Tail
            } else {
                EdgeMark::Arrow
            };
            let mark_a = if g.ancestors_mask(&sb)[a] {
                EdgeMark::Tail
            } else {
                EdgeMark::Arrow
            };
            out.set_edge_idx(i, j, mark_a, mark_b);
        }
    }
    Ok(out)
}

/// Violations of the ancestral conditions: an arrowhead at a node anterior to
/// the other endpoint, or an arrowhead at an endpoint of an undirected edge.
pub fn ancestral_violations(g: &MixedGraph) -> Vec<String> {
    let n = g.n();
    let mut out = Vec::new();
    let anterior: Vec<Vec<bool>> = (0..n).map(|v| g.anterior_mask(&[v])).collect();
    for (other, a, mark_a) in (0..n).flat_map(|a| {
        g.incident(a)
            .map(move |(b, at_a, _)| (b, a, at_a))
            .collect::<Vec<_>>()
    }) {
        if mark_a == EdgeMark::Arrow && anterior[other][a] {
            out.push(format!(
                "arrowhead at `{}` on edge with `{}`, but `{}` is anterior to `{}`",
                g.name(a),
                g.name(other),
                g.name(a),
                g.name(other)
            ));
        }
    }
    for a in 0..n {
        let has_undirected = (0..n).any(|b| g.is_undirected(a, b));
        if has_undirected && g.incident(a).any(|(_, at_a, _)| at_a == EdgeMark::Arrow) {
            out.push(format!(
                "`{}` has an undirected edge and an arrowhead",
                g.name(a)
            ));
        }
    }
    out
}

/// Every nonadjacent pair is m-separated by some subset of the other nodes.
/// Exhaustive over subsets; intended for small graphs.
pub fn is_maximal(g: &MixedGraph) -> bool {
    let n = g.n();
    for a in 0..n {
        for b in (a + 1)..n {
            if g.adjacent(a, b) {
                continue;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| v != a && v != b).collect();
            let found = (0u64..(1u64 << rest.len())).any(|mask| {
                let z: Vec<usize> = rest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                g.separated_idx(&[a], &[b], &z)
            });
            if !found {
                return false;
            }
        }
    }
    true
}

impl MixedGraph {
    /// Nodes with an option role followed by those with a performance role.
    pub fn options_and_performance(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.nodes_with_role(NodeRole::Option),
            self.nodes_with_role(NodeRole::Performance),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_cpdag_is_undirected() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap();
        let c = cpdag_of(&g).unwrap();
        assert_eq!(c.kind(), GraphKind::Cpdag);
        assert!(c.is_undirected(0, 1));
        assert!(c.is_undirected(1, 2));
    }

    #[test]
    fn collider_cpdag_is_directed() {
        let g = MixedGraph::dag_from_edges(&[("A", "C"), ("B", "C")]).unwrap();
        let c = cpdag_of(&g).unwrap();
        assert_eq!(c.clone().with_kind(GraphKind::Dag), g);
    }

    #[test]
    fn meek_r1_and_r2() {
        let mut g = MixedGraph::with_nodes(GraphKind::Cpdag, &["a", "b", "c"]).unwrap();
        g.add_directed("a", "b").unwrap();
        g.add_undirected("b", "c").unwrap();
        let log = apply_meek_rules(&mut g);
        assert_eq!(log, vec![(MeekRule::R1, 1, 2)]);
        assert!(g.is_directed(1, 2));

        let mut g = MixedGraph::with_nodes(GraphKind::Cpdag, &["a", "b", "c"]).unwrap();
        g.add_directed("a", "b").unwrap();
        g.add_directed("b", "c").unwrap();
        g.add_undirected("a", "c").unwrap();
        let log = apply_meek_rules(&mut g);
        assert_eq!(log, vec![(MeekRule::R2, 0, 2)]);
    }

    #[test]
    fn meek_r3() {
        let mut g = MixedGraph::with_nodes(GraphKind::Cpdag, &["a", "b", "c", "d"]).unwrap();
        g.add_undirected("a", "b").unwrap();
        g.add_undirected("a", "c").unwrap();
        g.add_undirected("a", "d").unwrap();
        g.add_directed("c", "b").unwrap();
        g.add_directed("d", "b").unwrap();
        apply_meek_rules(&mut g);
        assert!(g.is_directed(0, 1));
        assert!(g.is_undirected(0, 2));
    }

    #[test]
    fn extension_preserves_v_structures() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C"), ("D", "C"), ("C", "E")])
            .unwrap();
        let c = cpdag_of(&g).unwrap();
        let d = consistent_extension(&c).unwrap();
        assert_eq!(cpdag_of(&d).unwrap(), c);
    }

    #[test]
    fn mag_examples() {
        let g = MixedGraph::dag_from_edges(&[("L", "X"), ("L", "Y")]).unwrap();
        let m = mag_of(&g, &["L"], &[]).unwrap();
        assert!(m.is_bidirected(0, 1));

        let g = MixedGraph::dag_from_edges(&[("A", "L"), ("L", "B")]).unwrap();
        let m = mag_of(&g, &["L"], &[]).unwrap();
        assert!(m.is_directed(m.index_of("A").unwrap(), m.index_of("B").unwrap()));

        let g = MixedGraph::dag_from_edges(&[("X", "Ssel"), ("Y", "Ssel")]).unwrap();
        let m = mag_of(&g, &[], &["Ssel"]).unwrap();
        assert!(m.is_undirected(0, 1));
        assert!(ancestral_violations(&m).is_empty());

        let g = MixedGraph::dag_from_edges(&[("L", "X")]).unwrap();
        assert!(mag_of(&g, &["L", "X"], &[]).is_err());
    }

    #[test]
    fn ancestral_checks() {
        let mut g = MixedGraph::with_nodes(GraphKind::Mag, &["A", "B"]).unwrap();
        g.add_undirected("A", "B").unwrap();
        assert!(ancestral_violations(&g).is_empty());
        let mut h = MixedGraph::with_nodes(GraphKind::Mag, &["A", "B", "C"]).unwrap();
        h.add_undirected("A", "B").unwrap();
        h.add_bidirected("B", "C").unwrap();
        assert!(!ancestral_violations(&h).is_empty());
        // almost directed cycle A -> B -> C, A <-> C
        let mut k = MixedGraph::with_nodes(GraphKind::Mag, &["A", "B", "C"]).unwrap();
        k.add_directed("A", "B").unwrap();
        k.add_directed("B", "C").unwrap();
        k.add_bidirected("A", "C").unwrap();
        assert!(!ancestral_violations(&k).is_empty());
    }

    #[test]
    fn maximality() {
        // X <-> A <-> B <-> Y with A -> Y and B -> X: an inducing path joins X and Y
        let mut g = MixedGraph::with_nodes(GraphKind::Mag, &["X", "A", "B", "Y"]).unwrap();
        g.add_bidirected("X", "A").unwrap();
        g.add_bidirected("A", "B").unwrap();
        g.add_bidirected("B", "Y").unwrap();
        g.add_directed("A", "Y").unwrap();
        g.add_directed("B", "X").unwrap();
        assert!(ancestral_violations(&g).is_empty());
        assert!(!is_maximal(&g));
        let h = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap();
        assert!(is_maximal(&h));
    }
}

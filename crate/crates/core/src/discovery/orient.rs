//! Orientation phase of PC: unshielded colliders, background knowledge and
//! Meek rules.

use super::{BackgroundKnowledge, DiscoveryError, SepSetMap};
use crate::graph::{find_meek_step, EdgeMark, GraphError, GraphKind, MixedGraph};

/// Node indices sorted by name.
pub(crate) fn name_order(g: &MixedGraph) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.n()).collect();
    order.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    order
}

/// Whether adding `a -> b` closes a directed cycle.
pub(crate) fn creates_cycle(g: &MixedGraph, a: usize, b: usize) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![b];
    seen[b] = true;
    while let Some(v) = stack.pop() {
        if v == a {
            return true;
        }
        for c in g.children(v) {
            if !seen[c] {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    false
}

pub(crate) fn colliders(skel: &MixedGraph, sepsets: &SepSetMap, diag: &mut Vec<String>) -> MixedGraph {
    let mut g = skel.clone();
    g.set_kind(GraphKind::Cpdag);
    let order = name_order(skel);
    for (i, &x) in order.iter().enumerate() {
        for &y in &order[i + 1..] {
            if skel.adjacent(x, y) {
                continue;
            }
            for &z in &order {
                if !(skel.adjacent(x, z) && skel.adjacent(y, z)) {
                    continue;
                }
                let (nx, ny, nz) = (skel.name(x), skel.name(y), skel.name(z));
                let Some(sep) = sepsets.get(nx, ny) else {
                    diag.push(format!("no separating set recorded for {nx}, {ny}"));
                    continue;
                };
                if sep.contains(nz) {
                    continue;
                }
                for a in [x, y] {
                    if g.is_directed(a, z) {
                        continue;
                    }
                    if g.is_directed(z, a) {
                        diag.push(format!(
                            "collider {nx} -> {nz} <- {ny} conflicts with {nz} -> {}; kept the earlier orientation",
                            g.name(a)
                        ));
                    } else if creates_cycle(&g, a, z) {
                        diag.push(format!(
                            "collider {nx} -> {nz} <- {ny} would close a directed cycle at {}",
                            g.name(a)
                        ));
                    } else {
                        g.set_edge_idx(a, z, EdgeMark::Tail, EdgeMark::Arrow);
                    }
                }
            }
        }
    }
    g
}

/// Orients every unshielded triple `x - z - y` with `z` outside the
/// separating set of `x` and `y` as `x -> z <- y`. When two triples disagree
/// on an edge, the first triple in name order wins.
pub fn orient_colliders(skel: &MixedGraph, sepsets: &SepSetMap) -> MixedGraph {
    colliders(skel, sepsets, &mut Vec::new())
}

pub(crate) fn closure(
    pdag: &MixedGraph,
    bk: &BackgroundKnowledge,
    diag: &mut Vec<String>,
) -> Result<MixedGraph, DiscoveryError> {
    if pdag
        .edges()
        .iter()
        .any(|e| e.mark_a == EdgeMark::Circle || e.mark_b == EdgeMark::Circle)
    {
        return Err(GraphError::Invalid {
            kind: pdag.kind(),
            reason: "Meek closure needs tail/arrow marks only".into(),
        }
        .into());
    }
    let mut g = pdag.clone();
    g.set_kind(GraphKind::Cpdag);
    let order = name_order(&g);
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if !g.adjacent(a, b) {
                continue;
            }
            let (na, nb) = (g.name(a).to_string(), g.name(b).to_string());
            let (no_ab, no_ba) = (bk.forbids(&na, &nb), bk.forbids(&nb, &na));
            let (from, to) = match (no_ab, no_ba) {
                (true, true) => {
                    return Err(DiscoveryError::Inconsistent {
                        a: na,
                        b: nb,
                        reason: "both directions are forbidden".into(),
                    })
                }
                (false, true) => (a, b),
                (true, false) => (b, a),
                (false, false) => continue,
            };
            if g.is_directed(to, from) {
                diag.push(format!(
                    "background knowledge reverses {} -> {}",
                    g.name(to),
                    g.name(from)
                ));
            }
            g.set_edge_idx(from, to, EdgeMark::Tail, EdgeMark::Arrow);
        }
    }
    loop {
        let step = {
            let snapshot = &g;
            find_meek_step(snapshot, &|a, b| !creates_cycle(snapshot, a, b))
        };
        let Some((rule, a, b)) = step else { break };
        let (na, nb) = (g.name(a), g.name(b));
        if bk.forbids(na, nb) {
            return Err(DiscoveryError::Inconsistent {
                a: na.to_string(),
                b: nb.to_string(),
                reason: format!("{rule:?} implies {na} -> {nb}, which is forbidden"),
            });
        }
        g.set_edge_idx(a, b, EdgeMark::Tail, EdgeMark::Arrow);
    }
    Ok(g)
}

/// Applies background knowledge (tiers orient cross-tier edges forward) and
/// Meek rules R1-R4 to a fixpoint.
pub fn meek_closure(pdag: &MixedGraph, bk: &BackgroundKnowledge) -> Result<MixedGraph, DiscoveryError> {
    closure(pdag, bk, &mut Vec::new())
}

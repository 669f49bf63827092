//! Chordality of undirected components, used to flag selection bias in PAGs.

use std::collections::BTreeSet;

use super::MixedGraph;

/// Maximum-cardinality search followed by a perfect-elimination check on the
/// undirected graph `adj` restricted to `nodes`.
pub fn is_chordal(nodes: &[usize], adj: impl Fn(usize, usize) -> bool) -> bool {
    let k = nodes.len();
    let mut weight = vec![0usize; k];
    let mut numbered = vec![false; k];
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let next = (0..k)
            .filter(|&i| !numbered[i])
            .max_by(|&i, &j| weight[i].cmp(&weight[j]).then(j.cmp(&i)))
            .unwrap();
        numbered[next] = true;
        order.push(next);
        for i in 0..k {
            if !numbered[i] && adj(nodes[next], nodes[i]) {
                weight[i] += 1;
            }
        }
    }
    let mut position = vec![0usize; k];
    for (p, &i) in order.iter().enumerate() {
        position[i] = p;
    }
    for (p, &v) in order.iter().enumerate() {
        let earlier: Vec<usize> = order[..p]
            .iter()
            .copied()
            .filter(|&u| adj(nodes[v], nodes[u]))
            .collect();
        let Some(&last) = earlier.iter().max_by_key(|&&u| position[u]) else {
            continue;
        };
        if earlier
            .iter()
            .any(|&u| u != last && !adj(nodes[last], nodes[u]))
        {
            return false;
        }
    }
    true
}

/// Connected components of the undirected (tail-tail) edges that are not
/// chordal. An empty result means no selection bias was detected.
pub fn detect_selection_bias(g: &MixedGraph) -> Vec<BTreeSet<String>> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] || !(0..n).any(|b| g.is_undirected(start, b)) {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < comp.len() {
            let v = comp[i];
            for u in 0..n {
                if !seen[u] && g.is_undirected(v, u) {
                    seen[u] = true;
                    comp.push(u);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        if !is_chordal(&comp, |a, b| g.is_undirected(a, b)) {
            out.push(comp.iter().map(|&v| g.name(v).to_string()).collect());
        }
    }
    out
}

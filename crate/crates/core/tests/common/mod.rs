//! Brute-force oracles shared by the integration and acceptance tests. None
//! of them call the library's own reasoning; they only read graph marks.

#![allow(dead_code)]

use std::collections::BTreeMap;

use perfcausal::graph::{EdgeMark, GraphKind, MixedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use EdgeMark::{Arrow, Tail};

/// Directed-path ancestors of `set` (including `set`).
pub fn ancestors(g: &MixedGraph, set: &[usize]) -> Vec<bool> {
    backward(g, set, |g, u, v| {
        g.endpoint(v, u) == Some(Tail) && g.endpoint(u, v) == Some(Arrow)
    })
}

/// Nodes with a path into `set` whose edges are `u -> v` or `u - v`.
pub fn anterior(g: &MixedGraph, set: &[usize]) -> Vec<bool> {
    backward(g, set, |g, u, v| {
        g.endpoint(v, u) == Some(Tail) && matches!(g.endpoint(u, v), Some(Arrow) | Some(Tail))
    })
}

fn backward(g: &MixedGraph, set: &[usize], edge: impl Fn(&MixedGraph, usize, usize) -> bool) -> Vec<bool> {
    let mut mark = vec![false; g.n()];
    let mut stack: Vec<usize> = set.to_vec();
    for &s in set {
        mark[s] = true;
    }
    while let Some(v) = stack.pop() {
        for u in 0..g.n() {
            if !mark[u] && edge(g, u, v) {
                mark[u] = true;
                stack.push(u);
            }
        }
    }
    mark
}

/// Edges at `v` as (other, mark at v, mark at other), with a bow's extra
/// bidirected edge listed separately.
fn incident(g: &MixedGraph, v: usize) -> Vec<(usize, EdgeMark, EdgeMark)> {
    let mut out = Vec::new();
    for u in 0..g.n() {
        if let Some(at_u) = g.endpoint(v, u) {
            out.push((u, g.endpoint(u, v).unwrap(), at_u));
        }
        if g.has_bow(v, u) {
            out.push((u, Arrow, Arrow));
        }
    }
    out
}

/// Whether some simple path from `x` to `y` is open given `z`: every
/// collider is an ancestor of `z`, every other inner node is outside `z`.
pub fn connected(g: &MixedGraph, x: usize, y: usize, z: &[usize]) -> bool {
    let anc = ancestors(g, z);
    let mut in_z = vec![false; g.n()];
    for &v in z {
        in_z[v] = true;
    }
    let mut on_path = vec![false; g.n()];
    on_path[x] = true;
    walk(g, x, None, y, &anc, &in_z, &mut on_path)
}

fn walk(
    g: &MixedGraph,
    v: usize,
    arrived: Option<EdgeMark>,
    y: usize,
    anc: &[bool],
    in_z: &[bool],
    on_path: &mut [bool],
) -> bool {
    for (u, at_v, at_u) in incident(g, v) {
        if on_path[u] {
            continue;
        }
        if let Some(prev) = arrived {
            let collider = prev == Arrow && at_v == Arrow;
            if collider && !anc[v] || !collider && in_z[v] {
                continue;
            }
        }
        if u == y {
            return true;
        }
        on_path[u] = true;
        let found = walk(g, u, Some(at_u), y, anc, in_z, on_path);
        on_path[u] = false;
        if found {
            return true;
        }
    }
    false
}

pub fn separated(g: &MixedGraph, x: &[usize], y: &[usize], z: &[usize]) -> bool {
    x.iter().all(|&a| y.iter().all(|&b| !connected(g, a, b, z)))
}

/// Separation of every pair of `vars` given every subset of the rest,
/// keyed by (position i, position j, subset bitmask over positions).
pub fn independence_model(g: &MixedGraph, vars: &[usize]) -> BTreeMap<(usize, usize, u32), bool> {
    independence_model_given(g, vars, &[])
}

/// As [`independence_model`], with `fixed` added to every conditioning set.
pub fn independence_model_given(
    g: &MixedGraph,
    vars: &[usize],
    fixed: &[usize],
) -> BTreeMap<(usize, usize, u32), bool> {
    let k = vars.len();
    let mut out = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            for mask in 0u32..(1 << k) {
                if mask & (1 << i) != 0 || mask & (1 << j) != 0 {
                    continue;
                }
                let mut z: Vec<usize> = (0..k).filter(|&t| mask & (1 << t) != 0).map(|t| vars[t]).collect();
                z.extend_from_slice(fixed);
                out.insert((i, j, mask), !connected(g, vars[i], vars[j], &z));
            }
        }
    }
    out
}

fn directed_cycle(g: &MixedGraph) -> bool {
    (0..g.n()).any(|v| {
        let kids: Vec<usize> = (0..g.n())
            .filter(|&c| g.endpoint(v, c) == Some(Arrow) && g.endpoint(c, v) == Some(Tail))
            .collect();
        let anc = ancestors(g, &[v]);
        kids.iter().any(|&c| anc[c])
    })
}

/// CPDAG by enumerating every acyclic orientation of the skeleton and
/// keeping those with the same separation statements.
pub fn cpdag_brute(dag: &MixedGraph) -> MixedGraph {
    let all: Vec<usize> = (0..dag.n()).collect();
    let model = independence_model(dag, &all);
    let edges = dag.edges();
    let mut always = vec![None::<bool>; edges.len()];
    let mut agree = vec![true; edges.len()];
    for bits in 0u64..(1 << edges.len()) {
        let mut h = dag.empty_like();
        for (k, e) in edges.iter().enumerate() {
            let (a, b) = if bits & (1 << k) != 0 { (e.b, e.a) } else { (e.a, e.b) };
            h.add_edge_idx(a, b, Tail, Arrow).unwrap();
        }
        if directed_cycle(&h) || independence_model(&h, &all) != model {
            continue;
        }
        for (k, e) in edges.iter().enumerate() {
            let forward = h.endpoint(e.a, e.b) == Some(Arrow);
            match always[k] {
                None => always[k] = Some(forward),
                Some(f) if f != forward => agree[k] = false,
                _ => {}
            }
        }
    }
    let mut out = dag.empty_like().with_kind(GraphKind::Cpdag);
    for (k, e) in edges.iter().enumerate() {
        if !agree[k] {
            out.add_edge_idx(e.a, e.b, Tail, Tail).unwrap();
        } else if always[k] == Some(true) {
            out.add_edge_idx(e.a, e.b, Tail, Arrow).unwrap();
        } else {
            out.add_edge_idx(e.b, e.a, Tail, Arrow).unwrap();
        }
    }
    out
}

/// PAG over `observed` (names sorted) by enumerating every MAG on the
/// skeleton implied by the separation statements of `g` and intersecting
/// the marks of those with identical statements.
pub fn pag_brute(g: &MixedGraph, observed: &[&str]) -> MixedGraph {
    pag_brute_selected(g, observed, &[])
}

/// As [`pag_brute`] on data conditioned on the `selected` nodes.
pub fn pag_brute_selected(g: &MixedGraph, observed: &[&str], selected: &[&str]) -> MixedGraph {
    let mut names: Vec<&str> = observed.to_vec();
    names.sort();
    let idx: Vec<usize> = names.iter().map(|s| g.index_of(s).unwrap()).collect();
    let k = idx.len();
    let fixed: Vec<usize> = selected.iter().map(|s| g.index_of(s).unwrap()).collect();
    let model = independence_model_given(g, &idx, &fixed);
    let mut sepset = BTreeMap::new();
    for (&(i, j, mask), &sep) in &model {
        if sep {
            sepset.entry((i, j)).or_insert(mask);
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .filter(|p| !sepset.contains_key(p))
        .collect();
    let adjacent = |a: usize, b: usize| pairs.contains(&(a.min(b), a.max(b)));
    // unshielded triples (i, c, j): c is a collider iff it is outside the
    // separating set of i and j
    let mut triples = Vec::new();
    for (&(i, j), &mask) in &sepset {
        for c in 0..k {
            if c != i && c != j && adjacent(i, c) && adjacent(j, c) {
                triples.push((i, c, j, mask & (1 << c) == 0));
            }
        }
    }
    let base = MixedGraph::with_nodes(GraphKind::Mag, &names).unwrap();
    const TYPES: [(EdgeMark, EdgeMark); 4] = [(Tail, Arrow), (Arrow, Tail), (Arrow, Arrow), (Tail, Tail)];
    let all: Vec<usize> = (0..k).collect();
    let mut marks: Vec<Option<(EdgeMark, EdgeMark)>> = vec![None; pairs.len()];
    let mut agree = vec![(true, true); pairs.len()];
    let mut found = 0usize;
    let mut choice = vec![0usize; pairs.len()];
    let mut depth = 0usize;
    // iterative backtracking over edge types
    loop {
        if depth == pairs.len() {
            let mut h = base.clone();
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let (ma, mb) = TYPES[choice[p]];
                h.add_edge_idx(a, b, ma, mb).unwrap();
            }
            if ancestral(&h) && independence_model(&h, &all) == model {
                found += 1;
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let m = (h.endpoint(b, a).unwrap(), h.endpoint(a, b).unwrap());
                    match marks[p] {
                        None => marks[p] = Some(m),
                        Some(old) => {
                            agree[p].0 &= old.0 == m.0;
                            agree[p].1 &= old.1 == m.1;
                        }
                    }
                }
            }
            if !advance(&mut choice, &mut depth) {
                break;
            }
            continue;
        }
        if consistent(&pairs, &choice, depth, &triples, &TYPES) {
            depth += 1;
            if depth < pairs.len() {
                choice[depth] = 0;
            }
        } else if !advance(&mut choice, &mut depth) {
            break;
        }
    }
    assert!(found > 0, "the generating model must be in its own class");
    let mut out = base.with_kind(GraphKind::Pag);
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let (ma, mb) = marks[p].unwrap();
        let ma = if agree[p].0 { ma } else { EdgeMark::Circle };
        let mb = if agree[p].1 { mb } else { EdgeMark::Circle };
        out.add_edge_idx(a, b, ma, mb).unwrap();
    }
    out
}

/// Moves to the next candidate after the one at `depth - 1`/`depth`.
fn advance(choice: &mut [usize], depth: &mut usize) -> bool {
    if *depth == choice.len() {
        if *depth == 0 {
            return false;
        }
        *depth -= 1;
    }
    loop {
        choice[*depth] += 1;
        if choice[*depth] < 4 {
            return true;
        }
        if *depth == 0 {
            return false;
        }
        *depth -= 1;
    }
}

/// Checks the triples and undirected-edge constraints whose edges are all
/// assigned at positions `..=depth`.
fn consistent(
    pairs: &[(usize, usize)],
    choice: &[usize],
    depth: usize,
    triples: &[(usize, usize, usize, bool)],
    types: &[(EdgeMark, EdgeMark); 4],
) -> bool {
    let mark_at = |x: usize, other: usize| -> Option<EdgeMark> {
        let key = (x.min(other), x.max(other));
        let p = pairs.iter().position(|&q| q == key)?;
        if p > depth {
            return None;
        }
        let (ma, mb) = types[choice[p]];
        Some(if x == key.0 { ma } else { mb })
    };
    for &(i, c, j, collider) in triples {
        if let (Some(a), Some(b)) = (mark_at(c, i), mark_at(c, j)) {
            if (a == Arrow && b == Arrow) != collider {
                return false;
            }
        }
    }
    // an undirected edge cannot meet an arrowhead at either end
    let (a, b) = pairs[depth];
    for x in [a, b] {
        let at_x: Vec<(EdgeMark, EdgeMark)> = (0..=depth)
            .filter(|&p| pairs[p].0 == x || pairs[p].1 == x)
            .map(|p| {
                let (ma, mb) = types[choice[p]];
                if pairs[p].0 == x { (ma, mb) } else { (mb, ma) }
            })
            .collect();
        let undirected = at_x.contains(&(Tail, Tail));
        if undirected && at_x.iter().any(|&(mx, _)| mx == Arrow) {
            return false;
        }
    }
    true
}

/// Ancestral: acyclic, no arrowhead into an ancestor, and undirected edges
/// only between nodes without incoming arrowheads.
pub fn ancestral(h: &MixedGraph) -> bool {
    if directed_cycle(h) {
        return false;
    }
    for a in 0..h.n() {
        for b in 0..h.n() {
            // arrowhead at a on an edge with b while a is an ancestor of b
            if a != b && h.endpoint(b, a) == Some(Arrow) && ancestors(h, &[b])[a] {
                return false;
            }
        }
    }
    for a in 0..h.n() {
        let undirected = (0..h.n()).any(|b| h.endpoint(a, b) == Some(Tail) && h.endpoint(b, a) == Some(Tail));
        let arrow_in = (0..h.n()).any(|b| h.endpoint(b, a) == Some(Arrow));
        if undirected && arrow_in {
            return false;
        }
    }
    true
}

/// Differences between two graphs' marks, matched by node name.
pub fn mark_diff(got: &MixedGraph, want: &MixedGraph) -> Vec<String> {
    let mut out = Vec::new();
    let names = want.names();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (wa, wb) = (want.index_of(a).unwrap(), want.index_of(b).unwrap());
            let (ga, gb) = (got.index_of(a).unwrap(), got.index_of(b).unwrap());
            let w = (want.endpoint(wb, wa), want.endpoint(wa, wb));
            let g = (got.endpoint(gb, ga), got.endpoint(ga, gb));
            if w != g {
                out.push(format!("{a}-{b}: got {g:?}, want {w:?}"));
            }
        }
    }
    out
}

/// Random ADMG on `n` nodes: a random DAG plus bidirected edges (bows allowed).
pub fn random_admg(n: usize, p_dir: f64, p_bi: f64, seed: u64) -> MixedGraph {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut g = MixedGraph::with_nodes(GraphKind::Admg, &names).unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, r.random_range(0..=i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(p_dir) {
                g.add_edge_idx(order[i], order[j], Tail, Arrow).unwrap();
            }
            if r.random_bool(p_bi) {
                g.add_edge_idx(order[i], order[j], Arrow, Arrow).unwrap();
            }
        }
    }
    g
}

/// All subsets of `items` as index vectors.
pub fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    (0u32..(1 << items.len()))
        .map(|m| {
            (0..items.len())
                .filter(|&t| m & (1 << t) != 0)
                .map(|t| items[t])
                .collect()
        })
        .collect()
}

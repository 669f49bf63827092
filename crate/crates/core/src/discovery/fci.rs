//! FCI: skeleton, Possible-D-SEP pruning and the complete PAG orientation
//! rules R1-R10.

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;

use super::orient::name_order;
use super::skeleton::{search, Vars};
use super::{check_bk, skeleton, BackgroundKnowledge, DiscoveryError, DiscoveryOutput, DiscoveryParams, SepSetMap};
use crate::citest::CiTest;
use crate::graph::{EdgeMark, GraphKind, MixedGraph};

use EdgeMark::{Arrow, Circle, Tail};

/// Mark at `b` on the edge between `a` and `b`.
#[inline]
fn m(g: &MixedGraph, a: usize, b: usize) -> Option<EdgeMark> {
    g.endpoint(a, b)
}

#[inline]
fn set(g: &mut MixedGraph, a: usize, b: usize, mark: EdgeMark) {
    g.set_endpoint(a, b, mark);
}

/// `a -> b`
#[inline]
fn directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    m(g, b, a) == Some(Tail) && m(g, a, b) == Some(Arrow)
}

/// Nodes reachable from `x` along paths on which every inner node is a
/// collider or the middle of a triangle.
pub fn possible_dsep(g: &MixedGraph, x: usize) -> Vec<usize> {
    let n = g.n();
    let mut seen = vec![false; n * n];
    let mut found = vec![false; n];
    let mut queue = VecDeque::new();
    for b in g.neighbors(x) {
        seen[x * n + b] = true;
        found[b] = true;
        queue.push_back((x, b));
    }
    while let Some((a, b)) = queue.pop_front() {
        for c in g.neighbors(b) {
            if c == a || seen[b * n + c] {
                continue;
            }
            let collider = m(g, a, b) == Some(Arrow) && m(g, c, b) == Some(Arrow);
            if collider || g.adjacent(a, c) {
                seen[b * n + c] = true;
                found[c] = true;
                queue.push_back((b, c));
            }
        }
    }
    found[x] = false;
    (0..n).filter(|&v| found[v]).collect()
}

fn orient_unshielded(g: &mut MixedGraph, sepsets: &SepSetMap) {
    let order = name_order(g);
    for (i, &x) in order.iter().enumerate() {
        for &y in &order[i + 1..] {
            if g.adjacent(x, y) {
                continue;
            }
            for &z in &order {
                if !(g.adjacent(x, z) && g.adjacent(y, z)) {
                    continue;
                }
                let sep = sepsets.get(g.name(x), g.name(y));
                if sep.is_some_and(|s| !s.contains(g.name(z))) {
                    set(g, x, z, Arrow);
                    set(g, y, z, Arrow);
                }
            }
        }
    }
}

fn reset_circles(g: &mut MixedGraph) {
    for e in g.edges() {
        g.set_edge_idx(e.a, e.b, Circle, Circle);
    }
}

/// Arrowhead at `a` wherever `a -> b` is forbidden: `a` cannot cause `b`.
fn apply_knowledge(g: &mut MixedGraph, bk: &BackgroundKnowledge) {
    for e in g.edges() {
        let (na, nb) = (g.name(e.a).to_string(), g.name(e.b).to_string());
        if bk.forbids(&na, &nb) {
            set(g, e.b, e.a, Arrow);
        }
        if bk.forbids(&nb, &na) {
            set(g, e.a, e.b, Arrow);
        }
    }
}

/// FCI with Possible-D-SEP pruning and rules R1-R10.
pub fn fci(
    test: &dyn CiTest,
    bk: &BackgroundKnowledge,
    params: &DiscoveryParams,
) -> Result<DiscoveryOutput, DiscoveryError> {
    check_bk(test, bk)?;
    let names = test.variables().to_vec();
    let (skel, mut sepsets, mut tests_run) = skeleton::run(test, &names, bk, params)?;
    let vars = Vars::new(test, &names)?;
    let mut diagnostics = Vec::new();
    let mut g = skel.with_kind(GraphKind::Pag);
    reset_circles(&mut g);
    orient_unshielded(&mut g, &sepsets);

    let cap = params.pdsep_cap();
    let n = g.n();
    let pds: Vec<Vec<usize>> = (0..n).map(|x| possible_dsep(&g, x)).collect();
    for (x, set) in pds.iter().enumerate() {
        if set.len().saturating_sub(1) > cap {
            diagnostics.push(format!(
                "Possible-D-SEP of {} has {} nodes; conditioning sets truncated at size {cap}",
                g.name(x),
                set.len()
            ));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|&(a, b)| {
            g.adjacent(a, b)
                && !bk.is_required(g.name(a), g.name(b))
                && !bk.is_required(g.name(b), g.name(a))
        })
        .collect();
    // subsets of current adjacencies were already exhausted by the skeleton
    // search unless its conditioning size was capped
    let skeleton_cap = params.max_cond_size.unwrap_or(usize::MAX);
    let frozen = &g;
    let found: Vec<(Option<Vec<usize>>, usize)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let pools: Vec<Vec<usize>> = [(a, b), (b, a)]
                .iter()
                .map(|&(u, w)| pds[u].iter().copied().filter(|&v| v != w).collect())
                .collect();
            let adj: Vec<BTreeSet<usize>> = [(a, b), (b, a)]
                .iter()
                .map(|&(u, w)| frozen.neighbors(u).filter(|&v| v != w).collect())
                .collect();
            let mut total = 0;
            for size in 1..=cap {
                let trimmed: Vec<Vec<usize>> = pools.iter().filter(|p| p.len() >= size).cloned().collect();
                if trimmed.is_empty() {
                    break;
                }
                let (sep, count) = search_pdsep(&vars, a, b, &trimmed, &adj, size, skeleton_cap, params.alpha)?;
                total += count;
                if sep.is_some() {
                    return Ok((sep, total));
                }
            }
            Ok((None, total))
        })
        .collect::<Result<_, DiscoveryError>>()?;
    let mut removed = false;
    for (&(a, b), (sep, count)) in pairs.iter().zip(found) {
        tests_run += count;
        if let Some(s) = sep {
            removed = true;
            g.remove_edge_idx(a, b);
            sepsets.insert(&vars.names[a], &vars.names[b], vars.name_set(&s));
        }
    }
    if removed {
        reset_circles(&mut g);
        orient_unshielded(&mut g, &sepsets);
    }
    apply_knowledge(&mut g, bk);
    apply_rules(&mut g, &sepsets);
    Ok(DiscoveryOutput {
        graph: g,
        sepsets,
        diagnostics,
        tests_run,
    })
}

#[allow(clippy::too_many_arguments)]
fn search_pdsep(
    vars: &Vars<'_>,
    a: usize,
    b: usize,
    pools: &[Vec<usize>],
    adj: &[BTreeSet<usize>],
    size: usize,
    skeleton_cap: usize,
    alpha: f64,
) -> Result<(Option<Vec<usize>>, usize), DiscoveryError> {
    if size > skeleton_cap {
        return search(vars, a, b, pools, size, alpha);
    }
    // drop sets lying inside one endpoint's adjacency
    let mut count = 0;
    let mut tried = BTreeSet::new();
    for pool in pools {
        for s in itertools::Itertools::combinations(pool.iter().copied(), size) {
            if adj.iter().any(|ad| s.iter().all(|v| ad.contains(v))) || !tried.insert(s.clone()) {
                continue;
            }
            count += 1;
            if vars.independent(a, b, &s, alpha)? {
                return Ok((Some(s), count));
            }
        }
    }
    Ok((None, count))
}

/// Applies R1-R4 to a fixpoint, then R5-R10, repeating until nothing changes.
pub(crate) fn apply_rules(g: &mut MixedGraph, sepsets: &SepSetMap) {
    loop {
        while r1(g) | r2(g) | r3(g) | r4(g, sepsets) {}
        let changed = r5(g) | r6(g) | r7(g) | r8(g) | r9(g) | r10(g);
        if !changed {
            break;
        }
    }
}

fn r1(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for b in 0..n {
        for c in 0..n {
            if m(g, b, c).is_none() || m(g, c, b) != Some(Circle) {
                continue;
            }
            if (0..n).any(|a| a != c && m(g, a, b) == Some(Arrow) && !g.adjacent(a, c)) {
                set(g, c, b, Tail);
                set(g, b, c, Arrow);
                changed = true;
            }
        }
    }
    changed
}

fn r2(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if m(g, a, c) != Some(Circle) {
                continue;
            }
            let hit = (0..n).any(|b| {
                b != a
                    && b != c
                    && ((directed(g, a, b) && m(g, b, c) == Some(Arrow))
                        || (m(g, a, b) == Some(Arrow) && directed(g, b, c)))
            });
            if hit {
                set(g, a, c, Arrow);
                changed = true;
            }
        }
    }
    changed
}

fn r3(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for t in 0..n {
        for b in 0..n {
            if m(g, t, b) != Some(Circle) {
                continue;
            }
            let mids: Vec<usize> = (0..n)
                .filter(|&a| {
                    a != t && a != b && m(g, a, b) == Some(Arrow) && m(g, a, t) == Some(Circle)
                })
                .collect();
            let hit = mids
                .iter()
                .enumerate()
                .any(|(i, &a)| mids[i + 1..].iter().any(|&c| !g.adjacent(a, c)));
            if hit {
                set(g, t, b, Arrow);
                changed = true;
            }
        }
    }
    changed
}

/// Discriminating-path rule.
fn r4(g: &mut MixedGraph, sepsets: &SepSetMap) -> bool {
    let n = g.n();
    for b in 0..n {
        for c in 0..n {
            if m(g, c, b) != Some(Circle) {
                continue;
            }
            for a in 0..n {
                // a must be a collider on the path (arrow at a from b) and a parent of c
                if a == b || a == c || m(g, b, a) != Some(Arrow) || !directed(g, a, c) {
                    continue;
                }
                let Some(theta) = discriminating_end(g, a, b, c) else {
                    continue;
                };
                let in_sep = sepsets
                    .get(g.name(theta), g.name(c))
                    .is_some_and(|s| s.contains(g.name(b)));
                if in_sep {
                    set(g, c, b, Tail);
                    set(g, b, c, Arrow);
                } else {
                    set(g, a, b, Arrow);
                    set(g, b, a, Arrow);
                    set(g, c, b, Arrow);
                    set(g, b, c, Arrow);
                }
                return true;
            }
        }
    }
    false
}

/// Start `θ` of a discriminating path `<θ, ..., a, b, c>` for `b`, if any.
fn discriminating_end(g: &MixedGraph, a: usize, b: usize, c: usize) -> Option<usize> {
    let n = g.n();
    let mut visited = vec![false; n];
    visited[a] = true;
    visited[b] = true;
    visited[c] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(v) = queue.pop_front() {
        for t in 0..n {
            if visited[t] || m(g, t, v) != Some(Arrow) {
                continue;
            }
            if !g.adjacent(t, c) {
                return Some(t);
            }
            if m(g, v, t) == Some(Arrow) && directed(g, t, c) {
                visited[t] = true;
                queue.push_back(t);
            }
        }
    }
    None
}

/// Uncovered paths from `start` (after `prev`, which may be `start` itself)
/// to `goal`, with every step accepted by `step`. Calls `visit` with each
/// complete path until it returns true.
fn uncovered_paths(
    g: &MixedGraph,
    path: &mut Vec<usize>,
    goal: usize,
    step: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    let v = *path.last().unwrap();
    if v == goal {
        return visit(path);
    }
    for w in 0..g.n() {
        if !g.adjacent(v, w) || path.contains(&w) || !step(v, w) {
            continue;
        }
        if path.len() >= 2 && g.adjacent(path[path.len() - 2], w) {
            continue;
        }
        path.push(w);
        let done = uncovered_paths(g, path, goal, step, visit);
        path.pop();
        if done {
            return true;
        }
    }
    false
}

fn r5(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for a in 0..n {
        for b in a + 1..n {
            if !(m(g, a, b) == Some(Circle) && m(g, b, a) == Some(Circle)) {
                continue;
            }
            let circle = |u: usize, w: usize| m(g, u, w) == Some(Circle) && m(g, w, u) == Some(Circle);
            let mut found: Option<Vec<usize>> = None;
            for c in 0..n {
                if c == b || !circle(a, c) || g.adjacent(c, b) {
                    continue;
                }
                let mut path = vec![a, c];
                let hit = uncovered_paths(g, &mut path, b, &|u, w| circle(u, w) && !(u == a && w == b), &mut |p| {
                    let theta = p[p.len() - 2];
                    if p.len() >= 4 && !g.adjacent(a, theta) {
                        found = Some(p.to_vec());
                        true
                    } else {
                        false
                    }
                });
                if hit {
                    break;
                }
            }
            if let Some(p) = found {
                g.set_edge_idx(a, b, Tail, Tail);
                for w in p.windows(2) {
                    g.set_edge_idx(w[0], w[1], Tail, Tail);
                }
                changed = true;
            }
        }
    }
    changed
}

fn r6(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for b in 0..n {
        if !(0..n).any(|a| g.is_undirected(a, b)) {
            continue;
        }
        for c in 0..n {
            if m(g, c, b) == Some(Circle) {
                set(g, c, b, Tail);
                changed = true;
            }
        }
    }
    changed
}

fn r7(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for b in 0..n {
        for c in 0..n {
            if m(g, c, b) != Some(Circle) {
                continue;
            }
            let hit = (0..n).any(|a| {
                a != c && m(g, b, a) == Some(Tail) && m(g, a, b) == Some(Circle) && !g.adjacent(a, c)
            });
            if hit {
                set(g, c, b, Tail);
                changed = true;
            }
        }
    }
    changed
}

/// `a o-> c`
fn partially_directed(g: &MixedGraph, a: usize, c: usize) -> bool {
    m(g, c, a) == Some(Circle) && m(g, a, c) == Some(Arrow)
}

fn r8(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if !partially_directed(g, a, c) {
                continue;
            }
            let hit = (0..n).any(|b| {
                b != a
                    && b != c
                    && m(g, b, a) == Some(Tail)
                    && matches!(m(g, a, b), Some(Arrow) | Some(Circle))
                    && directed(g, b, c)
            });
            if hit {
                set(g, c, a, Tail);
                changed = true;
            }
        }
    }
    changed
}

/// Edge `u *-* w` can lie on a potentially directed path from `u` to `w`.
fn pd_step(g: &MixedGraph, u: usize, w: usize) -> bool {
    m(g, w, u) != Some(Arrow) && m(g, u, w) != Some(Tail)
}

fn r9(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if !partially_directed(g, a, c) {
                continue;
            }
            let mut hit = false;
            for b in 0..n {
                if b == c || !g.adjacent(a, b) || g.adjacent(b, c) || !pd_step(g, a, b) {
                    continue;
                }
                let mut path = vec![a, b];
                let step = |u: usize, w: usize| pd_step(g, u, w);
                if uncovered_paths(g, &mut path, c, &step, &mut |_| true) {
                    hit = true;
                    break;
                }
            }
            if hit {
                set(g, c, a, Tail);
                changed = true;
            }
        }
    }
    changed
}

/// First nodes `μ` of uncovered potentially directed paths from `a` to `goal`.
fn pd_first_steps(g: &MixedGraph, a: usize, goal: usize) -> Vec<usize> {
    let step = |u: usize, w: usize| pd_step(g, u, w);
    g.neighbors(a)
        .filter(|&mu| {
            if !pd_step(g, a, mu) {
                return false;
            }
            if mu == goal {
                return true;
            }
            let mut path = vec![a, mu];
            uncovered_paths(g, &mut path, goal, &step, &mut |_| true)
        })
        .collect()
}

fn r10(g: &mut MixedGraph) -> bool {
    let n = g.n();
    let mut changed = false;
    for a in 0..n {
        for c in 0..n {
            if !partially_directed(g, a, c) {
                continue;
            }
            let pa: Vec<usize> = (0..n).filter(|&b| b != a && directed(g, b, c)).collect();
            let mut hit = false;
            'pairs: for (i, &b) in pa.iter().enumerate() {
                let mb = pd_first_steps(g, a, b);
                if mb.is_empty() {
                    continue;
                }
                for &t in &pa[i + 1..] {
                    for w in pd_first_steps(g, a, t) {
                        if mb.iter().any(|&mu| mu != w && !g.adjacent(mu, w)) {
                            hit = true;
                            break 'pairs;
                        }
                    }
                }
            }
            if hit {
                set(g, c, a, Tail);
                changed = true;
            }
        }
    }
    changed
}

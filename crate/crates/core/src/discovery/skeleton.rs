//! Skeleton search with level-wise conditioning sets.

use std::collections::BTreeSet;

use itertools::Itertools;
use rayon::prelude::*;

use super::{BackgroundKnowledge, DiscoveryError, DiscoveryParams, SepSetMap};
use crate::citest::CiTest;
use crate::graph::{EdgeMark, GraphKind, MixedGraph};

/// Name-sorted working view over a test's variables.
pub(crate) struct Vars<'a> {
    pub names: Vec<String>,
    /// Test index of each sorted position.
    pub to_test: Vec<usize>,
    pub test: &'a dyn CiTest,
}

impl<'a> Vars<'a> {
    pub fn new<S: AsRef<str>>(test: &'a dyn CiTest, vars: &[S]) -> Result<Self, DiscoveryError> {
        let mut names: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        names.sort();
        names.dedup();
        if names.len() != vars.len() {
            return Err(DiscoveryError::Params("duplicate variable".into()));
        }
        let to_test = names
            .iter()
            .map(|n| {
                test.index_of(n).map_err(|e| DiscoveryError::Test {
                    x: n.clone(),
                    y: String::new(),
                    z: vec![],
                    source: e,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Vars {
            names,
            to_test,
            test,
        })
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    /// Independence of sorted positions `x`, `y` given `z`.
    pub fn independent(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<bool, DiscoveryError> {
        let zt: Vec<usize> = z.iter().map(|&v| self.to_test[v]).collect();
        self.test
            .test(self.to_test[x], self.to_test[y], &zt, alpha)
            .map(|r| r.independent)
            .map_err(|e| DiscoveryError::Test {
                x: self.names[x].clone(),
                y: self.names[y].clone(),
                z: z.iter().map(|&v| self.names[v].clone()).collect(),
                source: e,
            })
    }

    pub fn name_set(&self, z: &[usize]) -> BTreeSet<String> {
        z.iter().map(|&v| self.names[v].clone()).collect()
    }
}

/// First subset of `pool` of size `size`, in lexicographic order, that
/// separates `x` and `y`; also returns the number of tests run.
pub(crate) fn search(
    vars: &Vars<'_>,
    x: usize,
    y: usize,
    pools: &[Vec<usize>],
    size: usize,
    alpha: f64,
) -> Result<(Option<Vec<usize>>, usize), DiscoveryError> {
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut count = 0;
    for pool in pools {
        if pool.len() < size {
            continue;
        }
        for s in pool.iter().copied().combinations(size) {
            if !tried.insert(s.clone()) {
                continue;
            }
            count += 1;
            if vars.independent(x, y, &s, alpha)? {
                return Ok((Some(s), count));
            }
        }
    }
    Ok((None, count))
}

fn adj_list(adj: &[Vec<bool>], x: usize, skip: usize) -> Vec<usize> {
    (0..adj.len()).filter(|&v| v != skip && adj[x][v]).collect()
}

/// Returns the skeleton over name-sorted variables, the separating sets and
/// the number of tests run.
pub(crate) fn run<S: AsRef<str>>(
    test: &dyn CiTest,
    vars: &[S],
    bk: &BackgroundKnowledge,
    params: &DiscoveryParams,
) -> Result<(MixedGraph, SepSetMap, usize), DiscoveryError> {
    params.validate()?;
    let v = Vars::new(test, vars)?;
    let n = v.n();
    let mut adj = vec![vec![false; n]; n];
    let mut sepsets = SepSetMap::default();
    let mut required = vec![vec![false; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (na, nb) = (&v.names[a], &v.names[b]);
            required[a][b] = bk.is_required(na, nb) || bk.is_required(nb, na);
            if bk.forbids_adjacency(na, nb) {
                if a < b {
                    sepsets.insert(na, nb, BTreeSet::new());
                }
            } else {
                adj[a][b] = true;
            }
        }
    }
    let mut tests_run = 0;
    let mut level = 0;
    loop {
        if params.max_cond_size.is_some_and(|m| level > m) {
            break;
        }
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| adj[a][b] && !required[a][b])
            .collect();
        let any_candidate = pairs.iter().any(|&(a, b)| {
            adj_list(&adj, a, b).len() >= level || adj_list(&adj, b, a).len() >= level
        });
        if !any_candidate {
            break;
        }
        if params.stable {
            let frozen = adj.clone();
            let found: Vec<(Option<Vec<usize>>, usize)> = pairs
                .par_iter()
                .map(|&(a, b)| {
                    let pools = [adj_list(&frozen, a, b), adj_list(&frozen, b, a)];
                    search(&v, a, b, &pools, level, params.alpha)
                })
                .collect::<Result<_, _>>()?;
            for (&(a, b), (sep, count)) in pairs.iter().zip(found) {
                tests_run += count;
                if let Some(s) = sep {
                    adj[a][b] = false;
                    adj[b][a] = false;
                    sepsets.insert(&v.names[a], &v.names[b], v.name_set(&s));
                }
            }
        } else {
            for &(a, b) in &pairs {
                if !adj[a][b] {
                    continue;
                }
                let pools = [adj_list(&adj, a, b), adj_list(&adj, b, a)];
                let (sep, count) = search(&v, a, b, &pools, level, params.alpha)?;
                tests_run += count;
                if let Some(s) = sep {
                    adj[a][b] = false;
                    adj[b][a] = false;
                    sepsets.insert(&v.names[a], &v.names[b], v.name_set(&s));
                }
            }
        }
        level += 1;
    }
    let mut g = MixedGraph::with_nodes(GraphKind::Cpdag, &v.names)?;
    for a in 0..n {
        for b in a + 1..n {
            if adj[a][b] {
                g.add_edge_idx(a, b, EdgeMark::Tail, EdgeMark::Tail)?;
            }
        }
    }
    Ok((g, sepsets, tests_run))
}

/// Undirected skeleton over `vars` plus the separating set of every removed
/// pair. Nodes of the returned graph are in name order.
pub fn pc_skeleton<S: AsRef<str>>(
    test: &dyn CiTest,
    vars: &[S],
    bk: &BackgroundKnowledge,
    params: &DiscoveryParams,
) -> Result<(MixedGraph, SepSetMap), DiscoveryError> {
    if vars.len() < 2 {
        return Err(DiscoveryError::Params("need at least two variables".into()));
    }
    let (g, s, _) = run(test, vars, bk, params)?;
    Ok((g, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::citest::OracleTest;

    #[test]
    fn collider_skeleton() {
        let g = MixedGraph::dag_from_edges(&[("A", "C"), ("B", "C")]).unwrap();
        let t = OracleTest::new(&g);
        let (s, seps) =
            pc_skeleton(&t, g.names(), &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        assert_eq!(s.edge_count(), 2);
        assert!(s.is_undirected(0, 2) && s.is_undirected(1, 2));
        assert!(seps.get("A", "B").unwrap().is_empty());
    }

    #[test]
    fn independent_nodes_give_empty_skeleton() {
        let g = MixedGraph::with_nodes(GraphKind::Dag, &["A", "B", "C"]).unwrap();
        let t = OracleTest::new(&g);
        let (s, seps) =
            pc_skeleton(&t, g.names(), &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        assert_eq!(s.edge_count(), 0);
        assert_eq!(seps.len(), 3);
        assert!(seps.iter().all(|(_, z)| z.is_empty()));
    }

    #[test]
    fn required_edges_survive() {
        let g = MixedGraph::with_nodes(GraphKind::Dag, &["A", "B"]).unwrap();
        let t = OracleTest::new(&g);
        let mut bk = BackgroundKnowledge::new();
        bk.require("A", "B");
        let (s, seps) = pc_skeleton(&t, g.names(), &bk, &DiscoveryParams::default()).unwrap();
        assert_eq!(s.edge_count(), 1);
        assert!(seps.is_empty());
    }

    #[test]
    fn unstable_variant_agrees_under_oracle() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C"), ("A", "D"), ("D", "C")]).unwrap();
        let t = OracleTest::new(&g);
        let stable = DiscoveryParams::default();
        let unstable = DiscoveryParams {
            stable: false,
            ..stable.clone()
        };
        let bk = BackgroundKnowledge::new();
        let (a, _) = pc_skeleton(&t, g.names(), &bk, &stable).unwrap();
        let (b, _) = pc_skeleton(&t, g.names(), &bk, &unstable).unwrap();
        assert_eq!(a, b);
    }
}

mod common;

use perfcausal::citest::{CiTest, OracleTest};
use perfcausal::discovery::{fci, pc, possible_dsep, BackgroundKnowledge, DiscoveryParams};
use perfcausal::graph::{cpdag_of, to_text, EdgeMark, GraphKind, MixedGraph};
use perfcausal::synthlab::{random_dag, random_latent_dag};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn observed(g: &MixedGraph) -> Vec<String> {
    g.names().iter().filter(|n| !n.starts_with('L')).cloned().collect()
}

#[test]
fn pc_oracle_recovers_cpdag() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 7);
        let dag = random_dag(n, 0.3, seed);
        let out = pc(&OracleTest::new(&dag), &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        let want = cpdag_of(&dag).unwrap();
        let diff = common::mark_diff(&out.graph, &want);
        assert!(diff.is_empty(), "seed {seed}: {diff:?}");
        assert!(out.diagnostics.is_empty(), "seed {seed}: {:?}", out.diagnostics);
    }
}

#[test]
fn pc_is_invariant_to_variable_order() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..10 {
        let dag = random_dag(7, 0.35, 500 + seed);
        let base = pc(&OracleTest::new(&dag), &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        let mut names = dag.names().to_vec();
        for _ in 0..20 {
            names.shuffle(&mut r);
            let t = OracleTest::observing(&dag, &names).unwrap();
            let out = pc(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
            assert_eq!(out.graph, base.graph);
            assert_eq!(out.sepsets, base.sepsets);
        }
    }
}

#[test]
fn oracle_output_ignores_alpha() {
    for seed in 0..20 {
        let dag = random_dag(6, 0.4, 900 + seed);
        let t = OracleTest::new(&dag);
        let runs: Vec<_> = [0.001, 0.05, 0.5]
            .iter()
            .map(|&alpha| {
                let params = DiscoveryParams {
                    alpha,
                    ..DiscoveryParams::default()
                };
                pc(&t, &BackgroundKnowledge::new(), &params).unwrap().graph
            })
            .collect();
        assert!(runs.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn sepsets_cover_removed_edges_and_retest_independent() {
    for seed in 0..40 {
        let g = random_latent_dag(5, 1, 0.4, seed);
        let obs = observed(&g);
        let t = OracleTest::observing(&g, &obs).unwrap();
        for out in [
            pc(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap(),
            fci(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap(),
        ] {
            let p = &out.graph;
            for a in 0..p.n() {
                for b in a + 1..p.n() {
                    if p.adjacent(a, b) {
                        continue;
                    }
                    let sep = out.sepsets.get(p.name(a), p.name(b)).expect("removed edge has a sepset");
                    let z: Vec<usize> = sep.iter().map(|s| t.index_of(s).unwrap()).collect();
                    let r = t
                        .test(t.index_of(p.name(a)).unwrap(), t.index_of(p.name(b)).unwrap(), &z, 0.01)
                        .unwrap();
                    assert!(r.independent, "seed {seed}");
                }
            }
        }
    }
}

#[test]
fn fci_matches_mag_enumeration() {
    for seed in 0..60 {
        let n_obs = 3 + (seed as usize % 3);
        let g = random_latent_dag(n_obs, 1 + (seed as usize % 2), 0.35, seed);
        let obs = observed(&g);
        let refs: Vec<&str> = obs.iter().map(String::as_str).collect();
        let want = common::pag_brute(&g, &refs);
        let t = OracleTest::observing(&g, &obs).unwrap();
        let out = fci(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        assert_eq!(out.graph.kind(), GraphKind::Pag);
        let diff = common::mark_diff(&out.graph, &want);
        assert!(diff.is_empty(), "seed {seed}: {diff:?}\n{}", to_text(&g));
    }
}

#[test]
fn fci_on_a_causally_sufficient_model_has_no_bidirected_edges() {
    for seed in 0..30 {
        let dag = random_dag(5, 0.4, 300 + seed);
        let out = fci(&OracleTest::new(&dag), &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        let p = &out.graph;
        // same skeleton as the DAG
        for a in 0..dag.n() {
            for b in a + 1..dag.n() {
                let (pa, pb) = (p.index_of(dag.name(a)).unwrap(), p.index_of(dag.name(b)).unwrap());
                assert_eq!(dag.adjacent(a, b), p.adjacent(pa, pb), "seed {seed}");
            }
        }
        for e in p.edges() {
            assert!(!(e.mark_a == EdgeMark::Arrow && e.mark_b == EdgeMark::Arrow), "seed {seed}");
        }
    }
}

#[test]
fn possible_dsep_contains_adjacencies() {
    let g = random_latent_dag(5, 2, 0.4, 4);
    let obs = observed(&g);
    let t = OracleTest::observing(&g, &obs).unwrap();
    let p = fci(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap().graph;
    for v in 0..p.n() {
        let pds = possible_dsep(&p, v);
        assert!(p.neighbors(v).all(|u| pds.contains(&u)));
        assert!(!pds.contains(&v));
    }
}

#[test]
fn tiers_orient_option_edges_forward() {
    let dag = MixedGraph::dag_from_edges(&[("o1", "perf"), ("o2", "perf")]).unwrap();
    // o1 -> perf <- o2 is a collider anyway; a single option needs tiers
    let single = MixedGraph::dag_from_edges(&[("o1", "perf")]).unwrap();
    let mut bk = BackgroundKnowledge::new();
    bk.set_tier(0, &["o1"]).set_tier(1, &["perf"]);
    let out = pc(&OracleTest::new(&single), &bk, &DiscoveryParams::default()).unwrap();
    assert!(out.graph.is_directed(0, 1));
    // knowledge about variables outside the data is rejected
    bk.set_tier(0, &["o1", "o2"]);
    assert!(pc(&OracleTest::new(&single), &bk, &DiscoveryParams::default()).is_err());
    let out = pc(&OracleTest::new(&dag), &bk, &DiscoveryParams::default()).unwrap();
    assert_eq!(out.graph, cpdag_of(&dag).unwrap().with_kind(GraphKind::Cpdag));
}

#[test]
fn fci_matches_mag_enumeration_under_selection() {
    use rand::Rng;
    for seed in 0..60u64 {
        let n_obs = 4 + (seed as usize % 2);
        let mut g = random_latent_dag(n_obs, (seed as usize / 3) % 3, 0.35, 7000 + seed);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = g.add_node("S").unwrap();
        let a = r.random_range(0..n_obs);
        let b = (a + 1 + r.random_range(0..n_obs - 1)) % n_obs;
        g.add_edge_idx(a, s, EdgeMark::Tail, EdgeMark::Arrow).unwrap();
        g.add_edge_idx(b, s, EdgeMark::Tail, EdgeMark::Arrow).unwrap();
        let obs: Vec<String> = observed(&g).into_iter().filter(|n| n != "S").collect();
        let refs: Vec<&str> = obs.iter().map(String::as_str).collect();
        let want = common::pag_brute_selected(&g, &refs, &["S"]);
        let t = OracleTest::with_selection(&g, &obs, &["S"]).unwrap();
        let out = fci(&t, &BackgroundKnowledge::new(), &DiscoveryParams::default()).unwrap();
        let diff = common::mark_diff(&out.graph, &want);
        assert!(diff.is_empty(), "seed {seed}: {diff:?}\n{}", to_text(&g));
    }
}

use perfcausal::citest::{fisher_z, g_squared, oracle_test, stratum_g2, AutoTest, CiTest, FisherZ, GSquared};
use perfcausal::dataset::{Column, Dataset, Metadata, VariableMeta};
use perfcausal::graph::{MixedGraph, NodeRole};
use perfcausal::synthlab::{random_dag, simulate, MechanismKind, Scm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn continuous(cols: &[(&str, Vec<f64>)]) -> Dataset {
    let vars = cols.iter().map(|(n, _)| VariableMeta::continuous(n, NodeRole::Performance)).collect();
    let columns = cols.iter().map(|(_, c)| Column::Continuous(c.clone())).collect();
    Dataset::new(vars, columns).unwrap()
}

#[test]
fn independent_normals_pass_and_p_values_look_uniform() {
    let d = continuous(&[("x", normals(1000, 7)), ("y", normals(1000, 7 + 1_000_000))]);
    assert!(fisher_z(&d, "x", "y", &[], 0.01).unwrap().independent);

    let ps: Vec<f64> = (0..100u64)
        .map(|s| {
            let d = continuous(&[("x", normals(1000, 2 * s)), ("y", normals(1000, 2 * s + 1))]);
            fisher_z(&d, "x", "y", &[], 0.01).unwrap().p_value
        })
        .collect();
    // Kolmogorov-Smirnov distance to U(0,1); 0.16 is above the 1% critical value for n = 100
    let mut sorted = ps.clone();
    sorted.sort_by(f64::total_cmp);
    let ks = sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64 / 100.0 - p).abs().max((p - i as f64 / 100.0).abs()))
        .fold(0.0, f64::max);
    assert!(ks < 0.16, "KS distance {ks}");
}

#[test]
fn identical_columns_are_maximally_dependent() {
    let x = normals(500, 3);
    let d = continuous(&[("x", x.clone()), ("y", x)]);
    let r = fisher_z(&d, "x", "y", &[], 0.01).unwrap();
    assert!(!r.independent);
    assert!(r.p_value < 1e-12);
    assert!(r.statistic.is_finite());
}

#[test]
fn linear_chain_screens_off() {
    let g = MixedGraph::dag_from_edges(&[("x", "z"), ("z", "y")]).unwrap();
    let m = Scm::sample(&g, MechanismKind::LinearGaussian, 0, 7).unwrap();
    let d = simulate(&m, 10_000, None, 7).unwrap();
    let r = fisher_z(&d, "x", "y", &["z"], 0.01).unwrap();
    assert!(r.independent, "p = {}", r.p_value);
    assert_eq!(r.independent, oracle_test(&g, "x", "y", &["z"], 0.01).unwrap().independent);
    assert!(!fisher_z(&d, "x", "y", &[], 0.01).unwrap().independent);
}

#[test]
fn false_rejection_rate_matches_alpha() {
    // x -> z, y isolated: x and y are marginally independent
    let mut g = MixedGraph::dag_from_edges(&[("x", "z")]).unwrap();
    g.add_node("y").unwrap();
    let alpha = 0.01;
    let rejections = (0..1000u64)
        .filter(|&s| {
            let m = Scm::sample(&g, MechanismKind::LinearGaussian, 0, s).unwrap();
            let d = simulate(&m, 10_000, None, s).unwrap();
            !fisher_z(&d, "x", "y", &[], alpha).unwrap().independent
        })
        .count();
    let rate = rejections as f64 / 1000.0;
    assert!((rate - alpha).abs() <= 0.02, "rate {rate}");
}

#[test]
fn g_squared_tables() {
    let table = |counts: [[u32; 2]; 2]| {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    x.push(i as u32);
                    y.push(j as u32);
                }
            }
        }
        GSquared::from_codes(vec!["x".into(), "y".into()], vec![x, y], vec![2, 2])
    };
    let r = table([[50, 50], [50, 50]]).test(0, 1, &[], 0.01).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(r.independent);
    let r = table([[100, 0], [0, 100]]).test(0, 1, &[], 0.01).unwrap();
    assert!(!r.independent);
}

#[test]
fn g_squared_agrees_with_oracle() {
    let mut agree = 0;
    for seed in 0..100u64 {
        let g = random_dag(5, 0.4, seed);
        let m = Scm::sample(&g, MechanismKind::Discrete, 2, seed).unwrap();
        let d = simulate(&m, 20_000, None, seed).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let names = g.names().to_vec();
        let x = r.random_range(0..5);
        let y = (x + 1 + r.random_range(0..4)) % 5;
        let z: Vec<&str> = (0..5)
            .filter(|&v| v != x && v != y && r.random_bool(0.4))
            .map(|v| names[v].as_str())
            .collect();
        let got = g_squared(&d, &names[x], &names[y], &z, 0.01).unwrap().independent;
        let want = oracle_test(&g, &names[x], &names[y], &z, 0.01).unwrap().independent;
        agree += usize::from(got == want);
    }
    assert!(agree >= 95, "{agree}/100");
}

#[test]
fn g_squared_is_additive_over_strata() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let n = 3000;
    let x: Vec<u32> = (0..n).map(|_| r.random_range(0..3)).collect();
    let y: Vec<u32> = x.iter().map(|&v| if r.random_bool(0.3) { v % 2 } else { r.random_range(0..2) }).collect();
    let z: Vec<u32> = (0..n).map(|_| r.random_range(0..2)).collect();
    let t = GSquared::from_codes(vec!["x".into(), "y".into(), "z".into()], vec![x.clone(), y.clone(), z.clone()], vec![3, 2, 2]);
    let (total, dof) = t.statistic(0, 1, &[2]);
    let mut parts = 0.0;
    for level in 0..2 {
        let mut table = vec![0.0; 6];
        for i in 0..n {
            if z[i] == level {
                table[x[i] as usize * 2 + y[i] as usize] += 1.0;
            }
        }
        parts += stratum_g2(&table, 3, 2);
    }
    assert!((total - parts).abs() < 1e-9);
    assert_eq!(dof, 4);
    // exactly factorized strata contribute nothing
    assert_eq!(stratum_g2(&[10.0, 20.0, 30.0, 60.0], 2, 2), 0.0);
    assert!(stratum_g2(&[10.0, 20.0, 30.0, 61.0], 2, 2) > 0.0);
}

#[test]
fn mixed_data_dispatches_per_query() {
    let g = MixedGraph::dag_from_edges(&[("o", "p")]).unwrap();
    let m = Scm::sample(&g, MechanismKind::Discrete, 2, 4).unwrap();
    let d = simulate(&m, 2000, None, 4).unwrap();
    let mut vars = d.vars().to_vec();
    vars.push(VariableMeta::continuous("t", NodeRole::Performance));
    let mut cols: Vec<Column> = (0..d.n_vars()).map(|i| d.column(i).clone()).collect();
    cols.push(Column::Continuous(normals(2000, 5)));
    let d = Dataset::new(vars, cols).unwrap();
    let t = AutoTest::new(&d).unwrap();
    assert_eq!(t.test_names("o", "p", &[], 0.01).unwrap().test_name, "g_squared");
    assert_eq!(t.test_names("o", "t", &[], 0.01).unwrap().test_name, "fisher_z");
}

#[test]
fn csv_round_trip_of_simulated_data() {
    let g = random_dag(4, 0.5, 3);
    let m = Scm::sample(&g, MechanismKind::Discrete, 3, 3).unwrap();
    let d = simulate(&m, 300, None, 3).unwrap();
    let mut buf = Vec::new();
    d.to_csv(&mut buf).unwrap();
    let meta = Metadata::parse(&d.metadata().to_toml()).unwrap();
    let back = Dataset::from_csv(buf.as_slice(), &meta).unwrap();
    assert_eq!(back, d);
}

fn fz_data(seed: u64) -> Dataset {
    let a = normals(400, seed);
    let b: Vec<f64> = a.iter().zip(normals(400, seed + 1)).map(|(a, e)| 0.5 * a + e).collect();
    let c: Vec<f64> = b.iter().zip(normals(400, seed + 2)).map(|(b, e)| b - 0.3 * e).collect();
    continuous(&[("a", a), ("b", b), ("c", c)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn tests_are_symmetric(seed in 0u64..1000) {
        let d = fz_data(seed);
        let f = FisherZ::new(&d).unwrap();
        prop_assert_eq!(f.test(0, 2, &[1], 0.01).unwrap(), f.test(2, 0, &[1], 0.01).unwrap());
        prop_assert_eq!(f.test(0, 1, &[], 0.01).unwrap(), f.test(1, 0, &[], 0.01).unwrap());

        let g = random_dag(4, 0.5, seed);
        let m = Scm::sample(&g, MechanismKind::Discrete, 3, seed).unwrap();
        let d = simulate(&m, 500, None, seed).unwrap();
        let t = GSquared::new(&d).unwrap();
        prop_assert_eq!(t.test(0, 1, &[2, 3], 0.01).unwrap(), t.test(1, 0, &[2, 3], 0.01).unwrap());
        prop_assert_eq!(t.test(2, 3, &[0], 0.01).unwrap(), t.test(3, 2, &[0], 0.01).unwrap());
    }

    #[test]
    fn fisher_z_is_affine_invariant(seed in 0u64..1000, scale in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64], shift in -100.0..100.0f64) {
        let d = fz_data(seed);
        let before = fisher_z(&d, "a", "c", &["b"], 0.01).unwrap();
        let Column::Continuous(b) = d.column(1).clone() else { unreachable!() };
        let moved: Vec<f64> = b.iter().map(|v| scale * v + shift).collect();
        let Column::Continuous(a) = d.column(0).clone() else { unreachable!() };
        let Column::Continuous(c) = d.column(2).clone() else { unreachable!() };
        let d2 = continuous(&[("a", a), ("b", moved), ("c", c)]);
        let after = fisher_z(&d2, "a", "c", &["b"], 0.01).unwrap();
        prop_assert!((before.p_value - after.p_value).abs() < 1e-8);
        prop_assert!((before.statistic.abs() - after.statistic.abs()).abs() < 1e-8);
    }
}

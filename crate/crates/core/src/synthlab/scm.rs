//! Structural causal models, simulation and environment shifts.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rng, sample_structure, ScmSpec, SynthError};
use crate::dataset::{Column, Dataset, VariableMeta};
use crate::distribution::strides;
use crate::graph::{from_text, to_text, GraphKind, MixedGraph, NodeRole};

/// Smallest CPT cell before renormalization.
pub const CPT_FLOOR: f64 = 0.02;
/// Rows per simulation shard; each shard owns one generator stream.
pub const SHARD_ROWS: usize = 4096;
/// Stream offsets keeping simulation and shift draws apart from structure and
/// mechanism streams under the same seed.
pub const SIMULATION_STREAM_BASE: u64 = 1 << 32;
pub const SHIFT_STREAM_BASE: u64 = 2 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismKind {
    Discrete,
    LinearGaussian,
}

/// Per-node mechanism. Parents are the node's graph parents in ascending
/// index order; CPT rows are indexed with the first parent varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mechanism {
    Discrete { cpt: Vec<Vec<f64>> },
    Linear {
        weights: Vec<f64>,
        intercept: f64,
        noise_sd: f64,
    },
}

impl Mechanism {
    fn sample(kind: MechanismKind, levels: usize, parent_levels: &[usize], r: &mut ChaCha20Rng) -> Self {
        match kind {
            MechanismKind::Discrete => {
                let rows: usize = parent_levels.iter().product();
                let cpt = (0..rows).map(|_| dirichlet_row(levels, r)).collect();
                Mechanism::Discrete { cpt }
            }
            MechanismKind::LinearGaussian => {
                let weights = parent_levels
                    .iter()
                    .map(|_| {
                        let w = r.random_range(0.4..=1.2);
                        if r.random_bool(0.5) {
                            w
                        } else {
                            -w
                        }
                    })
                    .collect();
                Mechanism::Linear {
                    weights,
                    intercept: 0.0,
                    noise_sd: r.random_range(0.5..=1.0),
                }
            }
        }
    }
}

fn dirichlet_row(k: usize, r: &mut ChaCha20Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..k).map(|_| Exp1.sample(r)).collect();
    let total: f64 = g.iter().sum();
    let floored: Vec<f64> = g.iter().map(|x| (x / total).max(CPT_FLOOR)).collect();
    let total: f64 = floored.iter().sum();
    floored.into_iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    graph: MixedGraph,
    /// Level count per node; 0 marks a continuous node.
    levels: Vec<usize>,
    parents: Vec<Vec<usize>>,
    mechanisms: Vec<Mechanism>,
    order: Vec<usize>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ScmFile {
    seed: u64,
    graph: String,
    nodes: Vec<NodeFile>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    name: String,
    levels: usize,
    parents: Vec<String>,
    mechanism: Mechanism,
}

impl Scm {
    pub fn new(
        graph: MixedGraph,
        levels: Vec<usize>,
        mechanisms: Vec<Mechanism>,
        seed: u64,
    ) -> Result<Self, SynthError> {
        if graph.kind() != GraphKind::Dag {
            return Err(SynthError::Spec("an SCM needs a DAG".into()));
        }
        graph.validate()?;
        let n = graph.n();
        if levels.len() != n || mechanisms.len() != n {
            return Err(SynthError::Spec("one level count and mechanism per node".into()));
        }
        let parents: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut p: Vec<usize> = graph.parents(v).collect();
                p.sort_unstable();
                p
            })
            .collect();
        for v in 0..n {
            let name = graph.name(v);
            match &mechanisms[v] {
                Mechanism::Discrete { cpt } => {
                    if levels[v] < 2 {
                        return Err(SynthError::Spec(format!("`{name}` needs at least 2 levels")));
                    }
                    let mut rows = 1;
                    for &p in &parents[v] {
                        if levels[p] == 0 {
                            return Err(SynthError::Spec(format!(
                                "discrete `{name}` has continuous parent `{}`",
                                graph.name(p)
                            )));
                        }
                        rows *= levels[p];
                    }
                    if cpt.len() != rows {
                        return Err(SynthError::Spec(format!(
                            "`{name}` has {} CPT rows, expected {rows}",
                            cpt.len()
                        )));
                    }
                    for row in cpt {
                        let total: f64 = row.iter().sum();
                        if row.len() != levels[v]
                            || row.iter().any(|&p| !(0.0..=1.0).contains(&p))
                            || (total - 1.0).abs() > 1e-12
                        {
                            return Err(SynthError::Spec(format!("`{name}` has an invalid CPT row")));
                        }
                    }
                }
                Mechanism::Linear {
                    weights, noise_sd, ..
                } => {
                    if levels[v] != 0 {
                        return Err(SynthError::Spec(format!("linear `{name}` must be continuous")));
                    }
                    if weights.len() != parents[v].len() || !(*noise_sd >= 0.0) {
                        return Err(SynthError::Spec(format!("`{name}` has malformed weights")));
                    }
                }
            }
        }
        let order = graph.topological_order()?;
        Ok(Scm {
            graph,
            levels,
            parents,
            mechanisms,
            order,
            seed,
        })
    }

    /// Samples mechanisms for every node of `graph`; node `i` draws from
    /// stream `i + 1` of `seed`.
    pub fn sample(
        graph: &MixedGraph,
        kind: MechanismKind,
        levels: usize,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let n = graph.n();
        let node_levels = vec![if kind == MechanismKind::Discrete { levels } else { 0 }; n];
        let mechanisms = (0..n)
            .map(|v| {
                let mut r = rng(seed, v as u64 + 1);
                let mut ps: Vec<usize> = graph.parents(v).collect();
                ps.sort_unstable();
                let pl: Vec<usize> = ps.iter().map(|&p| node_levels[p]).collect();
                Mechanism::sample(kind, node_levels[v], &pl, &mut r)
            })
            .collect();
        Scm::new(graph.clone(), node_levels, mechanisms, seed)
    }

    pub fn from_spec(spec: &ScmSpec) -> Result<Self, SynthError> {
        let g = sample_structure(spec)?;
        Scm::sample(&g, spec.mechanism, spec.levels, spec.seed)
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn mechanism(&self, v: usize) -> &Mechanism {
        &self.mechanisms[v]
    }

    pub fn mechanisms(&self) -> &[Mechanism] {
        &self.mechanisms
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_discrete(&self) -> bool {
        self.levels.iter().all(|&l| l > 0)
    }

    /// Observed nodes: everything except latent-role nodes.
    pub fn observed(&self) -> Vec<usize> {
        (0..self.graph.n())
            .filter(|&v| self.graph.role(v) != Some(NodeRole::Latent))
            .collect()
    }

    pub(crate) fn cpt_row(&self, v: usize, values: &[u32]) -> &[f64] {
        let Mechanism::Discrete { cpt } = &self.mechanisms[v] else {
            panic!("continuous node has no CPT");
        };
        let mut row = 0;
        for &p in &self.parents[v] {
            row = row * self.levels[p] + values[p] as usize;
        }
        &cpt[row]
    }

    fn draw_row(&self, r: &mut ChaCha20Rng, values: &mut [f64], codes: &mut [u32]) {
        for &v in &self.order {
            match &self.mechanisms[v] {
                Mechanism::Discrete { .. } => {
                    let row = self.cpt_row(v, codes);
                    let u: f64 = r.random();
                    let mut acc = 0.0;
                    let mut pick = row.len() - 1;
                    for (k, p) in row.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    codes[v] = pick as u32;
                    values[v] = pick as f64;
                }
                Mechanism::Linear {
                    weights,
                    intercept,
                    noise_sd,
                } => {
                    let mut x = *intercept;
                    for (w, &p) in weights.iter().zip(&self.parents[v]) {
                        x += w * values[p];
                    }
                    let e: f64 = StandardNormal.sample(r);
                    values[v] = x + noise_sd * e;
                }
            }
        }
    }

    /// Replaces the mechanisms of `targets` with a fresh draw.
    pub fn with_resampled(&self, targets: &[usize], seed: u64) -> Scm {
        let mut out = self.clone();
        for &v in targets {
            let mut r = rng(seed, SHIFT_STREAM_BASE + v as u64 + 1);
            let pl: Vec<usize> = self.parents[v].iter().map(|&p| self.levels[p]).collect();
            let kind = match self.mechanisms[v] {
                Mechanism::Discrete { .. } => MechanismKind::Discrete,
                Mechanism::Linear { .. } => MechanismKind::LinearGaussian,
            };
            out.mechanisms[v] = Mechanism::sample(kind, self.levels[v], &pl, &mut r);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = ScmFile {
            seed: self.seed,
            graph: to_text(&self.graph),
            nodes: (0..self.graph.n())
                .map(|v| NodeFile {
                    name: self.graph.name(v).to_string(),
                    levels: self.levels[v],
                    parents: self.graph.names_of(self.parents[v].iter().copied()),
                    mechanism: self.mechanisms[v].clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("scm serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let file: ScmFile =
            serde_json::from_str(text).map_err(|e| SynthError::Spec(e.to_string()))?;
        let graph = from_text(&file.graph).map_err(|e| SynthError::Spec(e.to_string()))?;
        let mut levels = vec![0; graph.n()];
        let mut mechs = vec![None; graph.n()];
        for node in file.nodes {
            let v = graph.index_of(&node.name)?;
            let mut expected: Vec<usize> = graph.parents(v).collect();
            expected.sort_unstable();
            if graph.names_of(expected) != node.parents {
                return Err(SynthError::Spec(format!(
                    "parents of `{}` disagree with the graph",
                    node.name
                )));
            }
            levels[v] = node.levels;
            mechs[v] = Some(node.mechanism);
        }
        let mechanisms = mechs
            .into_iter()
            .enumerate()
            .map(|(v, m)| {
                m.ok_or_else(|| SynthError::Spec(format!("no mechanism for `{}`", graph.name(v))))
            })
            .collect::<Result<_, _>>()?;
        Scm::new(graph, levels, mechanisms, file.seed)
    }

    /// Adds a binary selection node `name` whose P(name=1 | inputs) follows `sel`.
    pub fn with_selection_node(&self, sel: &SelectionMechanism, name: &str) -> Result<(Scm, usize), SynthError> {
        let inputs = sel.resolve(self)?;
        let mut g = self.graph.clone();
        let s = g.add_node(name)?;
        g.set_role_idx(s, Some(NodeRole::SelectionVar));
        for &i in &inputs {
            g.add_edge_idx(i, s, crate::graph::EdgeMark::Tail, crate::graph::EdgeMark::Arrow)?;
        }
        // CPT rows follow ascending parent order; remap from the mechanism's input order
        let mut sorted = inputs.clone();
        sorted.sort_unstable();
        let in_levels: Vec<usize> = inputs.iter().map(|&i| self.levels[i]).collect();
        let in_strides = strides(&in_levels);
        let sorted_levels: Vec<usize> = sorted.iter().map(|&i| self.levels[i]).collect();
        let rows: usize = sorted_levels.iter().product();
        let cpt = (0..rows)
            .map(|row| {
                let mut rem = row;
                let mut vals = vec![0usize; sorted.len()];
                for k in (0..sorted.len()).rev() {
                    vals[k] = rem % sorted_levels[k];
                    rem /= sorted_levels[k];
                }
                let cell: usize = inputs
                    .iter()
                    .zip(&in_strides)
                    .map(|(i, st)| vals[sorted.iter().position(|s| s == i).unwrap()] * st)
                    .sum();
                let p = sel.probs[cell];
                vec![1.0 - p, p]
            })
            .collect();
        let mut levels = self.levels.clone();
        levels.push(2);
        let mut mechanisms = self.mechanisms.clone();
        mechanisms.push(Mechanism::Discrete { cpt });
        Ok((Scm::new(g, levels, mechanisms, self.seed)?, s))
    }
}

/// Inclusion probabilities indexed by the joint level of `inputs`, first input
/// varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMechanism {
    pub inputs: Vec<String>,
    pub probs: Vec<f64>,
}

impl SelectionMechanism {
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| SynthError::Spec(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("selection serializes")
    }

    /// Validates against `m` and returns input node indices.
    pub fn resolve(&self, m: &Scm) -> Result<Vec<usize>, SynthError> {
        let idx = m.graph.indices_of(&self.inputs)?;
        let mut size = 1;
        for &i in &idx {
            if m.levels[i] == 0 {
                return Err(SynthError::Unsupported(format!(
                    "selection input `{}` is continuous",
                    m.graph.name(i)
                )));
            }
            size *= m.levels[i];
        }
        if self.probs.len() != size {
            return Err(SynthError::Spec(format!(
                "selection needs {size} probabilities, got {}",
                self.probs.len()
            )));
        }
        if self.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(SynthError::Spec("inclusion probabilities must lie in [0,1]".into()));
        }
        Ok(idx)
    }

    fn inclusion(&self, idx: &[usize], levels: &[usize], codes: &[u32]) -> f64 {
        let mut cell = 0;
        for &i in idx {
            cell = cell * levels[i] + codes[i] as usize;
        }
        self.probs[cell]
    }
}

/// Ancestral sampling of `n` rows. Rows are produced in shards of
/// [`SHARD_ROWS`]; shard `k` draws from stream `SIMULATION_STREAM_BASE + k` of
/// `seed`, so output is independent of thread scheduling. Latent columns are
/// dropped.
pub fn simulate(
    m: &Scm,
    n: usize,
    sel: Option<&SelectionMechanism>,
    seed: u64,
) -> Result<Dataset, SynthError> {
    if n == 0 {
        return Err(SynthError::Spec("n must be at least 1".into()));
    }
    let sel_idx = sel.map(|s| s.resolve(m)).transpose()?;
    let shards = n.div_ceil(SHARD_ROWS);
    let k = m.graph.n();
    let produced: Vec<Vec<f64>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let quota = SHARD_ROWS.min(n - s * SHARD_ROWS);
            let mut r = rng(seed, SIMULATION_STREAM_BASE + s as u64);
            let mut out = Vec::with_capacity(quota * k);
            let mut values = vec![0.0; k];
            let mut codes = vec![0u32; k];
            let cap = 1000 * quota;
            let mut draws = 0;
            let mut accepted = 0;
            while accepted < quota {
                if draws == cap {
                    return Err(SynthError::DegenerateSelection {
                        accepted,
                        wanted: quota,
                        draws,
                    });
                }
                draws += 1;
                m.draw_row(&mut r, &mut values, &mut codes);
                if let (Some(sel), Some(idx)) = (sel, &sel_idx) {
                    let p = sel.inclusion(idx, &m.levels, &codes);
                    // certain outcomes spend no uniform, so inclusion 1.0
                    // reproduces the unbiased stream exactly
                    let keep = p >= 1.0 || (p > 0.0 && r.random::<f64>() < p);
                    if !keep {
                        continue;
                    }
                }
                out.extend_from_slice(&values);
                accepted += 1;
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let observed = m.observed();
    let mut vars = Vec::with_capacity(observed.len());
    let mut columns = Vec::with_capacity(observed.len());
    for &v in &observed {
        let name = m.graph.name(v);
        let role = match m.graph.role(v) {
            Some(NodeRole::Option) => NodeRole::Option,
            _ => NodeRole::Performance,
        };
        let vals = produced.iter().flat_map(|shard| shard.chunks(k).map(move |row| row[v]));
        if m.levels[v] > 0 {
            vars.push(VariableMeta::discrete_k(name, role, m.levels[v]));
            columns.push(Column::Discrete(vals.map(|x| x as u32).collect()));
        } else {
            vars.push(VariableMeta::continuous(name, role));
            columns.push(Column::Continuous(vals.collect()));
        }
    }
    Ok(Dataset::new(vars, columns)?)
}

/// Resamples the mechanisms of exactly `targets`; the graph and all other
/// mechanisms are untouched.
pub fn shift_environment<S: AsRef<str>>(m: &Scm, targets: &[S], seed: u64) -> Result<Scm, SynthError> {
    let idx = m.graph.indices_of(targets)?;
    Ok(m.with_resampled(&idx, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_scm() -> Scm {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("B", "C")]).unwrap();
        Scm::sample(&g, MechanismKind::Discrete, 3, 11).unwrap()
    }

    #[test]
    fn cpt_rows_are_distributions_with_floor() {
        let m = chain_scm();
        for mech in m.mechanisms() {
            let Mechanism::Discrete { cpt } = mech else { panic!() };
            for row in cpt {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&p| p >= CPT_FLOOR * 0.9));
            }
        }
        assert_eq!(m.parents(2), &[1]);
    }

    #[test]
    fn linear_parameters_in_range() {
        let g = MixedGraph::dag_from_edges(&[("A", "B"), ("C", "B")]).unwrap();
        let m = Scm::sample(&g, MechanismKind::LinearGaussian, 0, 3).unwrap();
        let Mechanism::Linear { weights, noise_sd, .. } = m.mechanism(1) else { panic!() };
        assert_eq!(weights.len(), 2);
        assert!(weights.iter().all(|w| (0.4..=1.2).contains(&w.abs())));
        assert!((0.5..=1.0).contains(noise_sd));
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = chain_scm();
        let a = simulate(&m, 5000, None, 1).unwrap();
        let b = simulate(&m, 5000, None, 1).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate(&m, 5000, None, 2).unwrap());
        assert_eq!(a.n_rows(), 5000);
    }

    #[test]
    fn trivial_selection_matches_unbiased() {
        let m = chain_scm();
        let sel = SelectionMechanism {
            inputs: vec!["A".into()],
            probs: vec![1.0; 3],
        };
        let a = simulate(&m, 3000, Some(&sel), 5).unwrap();
        let b = simulate(&m, 3000, None, 5).unwrap();
        assert_eq!(a, b);
        let zero = SelectionMechanism {
            inputs: vec!["A".into()],
            probs: vec![0.0; 3],
        };
        assert!(matches!(
            simulate(&m, 10, Some(&zero), 5),
            Err(SynthError::DegenerateSelection { .. })
        ));
    }

    #[test]
    fn shift_touches_only_targets() {
        let m = chain_scm();
        let s = shift_environment(&m, &["C"], 99).unwrap();
        assert_eq!(s.mechanism(0), m.mechanism(0));
        assert_eq!(s.mechanism(1), m.mechanism(1));
        assert_ne!(s.mechanism(2), m.mechanism(2));
        assert_eq!(s.graph(), m.graph());
        let none: &[&str] = &[];
        assert_eq!(shift_environment(&m, none, 99).unwrap(), m);
        assert!(shift_environment(&m, &["Q"], 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = chain_scm();
        assert_eq!(Scm::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn latent_columns_are_dropped() {
        let mut g = MixedGraph::dag_from_edges(&[("L", "X"), ("L", "Y")]).unwrap();
        g.set_role("L", NodeRole::Latent).unwrap();
        let m = Scm::sample(&g, MechanismKind::Discrete, 2, 1).unwrap();
        let d = simulate(&m, 100, None, 1).unwrap();
        assert_eq!(d.names(), vec!["X".to_string(), "Y".to_string()]);
    }
}

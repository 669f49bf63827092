//! Synthetic ground truth: random configurable-system structures, structural
//! causal models over them, simulation and exact inference.
//!
//! All randomness comes from ChaCha20 seeded with [`rand::SeedableRng::seed_from_u64`];
//! independent draws use separate ChaCha streams (see [`rng`]).

mod exact;
mod scm;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DataError;
use crate::distribution::DistError;
use crate::graph::{GraphError, GraphKind, MixedGraph, NodeRole};

pub use exact::{exact_query, ExactResult, QueryKind};
pub use scm::{
    shift_environment, simulate, Mechanism, MechanismKind, Scm, SelectionMechanism,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("selection accepted too few draws: {accepted} of {wanted} rows after {draws} draws")]
    DegenerateSelection {
        accepted: usize,
        wanted: usize,
        draws: usize,
    },
    #[error("joint state space has {0} states, above the enumeration limit")]
    Capacity(u128),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Stream 0 drives structure sampling, stream `i + 1` the mechanism of node `i`.
pub const STRUCTURE_STREAM: u64 = 0;

/// Generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn default_levels() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScmSpec {
    pub n_options: usize,
    pub n_perf: usize,
    #[serde(default)]
    pub n_latent: usize,
    pub edge_prob: f64,
    pub mechanism: MechanismKind,
    #[serde(default = "default_levels")]
    pub levels: usize,
    pub seed: u64,
}

impl ScmSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_options == 0 || self.n_perf == 0 {
            return Err(SynthError::Spec("need at least one option and one performance node".into()));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return Err(SynthError::Spec(format!("edge_prob {} outside [0,1]", self.edge_prob)));
        }
        if self.mechanism == MechanismKind::Discrete && self.levels < 2 {
            return Err(SynthError::Spec("discrete variables need at least 2 levels".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let spec: ScmSpec = toml::from_str(text).map_err(|e| SynthError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }
}

/// Configurable-system DAG: options `o1..` are roots, performance nodes
/// `p1..` follow in index order, and each latent `l1..` confounds a pair of
/// performance nodes.
pub fn sample_structure(spec: &ScmSpec) -> Result<MixedGraph, SynthError> {
    spec.validate()?;
    let mut r = rng(spec.seed, STRUCTURE_STREAM);
    let mut g = MixedGraph::new(GraphKind::Dag);
    let opts: Vec<String> = (1..=spec.n_options).map(|i| format!("o{i}")).collect();
    let perfs: Vec<String> = (1..=spec.n_perf).map(|i| format!("p{i}")).collect();
    for o in &opts {
        g.add_node(o)?;
        g.set_role(o, NodeRole::Option)?;
    }
    for p in &perfs {
        g.add_node(p)?;
        g.set_role(p, NodeRole::Performance)?;
    }
    for (j, p) in perfs.iter().enumerate() {
        for o in &opts {
            if r.random_bool(spec.edge_prob) {
                g.add_directed(o, p)?;
            }
        }
        for q in &perfs[..j] {
            if r.random_bool(spec.edge_prob) {
                g.add_directed(q, p)?;
            }
        }
    }
    for i in 1..=spec.n_latent {
        let l = format!("l{i}");
        g.add_node(&l)?;
        g.set_role(&l, NodeRole::Latent)?;
        let mut targets: Vec<&String> = perfs.iter().collect();
        targets.shuffle(&mut r);
        for t in targets.into_iter().take(2) {
            g.add_directed(&l, t)?;
        }
    }
    Ok(g)
}

/// Random DAG over `X1..Xn`; a random permutation fixes the topological order
/// and each forward pair is joined with probability `edge_prob`.
pub fn random_dag(n: usize, edge_prob: f64, seed: u64) -> MixedGraph {
    let mut r = rng(seed, STRUCTURE_STREAM);
    let names: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    let mut g = MixedGraph::with_nodes(GraphKind::Dag, &names).expect("distinct names");
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(edge_prob) {
                g.add_edge_idx(
                    order[i],
                    order[j],
                    crate::graph::EdgeMark::Tail,
                    crate::graph::EdgeMark::Arrow,
                )
                .expect("fresh pair");
            }
        }
    }
    g
}

/// Random DAG over observed `X1..Xn` plus latent roots `L1..Lk`, each latent
/// pointing into two distinct observed nodes.
pub fn random_latent_dag(n_obs: usize, n_latent: usize, edge_prob: f64, seed: u64) -> MixedGraph {
    let mut g = random_dag(n_obs, edge_prob, seed);
    let mut r = rng(seed, STRUCTURE_STREAM + 1);
    for k in 1..=n_latent {
        let l = format!("L{k}");
        let li = g.add_node(&l).expect("fresh name");
        g.set_role_idx(li, Some(NodeRole::Latent));
        if n_obs < 2 {
            continue;
        }
        let mut targets: Vec<usize> = (0..n_obs).collect();
        targets.shuffle(&mut r);
        for &t in &targets[..2] {
            g.add_edge_idx(li, t, crate::graph::EdgeMark::Tail, crate::graph::EdgeMark::Arrow)
                .expect("fresh pair");
        }
    }
    g
}

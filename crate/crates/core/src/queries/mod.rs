//! Causal queries: identifiability of option effects, transport across
//! environments and recoverability under selection bias.
//!
//! Query files are line oriented:
//!
//! ```text
//! treatment: o1
//! outcome: perf
//! given: o2
//! s_nodes: perf
//! ```

mod estimand;
mod identify;
mod recover;
mod transport;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::distribution::DistError;
use crate::graph::{GraphError, GraphKind};

pub use estimand::{base_name, evaluate_estimand, evaluate_table, Estimand, Evaluator, ProbTerm, TermHook, World, Worlds};
pub use identify::{backdoor_set, id_effect, rule2_applies, Hedge, IdentificationResult, Status};
pub use recover::{add_selection_node, recoverability_report, s_recoverable, RecoverabilityReport, RecoverabilityRow};
pub use transport::{
    build_selection_diagram, s_admissible_adjustment, trivially_transportable, Available, Relation,
    SelectionDiagram, TransportQuery,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("graph kind {0} not accepted here (expected DAG or ADMG)")]
    WrongKind(GraphKind),
    #[error("{0}")]
    Input(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// `P(outcome | do(treatment), conditioning)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalQuery {
    pub treatment: Vec<String>,
    pub outcome: Vec<String>,
    pub conditioning: Vec<String>,
}

impl CausalQuery {
    pub fn new<S: AsRef<str>>(treatment: &[S], outcome: &[S], conditioning: &[S]) -> Result<Self, QueryError> {
        let own = |v: &[S]| -> Vec<String> {
            let mut out: Vec<String> = v.iter().map(|s| s.as_ref().to_string()).collect();
            out.sort();
            out.dedup();
            out
        };
        let (x, y, c) = (own(treatment), own(outcome), own(conditioning));
        if x.is_empty() || y.is_empty() {
            return Err(QueryError::Input("treatment and outcome must be nonempty".into()));
        }
        let mut seen = BTreeSet::new();
        for v in x.iter().chain(&y).chain(&c) {
            if !seen.insert(v) {
                return Err(QueryError::Input(format!("`{v}` appears in more than one role")));
            }
        }
        Ok(CausalQuery {
            treatment: x,
            outcome: y,
            conditioning: c,
        })
    }
}

/// A parsed query file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryFile {
    pub query: CausalQuery,
    pub s_nodes: Vec<String>,
}

impl QueryFile {
    pub fn parse(text: &str) -> Result<Self, QueryError> {
        let mut fields: [Option<Vec<String>>; 4] = Default::default();
        const KEYS: [&str; 4] = ["treatment", "outcome", "given", "s_nodes"];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| QueryError::Parse { line: i + 1, message };
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| err(format!("expected `key: value`, got `{line}`")))?;
            let slot = KEYS
                .iter()
                .position(|k| *k == key.trim())
                .ok_or_else(|| err(format!("unknown field `{}`", key.trim())))?;
            if fields[slot].is_some() {
                return Err(err(format!("field `{}` given twice", KEYS[slot])));
            }
            let vals: Vec<String> = value
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            fields[slot] = Some(vals);
        }
        let [x, y, c, s] = fields;
        let x = x.ok_or_else(|| QueryError::Input("missing `treatment:`".into()))?;
        let y = y.ok_or_else(|| QueryError::Input("missing `outcome:`".into()))?;
        Ok(QueryFile {
            query: CausalQuery::new(&x, &y, &c.unwrap_or_default())?,
            s_nodes: s.unwrap_or_default(),
        })
    }
}

//! Constraint-based structure learning: PC (CPDAG output) and FCI (PAG
//! output) with background knowledge.
//!
//! Variables are processed in name order, so results do not depend on the
//! column order of the data. Background-knowledge files are line oriented:
//!
//! ```text
//! forbid: perf o1
//! require: o1 perf
//! tier0: o1,o2
//! tier1: perf
//! ```

mod fci;
mod orient;
mod skeleton;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citest::{CiError, CiTest};
use crate::dataset::Metadata;
use crate::graph::{GraphError, MixedGraph, NodeRole, ParseError};

pub use fci::{fci, possible_dsep};
pub use orient::{meek_closure, orient_colliders};
pub use skeleton::pc_skeleton;

/// Possible-D-SEP conditioning sets are capped at this size unless
/// `max_cond_size` says otherwise.
pub const DEFAULT_PDSEP_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscoveryError {
    #[error("test of {x} ⟂ {y} | {{{}}} failed: {source}", z.join(","))]
    Test {
        x: String,
        y: String,
        z: Vec<String>,
        source: CiError,
    },
    #[error("background knowledge contradicts edge {a} - {b}: {reason}")]
    Inconsistent { a: String, b: String, reason: String },
    #[error("invalid background knowledge: {0}")]
    Knowledge(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pc,
    Fci,
}

impl Algorithm {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Some(Algorithm::Pc),
            "fci" => Some(Algorithm::Fci),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryParams {
    pub alpha: f64,
    /// Largest conditioning set tried; `None` is unlimited for the skeleton
    /// and [`DEFAULT_PDSEP_CAP`] for Possible-D-SEP.
    pub max_cond_size: Option<usize>,
    pub algorithm: Algorithm,
    pub stable: bool,
}

impl Default for DiscoveryParams {
    fn default() -> Self {
        DiscoveryParams {
            alpha: 0.01,
            max_cond_size: None,
            algorithm: Algorithm::Pc,
            stable: true,
        }
    }
}

impl DiscoveryParams {
    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(DiscoveryError::Params(format!(
                "alpha {} outside (0,1)",
                self.alpha
            )));
        }
        Ok(())
    }

    pub(crate) fn pdsep_cap(&self) -> usize {
        self.max_cond_size.unwrap_or(DEFAULT_PDSEP_CAP)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackgroundKnowledge {
    forbidden: BTreeSet<(String, String)>,
    required: BTreeSet<(String, String)>,
    tiers: Vec<BTreeSet<String>>,
}

impl BackgroundKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    /// Options in tier 0, performance metrics in tier 1.
    pub fn from_metadata(meta: &Metadata) -> Self {
        let mut bk = Self::new();
        let tier = |r: NodeRole| {
            meta.variable
                .iter()
                .filter(|v| v.role == r)
                .map(|v| v.name.clone())
                .collect::<BTreeSet<_>>()
        };
        let (opts, perf) = (tier(NodeRole::Option), tier(NodeRole::Performance));
        if !opts.is_empty() && !perf.is_empty() {
            bk.tiers = vec![opts, perf];
        }
        bk
    }

    pub fn forbid(&mut self, a: &str, b: &str) -> &mut Self {
        self.forbidden.insert((a.to_string(), b.to_string()));
        self
    }

    pub fn require(&mut self, a: &str, b: &str) -> &mut Self {
        self.required.insert((a.to_string(), b.to_string()));
        self
    }

    pub fn set_tier<S: AsRef<str>>(&mut self, k: usize, vars: &[S]) -> &mut Self {
        if self.tiers.len() <= k {
            self.tiers.resize(k + 1, BTreeSet::new());
        }
        self.tiers[k].extend(vars.iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn tiers(&self) -> &[BTreeSet<String>] {
        &self.tiers
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden.is_empty() && self.required.is_empty() && self.tiers.iter().all(BTreeSet::is_empty)
    }

    pub fn tier_of(&self, v: &str) -> Option<usize> {
        self.tiers.iter().position(|t| t.contains(v))
    }

    pub fn is_required(&self, a: &str, b: &str) -> bool {
        self.required.contains(&(a.to_string(), b.to_string()))
    }

    /// Whether the directed edge `a -> b` is ruled out, explicitly or because
    /// `a` sits in a later tier than `b`.
    pub fn forbids(&self, a: &str, b: &str) -> bool {
        if self.forbidden.contains(&(a.to_string(), b.to_string())) {
            return true;
        }
        matches!((self.tier_of(a), self.tier_of(b)), (Some(ta), Some(tb)) if ta > tb)
    }

    /// Whether adjacency of `a` and `b` is ruled out altogether.
    pub fn forbids_adjacency(&self, a: &str, b: &str) -> bool {
        self.forbidden.contains(&(a.to_string(), b.to_string()))
            && self.forbidden.contains(&(b.to_string(), a.to_string()))
            && !self.is_required(a, b)
            && !self.is_required(b, a)
    }

    pub fn validate(&self) -> Result<(), DiscoveryError> {
        if let Some((a, b)) = self.required.intersection(&self.forbidden).next() {
            return Err(DiscoveryError::Knowledge(format!(
                "{a} -> {b} is both required and forbidden"
            )));
        }
        for (a, b) in &self.required {
            if self.required.contains(&(b.clone(), a.clone())) {
                return Err(DiscoveryError::Knowledge(format!(
                    "{a} - {b} is required in both directions"
                )));
            }
            if self.forbids(a, b) {
                return Err(DiscoveryError::Inconsistent {
                    a: a.clone(),
                    b: b.clone(),
                    reason: "required direction runs against the tier order".into(),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for t in &self.tiers {
            for v in t {
                if !seen.insert(v) {
                    return Err(DiscoveryError::Knowledge(format!("`{v}` is in two tiers")));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, DiscoveryError> {
        let mut bk = Self::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |field: &str, message: String| ParseError {
                line: line_no,
                field: field.to_string(),
                message,
            };
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| perr("line", format!("expected `key: value`, got `{line}`")))?;
            let key = key.trim();
            match key {
                "forbid" | "require" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(perr(key, "expected two variable names".into()).into());
                    }
                    if key == "forbid" {
                        bk.forbid(parts[0], parts[1]);
                    } else {
                        bk.require(parts[0], parts[1]);
                    }
                }
                _ if key.starts_with("tier") => {
                    let k: usize = key[4..]
                        .parse()
                        .map_err(|_| perr(key, "tier index must be an integer".into()))?;
                    let vars: Vec<&str> = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .collect();
                    bk.set_tier(k, &vars);
                }
                _ => return Err(perr(key, "unknown field".into()).into()),
            }
        }
        bk.validate()?;
        Ok(bk)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (a, b) in &self.forbidden {
            writeln!(s, "forbid: {a} {b}").unwrap();
        }
        for (a, b) in &self.required {
            writeln!(s, "require: {a} {b}").unwrap();
        }
        for (k, t) in self.tiers.iter().enumerate() {
            if !t.is_empty() {
                writeln!(s, "tier{k}: {}", t.iter().cloned().collect::<Vec<_>>().join(",")).unwrap();
            }
        }
        s
    }

    /// Names mentioned anywhere in the knowledge.
    pub fn mentioned(&self) -> BTreeSet<&str> {
        self.forbidden
            .iter()
            .chain(&self.required)
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .chain(self.tiers.iter().flatten().map(String::as_str))
            .collect()
    }
}

/// Separating sets keyed by the name-ordered pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SepSetMap {
    sets: BTreeMap<(String, String), BTreeSet<String>>,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SepSetMap {
    pub fn insert(&mut self, a: &str, b: &str, set: BTreeSet<String>) {
        self.sets.insert(key(a, b), set);
    }

    pub fn get(&self, a: &str, b: &str) -> Option<&BTreeSet<String>> {
        self.sets.get(&key(a, b))
    }

    pub fn remove(&mut self, a: &str, b: &str) {
        self.sets.remove(&key(a, b));
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &BTreeSet<String>)> {
        self.sets.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutput {
    pub graph: MixedGraph,
    pub sepsets: SepSetMap,
    /// Orientation conflicts, truncation warnings and similar notes.
    pub diagnostics: Vec<String>,
    pub tests_run: usize,
}

fn check_bk(test: &dyn CiTest, bk: &BackgroundKnowledge) -> Result<(), DiscoveryError> {
    bk.validate()?;
    for v in bk.mentioned() {
        if !test.variables().iter().any(|n| n == v) {
            return Err(DiscoveryError::Knowledge(format!("unknown variable `{v}`")));
        }
    }
    Ok(())
}

/// PC: skeleton, colliders, then Meek closure with background knowledge.
pub fn pc(
    test: &dyn CiTest,
    bk: &BackgroundKnowledge,
    params: &DiscoveryParams,
) -> Result<DiscoveryOutput, DiscoveryError> {
    check_bk(test, bk)?;
    let vars = test.variables().to_vec();
    let (skel, sepsets, tests_run) = skeleton::run(test, &vars, bk, params)?;
    let mut diagnostics = Vec::new();
    let pdag = orient::colliders(&skel, &sepsets, &mut diagnostics);
    let graph = orient::closure(&pdag, bk, &mut diagnostics)?;
    Ok(DiscoveryOutput {
        graph,
        sepsets,
        diagnostics,
        tests_run,
    })
}

/// Runs the algorithm selected in `params`.
pub fn discover(
    test: &dyn CiTest,
    bk: &BackgroundKnowledge,
    params: &DiscoveryParams,
) -> Result<DiscoveryOutput, DiscoveryError> {
    match params.algorithm {
        Algorithm::Pc => pc(test, bk, params),
        Algorithm::Fci => fci(test, bk, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bk_text_round_trip() {
        let text = "forbid: b a\nrequire: a c\ntier0: a\ntier1: b,c\n";
        let bk = BackgroundKnowledge::parse(text).unwrap();
        assert!(bk.forbids("b", "a"));
        assert!(bk.forbids("c", "a"));
        assert!(!bk.forbids("a", "c"));
        assert_eq!(BackgroundKnowledge::parse(&bk.to_text()).unwrap(), bk);
    }

    #[test]
    fn bk_validation() {
        let mut bk = BackgroundKnowledge::new();
        bk.forbid("a", "b").require("a", "b");
        assert!(bk.validate().is_err());
        let mut bk = BackgroundKnowledge::new();
        bk.require("a", "b").require("b", "a");
        assert!(bk.validate().is_err());
        let mut bk = BackgroundKnowledge::new();
        bk.set_tier(0, &["a"]).set_tier(1, &["a"]);
        assert!(bk.validate().is_err());
        let mut bk = BackgroundKnowledge::new();
        bk.set_tier(0, &["a"]).set_tier(1, &["b"]).require("b", "a");
        assert!(matches!(bk.validate(), Err(DiscoveryError::Inconsistent { .. })));
        let e = BackgroundKnowledge::parse("forbid: a\n").unwrap_err();
        assert!(matches!(e, DiscoveryError::Parse(ParseError { line: 1, .. })));
    }

    #[test]
    fn sepset_keys_are_unordered() {
        let mut s = SepSetMap::default();
        s.insert("b", "a", BTreeSet::from(["c".to_string()]));
        assert!(s.get("a", "b").unwrap().contains("c"));
        assert_eq!(s.len(), 1);
    }
}

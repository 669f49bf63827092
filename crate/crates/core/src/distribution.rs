//! Explicit joint distributions over discrete variables.

use std::collections::HashMap;

use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("undefined conditional: P({0}) = 0")]
    UndefinedConditional(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("{0}")]
    Invalid(String),
}

/// Probabilities in row-major order; the first variable varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<String>,
    levels: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(vars: Vec<String>, levels: Vec<usize>, probs: Vec<f64>) -> Result<Self, DistError> {
        if vars.len() != levels.len() {
            return Err(DistError::Invalid("variables and levels differ in length".into()));
        }
        let size: usize = levels.iter().product();
        if probs.len() != size {
            return Err(DistError::Invalid(format!(
                "expected {size} cells, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(DistError::Invalid("negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DistError::Invalid(format!("probabilities sum to {total}")));
        }
        Ok(JointTable { vars, levels, probs })
    }

    /// Normalizes nonnegative weights into a table.
    pub fn from_weights(
        vars: Vec<String>,
        levels: Vec<usize>,
        weights: Vec<f64>,
    ) -> Result<Self, DistError> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(DistError::UndefinedConditional("all weights are zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(vars, levels, probs)
    }

    /// Empirical joint of `vars` (all discrete) in `d`.
    pub fn empirical(d: &Dataset, vars: &[&str]) -> Result<Self, DistError> {
        let mut idx = Vec::new();
        let mut levels = Vec::new();
        for v in vars {
            let i = d
                .index_of(v)
                .map_err(|_| DistError::UnknownVariable(v.to_string()))?;
            levels.push(
                d.n_levels(i)
                    .ok_or_else(|| DistError::Invalid(format!("`{v}` is continuous")))?,
            );
            idx.push(i);
        }
        let strides = strides(&levels);
        let mut counts = vec![0.0; levels.iter().product()];
        let cols: Vec<&[u32]> = idx.iter().map(|&i| d.codes(i).unwrap()).collect();
        for r in 0..d.n_rows() {
            let cell: usize = cols
                .iter()
                .zip(&strides)
                .map(|(c, s)| c[r] as usize * s)
                .sum();
            counts[cell] += 1.0;
        }
        Self::from_weights(vars.iter().map(|s| s.to_string()).collect(), levels, counts)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index_of(&self, name: &str) -> Result<usize, DistError> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| DistError::UnknownVariable(name.to_string()))
    }

    /// Decodes a flat cell index into one level per variable.
    pub fn decode(&self, mut cell: usize) -> Vec<u32> {
        let mut out = vec![0; self.levels.len()];
        for i in (0..self.levels.len()).rev() {
            out[i] = (cell % self.levels[i]) as u32;
            cell /= self.levels[i];
        }
        out
    }

    pub fn encode(&self, values: &[u32]) -> usize {
        values
            .iter()
            .zip(strides(&self.levels))
            .map(|(&v, s)| v as usize * s)
            .sum()
    }

    /// Marginal over `keep` (indices into this table), in that order.
    pub fn marginal(&self, keep: &[usize]) -> JointTable {
        let levels: Vec<usize> = keep.iter().map(|&i| self.levels[i]).collect();
        let out_strides = strides(&levels);
        let mut probs = vec![0.0; levels.iter().product()];
        for (cell, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let vals = self.decode(cell);
            let o: usize = keep
                .iter()
                .zip(&out_strides)
                .map(|(&k, s)| vals[k] as usize * s)
                .sum();
            probs[o] += p;
        }
        JointTable {
            vars: keep.iter().map(|&i| self.vars[i].clone()).collect(),
            levels,
            probs,
        }
    }

    pub fn marginal_names(&self, keep: &[&str]) -> Result<JointTable, DistError> {
        let idx = keep
            .iter()
            .map(|v| self.index_of(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.marginal(&idx))
    }

    /// Probability of a partial assignment.
    pub fn prob(&self, assignment: &[(usize, u32)]) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|&(cell, _)| {
                let vals = self.decode(cell);
                assignment.iter().all(|&(v, x)| vals[v] == x)
            })
            .map(|(_, p)| p)
            .sum()
    }

    /// P(target | given) as a table over `target`.
    pub fn conditional(
        &self,
        target: &[usize],
        given: &[(usize, u32)],
    ) -> Result<JointTable, DistError> {
        let levels: Vec<usize> = target.iter().map(|&i| self.levels[i]).collect();
        let out_strides = strides(&levels);
        let mut w = vec![0.0; levels.iter().product()];
        for (cell, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let vals = self.decode(cell);
            if given.iter().all(|&(v, x)| vals[v] == x) {
                let o: usize = target
                    .iter()
                    .zip(&out_strides)
                    .map(|(&k, s)| vals[k] as usize * s)
                    .sum();
                w[o] += p;
            }
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(DistError::UndefinedConditional(self.describe(given)));
        }
        Ok(JointTable {
            vars: target.iter().map(|&i| self.vars[i].clone()).collect(),
            levels,
            probs: w.into_iter().map(|x| x / total).collect(),
        })
    }

    pub fn describe(&self, assignment: &[(usize, u32)]) -> String {
        assignment
            .iter()
            .map(|&(v, x)| format!("{}={}", self.vars[v], x))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Largest absolute cell difference against a table over the same variables.
    pub fn max_abs_diff(&self, other: &JointTable) -> f64 {
        assert_eq!(self.levels, other.levels);
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn strides(levels: &[usize]) -> Vec<usize> {
    let mut s = vec![1; levels.len()];
    for i in (0..levels.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * levels[i + 1];
    }
    s
}

/// Marginal lookups with memoized tables, keyed by sorted variable set.
#[derive(Debug)]
pub struct MarginalCache<'a> {
    joint: &'a JointTable,
    tables: HashMap<Vec<usize>, JointTable>,
}

impl<'a> MarginalCache<'a> {
    pub fn new(joint: &'a JointTable) -> Self {
        MarginalCache {
            joint,
            tables: HashMap::new(),
        }
    }

    pub fn joint(&self) -> &JointTable {
        self.joint
    }

    /// Probability of a partial assignment over variable indices of the joint.
    pub fn prob(&mut self, assignment: &[(usize, u32)]) -> f64 {
        let mut a = assignment.to_vec();
        a.sort_unstable();
        a.dedup();
        let key: Vec<usize> = a.iter().map(|&(v, _)| v).collect();
        let joint = self.joint;
        let table = self
            .tables
            .entry(key.clone())
            .or_insert_with(|| joint.marginal(&key));
        let values: Vec<u32> = a.iter().map(|&(_, x)| x).collect();
        table.probs[table.encode(&values)]
    }
}

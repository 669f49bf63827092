//! Conditional-independence tests over datasets, plus a graph oracle.
//!
//! Every test addresses variables by index into [`CiTest::variables`]. Tests
//! are pure functions of their precomputed state, so discovery can call them
//! from several threads at once.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::{Column, DataError, Dataset};
use crate::graph::{GraphError, MixedGraph};

/// Largest admissible |ρ| before the z-transform.
pub const RHO_CLAMP: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CiError {
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub independent: bool,
    pub test_name: &'static str,
    pub conditioning_size: usize,
}

impl CiTestResult {
    fn new(statistic: f64, p_value: f64, alpha: f64, test_name: &'static str, k: usize) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        CiTestResult {
            statistic,
            p_value,
            independent: p_value > alpha,
            test_name,
            conditioning_size: k,
        }
    }
}

pub trait CiTest: Sync {
    fn variables(&self) -> &[String];

    /// Tests `x ⟂ y | z`, where all arguments index into [`Self::variables`].
    fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult, CiError>;

    fn index_of(&self, name: &str) -> Result<usize, CiError> {
        self.variables()
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| CiError::Input(format!("unknown variable `{name}`")))
    }

    fn test_names(&self, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<CiTestResult, CiError> {
        let x = self.index_of(x)?;
        let y = self.index_of(y)?;
        let z = z.iter().map(|v| self.index_of(v)).collect::<Result<Vec<_>, _>>()?;
        self.test(x, y, &z, alpha)
    }
}

fn check_args(n_vars: usize, x: usize, y: usize, z: &[usize]) -> Result<(), CiError> {
    if x >= n_vars || y >= n_vars || z.iter().any(|&v| v >= n_vars) {
        return Err(CiError::Input("variable index out of range".into()));
    }
    if x == y || z.contains(&x) || z.contains(&y) {
        return Err(CiError::Input("x, y and z must be disjoint".into()));
    }
    Ok(())
}

/// Fisher-z test on partial correlations from a precomputed correlation matrix.
#[derive(Debug, Clone)]
pub struct FisherZ {
    names: Vec<String>,
    n: usize,
    corr: DMatrix<f64>,
}

impl FisherZ {
    /// Uses raw values; discrete columns enter as their level indices.
    pub fn new(d: &Dataset) -> Result<Self, CiError> {
        let cols: Vec<Vec<f64>> = (0..d.n_vars())
            .map(|i| (0..d.n_rows()).map(|r| d.column(i).value(r)).collect())
            .collect();
        Self::from_columns(d.names(), &cols)
    }

    /// Replaces every column by its van der Waerden normal scores first.
    pub fn with_normal_scores(d: &Dataset) -> Result<Self, CiError> {
        let cols: Vec<Vec<f64>> = (0..d.n_vars())
            .map(|i| normal_scores(d.column(i)))
            .collect();
        Self::from_columns(d.names(), &cols)
    }

    pub fn from_columns(names: Vec<String>, cols: &[Vec<f64>]) -> Result<Self, CiError> {
        let k = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut z = DMatrix::<f64>::zeros(n, k);
        for (j, c) in cols.iter().enumerate() {
            let mean = c.iter().sum::<f64>() / n as f64;
            let ss: f64 = c.iter().map(|v| (v - mean) * (v - mean)).sum();
            if ss <= 0.0 || !ss.is_finite() {
                return Err(CiError::Degenerate(format!("column `{}` is constant", names[j])));
            }
            let sd = ss.sqrt();
            for (r, v) in c.iter().enumerate() {
                z[(r, j)] = (v - mean) / sd;
            }
        }
        let mut corr = z.tr_mul(&z);
        for j in 0..k {
            corr[(j, j)] = 1.0;
        }
        Ok(FisherZ { names, n, corr })
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// Partial correlation of `x` and `y` given `z`.
    pub fn partial_correlation(&self, x: usize, y: usize, z: &[usize]) -> Result<f64, CiError> {
        let c = &self.corr;
        if z.is_empty() {
            return Ok(c[(x, y)]);
        }
        let k = z.len();
        let szz = DMatrix::from_fn(k, k, |i, j| c[(z[i], z[j])]);
        let collinear = || {
            let names: Vec<&str> = z.iter().map(|&v| self.names[v].as_str()).collect();
            CiError::Degenerate(format!("singular correlation over {{{}}}", names.join(",")))
        };
        let chol = szz.cholesky().ok_or_else(collinear)?;
        if chol.l().diagonal().iter().any(|&d| d < 1e-7) {
            return Err(collinear());
        }
        let sxz = DVector::from_fn(k, |i, _| c[(x, z[i])]);
        let syz = DVector::from_fn(k, |i, _| c[(y, z[i])]);
        let wx = chol.solve(&sxz);
        let wy = chol.solve(&syz);
        let vxx = 1.0 - sxz.dot(&wx);
        let vyy = 1.0 - syz.dot(&wy);
        let vxy = c[(x, y)] - sxz.dot(&wy);
        for (v, var) in [(vxx, x), (vyy, y)] {
            if v < 1e-12 {
                let mut set: Vec<&str> = z.iter().map(|&v| self.names[v].as_str()).collect();
                set.insert(0, &self.names[var]);
                return Err(CiError::Degenerate(format!(
                    "singular correlation over {{{}}}",
                    set.join(",")
                )));
            }
        }
        Ok(vxy / (vxx * vyy).sqrt())
    }
}

impl CiTest for FisherZ {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult, CiError> {
        check_args(self.names.len(), x, y, z)?;
        if self.n <= z.len() + 3 {
            return Err(CiError::Input(format!(
                "fisher-z needs more than {} rows for {} conditioning variables, got {}",
                z.len() + 3,
                z.len(),
                self.n
            )));
        }
        let rho = self
            .partial_correlation(x, y, z)?
            .clamp(-RHO_CLAMP, RHO_CLAMP);
        let stat = ((self.n - z.len() - 3) as f64).sqrt() * rho.atanh();
        let p = 2.0 * standard_normal().sf(stat.abs());
        Ok(CiTestResult::new(stat, p, alpha, "fisher_z", z.len()))
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// Van der Waerden scores Φ⁻¹(r/(N+1)) with average ranks for ties.
pub fn normal_scores(col: &Column) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col.value(a).total_cmp(&col.value(b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && col.value(order[j + 1]) == col.value(order[i]) {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &r in &order[i..=j] {
            ranks[r] = avg;
        }
        i = j + 1;
    }
    let norm = standard_normal();
    ranks
        .into_iter()
        .map(|r| norm.inverse_cdf(r / (n as f64 + 1.0)))
        .collect()
}

/// Likelihood-ratio G² test on discrete columns.
#[derive(Debug, Clone)]
pub struct GSquared {
    names: Vec<String>,
    codes: Vec<Vec<u32>>,
    levels: Vec<usize>,
}

impl GSquared {
    pub fn new(d: &Dataset) -> Result<Self, CiError> {
        let mut codes = Vec::new();
        let mut levels = Vec::new();
        for i in 0..d.n_vars() {
            let c = d.codes(i).ok_or_else(|| {
                CiError::Input(format!("G² needs discrete data; `{}` is continuous", d.var(i).name))
            })?;
            codes.push(c.to_vec());
            levels.push(d.n_levels(i).unwrap());
        }
        Ok(GSquared {
            names: d.names(),
            codes,
            levels,
        })
    }

    /// Builds from raw level codes, e.g. for hand-made contingency tables.
    pub fn from_codes(names: Vec<String>, codes: Vec<Vec<u32>>, levels: Vec<usize>) -> Self {
        GSquared {
            names,
            codes,
            levels,
        }
    }

    /// G² statistic and degrees of freedom.
    pub fn statistic(&self, x: usize, y: usize, z: &[usize]) -> (f64, usize) {
        let (lx, ly) = (self.levels[x], self.levels[y]);
        let n = self.codes[x].len();
        let mut strata: BTreeMap<Vec<u32>, Vec<f64>> = BTreeMap::new();
        for r in 0..n {
            let key: Vec<u32> = z.iter().map(|&v| self.codes[v][r]).collect();
            let table = strata.entry(key).or_insert_with(|| vec![0.0; lx * ly]);
            table[self.codes[x][r] as usize * ly + self.codes[y][r] as usize] += 1.0;
        }
        let mut g2 = 0.0;
        for table in strata.values() {
            g2 += stratum_g2(table, lx, ly);
        }
        (g2, (lx - 1) * (ly - 1) * strata.len())
    }
}

/// Contribution of one x×y table (row-major, `lx` rows).
pub fn stratum_g2(table: &[f64], lx: usize, ly: usize) -> f64 {
    let total: f64 = table.iter().sum();
    let rows: Vec<f64> = (0..lx).map(|i| table[i * ly..(i + 1) * ly].iter().sum()).collect();
    let cols: Vec<f64> = (0..ly).map(|j| (0..lx).map(|i| table[i * ly + j]).sum()).collect();
    let mut g = 0.0;
    for i in 0..lx {
        for j in 0..ly {
            let o = table[i * ly + j];
            if o > 0.0 {
                g += o * (o * total / (rows[i] * cols[j])).ln();
            }
        }
    }
    (2.0 * g).max(0.0)
}

impl CiTest for GSquared {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult, CiError> {
        check_args(self.names.len(), x, y, z)?;
        // symmetric by construction: the statistic does not depend on which
        // variable indexes rows
        let (a, b) = (x.min(y), x.max(y));
        let (g2, dof) = self.statistic(a, b, z);
        if dof == 0 {
            return Err(CiError::Degenerate(format!(
                "zero degrees of freedom for ({}, {})",
                self.names[x], self.names[y]
            )));
        }
        let chi = ChiSquared::new(dof as f64).expect("positive dof");
        Ok(CiTestResult::new(g2, chi.sf(g2), alpha, "g_squared", z.len()))
    }
}

/// Faithful oracle: independence is m-separation in a known graph.
#[derive(Debug, Clone)]
pub struct OracleTest {
    graph: MixedGraph,
    names: Vec<String>,
    idx: Vec<usize>,
    /// Selection nodes, conditioned on in every query.
    selected: Vec<usize>,
}

impl OracleTest {
    /// Oracle over all nodes of `g`.
    pub fn new(g: &MixedGraph) -> Self {
        OracleTest {
            graph: g.clone(),
            names: g.names().to_vec(),
            idx: (0..g.n()).collect(),
            selected: Vec::new(),
        }
    }

    /// Oracle exposing only `observed`; other nodes act as latents.
    pub fn observing<S: AsRef<str>>(g: &MixedGraph, observed: &[S]) -> Result<Self, CiError> {
        Self::with_selection(g, observed, &[] as &[&str])
    }

    /// Oracle exposing `observed` on data already conditioned on `selected`.
    pub fn with_selection<S: AsRef<str>, T: AsRef<str>>(
        g: &MixedGraph,
        observed: &[S],
        selected: &[T],
    ) -> Result<Self, CiError> {
        let idx = g.indices_of(observed)?;
        let selected = g.indices_of(selected)?;
        if selected.iter().any(|s| idx.contains(s)) {
            return Err(CiError::Input("selection nodes cannot be observed".into()));
        }
        Ok(OracleTest {
            graph: g.clone(),
            names: observed.iter().map(|s| s.as_ref().to_string()).collect(),
            idx,
            selected,
        })
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }
}

impl CiTest for OracleTest {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult, CiError> {
        check_args(self.names.len(), x, y, z)?;
        let mut zs: Vec<usize> = z.iter().map(|&v| self.idx[v]).collect();
        zs.extend_from_slice(&self.selected);
        let sep = self
            .graph
            .separated_idx(&[self.idx[x]], &[self.idx[y]], &zs);
        let p = if sep { 1.0 } else { 0.0 };
        Ok(CiTestResult::new(1.0 - p, p, alpha, "oracle", z.len()))
    }
}

/// Dispatches per call: G² when every involved variable is discrete,
/// otherwise Fisher-z on normal scores.
#[derive(Debug, Clone)]
pub struct AutoTest {
    names: Vec<String>,
    discrete: Vec<bool>,
    g2: Option<GSquared>,
    fz: Option<FisherZ>,
}

impl AutoTest {
    pub fn new(d: &Dataset) -> Result<Self, CiError> {
        d.check_nonconstant()?;
        let discrete: Vec<bool> = d.vars().iter().map(|v| v.is_discrete()).collect();
        let g2 = if discrete.iter().any(|&b| b) {
            let names: Vec<String> = d.names();
            let codes = (0..d.n_vars())
                .map(|i| d.codes(i).map(<[u32]>::to_vec).unwrap_or_default())
                .collect();
            let levels = (0..d.n_vars()).map(|i| d.n_levels(i).unwrap_or(0)).collect();
            Some(GSquared::from_codes(names, codes, levels))
        } else {
            None
        };
        let fz = if discrete.iter().all(|&b| b) {
            None
        } else {
            Some(FisherZ::with_normal_scores(d)?)
        };
        Ok(AutoTest {
            names: d.names(),
            discrete,
            g2,
            fz,
        })
    }
}

impl CiTest for AutoTest {
    fn variables(&self) -> &[String] {
        &self.names
    }

    fn test(&self, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<CiTestResult, CiError> {
        check_args(self.names.len(), x, y, z)?;
        let all_discrete = [x, y].iter().chain(z).all(|&v| self.discrete[v]);
        match (all_discrete, &self.g2, &self.fz) {
            (true, Some(g2), _) => g2.test(x, y, z, alpha),
            (_, _, Some(fz)) => fz.test(x, y, z, alpha),
            _ => unreachable!("dispatch covers every column type"),
        }
    }
}

/// Fisher-z test of `x ⟂ y | z` on the raw values of `d`.
pub fn fisher_z(d: &Dataset, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<CiTestResult, CiError> {
    let mut cols = vec![x, y];
    cols.extend_from_slice(z);
    let sub = d.select(&cols)?;
    let t = FisherZ::new(&sub)?;
    let zi: Vec<usize> = (2..cols.len()).collect();
    t.test(0, 1, &zi, alpha)
}

/// G² test of `x ⟂ y | z`; all involved variables must be discrete.
pub fn g_squared(d: &Dataset, x: &str, y: &str, z: &[&str], alpha: f64) -> Result<CiTestResult, CiError> {
    let mut cols = vec![x, y];
    cols.extend_from_slice(z);
    let sub = d.select(&cols)?;
    let t = GSquared::new(&sub)?;
    let zi: Vec<usize> = (2..cols.len()).collect();
    t.test(0, 1, &zi, alpha)
}

/// Oracle test of `x ⟂ y | z` against separation in `g`.
pub fn oracle_test(
    g: &MixedGraph,
    x: &str,
    y: &str,
    z: &[&str],
    alpha: f64,
) -> Result<CiTestResult, CiError> {
    OracleTest::new(g).test_names(x, y, z, alpha)
}

//! Exact inference on SCMs: world enumeration for discrete models and
//! closed-form moments for linear-Gaussian ones.

use nalgebra::{DMatrix, DVector};

use super::scm::{Mechanism, Scm, SelectionMechanism};
use super::SynthError;
use crate::distribution::JointTable;
use crate::graph::MixedGraph;

/// Largest joint state space enumerated.
pub const MAX_STATES: u128 = 1 << 20;

#[derive(Debug, Clone, Copy)]
pub enum QueryKind<'a> {
    Observational,
    /// do() assignments: level codes for discrete models, values for linear ones.
    Interventional(&'a [(&'a str, f64)]),
    /// Conditions additionally on inclusion under the selection mechanism.
    Selected(&'a SelectionMechanism),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactResult {
    Table(JointTable),
    Gaussian {
        vars: Vec<String>,
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
}

impl ExactResult {
    pub fn table(&self) -> Option<&JointTable> {
        match self {
            ExactResult::Table(t) => Some(t),
            ExactResult::Gaussian { .. } => None,
        }
    }
}

impl Scm {
    /// Exact joint over every node, latents included.
    pub fn joint_table(&self) -> Result<JointTable, SynthError> {
        if !self.is_discrete() {
            return Err(SynthError::Unsupported("joint tables need a discrete SCM".into()));
        }
        let levels = self.levels().to_vec();
        let states: u128 = levels.iter().map(|&l| l as u128).product();
        if states > MAX_STATES {
            return Err(SynthError::Capacity(states));
        }
        let k = levels.len();
        let mut probs = vec![0.0; states as usize];
        let mut vals = vec![0u32; k];
        for (cell, p) in probs.iter_mut().enumerate() {
            let mut rem = cell;
            for i in (0..k).rev() {
                vals[i] = (rem % levels[i]) as u32;
                rem /= levels[i];
            }
            let mut prob = 1.0;
            for v in 0..k {
                prob *= self.cpt_row(v, &vals)[vals[v] as usize];
                if prob == 0.0 {
                    break;
                }
            }
            *p = prob;
        }
        // renormalize away accumulated rounding
        Ok(JointTable::from_weights(
            self.graph().names().to_vec(),
            levels,
            probs,
        )?)
    }

    /// Mutilated model with `targets` held at fixed values.
    pub fn intervene(&self, targets: &[(usize, f64)]) -> Result<Scm, SynthError> {
        let mut g: MixedGraph = self.graph().clone();
        let mut mechanisms = self.mechanisms().to_vec();
        for &(v, value) in targets {
            for p in self.parents(v).to_vec() {
                g.remove_edge_idx(p, v);
            }
            mechanisms[v] = match self.mechanism(v) {
                Mechanism::Discrete { .. } => {
                    let l = self.levels()[v];
                    let code = value as usize;
                    if value < 0.0 || value.fract() != 0.0 || code >= l {
                        return Err(SynthError::Spec(format!(
                            "`{}` has no level {value}",
                            g.name(v)
                        )));
                    }
                    let mut row = vec![0.0; l];
                    row[code] = 1.0;
                    Mechanism::Discrete { cpt: vec![row] }
                }
                Mechanism::Linear { .. } => Mechanism::Linear {
                    weights: vec![],
                    intercept: value,
                    noise_sd: 0.0,
                },
            };
        }
        Scm::new(g, self.levels().to_vec(), mechanisms, self.seed())
    }

    /// Randomized experiment: `targets` lose their parents and are drawn
    /// uniformly over their levels.
    pub fn randomize(&self, targets: &[usize]) -> Result<Scm, SynthError> {
        let mut g: MixedGraph = self.graph().clone();
        let mut mechanisms = self.mechanisms().to_vec();
        for &v in targets {
            let l = self.levels()[v];
            if l == 0 {
                return Err(SynthError::Unsupported(format!(
                    "cannot randomize continuous `{}`",
                    g.name(v)
                )));
            }
            for p in self.parents(v).to_vec() {
                g.remove_edge_idx(p, v);
            }
            mechanisms[v] = Mechanism::Discrete {
                cpt: vec![vec![1.0 / l as f64; l]],
            };
        }
        Scm::new(g, self.levels().to_vec(), mechanisms, self.seed())
    }

    /// Mean vector and covariance of every node of a linear-Gaussian SCM.
    pub fn gaussian_moments(&self) -> Result<(DVector<f64>, DMatrix<f64>), SynthError> {
        let n = self.graph().n();
        let mut b = DMatrix::<f64>::zeros(n, n);
        let mut c = DVector::<f64>::zeros(n);
        let mut d = DMatrix::<f64>::zeros(n, n);
        for v in 0..n {
            let Mechanism::Linear {
                weights,
                intercept,
                noise_sd,
            } = self.mechanism(v)
            else {
                return Err(SynthError::Unsupported("moments need a linear-Gaussian SCM".into()));
            };
            for (w, &p) in weights.iter().zip(self.parents(v)) {
                b[(v, p)] = *w;
            }
            c[v] = *intercept;
            d[(v, v)] = noise_sd * noise_sd;
        }
        let a = (DMatrix::<f64>::identity(n, n) - b)
            .try_inverse()
            .expect("acyclic weight matrix is invertible");
        let mean = &a * c;
        let cov = &a * d * a.transpose();
        Ok((mean, cov))
    }
}

fn resolve(m: &Scm, pairs: &[(&str, f64)]) -> Result<Vec<(usize, f64)>, SynthError> {
    pairs
        .iter()
        .map(|&(n, x)| Ok((m.graph().index_of(n)?, x)))
        .collect()
}

/// Exact P(y | given) in the observational, intervened or selected model.
/// Discrete models return a table over `y`; linear-Gaussian models return the
/// conditional mean and covariance (selection is unsupported there).
pub fn exact_query(
    m: &Scm,
    kind: QueryKind<'_>,
    y: &[&str],
    given: &[(&str, f64)],
) -> Result<ExactResult, SynthError> {
    let model = match kind {
        QueryKind::Interventional(targets) => m.intervene(&resolve(m, targets)?)?,
        _ => m.clone(),
    };
    let (model, sel_node) = match kind {
        QueryKind::Selected(sel) => {
            let mut name = String::from("S");
            while model.graph().contains(&name) {
                name.push('_');
            }
            let (mm, s) = model.with_selection_node(sel, &name)?;
            (mm, Some(s))
        }
        _ => (model, None),
    };
    let yi = model.graph().indices_of(y)?;
    let gi = resolve(&model, given)?;
    if model.is_discrete() {
        let joint = model.joint_table()?;
        let mut cond: Vec<(usize, u32)> = gi.iter().map(|&(v, x)| (v, x as u32)).collect();
        if let Some(s) = sel_node {
            cond.push((s, 1));
        }
        return Ok(ExactResult::Table(joint.conditional(&yi, &cond)?));
    }
    if sel_node.is_some() {
        return Err(SynthError::Unsupported(
            "selection queries need a discrete SCM".into(),
        ));
    }
    let (mu, sigma) = model.gaussian_moments()?;
    let gidx: Vec<usize> = gi.iter().map(|&(v, _)| v).collect();
    let gval = DVector::from_iterator(gi.len(), gi.iter().map(|&(_, x)| x));
    let sub = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| sigma[(rows[i], cols[j])])
    };
    let mut mean = DVector::from_iterator(yi.len(), yi.iter().map(|&v| mu[v]));
    let mut cov = sub(&yi, &yi);
    if !gidx.is_empty() {
        let sgg = sub(&gidx, &gidx);
        let syg = sub(&yi, &gidx);
        let inv = sgg
            .try_inverse()
            .ok_or_else(|| SynthError::Unsupported("conditioning set has singular covariance".into()))?;
        let mug = DVector::from_iterator(gidx.len(), gidx.iter().map(|&v| mu[v]));
        mean += &syg * &inv * (gval - mug);
        cov -= &syg * &inv * syg.transpose();
    }
    Ok(ExactResult::Gaussian {
        vars: y.iter().map(|s| s.to_string()).collect(),
        mean: mean.iter().copied().collect(),
        cov: (0..yi.len())
            .map(|i| (0..yi.len()).map(|j| cov[(i, j)]).collect())
            .collect(),
    })
}

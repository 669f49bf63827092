//! Plug-in estimators binding identified estimands to measurement data.
//!
//! Discrete outcomes are summarized by probability tables, continuous ones by
//! mean and unbiased variance. Standard errors follow the delta method.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::dataset::{Column, DataError, Dataset};
use crate::distribution::{DistError, JointTable};
use crate::queries::{base_name, CausalQuery, Estimand, Evaluator, ProbTerm, World, Worlds};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

impl EstimationError {
    pub fn is_undefined(&self) -> bool {
        matches!(self, EstimationError::Dist(DistError::UndefinedConditional(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConditionalSummary {
    Continuous {
        mean: f64,
        variance: f64,
        count: usize,
        std_error: f64,
    },
    Discrete {
        levels: Vec<String>,
        probs: Vec<f64>,
        count: usize,
        std_errors: Vec<f64>,
    },
}

impl ConditionalSummary {
    pub fn count(&self) -> usize {
        match self {
            ConditionalSummary::Continuous { count, .. } | ConditionalSummary::Discrete { count, .. } => *count,
        }
    }
}

fn undefined(d: &Dataset, assignment: &[(usize, u32)]) -> EstimationError {
    let parts: Vec<String> = assignment
        .iter()
        .map(|&(v, c)| {
            let label = d.var(v).levels().map_or_else(|| c.to_string(), |l| l[c as usize].clone());
            format!("{}={label}", d.var(v).name)
        })
        .collect();
    DistError::UndefinedConditional(parts.join(",")).into()
}

fn resolve(d: &Dataset, given: &[(&str, u32)]) -> Result<Vec<(usize, u32)>, EstimationError> {
    given
        .iter()
        .map(|&(name, code)| {
            let v = d.index_of(name)?;
            let n = d
                .n_levels(v)
                .ok_or_else(|| EstimationError::Input(format!("cannot condition on continuous `{name}`")))?;
            if code as usize >= n {
                return Err(EstimationError::Input(format!("`{name}` has no level {code}")));
            }
            Ok((v, code))
        })
        .collect()
}

fn summarize(d: &Dataset, y: usize, rows: &[usize], smoothing: f64) -> ConditionalSummary {
    let n = rows.len();
    match d.column(y) {
        Column::Continuous(vals) => {
            let mean = rows.iter().map(|&r| vals[r]).sum::<f64>() / n as f64;
            let variance = if n > 1 {
                rows.iter().map(|&r| (vals[r] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            ConditionalSummary::Continuous {
                mean,
                variance,
                count: n,
                std_error: (variance / n as f64).sqrt(),
            }
        }
        Column::Discrete(codes) => {
            let levels = d.var(y).levels().unwrap_or_default().to_vec();
            let mut counts = vec![0.0; levels.len()];
            for &r in rows {
                counts[codes[r] as usize] += 1.0;
            }
            let total = n as f64 + smoothing * levels.len() as f64;
            let probs: Vec<f64> = counts.iter().map(|c| (c + smoothing) / total).collect();
            let std_errors = probs.iter().map(|p| (p * (1.0 - p) / n as f64).sqrt()).collect();
            ConditionalSummary::Discrete {
                levels,
                probs,
                count: n,
                std_errors,
            }
        }
    }
}

/// Summary of `outcome` over rows matching `given` exactly (level codes).
pub fn cond_summary(d: &Dataset, outcome: &str, given: &[(&str, u32)]) -> Result<ConditionalSummary, EstimationError> {
    cond_summary_smoothed(d, outcome, given, 0.0)
}

/// As [`cond_summary`], adding `smoothing` pseudo-counts to every outcome
/// level of a discrete table.
pub fn cond_summary_smoothed(
    d: &Dataset,
    outcome: &str,
    given: &[(&str, u32)],
    smoothing: f64,
) -> Result<ConditionalSummary, EstimationError> {
    if !(smoothing >= 0.0) {
        return Err(EstimationError::Input("smoothing must be nonnegative".into()));
    }
    let y = d.index_of(outcome)?;
    let assignment = resolve(d, given)?;
    let rows = d.matching_rows(&assignment);
    if rows.is_empty() {
        return Err(undefined(d, &assignment));
    }
    Ok(summarize(d, y, &rows, smoothing))
}

/// One record per level of the treatment (and conditioning) variables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    /// `(variable, level label)` for treatment then conditioning variables.
    pub level: Vec<(String, String)>,
    pub summary: ConditionalSummary,
}

/// Back-door adjustment `Σ_z P̂(z|c) · summary(y | x, z, c)` for every level
/// of the treatment and conditioning variables.
pub fn adjustment_estimate<S: AsRef<str>>(
    d: &Dataset,
    q: &CausalQuery,
    z: &[S],
) -> Result<Vec<LevelSummary>, EstimationError> {
    stratified_estimate(d, d, q, z)
}

/// Adjustment with strata summaries from `outcome_data` and stratum weights
/// from `weight_data`. With experimental outcome data and target-environment
/// weights this is the transport formula `Σ_z P(y|do(x),z) P*(z)`.
pub fn stratified_estimate<S: AsRef<str>>(
    outcome_data: &Dataset,
    weight_data: &Dataset,
    q: &CausalQuery,
    z: &[S],
) -> Result<Vec<LevelSummary>, EstimationError> {
    if q.outcome.len() != 1 {
        return Err(EstimationError::Input("estimation needs exactly one outcome".into()));
    }
    let d = outcome_data;
    let y = d.index_of(&q.outcome[0])?;
    let z: Vec<&str> = z.iter().map(AsRef::as_ref).collect();
    if z.iter().any(|v| q.treatment.contains(&v.to_string()) || q.outcome.contains(&v.to_string())) {
        return Err(EstimationError::Input("adjustment set overlaps the query".into()));
    }
    let fixed: Vec<&str> = q.treatment.iter().chain(&q.conditioning).map(String::as_str).collect();
    let fixed_levels = discrete_levels(d, &fixed)?;
    let z_levels = discrete_levels(weight_data, &z)?;
    if z_levels != discrete_levels(d, &z)? {
        return Err(EstimationError::Input("adjustment variables differ in levels between datasets".into()));
    }
    let nc = q.conditioning.len();
    let mut out = Vec::new();
    for fx in product(&fixed_levels) {
        let pairs: Vec<(&str, u32)> = fixed.iter().copied().zip(fx.iter().copied()).collect();
        let level = pairs
            .iter()
            .map(|&(v, c)| (v.to_string(), label(d, v, c)))
            .collect();
        let summary = if z.is_empty() && std::ptr::eq(outcome_data, weight_data) {
            cond_summary(d, &q.outcome[0], &pairs)?
        } else {
            adjusted(d, weight_data, y, &pairs, nc, &z, &z_levels)?
        };
        out.push(LevelSummary { level, summary });
    }
    Ok(out)
}

fn adjusted(
    d: &Dataset,
    wd: &Dataset,
    y: usize,
    pairs: &[(&str, u32)],
    nc: usize,
    z: &[&str],
    z_levels: &[usize],
) -> Result<ConditionalSummary, EstimationError> {
    // weights P(z | c) from the weight data
    let c_pairs = &pairs[pairs.len() - nc..];
    let c_rows = wd.matching_rows(&resolve(wd, c_pairs)?);
    if c_rows.is_empty() {
        return Err(undefined(wd, &resolve(wd, c_pairs)?));
    }
    let n_w = c_rows.len() as f64;
    let zi: Vec<usize> = z.iter().map(|v| wd.index_of(v)).collect::<Result<_, _>>()?;
    let mut weights: HashMap<Vec<u32>, f64> = HashMap::new();
    for &r in &c_rows {
        let key: Vec<u32> = zi.iter().map(|&v| wd.codes(v).unwrap()[r]).collect();
        *weights.entry(key).or_default() += 1.0;
    }
    for w in weights.values_mut() {
        *w /= n_w;
    }
    let base = resolve(d, pairs)?;
    let x_rows = d.matching_rows(&base).len();
    let mut strata = Vec::new();
    for zv in product(z_levels) {
        let Some(&w) = weights.get(&zv) else { continue };
        let mut a = base.clone();
        for (v, &c) in z.iter().zip(&zv) {
            a.push((d.index_of(v)?, c));
        }
        let rows = d.matching_rows(&a);
        if rows.is_empty() {
            return Err(undefined(d, &a));
        }
        strata.push((w, summarize(d, y, &rows, 0.0)));
    }
    Ok(combine(&strata, x_rows, n_w))
}

/// Mixture of stratum summaries with weights estimated from `n_w` rows.
fn combine(strata: &[(f64, ConditionalSummary)], count: usize, n_w: f64) -> ConditionalSummary {
    match &strata[0].1 {
        ConditionalSummary::Continuous { .. } => {
            let parts: Vec<(f64, f64, f64, f64)> = strata
                .iter()
                .map(|(w, s)| match s {
                    ConditionalSummary::Continuous {
                        mean,
                        variance,
                        count,
                        ..
                    } => (*w, *mean, *variance, *count as f64),
                    ConditionalSummary::Discrete { .. } => unreachable!("one outcome type"),
                })
                .collect();
            let mean: f64 = parts.iter().map(|&(w, m, _, _)| w * m).sum();
            let variance = parts.iter().map(|&(w, m, v, _)| w * (v + (m - mean).powi(2))).sum();
            let within: f64 = parts.iter().map(|&(w, _, v, n)| w * w * v / n).sum();
            let between: f64 = parts.iter().map(|&(w, m, _, _)| w * (m - mean).powi(2)).sum::<f64>() / n_w;
            ConditionalSummary::Continuous {
                mean,
                variance,
                count,
                std_error: (within + between).sqrt(),
            }
        }
        ConditionalSummary::Discrete { levels, .. } => {
            let k = levels.len();
            let mut probs = vec![0.0; k];
            let mut se2 = vec![0.0; k];
            for (w, s) in strata {
                let ConditionalSummary::Discrete { probs: p, count: n, .. } = s else {
                    unreachable!("one outcome type")
                };
                for j in 0..k {
                    probs[j] += w * p[j];
                    se2[j] += w * w * p[j] * (1.0 - p[j]) / *n as f64;
                }
            }
            for j in 0..k {
                let between: f64 = strata
                    .iter()
                    .map(|(w, s)| match s {
                        ConditionalSummary::Discrete { probs: p, .. } => w * (p[j] - probs[j]).powi(2),
                        ConditionalSummary::Continuous { .. } => 0.0,
                    })
                    .sum();
                se2[j] += between / n_w;
            }
            ConditionalSummary::Discrete {
                levels: levels.clone(),
                probs,
                count,
                std_errors: se2.into_iter().map(f64::sqrt).collect(),
            }
        }
    }
}

fn discrete_levels(d: &Dataset, vars: &[&str]) -> Result<Vec<usize>, EstimationError> {
    vars.iter()
        .map(|v| {
            d.n_levels(d.index_of(v)?)
                .ok_or_else(|| EstimationError::Input(format!("`{v}` must be discrete")))
        })
        .collect()
}

fn label(d: &Dataset, var: &str, code: u32) -> String {
    d.index_of(var)
        .ok()
        .and_then(|i| d.var(i).levels().map(|l| l[code as usize].clone()))
        .unwrap_or_else(|| code.to_string())
}

fn product(levels: &[usize]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &l in levels {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..l as u32).map(move |v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Datasets bound to the worlds an estimand refers to.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bindings<'a> {
    pub source: Option<&'a Dataset>,
    pub target: Option<&'a Dataset>,
    /// Data from randomized experiments in the source environment; must be
    /// flagged with the intervened variables.
    pub experimental: Option<&'a Dataset>,
}

impl<'a> Bindings<'a> {
    fn get(&self, w: World) -> Option<&'a Dataset> {
        match w {
            World::Source => self.source,
            World::Target => self.target,
            World::Experimental => self.experimental,
        }
    }

    fn all(&self) -> impl Iterator<Item = &'a Dataset> {
        [self.source, self.target, self.experimental].into_iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EstimateValue {
    Distribution { levels: Vec<String>, probs: Vec<f64> },
    Mean { mean: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    /// Levels of the estimand's non-outcome free variables.
    pub assignment: Vec<(String, String)>,
    pub value: EstimateValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateTable {
    pub outcome: Vec<String>,
    pub rows: Vec<EstimateRow>,
}

/// Evaluates `e` with empirical plug-in terms for every level of its free
/// non-outcome variables. A single continuous outcome is estimated as a mean:
/// its one term `P(y | ...)` is replaced by the conditional mean, which
/// requires the term to enter the estimand linearly.
pub fn estimate(e: &Estimand, outcome: &[String], bindings: &Bindings) -> Result<EstimateTable, EstimationError> {
    let worlds_used = e.worlds();
    for w in &worlds_used {
        if bindings.get(*w).is_none() {
            return Err(EstimationError::Input(format!("no dataset bound to the {w:?} world")));
        }
    }
    for t in e.terms() {
        if t.intervened.is_empty() {
            continue;
        }
        let flagged = t.world == World::Experimental
            && bindings
                .get(World::Experimental)
                .is_some_and(|d| t.intervened.iter().all(|v| d.intervened().contains(base_name(v))));
        if !flagged {
            return Err(EstimationError::Input(format!(
                "term {} needs experimental data flagged as intervened on its do() variables",
                Estimand::Prob(t.clone())
            )));
        }
    }
    let free = e.free_vars();
    for y in outcome {
        if !free.contains(y) {
            return Err(EstimationError::Input(format!("outcome `{y}` is not free in the estimand")));
        }
    }
    let find = |v: &str| -> Result<(&Dataset, usize), EstimationError> {
        bindings
            .all()
            .find_map(|d| d.index_of(v).ok().map(|i| (d, i)))
            .ok_or_else(|| EstimationError::Dist(DistError::UnknownVariable(v.to_string())))
    };
    let continuous = match outcome {
        [y] => {
            let (d, i) = find(y)?;
            d.n_levels(i).is_none()
        }
        _ => false,
    };
    if continuous {
        check_linear(e, &outcome[0])?;
    }

    // every discrete symbol the estimand touches, by base name
    let mut symbols: BTreeSet<String> = BTreeSet::new();
    for t in e.terms() {
        for s in t.vars.iter().chain(&t.given) {
            symbols.insert(base_name(s).to_string());
        }
    }
    if continuous {
        symbols.remove(&outcome[0]);
    }
    let worlds = build_worlds(e, bindings, &symbols)?;

    let others: Vec<String> = free.iter().filter(|v| !outcome.contains(v)).cloned().collect();
    let mut other_levels = Vec::new();
    for v in &others {
        let (d, i) = find(v)?;
        other_levels.push(
            d.n_levels(i)
                .ok_or_else(|| EstimationError::Input(format!("`{v}` must be discrete")))?,
        );
    }
    let out_levels: Vec<usize> = if continuous {
        Vec::new()
    } else {
        outcome
            .iter()
            .map(|v| {
                let (d, i) = find(v)?;
                d.n_levels(i)
                    .ok_or_else(|| EstimationError::Input(format!("`{v}` must be discrete")))
            })
            .collect::<Result<_, _>>()?
    };

    let mut ev = Evaluator::new(&worlds);
    if continuous {
        ev = ev.with_term_hook(mean_hook(outcome[0].clone(), *bindings));
    }
    let mut rows = Vec::new();
    for ov in product(&other_levels) {
        let mut env: BTreeMap<String, u32> = others.iter().cloned().zip(ov.iter().copied()).collect();
        let assignment = others
            .iter()
            .zip(&ov)
            .map(|(v, &c)| Ok((v.clone(), label(find(v)?.0, v, c))))
            .collect::<Result<Vec<_>, EstimationError>>()?;
        let value = if continuous {
            EstimateValue::Mean {
                mean: ev.eval(e, &env)?,
            }
        } else {
            let mut levels = Vec::new();
            let mut probs = Vec::new();
            for yv in product(&out_levels) {
                for (v, &c) in outcome.iter().zip(&yv) {
                    env.insert(v.clone(), c);
                }
                let labels: Vec<String> = outcome
                    .iter()
                    .zip(&yv)
                    .map(|(v, &c)| Ok(label(find(v)?.0, v, c)))
                    .collect::<Result<_, EstimationError>>()?;
                levels.push(labels.join(","));
                probs.push(ev.eval(e, &env)?);
            }
            EstimateValue::Distribution { levels, probs }
        };
        rows.push(EstimateRow { assignment, value });
    }
    Ok(EstimateTable {
        outcome: outcome.to_vec(),
        rows,
    })
}

/// The continuous outcome must appear in exactly one term, alone on the left
/// and outside any denominator.
fn check_linear(e: &Estimand, y: &str) -> Result<(), EstimationError> {
    fn walk(e: &Estimand, y: &str, in_den: bool, hits: &mut usize) -> Result<(), EstimationError> {
        let bad = || EstimationError::Input(format!("continuous outcome `{y}` must enter the estimand linearly"));
        match e {
            Estimand::Prob(t) => {
                if t.given.iter().any(|s| base_name(s) == y) {
                    return Err(bad());
                }
                if t.vars.iter().any(|s| base_name(s) == y) {
                    if in_den || t.vars.len() != 1 || t.vars[0] != y {
                        return Err(bad());
                    }
                    *hits += 1;
                }
                Ok(())
            }
            Estimand::Sum { vars, body } => {
                if vars.iter().any(|s| base_name(s) == y) {
                    return Err(bad());
                }
                walk(body, y, in_den, hits)
            }
            Estimand::Product { factors } => factors.iter().try_for_each(|f| walk(f, y, in_den, hits)),
            Estimand::Quotient { num, den } => {
                walk(num, y, in_den, hits)?;
                walk(den, y, true, hits)
            }
        }
    }
    let mut hits = 0;
    walk(e, y, false, &mut hits)?;
    if hits != 1 {
        return Err(EstimationError::Input(format!(
            "continuous outcome `{y}` must appear in exactly one term"
        )));
    }
    Ok(())
}

fn empirical_of(d: &Dataset, rows: Option<&[usize]>, vars: &[&str]) -> Result<JointTable, EstimationError> {
    match rows {
        None => Ok(JointTable::empirical(d, vars)?),
        Some(rows) => {
            let mut levels = Vec::new();
            let mut idx = Vec::new();
            for v in vars {
                let i = d.index_of(v)?;
                levels.push(
                    d.n_levels(i)
                        .ok_or_else(|| EstimationError::Input(format!("`{v}` must be discrete")))?,
                );
                idx.push(i);
            }
            let mut counts = vec![0.0; levels.iter().product()];
            for &r in rows {
                let mut cell = 0;
                for (&i, &l) in idx.iter().zip(&levels) {
                    cell = cell * l + d.codes(i).unwrap()[r] as usize;
                }
                counts[cell] += 1.0;
            }
            Ok(JointTable::from_weights(
                vars.iter().map(|s| s.to_string()).collect(),
                levels,
                counts,
            )?)
        }
    }
}

fn build_worlds(e: &Estimand, b: &Bindings, symbols: &BTreeSet<String>) -> Result<Worlds, EstimationError> {
    let cols = |d: &Dataset| -> Vec<&str> {
        symbols
            .iter()
            .map(String::as_str)
            .filter(|s| d.index_of(s).is_ok())
            .collect()
    };
    let mut worlds = Worlds::default();
    let used = e.worlds();
    if used.contains(&World::Source) {
        let d = b.source.expect("checked");
        worlds.source = Some(empirical_of(d, None, &cols(d))?);
    }
    if used.contains(&World::Target) {
        let d = b.target.expect("checked");
        worlds.target = Some(empirical_of(d, None, &cols(d))?);
    }
    if used.contains(&World::Experimental) {
        let d = b.experimental.expect("checked");
        let mut dos: BTreeSet<Vec<String>> = BTreeSet::new();
        for t in e.terms().into_iter().filter(|t| t.world == World::Experimental) {
            let mut v: Vec<String> = t.intervened.iter().map(|s| base_name(s).to_string()).collect();
            v.sort();
            dos.insert(v);
        }
        for vars in dos {
            let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
            for codes in product(&discrete_levels(d, &refs)?) {
                let a: Vec<(usize, u32)> = refs
                    .iter()
                    .zip(&codes)
                    .map(|(v, &c)| Ok((d.index_of(v)?, c)))
                    .collect::<Result<_, EstimationError>>()?;
                let rows = d.matching_rows(&a);
                if rows.is_empty() {
                    continue;
                }
                let key = vars.iter().cloned().zip(codes.iter().copied()).collect();
                worlds.experiments.insert(key, empirical_of(d, Some(&rows), &cols(d))?);
            }
        }
    }
    Ok(worlds)
}

/// Replaces the continuous outcome's term with the matching conditional mean.
fn mean_hook<'a>(y: String, b: Bindings<'a>) -> crate::queries::TermHook<'a> {
    let mut cache: HashMap<(World, Vec<(usize, u32)>), Result<f64, DistError>> = HashMap::new();
    Box::new(move |t: &ProbTerm, env: &BTreeMap<String, u32>| {
        if t.vars.len() != 1 || t.vars[0] != y {
            return None;
        }
        let d = b.get(t.world)?;
        let mut a = Vec::new();
        for s in t.given.iter().chain(&t.intervened) {
            let Ok(i) = d.index_of(base_name(s)) else {
                return Some(Err(DistError::UnknownVariable(base_name(s).to_string())));
            };
            let Some(&v) = env.get(s) else {
                return Some(Err(DistError::UnknownVariable(s.clone())));
            };
            a.push((i, v));
        }
        a.sort_unstable();
        let value = cache.entry((t.world, a.clone())).or_insert_with(|| {
            let rows = d.matching_rows(&a);
            let yi = d.index_of(&y).expect("outcome resolved");
            if rows.is_empty() {
                let EstimationError::Dist(e) = undefined(d, &a) else { unreachable!() };
                return Err(e);
            }
            Ok(rows.iter().map(|&r| d.column(yi).value(r)).sum::<f64>() / rows.len() as f64)
        });
        Some(value.clone())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::VariableMeta;
    use crate::graph::NodeRole;

    fn data(o: Vec<u32>, perf: Vec<f64>) -> Dataset {
        Dataset::new(
            vec![
                VariableMeta::discrete_k("o", NodeRole::Option, 2),
                VariableMeta::continuous("perf", NodeRole::Performance),
            ],
            vec![Column::Discrete(o), Column::Continuous(perf)],
        )
        .unwrap()
    }

    #[test]
    fn mean_and_unbiased_variance() {
        let d = data(vec![1, 1, 0], vec![1.0, 3.0, 10.0]);
        let ConditionalSummary::Continuous { mean, variance, count, .. } = cond_summary(&d, "perf", &[("o", 1)]).unwrap()
        else {
            panic!()
        };
        // n-1 denominator: ((1-2)² + (3-2)²) / 1
        assert_eq!((mean, variance, count), (2.0, 2.0, 2));
    }

    #[test]
    fn empty_condition_is_undefined() {
        let d = data(vec![1, 1], vec![1.0, 3.0]);
        let err = cond_summary(&d, "perf", &[("o", 0)]).unwrap_err();
        assert!(err.is_undefined());
        assert!(err.to_string().contains("o=0"), "{err}");
        assert!(cond_summary(&d, "perf", &[("o", 2)]).is_err());
    }

    #[test]
    fn smoothing_adds_pseudo_counts() {
        let d = Dataset::new(
            vec![VariableMeta::discrete_k("y", NodeRole::Performance, 3)],
            vec![Column::Discrete(vec![0, 0, 1])],
        )
        .unwrap();
        let ConditionalSummary::Discrete { probs, .. } = cond_summary_smoothed(&d, "y", &[], 1.0).unwrap() else {
            panic!()
        };
        assert_eq!(probs, vec![0.5, 2.0 / 6.0, 1.0 / 6.0]);
    }

    #[test]
    fn continuous_outcome_must_be_linear() {
        let e = Estimand::quotient(
            Estimand::prob(vec!["perf".into()], vec![]),
            Estimand::prob(vec!["perf".into()], vec![]),
        );
        assert!(check_linear(&e, "perf").is_err());
        assert!(check_linear(&Estimand::prob(vec!["perf".into()], vec!["o".into()]), "perf").is_ok());
    }
}

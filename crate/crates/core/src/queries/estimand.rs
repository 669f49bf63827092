//! Symbolic estimands and their numeric evaluation.
//!
//! A bound copy of a variable is written with trailing primes (`x'`); since
//! primes are not legal in node names, the underlying variable is always the
//! symbol with primes stripped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distribution::{DistError, JointTable, MarginalCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum World {
    /// Observational distribution of the source environment, `P`.
    Source,
    /// Observational distribution of the target environment, `P*`.
    Target,
    /// Source-environment experiments, `P(.|do(.))`.
    Experimental,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbTerm {
    pub world: World,
    pub vars: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub given: Vec<String>,
    /// Intervened variables; nonempty exactly for [`World::Experimental`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intervened: Vec<String>,
}

impl ProbTerm {
    pub fn source(vars: Vec<String>, given: Vec<String>) -> Self {
        ProbTerm {
            world: World::Source,
            vars,
            given,
            intervened: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Estimand {
    Prob(ProbTerm),
    Sum { vars: Vec<String>, body: Box<Estimand> },
    Product { factors: Vec<Estimand> },
    Quotient { num: Box<Estimand>, den: Box<Estimand> },
}

/// Variable behind a (possibly primed) symbol.
pub fn base_name(symbol: &str) -> &str {
    symbol.trim_end_matches('\'')
}

impl Estimand {
    pub fn prob(vars: Vec<String>, given: Vec<String>) -> Self {
        Estimand::Prob(ProbTerm::source(vars, given))
    }

    /// `Σ_vars body`, or `body` when `vars` is empty.
    pub fn sum(vars: Vec<String>, body: Estimand) -> Self {
        if vars.is_empty() {
            body
        } else {
            Estimand::Sum {
                vars,
                body: Box::new(body),
            }
        }
    }

    /// Product with nested products flattened; a single factor is returned as is.
    pub fn product(factors: Vec<Estimand>) -> Self {
        let mut flat = Vec::new();
        for f in factors {
            match f {
                Estimand::Product { factors } => flat.extend(factors),
                other => flat.push(other),
            }
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Estimand::Product { factors: flat }
        }
    }

    pub fn quotient(num: Estimand, den: Estimand) -> Self {
        Estimand::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    pub fn terms(&self) -> Vec<&ProbTerm> {
        let mut out = Vec::new();
        self.visit(&mut |t| out.push(t));
        out
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a ProbTerm)) {
        match self {
            Estimand::Prob(t) => f(t),
            Estimand::Sum { body, .. } => body.visit(f),
            Estimand::Product { factors } => factors.iter().for_each(|e| e.visit(f)),
            Estimand::Quotient { num, den } => {
                num.visit(f);
                den.visit(f);
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ProbTerm)) {
        match self {
            Estimand::Prob(t) => f(t),
            Estimand::Sum { body, .. } => body.visit_mut(f),
            Estimand::Product { factors } => factors.iter_mut().for_each(|e| e.visit_mut(f)),
            Estimand::Quotient { num, den } => {
                num.visit_mut(f);
                den.visit_mut(f);
            }
        }
    }

    /// Whether any term is interventional.
    pub fn has_interventions(&self) -> bool {
        self.terms().iter().any(|t| !t.intervened.is_empty())
    }

    pub fn worlds(&self) -> BTreeSet<World> {
        self.terms().iter().map(|t| t.world).collect()
    }

    /// Moves every term to `world`.
    pub fn retag(&mut self, world: World) {
        self.visit_mut(&mut |t| t.world = world);
    }

    /// Symbols used but not bound by an enclosing sum.
    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Estimand::Prob(t) => t.vars.iter().chain(&t.given).chain(&t.intervened).cloned().collect(),
            Estimand::Sum { vars, body } => {
                let mut f = body.free_vars();
                for v in vars {
                    f.remove(v);
                }
                f
            }
            Estimand::Product { factors } => factors.iter().flat_map(|e| e.free_vars()).collect(),
            Estimand::Quotient { num, den } => {
                let mut f = num.free_vars();
                f.extend(den.free_vars());
                f
            }
        }
    }

    /// Every symbol bound by a sum.
    pub fn bound_vars(&self) -> BTreeSet<String> {
        match self {
            Estimand::Prob(_) => BTreeSet::new(),
            Estimand::Sum { vars, body } => {
                let mut b = body.bound_vars();
                b.extend(vars.iter().cloned());
                b
            }
            Estimand::Product { factors } => factors.iter().flat_map(|e| e.bound_vars()).collect(),
            Estimand::Quotient { num, den } => {
                let mut b = num.bound_vars();
                b.extend(den.bound_vars());
                b
            }
        }
    }

    /// Renames bound symbols that shadow `reserved` or an enclosing binding,
    /// priming them until unique.
    pub fn rename_bound(&mut self, reserved: &BTreeSet<String>) {
        let mut taken: BTreeSet<String> = reserved.clone();
        taken.extend(self.free_vars());
        self.rename_inner(&taken);
    }

    fn rename_inner(&mut self, outer: &BTreeSet<String>) {
        match self {
            Estimand::Prob(_) => {}
            Estimand::Sum { vars, body } => {
                let mut taken = outer.clone();
                let mut map = BTreeMap::new();
                for v in vars.iter_mut() {
                    if taken.contains(v.as_str()) {
                        let mut fresh = format!("{v}'");
                        while taken.contains(&fresh) {
                            fresh.push('\'');
                        }
                        map.insert(v.clone(), fresh.clone());
                        *v = fresh;
                    }
                    taken.insert(v.clone());
                }
                if !map.is_empty() {
                    body.substitute(&map);
                }
                body.rename_inner(&taken);
            }
            Estimand::Product { factors } => factors.iter_mut().for_each(|e| e.rename_inner(outer)),
            Estimand::Quotient { num, den } => {
                num.rename_inner(outer);
                den.rename_inner(outer);
            }
        }
    }

    /// Replaces free occurrences of the mapped symbols.
    fn substitute(&mut self, map: &BTreeMap<String, String>) {
        match self {
            Estimand::Prob(t) => {
                for s in t.vars.iter_mut().chain(t.given.iter_mut()).chain(t.intervened.iter_mut()) {
                    if let Some(r) = map.get(s.as_str()) {
                        *s = r.clone();
                    }
                }
            }
            Estimand::Sum { vars, body } => {
                let inner: BTreeMap<String, String> = map
                    .iter()
                    .filter(|(k, _)| !vars.contains(k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                body.substitute(&inner);
            }
            Estimand::Product { factors } => factors.iter_mut().for_each(|e| e.substitute(map)),
            Estimand::Quotient { num, den } => {
                num.substitute(map);
                den.substitute(map);
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimands serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for ProbTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.world == World::Target { "P*" } else { "P" };
        write!(f, "{p}({}", self.vars.join(","))?;
        let mut cond = Vec::new();
        if !self.intervened.is_empty() {
            cond.push(format!("do({})", self.intervened.join(",")));
        }
        if !self.given.is_empty() {
            cond.push(self.given.join(","));
        }
        if !cond.is_empty() {
            write!(f, "|{}", cond.join(","))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimand::Prob(t) => write!(f, "{t}"),
            Estimand::Sum { vars, body } => {
                if vars.len() == 1 {
                    write!(f, "sum_{} {body}", vars[0])
                } else {
                    write!(f, "sum_{{{}}} {body}", vars.join(","))
                }
            }
            Estimand::Product { factors } => {
                let parts: Vec<String> = factors
                    .iter()
                    .map(|e| match e {
                        Estimand::Prob(_) => e.to_string(),
                        _ => format!("[{e}]"),
                    })
                    .collect();
                write!(f, "{}", parts.join(" "))
            }
            Estimand::Quotient { num, den } => write!(f, "[{num}] / [{den}]"),
        }
    }
}

/// Distributions an estimand can be evaluated against.
#[derive(Debug, Clone, Default)]
pub struct Worlds {
    pub source: Option<JointTable>,
    pub target: Option<JointTable>,
    /// Joint distribution under each intervention, keyed by the sorted
    /// `(variable, level)` assignment.
    pub experiments: BTreeMap<Vec<(String, u32)>, JointTable>,
}

impl Worlds {
    pub fn source(joint: JointTable) -> Self {
        Worlds {
            source: Some(joint),
            ..Worlds::default()
        }
    }
}

/// Replacement value for a term, or `None` to evaluate it normally.
pub type TermHook<'a> = Box<dyn FnMut(&ProbTerm, &BTreeMap<String, u32>) -> Option<Result<f64, DistError>> + 'a>;

/// Evaluates estimands against fixed worlds, memoizing marginals.
pub struct Evaluator<'a> {
    worlds: &'a Worlds,
    source: Option<MarginalCache<'a>>,
    target: Option<MarginalCache<'a>>,
    experiments: HashMap<Vec<(String, u32)>, MarginalCache<'a>>,
    hook: Option<TermHook<'a>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(worlds: &'a Worlds) -> Self {
        Evaluator {
            worlds,
            source: worlds.source.as_ref().map(MarginalCache::new),
            target: worlds.target.as_ref().map(MarginalCache::new),
            experiments: HashMap::new(),
            hook: None,
        }
    }

    /// Routes every term through `hook` first.
    pub fn with_term_hook(mut self, hook: TermHook<'a>) -> Self {
        self.hook = Some(hook);
        self
    }

    /// Value of `e` with free symbols bound by `env`.
    pub fn eval(&mut self, e: &Estimand, env: &BTreeMap<String, u32>) -> Result<f64, DistError> {
        let mut env = env.clone();
        self.eval_in(e, &mut env)
    }

    fn eval_in(&mut self, e: &Estimand, env: &mut BTreeMap<String, u32>) -> Result<f64, DistError> {
        match e {
            Estimand::Prob(t) => self.term(t, env),
            Estimand::Product { factors } => {
                let mut acc = 1.0;
                for f in factors {
                    acc *= self.eval_in(f, env)?;
                }
                Ok(acc)
            }
            Estimand::Quotient { num, den } => {
                let d = self.eval_in(den, env)?;
                if d == 0.0 {
                    return Err(DistError::UndefinedConditional(format!(
                        "denominator {den} at {}",
                        describe(env)
                    )));
                }
                Ok(self.eval_in(num, env)? / d)
            }
            Estimand::Sum { vars, body } => {
                let levels: Vec<usize> = vars
                    .iter()
                    .map(|v| self.domain(base_name(v)))
                    .collect::<Result<_, _>>()?;
                let saved: Vec<Option<u32>> = vars.iter().map(|v| env.get(v).copied()).collect();
                let mut acc = 0.0;
                let mut vals = vec![0u32; vars.len()];
                let result = loop {
                    for (v, &x) in vars.iter().zip(&vals) {
                        env.insert(v.clone(), x);
                    }
                    match self.eval_in(body, env) {
                        Ok(x) => acc += x,
                        Err(err) => break Err(err),
                    }
                    if !next(&mut vals, &levels) {
                        break Ok(acc);
                    }
                };
                for (v, old) in vars.iter().zip(saved) {
                    match old {
                        Some(x) => env.insert(v.clone(), x),
                        None => env.remove(v),
                    };
                }
                result
            }
        }
    }

    /// Number of levels of `var` in the first supplied world containing it.
    pub fn domain(&self, var: &str) -> Result<usize, DistError> {
        let tables = self
            .worlds
            .source
            .iter()
            .chain(&self.worlds.target)
            .chain(self.worlds.experiments.values());
        for t in tables {
            if let Ok(i) = t.index_of(var) {
                return Ok(t.levels()[i]);
            }
        }
        Err(DistError::UndefinedConditional(format!(
            "summation over `{var}` has an empty domain: no supplied distribution contains it"
        )))
    }

    fn term(&mut self, t: &ProbTerm, env: &BTreeMap<String, u32>) -> Result<f64, DistError> {
        if let Some(v) = self.hook.as_mut().and_then(|h| h(t, env)) {
            return v;
        }
        let value = |s: &String| env.get(s).copied().ok_or_else(|| DistError::UnknownVariable(s.clone()));
        let cache = match t.world {
            World::Source => self.source.as_mut(),
            World::Target => self.target.as_mut(),
            World::Experimental => {
                let mut key: Vec<(String, u32)> = t
                    .intervened
                    .iter()
                    .map(|s| Ok((base_name(s).to_string(), value(s)?)))
                    .collect::<Result<_, DistError>>()?;
                key.sort();
                let Some((k, joint)) = self.worlds.experiments.get_key_value(&key) else {
                    return Err(DistError::Invalid(format!(
                        "no experiment supplied for do({})",
                        describe_pairs(&key)
                    )));
                };
                Some(self.experiments.entry(k.clone()).or_insert_with(|| MarginalCache::new(joint)))
            }
        };
        let Some(cache) = cache else {
            return Err(DistError::Invalid(format!("no distribution supplied for {:?} terms", t.world)));
        };
        let joint = cache.joint();
        let pairs = |syms: &[String]| -> Result<Vec<(usize, u32)>, DistError> {
            syms.iter()
                .map(|s| Ok((joint.index_of(base_name(s))?, value(s)?)))
                .collect()
        };
        let given = pairs(&t.given)?;
        let mut all = pairs(&t.vars)?;
        all.extend_from_slice(&given);
        let den = if given.is_empty() { 1.0 } else { cache.prob(&given) };
        if den <= 0.0 {
            let named: Vec<(String, u32)> = t
                .given
                .iter()
                .map(|s| (base_name(s).to_string(), env[s]))
                .collect();
            return Err(DistError::UndefinedConditional(describe_pairs(&named)));
        }
        Ok(cache.prob(&all) / den)
    }
}

fn next(vals: &mut [u32], levels: &[usize]) -> bool {
    for i in (0..vals.len()).rev() {
        vals[i] += 1;
        if (vals[i] as usize) < levels[i] {
            return true;
        }
        vals[i] = 0;
    }
    false
}

fn describe(env: &BTreeMap<String, u32>) -> String {
    env.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

fn describe_pairs(p: &[(String, u32)]) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// Value of `e` with its free symbols set by `env`.
pub fn evaluate_estimand(e: &Estimand, worlds: &Worlds, env: &BTreeMap<String, u32>) -> Result<f64, DistError> {
    Evaluator::new(worlds).eval(e, env)
}

/// Values of `e` over every joint level of `outcome`, the remaining free
/// symbols fixed by `env`. Cells are in row-major order, first outcome
/// variable slowest.
pub fn evaluate_table(
    e: &Estimand,
    worlds: &Worlds,
    outcome: &[String],
    env: &BTreeMap<String, u32>,
) -> Result<Vec<(Vec<u32>, f64)>, DistError> {
    let mut ev = Evaluator::new(worlds);
    let levels: Vec<usize> = outcome
        .iter()
        .map(|v| ev.domain(base_name(v)))
        .collect::<Result<_, _>>()?;
    let mut env = env.clone();
    let mut vals = vec![0u32; outcome.len()];
    let mut out = Vec::new();
    loop {
        for (v, &x) in outcome.iter().zip(&vals) {
            env.insert(v.clone(), x);
        }
        out.push((vals.clone(), ev.eval_in(e, &mut env)?));
        if !next(&mut vals, &levels) {
            break;
        }
    }
    Ok(out)
}

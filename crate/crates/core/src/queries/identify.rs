//! Identification of interventional distributions on ADMGs: the do-calculus
//! rule-2 shortcut, back-door adjustment, and the complete recursive
//! c-component algorithm (with its conditional extension).

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::Serialize;

use super::estimand::Estimand;
use super::{CausalQuery, QueryError};
use crate::graph::{latent_projection, GraphKind, MixedGraph, NodeRole};

/// Two nested C-forests witnessing non-identifiability.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hedge {
    pub f: BTreeSet<String>,
    pub f_prime: BTreeSet<String>,
}

impl std::fmt::Display for Hedge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let j = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        write!(f, "hedge F = {{{}}}, F' = {{{}}}", j(&self.f), j(&self.f_prime))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Identified,
    NotIdentified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentificationResult {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimand: Option<Estimand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Hedge>,
}

impl IdentificationResult {
    fn identified(e: Estimand) -> Self {
        IdentificationResult {
            status: Status::Identified,
            estimand: Some(e),
            witness: None,
        }
    }

    fn failed(h: Hedge) -> Self {
        IdentificationResult {
            status: Status::NotIdentified,
            estimand: None,
            witness: Some(h),
        }
    }

    pub fn is_identified(&self) -> bool {
        self.status == Status::Identified
    }
}

/// Accepts DAGs and ADMGs; latent-role nodes of a DAG are projected out.
pub(crate) fn causal_graph(g: &MixedGraph) -> Result<MixedGraph, QueryError> {
    match g.kind() {
        GraphKind::Dag => {
            let lat: Vec<String> = g.names_of(g.nodes_with_role(NodeRole::Latent));
            if lat.is_empty() {
                Ok(g.clone())
            } else {
                Ok(latent_projection(g, &lat)?)
            }
        }
        GraphKind::Admg => Ok(g.clone()),
        k => Err(QueryError::WrongKind(k)),
    }
}

fn indices(g: &MixedGraph, names: &[String]) -> Result<Vec<usize>, QueryError> {
    Ok(g.indices_of(names)?)
}

/// Whether `P(y|do(x),c) = P(y|x,c)`: `x` and `y` are separated given `c`
/// once the edges leaving `x` are cut.
pub fn rule2_applies(g: &MixedGraph, q: &CausalQuery) -> Result<bool, QueryError> {
    if !matches!(g.kind(), GraphKind::Dag | GraphKind::Admg) {
        return Err(QueryError::WrongKind(g.kind()));
    }
    let (x, y, c) = (indices(g, &q.treatment)?, indices(g, &q.outcome)?, indices(g, &q.conditioning)?);
    Ok(g.mutilate_idx(&[], &x).separated_idx(&x, &y, &c))
}

/// Smallest back-door set (then lexicographically first by name) among
/// observed non-descendants of the treatment, or `None`.
pub fn backdoor_set(g: &MixedGraph, q: &CausalQuery) -> Result<Option<Vec<String>>, QueryError> {
    if !matches!(g.kind(), GraphKind::Dag | GraphKind::Admg) {
        return Err(QueryError::WrongKind(g.kind()));
    }
    let (x, y, c) = (indices(g, &q.treatment)?, indices(g, &q.outcome)?, indices(g, &q.conditioning)?);
    let desc = g.descendants_mask(&x);
    let cut = g.mutilate_idx(&[], &x);
    let mut pool: Vec<usize> = (0..g.n())
        .filter(|&v| !desc[v] && !y.contains(&v) && !c.contains(&v))
        .filter(|&v| g.role(v) != Some(NodeRole::Latent))
        .collect();
    pool.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    for k in 0..=pool.len() {
        for z in pool.iter().copied().combinations(k) {
            let mut cond = z.clone();
            cond.extend_from_slice(&c);
            if cut.separated_idx(&x, &y, &cond) {
                return Ok(Some(g.names_of(z)));
            }
        }
    }
    Ok(None)
}

/// Identifies `P(y | do(x), c)`.
///
/// Queries that pass [`rule2_applies`] get the plain conditional. Others go
/// through the recursive c-component algorithm; conditional queries first
/// move conditioning variables into the intervention where rule 2 allows.
pub fn id_effect(g: &MixedGraph, q: &CausalQuery) -> Result<IdentificationResult, QueryError> {
    let g = causal_graph(g)?;
    let mut reserved: BTreeSet<String> = q.treatment.iter().chain(&q.outcome).cloned().collect();
    reserved.extend(q.conditioning.iter().cloned());
    if rule2_applies(&g, q)? {
        let mut given = q.treatment.clone();
        given.extend(q.conditioning.iter().cloned());
        given.sort();
        return Ok(IdentificationResult::identified(Estimand::prob(q.outcome.clone(), given)));
    }
    g.topological_order()?;
    let id = Id::new(&g)?;
    let (x, y, c) = (indices(&g, &q.treatment)?, indices(&g, &q.outcome)?, indices(&g, &q.conditioning)?);
    let all: BTreeSet<usize> = (0..g.n()).collect();
    let result = if c.is_empty() {
        id.id(&set(&y), &set(&x), &Dist::Observed, &all)
    } else {
        id.idc(&set(&y), &set(&x), &set(&c))
    };
    Ok(match result {
        Ok(mut e) => {
            // The effect does not depend on stray free symbols (the napkin
            // graph leaves one); averaging them out keeps the estimand closed.
            let stray: Vec<String> = e.free_vars().difference(&reserved).cloned().collect();
            if !stray.is_empty() {
                e = Estimand::sum(stray.clone(), Estimand::product(vec![Estimand::prob(stray, vec![]), e]));
            }
            e.rename_bound(&reserved);
            IdentificationResult::identified(e)
        }
        Err(h) => IdentificationResult::failed(h),
    })
}

fn set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

/// The distribution a recursive call works with: the observational joint,
/// or an expression over the current node set.
#[derive(Debug, Clone)]
enum Dist {
    Observed,
    Expr(Estimand),
}

struct Id<'a> {
    g: &'a MixedGraph,
    /// Position of each node in a fixed topological order.
    rank: Vec<usize>,
}

impl<'a> Id<'a> {
    fn new(g: &'a MixedGraph) -> Result<Self, QueryError> {
        let order = g.topological_order()?;
        let mut rank = vec![0; g.n()];
        for (i, &v) in order.iter().enumerate() {
            rank[v] = i;
        }
        Ok(Id { g, rank })
    }

    fn names(&self, s: &BTreeSet<usize>) -> Vec<String> {
        let mut v: Vec<String> = s.iter().map(|&i| self.g.name(i).to_string()).collect();
        v.sort();
        v
    }

    /// Ancestors of `of` within `within`, optionally ignoring edges into `cut`.
    fn ancestors(&self, of: &BTreeSet<usize>, within: &BTreeSet<usize>, cut: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out: BTreeSet<usize> = of.clone();
        let mut stack: Vec<usize> = of.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if cut.contains(&v) {
                continue;
            }
            for u in self.g.parents(v) {
                if within.contains(&u) && out.insert(u) {
                    stack.push(u);
                }
            }
        }
        out
    }

    /// Districts (bidirected components) of the subgraph induced by `within`.
    fn districts(&self, within: &BTreeSet<usize>) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &s in within {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = BTreeSet::from([s]);
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for u in self.g.spouses(v) {
                    if within.contains(&u) && seen.insert(u) {
                        comp.insert(u);
                        stack.push(u);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn predecessors(&self, v: usize, within: &BTreeSet<usize>) -> BTreeSet<usize> {
        within.iter().copied().filter(|&u| self.rank[u] < self.rank[v]).collect()
    }

    /// Marginal of `p` (a distribution over `v`) onto `keep`.
    fn marginal(&self, p: &Dist, keep: &BTreeSet<usize>, v: &BTreeSet<usize>) -> Estimand {
        match p {
            Dist::Observed => Estimand::prob(self.names(keep), vec![]),
            Dist::Expr(e) => Estimand::sum(self.names(&(v - keep)), e.clone()),
        }
    }

    /// `p(target | given)` for `p` over `v`.
    fn conditional(&self, p: &Dist, target: usize, given: &BTreeSet<usize>, v: &BTreeSet<usize>) -> Estimand {
        match p {
            Dist::Observed => Estimand::prob(vec![self.g.name(target).to_string()], self.names(given)),
            Dist::Expr(_) => {
                let mut both = given.clone();
                both.insert(target);
                let num = self.marginal(p, &both, v);
                if given.is_empty() {
                    num
                } else {
                    Estimand::quotient(num, self.marginal(p, given, v))
                }
            }
        }
    }

    /// Product over `s` (in topological order) of `p(v_i | predecessors in v)`.
    fn factorize(&self, p: &Dist, s: &BTreeSet<usize>, v: &BTreeSet<usize>) -> Estimand {
        let mut members: Vec<usize> = s.iter().copied().collect();
        members.sort_by_key(|&u| self.rank[u]);
        Estimand::product(
            members
                .into_iter()
                .map(|u| self.conditional(p, u, &self.predecessors(u, v), v))
                .collect(),
        )
    }

    fn id(&self, y: &BTreeSet<usize>, x: &BTreeSet<usize>, p: &Dist, v: &BTreeSet<usize>) -> Result<Estimand, Hedge> {
        let none = BTreeSet::new();
        // 1
        if x.is_empty() {
            return Ok(self.marginal(p, y, v));
        }
        // 2
        let an = self.ancestors(y, v, &none);
        if an.len() < v.len() {
            let p2 = match p {
                Dist::Observed => Dist::Observed,
                Dist::Expr(e) => Dist::Expr(Estimand::sum(self.names(&(v - &an)), e.clone())),
            };
            let x2 = x & &an;
            return self.id(y, &x2, &p2, &an);
        }
        // 3
        let an_cut = self.ancestors(y, v, x);
        let w: BTreeSet<usize> = &(v - x) - &an_cut;
        if !w.is_empty() {
            return self.id(y, &(x | &w), p, v);
        }
        let rest = v - x;
        let parts = self.districts(&rest);
        // 4
        if parts.len() > 1 {
            let factors = parts
                .iter()
                .map(|s| self.id(s, &(v - s), p, v))
                .collect::<Result<Vec<_>, _>>()?;
            let bound = &rest - y;
            return Ok(Estimand::sum(self.names(&bound), Estimand::product(factors)));
        }
        let s = parts.into_iter().next().expect("y is nonempty");
        let whole = self.districts(v);
        // 5
        if whole.len() == 1 {
            return Err(Hedge {
                f: self.names(v).into_iter().collect(),
                f_prime: self.names(&s).into_iter().collect(),
            });
        }
        // 6
        if whole.contains(&s) {
            return Ok(Estimand::sum(self.names(&(&s - y)), self.factorize(p, &s, v)));
        }
        // 7
        let sp = whole
            .into_iter()
            .find(|c| s.is_subset(c))
            .expect("a district of G \\ X lies inside a district of G");
        let p7 = Dist::Expr(self.factorize(p, &sp, v));
        self.id(y, &(x & &sp), &p7, &sp)
    }

    fn idc(&self, y: &BTreeSet<usize>, x: &BTreeSet<usize>, z: &BTreeSet<usize>) -> Result<Estimand, Hedge> {
        let xv: Vec<usize> = x.iter().copied().collect();
        let yv: Vec<usize> = y.iter().copied().collect();
        for &zi in z {
            let rest: Vec<usize> = x.iter().chain(z.iter()).copied().filter(|&v| v != zi).collect();
            let cut = self.g.mutilate_idx(&xv, &[zi]);
            if cut.separated_idx(&yv, &[zi], &rest) {
                let mut x2 = x.clone();
                x2.insert(zi);
                let mut z2 = z.clone();
                z2.remove(&zi);
                if z2.is_empty() {
                    let all: BTreeSet<usize> = (0..self.g.n()).collect();
                    return self.id(y, &x2, &Dist::Observed, &all);
                }
                return self.idc(y, &x2, &z2);
            }
        }
        let all: BTreeSet<usize> = (0..self.g.n()).collect();
        let num = self.id(&(y | z), x, &Dist::Observed, &all)?;
        let den = Estimand::sum(self.names(y), num.clone());
        Ok(Estimand::quotient(num, den))
    }
}

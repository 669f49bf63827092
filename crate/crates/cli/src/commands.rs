//! Subcommand implementations. Each returns the text report for stdout.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use perfcausal::citest::AutoTest;
use perfcausal::dataset::Dataset;
use perfcausal::discovery::{self, Algorithm, BackgroundKnowledge, DiscoveryParams};
use perfcausal::estimation::{
    self, adjustment_estimate, cond_summary_smoothed, Bindings, ConditionalSummary, EstimateTable, EstimateValue,
};
use perfcausal::graph::{
    consistent_extension, detect_selection_bias, separated, to_dot, to_text, GraphKind, MixedGraph, NodeRole,
};
use perfcausal::queries::{
    backdoor_set, build_selection_diagram, id_effect, recoverability_report, rule2_applies, s_admissible_adjustment,
    trivially_transportable, Available, CausalQuery, Estimand, ProbTerm, Relation, TransportQuery, World,
};
use perfcausal::synthlab::{simulate as simulate_rows, Scm, ScmSpec, SelectionMechanism};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::io::{self, Outputs};
use crate::{Algo, DiscoverArgs, DsepArgs, EstimateArgs, IdentifyArgs, RecoverArgs, RelationArg, SimulateArgs, TransportArgs};

/// `A=1` → (A, Some("1")); `B` → (B, None).
fn parse_given(items: &[String]) -> Vec<(String, Option<String>)> {
    items
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| match s.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), Some(v.trim().to_string())),
            None => (s.to_string(), None),
        })
        .collect()
}

fn names(given: &[(String, Option<String>)]) -> Vec<String> {
    given.iter().map(|(k, _)| k.clone()).collect()
}

fn to_json(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

/// Options adjacent to any of `targets`, by name.
fn influential(g: &MixedGraph, targets: &[usize]) -> Vec<String> {
    let mut out: Vec<String> = g
        .nodes_with_role(NodeRole::Option)
        .into_iter()
        .filter(|&o| targets.iter().any(|&t| g.neighbors(o).any(|v| v == t)))
        .map(|o| g.name(o).to_string())
        .collect();
    out.sort();
    out
}

fn influential_lines(report: &mut String, opts: &[String]) {
    writeln!(report, "influential options: {}", opts.len()).unwrap();
    if !opts.is_empty() {
        writeln!(report, "  {}", opts.join(", ")).unwrap();
    }
}

fn query_text(q: &CausalQuery) -> String {
    Estimand::Prob(ProbTerm {
        world: World::Source,
        vars: q.outcome.clone(),
        given: q.conditioning.clone(),
        intervened: q.treatment.clone(),
    })
    .to_string()
}

fn fmt_num(x: f64) -> String {
    format!("{x:.4}")
}

pub fn discover(a: DiscoverArgs) -> Result<String, CliError> {
    let data = io::dataset(&a.data, &a.meta)?;
    let meta = data.metadata();
    let bk = match &a.bk {
        Some(p) => BackgroundKnowledge::parse(&io::read(p)?)?,
        None => BackgroundKnowledge::from_metadata(&meta),
    };
    let params = DiscoveryParams {
        alpha: a.alpha,
        max_cond_size: a.max_cond_size,
        algorithm: match a.algo {
            Algo::Pc => Algorithm::Pc,
            Algo::Fci => Algorithm::Fci,
        },
        stable: !a.no_stable,
    };
    params.validate()?;
    let test = AutoTest::new(&data)?;
    let out = discovery::discover(&test, &bk, &params)?;
    let mut g = out.graph;
    for v in &meta.variable {
        g.set_role(&v.name, v.role)?;
    }

    let perf = g.nodes_with_role(NodeRole::Performance);
    let opts = influential(&g, &perf);
    let mut r = String::new();
    influential_lines(&mut r, &opts);
    writeln!(
        r,
        "algorithm: {} (alpha {}, {})",
        if params.algorithm == Algorithm::Pc { "pc" } else { "fci" },
        params.alpha,
        if params.stable { "stable" } else { "order-dependent" }
    )
    .unwrap();
    writeln!(r, "graph: {} nodes, {} edges, {} tests", g.n(), g.edges().len(), out.tests_run).unwrap();
    let bias = detect_selection_bias(&g);
    for comp in &bias {
        writeln!(
            r,
            "selection bias suspected: non-chordal undirected component {{{}}}",
            comp.iter().cloned().collect::<Vec<_>>().join(",")
        )
        .unwrap();
    }
    for d in &out.diagnostics {
        writeln!(r, "note: {d}").unwrap();
    }

    let outputs = Outputs::new(&[&a.data, &a.meta]);
    outputs.write(&a.out, to_text(&g).as_bytes())?;
    if let Some(p) = &a.dot {
        outputs.write(p, to_dot(&g).as_bytes())?;
    }
    if let Some(p) = &a.json {
        let sepsets: Vec<Value> = out
            .sepsets
            .iter()
            .map(|((x, y), s)| json!({ "x": x, "y": y, "set": s }))
            .collect();
        let bias: Vec<Vec<String>> = bias.iter().map(|c| c.iter().cloned().collect()).collect();
        outputs.write(
            p,
            &to_json(&json!({
                "influential_options": opts,
                "params": params,
                "tests_run": out.tests_run,
                "diagnostics": out.diagnostics,
                "selection_bias": bias,
                "sepsets": sepsets,
            })),
        )?;
    }
    Ok(r)
}

/// Graph usable for identification: DAG or ADMG, CPDAGs committed to a
/// consistent extension.
fn causal_input(g: MixedGraph, notes: &mut Vec<String>) -> Result<MixedGraph, CliError> {
    match g.kind() {
        GraphKind::Dag | GraphKind::Admg => Ok(g),
        GraphKind::Cpdag => {
            notes.push("CPDAG input committed to a consistent DAG extension".into());
            Ok(consistent_extension(&g)?)
        }
        k => Err(CliError::Data(format!(
            "identification needs a DAG or ADMG, got {k}; orient the graph first"
        ))),
    }
}

fn estimate_lines(r: &mut String, table: &EstimateTable, given: &[(String, Option<String>)]) {
    writeln!(r, "estimate:").unwrap();
    for row in &table.rows {
        let keep = given.iter().all(|(k, v)| match v {
            Some(v) => row.assignment.iter().all(|(n, l)| n != k || l == v),
            None => true,
        });
        if !keep {
            continue;
        }
        let at: Vec<String> = row.assignment.iter().map(|(n, l)| format!("{n}={l}")).collect();
        let value = match &row.value {
            EstimateValue::Mean { mean } => format!("mean {}", fmt_num(*mean)),
            EstimateValue::Distribution { levels, probs } => levels
                .iter()
                .zip(probs)
                .map(|(l, p)| format!("{l}:{}", fmt_num(*p)))
                .collect::<Vec<_>>()
                .join(" "),
        };
        writeln!(r, "  {}  {}", at.join(" "), value).unwrap();
    }
}

fn check_given_levels(d: &Dataset, given: &[(String, Option<String>)]) -> Result<(), CliError> {
    for (k, v) in given {
        if let Some(v) = v {
            let i = d.index_of(k)?;
            d.level_code(i, v)?;
        }
    }
    Ok(())
}

pub fn identify(a: IdentifyArgs) -> Result<String, CliError> {
    let mut notes = Vec::new();
    let g = causal_input(io::graph(&a.graph)?, &mut notes)?;
    let given = parse_given(&a.given);
    let q = CausalQuery::new(&a.treatment, &a.outcome, &names(&given))?;
    let rule2 = rule2_applies(&g, &q)?;
    let backdoor = backdoor_set(&g, &q)?;
    let res = id_effect(&g, &q)?;

    let outcome_idx = g.indices_of(&q.outcome)?;
    let mut r = String::new();
    influential_lines(&mut r, &influential(&g, &outcome_idx));
    for n in &notes {
        writeln!(r, "note: {n}").unwrap();
    }
    writeln!(r, "query: {}", query_text(&q)).unwrap();
    writeln!(r, "rule 2: {}", if rule2 { "applies" } else { "does not apply" }).unwrap();
    match &backdoor {
        Some(z) => writeln!(r, "backdoor set: {{{}}}", z.join(",")).unwrap(),
        None => writeln!(r, "backdoor set: none").unwrap(),
    }
    match (&res.estimand, &res.witness) {
        (Some(e), _) => writeln!(r, "estimand: {e}").unwrap(),
        (None, Some(h)) => writeln!(r, "not identified: {h}").unwrap(),
        (None, None) => writeln!(r, "not identified").unwrap(),
    }

    let mut estimates = Value::Null;
    if let (Some(data), Some(e)) = (&a.data, &res.estimand) {
        let d = io::dataset(data, a.meta.as_ref().expect("clap requires meta with data"))?;
        check_given_levels(&d, &given)?;
        let table = estimation::estimate(
            e,
            &q.outcome,
            &Bindings {
                source: Some(&d),
                ..Bindings::default()
            },
        )?;
        estimate_lines(&mut r, &table, &given);
        estimates = serde_json::to_value(&table).expect("tables serialize");
    }

    if let Some(p) = &a.json {
        let mut inputs: Vec<&Path> = vec![&a.graph];
        inputs.extend(a.data.as_deref());
        inputs.extend(a.meta.as_deref());
        Outputs::new(&inputs).write(
            p,
            &to_json(&json!({
                "query": query_text(&q),
                "rule2": rule2,
                "backdoor_set": backdoor,
                "identified": res.is_identified(),
                "estimand": res.estimand.as_ref().map(|e| e.to_string()),
                "estimand_tree": res.estimand,
                "hedge": res.witness.as_ref().map(|h| json!({ "f": h.f, "f_prime": h.f_prime })),
                "estimates": estimates,
            })),
        )?;
    }
    Ok(r)
}

pub fn transport(a: TransportArgs) -> Result<String, CliError> {
    let mut notes = Vec::new();
    let source = causal_input(io::graph(&a.source)?, &mut notes)?;
    let target = causal_input(io::graph(&a.target)?, &mut notes)?;
    let sorted = |g: &MixedGraph| g.names().iter().cloned().collect::<BTreeSet<_>>();
    if sorted(&source) != sorted(&target) {
        return Err(CliError::Data("source and target graphs have different nodes".into()));
    }
    if to_text(&source) != to_text(&target) {
        notes.push("source and target graphs differ; the target graph is used as the shared structure".into());
    }
    let diagram = build_selection_diagram(&target, &a.s_nodes)?;
    let given = parse_given(&a.given);
    let query = CausalQuery::new(&a.treatment, &a.outcome, &names(&given))?;
    let relation = match a.relation {
        RelationArg::Causal => Relation::Causal,
        RelationArg::Statistical => Relation::Statistical,
    };
    let tq = TransportQuery {
        source,
        target,
        diagram,
        query,
        relation,
        available: Available {
            source_experiments: true,
            source_observational: true,
            target_observational: true,
        },
    };
    let q = &tq.query;

    let outcome_idx = tq.target.indices_of(&q.outcome)?;
    let mut r = String::new();
    influential_lines(&mut r, &influential(&tq.target, &outcome_idx));
    for n in &notes {
        writeln!(r, "note: {n}").unwrap();
    }
    let shown = match relation {
        Relation::Causal => query_text(q),
        Relation::Statistical => {
            let mut given = q.treatment.clone();
            given.extend(q.conditioning.iter().cloned());
            given.sort();
            Estimand::prob(q.outcome.clone(), given).to_string()
        }
    };
    writeln!(r, "query: {shown}").unwrap();
    let s_nodes: Vec<String> = tq.diagram.s_nodes().iter().map(|(s, v)| format!("{s} -> {v}")).collect();
    writeln!(r, "s-nodes: {}", if s_nodes.is_empty() { "none".to_string() } else { s_nodes.join(", ") }).unwrap();

    let trivial = trivially_transportable(&tq)?;
    let admissible = match (&trivial, relation) {
        (None, Relation::Causal) => s_admissible_adjustment(&tq)?,
        _ => None,
    };
    let (route, estimand) = match (&trivial, &admissible) {
        (Some(e), _) => {
            writeln!(r, "trivially transportable: yes").unwrap();
            writeln!(r, "estimand: {e}").unwrap();
            ("trivial", Some(e.clone()))
        }
        (None, Some((z, e))) => {
            writeln!(r, "trivially transportable: no").unwrap();
            writeln!(r, "s-admissible set: {{{}}}", z.join(",")).unwrap();
            writeln!(r, "estimand: {e}").unwrap();
            ("s_admissible", Some(e.clone()))
        }
        (None, None) => {
            writeln!(r, "trivially transportable: no").unwrap();
            writeln!(r, "not transportable by target observation or s-admissible adjustment").unwrap();
            ("none", None)
        }
    };

    let mut estimates = Value::Null;
    if let Some(e) = &estimand {
        let meta = a.meta.as_deref();
        let load = |p: &Option<std::path::PathBuf>| -> Result<Option<Dataset>, CliError> {
            p.as_ref()
                .map(|p| io::dataset(p, meta.expect("clap requires meta with data")))
                .transpose()
        };
        let target_data = load(&a.target_data)?;
        let source_data = match load(&a.source_data)? {
            Some(d) => Some(d.with_intervened(&q.treatment)?),
            None => None,
        };
        let worlds = e.worlds();
        let ready = (!worlds.contains(&World::Target) || target_data.is_some())
            && (!worlds.contains(&World::Experimental) || source_data.is_some());
        if ready && (target_data.is_some() || source_data.is_some()) {
            let table = estimation::estimate(
                e,
                &q.outcome,
                &Bindings {
                    source: None,
                    target: target_data.as_ref(),
                    experimental: source_data.as_ref(),
                },
            )?;
            estimate_lines(&mut r, &table, &given);
            estimates = serde_json::to_value(&table).expect("tables serialize");
        } else if target_data.is_some() || source_data.is_some() {
            writeln!(r, "note: the estimand needs data not supplied; skipping estimation").unwrap();
        }
    }

    if let Some(p) = &a.json {
        let mut inputs: Vec<&Path> = vec![&a.source, &a.target];
        inputs.extend(a.source_data.as_deref());
        inputs.extend(a.target_data.as_deref());
        inputs.extend(a.meta.as_deref());
        Outputs::new(&inputs).write(
            p,
            &to_json(&json!({
                "query": shown,
                "s_nodes": tq.diagram.s_nodes(),
                "route": route,
                "s_admissible_set": admissible.as_ref().map(|(z, _)| z),
                "estimand": estimand.as_ref().map(|e| e.to_string()),
                "estimand_tree": estimand,
                "estimates": estimates,
            })),
        )?;
    }
    Ok(r)
}

pub fn recover(a: RecoverArgs) -> Result<String, CliError> {
    let mut g = io::graph(&a.graph)?;
    g.set_role(&a.selection, NodeRole::SelectionVar)?;
    for s in g.nodes_with_role(NodeRole::SelectionVar) {
        if g.name(s) != a.selection {
            return Err(CliError::Data(format!(
                "graph marks `{}` as a selection node too; pass a graph with one",
                g.name(s)
            )));
        }
    }
    let report = recoverability_report(&g, &a.x, &a.y)?;
    let mut r = String::new();
    writeln!(r, "selection node: {}", a.selection).unwrap();
    let verdict = |b: bool| if b { "recoverable" } else { "not recoverable" };
    for (y, ok) in &report.given_all_options {
        writeln!(r, "P({y}|{}): {}", a.x.join(","), verdict(*ok)).unwrap();
    }
    if a.x.len() > 1 {
        for row in &report.rows {
            writeln!(r, "  P({}|{}): {}", row.perf, row.option, verdict(row.recoverable)).unwrap();
        }
    }
    if let Some(p) = &a.json {
        Outputs::new(&[&a.graph]).write(p, &to_json(&serde_json::to_value(&report).expect("serializes")))?;
    }
    Ok(r)
}

pub fn simulate(a: SimulateArgs) -> Result<String, CliError> {
    let mut spec = ScmSpec::parse(&io::read(&a.spec)?)?;
    let mut r = String::new();
    if spec.seed != a.seed {
        writeln!(r, "note: spec seed {} replaced by --seed {}", spec.seed, a.seed).unwrap();
    }
    spec.seed = a.seed;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let sel = match &a.selection {
        Some(p) => Some(SelectionMechanism::parse(&io::read(p)?)?),
        None => None,
    };
    let m = Scm::from_spec(&spec)?;
    let d = simulate_rows(&m, a.n, sel.as_ref(), a.seed)?;

    let mut inputs: Vec<&Path> = vec![&a.spec];
    inputs.extend(a.selection.as_deref());
    let outputs = Outputs::new(&inputs);
    let mut csv = Vec::new();
    d.to_csv(&mut csv)?;
    outputs.write(&a.out, &csv)?;
    let meta_path = a.meta.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".meta.toml");
        p.into()
    });
    outputs.write(&meta_path, d.metadata().to_toml().as_bytes())?;
    outputs.write(&a.truth, to_text(m.graph()).as_bytes())?;
    if let Some(p) = &a.scm {
        outputs.write(p, m.to_json().as_bytes())?;
    }

    let g = m.graph();
    writeln!(r, "simulated {} rows of {} variables (seed {})", d.n_rows(), d.n_vars(), a.seed).unwrap();
    writeln!(
        r,
        "options: {}, performance: {}, latent: {}",
        g.nodes_with_role(NodeRole::Option).len(),
        g.nodes_with_role(NodeRole::Performance).len(),
        g.nodes_with_role(NodeRole::Latent).len()
    )
    .unwrap();
    if sel.is_some() {
        writeln!(r, "selection: rows kept only when selected").unwrap();
    }
    writeln!(r, "true graph: {} edges", g.edges().len()).unwrap();
    Ok(r)
}

pub fn dsep(a: DsepArgs) -> Result<String, CliError> {
    let g = io::graph(&a.graph)?;
    let z: Vec<String> = a.given.iter().filter(|s| !s.trim().is_empty()).cloned().collect();
    let sep = separated(&g, &a.x, &a.y, &z)?;
    Ok(format!("separated: {sep}\n"))
}

fn summary_lines(r: &mut String, s: &ConditionalSummary) {
    match s {
        ConditionalSummary::Continuous {
            mean,
            variance,
            count,
            std_error,
        } => {
            writeln!(
                r,
                "mean {}  variance {}  std error {}  count {count}",
                fmt_num(*mean),
                fmt_num(*variance),
                fmt_num(*std_error)
            )
            .unwrap();
        }
        ConditionalSummary::Discrete {
            levels,
            probs,
            count,
            std_errors,
        } => {
            let cells: Vec<String> = levels
                .iter()
                .zip(probs.iter().zip(std_errors))
                .map(|(l, (p, se))| format!("{l}:{} (se {})", fmt_num(*p), fmt_num(*se)))
                .collect();
            writeln!(r, "{}  count {count}", cells.join(" ")).unwrap();
        }
    }
}

pub fn estimate(a: EstimateArgs) -> Result<String, CliError> {
    let d = io::dataset(&a.data, &a.meta)?;
    let given = parse_given(&a.given);
    check_given_levels(&d, &given)?;
    let mut r = String::new();
    let record;
    if a.treatment.is_empty() {
        let mut pairs = Vec::new();
        for (k, v) in &given {
            let v = v
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("--given `{k}` needs a level without --treatment")))?;
            pairs.push((k.as_str(), d.level_code(d.index_of(k)?, v)?));
        }
        let s = cond_summary_smoothed(&d, &a.outcome, &pairs, a.smoothing)?;
        let cond: Vec<String> = given.iter().map(|(k, v)| format!("{k}={}", v.as_deref().unwrap_or(""))).collect();
        writeln!(r, "P({}{}{})", a.outcome, if cond.is_empty() { "" } else { "|" }, cond.join(",")).unwrap();
        summary_lines(&mut r, &s);
        record = json!({ "outcome": a.outcome, "given": cond, "summary": s });
    } else {
        if a.smoothing != 0.0 {
            return Err(CliError::Usage("--smoothing applies to plain conditionals only".into()));
        }
        let q = CausalQuery::new(&a.treatment, std::slice::from_ref(&a.outcome), &names(&given))?;
        let rows = adjustment_estimate(&d, &q, &a.adjust)?;
        writeln!(r, "query: {}", query_text(&q)).unwrap();
        writeln!(r, "adjustment set: {{{}}}", a.adjust.join(",")).unwrap();
        let mut kept = Vec::new();
        for row in rows {
            let keep = given.iter().all(|(k, v)| match v {
                Some(v) => row.level.iter().all(|(n, l)| n != k || l == v),
                None => true,
            });
            if !keep {
                continue;
            }
            let at: Vec<String> = row.level.iter().map(|(n, l)| format!("{n}={l}")).collect();
            write!(r, "  {}  ", at.join(" ")).unwrap();
            summary_lines(&mut r, &row.summary);
            kept.push(row);
        }
        record = json!({ "query": query_text(&q), "adjustment_set": a.adjust, "levels": kept });
    }
    if let Some(p) = &a.json {
        Outputs::new(&[&a.data, &a.meta]).write(p, &to_json(&record))?;
    }
    Ok(r)
}

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use num_traits::Zero;
use serde::Deserialize;
use serde_json::{json, Value};

use spn_core::compilers::{self, Fplm, Fpssm};
use spn_core::inference::{self, MarginalQuery, Sampler};
use spn_core::rational::{self, Rational};
use spn_core::separation::{self, Partition};
use spn_core::spanning_tree::{self, Color, PartialAssignment, Strategy};
use spn_core::structure::{self, validity};
use spn_core::{dimacs, json as circuit_json, random, Circuit, Error, NodeKind};

use crate::report::{envelope, object, render, Format};
use crate::{Builtin, Cli, CircuitIn, Command, MachineKind, SptreeCommand, StrategyArg};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::AuditMismatch(_)) | CliError::Assertion(_) => 1,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })
        }
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|source| CliError::Io { path: "<stdin>".into(), source })?;
            Ok(s)
        }
    }
}

fn load_circuit(input: &CircuitIn) -> Result<Circuit> {
    Ok(circuit_json::from_json(&read_text(input.circuit.as_deref())?)?)
}

fn write_out(output: Option<&PathBuf>, text: &str) -> Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(p) if p.as_os_str() != "-" => {
            fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source })
        }
        _ => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

fn emit(format: Format, command: &str, config: Value, result: Value) -> Result<()> {
    write_out(None, &render(&envelope(command, config, result), format))
}

fn path_str(p: &Option<PathBuf>) -> Value {
    match p {
        Some(p) if p.as_os_str() != "-" => json!(p.display().to_string()),
        _ => json!("-"),
    }
}

fn parse_partition(text: &str, n: usize) -> Result<Partition> {
    let text = text.trim();
    if text == "first-half" {
        return Ok(Partition::first_half(n));
    }
    let list = text
        .strip_prefix("A=")
        .ok_or_else(|| CliError::Input(format!("partition {text:?} is neither `first-half` nor `A=i,j,...`")))?;
    let a = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::Input(format!("bad variable id {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition::new(n, &a)?)
}

/// A JSON value that is either a number or a rational literal string.
fn json_rational(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => Ok(rational::parse(s)?),
        Value::Number(n) => Ok(rational::parse(&n.to_string())?),
        other => Err(CliError::Input(format!("expected a rational, got {other}"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryDoc {
    #[serde(default)]
    integrate: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    fixed: BTreeMap<String, Value>,
}

fn var_key(k: &str) -> Result<usize> {
    k.parse().map_err(|_| CliError::Input(format!("query key {k:?} is not a variable id")))
}

fn parse_query(text: &str) -> Result<MarginalQuery> {
    let doc: QueryDoc = serde_json::from_str(text).map_err(|e| Error::BadQuery(e.to_string()))?;
    let mut q = MarginalQuery::default();
    for (k, vs) in &doc.integrate {
        q.integrate_over.insert(var_key(k)?, vs.iter().map(json_rational).collect::<Result<_>>()?);
    }
    for (k, v) in &doc.fixed {
        q.fixed.insert(var_key(k)?, json_rational(v)?);
    }
    Ok(q)
}

fn parse_coloring(text: &str) -> Result<Vec<Color>> {
    // either ["r","b",...] or a compact string "rbb..."
    if let Ok(colors) = serde_json::from_str::<Vec<Color>>(text) {
        return Ok(colors);
    }
    let compact: String = match serde_json::from_str::<String>(text) {
        Ok(s) => s,
        Err(_) => text.trim().to_string(),
    };
    compact
        .chars()
        .map(|c| match c {
            'r' | 'R' => Ok(Color::Red),
            'b' | 'B' => Ok(Color::Blue),
            _ => Err(CliError::Input(format!("coloring character {c:?} is not r or b"))),
        })
        .collect()
}

fn coloring_string(c: &[Color]) -> String {
    c.iter().map(|c| if *c == Color::Red { 'r' } else { 'b' }).collect()
}

fn bits(x: &[bool]) -> String {
    x.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    match cli.command {
        Command::Check { input, audit } => check(format, &input, audit),
        Command::Eval { input, values } => {
            let c = load_circuit(&input)?;
            if values.len() != c.variables().len() {
                return Err(Error::WrongLength { got: values.len(), expected: c.variables().len() }.into());
            }
            let assignment = values
                .iter()
                .enumerate()
                .map(|(v, s)| Ok((v, rational::parse(s)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let value = c.evaluate(&assignment)?;
            emit(
                format,
                "eval",
                json!({ "circuit": path_str(&input.circuit), "values": values }),
                json!({ "value": rational::format(&value) }),
            )
        }
        Command::Marginalize { input, query, force } => {
            let c = load_circuit(&input)?;
            let q = parse_query(&read_text(Some(&query))?)?;
            let value = inference::marginalize(&c, &q, force)?;
            emit(
                format,
                "marginalize",
                json!({ "circuit": path_str(&input.circuit), "query": query.display().to_string(), "force": force }),
                json!({ "value": rational::format(&value) }),
            )
        }
        Command::Partition { input } => {
            let c = load_circuit(&input)?;
            let z = inference::partition_function(&c)?;
            emit(
                format,
                "partition",
                json!({ "circuit": path_str(&input.circuit) }),
                json!({ "partition_function": rational::format(&z) }),
            )
        }
        Command::Normalize { input, output } => {
            let c = normalize(&load_circuit(&input)?)?;
            write_out(output.as_ref(), &circuit_json::to_json(&c))
        }
        Command::Sample { input, count, seed } => {
            let c = load_circuit(&input)?;
            let c = if inference::is_weight_normalized(&c) { c } else { normalize(&c)? };
            let sampler = Sampler::new(c)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = String::new();
            for _ in 0..count {
                let s = sampler.sample(&mut rng)?;
                out.push_str(&s.iter().map(rational::format).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
            write_out(None, &out)
        }
        Command::Compile { kind, machine, output } => {
            let text = read_text(Some(&machine))?;
            let c = match kind {
                MachineKind::Fpssm => compilers::compile_fpssm(&Fpssm::from_json(&text)?)?,
                MachineKind::Fplm => compilers::fplm_to_spn(&Fplm::from_json(&text)?)?,
            };
            write_out(output.as_ref(), &circuit_json::to_json(&c))
        }
        Command::Builtin { which, n, output } => {
            if n == 0 {
                return Err(CliError::Input("--n must be positive".into()));
            }
            let c = match which {
                Builtin::Parity => compilers::compile_fpssm(&compilers::parity_machine(n))?,
                Builtin::Majority => compilers::compile_fpssm(&compilers::majority_machine(n))?,
                Builtin::CountOnes => compilers::compile_fpssm(&compilers::count_ones_machine(n))?,
                Builtin::Equal => compilers::build_equal(n)?,
            };
            write_out(output.as_ref(), &circuit_json::to_json(&c))
        }
        Command::Rank { input, partition } => {
            let c = load_circuit(&input)?;
            let p = parse_partition(&partition, c.variables().len())?;
            let m = separation::circuit_comm_matrix(&c, &p)?;
            let rank = spn_core::linalg::exact_rank(&m);
            emit(
                format,
                "rank",
                json!({ "circuit": path_str(&input.circuit), "partition": partition }),
                json!({ "partition": p, "rows": m.rows(), "cols": m.cols(), "rank": rank }),
            )
        }
        Command::Depth3Report { input, partition } => {
            let c = load_circuit(&input)?;
            let p = parse_partition(&partition, c.variables().len())?;
            let m = separation::circuit_comm_matrix(&c, &p)?;
            let report = separation::depth3_report(&m, &p);
            emit(
                format,
                "depth3-report",
                json!({ "circuit": path_str(&input.circuit), "partition": partition }),
                serde_json::to_value(report).expect("report serializes"),
            )
        }
        Command::Decompose { input, output } => {
            let c = load_circuit(&input)?;
            let d = separation::decompose(&c)?;
            let violations = d.invariant_violations();
            if !violations.is_empty() {
                return Err(CliError::Assertion(violations.join("; ")));
            }
            let text = serde_json::to_string_pretty(&d.to_json()).expect("decomposition serializes");
            write_out(output.as_ref(), &text)
        }
        Command::Cnf2spn { dimacs: path, output } => {
            let cnf = dimacs::parse_dimacs(&read_text(path.as_deref())?)?;
            let c = structure::cnf_to_extended_spn(cnf.num_vars, &cnf.clauses)?;
            write_out(output.as_ref(), &circuit_json::to_json(&c))
        }
        Command::Sptree { command } => sptree(format, command),
    }
}

/// Leaves whose table is identically zero become zero constants, then zero weights
/// and constants are pruned. The function is unchanged at every point, but no node is
/// left with a zero normalizing constant.
fn normalize(c: &Circuit) -> Result<Circuit> {
    let (variables, leaf_functions, nodes, root, extended) = c.clone().into_parts();
    let nodes = nodes
        .into_iter()
        .map(|mut n| {
            if let NodeKind::Leaf(l) = n.kind {
                if leaf_functions[l].table.iter().all(|v| v.is_zero()) {
                    n.kind = NodeKind::Constant(Rational::zero());
                }
            }
            n
        })
        .collect();
    let zeroed = Circuit::from_parts(variables, leaf_functions, nodes, root, extended)?;
    let pruned = drop_unused_leaves(structure::prune_degenerate(&zeroed)?)?;
    Ok(inference::normalize_weights(&pruned)?)
}

/// Removes leaf functions no node references and renumbers the rest.
fn drop_unused_leaves(c: Circuit) -> Result<Circuit> {
    let (variables, leaf_functions, mut nodes, root, extended) = c.into_parts();
    let mut used = vec![false; leaf_functions.len()];
    for n in &nodes {
        if let NodeKind::Leaf(l) = n.kind {
            used[l] = true;
        }
    }
    let mut kept = Vec::new();
    let mut renumber = vec![usize::MAX; leaf_functions.len()];
    for (mut f, used) in leaf_functions.into_iter().zip(used) {
        if used {
            renumber[f.id] = kept.len();
            f.id = kept.len();
            kept.push(f);
        }
    }
    for n in &mut nodes {
        if let NodeKind::Leaf(l) = &mut n.kind {
            *l = renumber[*l];
        }
    }
    Ok(Circuit::from_parts(variables, kept, nodes, root, extended)?)
}

fn check(format: Format, input: &CircuitIn, audit: bool) -> Result<()> {
    let c = load_circuit(input)?;
    let brute = match validity::find_validity_violation(&c) {
        Ok(v) => json!({ "valid": v.is_none(), "violation": v }),
        Err(Error::TooLarge(why)) => json!({ "valid": Value::Null, "skipped": why }),
        Err(e) => return Err(e.into()),
    };
    let mut result = object([
        ("extended", json!(c.is_extended())),
        ("metrics", serde_json::to_value(c.metrics()).expect("metrics serialize")),
    ]);
    if !c.is_extended() {
        let report = structure::analyze(&c, audit)?;
        let map = result.as_object_mut().expect("object");
        map.insert("structure".into(), serde_json::to_value(report).expect("report serializes"));
    }
    result.as_object_mut().expect("object").insert("brute_force".into(), brute);
    emit(format, "check", json!({ "circuit": path_str(&input.circuit), "audit": audit }), result)
}

fn load_or_sample_coloring(m: usize, coloring: &Option<PathBuf>, seed: Option<u64>) -> Result<Vec<Color>> {
    match (coloring, seed) {
        (Some(p), _) => parse_coloring(&read_text(Some(p))?),
        (None, Some(s)) => Ok(random::random_balanced_coloring(&mut ChaCha8Rng::seed_from_u64(s), m)?),
        (None, None) => Err(CliError::Input("give --coloring or --seed".into())),
    }
}

fn sptree(format: Format, command: SptreeCommand) -> Result<()> {
    match command {
        SptreeCommand::Count { m, present, absent } => {
            let mut partial = PartialAssignment::new();
            for &e in &present {
                partial.insert(e, true);
            }
            for &e in &absent {
                if partial.insert(e, false).is_some() {
                    return Err(CliError::Input(format!("edge {e} is both present and absent")));
                }
            }
            let count = spanning_tree::count_consistent_trees(m, &partial)?;
            let total = spanning_tree::cayley(m)?;
            let marginal = spanning_tree::marginal(m, &partial)?;
            emit(
                format,
                "sptree count",
                json!({ "m": m, "present": present, "absent": absent }),
                json!({
                    "count": count.to_string(),
                    "total": total.to_string(),
                    "marginal": rational::format(&marginal),
                }),
            )
        }
        SptreeCommand::Sample { m, count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trees = (0..count)
                .map(|_| spanning_tree::sample_tree(m, &mut rng).map(|x| bits(&x)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            emit(format, "sptree sample", json!({ "m": m, "count": count, "seed": seed }), json!({ "trees": trees }))
        }
        SptreeCommand::Triangles { m, coloring, seed } => {
            let colors = load_or_sample_coloring(m, &coloring, seed)?;
            let counts = spanning_tree::count_dichromatic_triangles(m, &colors)?;
            let mut per_color = serde_json::Map::new();
            for (name, color) in [("red", Color::Red), ("blue", Color::Blue)] {
                let x: Vec<bool> = colors.iter().map(|c| *c == color).collect();
                let e = x.iter().filter(|&&b| b).count() as u64;
                let t = spanning_tree::count_triangles(m, &x)?;
                per_color.insert(
                    name.into(),
                    json!({
                        "edges": e,
                        "triangles": t,
                        "bound": spanning_tree::fisher_bound(e),
                        "within_bound": spanning_tree::fisher_holds(t, e),
                    }),
                );
            }
            emit(
                format,
                "sptree triangles",
                json!({ "m": m, "coloring": coloring.as_ref().map(|p| p.display().to_string()), "seed": seed }),
                json!({
                    "coloring": coloring_string(&colors),
                    "counts": counts,
                    "per_color": per_color,
                }),
            )
        }
        SptreeCommand::FractionExperiment { m, samples, seed, coloring, strategy } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let colors = match &coloring {
                Some(p) => parse_coloring(&read_text(Some(p))?)?,
                None => random::random_balanced_coloring(&mut rng, m)?,
            };
            let strategy = match strategy {
                StrategyArg::NotBoth => Strategy::NotBoth,
                StrategyArg::NotC => Strategy::NotC,
            };
            let report = spanning_tree::constraint_fraction_experiment(m, &colors, strategy, samples, &mut rng)?;
            emit(
                format,
                "sptree fraction-experiment",
                json!({
                    "m": m,
                    "samples": samples,
                    "seed": seed,
                    "coloring": coloring.as_ref().map(|p| p.display().to_string()),
                    "strategy": strategy,
                }),
                json!({ "coloring": coloring_string(&colors), "report": report }),
            )
        }
    }
}

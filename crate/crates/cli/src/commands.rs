use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use cutset_bounds::experiments::{
    delta_sweep, estimate_improvement_probability, estimate_line_gain_probability, improvement_sweep, ImprovementRow,
    LINE_GAIN_PARTS, LINE_GAIN_PROBABILITY,
};
use cutset_bounds::oracle::{random_system, SystemDocument};
use cutset_bounds::search::format_sig9;
use cutset_bounds::{
    bound_all_levels, condition1, condition2_any, count_orderings_condition1, generate_conditional_uniform,
    generate_delta, greedy_ordering, max_level, optimal_bound, AtomSystem, BoundTable, ConditionWitness, DeltaModel,
    MatrixDocument, Ordering, ProbabilityMatrix, Tolerance, Violation,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{BoundArgs, CheckArgs, Cli, Command, ExperimentCommand, Format, GenerateCommand, OracleArgs, SearchArgs};

const USAGE: u8 = 1;
const INVALID: u8 = 2;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: USAGE,
        error: error.into(),
    }
}

fn invalid(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: INVALID,
        error: error.into(),
    }
}

pub fn run(cli: Cli) -> Outcome<ExitCode> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage(anyhow!("--workers must be at least 1")));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(usage)?;
    let out = Output {
        path: cli.output.as_deref(),
        format: cli.format,
    };
    pool.install(|| dispatch(cli.command, &out))
}

struct Output<'a> {
    path: Option<&'a Path>,
    format: Format,
}

impl Output<'_> {
    fn write_bytes(&self, bytes: &[u8]) -> Outcome<()> {
        match self.path {
            Some(p) => fs::write(p, bytes)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(usage),
            None => io::stdout()
                .lock()
                .write_all(bytes)
                .context("writing stdout")
                .map_err(usage),
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Outcome<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(usage)?;
        text.push('\n');
        self.write_bytes(text.as_bytes())
    }

    fn csv(&self, header: &[String], rows: &[Vec<String>]) -> Outcome<()> {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(text.as_bytes())
    }

    fn require_json(&self, command: &str) -> Outcome<()> {
        match self.format {
            Format::Json => Ok(()),
            Format::Csv => Err(usage(anyhow!("{command} has no CSV output"))),
        }
    }
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn load_document(path: &Path) -> Outcome<MatrixDocument> {
    serde_json::from_str(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(invalid)
}

fn load_matrix(path: &Path) -> Outcome<ProbabilityMatrix> {
    load_document(path)?
        .into_matrix()
        .with_context(|| format!("loading {}", path.display()))
        .map_err(invalid)
}

fn parse_ordering(text: Option<&str>, n: usize) -> Outcome<Ordering> {
    let ordering = match text {
        Some(t) => t.parse::<Ordering>().map_err(usage)?,
        None => Ordering::identity(n),
    };
    if ordering.len() != n {
        return Err(usage(anyhow!(
            "ordering has {} entries, matrix has {n} events",
            ordering.len()
        )));
    }
    Ok(ordering)
}

fn resolve_max_level(requested: Option<usize>, n: usize) -> Outcome<usize> {
    let max = max_level(n);
    match requested {
        None => Ok(max),
        Some(m) if (1..=max).contains(&m) => Ok(m),
        Some(m) => Err(usage(anyhow!("level {m} outside 1..={max}"))),
    }
}

fn violation_json(v: &Violation) -> Value {
    let message = v.to_string();
    match *v {
        Violation::Asymmetric { i, j, upper, lower } => {
            json!({"kind": "asymmetric", "i": i + 1, "j": j + 1, "upper": upper, "lower": lower, "message": message})
        }
        Violation::DiagonalOutOfRange { i, value } => {
            json!({"kind": "diagonal_out_of_range", "i": i + 1, "value": value, "message": message})
        }
        Violation::Frechet { i, j, value, limit } => {
            json!({"kind": "frechet", "i": i + 1, "j": j + 1, "value": value, "limit": limit, "message": message})
        }
    }
}

fn witness_json(w: &ConditionWitness, ordering: &Ordering) -> Value {
    let event = |pos: usize| ordering.as_slice()[pos] + 1;
    match *w {
        ConditionWitness::Triplet { a, b, c } => json!({
            "kind": "triplet",
            "positions": [a + 1, b + 1, c + 1],
            "events": [event(a), event(b), event(c)],
        }),
        ConditionWitness::Line { level, line } => json!({
            "kind": "line",
            "level": level,
            "position": line + 1,
            "event": event(line),
        }),
    }
}

fn dispatch(command: Command, out: &Output) -> Outcome<ExitCode> {
    match command {
        Command::Validate(args) => validate(&args, out),
        Command::Bound(args) => bound(args, out).map(|_| ExitCode::SUCCESS),
        Command::Search(args) => search(args, out).map(|_| ExitCode::SUCCESS),
        Command::Check(args) => check(args, out).map(|_| ExitCode::SUCCESS),
        Command::Generate(cmd) => generate(cmd, out).map(|_| ExitCode::SUCCESS),
        Command::Oracle(args) => oracle(args, out).map(|_| ExitCode::SUCCESS),
        Command::Experiment(cmd) => experiment(cmd, out).map(|_| ExitCode::SUCCESS),
    }
}

fn validate(input: &crate::InputArgs, out: &Output) -> Outcome<ExitCode> {
    out.require_json("validate")?;
    let matrix = load_document(&input.input)?
        .into_matrix_unvalidated()
        .map_err(invalid)?;
    let report = matrix.validate();
    out.json(&json!({
        "n": matrix.n(),
        "valid": report.is_valid(),
        "violations": report.violations.iter().map(violation_json).collect::<Vec<_>>(),
    }))?;
    Ok(if report.is_valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(INVALID)
    })
}

fn bound(args: BoundArgs, out: &Output) -> Outcome<()> {
    let matrix = load_matrix(&args.input.input)?;
    let n = matrix.n();
    let ordering = if args.greedy {
        greedy_ordering(&matrix)
    } else {
        parse_ordering(args.ordering.as_deref(), n)?
    };
    let top = resolve_max_level(args.level.or(args.max_level), n)?;
    let all = bound_all_levels(&matrix, &ordering, top).map_err(usage)?;
    let levels: Vec<usize> = match args.level {
        Some(m) => vec![m],
        None => (1..=top).collect(),
    };
    let values: Vec<f64> = levels.iter().map(|&m| all.level(m)).collect();
    match out.format {
        Format::Json => out.json(&json!({"ordering": ordering, "levels": levels, "values": values})),
        Format::Csv => {
            let mut header = vec!["ordering".to_string()];
            header.extend(levels.iter().map(|m| format!("B{m}")));
            let mut row = vec![ordering.to_string()];
            row.extend(values.iter().map(|&v| format_sig9(v)));
            out.csv(&header, &[row])
        }
    }
}

fn search(args: SearchArgs, out: &Output) -> Outcome<()> {
    let matrix = load_matrix(&args.input.input)?;
    let top = resolve_max_level(args.max_level, matrix.n())?;
    let table = BoundTable::compute(&matrix, top, args.cap).map_err(usage)?;
    match out.format {
        Format::Json => out.json(&table.summaries(Tolerance::relative(args.tolerance), args.argmin_cap)),
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(usage)?;
            out.write_bytes(&buf)
        }
    }
}

fn check(args: CheckArgs, out: &Output) -> Outcome<()> {
    out.require_json("check")?;
    let matrix = load_matrix(&args.input.input)?;
    let n = matrix.n();
    let ordering = parse_ordering(args.ordering.as_deref(), n)?;
    let triplet = condition1(&matrix, &ordering).map_err(usage)?;
    let mut lines = Vec::new();
    for level in 1..max_level(n) {
        let w = condition2_any(&matrix, &ordering, level).map_err(usage)?;
        lines.push(json!({"from": level, "to": level + 1, "witness": w.map(|w| witness_json(&w, &ordering))}));
    }
    let mut doc = json!({
        "ordering": ordering,
        "triplet": triplet.map(|w| witness_json(&w, &ordering)),
        "lines": lines,
    });
    if let Some(c) = args.count_column {
        let count = count_orderings_condition1(n, c).map_err(usage)?;
        doc["orderings_with_triplet_in_column"] = json!({"column": c, "count": count.to_string()});
    }
    out.json(&doc)
}

fn generate(cmd: GenerateCommand, out: &Output) -> Outcome<()> {
    out.require_json("generate")?;
    let matrix = match cmd {
        GenerateCommand::Delta { first_order, delta } => {
            generate_delta(&DeltaModel { first_order, delta }).map_err(usage)?
        }
        GenerateCommand::Uniform { n, seed } => generate_conditional_uniform(n, seed).map_err(usage)?,
    };
    out.json(&matrix.to_document())
}

fn oracle(args: OracleArgs, out: &Output) -> Outcome<()> {
    out.require_json("oracle")?;
    let system: AtomSystem = match (&args.input, args.n_el, args.n) {
        (Some(path), _, _) => {
            let doc: SystemDocument = serde_json::from_str(&read(path)?)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(invalid)?;
            doc.into_system().map_err(invalid)?
        }
        (None, Some(n_el), Some(n)) => random_system(n_el, n, args.seed).map_err(usage)?,
        _ => return Err(usage(anyhow!("give --input or both --n-el and --n"))),
    };
    let union = system.atom_union_probability().map_err(invalid)?;
    let matrix = system.project_second_order();
    let mut doc = json!({
        "n_el": system.n_el(),
        "n": system.n(),
        "union_probability": union,
        "matrix": matrix.to_document(),
    });
    if args.input.is_none() {
        doc["system"] = serde_json::to_value(system.to_document()).map_err(usage)?;
    }
    if let Some(top) = args.max_level {
        let top = resolve_max_level(Some(top), system.n())?;
        let best = (1..=top)
            .map(|m| optimal_bound(&matrix, m).map(|(v, o)| json!({"level": m, "bound": v, "ordering": o})))
            .collect::<cutset_bounds::Result<Vec<_>>>()
            .map_err(usage)?;
        doc["best_bounds"] = Value::Array(best);
    }
    out.json(&doc)
}

#[derive(Serialize)]
struct ImprovementDoc {
    #[serde(flatten)]
    row: ImprovementRow,
    seed: u64,
}

fn improvement_csv(rows: &[ImprovementRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["n", "m", "m1", "trials", "estimate", "std_error", "lower_bound"]
        .map(String::from)
        .to_vec();
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.pair[0].to_string(),
                r.pair[1].to_string(),
                r.trials.to_string(),
                format_sig9(r.estimate),
                format_sig9(r.std_error),
                format_sig9(r.lower_bound),
            ]
        })
        .collect();
    (header, body)
}

fn experiment(cmd: ExperimentCommand, out: &Output) -> Outcome<()> {
    match cmd {
        ExperimentCommand::Ti { trials, seed } => {
            out.require_json("experiment ti")?;
            let e = estimate_line_gain_probability(trials, seed).map_err(usage)?;
            let parts: Vec<Value> = e
                .parts
                .iter()
                .zip(LINE_GAIN_PARTS)
                .map(|(p, target)| json!({"estimate": p.estimate, "std_error": p.std_error, "exact": target}))
                .collect();
            out.json(&json!({
                "trials": trials,
                "seed": seed,
                "estimate": e.total.estimate,
                "std_error": e.total.std_error,
                "exact": LINE_GAIN_PROBABILITY,
                "parts": parts,
            }))
        }
        ExperimentCommand::Improvement { n, m, trials, seed } => {
            let e = estimate_improvement_probability(n, m, trials, seed).map_err(usage)?;
            let row = ImprovementRow::new(n, m, &e);
            match out.format {
                Format::Json => out.json(&ImprovementDoc { row, seed }),
                Format::Csv => {
                    let (h, b) = improvement_csv(&[row]);
                    out.csv(&h, &b)
                }
            }
        }
        ExperimentCommand::Sweep { ns, m, trials, seed } => {
            let rows = improvement_sweep(&ns, m, trials, seed).map_err(usage)?;
            match out.format {
                Format::Json => out.json(
                    &rows
                        .into_iter()
                        .map(|row| ImprovementDoc { row, seed })
                        .collect::<Vec<_>>(),
                ),
                Format::Csv => {
                    let (h, b) = improvement_csv(&rows);
                    out.csv(&h, &b)
                }
            }
        }
        ExperimentCommand::Delta {
            first_order,
            deltas,
            max_level: top,
        } => {
            let top = resolve_max_level(top, first_order.len())?;
            let entries = delta_sweep(&first_order, &deltas, top).map_err(usage)?;
            match out.format {
                Format::Json => out.json(&entries),
                Format::Csv => {
                    let mut header = vec!["delta".to_string()];
                    header.extend((1..=top).map(|m| format!("min_B{m}")));
                    header.extend((1..=top).map(|m| format!("max_B{m}")));
                    let pairs: Vec<(usize, usize)> =
                        (1..=top).flat_map(|a| ((a + 1)..=top).map(move |b| (a, b))).collect();
                    header.extend(pairs.iter().map(|(a, b)| format!("B{b}_lt_B{a}")));
                    let rows: Vec<Vec<String>> = entries
                        .iter()
                        .map(|e| {
                            let mut row = vec![e.delta.to_string()];
                            row.extend(e.summaries.iter().map(|s| format_sig9(s.min)));
                            row.extend(e.summaries.iter().map(|s| format_sig9(s.max)));
                            row.extend(pairs.iter().map(|&(a, b)| e.improvement(a, b).unwrap_or(0).to_string()));
                            row
                        })
                        .collect();
                    out.csv(&header, &rows)
                }
            }
        }
    }
}

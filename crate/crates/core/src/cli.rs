//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::builtin;
use crate::dsl::{parse_dist, parse_graph, parse_problem, ProblemSpec};
use crate::error::{Error, Result};
use crate::estimate::{plug_in, read_csv, Dataset, EmptyAsZero, EmptyStratumPolicy, TableOracle};
use crate::identify::{search, SearchBudget, SearchOptions, SearchOutcome, SearchStatus};
use crate::scmsim::{parse_scenarios, run_scenarios, DiscreteScm, Scm};
use crate::symexpr::{all_assignments, parse_latex, render, Assignment, DistOracle, Expr, Style};
use crate::trapdoor;
use crate::var::{validate_name, Kinds, VertexKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;
pub const EXIT_ESTIMATION: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "causalfuse",
    version,
    about = "Identify and estimate causal effects from multiple data sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive an identifying functional for the query.
    Identify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value = "text")]
        style: Style,
        /// Write the derivation to this file (JSON when it ends in `.json`).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Find trapdoor variables of the derived (or a given) functional.
    Trapdoors {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Analyze this LaTeX functional instead of deriving one.
        #[arg(long)]
        formula: Option<String>,
        /// Seed of the random exact model used for the independence check.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = trapdoor::DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Plug-in estimate of the derived functional from CSV data.
    Estimate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// `TERM@PATH`: a CSV file and the distribution it samples,
        /// e.g. `P(Z1,Z2,Z3,X)@survey.csv`.
        #[arg(long = "dataset", required = true)]
        datasets: Vec<String>,
        /// `VAR=VALUE` for a trapdoor variable.
        #[arg(long = "trapdoor")]
        trapdoors: Vec<String>,
        /// `VAR=VALUE` for a query variable; unset query variables are
        /// enumerated.
        #[arg(long = "target")]
        targets: Vec<String>,
        /// Pseudo-count added to every cell.
        #[arg(long, default_value_t = 0.0)]
        smoothing: f64,
        /// `fail` or `zero`.
        #[arg(long, default_value = "fail")]
        empty_strata: EmptyStratumPolicy,
    },
    /// Repeated-sampling study of the therapy-trial estimator.
    Simulate {
        /// TOML scenario file.
        #[arg(long)]
        scenarios: PathBuf,
        /// Results CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Drop replications that hit an empty stratum and report how many.
        #[arg(long)]
        skip_degenerate: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// A problem given as a file, a bundled example, or separate flags.
#[derive(Args, Debug, Default)]
pub struct ProblemArgs {
    /// Problem file with graph, data and query blocks.
    pub problem: Option<PathBuf>,
    /// Bundled example by name.
    #[arg(long, conflicts_with = "problem")]
    pub example: Option<String>,
    /// Edge-list graph file.
    #[arg(long, conflicts_with_all = ["problem", "example"])]
    pub graph: Option<PathBuf>,
    /// Input distribution, repeatable.
    #[arg(long = "data", requires = "graph")]
    pub data: Vec<String>,
    #[arg(long, requires = "graph")]
    pub query: Option<String>,
    /// Comma-separated transportability vertices.
    #[arg(long, requires = "graph")]
    pub transportability: Option<String>,
    /// Comma-separated selection vertices.
    #[arg(long, requires = "graph")]
    pub selection: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct SearchArgs {
    #[arg(long, default_value_t = SearchBudget::default().max_expressions)]
    pub budget_exprs: usize,
    #[arg(long, default_value_t = SearchBudget::default().max_depth)]
    pub budget_depth: usize,
    /// Seconds.
    #[arg(long, default_value_t = SearchBudget::default().time_limit)]
    pub time_limit: f64,
    #[arg(long)]
    pub heuristic: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl SearchArgs {
    fn options(&self) -> SearchOptions {
        SearchOptions {
            budget: SearchBudget {
                max_expressions: self.budget_exprs,
                max_depth: self.budget_depth,
                time_limit: self.time_limit,
            },
            heuristic: self.heuristic,
            threads: self.threads,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl ProblemArgs {
    pub fn load(&self) -> Result<ProblemSpec> {
        if let Some(p) = &self.problem {
            return parse_problem(&read(p)?);
        }
        if let Some(name) = &self.example {
            let names: Vec<&str> = builtin::EXAMPLES.iter().map(|e| e.name).collect();
            return builtin::example(name)
                .map(|e| e.spec())
                .ok_or_else(|| Error::input(format!("unknown example `{name}`; available: {}", names.join(", "))));
        }
        let Some(graph) = &self.graph else {
            return Err(Error::input(
                "give a problem file, --example, or --graph with --data and --query",
            ));
        };
        let mut kinds = Kinds::new();
        for (list, kind) in [
            (&self.transportability, VertexKind::Transportability),
            (&self.selection, VertexKind::Selection),
        ] {
            for name in list
                .iter()
                .flat_map(|l| l.split(','))
                .map(str::trim)
                .filter(|n| !n.is_empty())
            {
                validate_name(name)?;
                kinds.insert(name.to_string(), kind);
            }
        }
        let graph = parse_graph(&read(graph)?, &kinds)?;
        let inputs = self
            .data
            .iter()
            .map(|d| parse_dist(d, &kinds))
            .collect::<Result<Vec<_>>>()?;
        let query = parse_dist(
            self.query
                .as_deref()
                .ok_or_else(|| Error::input("--query is required with --graph"))?,
            &kinds,
        )?;
        // Reuse the file-format validation.
        let mut text = String::new();
        for (n, k) in &kinds {
            let label = if *k == VertexKind::Selection {
                "selection"
            } else {
                "transportability"
            };
            text.push_str(&format!("{label}: {n}\n"));
        }
        text.push_str("graph:\n");
        text.push_str(&crate::dsl::render_graph(&graph));
        text.push_str("data:\n");
        for t in &inputs {
            text.push_str(&format!("{t}\n"));
        }
        text.push_str(&format!("query: {query}\n"));
        parse_problem(&text)
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Input(_) | Error::Parse { .. } | Error::Validation(_) | Error::Structural(_) => EXIT_INPUT,
        Error::ZeroDenominator { .. } | Error::MissingInput(_) | Error::EmptyStratum { .. } | Error::Generation(_) => {
            EXIT_ESTIMATION
        }
    }
}

fn parse_pairs(items: &[String]) -> Result<Assignment> {
    let mut a = Assignment::new();
    for item in items {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::input(format!("expected VAR=VALUE, got `{item}`")))?;
        let k = k.trim();
        validate_name(k)?;
        let v: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::input(format!("`{item}`: value must be a nonnegative integer")))?;
        if a.set(k, v).is_some() {
            return Err(Error::input(format!("`{k}` is assigned twice")));
        }
    }
    Ok(a)
}

enum Outcome {
    Done,
    Unknown,
}

fn derive_or_unknown(p: &ProblemSpec, s: &SearchArgs, err: &mut dyn Write) -> Result<Option<(SearchOutcome, Expr)>> {
    let outcome = search(&p.graph, &p.inputs, &p.query, &s.options())?;
    info!(
        "search {:?}: {} expressions, depth {}, {:.3}s",
        outcome.status, outcome.expressions, outcome.depth, outcome.elapsed_secs
    );
    match (&outcome.status, &outcome.derivation) {
        (SearchStatus::Found, Some(d)) => {
            let e = d.result.canonicalize();
            Ok(Some((outcome, e)))
        }
        (status, _) => {
            let why = match status {
                SearchStatus::BudgetExhausted => "the search budget ran out",
                _ => "every reachable distribution was generated",
            };
            let _ = writeln!(
                err,
                "{} was not derived after {} expressions ({why}); this does not prove it unidentifiable",
                p.query, outcome.expressions
            );
            Ok(None)
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Identify {
            problem,
            search,
            style,
            trace,
        } => {
            let p = problem.load()?;
            let Some((outcome, e)) = derive_or_unknown(&p, &search, err)? else {
                return Ok(Outcome::Unknown);
            };
            if let Some(path) = trace {
                let d = outcome.derivation.as_ref().expect("found");
                let body = if path.extension().is_some_and(|x| x == "json") {
                    d.to_json()
                } else {
                    d.trace()
                };
                fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            writeln!(out, "{}", render(&e, style))?;
        }
        Command::Trapdoors {
            problem,
            search,
            formula,
            seed,
            tolerance,
        } => {
            let p = problem.load()?;
            let e = match formula {
                Some(f) => parse_latex(&f, &p.kinds)?,
                None => match derive_or_unknown(&p, &search, err)? {
                    Some((_, e)) => e,
                    None => return Ok(Outcome::Unknown),
                },
            };
            let oracle = DiscreteScm::random(&p.graph, seed)?;
            let report = trapdoor::analyze(
                &p.graph,
                &p.inputs,
                &p.query,
                &e,
                &oracle,
                tolerance,
                &search.options().budget,
            )?;
            writeln!(out, "{}", report.to_json())?;
        }
        Command::Estimate {
            problem,
            search,
            datasets,
            trapdoors,
            targets,
            smoothing,
            empty_strata,
        } => {
            let p = problem.load()?;
            let Some((_, e)) = derive_or_unknown(&p, &search, err)? else {
                return Ok(Outcome::Unknown);
            };
            let data = load_datasets(&datasets, &p)?;
            let oracle = TableOracle::with_smoothing(&data, smoothing);
            let trapdoors = parse_pairs(&trapdoors)?;
            let fixed = parse_pairs(&targets)?;
            writeln!(out, "# {} = {}", p.query, render(&e, Style::Text))?;
            let mut open = Vec::new();
            for v in p.query.variables() {
                if v.is_regime() || fixed.get(&v.name).is_some() {
                    continue;
                }
                let k = oracle
                    .cardinality(&v)
                    .ok_or_else(|| Error::MissingInput(format!("no dataset has column `{}`", v.name)))?;
                open.push((v.name.clone(), k));
            }
            for mut a in all_assignments(&open) {
                a.extend(&fixed);
                let est = match empty_strata {
                    EmptyStratumPolicy::Zero => plug_in(&e, &EmptyAsZero(&oracle), &trapdoors, &a)?,
                    _ => plug_in(&e, &oracle, &trapdoors, &a)?,
                };
                write!(out, "{a}\t{:.6}", est.value)?;
                if est.diagnostics.zero_over_zero > 0 {
                    write!(out, "\t(0/0 read as 0 in {} quotients)", est.diagnostics.zero_over_zero)?;
                }
                writeln!(out)?;
            }
        }
        Command::Simulate {
            scenarios,
            out: out_path,
            json,
            seed,
            replications,
            skip_degenerate,
            threads,
        } => {
            let mut cfg = parse_scenarios(&read(&scenarios)?)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if skip_degenerate {
                cfg.empty_strata = EmptyStratumPolicy::Skip;
            }
            let problem = builtin::example("therapy-trial").expect("bundled").spec();
            let scm = Scm::therapy_trial();
            let run = || run_scenarios(&scm, &problem, &cfg);
            let report = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::input(format!("thread pool: {e}")))?
                    .install(run)?,
                None => run()?,
            };
            match out_path {
                Some(path) => {
                    let f = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    report.write_csv(f)?;
                }
                None => report.write_csv(&mut *out)?,
            }
            if let Some(path) = json {
                let body = serde_json::to_string_pretty(&report).expect("report serializes");
                fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            let _ = writeln!(
                err,
                "truth {:.4}; {} scenarios x {} replications in {:.1}s",
                report.truth,
                report.results.len(),
                report.replications,
                report.elapsed_secs
            );
            for r in report.results.iter().filter(|r| r.dropped.iter().any(|&d| d > 0)) {
                let _ = writeln!(
                    err,
                    "scenario ({}, {}): dropped {:?} of {} replications",
                    r.rct, r.survey, r.dropped, report.replications
                );
            }
        }
    }
    Ok(Outcome::Done)
}

fn load_datasets(specs: &[String], p: &ProblemSpec) -> Result<Vec<Dataset>> {
    specs
        .iter()
        .map(|s| {
            let (term, path) = s
                .rsplit_once('@')
                .ok_or_else(|| Error::input(format!("expected TERM@PATH, got `{s}`")))?;
            let declared = parse_dist(term, &p.kinds)?;
            if !p.inputs.contains(&declared) {
                return Err(Error::input(format!("{declared} is not an input of the problem")));
            }
            let path = Path::new(path.trim());
            let f = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            read_csv(f, &label, declared)
        })
        .collect()
}

/// Parses `args` and runs the command, writing results to `out` and
/// messages to `err`. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Unknown) => EXIT_UNKNOWN,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

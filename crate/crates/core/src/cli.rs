//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a constraint is violated, 2 bad input or an
//! inapplicable method, 3 the Gröbner budget ran out.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::kernel::{
    kernel_direct, kernel_eq19, kernel_lemma1, kernel_prop1, kernel_prop2, kernel_two_step, ConstraintSet,
    ConstraintSetJson, KernelError, Method,
};
use crate::model::{Assignment, CausalGraph};
use crate::parameterize::{all_requests, canonical_requests, free_variables, DistributionRequest, ParamId};
use crate::reduce::{
    decompose_by_c_components, independent_groups, poly_relations, reduced_kernel, DecomposeError, RelationLedger,
};
use crate::ring::{Budget, Ideal, MonomialOrder, Polynomial};
use crate::verify::{
    check, exact_distribution, random_model, read_tables_csv, read_tables_json, write_tables_csv, write_tables_json,
    VerifyError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Environment variable holding a default budget, `pairs=N,degree=D`.
pub const BUDGET_ENV: &str = "CAUSAL_IMPLICITS_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "causal-implicits", version, about = "Equality constraints of causal models on interventional distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derive the constraints on a set of distributions.
    Derive(DeriveArgs),
    /// Show the product and sum relations used to shrink the problem.
    Reduce(RequestArgs),
    /// Write exact distribution tables for a random model.
    Simulate(SimulateArgs),
    /// Evaluate derived constraints on distribution tables.
    Check(CheckArgs),
    /// List c-components and their independent subproblems.
    Components(ComponentsArgs),
}

#[derive(Args, Debug)]
pub struct GraphArg {
    /// Graph description file.
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Args, Debug)]
pub struct RequestArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// An intervention such as `V1=1,V2=2`; an empty string is the
    /// observational distribution. Repeatable.
    #[arg(long = "intervene", value_name = "T")]
    pub intervene: Vec<String>,
    /// Every distribution with at least one free variable.
    #[arg(long, conflicts_with = "intervene")]
    pub all_interventions: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// Maximum S-pairs reduced per Gröbner computation.
    #[arg(long)]
    pub max_pairs: Option<usize>,
    /// Maximum total degree of a basis element.
    #[arg(long)]
    pub max_degree: Option<u32>,
}

#[derive(Args, Debug)]
pub struct DeriveArgs {
    #[command(flatten)]
    pub requests: RequestArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Defaults to every distribution when no `--intervene` is given.
    #[arg(long = "intervene", value_name = "T")]
    pub intervene: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Output of `derive`, in either format.
    #[arg(long)]
    pub constraints: PathBuf,
    /// Distribution tables, JSON or CSV (by extension).
    #[arg(long)]
    pub tables: PathBuf,
    /// Tolerance for decimal tables; exact tables are checked exactly.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ComponentsArgs {
    #[command(flatten)]
    pub graph: GraphArg,
    /// Also report whether the free variables of these interventions form
    /// an ancestral set.
    #[arg(long = "intervene", value_name = "T")]
    pub intervene: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Direct,
    TwoStep,
    Prop1,
    Eq19,
    Prop2,
    Lemma1,
    Reduce,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Budget(String),
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        if e.is_budget() {
            CliError::Budget(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Ring(r) => KernelError::Ring(r).into(),
            e => CliError::Input(e.to_string()),
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

/// Parses `pairs=N,degree=D`; either key may be left out.
pub fn parse_budget_env(s: &str, mut budget: Budget) -> Result<Budget, String> {
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("bad budget entry `{part}`"))?;
        match k.trim() {
            "pairs" => budget.max_pairs = v.trim().parse().map_err(|_| format!("bad pair count `{v}`"))?,
            "degree" => budget.max_degree = v.trim().parse().map_err(|_| format!("bad degree `{v}`"))?,
            other => return Err(format!("unknown budget key `{other}`")),
        }
    }
    Ok(budget)
}

/// Flags override the environment, which overrides the defaults.
fn resolve_budget(args: &BudgetArgs) -> Result<Budget, CliError> {
    let mut budget = Budget::default();
    if let Ok(s) = std::env::var(BUDGET_ENV) {
        budget = parse_budget_env(&s, budget).map_err(|e| input(format!("{BUDGET_ENV}: {e}")))?;
    }
    if let Some(p) = args.max_pairs {
        budget.max_pairs = p;
    }
    if let Some(d) = args.max_degree {
        budget.max_degree = d;
    }
    Ok(budget)
}

fn load_graph(path: &Path) -> Result<CausalGraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e| input(format!("{}: {e}", path.display())))
}

fn parse_requests(g: &CausalGraph, raw: &[String], all: bool) -> Result<Vec<DistributionRequest>, CliError> {
    if all {
        return Ok(all_requests(g));
    }
    let parsed: Vec<DistributionRequest> = if raw.is_empty() {
        vec![DistributionRequest::observational()]
    } else {
        raw.iter().map(|s| s.parse().map_err(|e| input(format!("--intervene `{s}`: {e}")))).collect::<Result<_, _>>()?
    };
    canonical_requests(g, &parsed).map_err(input)
}

fn emit(out: &Option<PathBuf>, stdout: &mut dyn Write, body: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(input),
    }
}

fn to_json_string<T: serde::Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("serializable");
    s.push('\n');
    s
}

fn reject_csv(f: Format) -> Result<(), CliError> {
    if f == Format::Csv {
        return Err(input("csv output is only available for `simulate`"));
    }
    Ok(())
}

/// The one nonempty intervention of `{P, P_t}` or `{P_t}`.
fn pair_target(requests: &[DistributionRequest]) -> Option<Assignment> {
    let nonempty: Vec<_> = requests.iter().filter(|r| !r.t.is_empty()).collect();
    match (nonempty.as_slice(), requests.len()) {
        ([r], 1 | 2) => Some(r.t.clone()),
        _ => None,
    }
}

fn run_method(
    g: &CausalGraph,
    requests: &[DistributionRequest],
    method: MethodArg,
    budget: &Budget,
) -> Result<ConstraintSet, KernelError> {
    let pre = |m: &str| KernelError::Precondition(m.to_string());
    match method {
        MethodArg::Direct => kernel_direct(g, requests, budget),
        MethodArg::TwoStep => kernel_two_step(g, requests, budget),
        MethodArg::Reduce => reduced_kernel(g, requests, budget),
        MethodArg::Prop1 => match requests {
            [r] => kernel_prop1(g, &r.t, budget),
            _ => Err(pre("prop1 takes exactly one distribution")),
        },
        MethodArg::Eq19 => {
            if requests != all_requests(g).as_slice() {
                return Err(pre("eq19 takes every distribution (--all-interventions)"));
            }
            kernel_eq19(g)
        }
        MethodArg::Prop2 | MethodArg::Lemma1 => {
            let t = pair_target(requests).ok_or_else(|| pre("takes the observational distribution and one intervention"))?;
            if method == MethodArg::Prop2 {
                kernel_prop2(g, &t, budget)
            } else {
                kernel_lemma1(g, &t, budget)
            }
        }
        MethodArg::Auto => auto(g, requests, budget),
    }
}

/// Tries the reduced kernel when the relations shrink the problem without
/// adding families, then
/// the closed forms whose preconditions hold, then the two-step and direct
/// eliminations. A failed precondition or an exhausted budget moves on to
/// the next rung; every attempt is recorded in the notes.
pub fn auto(g: &CausalGraph, requests: &[DistributionRequest], budget: &Budget) -> Result<ConstraintSet, KernelError> {
    let mut notes = Vec::new();
    let mut ladder = Vec::new();
    let ledger = poly_relations(g, requests)?;
    if !ledger.added.is_empty() {
        notes.push("auto: skipped reduce: relations need families outside the request".to_string());
    } else if ledger.relations.is_empty() && independent_groups(g, &ledger.residual).len() <= 1 {
        notes.push("auto: skipped reduce: no relations apply".to_string());
    } else {
        ladder.push(MethodArg::Reduce);
    }
    if !g.has_hidden() {
        if requests == all_requests(g).as_slice() {
            ladder.push(MethodArg::Eq19);
        }
        if requests.len() == 1 {
            ladder.push(MethodArg::Prop1);
        }
        if pair_target(requests).is_some() && requests.len() == 2 {
            ladder.extend([MethodArg::Prop2, MethodArg::Lemma1]);
        }
    } else {
        ladder.push(MethodArg::TwoStep);
    }
    ladder.push(MethodArg::Direct);
    let mut last = None;
    for m in ladder {
        match run_method(g, requests, m, budget) {
            Ok(mut set) => {
                notes.push(format!("auto: used {}", set.method));
                notes.append(&mut set.notes);
                set.notes = notes;
                return Ok(set);
            }
            Err(e @ KernelError::Precondition(_)) => notes.push(format!("auto: skipped {}: {e}", name(m))),
            Err(e) if e.is_budget() => {
                notes.push(format!("auto: {} ran out of budget", name(m)));
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("direct elimination always applies"))
}

fn name(m: MethodArg) -> String {
    m.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
}

fn cmd_derive(a: &DeriveArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    reject_csv(a.requests.format)?;
    let g = load_graph(&a.requests.graph.graph)?;
    let budget = resolve_budget(&a.budget)?;
    let requests = parse_requests(&g, &a.requests.intervene, a.requests.all_interventions)?;
    let set = run_method(&g, &requests, a.method, &budget)?;
    let body = match a.requests.format {
        Format::Json => to_json_string(&set.to_json()),
        _ => set.to_text(),
    };
    emit(&a.requests.out, stdout, &body)?;
    Ok(EXIT_OK)
}

fn ledger_text(l: &RelationLedger) -> String {
    let fam = |rs: &[DistributionRequest]| rs.iter().map(|r| format!("[{r}]")).collect::<Vec<_>>().join(" ");
    let mut s = format!("parameters: {}\n", l.parameter_count);
    s.push_str(&format!("added: {}\n", fam(&l.added)));
    s.push_str(&format!("after products: {}\n", fam(&l.after_products)));
    s.push_str(&format!("residual: {}\n", fam(&l.residual)));
    for st in &l.steps {
        s.push_str(&format!("step: [{}] by {} from {}\n", st.family, st.rule, fam(&st.witness)));
    }
    for f in &l.relations {
        s.push_str(&f.to_string_with(&MonomialOrder::GrevLex));
        s.push('\n');
    }
    s
}

fn cmd_reduce(a: &RequestArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    reject_csv(a.format)?;
    let g = load_graph(&a.graph.graph)?;
    let requests = parse_requests(&g, &a.intervene, a.all_interventions)?;
    let ledger = poly_relations(&g, &requests)?;
    let body = match a.format {
        Format::Json => to_json_string(&ledger.to_json()),
        _ => ledger_text(&ledger),
    };
    emit(&a.out, stdout, &body)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let g = load_graph(&a.graph.graph)?;
    let requests = parse_requests(&g, &a.intervene, a.intervene.is_empty())?;
    let point = random_model(&g, a.seed);
    let tables = requests.iter().map(|r| exact_distribution(&g, &point, &r.t)).collect::<Result<Vec<_>, _>>()?;
    let mut buf = Vec::new();
    match a.format {
        Format::Csv => write_tables_csv(&g, &tables, &mut buf)?,
        Format::Json => write_tables_json(&tables, &mut buf)?,
        Format::Text => return Err(input("simulate writes json or csv")),
    }
    emit(&a.out, stdout, &String::from_utf8(buf).expect("utf-8"))?;
    Ok(EXIT_OK)
}

/// Reads either output format of `derive`.
pub fn load_constraints(text: &str) -> Result<ConstraintSet, String> {
    if text.trim_start().starts_with('{') {
        let json: ConstraintSetJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
        return Ok(ConstraintSet::from_json(json));
    }
    let mut method = None;
    let mut digest = None;
    let mut requests = Vec::new();
    let mut notes = Vec::new();
    let mut gens = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if let Some(m) = h.strip_prefix("method:") {
                method = Some(
                    serde_json::from_value::<Method>(serde_json::Value::String(m.trim().into()))
                        .map_err(|_| format!("unknown method `{}`", m.trim()))?,
                );
            } else if let Some(d) = h.strip_prefix("graph:") {
                digest = Some(d.trim().to_string());
            } else if let Some(r) = h.strip_prefix("requests:") {
                for part in r.split(']').filter_map(|p| p.trim().strip_prefix('[')) {
                    requests.push(part.parse().map_err(|e| format!("request `{part}`: {e}"))?);
                }
            } else if let Some(n) = h.strip_prefix("note:") {
                notes.push(n.trim().to_string());
            }
            continue;
        }
        gens.push(line.parse::<Polynomial<ParamId>>().map_err(|e| format!("`{line}`: {e}"))?);
    }
    Ok(ConstraintSet {
        method: method.ok_or("missing `# method:` line")?,
        graph_digest: digest.ok_or("missing `# graph:` line")?,
        requests,
        notes,
        ideal: Ideal::new(gens),
    })
}

fn cmd_check(a: &CheckArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    reject_csv(a.format)?;
    let g = load_graph(&a.graph.graph)?;
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())));
    let set = load_constraints(&read(&a.constraints)?)
        .map_err(|e| input(format!("{}: {e}", a.constraints.display())))?;
    if set.graph_digest != g.digest() {
        return Err(input("the constraints were derived for a different graph"));
    }
    let raw = read(&a.tables)?;
    let is_csv = a.tables.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let tables = if is_csv {
        read_tables_csv(&g, raw.as_bytes(), a.tol)?
    } else {
        read_tables_json(&g, raw.as_bytes(), a.tol)?
    };
    let report = check(&set, &tables, a.tol)?;
    let body = match a.format {
        Format::Json => to_json_string(&report),
        _ => report.to_text(),
    };
    emit(&a.out, stdout, &body)?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(serde::Serialize)]
struct ComponentsJson {
    c_components: Vec<Vec<String>>,
    /// Set when no c-component contains an edge between its members.
    decomposable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    subproblems: Vec<SubProblemJson>,
    requests: Vec<RequestJson>,
}

#[derive(serde::Serialize)]
struct SubProblemJson {
    component: Vec<String>,
    requests: Vec<DistributionRequest>,
}

#[derive(serde::Serialize)]
struct RequestJson {
    request: DistributionRequest,
    free: Vec<String>,
    ancestral: bool,
}

fn strings(names: &[crate::model::VarName]) -> Vec<String> {
    names.iter().map(|n| n.to_string()).collect()
}

fn cmd_components(a: &ComponentsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    reject_csv(a.format)?;
    let g = load_graph(&a.graph.graph)?;
    let requests = if a.intervene.is_empty() {
        Vec::new()
    } else {
        parse_requests(&g, &a.intervene, false)?
    };
    let (subproblems, reason) = match decompose_by_c_components(&g) {
        Ok(subs) => (subs, None),
        Err(e @ DecomposeError::EdgeInsideComponent { .. }) => (Vec::new(), Some(e.to_string())),
        Err(e) => return Err(input(e)),
    };
    let mut report = ComponentsJson {
        c_components: g.c_components().iter().map(|c| strings(c)).collect(),
        decomposable: reason.is_none(),
        reason,
        subproblems: subproblems
            .into_iter()
            .map(|s| SubProblemJson { component: strings(&s.component), requests: s.requests })
            .collect(),
        requests: Vec::new(),
    };
    for r in requests {
        let free = free_variables(&g, &r.t);
        let ancestral = g.is_ancestral(&free).map_err(input)?;
        report.requests.push(RequestJson { request: r, free: strings(&free), ancestral });
    }
    let body = match a.format {
        Format::Json => to_json_string(&report),
        _ => {
            let braces = |v: &[String]| format!("{{{}}}", v.join(","));
            let comps: Vec<String> = report.c_components.iter().map(|c| braces(c)).collect();
            let mut s = format!("c-components: {}\n", comps.join(" "));
            match &report.reason {
                None => s.push_str("decomposable: yes\n"),
                Some(r) => s.push_str(&format!("decomposable: no ({r})\n")),
            }
            for sp in &report.subproblems {
                let rs: Vec<String> = sp.requests.iter().map(|r| format!("[{r}]")).collect();
                s.push_str(&format!("subproblem {}: {}\n", braces(&sp.component), rs.join(" ")));
            }
            for r in &report.requests {
                let yes = if r.ancestral { "yes" } else { "no" };
                s.push_str(&format!("request [{}]: free {} ancestral {yes}\n", r.request, braces(&r.free)));
            }
            s
        }
    };
    emit(&a.out, stdout, &body)?;
    Ok(EXIT_OK)
}

/// Runs one invocation, returning the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Derive(a) => cmd_derive(a, stdout),
        Command::Reduce(a) => cmd_reduce(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Check(a) => cmd_check(a, stdout),
        Command::Components(a) => cmd_components(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Input(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_INPUT
        }
        Err(CliError::Budget(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_BUDGET
        }
    }
}

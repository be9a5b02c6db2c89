//! `wsp`: solve, check, kernelize and generate workflow satisfiability instances.
//!
//! Exit codes: 0 satisfiable or success, 1 unsatisfiable or invalid plan,
//! 2 usage, parse or validation error, 3 capability error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use wsp_core::genbench::{
    bench_run, gen_3coloring_or, gen_hitting_set_counting, gen_hitting_set_eq, gen_nae3sat, gen_random, random_formula,
    seeded_rng, write_csv, BenchSpec, CnfFormula, GenError, Graph, HittingSetInstance, Mix, RandomSpec,
};
use wsp_core::hierarchy::{canonicalize, from_management_tree, ManagementTree, TreeMethod};
use wsp_core::kernel::{kernelize, Verdict};
use wsp_core::model::{
    check_plan, parse_plan, plan_to_json, serialize_instance, unsat_json, ModelError, WorkflowInstance, DEFAULT_CAP,
};
use wsp_core::solver::{min_fully_authorized_users, RouteChoice, SolveError, SolveOptions};
use wsp_core::MAX_STEPS;

#[derive(Parser, Debug)]
#[command(name = "wsp", version, about = "Exact solvers for the workflow satisfiability problem")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Input file; standard input when omitted or `-`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when omitted or `-`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Route::Auto)]
    route: Route,
    /// Also report the kernelization trace.
    #[arg(long, global = true)]
    emit_trace: bool,
    /// Run benchmark instances one at a time.
    #[arg(long, global = true)]
    serial: bool,
    /// Largest accepted step count.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP, value_parser = parse_cap)]
    cap: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Route {
    Auto,
    Flat,
    Quotient,
    Hierarchy,
    Search,
    Oracle,
}

impl From<Route> for RouteChoice {
    fn from(r: Route) -> Self {
        match r {
            Route::Auto => RouteChoice::Auto,
            Route::Flat => RouteChoice::Flat,
            Route::Quotient => RouteChoice::Quotient,
            Route::Hierarchy => RouteChoice::Hierarchy,
            Route::Search => RouteChoice::Search,
            Route::Oracle => RouteChoice::Oracle,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide an instance and print a plan.
    Solve,
    /// Check a plan against an instance.
    Check {
        #[arg(long)]
        plan: PathBuf,
    },
    /// Apply the kernelization stages and print the reduced instance.
    Kernelize,
    /// Generate an instance.
    #[command(subcommand)]
    Gen(Gen),
    #[command(subcommand)]
    Hierarchy(HierarchyCmd),
    /// Fewest fully authorized users for the input's steps and constraints.
    MinUsers,
    /// Time solver routes on random instances and print CSV.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// Two-user instance from a 3-CNF formula (DIMACS input, or random with --vars).
    Nae3sat {
        #[arg(long)]
        vars: Option<usize>,
        #[arg(long, default_value_t = 4)]
        clauses: usize,
    },
    /// `=` encoding of a hitting-set instance (JSON input).
    HittingSet,
    /// Counting encoding of a hitting-set instance (JSON input).
    HittingSetCounting,
    /// OR of 3-colorability over graphs given as edge lists.
    #[command(name = "or-3col")]
    Or3col,
    Random {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        c: usize,
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value = "regular", value_parser = parse_mix)]
        mix: Mix,
    },
}

#[derive(Subcommand, Debug)]
enum HierarchyCmd {
    /// Hierarchy levels from a management tree (JSON `{root, edges}`).
    FromTree {
        #[arg(long, default_value = "fold-subtrees", value_parser = parse_method)]
        method: TreeMethod,
    },
    /// Rewrite an instance so its hierarchy is canonical.
    Canonicalize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Step counts, as `lo..hi` (inclusive) or a comma list.
    #[arg(long, default_value = "10..18", value_parser = parse_ks)]
    ks: Ks,
    #[arg(long, default_value = "wsp1-neq", value_parser = parse_mix)]
    mix: Mix,
    #[arg(long, default_value_t = 1)]
    instances: usize,
    #[arg(long, default_value_t = 2)]
    users_per_step: usize,
    #[arg(long, default_value_t = 1.0)]
    constraints_per_step: f64,
    #[arg(long, default_value_t = 1.0)]
    density: f64,
}

#[derive(Clone, Debug)]
struct Ks(Vec<usize>);

fn parse_mix(s: &str) -> Result<Mix, String> {
    Mix::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Mix::ALL.iter().map(|m| m.name()).collect();
        format!("unknown mix `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_method(s: &str) -> Result<TreeMethod, String> {
    TreeMethod::parse(s).ok_or_else(|| format!("unknown method `{s}`; expected fold-subtrees or collapse-root-and-leaves"))
}

fn parse_cap(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(k) if (1..=MAX_STEPS).contains(&k) => Ok(k),
        _ => Err(format!("expected a step count between 1 and {MAX_STEPS}")),
    }
}

fn parse_ks(s: &str) -> Result<Ks, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let ks = match s.split_once("..") {
        Some((lo, hi)) => (num(lo)?..=num(hi)?).collect(),
        None => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
    };
    if ks.is_empty() {
        return Err("no step counts".into());
    }
    Ok(Ks(ks))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn capability(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::StepLimitExceeded { .. } => Failure::capability(e.to_string()),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Model(m) => m.into(),
            e if e.is_capability() => Failure::capability(e.to_string()),
            e => Failure::usage(e.to_string()),
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        match e {
            GenError::StepLimitExceeded { .. } => Failure::capability(e.to_string()),
            GenError::Model(m) => m.into(),
            e => Failure::usage(e.to_string()),
        }
    }
}

fn read_path(path: Option<&PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            fs::read_to_string(p).map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))
        }
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| Failure::usage(format!("cannot read standard input: {e}")))?;
            Ok(s)
        }
    }
}

fn write_out(g: &Global, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &g.output {
        Some(p) if p.as_os_str() != "-" => {
            fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display())))
        }
        _ => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::usage(format!("cannot write output: {e}"))),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

fn load_instance(g: &Global) -> Result<WorkflowInstance, Failure> {
    Ok(WorkflowInstance::from_json(&read_path(g.input.as_ref())?, g.cap)?)
}

fn solve(g: &Global) -> Result<u8, Failure> {
    let w = load_instance(g)?;
    if g.emit_trace {
        eprintln!("{}", pretty(&kernelize(&w).trace_json()));
    }
    let opts = SolveOptions { route: g.route.into(), ..SolveOptions::default() };
    let r = wsp_core::solver::solve_with(&w, &opts)?;
    eprintln!("route: {}", r.stats.route);
    match &r.plan {
        Some(p) => {
            write_out(g, &plan_to_json(&w, p))?;
            Ok(0)
        }
        None => {
            write_out(g, &unsat_json())?;
            Ok(1)
        }
    }
}

fn check(g: &Global, plan: &PathBuf) -> Result<u8, Failure> {
    let w = load_instance(g)?;
    let p = parse_plan(&w, &read_path(Some(plan))?)?;
    let v = check_plan(&w, &p)?;
    let out = json!({
        "valid": v.is_valid(),
        "unauthorized": v.unauthorized.iter().map(|s| &w.steps()[s.0]).collect::<Vec<_>>(),
        "violated": v.violated,
    });
    write_out(g, &pretty(&out))?;
    Ok(if v.is_valid() { 0 } else { 1 })
}

fn kernelize_cmd(g: &Global) -> Result<u8, Failure> {
    let w = load_instance(g)?;
    let kr = kernelize(&w);
    let reduced: Value = serde_json::from_str(&serialize_instance(&kr.reduced)).expect("serialized instance is JSON");
    let mut out = json!({ "verdict_shortcut": kr.verdict_shortcut, "reduced": reduced });
    if g.emit_trace {
        out["trace"] = kr.trace_json()["stages"].clone();
    }
    write_out(g, &pretty(&out))?;
    Ok(if kr.verdict_shortcut == Some(Verdict::Unsat) { 1 } else { 0 })
}

fn generate(g: &Global, which: &Gen) -> Result<u8, Failure> {
    let w = match which {
        Gen::Nae3sat { vars: Some(vars), clauses } => {
            if *vars == 0 || 2 * vars > g.cap {
                return Err(Failure::usage(format!("--vars must be between 1 and {}", g.cap / 2)));
            }
            gen_nae3sat(&random_formula(&mut seeded_rng(g.seed), *vars, *clauses))?
        }
        Gen::Nae3sat { vars: None, .. } => {
            let f = CnfFormula::parse_dimacs(&read_path(g.input.as_ref())?)?;
            if 2 * f.vars > g.cap {
                return Err(Failure::capability(format!("{} steps exceed the cap of {}", 2 * f.vars, g.cap)));
            }
            gen_nae3sat(&f)?
        }
        Gen::HittingSet | Gen::HittingSetCounting => {
            let h = HittingSetInstance::from_json(&read_path(g.input.as_ref())?)?;
            if matches!(which, Gen::HittingSet) {
                gen_hitting_set_eq(&h)?
            } else {
                gen_hitting_set_counting(&h)?
            }
        }
        Gen::Or3col => gen_3coloring_or(&Graph::parse_list(&read_path(g.input.as_ref())?)?)?,
        Gen::Random { k, n, c, density, mix } => {
            if *k > g.cap {
                return Err(Failure::capability(format!("{k} steps exceed the cap of {}", g.cap)));
            }
            gen_random(&RandomSpec::new(*k, *n, *c, *density, *mix, g.seed))?
        }
    };
    write_out(g, &serialize_instance(&w))?;
    Ok(0)
}

fn hierarchy(g: &Global, which: &HierarchyCmd) -> Result<u8, Failure> {
    match which {
        HierarchyCmd::FromTree { method } => {
            let t = ManagementTree::from_json(&read_path(g.input.as_ref())?).map_err(|e| Failure::usage(e.to_string()))?;
            let h = from_management_tree(&t, *method);
            let name = |u: usize| t.names()[u].clone();
            let levels: Vec<Vec<Vec<String>>> = (1..=h.level_count())
                .map(|i| h.partition(i).into_iter().map(|b| b.into_iter().map(name).collect()).collect())
                .collect();
            write_out(g, &pretty(&json!({ "users": t.names(), "levels": levels })))?;
        }
        HierarchyCmd::Canonicalize => {
            let w = load_instance(g)?;
            let Some(h) = w.hierarchy() else {
                return Err(Failure::usage("instance has no hierarchy"));
            };
            let (h, constraints) = canonicalize(h, w.constraints());
            let mut parts = w.to_parts();
            parts.hierarchy = Some(h);
            parts.constraints = constraints;
            write_out(g, &serialize_instance(&w.rebuild(parts)?))?;
        }
    }
    Ok(0)
}

fn min_users(g: &Global) -> Result<u8, Failure> {
    let w = load_instance(g)?;
    let m = min_fully_authorized_users(w.steps(), w.constraints())?;
    write_out(g, &pretty(&json!({ "min_users": m.users, "solve_calls": m.solve_calls })))?;
    Ok(if m.users.is_some() { 0 } else { 1 })
}

fn bench(g: &Global, a: &BenchArgs) -> Result<u8, Failure> {
    if let Some(&k) = a.ks.0.iter().find(|&&k| k > g.cap) {
        return Err(Failure::capability(format!("{k} steps exceed the cap of {}", g.cap)));
    }
    let spec = BenchSpec {
        ks: a.ks.0.clone(),
        users_per_step: a.users_per_step,
        constraints_per_step: a.constraints_per_step,
        density: a.density,
        mix: a.mix,
        routes: vec![g.route.into()],
        instances_per_k: a.instances,
        seed: g.seed,
        serial: g.serial,
    };
    let records = bench_run(&spec)?;
    let mut buf = Vec::new();
    write_csv(&records, &mut buf)?;
    write_out(g, &String::from_utf8(buf).expect("CSV output is UTF-8"))?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Solve => solve(g),
        Command::Check { plan } => check(g, plan),
        Command::Kernelize => kernelize_cmd(g),
        Command::Gen(which) => generate(g, which),
        Command::Hierarchy(which) => hierarchy(g, which),
        Command::MinUsers => min_users(g),
        Command::Bench(a) => bench(g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

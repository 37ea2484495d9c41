use std::collections::BTreeMap;
use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crnkit::cache::{ScopeCache, Source};
use crnkit::dynamics::{self, Configuration};
use crnkit::enumerate::{self, EnumError, EnumOptions, Scope};
use crnkit::format::{parse_crn, serialize_crn_line};
use crnkit::pwl::{RailMode, TargetFunction, TargetKind};
use crnkit::search::{self, SearchError, SearchOptions, SearchSpec, StopMode};
use crnkit::seesaw;
use crnkit::{ClassSpec, Crn};

mod report;

use report::Sidecar;

#[derive(Parser, Debug)]
#[command(name = "crnkit", version, about = "Enumerate chemical reaction networks and search for ones computing a function")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Cache directory for enumerated scopes and search summaries.
    #[arg(long, global = true, env = "CRNKIT_CACHE")]
    cache: Option<PathBuf>,
    /// Do not read or write the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads (1 = fully sequential).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write machine-readable key=value results here.
    #[arg(long, global = true)]
    sidecar: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate one scope.
    Enumerate(EnumerateArgs),
    /// Count every scope in a grid and print a table.
    Sweep(SweepArgs),
    /// Search for the smallest network computing a function.
    Search(SearchArgs),
    /// Show the equilibrium analysis of a network and whether it computes a function.
    Analyze(AnalyzeArgs),
    /// Enumerate seesaw networks.
    Seesaw(SeesawArgs),
    /// Run the discrete simulator and check for a unique terminal configuration.
    Simulate(SimulateArgs),
    /// Check a network (or a search certificate) against a function.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct ClassArgs {
    /// Network class: general, elementary, catalytic, autocatalytic, metabolic, ffnc, 2in2out.
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    reactions: usize,
    #[arg(long)]
    species: usize,
    /// Stop after this many networks (resumable).
    #[arg(long)]
    limit: Option<u64>,
    /// Print every network, one per line.
    #[arg(long)]
    print: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long, default_value_t = 1)]
    min_reactions: usize,
    #[arg(long)]
    max_reactions: usize,
    #[arg(long, default_value_t = 1)]
    min_species: usize,
    #[arg(long)]
    max_species: usize,
}

#[derive(Args, Debug)]
struct FunctionArgs {
    /// max, min, minmax, abs, relu, identity, sumN, mulK
    #[arg(long)]
    function: String,
    /// Dual-rail inputs and outputs.
    #[arg(long)]
    dual_rail: bool,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    function: FunctionArgs,
    #[command(flatten)]
    class: ClassArgs,
    #[arg(long)]
    max_reactions: usize,
    #[arg(long)]
    max_species: usize,
    #[arg(long, default_value = "first")]
    stop: String,
    /// Analyze at most this many networks, then stop with a resumable partial result.
    #[arg(long)]
    limit: Option<u64>,
    /// Resume at REACTIONS,SPECIES,OFFSET (from a partial run).
    #[arg(long)]
    resume: Option<String>,
    /// Write the certificate of the hit here.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    crn: PathBuf,
    #[command(flatten)]
    function: FunctionArgs,
}

#[derive(Args, Debug)]
struct SeesawArgs {
    #[arg(long)]
    domains: usize,
    /// Exact reaction count.
    #[arg(long, conflicts_with = "max_reactions")]
    reactions: Option<usize>,
    /// Sweep reaction counts 1..=N.
    #[arg(long)]
    max_reactions: Option<usize>,
    /// Species bound (default 4 per reaction).
    #[arg(long)]
    max_species: Option<usize>,
    #[arg(long)]
    print: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    crn: PathBuf,
    /// Initial counts, e.g. "A=2,B=5".
    #[arg(long)]
    init: String,
    #[arg(long, default_value_t = 20)]
    trials: u64,
    #[arg(long, default_value_t = dynamics::DEFAULT_STEP_CAP)]
    step_cap: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "certificate", conflicts_with = "certificate")]
    crn: Option<PathBuf>,
    #[arg(long, required_unless_present = "certificate")]
    function: Option<String>,
    #[arg(long)]
    dual_rail: bool,
    /// Re-verify a certificate written by `search`.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

/// Exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Success = 0,
    NotFound = 1,
    Usage = 2,
    Limit = 3,
}

/// An error with the status it maps to.
struct Failure {
    status: Status,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure { status: Status::Usage, error: e.into() }
    }
}

fn limit(error: anyhow::Error) -> Failure {
    Failure { status: Status::Limit, error }
}

type Outcome = Result<Status, Failure>;

struct Session {
    config: BTreeMap<String, String>,
    cache: Option<ScopeCache>,
    seed: Option<u64>,
    sidecar: Sidecar,
}

fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), i + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

const GLOBAL_KEYS: [&str; 4] = ["cache", "threads", "seed", "sidecar"];

impl Session {
    /// Class from the flag, else the config's `class`, else FFNC; then the
    /// config's individual class keys.
    fn class(&self, args: &ClassArgs) -> anyhow::Result<ClassSpec> {
        let name = args.class.as_deref().or(self.config.get("class").map(String::as_str));
        let mut spec: ClassSpec = match name {
            Some(n) => n.parse()?,
            None => ClassSpec::ffnc(),
        };
        for (k, v) in &self.config {
            if k == "class" || GLOBAL_KEYS.contains(&k.as_str()) {
                continue;
            }
            spec.set(k, v).map_err(|e| anyhow!("config: {e}"))?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn target(function: &str, dual: bool) -> anyhow::Result<TargetFunction> {
    let kind: TargetKind = function.parse().map_err(|e: String| anyhow!(e))?;
    Ok(TargetFunction::new(kind, if dual { RailMode::Dual } else { RailMode::Single }))
}

fn load_crn(path: &Path) -> anyhow::Result<Crn> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read network file {}", path.display()))?;
    parse_crn(&text).with_context(|| format!("{}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { Status::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.status as u8)
        }
    }
}

fn setup(global: &Global) -> Result<Session, Failure> {
    let config = match &global.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    let threads = match global.threads {
        Some(t) => Some(t),
        None => config.get("threads").map(|t| t.parse()).transpose().context("config: threads")?,
    };
    if threads == Some(0) {
        return Err(anyhow!("--threads must be at least 1").into());
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot configure thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    let seed = match global.seed {
        Some(s) => Some(s),
        None => config.get("seed").map(|s| s.parse()).transpose().context("config: seed")?,
    };
    let cache_dir =
        global.cache.clone().or_else(|| config.get("cache").map(PathBuf::from)).unwrap_or_else(|| ".crnkit-cache".into());
    let cache = if global.no_cache { None } else { Some(ScopeCache::new(cache_dir)) };
    let sidecar_path = global.sidecar.clone().or_else(|| config.get("sidecar").map(PathBuf::from));
    Ok(Session { config, cache, seed, sidecar: Sidecar::new(sidecar_path) })
}

fn run(cli: Cli) -> Outcome {
    let mut ctx = setup(&cli.global)?;
    let status = match cli.command {
        Command::Enumerate(a) => cmd_enumerate(&mut ctx, a),
        Command::Sweep(a) => cmd_sweep(&mut ctx, a),
        Command::Search(a) => cmd_search(&mut ctx, a),
        Command::Analyze(a) => cmd_analyze(&mut ctx, a),
        Command::Seesaw(a) => cmd_seesaw(&mut ctx, a),
        Command::Simulate(a) => cmd_simulate(&mut ctx, a),
        Command::Verify(a) => cmd_verify(&mut ctx, a),
    }?;
    ctx.sidecar.write()?;
    Ok(status)
}

fn check_scope(scope: Scope) -> anyhow::Result<()> {
    if scope.reactions == 0 || scope.species == 0 {
        bail!("reaction and species counts must be at least 1");
    }
    Ok(())
}

fn count_scope(ctx: &Session, spec: &ClassSpec, scope: Scope) -> Result<u64, EnumError> {
    match &ctx.cache {
        Some(c) => c.count(spec, scope),
        None => enumerate::count_scope(scope, spec),
    }
}

fn cmd_enumerate(ctx: &mut Session, a: EnumerateArgs) -> Outcome {
    let spec = ctx.class(&a.class)?;
    let scope = Scope::new(a.reactions, a.species);
    check_scope(scope)?;
    let mut print = |c: &Crn| {
        if a.print {
            println!("{}", serialize_crn_line(c));
        }
        ControlFlow::Continue(())
    };
    let result = match &ctx.cache {
        Some(cache) => cache.stream(&spec, scope, a.limit, &mut print).map(|(n, src)| (n, Some(src))),
        None => enumerate::enumerate_scope_with(scope, &spec, &EnumOptions { limit: a.limit, resume_after: None }, &mut print)
            .map(|n| (n, None)),
    };
    ctx.sidecar.set("command", "enumerate");
    ctx.sidecar.set("class", spec.fingerprint());
    ctx.sidecar.set("reactions", scope.reactions);
    ctx.sidecar.set("species", scope.species);
    match result {
        Ok((n, src)) => {
            if n == 0 {
                println!("no CRNs in scope");
            }
            println!("count: {n}");
            if src == Some(Source::Cache) {
                log::info!("replayed from cache");
            }
            ctx.sidecar.set("count", n);
            ctx.sidecar.set("complete", true);
            Ok(Status::Success)
        }
        Err(EnumError::Partial { count, token }) => {
            println!("count: {count} (partial)");
            ctx.sidecar.set("count", count);
            ctx.sidecar.set("complete", false);
            ctx.sidecar.set("resume_token", &token);
            ctx.sidecar.write()?;
            Err(limit(anyhow!(
                "stopped after {count} networks; rerun with the same cache to continue (resume token {token})"
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sweep(ctx: &mut Session, a: SweepArgs) -> Outcome {
    let spec = ctx.class(&a.class)?;
    if a.min_reactions == 0 || a.min_species == 0 || a.min_reactions > a.max_reactions || a.min_species > a.max_species {
        return Err(anyhow!("empty or invalid scope grid").into());
    }
    let rs: Vec<usize> = (a.min_reactions..=a.max_reactions).collect();
    let ss: Vec<usize> = (a.min_species..=a.max_species).collect();
    let mut grid = BTreeMap::new();
    ctx.sidecar.set("command", "sweep");
    ctx.sidecar.set("class", spec.fingerprint());
    for &r in &rs {
        for &s in &ss {
            let scope = Scope::new(r, s);
            let n = count_scope(ctx, &spec, scope)?;
            grid.insert((r, s), n);
            ctx.sidecar.push("cell", format!("reactions={r} species={s} count={n}"));
        }
    }
    print!("{}", report::grid_table(&rs, &ss, &grid, "Reaction"));
    Ok(Status::Success)
}

fn parse_resume(text: &str) -> anyhow::Result<(Scope, u64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [r, s, k] = parts[..] else { bail!("--resume expects REACTIONS,SPECIES,OFFSET") };
    Ok((Scope::new(r.parse()?, s.parse()?), k.parse()?))
}

fn cmd_search(ctx: &mut Session, a: SearchArgs) -> Outcome {
    let target = target(&a.function.function, a.function.dual_rail)?;
    let class = ctx.class(&a.class)?;
    let stop: StopMode = a.stop.parse().map_err(|e: String| anyhow!(e))?;
    let max_scope = Scope::new(a.max_reactions, a.max_species);
    check_scope(max_scope)?;
    let spec = SearchSpec { target: target.clone(), class, max_scope, stop };
    let mut opts = SearchOptions { analysis_limit: a.limit, ..SearchOptions::default() };
    if let Some(seed) = ctx.seed {
        opts.analysis.seed = seed;
    }
    if let Some(r) = &a.resume {
        opts.resume = Some(parse_resume(r)?);
    }
    ctx.sidecar.set("command", "search");
    ctx.sidecar.set("function", target.kind.to_string());
    ctx.sidecar.set("rail", rail_name(&target));
    let result = match search::exhaustive_search(&spec, ctx.cache.as_ref(), &opts) {
        Ok(r) => r,
        Err(SearchError::Partial { result, scope, analyzed }) => {
            report::print_scopes(&result.scopes, &mut ctx.sidecar);
            let resume = format!("{},{},{}", scope.reactions, scope.species, analyzed);
            println!("PARTIAL: analysis limit reached; resume with --resume {resume}");
            ctx.sidecar.set("status", "partial");
            ctx.sidecar.set("resume", &resume);
            ctx.sidecar.write()?;
            return Err(limit(anyhow!("analysis limit reached")));
        }
        Err(e) => return Err(e.into()),
    };
    report::print_scopes(&result.scopes, &mut ctx.sidecar);
    let Some(hit) = &result.found else {
        println!("NOT FOUND up to {} reactions and {} species", max_scope.reactions, max_scope.species);
        ctx.sidecar.set("status", "not_found");
        return Ok(Status::NotFound);
    };
    for h in &result.frontier {
        println!();
        println!("FOUND at {} reactions, {} species (network {} of its scope)", h.scope.reactions, h.scope.species, h.index + 1);
        println!("{}", h.crn);
        println!("io: {}", h.io.display(&h.crn));
        println!("computed function:");
        println!("{}", report::indent(&report::pwl_text(&h.crn, &h.pwl.simplified())));
    }
    ctx.sidecar.set("status", "found");
    ctx.sidecar.set("found_reactions", hit.scope.reactions);
    ctx.sidecar.set("found_species", hit.scope.species);
    ctx.sidecar.set("found_crn", serialize_crn_line(&hit.crn));
    if let Some(path) = &a.certificate {
        fs::write(path, report::certificate(&target, hit)).with_context(|| format!("cannot write {}", path.display()))?;
        ctx.sidecar.set("certificate", path.display());
    }
    Ok(Status::Success)
}

fn rail_name(t: &TargetFunction) -> &'static str {
    match t.rail() {
        RailMode::Single => "single",
        RailMode::Dual => "dual",
    }
}

fn cmd_analyze(ctx: &mut Session, a: AnalyzeArgs) -> Outcome {
    let crn = load_crn(&a.crn)?;
    let target = target(&a.function.function, a.function.dual_rail)?;
    print!("{}", report::equilibrium_report(&crn));
    println!();
    let verdict = search::verify_candidate(&crn, &target);
    ctx.sidecar.set("command", "analyze");
    ctx.sidecar.set("function", target.kind.to_string());
    ctx.sidecar.set("rail", rail_name(&target));
    Ok(report::print_verdict(&crn, &target, &verdict, &mut ctx.sidecar))
}

fn cmd_verify(ctx: &mut Session, a: VerifyArgs) -> Outcome {
    let (crn, target) = match &a.certificate {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            report::parse_certificate(&text).with_context(|| format!("{}", path.display()))?
        }
        None => {
            let crn = load_crn(a.crn.as_ref().expect("clap requires --crn"))?;
            let f = a.function.as_deref().expect("clap requires --function");
            (crn, target(f, a.dual_rail)?)
        }
    };
    let start = std::time::Instant::now();
    let verdict = search::verify_candidate(&crn, &target);
    ctx.sidecar.set("command", "verify");
    ctx.sidecar.set("function", target.kind.to_string());
    ctx.sidecar.set("rail", rail_name(&target));
    ctx.sidecar.set("crn", serialize_crn_line(&crn));
    let status = report::print_verdict(&crn, &target, &verdict, &mut ctx.sidecar);
    log::info!("verified in {:?}", start.elapsed());
    Ok(status)
}

fn cmd_seesaw(ctx: &mut Session, a: SeesawArgs) -> Outcome {
    let counts: Vec<usize> = match (a.reactions, a.max_reactions) {
        (Some(r), None) => vec![r],
        (None, Some(m)) => (1..=m).collect(),
        _ => return Err(anyhow!("give --reactions or --max-reactions").into()),
    };
    if a.domains == 0 || counts.contains(&0) {
        return Err(anyhow!("domain and reaction counts must be at least 1").into());
    }
    ctx.sidecar.set("command", "seesaw");
    ctx.sidecar.set("domains", a.domains);
    let mut rows = Vec::new();
    for r in counts {
        let max_species = a.max_species.unwrap_or_else(|| seesaw::default_max_species(r));
        let mut shown = Vec::new();
        let n = seesaw::enumerate_seesaw(a.domains, r, max_species, |c| {
            if a.print {
                shown.push(c.to_string());
            }
            ControlFlow::Continue(())
        })?;
        for (i, s) in shown.iter().enumerate() {
            println!("# {} domains, {} reactions, network {}", a.domains, r, i + 1);
            println!("{s}");
        }
        ctx.sidecar.push("cell", format!("domains={} reactions={r} count={n}", a.domains));
        rows.push((r, n));
    }
    print!("{}", report::seesaw_table(a.domains, &rows));
    Ok(Status::Success)
}

fn cmd_simulate(ctx: &mut Session, a: SimulateArgs) -> Outcome {
    if std::env::var_os("CI").is_some() && ctx.seed.is_none() {
        return Err(anyhow!("--seed is required when CI is set").into());
    }
    let crn = load_crn(&a.crn)?;
    let init = Configuration::parse(&crn, &a.init)?;
    let seed = ctx.seed.unwrap_or(0);
    println!("# rng: {}", dynamics::RNG_NAME);
    println!("# initial: {}", init.display(&crn));
    ctx.sidecar.set("command", "simulate");
    ctx.sidecar.set("seed", seed);
    for k in 0..a.trials {
        match dynamics::run_to_terminal(&crn, &init, seed + k, a.step_cap) {
            Ok(run) => {
                println!("seed {}: {} after {} firings", seed + k, run.terminal.display(&crn), run.sequence.len());
                ctx.sidecar.push("run", format!("seed={} terminal={}", seed + k, run.terminal.display(&crn)));
            }
            Err(e) => {
                println!("seed {}: {e}", seed + k);
                ctx.sidecar.set("verdict", "nonterminating");
                ctx.sidecar.write()?;
                return Err(limit(e.into()));
            }
        }
    }
    let verdict = dynamics::check_rate_independence(&crn, &init, a.trials, seed, a.step_cap).map_err(|e| limit(e.into()))?;
    let method = if verdict.exhaustive { "exhaustive" } else { "sampled" };
    if verdict.unique_terminal {
        println!("verdict: unique terminal configuration ({method})");
        ctx.sidecar.set("verdict", "unique");
    } else {
        println!("verdict: rate-dependent, {} terminal configurations ({method})", verdict.terminals.len());
        for w in &verdict.terminals {
            let how = match w.seed {
                Some(s) => format!("seed {s}"),
                None => format!("firing sequence {:?}", w.sequence.iter().map(|i| i + 1).collect::<Vec<_>>()),
            };
            println!("  {} via {how}", w.terminal.display(&crn));
        }
        ctx.sidecar.set("verdict", "rate_dependent");
    }
    ctx.sidecar.set("method", method);
    Ok(Status::Success)
}

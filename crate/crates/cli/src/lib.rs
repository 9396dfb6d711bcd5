//! Command-line front end for the `moran` library.
//!
//! [`run_command`] takes argv and the three standard streams and returns the
//! process exit code: 0 on success, 1 on usage errors, 2 on input or
//! consistency errors, 3 when the estimator returns its failure sentinel and
//! 4 when an audit finds a violation.

mod audit;
pub mod report;

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use moran::engine::{replica_rng, RunMode, RunStart, Simulator, TraceRecord};
use moran::estimator::{estimate_fixation, loglog_slope, mean_absorption_time};
use moran::exact::{solve_absorption_time, solve_fixation, Start};
use moran::families::{generate, parse_groups, write_groups, Family};
use moran::potential::{boundary_drift, is_barrier, phi, ProcessConstants};
use moran::rational::{parse_rational, to_f64};
use moran::{Graph, MutantSet};

use report::{emit_report, Format, Record, Value};

/// Largest graph whose subsets `drift` and `barrier` enumerate.
pub const SUBSET_LIST_CAP: usize = 16;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Estimator(String),
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Estimator(_) => 3,
            CliError::Audit(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Estimator(m) | CliError::Audit(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "moran", version, about = "Moran process on graphs: simulation, exact solving and fixation estimates")]
struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for replica fan-out; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Report format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a generated graph in the text format.
    Gen(GenArgs),
    /// Summarize a graph.
    Info(GraphArgs),
    /// Run seeded replicas of the process.
    Simulate(SimulateArgs),
    /// Estimate the fixation probability with the early-stopping FPRAS.
    Estimate(EstimateArgs),
    /// Solve the absorbing chain exactly (n ≤ 20).
    Exact(ExactArgs),
    /// Boundary drift of every non-trivial subset.
    Drift(DriftArgs),
    /// Subsets whose boundary drift is below the barrier threshold.
    Barrier(DriftArgs),
    /// Mean absorption time over a range of family sizes.
    BenchAbsorption(BenchArgs),
    /// Check the suppressor constructions against their fixation and drift bounds.
    SuppressorAudit(AuditArgs),
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// complete, cycle, path, star, double_star, dir_suppressor, undir_suppressor or random_connected.
    #[arg(long)]
    family: Option<String>,
    /// Leaves per star, or levels of a suppressor.
    #[arg(long, value_parser = parse_rat)]
    k: Option<BigRational>,
    /// Width parameter of a suppressor.
    #[arg(long, value_parser = parse_rat)]
    a: Option<BigRational>,
    /// Vertex count of complete, cycle, path and random_connected.
    #[arg(long, value_parser = parse_rat)]
    n: Option<BigRational>,
    /// Edge probability of random_connected.
    #[arg(long, value_parser = parse_rat)]
    p: Option<BigRational>,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Graph text file, or `-` for stdin.
    #[arg(long, conflicts_with = "family")]
    graph: Option<String>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Group sidecar file naming vertex sets for `--start`.
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Write the group sidecar here.
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Naive,
    Active,
    Threshold,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Mutant fitness, as `p/q` or a decimal.
    #[arg(long, value_parser = parse_rat)]
    r: BigRational,
    /// `uniform`, a 1-based vertex id or a group name.
    #[arg(long, default_value = "uniform")]
    start: String,
    /// Naive counts idle steps; threshold stops once the potential reaches `--threshold`.
    #[arg(long, value_enum, default_value = "active")]
    mode: ModeArg,
    /// Potential threshold for `--mode threshold`.
    #[arg(long, value_parser = parse_rat)]
    threshold: Option<BigRational>,
    /// Stop each run after this many counted steps.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Independent replicas; replica i uses stream i of the seed.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    /// Write one CSV line per step of a single run here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Mutant fitness, as `p/q` or a decimal.
    #[arg(long, value_parser = parse_rat)]
    r: BigRational,
    /// Relative error, as `p/q` or a decimal.
    #[arg(long, value_parser = parse_rat)]
    eps: BigRational,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Mutant fitness, as `p/q` or a decimal.
    #[arg(long, value_parser = parse_rat)]
    r: BigRational,
    /// `uniform`, a 1-based vertex id or a group name.
    #[arg(long, default_value = "uniform")]
    start: String,
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Fitness fixing the barrier threshold.
    #[arg(long, value_parser = parse_rat, default_value = "2")]
    r: BigRational,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Comma-separated values of the family's size parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Mutant fitness, as `p/q` or a decimal.
    #[arg(long, value_parser = parse_rat)]
    r: BigRational,
    /// Replicas per size.
    #[arg(long, default_value_t = 1000)]
    runs: u64,
}

#[derive(Debug, Args)]
struct AuditArgs {
    /// Restrict to dir_suppressor or undir_suppressor.
    #[arg(long)]
    family: Option<String>,
    #[arg(long, value_parser = parse_rat, default_value = "2")]
    r: BigRational,
    #[arg(long)]
    a: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// States sampled for the exact sigma check.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Monte Carlo runs per start group for the directed check.
    #[arg(long, default_value_t = 10_000)]
    runs: u64,
}

fn parse_rat(s: &str) -> std::result::Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn as_usize(name: &str, q: &Option<BigRational>) -> Result<usize> {
    let q = q.as_ref().ok_or_else(|| usage(format!("--{name} is required for this family")))?;
    if !q.is_integer() {
        return Err(usage(format!("--{name} must be an integer")));
    }
    q.to_integer().to_usize().ok_or_else(|| usage(format!("--{name} is out of range")))
}

impl FamilyArgs {
    fn name(&self) -> Result<&str> {
        self.family.as_deref().ok_or_else(|| usage("--family or --graph is required"))
    }

    fn family(&self) -> Result<Family> {
        self.family_sized(None)
    }

    /// The family, with its size parameter replaced by `size` if given.
    fn family_sized(&self, size: Option<usize>) -> Result<Family> {
        let name = self.name()?;
        let get = |key: &str, q: &Option<BigRational>| match size {
            Some(s) => Ok(s),
            None => as_usize(key, q),
        };
        Ok(match name {
            "complete" => Family::Complete { n: get("n", &self.n)? },
            "cycle" => Family::Cycle { n: get("n", &self.n)? },
            "path" => Family::Path { n: get("n", &self.n)? },
            "star" => Family::Star { k: get("k", &self.k)? },
            "double_star" => Family::DoubleStar { k: get("k", &self.k)? },
            "dir_suppressor" => Family::DirSuppressor { k: get("k", &self.k)?, a: as_usize("a", &self.a)? },
            "undir_suppressor" => Family::UndirSuppressor { a: as_usize("a", &self.a)?, k: get("k", &self.k)? },
            "random_connected" => {
                let p = self.p.as_ref().ok_or_else(|| usage("--p is required for random_connected"))?;
                Family::RandomConnected { n: get("n", &self.n)?, p: to_f64(p) }
            }
            other => return Err(usage(format!("unknown family `{other}`"))),
        })
    }
}

type Groups = Vec<(String, Vec<usize>)>;

struct Loaded {
    graph: Graph,
    groups: Groups,
}

impl GraphArgs {
    fn load(&self, seed: u64, stdin: &Option<String>) -> Result<Loaded> {
        let (graph, mut groups) = match &self.graph {
            Some(path) => {
                let text = if path == "-" {
                    stdin.clone().unwrap_or_default()
                } else {
                    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?
                };
                (Graph::from_text(&text).map_err(input)?, Vec::new())
            }
            None => {
                let lg = generate(self.family.family()?, Some(seed)).map_err(input)?;
                let groups = lg.groups().to_vec();
                (lg.graph, groups)
            }
        };
        if let Some(path) = &self.groups {
            let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            groups = parse_groups(&text).map_err(input)?;
        }
        Ok(Loaded { graph, groups })
    }
}

impl Loaded {
    /// `None` for a uniform start, otherwise the named or numbered set.
    fn start_set(&self, which: &str) -> Result<Option<MutantSet>> {
        let n = self.graph.n();
        if which == "uniform" {
            return Ok(None);
        }
        if let Ok(id) = which.parse::<usize>() {
            if id == 0 || id > n {
                return Err(CliError::Input(format!("start vertex {id} is not in 1..={n}")));
            }
            return Ok(Some(MutantSet::singleton(n, id - 1)));
        }
        let (_, ids) = self
            .groups
            .iter()
            .find(|(name, _)| name == which)
            .ok_or_else(|| CliError::Input(format!("unknown start group `{which}`")))?;
        if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
            return Err(CliError::Input(format!("group `{which}` names vertex {} outside the graph", bad + 1)));
        }
        Ok(Some(MutantSet::from_vertices(n, ids.iter().copied())))
    }
}

/// Output gathered while the command runs on the worker pool.
#[derive(Default)]
struct Output {
    out: Vec<u8>,
    err: Vec<u8>,
}

impl Output {
    fn report(&mut self, columns: &[&str], records: &[Record], format: Format) -> Result<()> {
        emit_report(&mut self.out, columns, records, format).map_err(input)
    }
}

/// Parses `argv` (program name first), runs the command and returns its
/// exit code. Only `--graph -` reads `stdin`.
pub fn run_command<I, S>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut stdin_text = None;
    if reads_stdin(&cli.command) {
        let mut buf = String::new();
        if let Err(e) = stdin.read_to_string(&mut buf) {
            let _ = writeln!(stderr, "error: reading stdin: {e}");
            return 2;
        }
        stdin_text = Some(buf);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let mut output = Output::default();
    let result = pool.install(|| dispatch(&cli, &stdin_text, &mut output));
    let _ = stdout.write_all(&output.out);
    let _ = stderr.write_all(&output.err);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn reads_stdin(cmd: &Command) -> bool {
    let g = match cmd {
        Command::Info(g) => g,
        Command::Simulate(a) => &a.graph,
        Command::Estimate(a) => &a.graph,
        Command::Exact(a) => &a.graph,
        Command::Drift(a) | Command::Barrier(a) => &a.graph,
        _ => return false,
    };
    g.graph.as_deref() == Some("-")
}

fn dispatch(cli: &Cli, stdin: &Option<String>, out: &mut Output) -> Result<()> {
    let fmt = |default: Format| match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => default,
    };
    let seed = cli.seed;
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, seed, out),
        Command::Info(a) => cmd_info(a, seed, stdin, fmt(Format::Json), out),
        Command::Simulate(a) => cmd_simulate(a, seed, stdin, fmt(Format::Csv), out),
        Command::Estimate(a) => cmd_estimate(a, seed, stdin, fmt(Format::Json), out),
        Command::Exact(a) => cmd_exact(a, seed, stdin, fmt(Format::Json), out),
        Command::Drift(a) => cmd_drift(a, seed, stdin, false, fmt(Format::Csv), out),
        Command::Barrier(a) => cmd_drift(a, seed, stdin, true, fmt(Format::Csv), out),
        Command::BenchAbsorption(a) => cmd_bench(a, seed, fmt(Format::Csv), out),
        Command::SuppressorAudit(a) => audit::run(
            &audit::AuditConfig {
                family: a.family.clone(),
                r: a.r.clone(),
                a: a.a,
                k: a.k,
                samples: a.samples,
                runs: a.runs,
                seed,
            },
            fmt(Format::Csv),
            out,
        ),
    }
}

fn cmd_gen(a: &GenArgs, seed: u64, out: &mut Output) -> Result<()> {
    let lg = generate(a.family.family()?, Some(seed)).map_err(input)?;
    out.out.extend_from_slice(lg.graph.to_text().as_bytes());
    if let Some(path) = &a.groups {
        fs::write(path, write_groups(lg.groups())).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_info(a: &GraphArgs, seed: u64, stdin: &Option<String>, format: Format, out: &mut Output) -> Result<()> {
    let g = a.load(seed, stdin)?.graph;
    let phi_total = if g.is_directed() || g.min_degree() == 0 {
        None
    } else {
        Some(phi(&g, &MutantSet::full(g.n())).map_err(input)?)
    };
    let cols = ["n", "m", "directed", "min_degree", "max_degree", "average_degree", "connected", "phi_total"];
    let rec: Record = vec![
        g.n().into(),
        g.m().into(),
        g.is_directed().into(),
        g.min_degree().into(),
        g.max_degree().into(),
        g.average_degree().into(),
        g.is_process_connected().into(),
        phi_total.into(),
    ];
    out.report(&cols, &[rec], format)
}

fn check_fitness(r: &BigRational) -> Result<()> {
    if r <= &BigRational::zero() {
        return Err(usage("--r must be positive"));
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, stdin: &Option<String>, format: Format, out: &mut Output) -> Result<()> {
    check_fitness(&a.r)?;
    if a.runs == 0 {
        return Err(usage("--runs must be positive"));
    }
    if a.trace.is_some() && a.runs != 1 {
        return Err(usage("--trace needs --runs 1"));
    }
    let mode = match (a.mode, &a.threshold) {
        (ModeArg::Naive, None) => RunMode::ToAbsorptionNaive,
        (ModeArg::Active, None) => RunMode::ToAbsorptionActive,
        (ModeArg::Threshold, Some(p)) => RunMode::ToThreshold(p.clone()),
        (ModeArg::Threshold, None) => return Err(usage("--mode threshold needs --threshold")),
        (_, Some(_)) => return Err(usage("--threshold only applies to --mode threshold")),
    };
    let loaded = a.graph.load(seed, stdin)?;
    let start = match loaded.start_set(&a.start)? {
        None => RunStart::Uniform,
        Some(s) => RunStart::Set(s),
    };
    let sim = Simulator::new(&loaded.graph, to_f64(&a.r)).map_err(input)?;

    let outcomes = if let Some(path) = &a.trace {
        let file = fs::File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        let mut io_err: Option<io::Error> = None;
        let header = writeln!(w, "step,spawner,target,n_mut,phi_num_scaled");
        let mut sink = |t: &TraceRecord| {
            if io_err.is_none() {
                let line = writeln!(w, "{},{},{},{},{}", t.step, t.spawner + 1, t.target + 1, t.n_mut, t.phi_scaled);
                io_err = line.err();
            }
        };
        let mut rng = replica_rng(seed, 0);
        let outcome = sim.run(&start, &mode, a.max_steps, &mut rng, seed, Some(&mut sink)).map_err(input)?;
        header.and(io_err.map_or(Ok(()), Err)).and_then(|_| w.flush()).map_err(input)?;
        vec![outcome]
    } else {
        (0..a.runs)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(seed, i);
                sim.run(&start, &mode, a.max_steps, &mut rng, seed, None)
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(input)?
    };

    let d = BigRational::from_integer(sim.lcm().d().clone().into());
    let cols = ["run", "result", "active_steps", "naive_steps", "final_mutants", "final_phi"];
    let records: Vec<Record> = outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            vec![
                i.into(),
                o.result.name().into(),
                o.active_steps.into(),
                o.naive_steps.into(),
                o.final_mutants.into(),
                (BigRational::from_integer(o.final_phi_scaled.clone().into()) / &d).into(),
            ]
        })
        .collect();
    out.report(&cols, &records, format)
}

fn cmd_estimate(a: &EstimateArgs, seed: u64, stdin: &Option<String>, format: Format, out: &mut Output) -> Result<()> {
    if a.r <= BigRational::one() {
        return Err(usage("estimate needs --r > 1"));
    }
    if a.eps <= BigRational::zero() || a.eps >= BigRational::one() {
        return Err(usage("--eps must lie strictly between 0 and 1"));
    }
    let g = a.graph.load(seed, stdin)?.graph;
    let est = estimate_fixation(&g, &a.r, &a.eps, seed).map_err(input)?;
    let (n_runs, p_num, p_den) = match &est.params {
        Some(p) => (Value::from(p.n_runs), p.p.numer().to_u64().into(), p.p.denom().to_u64().into()),
        None => (Value::from(0u64), Value::Null, Value::Null),
    };
    let cols = ["value", "n_runs", "p_threshold_num", "p_threshold_den", "total_active_steps", "capped", "seed"];
    let rec: Record =
        vec![est.value.into(), n_runs, p_num, p_den, est.total_active_steps.into(), est.capped.into(), seed.into()];
    out.report(&cols, &[rec], format)?;
    if est.value.is_none() {
        return Err(CliError::Estimator("two of three attempts exceeded the step cap".into()));
    }
    Ok(())
}

fn cmd_exact(a: &ExactArgs, seed: u64, stdin: &Option<String>, format: Format, out: &mut Output) -> Result<()> {
    check_fitness(&a.r)?;
    let loaded = a.graph.load(seed, stdin)?;
    let start = match loaded.start_set(&a.start)? {
        None => Start::Uniform,
        Some(s) => Start::Set(s),
    };
    let fix = solve_fixation(&loaded.graph, &a.r).map_err(input)?;
    let time = solve_absorption_time(&loaded.graph, &a.r).map_err(input)?;
    let cols = ["fixation", "absorption_time", "n_states", "residual"];
    let rec: Record = vec![
        fix.at(&start).into(),
        time.at(&start).into(),
        fix.n_states().into(),
        fix.residual.max(time.residual).into(),
    ];
    out.report(&cols, &[rec], format)
}

fn cmd_drift(
    a: &DriftArgs,
    seed: u64,
    stdin: &Option<String>,
    only_barriers: bool,
    format: Format,
    out: &mut Output,
) -> Result<()> {
    let g = a.graph.load(seed, stdin)?.graph;
    let n = g.n();
    if n > SUBSET_LIST_CAP {
        return Err(CliError::Input(format!("subset listing needs n ≤ {SUBSET_LIST_CAP}, got {n}")));
    }
    if n < 2 {
        return Err(CliError::Input("graph needs at least two vertices".into()));
    }
    let consts = if only_barriers || a.r > BigRational::one() {
        Some(ProcessConstants::new(a.r.clone()).map_err(|e| usage(e.to_string()))?)
    } else {
        None
    };
    let full = (1u64 << n) - 1;
    let rows = (1..full)
        .into_par_iter()
        .map(|mask| {
            let s = MutantSet::from_mask(n, mask);
            let (drift, barrier) = match &consts {
                Some(c) => {
                    let check = is_barrier(&g, c, &s)?;
                    (check.drift, Some(check.is_barrier))
                }
                None => (boundary_drift(&g, &s)?, None),
            };
            Ok((mask, drift, barrier))
        })
        .collect::<std::result::Result<Vec<_>, moran::potential::PotentialError>>()
        .map_err(input)?;
    let records: Vec<Record> = rows
        .into_iter()
        .filter(|(_, _, b)| !only_barriers || *b == Some(true))
        .map(|(mask, drift, b)| {
            vec![
                mask.into(),
                drift.numer().magnitude().clone().into(),
                drift.denom().magnitude().clone().into(),
                b.into(),
            ]
        })
        .collect();
    out.report(&["subset_bitmask", "drift_num", "drift_den", "is_barrier"], &records, format)
}

fn cmd_bench(a: &BenchArgs, seed: u64, format: Format, out: &mut Output) -> Result<()> {
    check_fitness(&a.r)?;
    if a.runs == 0 {
        return Err(usage("--runs must be positive"));
    }
    let r = to_f64(&a.r);
    let mut rows = Vec::new();
    for &size in &a.sizes {
        let lg = generate(a.family.family_sized(Some(size))?, Some(seed)).map_err(input)?;
        let t = mean_absorption_time(&lg.graph, r, a.runs, seed).map_err(input)?;
        rows.push((size, lg.graph.n(), t));
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|(_, n, t)| (*n as f64, t.mean)).collect();
    let slope = loglog_slope(&points);
    let cols = ["size", "n", "runs", "mean", "stderr", "loglog_slope"];
    let records: Vec<Record> = rows
        .iter()
        .map(|(size, n, t)| {
            vec![(*size).into(), (*n).into(), t.runs.into(), t.mean.into(), t.stderr.into(), slope.into()]
        })
        .collect();
    out.report(&cols, &records, format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(usage("x").exit_code(), 1);
        assert_eq!(input("x").exit_code(), 2);
        assert_eq!(CliError::Estimator("x".into()).exit_code(), 3);
        assert_eq!(CliError::Audit("x".into()).exit_code(), 4);
    }

    #[test]
    fn family_size_override() {
        let f = FamilyArgs { family: Some("double_star".into()), k: None, a: None, n: None, p: None };
        assert_eq!(f.family_sized(Some(5)).unwrap(), Family::DoubleStar { k: 5 });
        assert!(matches!(f.family(), Err(CliError::Usage(_))));
    }
}

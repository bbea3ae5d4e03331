use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use posg_core::evaluate::{evaluate_occupancy, simulate};
use posg_core::format::sig10;
use posg_core::occupancy::OccupancyState;
use posg_core::policies::{JointPolicy, PureTreeSet};
use posg_core::solve::{solve_at, zero_sum_concave_family, Caps};
use posg_core::verify::{all_passed, belief_grid, run_suite, VerifyConfig};
use posg_core::{parse_posg, Criterion, Error, Model};

#[derive(Parser)]
#[command(name = "posg", version, about = "Exact planning and verification for small partially observable stochastic games")]
struct Cli {
    /// Seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver tolerance; for `verify`, the tolerance of solver-mediated checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Largest number of pure policies enumerated per agent.
    #[arg(long, global = true)]
    cap: Option<u128>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Path to a model file.
    model: PathBuf,
    /// Rewrites the rewards to match the criterion before solving.
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Overrides the planning horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Overrides the initial belief, e.g. "1 0".
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parses a model and prints its dimensions.
    Parse {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Solves the game at the initial belief.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Evaluates a joint pure policy exactly and optionally by simulation.
    Evaluate {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated pure policy index per agent.
        #[arg(long)]
        pure: Option<String>,
        /// Number of simulated episodes.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Runs verification suites and prints one JSON record per property.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated suites: sufficiency, slave, master, lipschitz, all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Writes the optimal value over a belief grid of a two-state model as CSV.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Output file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Core(Error),
    Io(String),
    BadSweep(String),
    Properties,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Properties => 1,
            Failure::Core(Error::EnumerationTooLarge { .. }) => 3,
            Failure::Core(Error::UnknownSuite(_)) => 4,
            Failure::BadSweep(_) => 5,
            Failure::Core(_) | Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) | Failure::BadSweep(m) => m.clone(),
            Failure::Properties => "one or more properties failed".into(),
        }
    }
}

fn load(args: &ModelArgs) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(&args.model)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", args.model.display())))?;
    let mut model: Model = parse_posg(&text)?;
    if let Some(c) = args.criterion {
        model = model.with_criterion(c)?;
    }
    if let Some(h) = args.horizon {
        model = model.with_horizon(h)?;
    }
    if let Some(start) = &args.start {
        let belief = start
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad --start value: {e}")))?;
        model = model.with_start(belief)?;
    }
    Ok(model)
}

fn criterion_of(model: &Model) -> Result<Criterion, Failure> {
    Ok(match model.declared_criterion() {
        Some(c) => c,
        None => model.classify()?,
    })
}

struct Globals {
    seed: u64,
    tolerance: Option<f64>,
    caps: Caps,
}

fn cmd_parse(args: &ModelArgs) -> Result<String, Failure> {
    let m = load(args)?;
    let mut out = String::new();
    writeln!(out, "agents: {}", m.n_agents()).unwrap();
    writeln!(out, "states: {}", m.n_states()).unwrap();
    for i in 0..m.n_agents() {
        writeln!(out, "agent {}: {} actions, {} observations", i + 1, m.n_actions(i), m.n_agent_obs(i)).unwrap();
    }
    writeln!(out, "public observations: {}", m.n_public_obs()).unwrap();
    writeln!(out, "discount: {}", m.discount()).unwrap();
    writeln!(out, "horizon: {}", m.horizon()).unwrap();
    writeln!(out, "criterion: {}", criterion_of(&m)?).unwrap();
    Ok(out)
}

fn cmd_solve(args: &ModelArgs, g: &Globals) -> Result<String, Failure> {
    let m = load(args)?;
    let criterion = criterion_of(&m)?;
    let started = Instant::now();
    let s0 = OccupancyState::initial(&m);
    let eq = solve_at(&m, criterion, &s0, g.caps, g.tolerance.unwrap_or(1e-9))?;
    let mut report: serde_json::Value = serde_json::from_str(&eq.to_json(&m)).expect("valid report");
    report["runtime_ms"] = serde_json::json!(started.elapsed().as_secs_f64() * 1e3);
    Ok(format!("{report}\n"))
}

fn cmd_evaluate(args: &ModelArgs, pure: Option<&str>, episodes: Option<usize>, g: &Globals) -> Result<String, Failure> {
    let m = load(args)?;
    let n = m.n_agents();
    let indices: Vec<usize> = match pure {
        Some(text) => text
            .split(',')
            .map(|v| v.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("bad --pure value: {e}")))?,
        None => vec![0; n],
    };
    if indices.len() != n {
        return Err(Error::InvalidArgument(format!("--pure needs {n} indices")).into());
    }
    let h = m.horizon();
    let mut trees = Vec::with_capacity(n);
    for (i, &k) in indices.iter().enumerate() {
        let set = PureTreeSet::for_agent(&m, i, h);
        let count = set.count(h);
        if count > g.caps.per_agent {
            return Err(Error::EnumerationTooLarge { count: count.to_string(), cap: g.caps.per_agent }.into());
        }
        if k as u128 >= count {
            return Err(Error::InvalidArgument(format!("agent {} has {count} pure policies", i + 1)).into());
        }
        trees.push(set.tree(i, h, k));
    }
    let policy = JointPolicy::new(trees)?;
    let s0 = OccupancyState::initial(&m);
    let mut out = String::from("agent,value\n");
    for i in 0..n {
        writeln!(out, "{},{}", i + 1, sig10(evaluate_occupancy(&m, &policy, &s0, i)?)).unwrap();
    }
    if let Some(e) = episodes {
        out.push_str(&simulate(&m, &policy, e, g.seed)?.to_csv());
    }
    Ok(out)
}

fn cmd_verify(args: &ModelArgs, suite: &str, samples: usize, g: &Globals) -> Result<String, Failure> {
    let m = load(args)?;
    let mut config = VerifyConfig { samples, seed: g.seed, caps: g.caps, criterion: args.criterion, ..Default::default() };
    if let Some(t) = g.tolerance {
        config.solver_tolerance = t;
    }
    let fixture = args.model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let reports = run_suite(&m, fixture, suite, &config)?;
    let mut out = String::new();
    for r in &reports {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    print!("{out}");
    if all_passed(&reports) {
        Ok(String::new())
    } else {
        Err(Failure::Properties)
    }
}

fn cmd_sweep(args: &ModelArgs, grid: usize, output: Option<&Path>, g: &Globals) -> Result<String, Failure> {
    if grid < 2 {
        return Err(Failure::BadSweep(format!("grid must have at least 2 points, got {grid}")));
    }
    let m = load(args)?;
    if m.n_states() != 2 {
        return Err(Failure::BadSweep(format!("grid sweeps need a two-state model, found {} states", m.n_states())));
    }
    let criterion = criterion_of(&m)?;
    let tolerance = g.tolerance.unwrap_or(1e-9);
    let points: Vec<OccupancyState<f64>> =
        belief_grid(grid).iter().map(|b| OccupancyState::from_belief(&m, b)).collect();
    let mut csv = String::new();
    if criterion == Criterion::ZeroSum {
        let family = zero_sum_concave_family(&m, &points, g.caps, tolerance)?;
        csv.push_str("belief,value");
        for k in 0..family.mixtures.len() {
            write!(csv, ",component{}", k + 1).unwrap();
        }
        csv.push('\n');
        for ((b, v), comps) in belief_grid(grid).iter().zip(&family.values).zip(&family.components) {
            write!(csv, "{},{}", sig10(b[0]), sig10(*v)).unwrap();
            for c in comps {
                write!(csv, ",{}", sig10(*c)).unwrap();
            }
            csv.push('\n');
        }
    } else {
        csv.push_str("belief,value\n");
        for (b, s) in belief_grid(grid).iter().zip(&points) {
            let v = solve_at(&m, criterion, s, g.caps, tolerance)?.value();
            writeln!(csv, "{},{}", sig10(b[0]), sig10(v)).unwrap();
        }
    }
    match output {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut caps = Caps::default();
    if let Some(cap) = cli.cap {
        caps.per_agent = cap;
    }
    let g = Globals { seed: cli.seed, tolerance: cli.tolerance, caps };
    let result = match &cli.command {
        Command::Parse { model } => cmd_parse(model),
        Command::Solve { model } => cmd_solve(model, &g),
        Command::Evaluate { model, pure, episodes } => cmd_evaluate(model, pure.as_deref(), *episodes, &g),
        Command::Verify { model, suite, samples } => cmd_verify(model, suite, *samples, &g),
        Command::Sweep { model, grid, output } => cmd_sweep(model, *grid, output.as_deref(), &g),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

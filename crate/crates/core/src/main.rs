use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use parcbs::dpecbs::DistributionStrategy;
use parcbs::ecbs::SolveStatus;
use parcbs::grid::GridMap;
use parcbs::harness::{
    parse_plan, run_bench, serialize_plan, summarize, validate_solution, write_summary, AlgoConfig,
    Algorithm, BenchConfig, BenchRecord, Plan,
};
use parcbs::path::makespan;
use parcbs::scenario::{
    default_corner_region, gen_corner_rearrangement, gen_random_obstacle_map, gen_uniform_random,
    parse_scen, serialize_scen, Instance,
};

#[derive(Parser)]
#[command(version, about = "Bounded-suboptimal multi-robot path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance given by a map and a scenario file
    Solve(SolveArgs),
    /// Generate a scenario file
    #[command(subcommand)]
    Gen(GenCommand),
    /// Check a plan file against an instance
    Validate(ValidateArgs),
    /// Run a benchmark suite and write one CSV row per run
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    /// Use the first N rows of the scenario (default: all)
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long, default_value = "ecbs")]
    algo: Algorithm,
    /// Suboptimality factor
    #[arg(long, default_value_t = 2.0)]
    w: f64,
    /// Wall-clock limit in seconds
    #[arg(long, default_value_t = 120.0)]
    timeout: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Child routing for dp-ecbs: random or deterministic
    #[arg(long, default_value = "deterministic")]
    strategy: DistributionStrategy,
    /// Conflict count that triggers a parallel bypass phase (default: workers)
    #[arg(long)]
    alpha: Option<usize>,
    /// Run the parallel bypass phase on the root node only
    #[arg(long)]
    pb_root_only: bool,
    /// Disable single-conflict bypass
    #[arg(long)]
    no_bypass: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plan file to write
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON to write
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Leave wall time out of the stats so reruns compare equal
    #[arg(long)]
    omit_timing: bool,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Uniformly random starts and goals on a map, given or generated
    Random(GenRandomArgs),
    /// Starts and goals packed into the lower-left corner of an empty square map
    Corner(GenCornerArgs),
}

#[derive(Args)]
struct GenRandomArgs {
    /// Existing map; without it a random-obstacle map is generated
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    width: u32,
    #[arg(long, default_value_t = 32)]
    height: u32,
    /// Obstacle fraction of a generated map
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    map_seed: u64,
    #[arg(long)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenCornerArgs {
    #[arg(long)]
    side: u32,
    /// Corner square side (default: ceil(sqrt(2 * agents)))
    #[arg(long)]
    region: Option<u32>,
    #[arg(long)]
    agents: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    scen: PathBuf,
    /// Robots to check (default: as many as the plan has)
    #[arg(long)]
    agents: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML suite description
    #[arg(long)]
    config: PathBuf,
    /// Per-run CSV; a summary goes next to it as <name>.summary.csv
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &FsPath) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &FsPath, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_map(path: &FsPath) -> Result<Arc<GridMap>> {
    let map =
        GridMap::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Arc::new(map))
}

fn load_instance(map_path: &FsPath, scen: &FsPath, agents: Option<usize>) -> Result<Instance> {
    let map = load_map(map_path)?;
    let pairs =
        parse_scen(&read(scen)?, &map).with_context(|| format!("parsing {}", scen.display()))?;
    let n = agents.unwrap_or(pairs.len());
    if n > pairs.len() {
        bail!(
            "{} has {} rows, {n} robots requested",
            scen.display(),
            pairs.len()
        );
    }
    Ok(Instance::from_pairs(map, &pairs[..n])?)
}

fn file_stem(path: &FsPath) -> String {
    path.file_stem()
        .map_or_else(|| "map".into(), |s| s.to_string_lossy().into_owned())
}

fn solve(args: SolveArgs) -> Result<ExitCode> {
    if args.w.is_nan() || args.w < 1.0 {
        bail!("--w must be at least 1");
    }
    if !args.timeout.is_finite() || args.timeout <= 0.0 {
        bail!("--timeout must be positive and finite");
    }
    if args.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let instance = load_instance(&args.map, &args.scen, args.agents)?;
    let cfg = AlgoConfig {
        algo: args.algo,
        workers: args.workers,
        strategy: args.strategy,
        alpha: args.alpha,
        root_only: args.pb_root_only,
        bypass: !args.no_bypass,
    };
    let timeout = Duration::from_secs_f64(args.timeout);
    let params = cfg.params(args.w, timeout, args.seed);
    let outcome = cfg.run(&instance, &params)?;
    let map_name = file_stem(&args.map);
    let record = BenchRecord::from_outcome(
        &map_name,
        args.seed,
        &cfg,
        args.w,
        timeout,
        &instance,
        &outcome,
        args.omit_timing,
    );

    eprintln!(
        "{}: {} robots, {}, soc {}, soc_lb {}, {} expansions, {:.3}s",
        cfg.algo,
        instance.num_agents(),
        outcome.status.as_str(),
        outcome.soc.map_or("-".into(), |s| s.to_string()),
        outcome.soc_lb,
        outcome.expansions,
        outcome.wall_time.as_secs_f64(),
    );
    if let Some(path) = &args.stats {
        write(path, &(serde_json::to_string_pretty(&record)? + "\n"))?;
    }
    if let (Some(path), Some(solution)) = (&args.out, &outcome.solution) {
        let mut plan = Plan::from_paths(instance.map(), solution);
        let meta = [
            ("algorithm", cfg.algo.to_string()),
            ("map", map_name),
            ("w", args.w.to_string()),
            ("workers", cfg.workers.to_string()),
            ("soc", outcome.soc.unwrap_or_default().to_string()),
            ("soc_lb", outcome.soc_lb.to_string()),
            ("makespan", makespan(solution).to_string()),
        ];
        plan.meta.extend(meta.map(|(k, v)| (k.to_string(), v)));
        if let Some(s) = cfg.strategy_label() {
            plan.meta.insert("strategy".into(), s.as_str().into());
        }
        if let Some(a) = cfg.alpha_label() {
            plan.meta.insert("alpha".into(), a.to_string());
        }
        write(path, &serialize_plan(&plan))?;
    }
    Ok(match outcome.status {
        SolveStatus::Solved => ExitCode::SUCCESS,
        _ => ExitCode::from(2),
    })
}

fn gen(cmd: GenCommand) -> Result<ExitCode> {
    let (instance, out, map_written) = match cmd {
        GenCommand::Random(a) => {
            let (map, written) = match &a.map {
                Some(path) => (load_map(path)?, None),
                None => {
                    if !(0.0..1.0).contains(&a.density) {
                        bail!("--density must be in [0, 1)");
                    }
                    let map = gen_random_obstacle_map(a.width, a.height, a.density, a.map_seed);
                    (Arc::new(map), Some(a.out.with_extension("map")))
                }
            };
            (gen_uniform_random(map, a.agents, a.seed)?, a.out, written)
        }
        GenCommand::Corner(a) => {
            let region = a
                .region
                .unwrap_or_else(|| default_corner_region(a.agents, a.side));
            let instance = gen_corner_rearrangement(a.side, region, a.agents, a.seed)?;
            let map_path = a.out.with_extension("map");
            (instance, a.out, Some(map_path))
        }
    };
    let map_name = match &map_written {
        Some(path) => {
            write(path, &instance.map().to_map_string())?;
            eprintln!("wrote {}", path.display());
            path.file_name().unwrap().to_string_lossy().into_owned()
        }
        None => format!("{}.map", file_stem(&out)),
    };
    write(&out, &serialize_scen(&instance.to_scen_entries(&map_name)))?;
    eprintln!("wrote {} ({} robots)", out.display(), instance.num_agents());
    Ok(ExitCode::SUCCESS)
}

fn validate(args: ValidateArgs) -> Result<ExitCode> {
    let map = load_map(&args.map)?;
    let plan = parse_plan(&read(&args.plan)?)
        .with_context(|| format!("parsing {}", args.plan.display()))?;
    let paths = plan.to_paths(&map)?;
    let pairs = parse_scen(&read(&args.scen)?, &map)?;
    let n = args.agents.unwrap_or(paths.len());
    if n > pairs.len() {
        bail!(
            "{} has {} rows, {n} robots requested",
            args.scen.display(),
            pairs.len()
        );
    }
    let instance = Instance::from_pairs(map, &pairs[..n])?;
    let report = validate_solution(&instance, &paths)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let config = BenchConfig::parse(&read(&args.config)?)?;
    let base = args.config.parent().unwrap_or(FsPath::new("."));
    let file =
        fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut wtr = csv::Writer::from_writer(file);
    let total = config.num_cells();
    let mut done = 0;
    let mut failed = None;
    let records = run_bench(&config, base, |r| {
        done += 1;
        eprintln!(
            "[{done}/{total}] {} n={} seed={} {} workers={}: {:?}",
            r.map, r.agents, r.seed, r.algorithm, r.workers, r.status
        );
        // Rows are flushed as they come so an interrupted suite keeps them.
        if failed.is_none() {
            if let Err(e) = wtr.serialize(r).and_then(|()| Ok(wtr.flush()?)) {
                failed = Some(e);
            }
        }
    });
    if let Some(e) = failed {
        return Err(e).with_context(|| format!("writing {}", args.out.display()));
    }
    let summary_path = args.out.with_extension("summary.csv");
    let file = fs::File::create(&summary_path)?;
    write_summary(file, &summarize(&records))?;
    eprintln!(
        "wrote {} and {}",
        args.out.display(),
        summary_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Gen(c) => gen(c),
        Command::Validate(a) => validate(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

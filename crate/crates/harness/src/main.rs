use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ibrl_core::discrete::plan_discrete;
use ibrl_core::environments::build_environment;
use ibrl_core::opponent::{LikelihoodTable, ParticleSet};
use ibrl_core::planner::{plan_with_beliefs, sample_reachable_beliefs, PlanMode, PolicyBundle};
use ibrl_core::rng::rng_from;
use ibrl_harness::agents::{belief_seed, particle_seed};
use ibrl_harness::config::RawConfig;
use ibrl_harness::{evaluate, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "ibrl", version, about = "Bayes-optimal planning against parametric opponents")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan for an environment and save the policy bundle.
    Plan(PlanArgs),
    /// Run the evaluation protocol from a config file.
    Eval(EvalArgs),
    /// Like `eval`, then print the comparison table with significance tests.
    Compare(EvalArgs),
    /// Print a bundle's metadata.
    Inspect { bundle: PathBuf },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    env: String,
    /// Planning horizon (number of sweeps).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    /// Sampled beliefs per state.
    #[arg(long)]
    beliefs: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    rollouts: Option<usize>,
    /// Use exact backups instead of point-based ones.
    #[arg(long)]
    exact: bool,
    /// Plan with the indicator basis (discrete belief MDP) instead.
    #[arg(long, conflicts_with = "exact")]
    discrete: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seeds.master`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    opponents: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated agent names.
    #[arg(long, value_delimiter = ',')]
    agents: Option<Vec<String>>,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<HarnessError>().map_or(3, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Plan(args) => plan(args),
        Command::Eval(args) => eval(args, false),
        Command::Compare(args) => eval(args, true),
        Command::Inspect { bundle } => inspect(&bundle),
    }
}

fn plan(args: PlanArgs) -> anyhow::Result<()> {
    let env = build_environment(&args.env).map_err(|e| HarnessError::Config(e.to_string()))?;
    let model = env.model.as_ref();
    let mut config = env.defaults.planner.clone();
    config.horizon = args.k.unwrap_or(config.horizon);
    config.per_state_count = args.beliefs.unwrap_or(config.per_state_count);
    config.depth = args.depth.unwrap_or(config.depth);
    config.rollouts = args.rollouts.unwrap_or(config.rollouts);
    config.belief_seed = belief_seed(args.seed);
    if args.exact {
        config.mode = PlanMode::Exact;
    }
    let n = args.particles.unwrap_or(env.defaults.num_particles);
    if n == 0 || config.per_state_count == 0 {
        return Err(HarnessError::Config("particles and beliefs must be at least 1".into()).into());
    }

    let particles = ParticleSet::draw(model, n, particle_seed(args.seed)).map_err(HarnessError::from)?;
    let table = LikelihoodTable::build(model, &particles).map_err(HarnessError::from)?;
    let mut rng = rng_from(config.belief_seed, &[]);
    let beliefs = sample_reachable_beliefs(&env.game, model, &table, &config.sampling(), &mut rng)
        .map_err(HarnessError::from)?;
    let (bundle, seconds) = if args.discrete {
        let out = plan_discrete(&env.game, model, &particles, &table, beliefs, &config).map_err(HarnessError::from)?;
        (out.bundle, out.sweep_seconds)
    } else {
        let out = plan_with_beliefs(&env.game, model, &particles, &table, beliefs, &config)
            .map_err(HarnessError::from)?;
        (out.bundle, out.sweep_seconds)
    };
    bundle.save(&args.out).map_err(HarnessError::from)?;
    println!(
        "planned {} with {} sweeps in {:.3} s; wrote {}",
        env.name,
        bundle.metadata.sweeps,
        seconds.last().copied().unwrap_or(0.0),
        args.out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs, compare: bool) -> anyhow::Result<()> {
    let mut raw = RawConfig::load(&args.config)?;
    if args.seed.is_some() {
        raw.seeds.master = args.seed;
    }
    if args.opponents.is_some() {
        raw.protocol.opponents = args.opponents;
    }
    if args.episodes.is_some() {
        raw.protocol.episodes = args.episodes;
    }
    if args.steps.is_some() {
        raw.protocol.steps = args.steps;
    }
    if args.agents.is_some() {
        raw.agents.list = args.agents;
    }
    if args.out_dir.is_some() {
        raw.output.dir = args.out_dir;
    }
    let config = ExperimentConfig::from_raw(raw)?;
    let result = evaluate(&config)?;
    let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    result.write_outputs(&dir)?;
    if compare {
        print!("{}", result.summary_text());
    } else {
        for s in &result.summaries {
            println!("{:<14} {:>12.3} ± {:.3}", s.agent.name(), s.mean, s.std_error);
        }
    }
    println!("results written to {}", dir.display());
    Ok(())
}

fn inspect(path: &std::path::Path) -> anyhow::Result<()> {
    let b = PolicyBundle::load(path).map_err(HarnessError::from)?;
    let m = &b.metadata;
    println!("variant           {:?}", b.variant);
    println!("model             {}", b.model_name);
    let hash: String = b.game_hash.iter().map(|x| format!("{x:02x}")).collect();
    println!("game hash         {hash}");
    println!(
        "dimensions        |S| = {}, |U| = {}, |V| = {}, param dim = {}",
        b.num_states, b.num_agent_actions, b.num_opponent_actions, b.param_dim
    );
    println!("particles         {}", b.num_particles());
    println!("mode              {:?}", m.mode);
    println!("horizon k         {} ({} sweeps run)", m.horizon, m.sweeps);
    println!("particle seed     {}", m.particle_seed);
    println!("belief seed       {}", m.belief_seed);
    println!(
        "belief sampling   {} per state, depth {}, {} rollouts",
        m.per_state_count, m.depth, m.rollouts
    );
    let sizes: Vec<usize> = b.policies.iter().map(|p| p.len()).collect();
    println!(
        "alpha functions   {} total, at most {} per state",
        sizes.iter().sum::<usize>(),
        sizes.iter().max().copied().unwrap_or(0)
    );
    if let Some(last) = m.sweep_log.last() {
        println!("final sup-change  {last:.3e}");
    }
    Ok(())
}

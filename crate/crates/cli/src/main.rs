//! `evostoch`: evolutionary portfolio selection, scenario clustering and
//! scenario tree generation from the command line.
//!
//! Exit codes: 0 on success, 1 on data or validation errors, 2 on usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evostoch::cluster::{self, ClusteringSpec};
use evostoch::ea::{log_ndjson, GenerationRecord};
use evostoch::io::{
    self, tree_nodes, ClusterDocument, OutputScenario, PortfolioDocument, TreeDocument, FORMAT_VERSION,
};
use evostoch::portfolio::{self, ConstraintSet, MaxHoldings, MaxWeight};
use evostoch::tree::{self, TreeShape, TreeSpec};
use evostoch::{Center, Distance, EaConfig, ObjectiveSpec, RiskMeasure};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "evostoch", version, about = "Evolutionary optimization for stochastic programming")]
struct Cli {
    /// Print the generation log to standard error.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Risk-return portfolio selection over a scenario set.
    Portfolio(PortfolioArgs),
    /// Reduce a scenario set to k representative scenarios.
    Cluster(ClusterArgs),
    /// Build a multi-stage scenario tree from sampled paths.
    Tree(TreeArgs),
}

#[derive(Args, Debug)]
struct EaArgs {
    /// Master seed; identical seeds give identical output.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Maximum number of generations.
    #[arg(long, default_value_t = 500)]
    generations: usize,
    /// Population size.
    #[arg(long, default_value_t = 100)]
    pop: usize,
    /// Offspring per generation (defaults to the population size).
    #[arg(long)]
    offspring: Option<usize>,
    /// Stop after this many generations without improvement.
    #[arg(long, default_value_t = 100)]
    stagnation: usize,
    #[arg(long, default_value_t = 0.1)]
    mutation_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    crossover_rate: f64,
}

impl EaArgs {
    fn config(&self) -> EaConfig {
        EaConfig {
            population_size: self.pop,
            offspring_count: self.offspring.unwrap_or(self.pop),
            max_generations: self.generations,
            stagnation_limit: self.stagnation,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            master_seed: self.seed,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MeasureArg {
    Stddev,
    Variance,
    Mad,
    Cvar,
}

#[derive(Args, Debug)]
struct PortfolioArgs {
    /// Scenario CSV: one scenario per row, one column per asset, optional `prob` column.
    #[arg(long)]
    scenarios: PathBuf,
    /// Risk aversion.
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, value_enum, default_value_t = MeasureArg::Stddev)]
    risk_measure: MeasureArg,
    /// CVaR tail probability.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Number of budget buckets.
    #[arg(long, default_value_t = 10)]
    buckets: usize,
    /// Fixed number of selected assets.
    #[arg(long)]
    cardinality: Option<usize>,
    /// Penalize portfolios holding more assets than this.
    #[arg(long)]
    max_holdings: Option<usize>,
    /// Penalize weights above this bound.
    #[arg(long)]
    max_weight: Option<f64>,
    /// Penalty per unit of constraint violation.
    #[arg(long, default_value_t = 1.0)]
    penalty: f64,
    /// Also run this many further seeds and report how far apart the optima are.
    #[arg(long, default_value_t = 0)]
    dispersion_runs: u64,
    /// Output JSON file (standard output if absent).
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    ea: EaArgs,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Scenario CSV: one scenario per row, optional `prob` column.
    #[arg(long)]
    scenarios: PathBuf,
    /// Number of output scenarios.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "l1", value_parser = parse_distance)]
    distance: Distance,
    #[arg(long, default_value = "mean", value_parser = parse_center)]
    center: Center,
    /// Weight cluster distances by output probability.
    #[arg(long)]
    weighted: bool,
    /// Comma-separated per-dimension distance weights.
    #[arg(long, value_delimiter = ',')]
    dim_weights: Option<Vec<f64>>,
    /// Output file; `.csv` writes the scenario table, anything else JSON.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    ea: EaArgs,
}

#[derive(Args, Debug)]
struct TreeArgs {
    /// Path CSV with columns stage2..stageT and an optional `prob` column.
    #[arg(long)]
    paths: PathBuf,
    /// Node counts for stages 2..T, e.g. `10,40`.
    #[arg(long, value_parser = parse_shape)]
    shape: TreeShape,
    #[arg(long, default_value = "median", value_parser = parse_center)]
    center: Center,
    #[arg(long, default_value = "l1", value_parser = parse_distance)]
    distance: Distance,
    /// Do not weight path distances by path probability.
    #[arg(long)]
    unweighted: bool,
    /// Value of the deterministic root node.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    root_value: f64,
    /// Output JSON file (standard output if absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a Graphviz rendering of the tree.
    #[arg(long)]
    dot: Option<PathBuf>,
    #[command(flatten)]
    ea: EaArgs,
}

fn parse_distance(s: &str) -> Result<Distance, String> {
    s.parse().map_err(|e: evostoch::Error| e.to_string())
}

fn parse_center(s: &str) -> Result<Center, String> {
    s.parse().map_err(|e: evostoch::Error| e.to_string())
}

fn parse_shape(s: &str) -> Result<TreeShape, String> {
    s.parse().map_err(|e: evostoch::Error| e.to_string())
}

fn emit(output: Option<&Path>, contents: &str) -> Result<()> {
    match output {
        Some(path) => io::write_file(path, contents)?,
        None => print!("{contents}"),
    }
    Ok(())
}

fn json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

fn report(verbose: bool, log: &[GenerationRecord]) {
    if verbose {
        eprint!("{}", log_ndjson(log));
    }
}

fn run_portfolio(args: PortfolioArgs, verbose: bool) -> Result<()> {
    let (scenarios, _) = io::read_scenarios(&args.scenarios)?;
    let measure = match args.risk_measure {
        MeasureArg::Stddev => RiskMeasure::StdDev,
        MeasureArg::Variance => RiskMeasure::Variance,
        MeasureArg::Mad => RiskMeasure::Mad,
        MeasureArg::Cvar => RiskMeasure::Cvar { alpha: args.alpha },
    };
    let spec = ObjectiveSpec::new(measure, args.kappa)?;
    let mut constraints = ConstraintSet::new(args.penalty)?;
    if let Some(n) = args.max_holdings {
        constraints = constraints.with(MaxHoldings(n));
    }
    if let Some(w) = args.max_weight {
        constraints = constraints.with(MaxWeight(w));
    }
    let config = args.ea.config();
    let best = portfolio::optimize_portfolio(&scenarios, spec, &constraints, &config, args.buckets, args.cardinality)?;
    report(verbose, &best.log);

    let seed_dispersion = if args.dispersion_runs > 0 {
        let mut optima = vec![best.portfolio.clone()];
        for offset in 1..=args.dispersion_runs {
            let other = EaConfig {
                master_seed: config.master_seed.wrapping_add(offset),
                ..config
            };
            let res = portfolio::optimize_portfolio(&scenarios, spec, &constraints, &other, args.buckets, args.cardinality)?;
            optima.push(res.portfolio);
        }
        Some(portfolio::seed_dispersion(&optima))
    } else {
        None
    };

    let doc = PortfolioDocument {
        format_version: FORMAT_VERSION,
        weights: best.portfolio.weights().to_vec(),
        expectation: best.expectation,
        risk: best.risk,
        objective: best.objective,
        fitness: best.fitness,
        seed_dispersion,
        log: best.log,
    };
    emit(args.output.as_deref(), &json(&doc)?)
}

fn run_cluster(args: ClusterArgs, verbose: bool) -> Result<()> {
    let (scenarios, header) = io::read_scenarios(&args.scenarios)?;
    let spec = ClusteringSpec {
        k: args.k,
        distance: args.distance,
        center: args.center,
        probability_weighted: args.weighted,
        dimension_weights: args.dim_weights,
    };
    let res = cluster::generate_scenarios(&scenarios, &spec, &args.ea.config())?;
    report(verbose, &res.log);

    let out = &res.output.scenarios;
    let as_csv = args
        .output
        .as_deref()
        .and_then(Path::extension)
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let contents = if as_csv {
        io::scenarios_to_csv(out, header.as_deref())
    } else {
        json(&ClusterDocument {
            format_version: FORMAT_VERSION,
            objective: res.output.objective,
            scenarios: out
                .rows()
                .zip(out.probabilities())
                .map(|(values, &probability)| OutputScenario {
                    values: values.to_vec(),
                    probability,
                })
                .collect(),
            distances: res.output.distances.clone(),
            assignment: res.ids,
            log: res.log,
        })?
    };
    emit(args.output.as_deref(), &contents)
}

fn run_tree(args: TreeArgs, verbose: bool) -> Result<()> {
    let paths = io::read_paths(&args.paths, args.root_value)?;
    let spec = TreeSpec {
        distance: args.distance,
        center: args.center,
        probability_weighted: !args.unweighted,
    };
    let res = tree::generate_tree(&paths, &args.shape, spec, &args.ea.config())?;
    report(verbose, &res.log);

    if let Some(dot) = &args.dot {
        io::write_file(dot, &io::export_tree_dot(&res.tree)).context("writing DOT output")?;
    }
    let doc = TreeDocument {
        format_version: FORMAT_VERSION,
        node_counts: res.tree.node_counts(),
        objective: res.objective,
        nodes: tree_nodes(&res.tree),
        routing: res.tree.routing().to_vec(),
        log: res.log,
    };
    emit(args.output.as_deref(), &json(&doc)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let verbose = cli.verbose;
    let result = match cli.command {
        Command::Portfolio(args) => run_portfolio(args, verbose),
        Command::Cluster(args) => run_cluster(args, verbose),
        Command::Tree(args) => run_tree(args, verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end for scenario runs and one-off estimates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use markov_infmax::config::ScenarioConfig;
use markov_infmax::diffusion::{influence_oracle, DelayDistribution, Z95};
use markov_infmax::estimator::{estimate_node_influences, DelayPairing, EstimatorConfig};
use markov_infmax::experiment::{ab_variance_report, run_scenario};
use markov_infmax::graph::{load_edge_list, NodeId};
use markov_infmax::seeds::{SeedTree, Stream};
use markov_infmax::{Error, Result};

#[derive(Parser)]
#[command(
    name = "infmax",
    version,
    about = "Influence maximization over Markovian graph processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write trace.csv and summary.txt.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Scenario file (alternative to --config).
        path: Option<PathBuf>,
    },
    /// Antithetic versus independent delay generation on one graph state.
    AbVariance {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 200)]
        replications: usize,
        /// Graph state index.
        #[arg(long, default_value_t = 0)]
        state: usize,
        /// Sampling parameter; defaults to the scenario's theta0.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Monte Carlo influence of one seed node on an edge-list graph.
    Oracle {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        node: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// One run of the sketch estimator for every node of an edge-list graph.
    Estimate {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 10)]
        s: usize,
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Use independent delay sets instead of antithetic pairs.
        #[arg(long)]
        independent: bool,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge-list file: node count, then one `source target w|b` per line.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    within_mean: f64,
    #[arg(long, default_value_t = 10.0)]
    between_mean: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl GraphArgs {
    fn delays(&self) -> Result<DelayDistribution> {
        DelayDistribution::per_class_exponential(self.within_mean, self.between_mean)
            .map_err(|e| Error::Config(e.to_string()))
    }
}

fn load_scenario(
    args: &ScenarioArgs,
    positional: Option<&Path>,
) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let path = args
        .config
        .as_deref()
        .or(positional)
        .ok_or_else(|| Error::Config("a scenario file is required (--config)".into()))?;
    let mut config = ScenarioConfig::load(path)?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    if let Some(seed) = args.seed {
        config.scenario.seed = seed;
    }
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.scenario.output_dir.clone());
    Ok((config, out_dir))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, path } => {
            let (config, out_dir) = load_scenario(&scenario, path.as_deref())?;
            let out_dir = out_dir.unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_scenario(&config, Some(&out_dir))?;
            print!("{}", outcome.summary.render());
            eprintln!("wrote {}", out_dir.display());
        }
        Command::AbVariance {
            scenario,
            replications,
            state,
            theta,
        } => {
            let (config, out_dir) = load_scenario(&scenario, None)?;
            let theta = theta.unwrap_or(config.spsa.theta0[0]);
            let report = ab_variance_report(&config, replications, state, theta)?;
            print!("{}", report.render());
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("ab_variance.txt"), report.render())?;
            }
        }
        Command::Oracle {
            graph,
            node,
            samples,
        } => {
            let g = load_edge_list(&graph.graph)?;
            let mut rng = SeedTree::new(graph.seed).stream(Stream::Oracle);
            let est = influence_oracle(
                &g,
                &graph.delays()?,
                &[NodeId(node)],
                graph.horizon,
                samples,
                &mut rng,
            )?;
            let (lo, hi) = est.ci(Z95);
            println!(
                "influence = {:.6}\nstd_err = {:.6}\nci95 = [{lo:.6}, {hi:.6}]\nsamples = {}",
                est.mean, est.std_err, est.n_samples
            );
        }
        Command::Estimate {
            graph,
            s,
            m,
            independent,
        } => {
            let g = load_edge_list(&graph.graph)?;
            let config = EstimatorConfig::new(s, m, graph.horizon)
                .map_err(|e| Error::Config(e.to_string()))?;
            let pairing = if independent {
                DelayPairing::Independent
            } else {
                DelayPairing::Antithetic
            };
            let tree = SeedTree::new(graph.seed);
            let x = estimate_node_influences(
                &g,
                &graph.delays()?,
                &config,
                pairing,
                &mut tree.stream(Stream::Delays),
                &mut tree.stream(Stream::Labels),
            )?;
            println!("node,influence");
            for (v, value) in x.iter().enumerate() {
                println!("{v},{value}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

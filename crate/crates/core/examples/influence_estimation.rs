//! Sketch estimator against the Monte-Carlo oracle for every node of a small
//! two-block SBM.

use markov_infmax::diffusion::{node_influence_oracle, DelayDistribution, MonteCarloEstimate};
use markov_infmax::estimator::{estimate_node_influences, DelayPairing, EstimatorConfig};
use markov_infmax::graph::{sbm_sample, SbmParams};
use markov_infmax::seeds::{SeedTree, Stream};

fn main() -> markov_infmax::Result<()> {
    let tree = SeedTree::new(3);
    let g = sbm_sample(
        &SbmParams::new(vec![6, 6], 0.3, 0.05)?,
        &mut tree.stream(Stream::Sbm),
    )?;
    let dist = DelayDistribution::per_class_exponential(1.0, 10.0)?;
    let config = EstimatorConfig::new(10, 10, 1.5)?;

    let (mut dr, mut lr) = (tree.stream(Stream::Delays), tree.stream(Stream::Labels));
    let runs: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            estimate_node_influences(
                &g,
                &dist,
                &config,
                DelayPairing::Antithetic,
                &mut dr,
                &mut lr,
            )
        })
        .collect::<markov_infmax::Result<_>>()?;
    let oracle = node_influence_oracle(&g, &dist, 1.5, 20_000, &mut tree.stream(Stream::Oracle))?;

    println!("{} nodes, {} edges", g.n_nodes(), g.n_edges());
    println!("node  estimate (200 runs)  oracle");
    for v in 0..g.n_nodes() {
        let est = MonteCarloEstimate::from_samples(runs.iter().map(|r| r[v]));
        println!(
            "{v:>4}  {:>8.3} ± {:<8.3}  {:.3}",
            est.mean, est.std_err, oracle[v].mean
        );
    }
    Ok(())
}

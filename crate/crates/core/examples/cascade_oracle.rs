//! Continuous-time cascade on a two-node graph: Monte-Carlo oracle against
//! the closed form `2 - exp(-T)` for unit-mean exponential delays.

use markov_infmax::diffusion::{
    infection_times, influence_oracle, sample_delays, DelayDistribution, Z99,
};
use markov_infmax::graph::{DirectedGraph, NodeId};
use markov_infmax::seeds::{SeedTree, Stream};

fn main() -> markov_infmax::Result<()> {
    let g = DirectedGraph::from_pairs(2, &[(0, 1)])?;
    let dist = DelayDistribution::exponential(1.0)?;
    let horizon = 1.5;
    let tree = SeedTree::new(7);

    let mut rng = tree.stream(Stream::Delays);
    let delays = sample_delays(&g, &dist, &mut rng);
    let cascade = infection_times(&g, &delays, &[NodeId(0)])?;
    println!(
        "one realization: delay {:.3}, infected by T: {:?}",
        delays.get(0),
        cascade.infected(horizon)
    );

    let est = influence_oracle(
        &g,
        &dist,
        &[NodeId(0)],
        horizon,
        100_000,
        &mut tree.stream(Stream::Oracle),
    )?;
    let exact = 2.0 - (-horizon).exp();
    let (lo, hi) = est.ci(Z99);
    println!(
        "oracle {:.4} (99% CI [{lo:.4}, {hi:.4}]), exact {exact:.4}",
        est.mean
    );
    Ok(())
}

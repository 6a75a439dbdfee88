//! The two-state graph process of the bundled scenarios: SBM states, the
//! parameterized transition matrix and its stationary distribution.

use std::path::Path;

use markov_infmax::config::ScenarioConfig;
use markov_infmax::experiment::Scenario;
use markov_infmax::graph::EdgeClass;
use markov_infmax::process::{sample_chain, stationary_distribution, PathStart, SamplingParam};
use markov_infmax::seeds::{SeedTree, Stream};

fn main() -> markov_infmax::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/full_obs.toml");
    let sc = Scenario::build(&ScenarioConfig::load(path)?)?;

    for (i, g) in sc.model.states().iter().enumerate() {
        println!(
            "state {i}: {} nodes, {} within-block edges, {} between-block edges",
            g.n_nodes(),
            g.count_class(EdgeClass::Within),
            g.count_class(EdgeClass::Between)
        );
    }
    for theta in [0.2, 0.5, 1.2] {
        let param = SamplingParam::scalar(theta);
        let p = sc.model.transition(&param)?;
        let pi = stationary_distribution(&p)?;
        let path = sample_chain(
            &p,
            PathStart::Stationary,
            20,
            &mut SeedTree::new(1).stream(Stream::Path),
        )?;
        println!(
            "theta {theta}: P row {:.3?}, stationary {pi:.3?}, path {path:?}",
            p.row(0)
        );
    }
    Ok(())
}

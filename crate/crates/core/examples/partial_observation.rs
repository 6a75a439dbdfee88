//! Filtering the hidden graph state from one observed cluster, then SPSA
//! driven by the filtered influence estimate.

use std::path::Path;

use markov_infmax::config::ScenarioConfig;
use markov_infmax::experiment::{run_scenario, Scenario};
use markov_infmax::hmm::{FilterState, Posterior};
use markov_infmax::process::{observe, sample_chain, PathStart, SamplingParam};
use markov_infmax::seeds::{SeedTree, Stream};

fn main() -> markov_infmax::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/partial_obs.toml");
    let mut config = ScenarioConfig::load(path)?;
    let sc = Scenario::build(&config)?;

    let theta = SamplingParam::scalar(0.5);
    let p = sc.model.transition(&theta)?;
    let hidden = sample_chain(
        &p,
        PathStart::Stationary,
        8,
        &mut SeedTree::new(2).stream(Stream::Path),
    )?;
    let mut filter = FilterState::new(&p, sc.model.likelihoods(), Posterior::uniform(2))?;
    for &state in &hidden[1..] {
        filter.update(observe(&sc.model, state))?;
        println!(
            "hidden {state}  posterior {:.3?}",
            filter.posterior().probs()
        );
    }

    config.spsa.n_iterations = 60;
    if let Some(r) = config.reference.as_mut() {
        r.oracle_samples = 0;
    }
    let outcome = run_scenario(&config, None)?;
    for row in outcome.trace.rows.iter().step_by(10) {
        println!("k {:>3}  theta {:.4}", row.k, row.theta);
    }
    print!("{}", outcome.summary.render());
    Ok(())
}

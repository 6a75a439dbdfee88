//! Antithetic against independent delay sets on one graph state, with
//! labels shared between the arms and a paired test for equal variances.

use std::path::Path;

use markov_infmax::config::ScenarioConfig;
use markov_infmax::experiment::ab_variance_report;

fn main() -> markov_infmax::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/full_obs.toml");
    let config = ScenarioConfig::load(path)?;
    for theta in [0.0, 0.5119] {
        let report = ab_variance_report(&config, 200, 0, theta)?;
        println!("{}", report.render());
    }
    Ok(())
}

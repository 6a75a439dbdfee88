//! Tracking after the graph states swap roles mid-run. The optimum moves
//! from the interior to the lower edge of the box.

use std::path::Path;

use markov_infmax::config::ScenarioConfig;
use markov_infmax::experiment::run_scenario;

fn main() -> markov_infmax::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/tracking.toml");
    let mut config = ScenarioConfig::load(path)?;
    config.spsa.n_iterations = 120;
    config.regime_changes[0].at_iteration = 60;
    if let Some(r) = config.reference.as_mut() {
        r.oracle_samples = 0;
    }
    let outcome = run_scenario(&config, None)?;
    for row in outcome.trace.rows.iter().step_by(10) {
        println!(
            "k {:>3}  theta {:.4}  error {:.3}",
            row.k,
            row.theta,
            row.abs_error.unwrap_or(f64::NAN)
        );
    }
    print!("{}", outcome.summary.render());
    Ok(())
}

//! SPSA on the fully observed process, started far from the optimum.

use std::path::Path;

use markov_infmax::config::ScenarioConfig;
use markov_infmax::experiment::run_scenario;

fn main() -> markov_infmax::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/full_obs.toml");
    let mut config = ScenarioConfig::load(path)?;
    config.spsa.n_iterations = 40;
    if let Some(r) = config.reference.as_mut() {
        r.oracle_samples = 0;
    }
    let outcome = run_scenario(&config, None)?;
    println!("   k   theta   c_plus  c_minus     grad   error");
    for row in outcome.trace.rows.iter().step_by(4) {
        println!(
            "{:>4} {:>7.4} {:>8.3} {:>8.3} {:>8.2} {:>7.3}",
            row.k,
            row.theta,
            row.c_plus,
            row.c_minus,
            row.grad,
            row.abs_error.unwrap_or(f64::NAN)
        );
    }
    print!("{}", outcome.summary.render());
    Ok(())
}

//! Scenario runner: wires a [`ScenarioConfig`] into a graph process, an
//! influence evaluator and the SPSA tracker, and persists the trace.
//!
//! Output files:
//! - `trace.csv` with columns `k,theta,c_plus,c_minus,grad[,abs_error]`.
//!   The error column is present only when the scenario carries a closed-form
//!   reference.
//! - `summary.txt` with one `key = value` line per statistic.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::{Mode, ScenarioConfig, StateSpec};
use crate::diffusion::{influence_oracle, DelayDistribution, MonteCarloEstimate};
use crate::error::{Error, Result};
use crate::estimator::{DelayPairing, EstimatorConfig, InfluenceEstimator};
use crate::evaluator::{EpochStreams, HmmEvaluator, PathAverageEvaluator};
use crate::graph::{load_edge_list, sbm_sample, DirectedGraph, NodeId, SbmParams};
use crate::hmm::Posterior;
use crate::process::{CosSquaredFamily, GraphProcessModel, IidRowsCoupling, SamplingParam};
use crate::seeds::{SeedTree, Stream};
use crate::spsa::{self, IterationRecord, ParamBox, RegimeChange, SpsaConfig};

/// Influence of candidate `v` (column) on graph state `g` (row) for the
/// reference two-block experiment.
pub const REFERENCE_SIGMA: [[f64; 2]; 2] = [[25.2, 23.2], [45.1, 5.8]];

/// Iterations after the start, and after each regime change, excluded from
/// the settled-error average.
pub const SETTLE_AFTER_START: usize = 50;
pub const SETTLE_AFTER_CHANGE: usize = 100;

/// `17.9 sin²θ − 37.3 sin⁴θ + 25.2`.
pub fn closed_form_influence(theta: f64) -> f64 {
    let s2 = theta.sin().powi(2);
    17.9 * s2 - 37.3 * s2 * s2 + 25.2
}

/// Exact `C(θ)` for the cos-squared family under the iid-rows coupling,
/// given per-state candidate influences:
/// `C(θ) = Σ_g Σ_v p_θ(g) p_θ(v) σ[g][v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceInfluence {
    sigma: Vec<Vec<f64>>,
}

impl ReferenceInfluence {
    pub fn new(sigma: Vec<Vec<f64>>) -> Result<Self> {
        if sigma.len() != 2 || sigma.iter().any(|row| row.len() != 2) {
            return Err(Error::InvalidParameter(
                "reference sigma must be 2 x 2".into(),
            ));
        }
        if sigma.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "reference sigma must be finite".into(),
            ));
        }
        Ok(Self { sigma })
    }

    pub fn standard() -> Self {
        Self {
            sigma: REFERENCE_SIGMA.iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }

    pub fn value(&self, theta: f64) -> f64 {
        let p = [theta.cos().powi(2), theta.sin().powi(2)];
        let mut c = 0.0;
        for (g, row) in self.sigma.iter().enumerate() {
            for (v, s) in row.iter().enumerate() {
                c += p[g] * p[v] * s;
            }
        }
        c
    }

    /// Rows reordered like [`GraphProcessModel::permuted`].
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            sigma: order.iter().map(|&k| self.sigma[k].clone()).collect(),
        }
    }

    /// Grid maximum over `[lower, upper]` at step `1e-4`: `(θ*, C(θ*))`.
    pub fn optimum(&self, lower: f64, upper: f64) -> (f64, f64) {
        let steps = ((upper - lower) / 1e-4).floor() as usize;
        (0..=steps)
            .map(|i| (lower + i as f64 * 1e-4).min(upper))
            .chain(std::iter::once(upper))
            .map(|t| (t, self.value(t)))
            .fold((lower, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
    }
}

/// Model installed by a scheduled change.
#[derive(Debug, Clone)]
pub struct Regime {
    pub at: usize,
    pub model: Arc<GraphProcessModel>,
    /// Cumulative permutation of the original states.
    pub order: Vec<usize>,
}

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: Arc<GraphProcessModel>,
    pub estimator: InfluenceEstimator,
    pub spsa: SpsaConfig,
    pub candidates: [NodeId; 2],
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let graph_tree = SeedTree::new(config.graph_seed());
        let states = config
            .states
            .iter()
            .enumerate()
            .map(|(i, spec)| match spec {
                StateSpec::Sbm {
                    block_sizes,
                    p_within,
                    p_between,
                } => {
                    let params = SbmParams::new(block_sizes.clone(), *p_within, *p_between)?;
                    sbm_sample(&params, &mut graph_tree.indexed(Stream::Sbm, i as u32))
                }
                StateSpec::File { path } => load_edge_list(path).map_err(|e| match e {
                    Error::Io(io) => {
                        Error::Config(format!("state[{i}].path {}: {io}", path.display()))
                    }
                    other => other,
                }),
            })
            .collect::<Result<Vec<DirectedGraph>>>()?;

        let n = states[0].n_nodes();
        let node = |field: &str, v: usize| {
            if v < n {
                Ok(NodeId(v))
            } else {
                Err(Error::Config(format!(
                    "{field}: node {v} out of range for {n} nodes"
                )))
            }
        };
        let candidates = [
            node("sampling.candidates", config.sampling.candidates[0])?,
            node("sampling.candidates", config.sampling.candidates[1])?,
        ];
        let observed = match (config.scenario.mode, &config.observation) {
            (Mode::PartialObservation, Some(obs)) => obs
                .observed_nodes
                .iter()
                .map(|&v| node("observation.observed_nodes", v))
                .collect::<Result<Vec<_>>>()?,
            _ => (0..n).map(NodeId).collect(),
        };
        let model = GraphProcessModel::new(
            states,
            Arc::new(CosSquaredFamily { candidates }),
            Arc::new(IidRowsCoupling),
            observed,
        )?;

        let d = &config.diffusion;
        let estimator = InfluenceEstimator {
            config: EstimatorConfig::new(config.estimator.s, config.estimator.m, d.horizon)?,
            delays: DelayDistribution::per_class_exponential(d.within_mean, d.between_mean)?,
            pairing: if config.estimator.variance_reduction {
                DelayPairing::Antithetic
            } else {
                DelayPairing::Independent
            },
        };
        let s = &config.spsa;
        let spsa = SpsaConfig {
            epsilon: s.epsilon,
            delta: s.delta,
            n_iterations: s.n_iterations,
            theta0: SamplingParam(s.theta0.clone()),
            bounds: ParamBox::new(s.lower.clone(), s.upper.clone())?,
        };
        Ok(Self {
            config: config.clone(),
            model: Arc::new(model),
            estimator,
            spsa,
            candidates,
        })
    }

    /// Models in force after each scheduled change.
    pub fn regimes(&self) -> Result<Vec<Regime>> {
        let mut changes = self.config.regime_changes.clone();
        changes.sort_by_key(|c| c.at_iteration);
        let mut order: Vec<usize> = (0..self.model.n_states()).collect();
        let mut current = self.model.clone();
        let mut out = Vec::with_capacity(changes.len());
        for change in changes {
            current = Arc::new(current.permuted(&change.permute_states)?);
            order = change.permute_states.iter().map(|&k| order[k]).collect();
            out.push(Regime {
                at: change.at_iteration,
                model: current.clone(),
                order: order.clone(),
            });
        }
        Ok(out)
    }

    /// Closed-form reference for the initial regime, if the scenario has one.
    pub fn reference(&self) -> Result<Option<ReferenceInfluence>> {
        self.config
            .reference
            .as_ref()
            .map(|r| ReferenceInfluence::new(r.sigma.clone()))
            .transpose()
    }

    /// Oracle influence of each candidate on each state of the initial
    /// regime, `[g][v]`. Uses the graph seed, so replications share it.
    pub fn measure_sigma(&self, n_samples: usize) -> Result<Vec<Vec<MonteCarloEstimate>>> {
        let tree = SeedTree::new(self.config.graph_seed());
        let horizon = self.estimator.config.horizon;
        let n_candidates = self.candidates.len();
        let cells: Vec<(usize, usize)> = (0..self.model.n_states())
            .flat_map(|g| (0..n_candidates).map(move |v| (g, v)))
            .collect();
        let values = cells
            .par_iter()
            .map(|&(g, v)| {
                let mut rng = tree.indexed(Stream::Oracle, (g * n_candidates + v) as u32);
                influence_oracle(
                    &self.model.states()[g],
                    &self.estimator.delays,
                    &[self.candidates[v]],
                    horizon,
                    n_samples,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(values.chunks(n_candidates).map(|c| c.to_vec()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub theta: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub grad: f64,
    pub abs_error: Option<f64>,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub has_error_column: bool,
}

impl RunTrace {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k", "theta", "c_plus", "c_minus", "grad"];
        if self.has_error_column {
            header.push("abs_error");
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![
                row.k.to_string(),
                row.theta.to_string(),
                row.c_plus.to_string(),
                row.c_minus.to_string(),
                row.grad.to_string(),
            ];
            if let Some(e) = row.abs_error {
                record.push(e.to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn errors(&self) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.abs_error).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub name: String,
    pub seed: u64,
    pub n_iterations: usize,
    pub final_theta: f64,
    pub final_error: Option<f64>,
    pub tolerance: f64,
    /// First `k` with error within tolerance.
    pub iterations_to_tolerance: Option<usize>,
    /// Per regime change: iterations after the change until the error is
    /// back within tolerance.
    pub retrack_iterations: Vec<Option<usize>>,
    pub settled_error: Option<f64>,
    pub bound_exceedances: usize,
    pub theta_star: Option<f64>,
    pub c_star: Option<f64>,
    pub realization_sigma: Option<Vec<Vec<MonteCarloEstimate>>>,
    pub realization_theta_star: Option<f64>,
}

impl Summary {
    pub fn render(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.6}"));
        let opt_k = |x: Option<usize>| x.map_or("none".to_string(), |v| v.to_string());
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_iterations = {}", self.n_iterations);
        let _ = writeln!(s, "final_theta = {:.6}", self.final_theta);
        let _ = writeln!(s, "final_error = {}", opt(self.final_error));
        let _ = writeln!(s, "tolerance = {}", self.tolerance);
        let _ = writeln!(
            s,
            "iterations_to_tolerance = {}",
            opt_k(self.iterations_to_tolerance)
        );
        for (i, r) in self.retrack_iterations.iter().enumerate() {
            let _ = writeln!(s, "retrack_iterations[{i}] = {}", opt_k(*r));
        }
        let _ = writeln!(s, "settled_error = {}", opt(self.settled_error));
        let _ = writeln!(s, "bound_exceedances = {}", self.bound_exceedances);
        let _ = writeln!(s, "reference_theta_star = {}", opt(self.theta_star));
        let _ = writeln!(s, "reference_c_star = {}", opt(self.c_star));
        if let Some(sigma) = &self.realization_sigma {
            for (g, row) in sigma.iter().enumerate() {
                for (v, est) in row.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "realization_sigma[{g}][{v}] = {:.4} +- {:.4}",
                        est.mean, est.std_err
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            "realization_theta_star = {}",
            opt(self.realization_theta_star)
        );
        s
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trace: RunTrace,
    pub summary: Summary,
    pub records: Vec<IterationRecord>,
}

/// Mean error over rows at least [`SETTLE_AFTER_START`] iterations after the
/// start and [`SETTLE_AFTER_CHANGE`] after the latest regime change.
pub fn settled_error(errors: &[f64], change_points: &[usize]) -> Option<f64> {
    let settled: Vec<f64> = errors
        .iter()
        .enumerate()
        .filter(|&(k, _)| {
            k >= SETTLE_AFTER_START
                && change_points
                    .iter()
                    .filter(|&&c| c <= k)
                    .all(|&c| k >= c + SETTLE_AFTER_CHANGE)
        })
        .map(|(_, &e)| e)
        .collect();
    (!settled.is_empty()).then(|| settled.iter().sum::<f64>() / settled.len() as f64)
}

/// Runs one scenario end to end. Writes `trace.csv` and `summary.txt` into
/// `out_dir` when given. Deterministic given the config.
pub fn run_scenario(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioOutcome> {
    let scenario = Scenario::build(config)?;
    let tree = SeedTree::new(config.scenario.seed);
    let streams = EpochStreams::from_tree(&tree);
    let mut perturbation = tree.stream(Stream::Perturbation);
    let regimes = scenario.regimes()?;
    let change_points: Vec<usize> = regimes.iter().map(|r| r.at).collect();
    let schedule: Vec<RegimeChange<Arc<GraphProcessModel>>> = regimes
        .iter()
        .map(|r| RegimeChange {
            at: r.at,
            regime: r.model.clone(),
        })
        .collect();
    let path_length = config.spsa.path_length;

    let records = match config.scenario.mode {
        Mode::FullObservation => {
            let mut eval = PathAverageEvaluator::new(
                scenario.model.clone(),
                scenario.estimator,
                path_length,
                streams,
            );
            spsa::run(&scenario.spsa, &mut eval, &mut perturbation, schedule)?
        }
        Mode::PartialObservation => {
            let prior = config
                .observation
                .as_ref()
                .and_then(|o| o.prior.clone())
                .map(Posterior::new)
                .transpose()
                .map_err(|e| Error::Config(format!("observation.prior: {e}")))?;
            let mut eval = HmmEvaluator::new(
                scenario.model.clone(),
                scenario.estimator,
                path_length,
                prior,
                streams,
            );
            spsa::run(&scenario.spsa, &mut eval, &mut perturbation, schedule)?
        }
    };

    // reference in force at each iteration
    let base_reference = scenario.reference()?;
    let reference_at = |k: usize| {
        base_reference.as_ref().map(|r| {
            regimes
                .iter()
                .rev()
                .find(|regime| regime.at <= k)
                .map_or_else(|| r.clone(), |regime| r.permuted(&regime.order))
        })
    };
    let (lower, upper) = (config.spsa.lower[0], config.spsa.upper[0]);
    let error_at = |k: usize, theta: f64| {
        reference_at(k).map(|r| {
            let (_, c_star) = r.optimum(lower, upper);
            (c_star - r.value(theta)).abs()
        })
    };

    let rows: Vec<TraceRow> = records
        .iter()
        .map(|rec| TraceRow {
            k: rec.k,
            theta: rec.theta.values()[0],
            c_plus: rec.c_plus,
            c_minus: rec.c_minus,
            grad: rec.gradient[0],
            abs_error: error_at(rec.k, rec.theta.values()[0]),
            within_bound: rec.within_bound,
        })
        .collect();
    let trace = RunTrace {
        rows,
        has_error_column: base_reference.is_some(),
    };

    let n = records.len();
    let final_theta = records
        .last()
        .map_or(config.spsa.theta0[0], |r| r.theta_next.values()[0]);
    let tolerance = config.spsa.tolerance;
    let errors = trace.errors().filter(|_| trace.has_error_column);
    let first_within = |from: usize| {
        errors.as_ref().and_then(|e| {
            (from..e.len())
                .find(|&k| e[k] <= tolerance)
                .map(|k| k - from)
        })
    };
    let (theta_star, c_star) = match &base_reference {
        Some(r) => {
            let (t, c) = r.optimum(lower, upper);
            (Some(t), Some(c))
        }
        None => (None, None),
    };
    let oracle_samples = config.reference.as_ref().map_or(0, |r| r.oracle_samples);
    let realization_sigma = if oracle_samples > 0 {
        Some(scenario.measure_sigma(oracle_samples)?)
    } else {
        None
    };
    let realization_theta_star = match &realization_sigma {
        Some(sigma) => {
            let means = sigma
                .iter()
                .map(|row| row.iter().map(|e| e.mean).collect())
                .collect();
            Some(ReferenceInfluence::new(means)?.optimum(lower, upper).0)
        }
        None => None,
    };

    let summary = Summary {
        name: config.scenario.name.clone(),
        seed: config.scenario.seed,
        n_iterations: n,
        final_theta,
        final_error: base_reference
            .as_ref()
            .map(|_| error_at(n, final_theta).unwrap_or(f64::NAN)),
        tolerance,
        iterations_to_tolerance: first_within(0),
        retrack_iterations: change_points.iter().map(|&c| first_within(c)).collect(),
        settled_error: errors
            .as_ref()
            .and_then(|e| settled_error(e, &change_points)),
        bound_exceedances: trace.rows.iter().filter(|r| !r.within_bound).count(),
        theta_star,
        c_star,
        realization_sigma,
        realization_theta_star,
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?;
        fs::write(dir.join("summary.txt"), summary.render())?;
    }
    Ok(ScenarioOutcome {
        trace,
        summary,
        records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub replications: usize,
    pub state: usize,
    pub theta: f64,
    pub antithetic: MonteCarloEstimate,
    pub independent: MonteCarloEstimate,
    /// `Var(antithetic) / Var(independent)`; 1 when both vanish.
    pub ratio: f64,
    /// Pitman–Morgan statistic for equal paired variances, if defined.
    pub t_statistic: Option<f64>,
    /// One-sided p-value for `Var(antithetic) < Var(independent)`.
    pub p_value: Option<f64>,
}

impl VarianceReport {
    pub fn render(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.6}"));
        format!(
            "replications = {}\nstate = {}\ntheta = {}\nmean_antithetic = {:.6}\nmean_independent = {:.6}\n\
             var_antithetic = {:.6}\nvar_independent = {:.6}\nratio = {:.6}\nt_statistic = {}\np_value = {}\n",
            self.replications,
            self.state,
            self.theta,
            self.antithetic.mean,
            self.independent.mean,
            self.antithetic.sample_variance(),
            self.independent.sample_variance(),
            self.ratio,
            opt(self.t_statistic),
            opt(self.p_value),
        )
    }
}

/// Pitman–Morgan test on paired samples: `(t, one-sided p)` for the
/// alternative `Var(a) < Var(b)`. `None` when the correlation is undefined.
pub fn pitman_morgan(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let n = a.len();
    if n < 3 || b.len() != n {
        return None;
    }
    let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (ms, md) = (mean(&sum), mean(&diff));
    let cov: f64 = sum
        .iter()
        .zip(&diff)
        .map(|(s, d)| (s - ms) * (d - md))
        .sum();
    let vs: f64 = sum.iter().map(|s| (s - ms).powi(2)).sum();
    let vd: f64 = diff.iter().map(|d| (d - md).powi(2)).sum();
    if !(vs > 0.0 && vd > 0.0) {
        return None;
    }
    let r = (cov / (vs * vd).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let t = if r.abs() == 1.0 {
        r.signum() * f64::INFINITY
    } else {
        r * (df / (1.0 - r * r)).sqrt()
    };
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((t, dist.cdf(t)))
}

/// Antithetic versus independent delay generation for `ĉ(θ, G)` on one
/// graph state, with identical label randomness in both arms.
pub fn ab_variance_report(
    config: &ScenarioConfig,
    replications: usize,
    state: usize,
    theta: f64,
) -> Result<VarianceReport> {
    if replications < 2 {
        return Err(Error::Config("replications must be at least 2".into()));
    }
    let scenario = Scenario::build(config)?;
    let model = &scenario.model;
    let g = model.states().get(state).ok_or_else(|| {
        Error::Config(format!(
            "state {state} out of range ({} states)",
            model.n_states()
        ))
    })?;
    let dist = model.sampling(&SamplingParam::scalar(theta))?;
    let tree = SeedTree::new(config.scenario.seed);
    let arm = |pairing| InfluenceEstimator {
        pairing,
        ..scenario.estimator
    };
    let (anti, indep) = (
        arm(DelayPairing::Antithetic),
        arm(DelayPairing::Independent),
    );
    let pairs = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let rep = tree.replication(r);
            let (delays, labels) = (rep.stream(Stream::Delays), rep.stream(Stream::Labels));
            let a =
                anti.conditional_influence(g, &dist, &mut delays.clone(), &mut labels.clone())?;
            let b =
                indep.conditional_influence(g, &dist, &mut delays.clone(), &mut labels.clone())?;
            Ok((a, b))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let antithetic = MonteCarloEstimate::from_samples(a.iter().copied());
    let independent = MonteCarloEstimate::from_samples(b.iter().copied());
    let (va, vb) = (antithetic.sample_variance(), independent.sample_variance());
    let ratio = if va == 0.0 && vb == 0.0 { 1.0 } else { va / vb };
    let test = pitman_morgan(&a, &b);
    Ok(VarianceReport {
        replications,
        state,
        theta,
        antithetic,
        independent,
        ratio,
        t_statistic: test.map(|t| t.0),
        p_value: test.map(|t| t.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use std::f64::consts::FRAC_PI_2;

    const SMALL: &str = r#"
[scenario]
name = "small"
mode = "full-obs"
seed = 3

[[state]]
kind = "sbm"
block_sizes = [4, 4]
p_within = 0.5
p_between = 0.1

[[state]]
kind = "sbm"
block_sizes = [7, 1]
p_within = 0.5
p_between = 0.1

[sampling]
family = "cos-squared"
coupling = "iid-rows"
candidates = [0, 7]

[diffusion]
within_mean = 1.0
between_mean = 10.0
horizon = 1.5

[estimator]
s = 4
m = 4

[spsa]
epsilon = 0.01
delta = 0.1
theta0 = [1.0]
lower = [0.01]
upper = [1.5]
n_iterations = 12
path_length = 3

[[regime_change]]
at_iteration = 6
permute_states = [1, 0]

[reference]
sigma = [[25.2, 23.2], [45.1, 5.8]]
"#;

    #[test]
    fn closed_form_endpoints_and_optimum() {
        assert!((closed_form_influence(0.0) - 25.2).abs() < 1e-12);
        assert!((closed_form_influence(FRAC_PI_2) - 5.8).abs() < 1e-12);
        let (t, c) = ReferenceInfluence::standard().optimum(0.0, FRAC_PI_2);
        // independent oracle: sin²θ* = 17.9 / 74.6
        let t_star = (17.9f64 / 74.6).sqrt().asin();
        assert!((t - t_star).abs() < 1e-4, "{t}");
        assert!((c - 27.3474).abs() < 1e-3, "{c}");
    }

    #[test]
    fn reference_matches_closed_form() {
        let r = ReferenceInfluence::standard();
        for i in 0..50 {
            let t = i as f64 * FRAC_PI_2 / 49.0;
            assert!((r.value(t) - closed_form_influence(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn swapped_reference_peaks_at_lower_bound() {
        let r = ReferenceInfluence::standard().permuted(&[1, 0]);
        for t in [0.0f64, 0.3, 1.0] {
            let s2 = t.sin().powi(2);
            assert!((r.value(t) - (45.1 - 59.2 * s2 + 37.3 * s2 * s2)).abs() < 1e-10);
        }
        let (t, _) = r.optimum(0.01, FRAC_PI_2 - 0.01);
        assert!((t - 0.01).abs() < 1e-12);
    }

    #[test]
    fn run_is_deterministic_and_shaped() {
        let config = ScenarioConfig::from_toml(SMALL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = run_scenario(&config, Some(dir.path())).unwrap();
        let csv_a = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        let b = run_scenario(&config, Some(dir.path())).unwrap();
        let csv_b = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert_eq!(csv_a, csv_b);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.trace.rows.len(), 12);
        assert!(a.trace.rows.iter().enumerate().all(|(i, r)| r.k == i));
        assert!(csv_a.starts_with("k,theta,c_plus,c_minus,grad,abs_error\n"));
        assert_eq!(a.summary.retrack_iterations.len(), 1);
        assert!(fs::read_to_string(dir.path().join("summary.txt"))
            .unwrap()
            .contains("final_theta"));

        // error at the swap uses the permuted reference
        let swapped = ReferenceInfluence::standard().permuted(&[1, 0]);
        let (_, c_star) = swapped.optimum(0.01, 1.5);
        let row = &a.trace.rows[6];
        assert!((row.abs_error.unwrap() - (c_star - swapped.value(row.theta)).abs()).abs() < 1e-12);
    }

    #[test]
    fn no_reference_means_no_error_column() {
        let text = SMALL.split("[reference]").next().unwrap();
        let config = ScenarioConfig::from_toml(text).unwrap();
        let out = run_scenario(&config, None).unwrap();
        let mut buf = Vec::new();
        out.trace.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("k,theta,c_plus,c_minus,grad\n"));
        assert_eq!(out.summary.final_error, None);
        assert_eq!(out.summary.iterations_to_tolerance, None);
    }

    #[test]
    fn zero_iterations_report_theta0() {
        let config =
            ScenarioConfig::from_toml(&SMALL.replace("n_iterations = 12", "n_iterations = 0"))
                .unwrap();
        let out = run_scenario(&config, None).unwrap();
        assert!(out.trace.rows.is_empty());
        assert_eq!(out.summary.final_theta, 1.0);
    }

    #[test]
    fn partial_observation_runs() {
        let text = SMALL.replace("full-obs", "partial-obs").replace(
            "[reference]",
            "[observation]\nobserved_nodes = [0, 1, 2, 3]\n\n[reference]",
        );
        let config = ScenarioConfig::from_toml(&text).unwrap();
        let out = run_scenario(&config, None).unwrap();
        assert_eq!(out.trace.rows.len(), 12);
    }

    #[test]
    fn settled_error_skips_transients() {
        let mut e = vec![10.0; 400];
        for (k, x) in e.iter_mut().enumerate() {
            if (50..200).contains(&k) || k >= 300 {
                *x = 1.0;
            }
        }
        assert_eq!(settled_error(&e, &[200]), Some(1.0));
        assert_eq!(settled_error(&e[..10], &[]), None);
    }

    #[test]
    fn pitman_morgan_detects_smaller_variance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let common: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let a: Vec<f64> = common
            .iter()
            .map(|c| c + 0.1 * rng.random::<f64>())
            .collect();
        let b: Vec<f64> = common
            .iter()
            .map(|c| 2.0 * c + rng.random::<f64>())
            .collect();
        let (t, p) = pitman_morgan(&a, &b).unwrap();
        assert!(t < 0.0 && p < 1e-6, "{t} {p}");
        let (_, p_rev) = pitman_morgan(&b, &a).unwrap();
        assert!(p_rev > 0.99);
        assert_eq!(pitman_morgan(&a, &a), None);
    }

    #[test]
    fn ab_report_on_single_node_graph_is_exactly_one() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.edges");
        fs::write(&path, "2\n").unwrap();
        let text = SMALL
            .replace(
                "kind = \"sbm\"\nblock_sizes = [4, 4]\np_within = 0.5\np_between = 0.1",
                &format!("kind = \"file\"\npath = {:?}", path.display().to_string()),
            )
            .replace(
                "kind = \"sbm\"\nblock_sizes = [7, 1]\np_within = 0.5\np_between = 0.1",
                &format!("kind = \"file\"\npath = {:?}", path.display().to_string()),
            )
            .replace("candidates = [0, 7]", "candidates = [0, 1]");
        let config = ScenarioConfig::from_toml(&text).unwrap();
        let report = ab_variance_report(&config, 50, 0, 0.5).unwrap();
        // no edges: delays are unused, both arms see identical labels
        assert_eq!(report.ratio, 1.0);
        assert_eq!(report.antithetic, report.independent);
        assert!(report.render().contains("ratio = 1.000000"));
    }
}

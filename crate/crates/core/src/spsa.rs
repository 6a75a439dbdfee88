//! Simultaneous-perturbation stochastic gradient ascent with a constant
//! step size, so the iterate keeps tracking a slowly changing optimum.
//!
//! Each iteration draws a Rademacher direction `d`, evaluates the influence
//! at `θ + Δd` and `θ - Δd` (two separate message epochs), forms
//! `ĝ = (C⁺ - C⁻) / (2Δ) · d` and steps `θ ← Π(θ + εĝ)` where `Π` clips to
//! the parameter box.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::{Error, Result};
use crate::process::SamplingParam;

/// Compact box of admissible parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidParameter(
                "box bounds must be nonempty and of equal length".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter(format!(
                "empty box {lower:?}..{upper:?}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&t, (&l, &u))| t.clamp(l, u))
            .collect()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&t, (&l, &u))| l <= t && t <= u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpsaConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub n_iterations: usize,
    pub theta0: SamplingParam,
    pub bounds: ParamBox,
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon ({}) and delta ({}) must be positive",
                self.epsilon, self.delta
            )));
        }
        if self.theta0.dim() != self.bounds.dim() {
            return Err(Error::InvalidParameter(
                "theta0 and box dimensions differ".into(),
            ));
        }
        if !self.bounds.contains(self.theta0.values()) {
            return Err(Error::InvalidParameter(format!(
                "theta0 {:?} lies outside the box",
                self.theta0.0
            )));
        }
        Ok(())
    }
}

/// Direction with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationVector(Vec<f64>);

impl PerturbationVector {
    pub fn new(signs: Vec<f64>) -> Result<Self> {
        if signs.iter().any(|&x| x != 1.0 && x != -1.0) {
            return Err(Error::InvalidParameter(format!(
                "{signs:?} is not a sign vector"
            )));
        }
        Ok(Self(signs))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn draw_perturbation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PerturbationVector {
    PerturbationVector(
        (0..dim)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
            .collect(),
    )
}

/// `(C⁺ - C⁻) / (2Δ) · d`.
pub fn spsa_gradient(c_plus: f64, c_minus: f64, delta: f64, d: &PerturbationVector) -> Vec<f64> {
    let scale = (c_plus - c_minus) / (2.0 * delta);
    d.0.iter().map(|s| scale * s).collect()
}

/// Ascent step followed by projection onto the box.
pub fn spsa_step(
    theta: &SamplingParam,
    gradient: &[f64],
    epsilon: f64,
    bounds: &ParamBox,
) -> SamplingParam {
    let moved: Vec<f64> = theta
        .values()
        .iter()
        .zip(gradient)
        .map(|(t, g)| t + epsilon * g)
        .collect();
    SamplingParam(bounds.project(&moved))
}

/// Noisy influence oracle queried by the optimizer. One call is one message
/// epoch.
pub trait InfluenceEvaluator {
    /// What a scheduled regime change installs.
    type Regime;

    fn evaluate(&mut self, theta: &SamplingParam) -> Result<f64>;

    fn switch_regime(&mut self, regime: Self::Regime) -> Result<()>;

    /// Upper bound on any honest evaluation (the node count), if known.
    fn value_bound(&self) -> Option<f64> {
        None
    }
}

/// Deterministic or closure-backed evaluator; a regime change replaces the
/// closure.
pub struct FnEvaluator<F> {
    f: F,
}

impl<F: FnMut(&SamplingParam) -> f64> FnEvaluator<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: FnMut(&SamplingParam) -> f64> InfluenceEvaluator for FnEvaluator<F> {
    type Regime = F;

    fn evaluate(&mut self, theta: &SamplingParam) -> Result<f64> {
        Ok((self.f)(theta))
    }

    fn switch_regime(&mut self, regime: F) -> Result<()> {
        self.f = regime;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub theta: SamplingParam,
    pub direction: PerturbationVector,
    pub c_plus: f64,
    pub c_minus: f64,
    pub gradient: Vec<f64>,
    pub theta_next: SamplingParam,
    /// Both evaluations were within [`InfluenceEvaluator::value_bound`].
    pub within_bound: bool,
    pub elapsed: Duration,
}

/// A model swap applied just before the evaluations of iteration `at`.
pub struct RegimeChange<T> {
    pub at: usize,
    pub regime: T,
}

/// Runs `config.n_iterations` SPSA iterations, two evaluations each.
pub fn run<E, R>(
    config: &SpsaConfig,
    evaluator: &mut E,
    rng: &mut R,
    schedule: Vec<RegimeChange<E::Regime>>,
) -> Result<Vec<IterationRecord>>
where
    E: InfluenceEvaluator,
    R: Rng + ?Sized,
{
    config.validate()?;
    let mut schedule = schedule;
    schedule.sort_by_key(|c| c.at);
    let mut pending = schedule.into_iter().peekable();

    let dim = config.theta0.dim();
    let mut theta = config.theta0.clone();
    let mut records = Vec::with_capacity(config.n_iterations);

    for k in 0..config.n_iterations {
        while let Some(change) = pending.next_if(|c| c.at <= k) {
            evaluator.switch_regime(change.regime)?;
        }
        let started = Instant::now();
        let d = draw_perturbation(dim, rng);
        let shifted = |sign: f64| {
            SamplingParam(
                theta
                    .values()
                    .iter()
                    .zip(d.values())
                    .map(|(t, s)| t + sign * config.delta * s)
                    .collect(),
            )
        };
        let c_plus = checked(evaluator.evaluate(&shifted(1.0))?)?;
        let c_minus = checked(evaluator.evaluate(&shifted(-1.0))?)?;
        let within_bound = evaluator
            .value_bound()
            .is_none_or(|bound| c_plus <= bound && c_minus <= bound);
        let gradient = spsa_gradient(c_plus, c_minus, config.delta, &d);
        let theta_next = spsa_step(&theta, &gradient, config.epsilon, &config.bounds);
        records.push(IterationRecord {
            k,
            theta: theta.clone(),
            direction: d,
            c_plus,
            c_minus,
            gradient,
            theta_next: theta_next.clone(),
            within_bound,
            elapsed: started.elapsed(),
        });
        theta = theta_next;
    }
    Ok(records)
}

fn checked(value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::InvalidEvaluation(value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::cell::Cell;

    #[test]
    fn perturbation_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| draw_perturbation(1, &mut rng).values()[0] > 0.0)
            .count();
        assert!((plus as f64 / n as f64 - 0.5).abs() < 0.02);

        let n = 100_000;
        let mut counts = [0usize; 8];
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let d = draw_perturbation(3, &mut rng);
            let idx = d
                .values()
                .iter()
                .fold(0, |acc, &s| 2 * acc + usize::from(s > 0.0));
            counts[idx] += 1;
            for (a, s) in sum.iter_mut().zip(d.values()) {
                *a += s;
            }
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.125).abs() < 0.01);
        }
        let bound = 3.0 / (n as f64).sqrt();
        assert!(sum.iter().all(|s| (s / n as f64).abs() < bound));
    }

    #[test]
    fn gradient_examples() {
        let plus = PerturbationVector::new(vec![1.0]).unwrap();
        assert_eq!(spsa_gradient(3.0, 3.0, 0.1, &plus), vec![0.0]);

        // f(t) = -t^2 at t = 1, central difference exact for quadratics
        let f = |t: f64| -t * t;
        let g = spsa_gradient(f(1.1), f(0.9), 0.1, &plus);
        assert!((g[0] + 2.0).abs() < 1e-12);

        let d = PerturbationVector::new(vec![1.0, -1.0]).unwrap();
        let g = spsa_gradient(1.4, 1.0, 0.1, &d);
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 2.0).abs() < 1e-12);
        assert!(PerturbationVector::new(vec![0.5]).is_err());
    }

    #[test]
    fn step_examples() {
        let bounds = ParamBox::interval(0.0, std::f64::consts::FRAC_PI_2).unwrap();
        let theta = SamplingParam::scalar(0.3);
        assert_eq!(spsa_step(&theta, &[0.0], 0.05, &bounds), theta);
        let next = spsa_step(&theta, &[1.0], 0.05, &bounds);
        assert!((next.0[0] - 0.35).abs() < 1e-15);
        assert_eq!(
            spsa_step(&theta, &[100.0], 0.05, &bounds).0[0],
            std::f64::consts::FRAC_PI_2
        );
        assert_eq!(spsa_step(&theta, &[-100.0], 0.05, &bounds).0[0], 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = SpsaConfig {
            epsilon: 0.01,
            delta: 0.1,
            n_iterations: 5,
            theta0: SamplingParam::scalar(2.0),
            bounds: ParamBox::interval(0.0, 1.0).unwrap(),
        };
        assert!(cfg.validate().is_err());
        assert!(SpsaConfig {
            epsilon: 0.0,
            theta0: SamplingParam::scalar(0.5),
            ..cfg.clone()
        }
        .validate()
        .is_err());
        assert!(ParamBox::interval(1.0, 0.0).is_err());
    }

    #[test]
    fn concave_quadratic_converges() {
        let optimum = 0.7;
        let mut eval = FnEvaluator::new(|t: &SamplingParam| 10.0 - (t.0[0] - optimum).powi(2));
        let cfg = SpsaConfig {
            epsilon: 0.1,
            delta: 0.1,
            n_iterations: 200,
            theta0: SamplingParam::scalar(0.0),
            bounds: ParamBox::interval(-5.0, 5.0).unwrap(),
        };
        let records = run(
            &cfg,
            &mut eval,
            &mut ChaCha8Rng::seed_from_u64(2),
            Vec::new(),
        )
        .unwrap();
        let last = &records.last().unwrap().theta_next;
        assert!((last.0[0] - optimum).abs() <= cfg.delta);
        // exact gradients: distance to the optimum never increases
        let dist: Vec<f64> = records
            .iter()
            .map(|r| (r.theta.0[0] - optimum).abs())
            .collect();
        assert!(dist.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn two_evaluations_per_iteration_and_box_respected() {
        let calls = Cell::new(0usize);
        let mut eval = FnEvaluator::new(|t: &SamplingParam| {
            calls.set(calls.get() + 1);
            5.0 + 3.0 * t.0[0] - t.0[1]
        });
        let cfg = SpsaConfig {
            epsilon: 0.5,
            delta: 0.1,
            n_iterations: 37,
            theta0: SamplingParam(vec![0.0, 0.0]),
            bounds: ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
        };
        let records = run(
            &cfg,
            &mut eval,
            &mut ChaCha8Rng::seed_from_u64(3),
            Vec::new(),
        )
        .unwrap();
        assert_eq!(calls.get(), 2 * cfg.n_iterations);
        assert!(records
            .iter()
            .all(|r| cfg.bounds.contains(r.theta_next.values())));
        let last = &records.last().unwrap().theta_next;
        assert_eq!(last.0, vec![1.0, -1.0]);
        for r in &records {
            assert_eq!(
                r.theta_next,
                spsa_step(&r.theta, &r.gradient, cfg.epsilon, &cfg.bounds)
            );
        }
    }

    #[test]
    fn regime_change_moves_the_iterate() {
        fn peak_at(x: f64) -> Box<dyn FnMut(&SamplingParam) -> f64> {
            Box::new(move |t: &SamplingParam| 10.0 - (t.0[0] - x).powi(2))
        }
        let mut eval = FnEvaluator::new(peak_at(-1.0));
        let cfg = SpsaConfig {
            epsilon: 0.2,
            delta: 0.1,
            n_iterations: 100,
            theta0: SamplingParam::scalar(0.0),
            bounds: ParamBox::interval(-5.0, 5.0).unwrap(),
        };
        let schedule = vec![RegimeChange {
            at: 50,
            regime: peak_at(2.0),
        }];
        let records = run(&cfg, &mut eval, &mut ChaCha8Rng::seed_from_u64(4), schedule).unwrap();
        assert!((records[49].theta_next.0[0] + 1.0).abs() < 0.1);
        assert!((records[99].theta_next.0[0] - 2.0).abs() < 0.1);
    }

    #[test]
    fn invalid_evaluations_are_rejected() {
        let mut eval = FnEvaluator::new(|_: &SamplingParam| f64::NAN);
        let cfg = SpsaConfig {
            epsilon: 0.1,
            delta: 0.1,
            n_iterations: 1,
            theta0: SamplingParam::scalar(0.0),
            bounds: ParamBox::interval(-1.0, 1.0).unwrap(),
        };
        let err = run(
            &cfg,
            &mut eval,
            &mut ChaCha8Rng::seed_from_u64(5),
            Vec::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEvaluation(_)));
    }
}

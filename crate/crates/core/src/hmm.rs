//! Bayesian filtering of the hidden graph state from induced-subgraph
//! observations, and the time-averaged influence estimate built on it.

use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, DirectedGraph, NodeId};
use crate::process::{ObservationLikelihoods, TransitionMatrix};

const NORMALIZATION_TOL: f64 = 1e-10;

/// Binary likelihoods `B[G][Ḡ] = 1` iff the subgraph of `G` induced by
/// `observed` equals `Ḡ`. Observations are the distinct induced subgraphs,
/// indexed in order of first appearance over the states.
pub fn build_likelihoods(
    states: &[DirectedGraph],
    observed: &[NodeId],
) -> Result<ObservationLikelihoods> {
    let mut observations: Vec<DirectedGraph> = Vec::new();
    let mut observation_of_state = Vec::with_capacity(states.len());
    for g in states {
        let (sub, _) = induced_subgraph(g, observed)?;
        let idx = match observations.iter().position(|o| *o == sub) {
            Some(idx) => idx,
            None => {
                observations.push(sub);
                observations.len() - 1
            }
        };
        observation_of_state.push(idx);
    }
    Ok(ObservationLikelihoods {
        observation_of_state,
        observations,
    })
}

/// Belief over graph states.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior(pub Vec<f64>);

impl Posterior {
    pub fn uniform(n_states: usize) -> Self {
        Self(vec![1.0 / n_states as f64; n_states])
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty()
            || probs.iter().any(|&p| !(p >= 0.0))
            || (total - 1.0).abs() > NORMALIZATION_TOL
        {
            return Err(Error::InvalidParameter(format!(
                "{probs:?} is not a probability vector"
            )));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }
}

/// Running filter with the accumulated influence average.
#[derive(Debug, Clone)]
pub struct FilterState<'a> {
    transition: &'a TransitionMatrix,
    likelihoods: &'a ObservationLikelihoods,
    posterior: Posterior,
    steps: usize,
}

impl<'a> FilterState<'a> {
    pub fn new(
        transition: &'a TransitionMatrix,
        likelihoods: &'a ObservationLikelihoods,
        prior: Posterior,
    ) -> Result<Self> {
        if transition.n_states() != likelihoods.n_states()
            || prior.0.len() != likelihoods.n_states()
        {
            return Err(Error::InvalidParameter(
                "transition matrix, likelihoods and prior disagree on the number of states".into(),
            ));
        }
        Ok(Self {
            transition,
            likelihoods,
            posterior: prior,
            steps: 0,
        })
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `π ← B_y P' π / 1' B_y P' π`.
    pub fn update(&mut self, observation: usize) -> Result<()> {
        if observation >= self.likelihoods.n_observations() {
            return Err(Error::InvalidParameter(format!(
                "observation {observation} out of range ({} observations)",
                self.likelihoods.n_observations()
            )));
        }
        let mut next = self.transition.propagate(&self.posterior.0);
        for (state, p) in next.iter_mut().enumerate() {
            *p *= self.likelihoods.entry(state, observation);
        }
        let normalizer: f64 = next.iter().sum();
        if !(normalizer > 0.0) {
            return Err(Error::InconsistentObservation { observation });
        }
        for p in &mut next {
            *p /= normalizer;
        }
        self.posterior = Posterior(next);
        self.steps += 1;
        Ok(())
    }
}

/// One filter step, functional form.
pub fn filter_update<'a>(
    mut state: FilterState<'a>,
    observation: usize,
) -> Result<FilterState<'a>> {
    state.update(observation)?;
    Ok(state)
}

/// Time average `(1/N) Σ_{n=0}^{N-1} ĉ' π_n` over a path of `N` observations.
///
/// `π_0` is the prior and `π_n` conditions on observations `1..=n`, so the
/// first observation is the one the prior stands in for and is not used.
pub fn hmm_influence_estimate(
    transition: &TransitionMatrix,
    likelihoods: &ObservationLikelihoods,
    prior: Posterior,
    observations: &[usize],
    c_hat: &[f64],
) -> Result<f64> {
    if observations.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one observation".into(),
        ));
    }
    if c_hat.len() != likelihoods.n_states() {
        return Err(Error::InvalidParameter(format!(
            "{} influence values for {} states",
            c_hat.len(),
            likelihoods.n_states()
        )));
    }
    let mut filter = FilterState::new(transition, likelihoods, prior)?;
    let mut total = filter.posterior().expectation(c_hat);
    for &y in &observations[1..] {
        filter.update(y)?;
        total += filter.posterior().expectation(c_hat);
    }
    Ok(total / observations.len() as f64)
}

//! Influence evaluators backed by the graph process: one evaluation is one
//! message epoch over a fresh sample path.

use std::sync::Arc;

use rand::Rng;

use crate::error::Result;
use crate::estimator::InfluenceEstimator;
use crate::graph::NodeId;
use crate::hmm::{hmm_influence_estimate, Posterior};
use crate::process::{
    observe, sample_chain, sample_seed, GraphProcessModel, PathStart, SamplingParam,
};
use crate::seeds::{SeedTree, Stream, StreamRng};
use crate::spsa::InfluenceEvaluator;

/// Independent generators for each source of randomness in an epoch.
#[derive(Debug, Clone)]
pub struct EpochStreams {
    pub path: StreamRng,
    pub delays: StreamRng,
    pub labels: StreamRng,
    pub message: StreamRng,
}

impl EpochStreams {
    pub fn from_tree(tree: &SeedTree) -> Self {
        Self {
            path: tree.stream(Stream::Path),
            delays: tree.stream(Stream::Delays),
            labels: tree.stream(Stream::Labels),
            message: tree.stream(Stream::Message),
        }
    }
}

/// `(1/N̄) Σ_n ĉ(θ, G_n)` with one fresh estimator call per path position.
pub fn path_average_influence<R1, R2>(
    model: &GraphProcessModel,
    theta: &SamplingParam,
    path: &[usize],
    estimator: &InfluenceEstimator,
    delay_rng: &mut R1,
    label_rng: &mut R2,
) -> Result<f64>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let dist = model.sampling(theta)?;
    let mut total = 0.0;
    for &state in path {
        total +=
            estimator.conditional_influence(&model.states()[state], &dist, delay_rng, label_rng)?;
    }
    Ok(total / path.len() as f64)
}

/// Perfectly observed graph process: averages conditional-influence
/// estimates along the observed path.
#[derive(Debug, Clone)]
pub struct PathAverageEvaluator {
    model: Arc<GraphProcessModel>,
    estimator: InfluenceEstimator,
    path_length: usize,
    streams: EpochStreams,
    last_seed: Option<NodeId>,
    evaluations: usize,
}

impl PathAverageEvaluator {
    pub fn new(
        model: Arc<GraphProcessModel>,
        estimator: InfluenceEstimator,
        path_length: usize,
        streams: EpochStreams,
    ) -> Self {
        Self {
            model,
            estimator,
            path_length,
            streams,
            last_seed: None,
            evaluations: 0,
        }
    }

    pub fn model(&self) -> &Arc<GraphProcessModel> {
        &self.model
    }

    /// Seed node that received the most recent message.
    pub fn last_seed(&self) -> Option<NodeId> {
        self.last_seed
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }
}

impl InfluenceEvaluator for PathAverageEvaluator {
    type Regime = Arc<GraphProcessModel>;

    fn evaluate(&mut self, theta: &SamplingParam) -> Result<f64> {
        let p = self.model.transition(theta)?;
        let dist = self.model.sampling(theta)?;
        // the message goes to one sampled seed; the estimate averages over p_θ
        self.last_seed = Some(sample_seed(&dist, &mut self.streams.message));
        let path = sample_chain(
            &p,
            PathStart::Stationary,
            self.path_length,
            &mut self.streams.path,
        )?;
        self.evaluations += 1;
        path_average_influence(
            &self.model,
            theta,
            &path,
            &self.estimator,
            &mut self.streams.delays,
            &mut self.streams.labels,
        )
    }

    fn switch_regime(&mut self, regime: Arc<GraphProcessModel>) -> Result<()> {
        self.model = regime;
        Ok(())
    }

    fn value_bound(&self) -> Option<f64> {
        Some(self.model.n_nodes() as f64)
    }
}

/// Partially observed graph process with known dynamics: filters the hidden
/// state from induced-subgraph observations and averages the filtered
/// conditional influence.
#[derive(Debug, Clone)]
pub struct HmmEvaluator {
    model: Arc<GraphProcessModel>,
    estimator: InfluenceEstimator,
    path_length: usize,
    prior: Option<Posterior>,
    streams: EpochStreams,
    last_seed: Option<NodeId>,
}

impl HmmEvaluator {
    /// `prior = None` uses the uniform prior over states.
    pub fn new(
        model: Arc<GraphProcessModel>,
        estimator: InfluenceEstimator,
        path_length: usize,
        prior: Option<Posterior>,
        streams: EpochStreams,
    ) -> Self {
        Self {
            model,
            estimator,
            path_length,
            prior,
            streams,
            last_seed: None,
        }
    }

    pub fn last_seed(&self) -> Option<NodeId> {
        self.last_seed
    }
}

impl InfluenceEvaluator for HmmEvaluator {
    type Regime = Arc<GraphProcessModel>;

    fn evaluate(&mut self, theta: &SamplingParam) -> Result<f64> {
        let p = self.model.transition(theta)?;
        let dist = self.model.sampling(theta)?;
        self.last_seed = Some(sample_seed(&dist, &mut self.streams.message));
        let hidden = sample_chain(
            &p,
            PathStart::Stationary,
            self.path_length,
            &mut self.streams.path,
        )?;
        let observations: Vec<usize> = hidden.iter().map(|&s| observe(&self.model, s)).collect();
        let c_hat = self
            .model
            .states()
            .iter()
            .map(|g| {
                self.estimator.conditional_influence(
                    g,
                    &dist,
                    &mut self.streams.delays,
                    &mut self.streams.labels,
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        let prior = self
            .prior
            .clone()
            .unwrap_or_else(|| Posterior::uniform(self.model.n_states()));
        hmm_influence_estimate(&p, self.model.likelihoods(), prior, &observations, &c_hat)
    }

    fn switch_regime(&mut self, regime: Arc<GraphProcessModel>) -> Result<()> {
        if let Some(prior) = &self.prior {
            if prior.probs().len() != regime.n_states() {
                self.prior = None;
            }
        }
        self.model = regime;
        Ok(())
    }

    fn value_bound(&self) -> Option<f64> {
        Some(self.model.n_nodes() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{DelayDistribution, MonteCarloEstimate, Z99};
    use crate::estimator::{DelayPairing, EstimatorConfig};
    use crate::graph::DirectedGraph;
    use crate::process::{CosSquaredFamily, FixedCoupling, IidRowsCoupling, TransitionMatrix};

    fn estimator() -> InfluenceEstimator {
        InfluenceEstimator {
            config: EstimatorConfig::new(10, 10, 1.5).unwrap(),
            delays: DelayDistribution::exponential(1.0).unwrap(),
            pairing: DelayPairing::Antithetic,
        }
    }

    fn streams(seed: u64) -> EpochStreams {
        EpochStreams::from_tree(&SeedTree::new(seed))
    }

    #[test]
    fn single_state_path_average_is_unbiased() {
        // node 0 -> 1: influence of node 0 is 2 - e^{-1.5}; node 1 alone is 1
        let g = DirectedGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let model = GraphProcessModel::fully_observed(
            vec![g],
            Arc::new(CosSquaredFamily {
                candidates: [NodeId(0), NodeId(1)],
            }),
            Arc::new(FixedCoupling(TransitionMatrix::identity(1))),
        )
        .unwrap();
        let theta = SamplingParam::scalar(0.4);
        let c = 0.4f64.cos().powi(2);
        let expected = c * (2.0 - (-1.5f64).exp()) + (1.0 - c);
        let mut eval = PathAverageEvaluator::new(Arc::new(model), estimator(), 5, streams(1));
        let est =
            MonteCarloEstimate::from_samples((0..1000).map(|_| eval.evaluate(&theta).unwrap()));
        assert!(est.contains(expected, Z99), "{est:?} vs {expected}");
        assert_eq!(eval.evaluations(), 1000);
        assert!(eval.last_seed().is_some());
    }

    #[test]
    fn constant_path_reduces_variance() {
        let g = DirectedGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let model = GraphProcessModel::fully_observed(
            vec![g],
            Arc::new(CosSquaredFamily {
                candidates: [NodeId(0), NodeId(1)],
            }),
            Arc::new(FixedCoupling(TransitionMatrix::identity(1))),
        )
        .unwrap();
        let theta = SamplingParam::scalar(0.0);
        let est = estimator();
        let (mut dr, mut lr) = (
            SeedTree::new(2).stream(Stream::Delays),
            SeedTree::new(2).stream(Stream::Labels),
        );
        let one = MonteCarloEstimate::from_samples((0..2000).map(|_| {
            path_average_influence(&model, &theta, &[0], &est, &mut dr, &mut lr).unwrap()
        }));
        let ten = MonteCarloEstimate::from_samples((0..2000).map(|_| {
            path_average_influence(&model, &theta, &[0; 10], &est, &mut dr, &mut lr).unwrap()
        }));
        let ratio = one.sample_variance() / ten.sample_variance();
        assert!((7.0..14.0).contains(&ratio), "{ratio}");
    }

    fn two_state_model(observed: Vec<NodeId>) -> GraphProcessModel {
        let g1 = DirectedGraph::from_pairs(3, &[(0, 1), (0, 2)]).unwrap();
        let g2 = DirectedGraph::from_pairs(3, &[(2, 1), (2, 0)]).unwrap();
        GraphProcessModel::new(
            vec![g1, g2],
            Arc::new(CosSquaredFamily {
                candidates: [NodeId(0), NodeId(2)],
            }),
            Arc::new(IidRowsCoupling),
            observed,
        )
        .unwrap()
    }

    #[test]
    fn hmm_and_path_average_agree_in_expectation() {
        let theta = SamplingParam::scalar(0.6);
        let full = Arc::new(two_state_model(vec![NodeId(0), NodeId(1), NodeId(2)]));
        let partial = Arc::new(two_state_model(vec![NodeId(0), NodeId(1)]));
        let mut a = PathAverageEvaluator::new(full, estimator(), 30, streams(3));
        let mut b = HmmEvaluator::new(partial, estimator(), 30, None, streams(4));
        let ea = MonteCarloEstimate::from_samples((0..400).map(|_| a.evaluate(&theta).unwrap()));
        let eb = MonteCarloEstimate::from_samples((0..400).map(|_| b.evaluate(&theta).unwrap()));
        let se = (ea.std_err.powi(2) + eb.std_err.powi(2)).sqrt();
        // the uniform prior term biases the HMM average by O(1/N)
        assert!((ea.mean - eb.mean).abs() < Z99 * se + 0.05, "{ea:?} {eb:?}");
    }

    #[test]
    fn regime_switch_replaces_model() {
        let model = Arc::new(two_state_model(vec![NodeId(0)]));
        let swapped = Arc::new(model.permuted(&[1, 0]).unwrap());
        let mut eval = PathAverageEvaluator::new(model, estimator(), 3, streams(5));
        eval.switch_regime(swapped.clone()).unwrap();
        assert!(Arc::ptr_eq(eval.model(), &swapped));
    }
}

//! Finite-state Markovian graph process whose transition matrix depends on
//! the seed-sampling parameter, plus the induced-subgraph observation model.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::hmm::build_likelihoods;

const STOCHASTIC_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const DEFAULT_POWER_ITERATIONS: usize = 1_000_000;

/// Parameter vector of the seed-sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingParam(pub Vec<f64>);

impl SamplingParam {
    pub fn scalar(theta: f64) -> Self {
        Self(vec![theta])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Probability distribution over candidate seed nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    support: Vec<NodeId>,
    probs: Vec<f64>,
}

impl SamplingDistribution {
    pub fn new(support: Vec<NodeId>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidParameter(format!(
                "sampling distribution has {} nodes and {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "negative or NaN probability in {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { support, probs })
    }

    pub fn degenerate(v: NodeId) -> Self {
        Self {
            support: vec![v],
            probs: vec![1.0],
        }
    }

    pub fn uniform(support: Vec<NodeId>) -> Result<Self> {
        let n = support.len();
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn support(&self) -> &[NodeId] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }
}

/// Categorical draw of a seed node.
pub fn sample_seed<R: Rng + ?Sized>(dist: &SamplingDistribution, rng: &mut R) -> NodeId {
    let u: f64 = rng.random();
    categorical(&dist.probs, u)
        .map(|k| dist.support[k])
        .unwrap_or(dist.support[dist.support.len() - 1])
}

/// Index `k` such that `u` falls into the k-th cumulative bucket, skipping
/// zero-mass entries.
fn categorical(probs: &[f64], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if p > 0.0 && u < acc {
            return Some(k);
        }
    }
    probs.iter().rposition(|&p| p > 0.0)
}

/// Dense row-stochastic matrix over graph states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::NotStochastic(
                "matrix must be square and nonempty".into(),
            ));
        }
        let m = Self {
            n,
            data: rows.into_iter().flatten().collect(),
        };
        m.check_stochastic()?;
        Ok(m)
    }

    /// Every row equal to `row`.
    pub fn iid_rows(row: &[f64]) -> Result<Self> {
        Self::from_rows(vec![row.to_vec(); row.len()])
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn check_stochastic(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(Error::NotStochastic(format!(
                    "row {i} has a negative or NaN entry"
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {total}")));
            }
        }
        Ok(())
    }

    /// `x' P`, i.e. one step of a distribution (equivalently `P' x`).
    pub fn propagate(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += xi * p;
            }
        }
        out
    }

    fn multiply(&self, other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Self { n, data }
    }

    /// Primitive-matrix test: some power `P^k`, `k <= (n-1)^2 + 1`, is
    /// strictly positive.
    pub fn is_regular(&self) -> bool {
        let bound = (self.n - 1) * (self.n - 1) + 1;
        let pattern = Self {
            n: self.n,
            data: self
                .data
                .iter()
                .map(|&p| if p > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        };
        let mut power = pattern.clone();
        for _ in 0..bound {
            if power.data.iter().all(|&p| p > 0.0) {
                return true;
            }
            power = power.multiply(&pattern);
            for p in &mut power.data {
                *p = if *p > 0.0 { 1.0 } else { 0.0 };
            }
        }
        power.data.iter().all(|&p| p > 0.0)
    }
}

/// Stationary distribution by power iteration from the uniform vector,
/// stopping once `||pi P - pi||_1 < 1e-10`.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    stationary_distribution_with_cap(p, DEFAULT_POWER_ITERATIONS)
}

pub fn stationary_distribution_with_cap(
    p: &TransitionMatrix,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    p.check_stochastic()?;
    let n = p.n_states();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iterations {
        let next = p.propagate(&pi);
        let residual: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        let total: f64 = next.iter().sum();
        pi = next.into_iter().map(|x| x / total).collect();
        if residual < STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence(max_iterations))
}

/// Maps a parameter to a seed-sampling distribution.
pub trait SamplingFamily: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn distribution(&self, theta: &SamplingParam) -> Result<SamplingDistribution>;
}

/// Two candidate seeds sampled with probabilities `[cos^2 t, sin^2 t]`.
#[derive(Debug, Clone)]
pub struct CosSquaredFamily {
    pub candidates: [NodeId; 2],
}

impl SamplingFamily for CosSquaredFamily {
    fn dim(&self) -> usize {
        1
    }

    fn distribution(&self, theta: &SamplingParam) -> Result<SamplingDistribution> {
        let [t] = theta.values() else {
            return Err(Error::InvalidParameter(format!(
                "cos-squared family expects a scalar parameter, got {} entries",
                theta.dim()
            )));
        };
        let c = t.cos().powi(2);
        SamplingDistribution::new(self.candidates.to_vec(), vec![c, 1.0 - c])
    }
}

/// How the graph dynamics respond to the sampling distribution.
pub trait Coupling: Send + Sync + fmt::Debug {
    fn transition(
        &self,
        theta: &SamplingParam,
        sampling: &SamplingDistribution,
        n_states: usize,
    ) -> Result<TransitionMatrix>;
}

/// Every row of the transition matrix equals the sampling probabilities, so
/// the chain is i.i.d. with stationary law equal to the sampling law. Needs
/// as many candidate seeds as graph states.
#[derive(Debug, Clone, Copy, Default)]
pub struct IidRowsCoupling;

impl Coupling for IidRowsCoupling {
    fn transition(
        &self,
        _theta: &SamplingParam,
        sampling: &SamplingDistribution,
        n_states: usize,
    ) -> Result<TransitionMatrix> {
        if sampling.probs().len() != n_states {
            return Err(Error::InvalidParameter(format!(
                "iid-rows coupling needs {n_states} sampling probabilities, got {}",
                sampling.probs().len()
            )));
        }
        TransitionMatrix::iid_rows(sampling.probs())
    }
}

/// Parameter-independent dynamics.
#[derive(Debug, Clone)]
pub struct FixedCoupling(pub TransitionMatrix);

impl Coupling for FixedCoupling {
    fn transition(
        &self,
        _: &SamplingParam,
        _: &SamplingDistribution,
        n_states: usize,
    ) -> Result<TransitionMatrix> {
        if self.0.n_states() != n_states {
            return Err(Error::InvalidParameter(
                "fixed transition matrix has wrong size".into(),
            ));
        }
        Ok(self.0.clone())
    }
}

/// Binary observation likelihoods: state `g` produces exactly one observed
/// subgraph, `observation_of_state[g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLikelihoods {
    pub(crate) observation_of_state: Vec<usize>,
    pub(crate) observations: Vec<DirectedGraph>,
}

impl ObservationLikelihoods {
    pub fn n_states(&self) -> usize {
        self.observation_of_state.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn observation_of(&self, state: usize) -> usize {
        self.observation_of_state[state]
    }

    /// Observed subgraph with index `obs`.
    pub fn observation_graph(&self, obs: usize) -> &DirectedGraph {
        &self.observations[obs]
    }

    /// `B[state][obs]`.
    pub fn entry(&self, state: usize, obs: usize) -> f64 {
        if self.observation_of_state[state] == obs {
            1.0
        } else {
            0.0
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_states())
            .map(|g| {
                (0..self.n_observations())
                    .map(|o| self.entry(g, o))
                    .collect()
            })
            .collect()
    }
}

/// State space, parameter-dependent dynamics and observation model.
#[derive(Debug, Clone)]
pub struct GraphProcessModel {
    states: Vec<DirectedGraph>,
    sampling: Arc<dyn SamplingFamily>,
    coupling: Arc<dyn Coupling>,
    observed_nodes: Vec<NodeId>,
    likelihoods: ObservationLikelihoods,
}

impl GraphProcessModel {
    pub fn new(
        states: Vec<DirectedGraph>,
        sampling: Arc<dyn SamplingFamily>,
        coupling: Arc<dyn Coupling>,
        observed_nodes: Vec<NodeId>,
    ) -> Result<Self> {
        let Some(first) = states.first() else {
            return Err(Error::InvalidParameter("empty graph state space".into()));
        };
        let n = first.n_nodes();
        if states.iter().any(|g| g.n_nodes() != n) {
            return Err(Error::InvalidParameter(
                "graph states disagree on the node count".into(),
            ));
        }
        let likelihoods = build_likelihoods(&states, &observed_nodes)?;
        Ok(Self {
            states,
            sampling,
            coupling,
            observed_nodes,
            likelihoods,
        })
    }

    /// Model with every node observed.
    pub fn fully_observed(
        states: Vec<DirectedGraph>,
        sampling: Arc<dyn SamplingFamily>,
        coupling: Arc<dyn Coupling>,
    ) -> Result<Self> {
        let nodes = states
            .first()
            .map(|g| g.nodes().collect())
            .unwrap_or_default();
        Self::new(states, sampling, coupling, nodes)
    }

    /// Same dynamics with the state space reordered: new state `k` is old
    /// state `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.states.len()).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!(
                "{order:?} is not a permutation of the states"
            )));
        }
        let states = order.iter().map(|&k| self.states[k].clone()).collect();
        Self::new(
            states,
            self.sampling.clone(),
            self.coupling.clone(),
            self.observed_nodes.clone(),
        )
    }

    pub fn states(&self) -> &[DirectedGraph] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.states[0].n_nodes()
    }

    pub fn observed_nodes(&self) -> &[NodeId] {
        &self.observed_nodes
    }

    pub fn likelihoods(&self) -> &ObservationLikelihoods {
        &self.likelihoods
    }

    pub fn param_dim(&self) -> usize {
        self.sampling.dim()
    }

    pub fn sampling(&self, theta: &SamplingParam) -> Result<SamplingDistribution> {
        let dist = self.sampling.distribution(theta)?;
        for &v in dist.support() {
            self.states[0].check_node(v)?;
        }
        Ok(dist)
    }

    /// `P_theta`, checked to be row-stochastic and regular.
    pub fn transition(&self, theta: &SamplingParam) -> Result<TransitionMatrix> {
        let dist = self.sampling(theta)?;
        let p = self.coupling.transition(theta, &dist, self.n_states())?;
        p.check_stochastic()?;
        if !p.is_regular() {
            return Err(Error::NotRegular);
        }
        Ok(p)
    }
}

/// Initial state of a sample path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathStart {
    State(usize),
    Stationary,
}

/// Draws `X_0, ..., X_{length-1}` from `P_theta`.
pub fn sample_path<R: Rng + ?Sized>(
    model: &GraphProcessModel,
    theta: &SamplingParam,
    start: PathStart,
    length: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    sample_chain(&model.transition(theta)?, start, length, rng)
}

/// Sample path of an explicit transition matrix.
pub fn sample_chain<R: Rng + ?Sized>(
    p: &TransitionMatrix,
    start: PathStart,
    length: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if length == 0 {
        return Err(Error::InvalidParameter(
            "sample path length must be at least 1".into(),
        ));
    }
    let first = match start {
        PathStart::State(s) if s < p.n_states() => s,
        PathStart::State(s) => {
            return Err(Error::InvalidParameter(format!(
                "start state {s} out of range ({} states)",
                p.n_states()
            )))
        }
        PathStart::Stationary => {
            let pi = stationary_distribution(p)?;
            categorical(&pi, rng.random()).unwrap_or(0)
        }
    };
    let mut path = Vec::with_capacity(length);
    path.push(first);
    for _ in 1..length {
        let current = *path.last().unwrap();
        let next = categorical(p.row(current), rng.random()).unwrap_or(current);
        path.push(next);
    }
    Ok(path)
}

/// Index of the observed subgraph produced by `state`.
pub fn observe(model: &GraphProcessModel, state: usize) -> usize {
    model.likelihoods().observation_of(state)
}

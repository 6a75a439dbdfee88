//! Reduced-variance influence estimation.
//!
//! Each node's influence is the expected size of its `T`-distance
//! neighborhood. For one delay realization the neighborhood size is
//! estimated with exponential labels: if `r̄_1..r̄_m` are the least labels
//! within reach under `m` independent unit-mean label sets, then
//! `(m - 1) / Σ r̄_j` is unbiased for the neighborhood size. Delay
//! realizations are drawn in antithetic pairs `F⁻¹(U)`, `F⁻¹(1 - U)`; the
//! neighborhood size is monotone in every delay, so paired estimates are
//! negatively correlated and the average has lower variance than with
//! independent delay sets.

use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::diffusion::{edge_uniforms, DelayDistribution, DelaySet, HeapEntry};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeId};
use crate::process::SamplingDistribution;

/// Sizes of the estimator: `s` delay sets, `m` label sets per delay set,
/// horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub s: usize,
    pub m: usize,
    pub horizon: f64,
}

impl EstimatorConfig {
    pub fn new(s: usize, m: usize, horizon: f64) -> Result<Self> {
        if s < 2 || !s.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "s = {s} must be even and at least 2"
            )));
        }
        if m < 3 {
            return Err(Error::InvalidParameter(format!(
                "m = {m} must be at least 3"
            )));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} must be finite and nonnegative"
            )));
        }
        Ok(Self { s, m, horizon })
    }
}

/// How the `s` delay sets are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayPairing {
    /// `s/2` uniform draws, each used as `U` and `1 - U`.
    Antithetic,
    /// `s` independent draws.
    Independent,
}

/// Unit-mean exponential label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    r: Vec<f64>,
}

impl LabelSet {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "labels must be positive and finite".into(),
            ));
        }
        Ok(Self { r })
    }

    pub fn sample<R: Rng + ?Sized>(n_nodes: usize, rng: &mut R) -> Self {
        let r = (0..n_nodes)
            .map(|_| {
                let x: f64 = Exp1.sample(rng);
                // Exp1 can return exactly 0 with negligible probability
                x.max(f64::MIN_POSITIVE)
            })
            .collect();
        Self { r }
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }
}

/// The pair `(F⁻¹(u), F⁻¹(1 - u))` for one vector of per-edge uniforms.
pub fn antithetic_pair_from_uniforms(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    uniforms: &[f64],
) -> (DelaySet, DelaySet) {
    let mirrored: Vec<f64> = uniforms.iter().map(|u| 1.0 - u).collect();
    (
        DelaySet::from_uniforms(g, dist, uniforms),
        DelaySet::from_uniforms(g, dist, &mirrored),
    )
}

/// `s` delay sets where set `u` and set `s/2 + u` share their uniforms.
pub fn antithetic_delay_pairs<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    s: usize,
    rng: &mut R,
) -> Result<Vec<DelaySet>> {
    if s == 0 || !s.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "antithetic pairing needs an even s, got {s}"
        )));
    }
    let half = s / 2;
    let mut first = Vec::with_capacity(half);
    let mut second = Vec::with_capacity(half);
    for _ in 0..half {
        let (a, b) = antithetic_pair_from_uniforms(g, dist, &edge_uniforms(g.n_edges(), rng));
        first.push(a);
        second.push(b);
    }
    first.extend(second);
    Ok(first)
}

pub fn independent_delay_sets<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    s: usize,
    rng: &mut R,
) -> Vec<DelaySet> {
    (0..s)
        .map(|_| DelaySet::from_uniforms(g, dist, &edge_uniforms(g.n_edges(), rng)))
        .collect()
}

pub fn delay_sets<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    s: usize,
    pairing: DelayPairing,
    rng: &mut R,
) -> Result<Vec<DelaySet>> {
    match pairing {
        DelayPairing::Antithetic => antithetic_delay_pairs(g, dist, s, rng),
        DelayPairing::Independent => Ok(independent_delay_sets(g, dist, s, rng)),
    }
}

/// Reversed graph with the delays of one delay set laid out contiguously,
/// reused across that set's label sweeps.
struct ReverseAdjacency {
    start: Vec<usize>,
    source: Vec<usize>,
    delay: Vec<f64>,
}

impl ReverseAdjacency {
    fn new(g: &DirectedGraph, delays: &DelaySet) -> Self {
        let mut start = Vec::with_capacity(g.n_nodes() + 1);
        let mut source = Vec::with_capacity(g.n_edges());
        let mut delay = Vec::with_capacity(g.n_edges());
        start.push(0);
        for v in g.nodes() {
            for (idx, e) in g.in_edges(v) {
                source.push(e.source.0);
                delay.push(delays.get(idx));
            }
            start.push(source.len());
        }
        Self {
            start,
            source,
            delay,
        }
    }
}

/// Buffers reused across label sets.
struct SketchScratch {
    order: Vec<usize>,
    reach: Vec<f64>,
    tentative: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<HeapEntry>,
}

impl SketchScratch {
    fn new(n: usize) -> Self {
        Self {
            order: Vec::with_capacity(n),
            reach: vec![f64::INFINITY; n],
            tentative: vec![f64::INFINITY; n],
            stamp: vec![0; n],
            epoch: 0,
            heap: BinaryHeap::new(),
        }
    }

    fn tentative(&self, v: usize) -> f64 {
        if self.stamp[v] == self.epoch {
            self.tentative[v]
        } else {
            f64::INFINITY
        }
    }

    fn set_tentative(&mut self, v: usize, d: f64) {
        self.stamp[v] = self.epoch;
        self.tentative[v] = d;
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
    }
}

/// For every node `v`, the least label among nodes `v` reaches within
/// distance `horizon`. Always finite since `v` reaches itself.
pub fn min_label_within_horizon(
    g: &DirectedGraph,
    delays: &DelaySet,
    labels: &LabelSet,
    horizon: f64,
) -> Vec<f64> {
    let mut scratch = SketchScratch::new(g.n_nodes());
    let mut out = vec![f64::INFINITY; g.n_nodes()];
    min_label_into(
        &ReverseAdjacency::new(g, delays),
        labels.values(),
        horizon,
        &mut scratch,
        &mut out,
    );
    out
}

/// Pruned sweep: sources in ascending label order each run a Dijkstra on
/// the reversed graph, truncated at `horizon`. A node reached earlier at a
/// distance no larger than the current one is not expanded again, because
/// everything behind it is already covered by a smaller label. The first
/// source to reach a node supplies its least label.
fn min_label_into(
    reverse: &ReverseAdjacency,
    labels: &[f64],
    horizon: f64,
    scratch: &mut SketchScratch,
    out: &mut [f64],
) {
    let n = labels.len();
    out.fill(f64::INFINITY);
    scratch.reach.fill(f64::INFINITY);
    scratch.order.clear();
    scratch.order.extend(0..n);
    scratch
        .order
        .sort_unstable_by(|&a, &b| labels[a].total_cmp(&labels[b]).then(a.cmp(&b)));

    for k in 0..n {
        let source = scratch.order[k];
        if scratch.reach[source] <= 0.0 {
            continue;
        }
        let label = labels[source];
        scratch.next_epoch();
        scratch.set_tentative(source, 0.0);
        scratch.heap.push(HeapEntry {
            dist: 0.0,
            node: source,
        });

        while let Some(HeapEntry { dist: d, node: v }) = scratch.heap.pop() {
            if d > scratch.tentative(v) || d >= scratch.reach[v] {
                continue;
            }
            scratch.reach[v] = d;
            if out[v].is_infinite() {
                out[v] = label;
            }
            let edges = reverse.start[v]..reverse.start[v + 1];
            for (&u, &tau) in reverse.source[edges.clone()]
                .iter()
                .zip(&reverse.delay[edges])
            {
                let nd = d + tau;
                if nd <= horizon && nd < scratch.tentative(u) && nd < scratch.reach[u] {
                    scratch.set_tentative(u, nd);
                    scratch.heap.push(HeapEntry { dist: nd, node: u });
                }
            }
        }
    }
}

/// The sampling-weighted conditional influence together with the node
/// influences of the sampling support behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceEstimate {
    pub support_influence: Vec<(NodeId, f64)>,
    pub c_hat: f64,
    pub config: EstimatorConfig,
}

/// Unbiased estimate of every node's influence within the configured
/// horizon. Delay uniforms come from `delay_rng`, labels from `label_rng`,
/// so the two pairings can be compared under identical label noise.
pub fn estimate_node_influences<R1, R2>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    config: &EstimatorConfig,
    pairing: DelayPairing,
    delay_rng: &mut R1,
    label_rng: &mut R2,
) -> Result<Vec<f64>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let n = g.n_nodes();
    let sets = delay_sets(g, dist, config.s, pairing, delay_rng)?;
    let mut scratch = SketchScratch::new(n);
    let mut least = vec![0.0; n];
    let mut sums = vec![0.0; n];
    let mut influence = vec![0.0; n];
    let mut labels = Vec::with_capacity(n);
    let numerator = (config.m - 1) as f64;

    for delays in &sets {
        let reverse = ReverseAdjacency::new(g, delays);
        sums.fill(0.0);
        for _ in 0..config.m {
            labels.clear();
            labels.extend(LabelSet::sample(n, label_rng).r);
            min_label_into(&reverse, &labels, config.horizon, &mut scratch, &mut least);
            for (s, l) in sums.iter_mut().zip(&least) {
                *s += l;
            }
        }
        for (x, s) in influence.iter_mut().zip(&sums) {
            *x += numerator / s;
        }
    }
    let scale = 1.0 / config.s as f64;
    for x in &mut influence {
        *x *= scale;
    }
    Ok(influence)
}

/// Nodes within `horizon` of `source` along out-edges, by truncated
/// Dijkstra.
fn forward_neighborhood(
    g: &DirectedGraph,
    delays: &DelaySet,
    source: NodeId,
    horizon: f64,
    scratch: &mut SketchScratch,
    out: &mut Vec<usize>,
) {
    out.clear();
    scratch.next_epoch();
    scratch.set_tentative(source.0, 0.0);
    scratch.heap.push(HeapEntry {
        dist: 0.0,
        node: source.0,
    });
    while let Some(HeapEntry { dist: d, node: v }) = scratch.heap.pop() {
        if d > scratch.tentative(v) {
            continue;
        }
        out.push(v);
        for (idx, e) in g.out_edges(NodeId(v)) {
            let u = e.target.0;
            let nd = d + delays.get(idx);
            if nd <= horizon && nd < scratch.tentative(u) {
                scratch.set_tentative(u, nd);
                scratch.heap.push(HeapEntry { dist: nd, node: u });
            }
        }
    }
}

/// [`estimate_node_influences`] restricted to `targets`. Consumes the
/// generators identically and returns the same values for those nodes,
/// but only explores the targets' own neighborhoods.
pub fn estimate_influences_of<R1, R2>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    config: &EstimatorConfig,
    pairing: DelayPairing,
    targets: &[NodeId],
    delay_rng: &mut R1,
    label_rng: &mut R2,
) -> Result<Vec<f64>>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    for &v in targets {
        g.check_node(v)?;
    }
    let n = g.n_nodes();
    let sets = delay_sets(g, dist, config.s, pairing, delay_rng)?;
    let mut scratch = SketchScratch::new(n);
    let mut neighborhoods = vec![Vec::new(); targets.len()];
    let mut sums = vec![0.0; targets.len()];
    let mut influence = vec![0.0; targets.len()];
    let numerator = (config.m - 1) as f64;

    for delays in &sets {
        for (&v, hood) in targets.iter().zip(&mut neighborhoods) {
            forward_neighborhood(g, delays, v, config.horizon, &mut scratch, hood);
        }
        sums.fill(0.0);
        for _ in 0..config.m {
            let labels = LabelSet::sample(n, label_rng);
            for (s, hood) in sums.iter_mut().zip(&neighborhoods) {
                *s += hood
                    .iter()
                    .map(|&u| labels.r[u])
                    .fold(f64::INFINITY, f64::min);
            }
        }
        for (x, s) in influence.iter_mut().zip(&sums) {
            *x += numerator / s;
        }
    }
    let scale = 1.0 / config.s as f64;
    for x in &mut influence {
        *x *= scale;
    }
    Ok(influence)
}

/// `c_hat = Σ_v p(v) X(v)` together with the node influences behind it.
pub fn estimate_conditional_influence<R1, R2>(
    g: &DirectedGraph,
    p: &SamplingDistribution,
    dist: &DelayDistribution,
    config: &EstimatorConfig,
    pairing: DelayPairing,
    delay_rng: &mut R1,
    label_rng: &mut R2,
) -> Result<InfluenceEstimate>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let x = estimate_influences_of(g, dist, config, pairing, p.support(), delay_rng, label_rng)?;
    let c_hat = p.probs().iter().zip(&x).map(|(w, x)| w * x).sum();
    Ok(InfluenceEstimate {
        support_influence: p.support().iter().copied().zip(x).collect(),
        c_hat,
        config: *config,
    })
}

/// Estimator settings bundled for repeated use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceEstimator {
    pub config: EstimatorConfig,
    pub delays: DelayDistribution,
    pub pairing: DelayPairing,
}

impl InfluenceEstimator {
    pub fn conditional_influence<R1, R2>(
        &self,
        g: &DirectedGraph,
        p: &SamplingDistribution,
        delay_rng: &mut R1,
        label_rng: &mut R2,
    ) -> Result<f64>
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        estimate_conditional_influence(
            g,
            p,
            &self.delays,
            &self.config,
            self.pairing,
            delay_rng,
            label_rng,
        )
        .map(|e| e.c_hat)
    }
}

//! Continuous-time independent cascade via the shortest-path property: a
//! node's infection time is its delay-weighted distance from the seed set.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, EdgeClass, NodeId};

/// Transmission-delay law of a single edge class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayLaw {
    Exponential {
        mean: f64,
    },
    /// Point mass; every edge of the class has the same delay.
    Constant(f64),
}

impl DelayLaw {
    /// Quantile function `F^{-1}(u)` for `u` in `(0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match *self {
            DelayLaw::Exponential { mean } => -mean * (-u).ln_1p(),
            DelayLaw::Constant(value) => value,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DelayLaw::Exponential { mean } => mean,
            DelayLaw::Constant(value) => value,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DelayLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            DelayLaw::Constant(value) => value >= 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid delay law {self:?}"
            )))
        }
    }
}

/// Per-class transmission-delay distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayDistribution {
    pub within: DelayLaw,
    pub between: DelayLaw,
}

impl DelayDistribution {
    pub fn new(within: DelayLaw, between: DelayLaw) -> Result<Self> {
        within.validate()?;
        between.validate()?;
        Ok(Self { within, between })
    }

    /// Same exponential law on every edge.
    pub fn exponential(mean: f64) -> Result<Self> {
        Self::per_class_exponential(mean, mean)
    }

    pub fn per_class_exponential(within_mean: f64, between_mean: f64) -> Result<Self> {
        Self::new(
            DelayLaw::Exponential { mean: within_mean },
            DelayLaw::Exponential { mean: between_mean },
        )
    }

    pub fn law(&self, class: EdgeClass) -> &DelayLaw {
        match class {
            EdgeClass::Within => &self.within,
            EdgeClass::Between => &self.between,
        }
    }

    pub fn inverse_cdf(&self, class: EdgeClass, u: f64) -> f64 {
        self.law(class).inverse_cdf(u)
    }
}

/// One delay per edge, indexed like [`DirectedGraph::edges`].
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySet {
    tau: Vec<f64>,
}

impl DelaySet {
    pub fn new(g: &DirectedGraph, tau: Vec<f64>) -> Result<Self> {
        if tau.len() != g.n_edges() {
            return Err(Error::InvalidParameter(format!(
                "{} delays for {} edges",
                tau.len(),
                g.n_edges()
            )));
        }
        if tau.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::InvalidParameter("delays must be nonnegative".into()));
        }
        Ok(Self { tau })
    }

    /// Delays `F^{-1}(u_e)` for the given uniforms, one per edge.
    pub fn from_uniforms(g: &DirectedGraph, dist: &DelayDistribution, uniforms: &[f64]) -> Self {
        debug_assert_eq!(uniforms.len(), g.n_edges());
        let tau = g
            .edges()
            .iter()
            .zip(uniforms)
            .map(|(e, &u)| dist.inverse_cdf(e.class, u))
            .collect();
        Self { tau }
    }

    #[inline]
    pub fn get(&self, edge: usize) -> f64 {
        self.tau[edge]
    }

    pub fn values(&self) -> &[f64] {
        &self.tau
    }
}

/// Uniforms on the open interval, one per edge.
pub(crate) fn edge_uniforms<R: Rng + ?Sized>(n_edges: usize, rng: &mut R) -> Vec<f64> {
    (0..n_edges).map(|_| Open01.sample(rng)).collect()
}

/// Independent delays for every edge, by inverse-CDF sampling.
pub fn sample_delays<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    rng: &mut R,
) -> DelaySet {
    DelaySet::from_uniforms(g, dist, &edge_uniforms(g.n_edges(), rng))
}

/// Infection times of one cascade; `f64::INFINITY` marks unreachable nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub infection_time: Vec<f64>,
}

impl CascadeResult {
    /// Nodes with `t_i <= horizon`.
    pub fn infected(&self, horizon: f64) -> Vec<NodeId> {
        self.infection_time
            .iter()
            .enumerate()
            .filter(|(_, &t)| t <= horizon)
            .map(|(i, _)| NodeId(i))
            .collect()
    }

    pub fn count_within(&self, horizon: f64) -> usize {
        self.infection_time
            .iter()
            .filter(|&&t| t <= horizon)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapEntry {
    pub dist: f64,
    pub node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // min-heap on (dist, node)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra from `seeds` with edge lengths `delays`.
pub fn infection_times(
    g: &DirectedGraph,
    delays: &DelaySet,
    seeds: &[NodeId],
) -> Result<CascadeResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("seed set is empty".into()));
    }
    for &s in seeds {
        g.check_node(s)?;
    }
    if delays.tau.len() != g.n_edges() {
        return Err(Error::InvalidParameter(
            "delay set does not match the graph".into(),
        ));
    }
    let mut dist = vec![f64::INFINITY; g.n_nodes()];
    let mut heap = BinaryHeap::new();
    for &s in seeds {
        dist[s.0] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            node: s.0,
        });
    }
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for (idx, e) in g.out_edges(NodeId(node)) {
            let next = d + delays.get(idx);
            let t = e.target.0;
            if next < dist[t] {
                dist[t] = next;
                heap.push(HeapEntry {
                    dist: next,
                    node: t,
                });
            }
        }
    }
    Ok(CascadeResult {
        infection_time: dist,
    })
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

impl MonteCarloEstimate {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in samples {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Self {
            mean,
            std_err: (var / n.max(1) as f64).sqrt(),
            n_samples: n,
        }
    }

    /// Sample variance of the underlying draws.
    pub fn sample_variance(&self) -> f64 {
        self.std_err * self.std_err * self.n_samples as f64
    }

    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_err, self.mean + z * self.std_err)
    }

    pub fn ci95(&self) -> (f64, f64) {
        self.ci(Z95)
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        let (lo, hi) = self.ci(z);
        lo <= x && x <= hi
    }
}

/// Naive influence estimate: average number of nodes infected by `seeds`
/// within `horizon` over `n_samples` fresh delay sets.
pub fn influence_oracle<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    seeds: &[NodeId],
    horizon: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs at least one sample".into(),
        ));
    }
    if !(horizon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be nonnegative"
        )));
    }
    let mut counts = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let delays = sample_delays(g, dist, rng);
        counts.push(infection_times(g, &delays, seeds)?.count_within(horizon) as f64);
    }
    Ok(MonteCarloEstimate::from_samples(counts))
}

/// Oracle influence of every node as a single seed, sharing each delay
/// sample across nodes.
pub fn node_influence_oracle<R: Rng + ?Sized>(
    g: &DirectedGraph,
    dist: &DelayDistribution,
    horizon: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<MonteCarloEstimate>> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs at least one sample".into(),
        ));
    }
    let n = g.n_nodes();
    let mut counts = vec![Vec::with_capacity(n_samples); n];
    for _ in 0..n_samples {
        let delays = sample_delays(g, dist, rng);
        for (v, c) in counts.iter_mut().enumerate() {
            c.push(infection_times(g, &delays, &[NodeId(v)])?.count_within(horizon) as f64);
        }
    }
    Ok(counts
        .into_iter()
        .map(MonteCarloEstimate::from_samples)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path3() -> DirectedGraph {
        DirectedGraph::from_pairs(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn exponential_quantile_and_mean() {
        let law = DelayLaw::Exponential { mean: 1.0 };
        assert!((law.inverse_cdf(0.5) - std::f64::consts::LN_2).abs() < 1e-15);

        let g = DirectedGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let dist = DelayDistribution::exponential(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| sample_delays(&g, &dist, &mut rng).get(0))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn class_dependent_delays() {
        let g = DirectedGraph::new(
            3,
            [
                crate::graph::Edge::new(0, 1, EdgeClass::Within),
                crate::graph::Edge::new(1, 2, EdgeClass::Between),
            ],
        )
        .unwrap();
        let dist = DelayDistribution::per_class_exponential(1.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 50_000;
        let (mut w, mut b) = (0.0, 0.0);
        for _ in 0..n {
            let d = sample_delays(&g, &dist, &mut rng);
            w += d.get(0);
            b += d.get(1);
        }
        assert!((w / n as f64 - 1.0).abs() < 0.02);
        assert!((b / n as f64 - 10.0).abs() < 0.2);
    }

    #[test]
    fn delay_sampling_is_deterministic() {
        let g = path3();
        let dist = DelayDistribution::exponential(1.0).unwrap();
        let a = sample_delays(&g, &dist, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_delays(&g, &dist, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(DelayDistribution::exponential(0.0).is_err());
        assert!(DelayDistribution::new(DelayLaw::Constant(-1.0), DelayLaw::Constant(1.0)).is_err());
    }

    #[test]
    fn infection_time_examples() {
        let g = path3();
        let delays = DelaySet::new(&g, vec![0.5, 0.5]).unwrap();
        let r = infection_times(&g, &delays, &[NodeId(0)]).unwrap();
        assert_eq!(r.infection_time, vec![0.0, 0.5, 1.0]);
        assert_eq!(r.infected(0.75), vec![NodeId(0), NodeId(1)]);

        let all: Vec<NodeId> = g.nodes().collect();
        let r = infection_times(&g, &delays, &all).unwrap();
        assert!(r.infection_time.iter().all(|&t| t == 0.0));

        let r = infection_times(&g, &delays, &[NodeId(2)]).unwrap();
        assert_eq!(r.infection_time[0], f64::INFINITY);

        // a -> b direct (2.0) versus a -> c -> b (0.3 + 0.4)
        let g = DirectedGraph::from_pairs(3, &[(0, 1), (0, 2), (2, 1)]).unwrap();
        let idx = |j: usize, i: usize| {
            g.edges()
                .iter()
                .position(|e| e.source.0 == j && e.target.0 == i)
                .unwrap()
        };
        let mut tau = vec![0.0; 3];
        tau[idx(0, 1)] = 2.0;
        tau[idx(0, 2)] = 0.3;
        tau[idx(2, 1)] = 0.4;
        let r = infection_times(&g, &DelaySet::new(&g, tau).unwrap(), &[NodeId(0)]).unwrap();
        assert!((r.infection_time[1] - 0.7).abs() < 1e-15);

        assert!(infection_times(&g, &DelaySet::new(&g, vec![1.0; 3]).unwrap(), &[]).is_err());
    }

    #[test]
    fn oracle_single_node_is_exact() {
        let g = DirectedGraph::from_pairs(1, &[]).unwrap();
        let dist = DelayDistribution::exponential(1.0).unwrap();
        let est = influence_oracle(
            &g,
            &dist,
            &[NodeId(0)],
            1.5,
            100,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn oracle_two_node_analytic() {
        // 1 + P(tau <= 1.5) = 2 - exp(-1.5)
        let expected = 2.0 - (-1.5f64).exp();
        let g = DirectedGraph::from_pairs(2, &[(0, 1)]).unwrap();
        let dist = DelayDistribution::exponential(1.0).unwrap();
        let est = influence_oracle(
            &g,
            &dist,
            &[NodeId(0)],
            1.5,
            100_000,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert!(est.contains(expected, Z99), "{est:?} vs {expected}");
    }

    #[test]
    fn oracle_variance_shrinks_with_samples() {
        let g = DirectedGraph::from_pairs(4, &[(0, 1), (1, 2), (0, 3), (3, 2)]).unwrap();
        let dist = DelayDistribution::exponential(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let small = influence_oracle(&g, &dist, &[NodeId(0)], 1.0, 2_000, &mut rng).unwrap();
        let large = influence_oracle(&g, &dist, &[NodeId(0)], 1.0, 32_000, &mut rng).unwrap();
        // 16x samples -> std err / 4
        let ratio = small.std_err / large.std_err;
        assert!((ratio - 4.0).abs() < 0.6, "{ratio}");
        assert!(influence_oracle(&g, &dist, &[NodeId(0)], 1.0, 0, &mut rng).is_err());
    }

    /// Minimum path length over all simple paths, by exhaustive DFS.
    fn brute_force_distances(g: &DirectedGraph, delays: &DelaySet, seeds: &[NodeId]) -> Vec<f64> {
        fn dfs(
            g: &DirectedGraph,
            delays: &DelaySet,
            v: usize,
            d: f64,
            on_path: &mut Vec<bool>,
            best: &mut Vec<f64>,
        ) {
            if d < best[v] {
                best[v] = d;
            }
            for (idx, e) in g.out_edges(NodeId(v)) {
                let t = e.target.0;
                if !on_path[t] {
                    on_path[t] = true;
                    dfs(g, delays, t, d + delays.get(idx), on_path, best);
                    on_path[t] = false;
                }
            }
        }
        let mut best = vec![f64::INFINITY; g.n_nodes()];
        for &s in seeds {
            let mut on_path = vec![false; g.n_nodes()];
            on_path[s.0] = true;
            dfs(g, delays, s.0, 0.0, &mut on_path, &mut best);
        }
        best
    }

    fn arb_instance() -> impl Strategy<Value = (DirectedGraph, Vec<f64>, Vec<NodeId>)> {
        (1usize..7)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    proptest::collection::vec((0..n, 0..n), 0..20),
                    proptest::collection::vec(0..n, 1..3),
                )
            })
            .prop_flat_map(|(n, pairs, seeds)| {
                let mut seen = std::collections::HashSet::new();
                let pairs: Vec<(usize, usize)> = pairs
                    .into_iter()
                    .filter(|&(j, i)| j != i && seen.insert((j, i)))
                    .collect();
                let g = DirectedGraph::from_pairs(n, &pairs).unwrap();
                let m = g.n_edges();
                (
                    Just(g),
                    proptest::collection::vec(0.01f64..3.0, m),
                    Just(seeds.into_iter().map(NodeId).collect::<Vec<_>>()),
                )
            })
    }

    proptest! {
        #[test]
        fn dijkstra_matches_path_enumeration((g, tau, seeds) in arb_instance()) {
            let delays = DelaySet::new(&g, tau).unwrap();
            let fast = infection_times(&g, &delays, &seeds).unwrap().infection_time;
            let slow = brute_force_distances(&g, &delays, &seeds);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!(a == b || (a - b).abs() < 1e-12, "{} vs {}", a, b);
            }
            for (idx, e) in g.edges().iter().enumerate() {
                prop_assert!(fast[e.target.0] <= fast[e.source.0] + delays.get(idx) + 1e-12);
            }
        }

        #[test]
        fn monotone_in_horizon_and_seeds((g, tau, seeds) in arb_instance(), t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, extra in 0usize..6) {
            let delays = DelaySet::new(&g, tau).unwrap();
            let r = infection_times(&g, &delays, &seeds).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(r.count_within(lo) <= r.count_within(hi));

            let mut more = seeds.clone();
            more.push(NodeId(extra % g.n_nodes()));
            let r2 = infection_times(&g, &delays, &more).unwrap();
            for (a, b) in r.infection_time.iter().zip(&r2.infection_time) {
                prop_assert!(b <= a);
            }
        }
    }
}

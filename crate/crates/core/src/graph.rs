//! Directed graphs on a fixed node set, stochastic-block-model generation,
//! induced subgraphs and the plain-text edge-list format.
//!
//! Edge-list format:
//!
//! ```text
//! # comment lines start with '#'
//! 3          <- node count
//! 0 1 w      <- "source target class", class is w (within) or b (between)
//! 1 2 b
//! ```

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense index of a node in `0..n_nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether an edge joins two nodes of the same block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeClass {
    Within,
    Between,
}

impl EdgeClass {
    fn as_char(self) -> char {
        match self {
            EdgeClass::Within => 'w',
            EdgeClass::Between => 'b',
        }
    }
}

/// Directed edge `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub class: EdgeClass,
}

impl Edge {
    pub fn new(source: usize, target: usize, class: EdgeClass) -> Self {
        Self {
            source: NodeId(source),
            target: NodeId(target),
            class,
        }
    }
}

/// Immutable directed graph without self-loops or parallel edges.
///
/// Edges are kept sorted by `(source, target)`; the position of an edge in
/// [`DirectedGraph::edges`] is its edge index, which is how per-edge data
/// such as transmission delays is addressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
    out_start: Vec<usize>,
    in_start: Vec<usize>,
    in_edges: Vec<usize>,
}

impl DirectedGraph {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        for e in &edges {
            for node in [e.source, e.target] {
                if node.0 >= n_nodes {
                    return Err(Error::NodeOutOfRange {
                        node: node.0,
                        n_nodes,
                    });
                }
            }
            if e.source == e.target {
                return Err(Error::InvalidGraph(format!(
                    "self-loop at node {}",
                    e.source
                )));
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target))
        {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {} -> {}",
                w[0].source, w[0].target
            )));
        }

        let mut out_start = vec![0; n_nodes + 1];
        let mut in_start = vec![0; n_nodes + 1];
        for e in &edges {
            out_start[e.source.0 + 1] += 1;
            in_start[e.target.0 + 1] += 1;
        }
        for v in 0..n_nodes {
            out_start[v + 1] += out_start[v];
            in_start[v + 1] += in_start[v];
        }
        let mut fill = in_start.clone();
        let mut in_edges = vec![0; edges.len()];
        for (idx, e) in edges.iter().enumerate() {
            in_edges[fill[e.target.0]] = idx;
            fill[e.target.0] += 1;
        }

        Ok(Self {
            n_nodes,
            edges,
            out_start,
            in_start,
            in_edges,
        })
    }

    /// Convenience constructor for tests and examples: every edge is tagged
    /// as within-class.
    pub fn from_pairs(n_nodes: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(
            n_nodes,
            pairs
                .iter()
                .map(|&(j, i)| Edge::new(j, i, EdgeClass::Within)),
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n_nodes).map(NodeId)
    }

    /// Outgoing edges of `v` as `(edge index, edge)`.
    pub fn out_edges(&self, v: NodeId) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        let range = self.out_start[v.0]..self.out_start[v.0 + 1];
        range.map(move |idx| (idx, &self.edges[idx]))
    }

    /// Incoming edges of `v` as `(edge index, edge)`.
    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.in_edges[self.in_start[v.0]..self.in_start[v.0 + 1]]
            .iter()
            .map(move |&idx| (idx, &self.edges[idx]))
    }

    pub fn has_edge(&self, source: NodeId, target: NodeId) -> bool {
        self.out_edges(source).any(|(_, e)| e.target == target)
    }

    pub fn count_class(&self, class: EdgeClass) -> usize {
        self.edges.iter().filter(|e| e.class == class).count()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.0 < self.n_nodes {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                node: v.0,
                n_nodes: self.n_nodes,
            })
        }
    }
}

/// Parameters of a stochastic block model with two edge probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmParams {
    pub block_sizes: Vec<usize>,
    pub p_within: f64,
    pub p_between: f64,
}

impl SbmParams {
    pub fn new(block_sizes: Vec<usize>, p_within: f64, p_between: f64) -> Result<Self> {
        let params = Self {
            block_sizes,
            p_within,
            p_between,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_within", self.p_within), ("p_between", self.p_between)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {p} is not in [0, 1]"
                )));
            }
        }
        if self.n_nodes() == 0 {
            return Err(Error::InvalidParameter("SBM has zero nodes".into()));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Block index of every node; blocks occupy consecutive index ranges.
    pub fn block_assignment(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
            .collect()
    }

    /// Nodes of block `b`.
    pub fn block_nodes(&self, b: usize) -> Vec<NodeId> {
        let start: usize = self.block_sizes[..b].iter().sum();
        (start..start + self.block_sizes[b]).map(NodeId).collect()
    }
}

/// Samples a directed SBM graph: every ordered pair `(j, i)`, `j != i`, is an
/// edge independently, with probability depending on whether the endpoints
/// share a block. Pairs are visited in lexicographic order, so the result is
/// a deterministic function of the RNG state.
pub fn sbm_sample<R: Rng + ?Sized>(params: &SbmParams, rng: &mut R) -> Result<DirectedGraph> {
    params.validate()?;
    let blocks = params.block_assignment();
    let n = blocks.len();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            let (class, p) = if blocks[i] == blocks[j] {
                (EdgeClass::Within, params.p_within)
            } else {
                (EdgeClass::Between, params.p_between)
            };
            if rng.random_bool(p) {
                edges.push(Edge::new(j, i, class));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Subgraph induced by `nodes`, relabelled to `0..k` in ascending order of
/// the original indices. The second element maps new labels to old nodes.
pub fn induced_subgraph(
    g: &DirectedGraph,
    nodes: &[NodeId],
) -> Result<(DirectedGraph, Vec<NodeId>)> {
    let mut kept: Vec<NodeId> = nodes.to_vec();
    kept.sort();
    kept.dedup();
    let mut relabel = vec![usize::MAX; g.n_nodes()];
    for (new, &old) in kept.iter().enumerate() {
        g.check_node(old)?;
        relabel[old.0] = new;
    }
    let edges = g.edges().iter().filter_map(|e| {
        let (s, t) = (relabel[e.source.0], relabel[e.target.0]);
        (s != usize::MAX && t != usize::MAX).then(|| Edge::new(s, t, e.class))
    });
    Ok((DirectedGraph::new(kept.len(), edges)?, kept))
}

pub fn parse_edge_list(text: &str) -> Result<DirectedGraph> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut n_nodes: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some(n) = n_nodes else {
            let n = line
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("expected node count, found {line:?}")))?;
            n_nodes = Some(n);
            continue;
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected \"j i c\", found {line:?}"),
            ));
        }
        let node = |s: &str| -> Result<usize> {
            let v = s
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("invalid node index {s:?}")))?;
            if v >= n {
                return Err(parse_err(
                    line_no,
                    format!("node {v} out of range (n = {n})"),
                ));
            }
            Ok(v)
        };
        let (j, i) = (node(fields[0])?, node(fields[1])?);
        let class = match fields[2] {
            "w" => EdgeClass::Within,
            "b" => EdgeClass::Between,
            other => return Err(parse_err(line_no, format!("unknown edge class {other:?}"))),
        };
        if i == j {
            return Err(parse_err(line_no, format!("self-loop at node {j}")));
        }
        if !seen.insert((j, i)) {
            return Err(parse_err(line_no, format!("duplicate edge {j} -> {i}")));
        }
        edges.push(Edge::new(j, i, class));
    }

    let n = n_nodes.ok_or_else(|| parse_err(0, "missing node count".into()))?;
    DirectedGraph::new(n, edges)
}

pub fn write_edge_list<W: Write>(g: &DirectedGraph, mut out: W) -> Result<()> {
    writeln!(out, "{}", g.n_nodes())?;
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.source, e.target, e.class.as_char())?;
    }
    Ok(())
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn save_edge_list(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_edge_list(g, std::io::BufWriter::new(file))
}

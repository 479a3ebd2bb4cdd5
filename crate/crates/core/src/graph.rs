//! Directed weighted graph model, seeded random generation, and
//! edge-weight update batches.

use std::collections::HashSet;
use std::fmt::Display;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::scalar::Scalar;

/// Node index, dense in `0..node_count`.
pub type NodeId = usize;
/// Edge index into [`DirectedGraph::edges`].
pub type EdgeId = usize;

/// A directed edge with a positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<S> {
    pub tail: NodeId,
    pub head: NodeId,
    pub length: S,
}

/// Immutable directed weighted graph.
///
/// Invariants, enforced at construction: every length is strictly
/// positive, there are no self-loops, and each ordered pair `(tail, head)`
/// appears at most once. Out- and in-adjacency lists index into the edge
/// list and stay consistent with it.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph<S> {
    node_count: usize,
    edges: Vec<Edge<S>>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

impl<S: Scalar> DirectedGraph<S> {
    /// Builds a graph from `(tail, head, length)` triples, validating all
    /// structural invariants.
    pub fn new(
        node_count: usize,
        edge_list: impl IntoIterator<Item = (NodeId, NodeId, S)>,
    ) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut out_edges = vec![Vec::new(); node_count];
        let mut in_edges = vec![Vec::new(); node_count];
        let mut seen = HashSet::new();
        for (tail, head, length) in edge_list {
            if tail >= node_count {
                return Err(GraphError::NodeOutOfRange { node: tail, node_count });
            }
            if head >= node_count {
                return Err(GraphError::NodeOutOfRange { node: head, node_count });
            }
            if tail == head {
                return Err(GraphError::SelfLoop { node: tail });
            }
            if !(length > S::zero()) {
                return Err(GraphError::NonPositiveLength { tail, head });
            }
            if !seen.insert((tail, head)) {
                return Err(GraphError::DuplicateEdge { tail, head });
            }
            let id = edges.len();
            edges.push(Edge { tail, head, length });
            out_edges[tail].push(id);
            in_edges[head].push(id);
        }
        Ok(Self { node_count, edges, out_edges, in_edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<S>] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge<S> {
        &self.edges[id]
    }

    /// Ids of edges leaving `node`.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node]
    }

    /// Ids of edges entering `node`.
    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node]
    }

    /// Stable digest of the topology (node count plus edge endpoints,
    /// lengths excluded). Two graphs that differ only in weights share it.
    pub fn topology_digest(&self) -> u64 {
        let mut h = splitmix64(self.node_count as u64);
        for e in &self.edges {
            h = splitmix64(h ^ e.tail as u64);
            h = splitmix64(h ^ e.head as u64);
        }
        h
    }

    /// Nodes reachable from `source` along directed edges, as a mask
    /// indexed by node id (breadth-first traversal).
    pub fn reachable_from(&self, source: NodeId) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        if source >= self.node_count {
            return seen;
        }
        let mut queue = std::collections::VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(node) = queue.pop_front() {
            for &eid in &self.out_edges[node] {
                let next = self.edges[eid].head;
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        seen
    }

    /// Ascending list of node ids reachable from `source`.
    pub fn reachable_nodes(&self, source: NodeId) -> Vec<NodeId> {
        self.reachable_from(source)
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| r.then_some(i))
            .collect()
    }

    /// Nodes *not* reachable from `source`.
    pub fn unreachable_nodes(&self, source: NodeId) -> Vec<NodeId> {
        self.reachable_from(source)
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| (!r).then_some(i))
            .collect()
    }

    /// Applies an update batch, returning a new graph with the changed
    /// lengths. The receiver is left untouched; topology is preserved.
    pub fn apply_updates(&self, updates: &UpdateSet<S>) -> Result<Self, GraphError> {
        let mut next = self.clone();
        for &(edge, new_length) in &updates.changes {
            let e = next.edges.get_mut(edge).ok_or(GraphError::UnknownEdge { edge })?;
            if !(new_length > S::zero()) {
                return Err(GraphError::NonPositiveLength { tail: e.tail, head: e.head });
            }
            e.length = new_length;
        }
        Ok(next)
    }
}

/// Weight distribution for the G(n,p) generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// Uniform real weights on `[min, max]`.
    Continuous,
    /// Uniform integer weights on `ceil(min)..=floor(max)`.
    Integer,
}

/// Seeded directed Erdos-Renyi G(n,p) graph with uniform random weights on
/// `[weight_min, weight_max]`. Each ordered pair `(i, j)`, `i != j`, gets an
/// edge independently with probability `p`; the output is bit-identical for
/// equal inputs.
pub fn generate_erdos_renyi<S: Scalar>(
    n: usize,
    p: f64,
    weight_min: S,
    weight_max: S,
    seed: u64,
) -> Result<DirectedGraph<S>, GraphError> {
    generate_erdos_renyi_mode(n, p, weight_min, weight_max, seed, WeightMode::Continuous)
}

/// [`generate_erdos_renyi`] with an explicit weight distribution.
pub fn generate_erdos_renyi_mode<S: Scalar>(
    n: usize,
    p: f64,
    weight_min: S,
    weight_max: S,
    seed: u64,
    mode: WeightMode,
) -> Result<DirectedGraph<S>, GraphError> {
    if n < 2 {
        return Err(GraphError::Parameter(format!("need at least 2 nodes, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::Parameter(format!("edge probability must be in (0, 1], got {p}")));
    }
    if !(weight_min > S::zero()) || weight_min > weight_max {
        return Err(GraphError::Parameter(
            "weight range must satisfy 0 < min <= max".to_string(),
        ));
    }
    let lo = weight_min.to_f64().unwrap();
    let hi = weight_max.to_f64().unwrap();
    let (ilo, ihi) = (lo.ceil() as i64, hi.floor() as i64);
    if mode == WeightMode::Integer && ilo > ihi {
        return Err(GraphError::Parameter(format!(
            "no integers in weight range [{lo}, {hi}]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for tail in 0..n {
        for head in 0..n {
            if tail == head {
                continue;
            }
            if rng.gen_bool(p) {
                let w = match mode {
                    WeightMode::Continuous => rng.gen_range(lo..=hi),
                    WeightMode::Integer => rng.gen_range(ilo..=ihi) as f64,
                };
                edges.push((tail, head, S::from_f64_lossy(w)));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

/// Kind of weight change in an update batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateCategory {
    Increase,
    Decrease,
    Mixed,
}

impl Display for UpdateCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            UpdateCategory::Increase => "increase",
            UpdateCategory::Decrease => "decrease",
            UpdateCategory::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

impl FromStr for UpdateCategory {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "increase" => Ok(UpdateCategory::Increase),
            "decrease" => Ok(UpdateCategory::Decrease),
            "mixed" => Ok(UpdateCategory::Mixed),
            other => Err(GraphError::Parameter(format!("unknown update category '{other}'"))),
        }
    }
}

/// A batch of edge-length changes sampled for one dynamic-workload cell.
///
/// `rue` is the ratio of updated edges, `rcw` the ratio of changed weight;
/// both are kept for provenance alongside the seed that drew the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSet<S> {
    pub changes: Vec<(EdgeId, S)>,
    pub category: UpdateCategory,
    pub rue: f64,
    pub rcw: f64,
    pub seed: u64,
}

impl<S: Scalar> UpdateSet<S> {
    /// An empty batch (useful as the no-op update).
    pub fn empty(category: UpdateCategory) -> Self {
        Self { changes: Vec::new(), category, rue: 0.0, rcw: 0.0, seed: 0 }
    }
}

/// Samples `round(rue * |E|)` distinct edges (at least one) uniformly at
/// random and assigns new lengths: `old * (1 + rcw)` for increases,
/// `old * (1 - rcw)` for decreases. The mixed category splits the selection
/// in half and applies one rule per half (increases take the odd edge).
pub fn sample_updates<S: Scalar>(
    graph: &DirectedGraph<S>,
    rue: f64,
    rcw: f64,
    category: UpdateCategory,
    seed: u64,
) -> Result<UpdateSet<S>, GraphError> {
    if !(rue > 0.0 && rue <= 1.0) {
        return Err(GraphError::Parameter(format!("rue must be in (0, 1], got {rue}")));
    }
    let rcw_ok = match category {
        UpdateCategory::Increase => rcw > 0.0 && rcw <= 10.0,
        UpdateCategory::Decrease | UpdateCategory::Mixed => rcw > 0.0 && rcw <= 0.9,
    };
    if !rcw_ok {
        return Err(GraphError::Parameter(format!(
            "rcw {rcw} out of range for category {category}"
        )));
    }
    let m = graph.edge_count();
    if m == 0 {
        return Err(GraphError::Parameter("graph has no edges to update".to_string()));
    }
    let count = ((rue * m as f64).round() as usize).clamp(1, m);
    if category == UpdateCategory::Mixed && count < 2 {
        return Err(GraphError::Parameter(
            "mixed updates need at least 2 selected edges".to_string(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let selected = sample(&mut rng, m, count).into_vec();
    let grow = S::from_f64_lossy(1.0 + rcw);
    let shrink = S::from_f64_lossy(1.0 - rcw);
    let increases = match category {
        UpdateCategory::Increase => count,
        UpdateCategory::Decrease => 0,
        UpdateCategory::Mixed => count.div_ceil(2),
    };
    let mut changes: Vec<(EdgeId, S)> = selected
        .into_iter()
        .enumerate()
        .map(|(k, edge)| {
            let factor = if k < increases { grow } else { shrink };
            (edge, graph.edge(edge).length * factor)
        })
        .collect();
    changes.sort_unstable_by_key(|&(edge, _)| edge);
    Ok(UpdateSet { changes, category, rue, rcw, seed })
}

/// Writes the plain-text graph format: a `"n m"` header line, then one
/// `"tail head length"` line per edge. Lengths are printed with 17
/// significant digits so a read back reproduces them bit for bit.
pub fn write_text<S: Scalar, W: Write>(graph: &DirectedGraph<S>, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{} {}", graph.node_count(), graph.edge_count())?;
    for e in graph.edges() {
        writeln!(out, "{} {} {:.16e}", e.tail, e.head, e.length)?;
    }
    Ok(())
}

/// Parses the plain-text graph format written by [`write_text`].
pub fn read_text<S: Scalar, R: Read>(input: R) -> Result<DirectedGraph<S>, GraphError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let (n, m) = loop {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| GraphError::Parse { line: 1, message: "empty file".to_string() })?;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
            tok.ok_or_else(|| GraphError::Parse {
                line: lineno + 1,
                message: "expected 'n m' header".to_string(),
            })?
            .parse()
            .map_err(|e| GraphError::Parse { line: lineno + 1, message: format!("{e}") })
        };
        break (parse(it.next())?, parse(it.next())?);
    };
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut tok = |what: &str| {
            it.next().ok_or_else(|| GraphError::Parse {
                line: lineno + 1,
                message: format!("missing {what}"),
            })
        };
        let tail: NodeId = tok("tail")?
            .parse()
            .map_err(|e| GraphError::Parse { line: lineno + 1, message: format!("{e}") })?;
        let head: NodeId = tok("head")?
            .parse()
            .map_err(|e| GraphError::Parse { line: lineno + 1, message: format!("{e}") })?;
        let length = S::from_str(tok("length")?).map_err(|_| GraphError::Parse {
            line: lineno + 1,
            message: "bad length literal".to_string(),
        })?;
        edges.push((tail, head, length));
    }
    if edges.len() != m {
        return Err(GraphError::Parse {
            line: 1,
            message: format!("header promised {m} edges, file has {}", edges.len()),
        });
    }
    DirectedGraph::new(n, edges)
}

/// Convenience wrapper writing [`write_text`] output to a file path.
pub fn write_file<S: Scalar>(graph: &DirectedGraph<S>, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_text(graph, &mut file)?;
    Ok(())
}

/// Convenience wrapper parsing a graph from a file path.
pub fn read_file<S: Scalar>(path: impl AsRef<Path>) -> Result<DirectedGraph<S>, GraphError> {
    read_text(std::fs::File::open(path)?)
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_path() -> DirectedGraph<f64> {
        DirectedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(
            DirectedGraph::new(2, [(0, 0, 1.0)]),
            Err(GraphError::SelfLoop { node: 0 })
        ));
        assert!(matches!(
            DirectedGraph::new(2, [(0, 1, 1.0), (0, 1, 2.0)]),
            Err(GraphError::DuplicateEdge { tail: 0, head: 1 })
        ));
        assert!(matches!(
            DirectedGraph::new(2, [(0, 1, 0.0)]),
            Err(GraphError::NonPositiveLength { .. })
        ));
        assert!(matches!(
            DirectedGraph::new(2, [(0, 3, 1.0)]),
            Err(GraphError::NodeOutOfRange { node: 3, .. })
        ));
    }

    #[test]
    fn adjacency_round_trips_edge_list() {
        let g = DirectedGraph::new(4, [(0, 1, 1.0), (0, 2, 2.0), (2, 1, 3.0), (1, 3, 4.0)]).unwrap();
        for (id, e) in g.edges().iter().enumerate() {
            assert!(g.out_edges(e.tail).contains(&id));
            assert!(g.in_edges(e.head).contains(&id));
        }
        let listed: usize = (0..g.node_count()).map(|v| g.out_edges(v).len()).sum();
        assert_eq!(listed, g.edge_count());
        let listed_in: usize = (0..g.node_count()).map(|v| g.in_edges(v).len()).sum();
        assert_eq!(listed_in, g.edge_count());
    }

    #[test]
    fn complete_digraph_on_two_nodes() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(2, 1.0, 1.0, 1.0, 9).unwrap();
        let pairs: Vec<_> = g.edges().iter().map(|e| (e.tail, e.head)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn generator_is_deterministic() {
        let a: DirectedGraph<f64> = generate_erdos_renyi(1000, 0.01, 1.0, 1000.0, 42).unwrap();
        let b: DirectedGraph<f64> = generate_erdos_renyi(1000, 0.01, 1.0, 1000.0, 42).unwrap();
        assert_eq!(a, b);
        let c: DirectedGraph<f64> = generate_erdos_renyi(1000, 0.01, 1.0, 1000.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_edge_count_concentrates() {
        // mean edge count over 50 seeds at n=500, p=0.02 within 3% of n(n-1)p
        let expect = 500.0 * 499.0 * 0.02;
        let mut total = 0usize;
        for seed in 0..50 {
            let g: DirectedGraph<f64> = generate_erdos_renyi(500, 0.02, 1.0, 1000.0, seed).unwrap();
            total += g.edge_count();
        }
        let mean = total as f64 / 50.0;
        assert!((mean - expect).abs() <= 0.03 * expect, "mean {mean} vs expected {expect}");
    }

    #[test]
    fn integer_mode_draws_integers() {
        let g: DirectedGraph<f64> =
            generate_erdos_renyi_mode(50, 0.2, 1.0, 1000.0, 7, WeightMode::Integer).unwrap();
        assert!(g.edges().iter().all(|e| e.length.fract() == 0.0 && (1.0..=1000.0).contains(&e.length)));
    }

    #[test]
    fn reachability_on_chains() {
        let g = unit_path();
        assert_eq!(g.reachable_nodes(0), vec![0, 1, 2]);
        let g2 = DirectedGraph::new(2, [(1, 0, 1.0)]).unwrap();
        assert_eq!(g2.reachable_nodes(0), vec![0]);
        assert_eq!(g2.unreachable_nodes(0), vec![1]);
    }

    #[test]
    fn sample_updates_selects_rounded_share() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(100, 0.11, 1.0, 1000.0, 3).unwrap();
        assert!(g.edge_count() > 500);
        let u = sample_updates(&g, 0.1, 0.5, UpdateCategory::Increase, 11).unwrap();
        assert_eq!(u.changes.len(), (0.1 * g.edge_count() as f64).round() as usize);
        // distinct edges
        let ids: HashSet<_> = u.changes.iter().map(|&(e, _)| e).collect();
        assert_eq!(ids.len(), u.changes.len());
    }

    #[test]
    fn update_rules_match_ratio_semantics() {
        let g = DirectedGraph::new(2, [(0, 1, 100.0)]).unwrap();
        let inc = sample_updates(&g, 1.0, 1.0, UpdateCategory::Increase, 0).unwrap();
        assert_eq!(inc.changes, vec![(0, 200.0)]);
        let dec = sample_updates(&g, 1.0, 0.1, UpdateCategory::Decrease, 0).unwrap();
        assert_eq!(dec.changes, vec![(0, 100.0 * (1.0 - 0.1))]);
    }

    #[test]
    fn mixed_updates_split_evenly() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(60, 0.2, 1.0, 1000.0, 5).unwrap();
        let u = sample_updates(&g, 0.3, 0.4, UpdateCategory::Mixed, 21).unwrap();
        let mut inc = 0;
        let mut dec = 0;
        for &(edge, new_len) in &u.changes {
            let old = g.edge(edge).length;
            if new_len > old {
                inc += 1;
            } else {
                dec += 1;
            }
        }
        assert!(inc > 0 && dec > 0);
        assert!((inc as i64 - dec as i64).abs() <= 1, "inc {inc} dec {dec}");
    }

    #[test]
    fn rcw_ranges_are_enforced() {
        let g = unit_path();
        assert!(sample_updates(&g, 0.5, 11.0, UpdateCategory::Increase, 0).is_err());
        assert!(sample_updates(&g, 0.5, 0.95, UpdateCategory::Decrease, 0).is_err());
        assert!(sample_updates(&g, 0.5, 0.0, UpdateCategory::Increase, 0).is_err());
        assert!(sample_updates(&g, 1.5, 0.1, UpdateCategory::Increase, 0).is_err());
    }

    #[test]
    fn apply_updates_is_a_point_mutation() {
        let g = DirectedGraph::new(3, [(0, 1, 5.0), (1, 2, 7.0)]).unwrap();
        let u = UpdateSet {
            changes: vec![(0, 8.0)],
            category: UpdateCategory::Increase,
            rue: 0.5,
            rcw: 0.6,
            seed: 0,
        };
        let g2 = g.apply_updates(&u).unwrap();
        assert_eq!(g2.edge(0).length, 8.0);
        assert_eq!(g2.edge(1).length, 7.0);
        assert_eq!(g.edge(0).length, 5.0); // original untouched
        // inverse restores the original
        let back = UpdateSet { changes: vec![(0, 5.0)], ..u };
        assert_eq!(g2.apply_updates(&back).unwrap(), g);
        // empty set is the identity
        let empty = UpdateSet::empty(UpdateCategory::Increase);
        assert_eq!(g.apply_updates(&empty).unwrap(), g);
    }

    #[test]
    fn apply_updates_rejects_unknown_edges() {
        let g = unit_path();
        let u = UpdateSet {
            changes: vec![(99, 1.0)],
            category: UpdateCategory::Increase,
            rue: 1.0,
            rcw: 1.0,
            seed: 0,
        };
        assert!(matches!(g.apply_updates(&u), Err(GraphError::UnknownEdge { edge: 99 })));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(40, 0.15, 1.0, 1000.0, 17).unwrap();
        let mut buf = Vec::new();
        write_text(&g, &mut buf).unwrap();
        let back: DirectedGraph<f64> = read_text(&buf[..]).unwrap();
        assert_eq!(g, back);
    }
}

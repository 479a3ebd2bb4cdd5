//! Classical single-source shortest-path-tree algorithms.
//!
//! These serve both as benchmark competitors and as exact oracles for the
//! adaptive solver: with positive lengths and identical float arithmetic,
//! label setting and Bellman-Ford agree bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::GraphError;
use crate::graph::{DirectedGraph, EdgeId, NodeId, UpdateSet};
use crate::scalar::Scalar;

/// Output of a baseline SPT run. Unreached nodes carry `None`, never an
/// infinite sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult<S> {
    pub distances: Vec<Option<S>>,
    /// Predecessor edge id per reached non-source node.
    pub parent: Vec<Option<EdgeId>>,
    pub relaxations: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineAlgorithm {
    LabelSetting,
    BellmanFord,
}

struct HeapEntry<S> {
    dist: S,
    node: NodeId,
}

impl<S: Scalar> PartialEq for HeapEntry<S> {
    fn eq(&self, other: &Self) -> bool {
        self.dist == other.dist && self.node == other.node
    }
}
impl<S: Scalar> Eq for HeapEntry<S> {}

// Min-heap by distance, ties broken toward the smallest node id.
impl<S: Scalar> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact SPT by priority-queue label setting (Dijkstra with lazy deletion).
/// Lengths are positive by the graph's construction invariant.
pub fn label_setting_spt<S: Scalar>(graph: &DirectedGraph<S>, source: NodeId) -> BaselineResult<S> {
    let start = Instant::now();
    let n = graph.node_count();
    let mut distances: Vec<Option<S>> = vec![None; n];
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut relaxations = 0u64;
    let mut heap = BinaryHeap::new();
    distances[source] = Some(S::zero());
    heap.push(HeapEntry { dist: S::zero(), node: source });
    while let Some(HeapEntry { dist, node }) = heap.pop() {
        if distances[node] != Some(dist) {
            continue; // stale entry
        }
        for &eid in graph.out_edges(node) {
            let edge = graph.edge(eid);
            let candidate = dist + edge.length;
            if distances[edge.head].map_or(true, |d| candidate < d) {
                distances[edge.head] = Some(candidate);
                parent[edge.head] = Some(eid);
                relaxations += 1;
                heap.push(HeapEntry { dist: candidate, node: edge.head });
            }
        }
    }
    BaselineResult { distances, parent, relaxations, wall_time: start.elapsed() }
}

/// Exact SPT by Bellman-Ford: at most `n - 1` relaxation rounds in
/// edge-list order, exiting early once a round changes nothing.
pub fn bellman_ford_spt<S: Scalar>(graph: &DirectedGraph<S>, source: NodeId) -> BaselineResult<S> {
    let start = Instant::now();
    let n = graph.node_count();
    let mut distances: Vec<Option<S>> = vec![None; n];
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    let mut relaxations = 0u64;
    distances[source] = Some(S::zero());
    for _ in 1..n {
        let mut changed = false;
        for (eid, edge) in graph.edges().iter().enumerate() {
            if let Some(d_tail) = distances[edge.tail] {
                let candidate = d_tail + edge.length;
                if distances[edge.head].map_or(true, |d| candidate < d) {
                    distances[edge.head] = Some(candidate);
                    parent[edge.head] = Some(eid);
                    relaxations += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    BaselineResult { distances, parent, relaxations, wall_time: start.elapsed() }
}

/// Applies an update batch and recomputes the SPT from scratch, the way the
/// classical algorithms handle dynamic graphs. The reported wall time
/// covers the full recompute.
pub fn recompute_on_update<S: Scalar>(
    graph: &DirectedGraph<S>,
    updates: &UpdateSet<S>,
    source: NodeId,
    algorithm: BaselineAlgorithm,
) -> Result<BaselineResult<S>, GraphError> {
    let start = Instant::now();
    let updated = graph.apply_updates(updates)?;
    let mut result = match algorithm {
        BaselineAlgorithm::LabelSetting => label_setting_spt(&updated, source),
        BaselineAlgorithm::BellmanFord => bellman_ford_spt(&updated, source),
    };
    result.wall_time = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_erdos_renyi, UpdateCategory};

    fn unit_path() -> DirectedGraph<f64> {
        DirectedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn chain_distances() {
        let g = unit_path();
        let r = label_setting_spt(&g, 0);
        assert_eq!(r.distances, vec![Some(0.0), Some(1.0), Some(2.0)]);
        let b = bellman_ford_spt(&g, 0);
        assert_eq!(b.distances, r.distances);
    }

    #[test]
    fn triangle_prefers_two_hop_path() {
        // s->a (1), a->t (1) beats s->t (3)
        let g = DirectedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)]).unwrap();
        let r = label_setting_spt(&g, 0);
        assert_eq!(r.distances[2], Some(2.0));
        assert_eq!(r.parent[2], Some(1)); // edge a->t
    }

    #[test]
    fn single_node_graph() {
        let g = DirectedGraph::<f64>::new(1, []).unwrap();
        let b = bellman_ford_spt(&g, 0);
        assert_eq!(b.distances, vec![Some(0.0)]);
        assert_eq!(b.relaxations, 0);
    }

    #[test]
    fn unreachable_nodes_are_marked_in_both() {
        let g = DirectedGraph::new(3, [(0, 1, 1.0), (2, 1, 1.0)]).unwrap();
        let ls = label_setting_spt(&g, 0);
        let bf = bellman_ford_spt(&g, 0);
        assert_eq!(ls.distances[2], None);
        assert_eq!(bf.distances[2], None);
        assert_eq!(ls.distances, bf.distances);
    }

    #[test]
    fn agrees_with_bellman_ford_on_random_graph() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(100, 0.08, 1.0, 1000.0, 3).unwrap();
        let ls = label_setting_spt(&g, 0);
        let bf = bellman_ford_spt(&g, 0);
        assert_eq!(ls.distances, bf.distances);
    }

    #[test]
    fn recompute_matches_fresh_run() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(200, 0.04, 1.0, 1000.0, 8).unwrap();
        let updates =
            crate::graph::sample_updates(&g, 0.2, 0.3, UpdateCategory::Mixed, 77).unwrap();
        let rec =
            recompute_on_update(&g, &updates, 0, BaselineAlgorithm::LabelSetting).unwrap();
        let fresh = label_setting_spt(&g.apply_updates(&updates).unwrap(), 0);
        assert_eq!(rec.distances, fresh.distances);
    }

    #[test]
    fn increasing_a_tree_edge_never_shrinks_distances() {
        let g: DirectedGraph<f64> = generate_erdos_renyi(60, 0.1, 1.0, 1000.0, 21).unwrap();
        let before = label_setting_spt(&g, 0);
        // bump the first tree edge we find
        let eid = before.parent.iter().flatten().next().copied().unwrap();
        let u = UpdateSet {
            changes: vec![(eid, g.edge(eid).length * 2.0)],
            category: UpdateCategory::Increase,
            rue: 0.0,
            rcw: 1.0,
            seed: 0,
        };
        let after = label_setting_spt(&g.apply_updates(&u).unwrap(), 0);
        for (a, b) in after.distances.iter().zip(&before.distances) {
            match (a, b) {
                (Some(da), Some(db)) => assert!(da >= db),
                (None, None) => {}
                other => panic!("reachability changed: {other:?}"),
            }
        }
    }
}

//! Machine-readable views of solver results.

use serde_json::{json, Value};

use crate::graph::DirectedGraph;
use crate::physarum::SptResult;
use crate::scalar::Scalar;

/// JSON view of a solver result: mode, convergence flag, iteration count,
/// distances (null for unreached nodes), the support edge list as
/// `[tail, head]` pairs, and the wall time in milliseconds.
pub fn result_json<S: Scalar>(result: &SptResult<S>, graph: &DirectedGraph<S>) -> Value {
    let distances: Vec<Value> = result
        .distances
        .iter()
        .map(|d| match d {
            Some(v) => json!(v.to_f64()),
            None => Value::Null,
        })
        .collect();
    let support: Vec<Value> = result
        .support
        .iter()
        .map(|&eid| {
            let e = graph.edge(eid);
            json!([e.tail, e.head])
        })
        .collect();
    json!({
        "mode": result.mode.label(),
        "converged": result.converged,
        "iterations": result.iterations_used,
        "distances": distances,
        "support": support,
        "wall_time_ms": result.wall_time.as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physarum::{solve, Mode, SolverConfig};

    #[test]
    fn json_has_the_documented_fields() {
        let g = DirectedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let config = SolverConfig::for_graph(&g);
        let r = solve(&g, Mode::Tree { source: 0 }, &config, None).unwrap();
        let v = result_json(&r, &g);
        assert_eq!(v["mode"], "tree");
        assert_eq!(v["converged"], true);
        assert_eq!(v["distances"].as_array().unwrap().len(), 3);
        assert_eq!(v["support"].as_array().unwrap().len(), 2);
        assert!(v["wall_time_ms"].is_number());
        assert!(v["iterations"].is_number());
    }

    #[test]
    fn unreached_nodes_serialize_as_null() {
        let g = DirectedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 9.0)]).unwrap();
        let config = SolverConfig::for_graph(&g);
        let r = solve(&g, Mode::TwoTerminal { source: 0, sink: 1 }, &config, None).unwrap();
        let v = result_json(&r, &g);
        // node 2 is off the s->a path support
        assert!(v["distances"][2].is_null());
    }
}

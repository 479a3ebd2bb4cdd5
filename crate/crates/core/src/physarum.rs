//! The adaptive amoeba iteration.
//!
//! Each step solves the grounded Kirchhoff system for node pressures,
//! derives per-edge flux `Q = D/L (p_tail - p_head)`, clips negative flux
//! to zero so flow respects edge direction, and advances conductivities
//! toward the flux. The loop stops when the total conductivity change
//! `sum |D_n - D_{n-1}|` drops below the configured threshold. At the
//! fixed point the flux-carrying edges trace shortest paths: a single
//! source-to-sink route in two-terminal mode, a shortest path tree (or
//! DAG under ties) in tree mode.
//!
//! Warm starts reuse a previously converged conductivity field, which is
//! what makes re-solving after edge-weight changes cheap: only the region
//! the update disturbs has to re-adapt.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::PhysarumError;
use crate::graph::{DirectedGraph, EdgeId, NodeId};
use crate::linsolve;
use crate::scalar::Scalar;

/// What the solver is asked to find.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Shortest path from `source` to `sink`; the sink is grounded.
    TwoTerminal { source: NodeId, sink: NodeId },
    /// Shortest path tree rooted at `source`; every other node is a sink
    /// drawing `I0/(N-1)`, and the source is grounded.
    Tree { source: NodeId },
}

impl Mode {
    pub fn source(&self) -> NodeId {
        match *self {
            Mode::TwoTerminal { source, .. } => source,
            Mode::Tree { source } => source,
        }
    }

    /// The node whose pressure is pinned to zero.
    pub fn ground(&self) -> NodeId {
        match *self {
            Mode::TwoTerminal { sink, .. } => sink,
            Mode::Tree { source } => source,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Mode::TwoTerminal { .. } => "two_terminal",
            Mode::Tree { .. } => "tree",
        }
    }

    pub(crate) fn validate_for<S: Scalar>(&self, graph: &DirectedGraph<S>) -> Result<(), PhysarumError> {
        let n = graph.node_count();
        let check = |node: NodeId| {
            if node < n {
                Ok(())
            } else {
                Err(PhysarumError::Config(format!("node {node} out of range for {n} nodes")))
            }
        };
        match *self {
            Mode::TwoTerminal { source, sink } => {
                check(source)?;
                check(sink)?;
                if source == sink {
                    return Err(PhysarumError::Config(
                        "two-terminal mode needs distinct source and sink".to_string(),
                    ));
                }
            }
            Mode::Tree { source } => check(source)?,
        }
        Ok(())
    }
}

/// Discrete conductivity update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Explicit Euler step `D <- D + (Q - D) dt` (with `Q` already clipped
    /// to zero on counter-directional edges). The canonical rule.
    #[default]
    Explicit,
    /// Semi-implicit variant `D <- (D + dt Q) / (1 + dt)`.
    SemiImplicit,
}

impl UpdateRule {
    /// Advances one conductivity given the post-cutoff flux.
    pub fn advance<S: Scalar>(self, conductivity: S, flux: S, dt: S) -> S {
        match self {
            UpdateRule::Explicit => conductivity + (flux - conductivity) * dt,
            UpdateRule::SemiImplicit => (conductivity + dt * flux) / (S::one() + dt),
        }
    }
}

/// Initial conductivity assignment for cold starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConductivityInit {
    /// Every edge starts at 1, giving reproducible runs.
    #[default]
    Constant,
    /// Seeded uniform draw from (0, 1] per edge.
    Seeded(u64),
}

/// Tunable parameters of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<S> {
    /// Time step, strictly inside (0, 1).
    pub dt: S,
    /// Convergence threshold on the total conductivity change per step.
    pub delta: S,
    /// Support threshold as a fraction of the per-sink demand.
    pub flux_epsilon: S,
    pub max_iterations: usize,
    /// Current injected at the source (`I0`).
    pub source_current: S,
    /// Conductivities never fall below this; it keeps the pressure system
    /// formally connected while decayed edges carry negligible flow.
    pub conductivity_floor: S,
    pub update_rule: UpdateRule,
    pub init: ConductivityInit,
    /// Relative residual tolerance handed to the pressure solver.
    pub linear_tolerance: f64,
}

impl<S: Scalar> SolverConfig<S> {
    /// Defaults scaled to the graph: `delta` grows with the edge count
    /// (the convergence sum does too) and the iteration budget with the
    /// node count.
    pub fn for_graph(graph: &DirectedGraph<S>) -> Self {
        Self {
            dt: S::from_f64_lossy(0.5),
            delta: S::from_f64_lossy(1e-6 * graph.edge_count().max(1) as f64),
            flux_epsilon: S::from_f64_lossy(0.05),
            max_iterations: 10 * graph.node_count().max(1),
            source_current: S::one(),
            conductivity_floor: S::from_f64_lossy(1e-12),
            update_rule: UpdateRule::Explicit,
            init: ConductivityInit::Constant,
            linear_tolerance: 1e-10,
        }
    }

    /// Verification-grade settings: a much tighter stopping threshold, a
    /// large iteration budget, and a conductivity floor raised to a fifth
    /// of the support threshold so starved edges settle quickly at a level
    /// that still reads as "off". Intended for double precision.
    pub fn high_accuracy(graph: &DirectedGraph<S>, mode: &Mode) -> Self {
        let demand_scale = match mode {
            Mode::TwoTerminal { .. } => 1.0,
            Mode::Tree { .. } => 1.0 / (graph.node_count().max(2) - 1) as f64,
        };
        Self {
            delta: S::from_f64_lossy(5e-15 * graph.edge_count().max(1) as f64),
            max_iterations: 200_000,
            conductivity_floor: S::from_f64_lossy(0.01 * demand_scale),
            ..Self::for_graph(graph)
        }
    }

    fn validate(&self) -> Result<(), PhysarumError> {
        let fail = |msg: &str| Err(PhysarumError::Config(msg.to_string()));
        if !(self.dt > S::zero() && self.dt < S::one()) {
            return fail("dt must lie strictly inside (0, 1)");
        }
        if !(self.delta > S::zero()) {
            return fail("delta must be positive");
        }
        if !(self.flux_epsilon > S::zero() && self.flux_epsilon < S::one()) {
            return fail("flux_epsilon must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        if !(self.source_current > S::zero()) {
            return fail("source_current must be positive");
        }
        if !(self.conductivity_floor >= S::zero() && self.conductivity_floor < S::one()) {
            return fail("conductivity_floor must lie in [0, 1)");
        }
        if !(self.linear_tolerance > 0.0) {
            return fail("linear_tolerance must be positive");
        }
        Ok(())
    }
}

/// Evolving state of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysarumState<S> {
    /// Per-edge conductivity `D`, always at or above the configured floor.
    pub conductivity: Vec<S>,
    /// Per-node pressure from the latest step; the grounded node is exactly 0.
    pub pressure: Vec<S>,
    /// Per-edge flux after the directed cutoff, never negative.
    pub flux: Vec<S>,
    /// Steps taken so far.
    pub iteration: usize,
    /// Total conductivity change of the latest step.
    pub last_delta: S,
    /// Worst pre-cutoff flux conservation residual seen in this run.
    pub max_divergence: S,
}

impl<S: Scalar> PhysarumState<S> {
    fn cold(graph: &DirectedGraph<S>, config: &SolverConfig<S>) -> Vec<S> {
        match config.init {
            ConductivityInit::Constant => vec![S::one(); graph.edge_count()],
            ConductivityInit::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..graph.edge_count())
                    .map(|_| S::from_f64_lossy(1.0 - rng.gen::<f64>()).max(config.conductivity_floor))
                    .collect()
            }
        }
    }

    fn fresh(conductivity: Vec<S>, node_count: usize) -> Self {
        let edges = conductivity.len();
        Self {
            conductivity,
            pressure: vec![S::zero(); node_count],
            flux: vec![S::zero(); edges],
            iteration: 0,
            last_delta: S::infinity(),
            max_divergence: S::zero(),
        }
    }

    /// Convergence test: true once the latest step changed the total
    /// conductivity by no more than `delta`.
    pub fn converged(&self, config: &SolverConfig<S>) -> bool {
        self.iteration > 0 && self.last_delta <= config.delta
    }
}

/// Cold-start state for a graph under this config: conductivities per
/// `config.init`, pressures and flux zeroed, no steps taken.
pub fn initial_state<S: Scalar>(
    graph: &DirectedGraph<S>,
    config: &SolverConfig<S>,
) -> PhysarumState<S> {
    PhysarumState::fresh(PhysarumState::cold(graph, config), graph.node_count())
}

/// Why a solver run stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    IterationLimit,
    /// Conductivity decay cut current-carrying nodes off from the ground
    /// mid-run (only possible with a zero conductivity floor).
    SupportDisconnected(Vec<NodeId>),
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SptResult<S> {
    pub mode: Mode,
    /// Shortest distances within the support subgraph; `None` marks nodes
    /// the support does not reach.
    pub distances: Vec<Option<S>>,
    /// Edges whose converged flux exceeds the support threshold.
    pub support: Vec<EdgeId>,
    pub state: PhysarumState<S>,
    pub iterations_used: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub wall_time: Duration,
    pub(crate) topology_digest: u64,
}

/// Right-hand side of the pressure system: `+I0` at the source and either
/// `-I0` at the sink (two-terminal) or `-I0/(N-1)` at every other node
/// (tree). The tree entries are balanced by compensated summation so they
/// add up to zero exactly.
pub fn pressure_rhs<S: Scalar>(mode: &Mode, node_count: usize, source_current: S) -> Vec<S> {
    let mut rhs = vec![S::zero(); node_count];
    match *mode {
        Mode::TwoTerminal { source, sink } => {
            rhs[source] = source_current;
            rhs[sink] = -source_current;
        }
        Mode::Tree { source } => {
            let demand = source_current / S::from_usize(node_count - 1).unwrap();
            for (node, entry) in rhs.iter_mut().enumerate() {
                *entry = if node == source { source_current } else { -demand };
            }
            let imbalance = neumaier_sum(&rhs);
            rhs[source] -= imbalance;
        }
    }
    rhs
}

fn neumaier_sum<S: Scalar>(values: &[S]) -> S {
    let mut sum = S::zero();
    let mut compensation = S::zero();
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// One iteration: pressure solve, flux with directed cutoff, conductivity
/// advance, and the convergence statistic.
pub fn step<S: Scalar>(
    graph: &DirectedGraph<S>,
    state: &PhysarumState<S>,
    rhs: &[S],
    ground: NodeId,
    config: &SolverConfig<S>,
) -> Result<PhysarumState<S>, PhysarumError> {
    let system = linsolve::assemble(graph, &state.conductivity, rhs, ground);
    let pressure = linsolve::solve(&system, config.linear_tolerance)?;
    let conductance = linsolve::edge_conductances(graph, &state.conductivity);

    let mut divergence = vec![S::zero(); graph.node_count()];
    let mut flux = vec![S::zero(); graph.edge_count()];
    let mut conductivity = vec![S::zero(); graph.edge_count()];
    let mut delta_sum = S::zero();
    for (eid, edge) in graph.edges().iter().enumerate() {
        let raw = conductance[eid] * (pressure[edge.tail] - pressure[edge.head]);
        divergence[edge.tail] += raw;
        divergence[edge.head] -= raw;
        let clipped = raw.max(S::zero());
        flux[eid] = clipped;
        let old = state.conductivity[eid];
        let advanced = config
            .update_rule
            .advance(old, clipped, config.dt)
            .max(config.conductivity_floor);
        conductivity[eid] = advanced;
        delta_sum += (advanced - old).abs();
    }
    let mut worst = state.max_divergence;
    for (node, &d) in divergence.iter().enumerate() {
        let residual = (d - rhs[node]).abs();
        if residual > worst {
            worst = residual;
        }
    }

    Ok(PhysarumState {
        conductivity,
        pressure,
        flux,
        iteration: state.iteration + 1,
        last_delta: delta_sum,
        max_divergence: worst,
    })
}

/// Edges whose flux clears the support threshold: a fraction
/// `flux_epsilon` of the per-sink demand (`I0` in two-terminal mode,
/// `I0/(N-1)` in tree mode).
pub fn extract_support<S: Scalar>(
    state: &PhysarumState<S>,
    mode: &Mode,
    config: &SolverConfig<S>,
) -> Vec<EdgeId> {
    let node_count = state.pressure.len();
    let demand = match mode {
        Mode::TwoTerminal { .. } => config.source_current,
        Mode::Tree { .. } => {
            config.source_current / S::from_usize(node_count.max(2) - 1).unwrap()
        }
    };
    let threshold = config.flux_epsilon * demand;
    state
        .flux
        .iter()
        .enumerate()
        .filter_map(|(eid, &q)| (q >= threshold).then_some(eid))
        .collect()
}

/// Single-source shortest distances restricted to the support subgraph,
/// using the original edge lengths. Nodes the support misses are `None`.
pub fn distances_from_support<S: Scalar>(
    graph: &DirectedGraph<S>,
    support: &[EdgeId],
    source: NodeId,
) -> Vec<Option<S>> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    let n = graph.node_count();
    let mut adjacency: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    for &eid in support {
        adjacency[graph.edge(eid).tail].push(eid);
    }

    struct Entry<S>(S, NodeId);
    impl<S: Scalar> PartialEq for Entry<S> {
        fn eq(&self, other: &Self) -> bool {
            self.0 == other.0 && self.1 == other.1
        }
    }
    impl<S: Scalar> Eq for Entry<S> {}
    impl<S: Scalar> Ord for Entry<S> {
        fn cmp(&self, other: &Self) -> Ordering {
            other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then(other.1.cmp(&self.1))
        }
    }
    impl<S: Scalar> PartialOrd for Entry<S> {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut dist: Vec<Option<S>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(S::zero());
    heap.push(Entry(S::zero(), source));
    while let Some(Entry(d, node)) = heap.pop() {
        if dist[node] != Some(d) {
            continue;
        }
        for &eid in &adjacency[node] {
            let edge = graph.edge(eid);
            let candidate = d + edge.length;
            if dist[edge.head].map_or(true, |cur| candidate < cur) {
                dist[edge.head] = Some(candidate);
                heap.push(Entry(candidate, edge.head));
            }
        }
    }
    dist
}

/// Runs the adaptive iteration to convergence (or the iteration budget).
///
/// A cold start initializes conductivities per `config.init`; a warm start
/// continues from the supplied state's conductivities unchanged. Tree mode
/// requires every node reachable from the source, two-terminal mode only
/// the sink; violations are reported with the offending node ids.
pub fn solve<S: Scalar>(
    graph: &DirectedGraph<S>,
    mode: Mode,
    config: &SolverConfig<S>,
    warm_start: Option<&PhysarumState<S>>,
) -> Result<SptResult<S>, PhysarumError> {
    let started = Instant::now();
    config.validate()?;
    mode.validate_for(graph)?;
    let source = mode.source();
    let n = graph.node_count();

    if n == 1 {
        // Degenerate tree: nothing to route.
        let state = PhysarumState::fresh(Vec::new(), 1);
        return Ok(SptResult {
            mode,
            distances: vec![Some(S::zero())],
            support: Vec::new(),
            state,
            iterations_used: 0,
            converged: true,
            stop_reason: StopReason::Converged,
            wall_time: started.elapsed(),
            topology_digest: graph.topology_digest(),
        });
    }

    let reachable = graph.reachable_from(source);
    let missing: Vec<NodeId> = match mode {
        Mode::Tree { .. } => {
            (0..n).filter(|&v| !reachable[v]).collect()
        }
        Mode::TwoTerminal { sink, .. } => {
            if reachable[sink] {
                Vec::new()
            } else {
                vec![sink]
            }
        }
    };
    if !missing.is_empty() {
        return Err(PhysarumError::Unreachable { source_node: source, nodes: missing });
    }

    let conductivity = match warm_start {
        Some(previous) => {
            if previous.conductivity.len() != graph.edge_count()
                || previous.pressure.len() != n
            {
                return Err(PhysarumError::StateShape {
                    expected: graph.edge_count(),
                    actual: previous.conductivity.len(),
                });
            }
            previous.conductivity.clone()
        }
        None => PhysarumState::cold(graph, config),
    };
    let mut state = PhysarumState::fresh(conductivity, n);
    let rhs = pressure_rhs(&mode, n, config.source_current);
    let ground = mode.ground();

    let mut stop_reason = StopReason::IterationLimit;
    while state.iteration < config.max_iterations {
        match step(graph, &state, &rhs, ground, config) {
            Ok(next) => state = next,
            Err(PhysarumError::Solve(crate::error::SolveError::Disconnected { nodes, .. })) => {
                stop_reason = StopReason::SupportDisconnected(nodes);
                break;
            }
            Err(other) => return Err(other),
        }
        if state.converged(config) {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    let support = extract_support(&state, &mode, config);
    let distances = distances_from_support(graph, &support, source);
    let converged = stop_reason == StopReason::Converged;
    Ok(SptResult {
        mode,
        distances,
        support,
        iterations_used: state.iteration,
        converged,
        stop_reason,
        state,
        wall_time: started.elapsed(),
        topology_digest: graph.topology_digest(),
    })
}

/// Warm-start continuation after edge-weight changes: equivalent to
/// `solve(new_graph, previous.mode, config, Some(&previous.state))`, with
/// the topology checked to match the run that produced `previous`.
pub fn resolve_after_update<S: Scalar>(
    previous: &SptResult<S>,
    new_graph: &DirectedGraph<S>,
    config: &SolverConfig<S>,
) -> Result<SptResult<S>, PhysarumError> {
    if new_graph.edge_count() != previous.state.conductivity.len() {
        return Err(PhysarumError::TopologyMismatch(format!(
            "edge count changed from {} to {}",
            previous.state.conductivity.len(),
            new_graph.edge_count()
        )));
    }
    if new_graph.topology_digest() != previous.topology_digest {
        return Err(PhysarumError::TopologyMismatch(
            "edge endpoints differ from the previous run".to_string(),
        ));
    }
    solve(new_graph, previous.mode, config, Some(&previous.state))
}

//! Per-iteration flux recording across edge-weight update events.
//!
//! A trace runs the adaptive iteration like [`crate::physarum::solve`] but
//! keeps every edge's flux and conductivity at every iteration, applying
//! scheduled update batches mid-run. The CSV output reproduces the
//! two-phase trajectory pictures: a converged plateau interrupted by an
//! update event, then re-adaptation.

use std::io::Write;

use crate::error::PhysarumError;
use crate::graph::{DirectedGraph, UpdateCategory, UpdateSet};
use crate::physarum::{initial_state, pressure_rhs, step, Mode, SolverConfig};
use crate::scalar::Scalar;

/// An update batch applied at the start of a given iteration.
#[derive(Debug, Clone)]
pub struct ScheduledUpdate<S> {
    pub at_iteration: usize,
    pub updates: UpdateSet<S>,
}

/// Snapshot of every edge after one iteration.
#[derive(Debug, Clone)]
pub struct TraceRow<S> {
    pub iteration: usize,
    pub flux: Vec<S>,
    pub conductivity: Vec<S>,
}

/// Full flux time series of a traced run.
#[derive(Debug, Clone)]
pub struct FluxTrace<S> {
    pub rows: Vec<TraceRow<S>>,
    /// `(iteration, category)` of each applied update event.
    pub events: Vec<(usize, UpdateCategory)>,
    pub converged: bool,
    pub iterations: usize,
}

impl<S: Scalar> FluxTrace<S> {
    /// Flux trajectory of a single edge across the recorded run.
    pub fn edge_series(&self, edge: usize) -> Vec<S> {
        self.rows.iter().map(|row| row.flux[edge]).collect()
    }
}

/// Runs the solver while recording every iteration, applying each
/// scheduled update when its trigger iteration starts. The run ends once
/// all events have fired and the conductivity change falls below the
/// configured threshold, or when the iteration budget runs out. Between
/// early convergence and the next trigger the recording keeps stepping, so
/// the series shows the flat plateau the event interrupts.
pub fn trace<S: Scalar>(
    graph: &DirectedGraph<S>,
    mode: Mode,
    config: &SolverConfig<S>,
    schedule: &[ScheduledUpdate<S>],
) -> Result<FluxTrace<S>, PhysarumError> {
    for pair in schedule.windows(2) {
        if pair[1].at_iteration <= pair[0].at_iteration {
            return Err(PhysarumError::Config(
                "schedule triggers must be strictly increasing".to_string(),
            ));
        }
    }
    if schedule.first().is_some_and(|first| first.at_iteration == 0) {
        return Err(PhysarumError::Config("schedule triggers start at iteration 1".to_string()));
    }
    if schedule.last().is_some_and(|last| last.at_iteration > config.max_iterations) {
        return Err(PhysarumError::Config(
            "schedule trigger beyond the iteration budget".to_string(),
        ));
    }

    // Same preflight as physarum::solve so errors surface before stepping.
    mode.validate_for(graph)?;
    let source = mode.source();
    let missing = match mode {
        Mode::Tree { .. } => graph.unreachable_nodes(source),
        Mode::TwoTerminal { sink, .. } => {
            if graph.reachable_from(source)[sink] {
                Vec::new()
            } else {
                vec![sink]
            }
        }
    };
    if !missing.is_empty() {
        return Err(PhysarumError::Unreachable { source_node: source, nodes: missing });
    }

    let mut current = graph.clone();
    let mut state = initial_state(&current, config);
    let rhs = pressure_rhs(&mode, graph.node_count(), config.source_current);
    let ground = mode.ground();
    let mut rows = Vec::with_capacity(64);
    let mut events = Vec::new();
    let mut pending = schedule.iter().peekable();
    let mut converged = false;

    for iteration in 1..=config.max_iterations {
        if pending.peek().is_some_and(|event| event.at_iteration == iteration) {
            let event = pending.next().unwrap();
            current = current.apply_updates(&event.updates)?;
            events.push((iteration, event.updates.category));
        }
        state = step(&current, &state, &rhs, ground, config)?;
        rows.push(TraceRow {
            iteration,
            flux: state.flux.clone(),
            conductivity: state.conductivity.clone(),
        });
        if pending.peek().is_none() && state.converged(config) {
            converged = true;
            break;
        }
    }

    Ok(FluxTrace { rows, events, converged, iterations: state.iteration })
}

/// Writes the trace CSV: header, one row per edge per recorded iteration,
/// and a comment line `# update iteration=K category=C` before the rows of
/// an iteration that applied an update.
pub fn write_trace_csv<S: Scalar, W: Write>(
    trace: &FluxTrace<S>,
    graph: &DirectedGraph<S>,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "iteration,edge_tail,edge_head,flux,conductivity")?;
    let mut events = trace.events.iter().peekable();
    for row in &trace.rows {
        while events.peek().is_some_and(|&&(at, _)| at == row.iteration) {
            let &(at, category) = events.next().unwrap();
            writeln!(out, "# update iteration={at} category={category}")?;
        }
        for (eid, edge) in graph.edges().iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{:e},{:e}",
                row.iteration, edge.tail, edge.head, row.flux[eid], row.conductivity[eid]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_updates, DirectedGraph};

    fn diamond() -> DirectedGraph<f64> {
        // s->a->t short, s->b->t slightly longer
        DirectedGraph::new(4, [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.3), (2, 3, 1.3)]).unwrap()
    }

    #[test]
    fn static_run_ends_at_convergence() {
        let g = diamond();
        let mode = Mode::Tree { source: 0 };
        let config = SolverConfig::high_accuracy(&g, &mode);
        let t = trace(&g, mode, &config, &[]).unwrap();
        assert!(t.converged);
        assert_eq!(t.rows.last().unwrap().iteration, t.iterations);
        assert!(t.events.is_empty());
    }

    #[test]
    fn rejects_bad_schedules() {
        let g = diamond();
        let mode = Mode::Tree { source: 0 };
        let config = SolverConfig::high_accuracy(&g, &mode);
        let u = sample_updates(&g, 0.5, 0.1, UpdateCategory::Increase, 1).unwrap();
        let bad = [
            ScheduledUpdate { at_iteration: 10, updates: u.clone() },
            ScheduledUpdate { at_iteration: 10, updates: u.clone() },
        ];
        assert!(trace(&g, mode, &config, &bad).is_err());
        let zero = [ScheduledUpdate { at_iteration: 0, updates: u }];
        assert!(trace(&g, mode, &config, &zero).is_err());
    }

    #[test]
    fn increase_event_starves_the_displaced_edge() {
        let g = diamond();
        let mode = Mode::Tree { source: 0 };
        let config = SolverConfig::high_accuracy(&g, &mode);
        // blow up the short branch mid-run
        let updates = crate::graph::UpdateSet {
            changes: vec![(0, 5.0), (1, 5.0)],
            category: UpdateCategory::Increase,
            rue: 0.5,
            rcw: 4.0,
            seed: 0,
        };
        let schedule = [ScheduledUpdate { at_iteration: 120, updates }];
        let t = trace(&g, mode, &config, &schedule).unwrap();
        assert!(t.converged);
        // edge a->t (id 1) carried flux before the event and decays after
        let series = t.edge_series(1);
        let before = series[118];
        let after = *series.last().unwrap();
        assert!(before > 0.2, "pre-event flux {before}");
        assert!(after < 0.05 * before, "post-event flux {after}");
    }

    #[test]
    fn decrease_event_leaves_untouched_branch_flux_constant() {
        // two independent chains below the source; shrink one of them
        let g = DirectedGraph::new(
            5,
            [(0, 1, 2.0), (1, 2, 2.0), (0, 3, 4.0), (3, 4, 4.0)],
        )
        .unwrap();
        let mode = Mode::Tree { source: 0 };
        let config = SolverConfig::high_accuracy(&g, &mode);
        let updates = crate::graph::UpdateSet {
            changes: vec![(3, 1.0)],
            category: UpdateCategory::Decrease,
            rue: 0.25,
            rcw: 0.75,
            seed: 0,
        };
        let schedule = [ScheduledUpdate { at_iteration: 100, updates }];
        let t = trace(&g, mode, &config, &schedule).unwrap();
        assert!(t.converged);
        // chain 0->1->2 never sees the event: its flux stays within 1%
        for edge in [0usize, 1] {
            let series = t.edge_series(edge);
            let reference: f64 = series[98];
            for (k, &q) in series.iter().enumerate().skip(98) {
                assert!(
                    (q - reference).abs() <= 0.01 * reference,
                    "edge {edge} drifted at iteration {k}: {q} vs {reference}"
                );
            }
        }
    }

    #[test]
    fn csv_contains_header_and_event_comment() {
        let g = diamond();
        let mode = Mode::Tree { source: 0 };
        let config = SolverConfig::high_accuracy(&g, &mode);
        let updates = sample_updates(&g, 0.5, 0.1, UpdateCategory::Increase, 3).unwrap();
        let schedule = [ScheduledUpdate { at_iteration: 50, updates }];
        let t = trace(&g, mode, &config, &schedule).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "iteration,edge_tail,edge_head,flux,conductivity");
        assert!(text.contains("# update iteration=50 category=increase"));
        // one row per edge per iteration plus header and one comment
        let expected = t.rows.len() * g.edge_count() + 2;
        assert_eq!(text.lines().count(), expected);
    }
}

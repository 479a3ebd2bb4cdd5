//! Grounded network Poisson (Laplacian) systems and their solver.
//!
//! Row `i` of the assembled system encodes Kirchhoff's law
//! `sum_j (D_ij/L_ij + D_ji/L_ji) (p_i - p_j) = rhs_i`; one node is
//! grounded to pressure 0 and its row/column eliminated. The reduced
//! matrix is symmetric positive definite whenever the conductance support
//! connects every current-carrying node to the ground, so a dense Cholesky
//! factorization (small systems) or a Jacobi-preconditioned conjugate
//! gradient loop (large systems) solves it; both paths honor the same
//! relative-residual contract.

use std::io::Write;

use crate::error::SolveError;
use crate::graph::{DirectedGraph, NodeId};
use crate::scalar::Scalar;

/// Conductivities below this are dropped from assembly entirely; keeping
/// near-zero entries only poisons the conditioning.
pub const CONDUCTIVITY_CUTOFF: f64 = 1e-12;

/// Reduced dimension up to which the dense direct factorization is used.
const DIRECT_LIMIT: usize = 600;

/// Per-edge conductance `D/L` with the assembly cutoff applied.
pub fn edge_conductances<S: Scalar>(graph: &DirectedGraph<S>, conductivity: &[S]) -> Vec<S> {
    let cutoff = S::from_f64_lossy(CONDUCTIVITY_CUTOFF);
    graph
        .edges()
        .iter()
        .zip(conductivity)
        .map(|(e, &d)| if d < cutoff { S::zero() } else { d / e.length })
        .collect()
}

/// Sparse symmetric Kirchhoff system with one node grounded to zero.
#[derive(Debug, Clone)]
pub struct GroundedSystem<S> {
    node_count: usize,
    ground: NodeId,
    /// Symmetric neighbor weights `w_ij = D_ij/L_ij + D_ji/L_ji > 0`,
    /// stored in both directions, columns ascending.
    rows: Vec<Vec<(NodeId, S)>>,
    /// Row sums of the full (ungrounded) Laplacian.
    diag: Vec<S>,
    rhs: Vec<S>,
}

/// Assembles the grounded system for a graph with the given per-edge
/// conductivities and right-hand side.
pub fn assemble<S: Scalar>(
    graph: &DirectedGraph<S>,
    conductivity: &[S],
    rhs: &[S],
    ground: NodeId,
) -> GroundedSystem<S> {
    assert_eq!(conductivity.len(), graph.edge_count(), "one conductivity per edge");
    assert_eq!(rhs.len(), graph.node_count(), "one rhs entry per node");
    assert!(ground < graph.node_count(), "ground node in range");

    let g = edge_conductances(graph, conductivity);
    // Merge antiparallel edge pairs into one symmetric weight.
    let mut triples: Vec<(NodeId, NodeId, S)> = graph
        .edges()
        .iter()
        .zip(&g)
        .filter(|&(_, &ge)| ge > S::zero())
        .map(|(e, &ge)| {
            let (a, b) = if e.tail < e.head { (e.tail, e.head) } else { (e.head, e.tail) };
            (a, b, ge)
        })
        .collect();
    triples.sort_unstable_by_key(|&(a, b, _)| (a, b));

    let n = graph.node_count();
    let mut rows: Vec<Vec<(NodeId, S)>> = vec![Vec::new(); n];
    let mut diag = vec![S::zero(); n];
    let mut k = 0;
    while k < triples.len() {
        let (a, b, mut w) = triples[k];
        k += 1;
        while k < triples.len() && triples[k].0 == a && triples[k].1 == b {
            w += triples[k].2;
            k += 1;
        }
        rows[a].push((b, w));
        rows[b].push((a, w));
        diag[a] += w;
        diag[b] += w;
    }
    for row in &mut rows {
        row.sort_unstable_by_key(|&(col, _)| col);
    }
    GroundedSystem { node_count: n, ground, rows, diag, rhs: rhs.to_vec() }
}

impl<S: Scalar> GroundedSystem<S> {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn ground(&self) -> NodeId {
        self.ground
    }

    pub fn rhs(&self) -> &[S] {
        &self.rhs
    }

    /// Neighbors of `node` with their symmetric weights.
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, S)] {
        &self.rows[node]
    }

    /// Diagonal entry (full row sum) for `node`.
    pub fn diagonal(&self, node: NodeId) -> S {
        self.diag[node]
    }

    /// Off-diagonal coefficient `a_ij = -w_ij` between two nodes, zero if
    /// the pair is not coupled.
    pub fn coefficient(&self, i: NodeId, j: NodeId) -> S {
        self.rows[i]
            .iter()
            .find(|&&(col, _)| col == j)
            .map(|&(_, w)| -w)
            .unwrap_or_else(S::zero)
    }

    /// Nodes connected to the ground through nonzero conductance.
    fn reached_from_ground(&self) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![self.ground];
        seen[self.ground] = true;
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.rows[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen
    }

    /// Diagnostic dump in MatrixMarket coordinate format (lower triangle of
    /// the grounded system, 1-based indices over the full node set).
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let mut entries = Vec::new();
        for i in 0..self.node_count {
            if i == self.ground {
                continue;
            }
            entries.push((i, i, self.diag[i]));
            for &(j, w) in &self.rows[i] {
                if j < i && j != self.ground {
                    entries.push((i, j, -w));
                }
            }
        }
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "% grounded node: {}", self.ground)?;
        writeln!(out, "{} {} {}", self.node_count, self.node_count, entries.len())?;
        for (i, j, v) in entries {
            writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

/// Solves the grounded system to the given relative residual, returning a
/// full-length pressure vector with the ground entry exactly zero.
///
/// Nodes the conductance support disconnects from the ground are an error
/// if they carry current, otherwise their pressure is reported as zero.
pub fn solve<S: Scalar>(system: &GroundedSystem<S>, tolerance: f64) -> Result<Vec<S>, SolveError> {
    let n = system.node_count;
    let reached = system.reached_from_ground();
    let cut: Vec<NodeId> = (0..n)
        .filter(|&i| !reached[i] && system.rhs[i] != S::zero())
        .collect();
    if !cut.is_empty() {
        return Err(SolveError::Disconnected { ground: system.ground, nodes: cut });
    }

    // Map solvable unknowns (reached, non-ground) to reduced indices.
    let mut index = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for i in 0..n {
        if reached[i] && i != system.ground {
            index[i] = nodes.len();
            nodes.push(i);
        }
    }
    let dim = nodes.len();
    let mut pressure = vec![S::zero(); n];
    if dim == 0 {
        return Ok(pressure);
    }
    let b: Vec<S> = nodes.iter().map(|&i| system.rhs[i]).collect();
    let b_norm = norm2(&b);
    if b_norm == S::zero() {
        return Ok(pressure);
    }

    let x = if dim <= DIRECT_LIMIT {
        cholesky_with_refinement(system, &nodes, &index, &b, tolerance)?
    } else {
        jacobi_pcg(system, &nodes, &index, &b, tolerance)?
    };
    for (&node, &value) in nodes.iter().zip(&x) {
        pressure[node] = value;
    }
    Ok(pressure)
}

fn norm2<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|&x| x * x).sum::<S>().sqrt()
}

/// Reduced matvec on reduced-index vectors.
fn apply_reduced<S: Scalar>(
    system: &GroundedSystem<S>,
    nodes: &[NodeId],
    index: &[usize],
    x: &[S],
    out: &mut [S],
) {
    for (r, &i) in nodes.iter().enumerate() {
        let mut acc = system.diag[i] * x[r];
        for &(j, w) in &system.rows[i] {
            let rj = index[j];
            if rj != usize::MAX {
                acc -= w * x[rj];
            }
        }
        out[r] = acc;
    }
}

fn residual<S: Scalar>(
    system: &GroundedSystem<S>,
    nodes: &[NodeId],
    index: &[usize],
    x: &[S],
    b: &[S],
) -> Vec<S> {
    let mut r = vec![S::zero(); b.len()];
    apply_reduced(system, nodes, index, x, &mut r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Dense Cholesky factorization with iterative refinement against the
/// sparse operator. Refinement recovers the residual contract even when
/// conductances span many orders of magnitude.
fn cholesky_with_refinement<S: Scalar>(
    system: &GroundedSystem<S>,
    nodes: &[NodeId],
    index: &[usize],
    b: &[S],
    tolerance: f64,
) -> Result<Vec<S>, SolveError> {
    let dim = nodes.len();
    let mut a = vec![S::zero(); dim * dim];
    for (r, &i) in nodes.iter().enumerate() {
        a[r * dim + r] = system.diag[i];
        for &(j, w) in &system.rows[i] {
            let rj = index[j];
            if rj != usize::MAX {
                a[r * dim + rj] = -w;
            }
        }
    }
    let chol = cholesky_factor(&mut a, dim)?;

    let tol = S::from_f64_lossy(tolerance);
    let b_norm = norm2(b);
    let mut x = b.to_vec();
    cholesky_solve_in_place(&chol, dim, &mut x);
    let mut r = residual(system, nodes, index, &x, b);
    let mut r_norm = norm2(&r);
    let mut best = r_norm;
    for _ in 0..50 {
        if r_norm <= tol * b_norm {
            return Ok(x);
        }
        cholesky_solve_in_place(&chol, dim, &mut r);
        for (xi, &dx) in x.iter_mut().zip(&r) {
            *xi += dx;
        }
        r = residual(system, nodes, index, &x, b);
        r_norm = norm2(&r);
        if r_norm >= best {
            break; // refinement stalled
        }
        best = r_norm;
    }
    if r_norm <= tol * b_norm {
        Ok(x)
    } else {
        Err(SolveError::NoConvergence {
            achieved: (r_norm / b_norm).to_f64().unwrap_or(f64::NAN),
            target: tolerance,
        })
    }
}

/// In-place lower-triangular Cholesky (`A = L L^T`), row-major.
fn cholesky_factor<S: Scalar>(a: &mut [S], dim: usize) -> Result<Vec<S>, SolveError> {
    for j in 0..dim {
        let mut d = a[j * dim + j];
        for k in 0..j {
            let l = a[j * dim + k];
            d -= l * l;
        }
        if !(d > S::zero()) {
            return Err(SolveError::SingularPivot { pivot: j });
        }
        let root = d.sqrt();
        a[j * dim + j] = root;
        for i in (j + 1)..dim {
            let mut v = a[i * dim + j];
            for k in 0..j {
                v -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = v / root;
        }
    }
    Ok(a.to_vec())
}

fn cholesky_solve_in_place<S: Scalar>(l: &[S], dim: usize, x: &mut [S]) {
    // forward: L y = x
    for i in 0..dim {
        let mut v = x[i];
        for k in 0..i {
            v -= l[i * dim + k] * x[k];
        }
        x[i] = v / l[i * dim + i];
    }
    // backward: L^T x = y
    for i in (0..dim).rev() {
        let mut v = x[i];
        for k in (i + 1)..dim {
            v -= l[k * dim + i] * x[k];
        }
        x[i] = v / l[i * dim + i];
    }
}

/// Jacobi-preconditioned conjugate gradients for large systems.
fn jacobi_pcg<S: Scalar>(
    system: &GroundedSystem<S>,
    nodes: &[NodeId],
    index: &[usize],
    b: &[S],
    tolerance: f64,
) -> Result<Vec<S>, SolveError> {
    let dim = nodes.len();
    let tol = S::from_f64_lossy(tolerance);
    let b_norm = norm2(b);
    let inv_diag: Vec<S> = nodes.iter().map(|&i| S::one() / system.diag[i]).collect();

    let mut x = vec![S::zero(); dim];
    let mut r = b.to_vec();
    let mut z: Vec<S> = r.iter().zip(&inv_diag).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: S = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
    let mut ap = vec![S::zero(); dim];
    let max_iterations = (20 * dim).max(10_000);

    for _ in 0..max_iterations {
        if norm2(&r) <= tol * b_norm {
            return Ok(x);
        }
        apply_reduced(system, nodes, index, &p, &mut ap);
        let p_ap: S = p.iter().zip(&ap).map(|(&a, &b)| a * b).sum();
        if p_ap <= S::zero() {
            return Err(SolveError::SingularPivot { pivot: 0 });
        }
        let alpha = rz / p_ap;
        for k in 0..dim {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        for k in 0..dim {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next: S = r.iter().zip(&z).map(|(&a, &b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..dim {
            p[k] = z[k] + beta * p[k];
        }
    }
    let achieved = (norm2(&residual(system, nodes, index, &x, b)) / b_norm)
        .to_f64()
        .unwrap_or(f64::NAN);
    if achieved <= tolerance {
        Ok(x)
    } else {
        Err(SolveError::NoConvergence { achieved, target: tolerance })
    }
}

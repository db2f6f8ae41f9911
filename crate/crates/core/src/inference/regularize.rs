//! Graph-Laplacian proximal step over optional intra-type auxiliary graphs.

use crate::error::{Error, Result};
use crate::model::LabelMatrix;

const RESIDUAL_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 1000;

/// Weighted undirected graph over the vertices of a single type.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuxGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl AuxGraph {
    pub fn new(n: usize) -> Self {
        Self { adjacency: vec![Vec::new(); n] }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Adds weight to the undirected edge `(a, b)`; self-loops are ignored
    /// since they cancel in the Laplacian.
    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        if a == b {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            match self.adjacency[x].iter_mut().find(|(v, _)| *v == y) {
                Some(e) => e.1 += w,
                None => self.adjacency[x].push((y, w)),
            }
        }
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|(_, w)| w).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Solves `(I + λL) Y_t = Y_s,t` for every type with an auxiliary graph by
/// Jacobi iteration. Types without one (or `λ = 0`) pass through.
pub fn regularize_proximal(ys: &LabelMatrix, aux: &[Option<AuxGraph>], lambda: f64) -> Result<LabelMatrix> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be a nonnegative number, got {lambda}")));
    }
    let mut out = ys.clone();
    if lambda == 0.0 {
        return Ok(out);
    }
    let k = ys.k();
    let counts = ys.counts();
    for (t, graph) in aux.iter().enumerate().take(ys.type_count()) {
        let Some(graph) = graph else { continue };
        if graph.edge_count() == 0 {
            continue;
        }
        if graph.len() != counts[t] {
            return Err(Error::ShapeMismatch(format!(
                "auxiliary graph of type {t} has {} vertices, expected {}",
                graph.len(),
                counts[t]
            )));
        }
        let rhs = ys.block(t).to_vec();
        let mut cur = rhs.clone();
        let mut next = rhs.clone();
        let diag: Vec<f64> = (0..graph.len()).map(|i| 1.0 + lambda * graph.degree(i)).collect();
        let mut residual = f64::INFINITY;
        let mut sweeps = 0;
        while sweeps < MAX_SWEEPS {
            residual = 0.0;
            for i in 0..graph.len() {
                for c in 0..k {
                    let mut s = 0.0;
                    for &(j, w) in graph.neighbors(i) {
                        s += w * cur[j * k + c];
                    }
                    // residual of the current iterate
                    let r = diag[i] * cur[i * k + c] - lambda * s - rhs[i * k + c];
                    residual = f64::max(residual, r.abs());
                    next[i * k + c] = (rhs[i * k + c] + lambda * s) / diag[i];
                }
            }
            if residual < RESIDUAL_TOL {
                break;
            }
            std::mem::swap(&mut cur, &mut next);
            sweeps += 1;
        }
        if residual >= RESIDUAL_TOL {
            return Err(Error::RegularizerNotConverged { residual, iterations: sweeps });
        }
        out.block_mut(t).copy_from_slice(&cur);
    }
    Ok(out)
}

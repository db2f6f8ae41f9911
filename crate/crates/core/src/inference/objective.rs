//! Sparse evaluation of the reconstruction objective.
//!
//! For each unordered type pair the dense `‖G − Y_t B Y_t'ᵀ‖²` is rewritten
//! as `Σ_edges [(G − ŷ)² − ŷ²] + tr(P B Q Bᵀ)` with `ŷ = Y(u)ᵀ B Y(v)`,
//! `P = Y_tᵀ Y_t` and `Q = Y_t'ᵀ Y_t'`, so the cost is linear in edges.

use rayon::prelude::*;

use crate::graph::{type_pairs, Edge, KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;
use crate::model::{LabelMatrix, PropagationSet, SeedSet};

/// `Y(u)ᵀ B Y(v)`
#[inline]
pub fn edge_effect(b: &DenseMatrix, yu: &[f64], yv: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, &a) in yu.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let row = b.row(i);
        s += a * row.iter().zip(yv).map(|(x, y)| x * y).sum::<f64>();
    }
    s
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ObjectiveParts {
    pub reconstruction: f64,
    pub seed_penalty: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.seed_penalty
    }
}

fn edge_term(y: &LabelMatrix, b: &DenseMatrix, lo: usize, hi: usize, e: &Edge) -> f64 {
    let yhat = edge_effect(b, y.row(VertexRef::new(lo, e.u)), y.row(VertexRef::new(hi, e.v)));
    let r = e.weight - yhat;
    r * r - yhat * yhat
}

/// Objective split into its reconstruction and seed parts. `grams` must hold
/// `Y_tᵀ Y_t` for every type. With `ordered` set, edge sums are reduced
/// sequentially so the value does not depend on the thread count.
pub fn objective_parts_with_grams(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    beta: f64,
    grams: &[DenseMatrix],
    ordered: bool,
) -> ObjectiveParts {
    let mut reconstruction = 0.0;
    for (lo, hi) in type_pairs(graph.type_count()) {
        let bm = b.pair(lo, hi);
        let edges = graph.pair_edges(lo, hi);
        let sparse: f64 = if ordered {
            edges.iter().map(|e| edge_term(y, bm, lo, hi, e)).sum()
        } else {
            edges.par_iter().map(|e| edge_term(y, bm, lo, hi, e)).sum()
        };
        let dense = grams[lo].matmul(bm).matmul(&grams[hi]).inner(bm);
        reconstruction += sparse + dense;
    }
    let mut seed_penalty = 0.0;
    for (u, row) in seeds.iter() {
        if !graph.contains(u) {
            continue;
        }
        seed_penalty += y.row(u).iter().zip(row).map(|(a, s)| (a - s) * (a - s)).sum::<f64>();
    }
    ObjectiveParts { reconstruction, seed_penalty: beta * seed_penalty }
}

pub fn objective_parts(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    beta: f64,
) -> ObjectiveParts {
    let grams: Vec<DenseMatrix> = (0..y.type_count()).map(|t| y.gram(t)).collect();
    objective_parts_with_grams(graph, y, b, seeds, beta, &grams, true)
}

/// Total objective, each unordered type pair counted once.
pub fn compute_objective(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    beta: f64,
) -> f64 {
    objective_parts(graph, y, b, seeds, beta).total()
}

/// Per-vertex subobjective in `Y(u)` with everything else fixed:
/// `yᵀ A_t y − 2 yᵀ s + β·1_seed ‖y − Y*(u)‖²`, where `s` is the neighbor
/// signal `Σ G B Y(v)`. Constant terms are dropped.
pub fn vertex_subobjective(a_t: &DenseMatrix, signal: &[f64], seed: Option<&[f64]>, beta: f64, y: &[f64]) -> f64 {
    let k = y.len();
    let mut ay = vec![0.0; k];
    a_t.mul_vec_into(y, &mut ay);
    let mut j: f64 = (0..k).map(|i| y[i] * ay[i] - 2.0 * y[i] * signal[i]).sum();
    if let Some(s) = seed {
        j += beta * y.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    j
}

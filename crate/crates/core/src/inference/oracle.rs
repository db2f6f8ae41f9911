//! Dense block-form multiplicative `Y` update, used to cross-check the
//! vertex-centric sweep.

use crate::graph::{type_pairs, KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;
use crate::model::{LabelMatrix, PropagationSet, SeedSet};

/// Dense `n_lo × n_hi` adjacency block of a type pair.
pub fn dense_block(graph: &KPartiteGraph, lo: usize, hi: usize) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(graph.count(lo), graph.count(hi));
    for e in graph.pair_edges(lo, hi) {
        g.set(e.u, e.v, e.weight);
    }
    g
}

/// `G_tt'` for an ordered pair.
fn oriented_block(graph: &KPartiteGraph, t: usize, t2: usize) -> DenseMatrix {
    if t < t2 {
        dense_block(graph, t, t2)
    } else {
        dense_block(graph, t2, t).transpose()
    }
}

/// `Y_t ∘ sqrt((Σ_t' G_tt' Y_t' B_tt'ᵀ + β S_t Y*) / (Σ_t' Y_t B_tt' Y_t'ᵀ Y_t' B_tt'ᵀ + β S_t Y_t + ε))`
///
/// Here `B_tt'` maps labels of type `t'` onto type `t`, i.e. it is the
/// transpose of the oriented matrix used row by row.
pub fn matrix_form_update_y(
    t: usize,
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    beta: f64,
    epsilon: f64,
) -> DenseMatrix {
    let k = y.k();
    let n_t = graph.count(t);
    let yt = y.block_matrix(t);
    let mut num = DenseMatrix::zeros(n_t, k);
    let mut den = DenseMatrix::zeros(n_t, k);
    for t2 in (0..graph.type_count()).filter(|&x| x != t) {
        // B(t, t2) acts on a t2-row to produce a t-row, so Y_t2 B(t, t2)ᵀ
        let bt = b.oriented(t, t2).to_matrix().transpose();
        let y2 = y.block_matrix(t2);
        num.add_assign(&oriented_block(graph, t, t2).matmul(&y2).matmul(&bt));
        let gram = y2.transpose().matmul(&y2);
        den.add_assign(&yt.matmul(&bt.transpose()).matmul(&gram).matmul(&bt));
    }
    for (u, row) in seeds.iter() {
        if u.ty != t || !graph.contains(u) {
            continue;
        }
        let current = y.row(VertexRef::new(t, u.index));
        for c in 0..k {
            num.add_at(u.index, c, beta * row[c]);
            den.add_at(u.index, c, beta * current[c]);
        }
    }
    let mut out = yt;
    for i in 0..n_t {
        for c in 0..k {
            let v = out.get(i, c) * (num.get(i, c) / (den.get(i, c) + epsilon)).sqrt();
            out.set(i, c, v);
        }
    }
    out
}

/// Dense `Σ_pairs ‖G_tt' − Y_t B Y_t'ᵀ‖² + β Σ_seeds ‖Y(u) − Y*(u)‖²`.
pub fn dense_objective(graph: &KPartiteGraph, y: &LabelMatrix, b: &PropagationSet, seeds: &SeedSet, beta: f64) -> f64 {
    let mut total = 0.0;
    for (lo, hi) in type_pairs(graph.type_count()) {
        let recon = y.block_matrix(lo).matmul(b.pair(lo, hi)).matmul(&y.block_matrix(hi).transpose());
        let g = dense_block(graph, lo, hi);
        total += g.as_slice().iter().zip(recon.as_slice()).map(|(a, r)| (a - r) * (a - r)).sum::<f64>();
    }
    for (u, row) in seeds.iter() {
        total += beta * y.row(u).iter().zip(row).map(|(a, s)| (a - s) * (a - s)).sum::<f64>();
    }
    total
}

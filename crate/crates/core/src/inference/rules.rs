//! Vertex-centric `Y` rules, pairwise `B` rules, and their step sizes.
//!
//! All `Y` rules share the cached common term
//! `A_t = Σ_{v ∉ V_t} B(t, t(v)) Y(v) Y(v)ᵀ B(t, t(v))ᵀ`, which is assembled
//! from per-type Gram matrices `Y_t'ᵀ Y_t'` so that its cost is
//! `Σ_{t' ≠ t} n_t' k²`.

use crate::graph::{KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;
use crate::model::{LabelMatrix, PropagationSet};

/// `A_t` from precomputed Gram matrices of every type.
pub fn common_term_from_grams(t: usize, grams: &[DenseMatrix], b: &PropagationSet) -> DenseMatrix {
    let k = b.k();
    let mut a = DenseMatrix::zeros(k, k);
    for (t2, gram) in grams.iter().enumerate() {
        if t2 == t {
            continue;
        }
        let bm = b.oriented(t, t2).to_matrix();
        a.add_assign(&bm.matmul(gram).matmul(&bm.transpose()));
    }
    a
}

pub fn grams(y: &LabelMatrix) -> Vec<DenseMatrix> {
    (0..y.type_count()).map(|t| y.gram(t)).collect()
}

pub fn compute_common_term(t: usize, y: &LabelMatrix, b: &PropagationSet) -> DenseMatrix {
    common_term_from_grams(t, &grams(y), b)
}

/// `out = Σ_{v ∈ N(u)} G(u, v) · B(t(u), t(v)) · Y(v)`
pub fn neighbor_signal(graph: &KPartiteGraph, y: &LabelMatrix, b: &PropagationSet, u: VertexRef, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for n in graph.neighbors(u) {
        b.oriented(u.ty, n.vertex.ty).apply_add(y.row(n.vertex), n.weight, out);
    }
}

/// Gradient direction `d = Σ G B Y(v) − A_t Y(u) + β·1_seed·(Y*(u) − Y(u))`;
/// the sub-objective gradient is `−2d`.
pub fn descent_direction(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    u: VertexRef,
    seed: Option<&[f64]>,
    beta: f64,
) -> Vec<f64> {
    let k = y.k();
    let mut d = vec![0.0; k];
    let mut ay = vec![0.0; k];
    neighbor_signal(graph, y, b, u, &mut d);
    let row = y.row(u);
    a_t.mul_vec_into(row, &mut ay);
    for i in 0..k {
        d[i] -= ay[i];
        if let Some(s) = seed {
            d[i] += beta * (s[i] - row[i]);
        }
    }
    d
}

/// Lipschitz constant of the row sub-objective gradient: `2‖A_t‖_F`, plus
/// `2β` for seed rows, floored at `2ε`.
pub fn lipschitz_y(a_t: &DenseMatrix, beta: f64, is_seed: bool, epsilon: f64) -> f64 {
    let mut l = 2.0 * a_t.frobenius_norm();
    if is_seed {
        l += 2.0 * beta;
    }
    l.max(2.0 * epsilon)
}

/// Scratch buffers for row updates, reused across rows of a sweep.
#[derive(Clone, Debug)]
pub(crate) struct RowScratch {
    signal: Vec<f64>,
    ay: Vec<f64>,
}

impl RowScratch {
    pub(crate) fn new(k: usize) -> Self {
        Self { signal: vec![0.0; k], ay: vec![0.0; k] }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn multiplicative_row_into(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    u: VertexRef,
    seed: Option<&[f64]>,
    beta: f64,
    epsilon: f64,
    scratch: &mut RowScratch,
    out: &mut [f64],
) {
    let row = y.row(u);
    neighbor_signal(graph, y, b, u, &mut scratch.signal);
    a_t.mul_vec_into(row, &mut scratch.ay);
    for i in 0..row.len() {
        let (mut num, mut den) = (scratch.signal[i], scratch.ay[i] + epsilon);
        if let Some(s) = seed {
            num += beta * s[i];
            den += beta * row[i];
        }
        out[i] = row[i] * (num / den).sqrt();
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn additive_row_into(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    u: VertexRef,
    seed: Option<&[f64]>,
    beta: f64,
    epsilon: f64,
    eta: f64,
    scratch: &mut RowScratch,
    out: &mut [f64],
) {
    let row = y.row(u);
    neighbor_signal(graph, y, b, u, &mut scratch.signal);
    a_t.mul_vec_into(row, &mut scratch.ay);
    for i in 0..row.len() {
        let mut d = scratch.signal[i] - scratch.ay[i];
        if let Some(s) = seed {
            d += beta * (s[i] - row[i]);
        }
        out[i] = epsilon.max(row[i] + 2.0 * eta * d);
    }
}

/// Multiplicative row rule:
/// `Y(u) ∘ sqrt((Σ G B Y(v) + β·1·Y*(u)) / (A_t Y(u) + β·1·Y(u) + ε))`.
#[allow(clippy::too_many_arguments)]
pub fn update_vertex_multiplicative(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    u: VertexRef,
    seed: Option<&[f64]>,
    beta: f64,
    epsilon: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; y.k()];
    let mut scratch = RowScratch::new(y.k());
    multiplicative_row_into(graph, y, b, a_t, u, seed, beta, epsilon, &mut scratch, &mut out);
    out
}

/// Projected gradient row rule `max(ε, Y(u) + 2η·d)`. `eta` defaults to
/// `1 / lipschitz_y`.
#[allow(clippy::too_many_arguments)]
pub fn update_vertex_additive(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    u: VertexRef,
    seed: Option<&[f64]>,
    beta: f64,
    epsilon: f64,
    eta: Option<f64>,
) -> Vec<f64> {
    let eta = eta.unwrap_or_else(|| 1.0 / lipschitz_y(a_t, beta, seed.is_some(), epsilon));
    let mut out = vec![0.0; y.k()];
    let mut scratch = RowScratch::new(y.k());
    additive_row_into(graph, y, b, a_t, u, seed, beta, epsilon, eta, &mut scratch, &mut out);
    out
}

/// `Y_loᵀ G_lo,hi Y_hi`, assembled over the pair's edges.
pub fn edge_cross_term(graph: &KPartiteGraph, y: &LabelMatrix, lo: usize, hi: usize) -> DenseMatrix {
    let k = y.k();
    let mut n = DenseMatrix::zeros(k, k);
    for e in graph.pair_edges(lo, hi) {
        n.add_outer(y.row(VertexRef::new(lo, e.u)), y.row(VertexRef::new(hi, e.v)), e.weight);
    }
    n
}

/// `B ∘ sqrt(N / (P B Q + ε))` with `N = Y_loᵀ G Y_hi`, `P = Y_loᵀ Y_lo`,
/// `Q = Y_hiᵀ Y_hi`.
pub fn b_multiplicative_step(
    b: &DenseMatrix,
    cross: &DenseMatrix,
    gram_lo: &DenseMatrix,
    gram_hi: &DenseMatrix,
    epsilon: f64,
) -> DenseMatrix {
    let den = gram_lo.matmul(b).matmul(gram_hi);
    let mut out = b.clone();
    for (o, (n, d)) in out.as_mut_slice().iter_mut().zip(cross.as_slice().iter().zip(den.as_slice())) {
        *o *= (n / (d + epsilon)).sqrt();
    }
    out
}

/// Step-size constant for the `B` rule: `2‖P‖_F‖Q‖_F`, which bounds the
/// spectral norm `2‖P‖₂‖Q‖₂` of the Hessian `2 (Q ⊗ P)`.
pub fn lipschitz_b(gram_lo: &DenseMatrix, gram_hi: &DenseMatrix) -> f64 {
    2.0 * gram_lo.frobenius_norm() * gram_hi.frobenius_norm()
}

/// `max(ε, B + 2η_b (N − P B Q))`. Returns `None` when the Lipschitz
/// constant is zero (an all-zero block) and the update must be skipped.
pub fn b_additive_step(
    b: &DenseMatrix,
    cross: &DenseMatrix,
    gram_lo: &DenseMatrix,
    gram_hi: &DenseMatrix,
    epsilon: f64,
    eta_b: Option<f64>,
) -> Option<DenseMatrix> {
    let eta = match eta_b {
        Some(e) => e,
        None => {
            let l = lipschitz_b(gram_lo, gram_hi);
            if l <= 0.0 {
                return None;
            }
            1.0 / l
        }
    };
    let pbq = gram_lo.matmul(b).matmul(gram_hi);
    let mut out = b.clone();
    for (o, (n, d)) in out.as_mut_slice().iter_mut().zip(cross.as_slice().iter().zip(pbq.as_slice())) {
        *o = epsilon.max(*o + 2.0 * eta * (n - d));
    }
    Some(out)
}

/// Multiplicative update of the stored matrix of pair `(lo, hi)`.
#[must_use]
pub fn update_b_multiplicative(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    lo: usize,
    hi: usize,
    epsilon: f64,
) -> DenseMatrix {
    b_multiplicative_step(b.pair(lo, hi), &edge_cross_term(graph, y, lo, hi), &y.gram(lo), &y.gram(hi), epsilon)
}

/// Additive update of the stored matrix of pair `(lo, hi)`; an all-zero
/// block leaves the matrix unchanged.
#[must_use]
pub fn update_b_additive(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    lo: usize,
    hi: usize,
    epsilon: f64,
    eta_b: Option<f64>,
) -> DenseMatrix {
    b_additive_step(b.pair(lo, hi), &edge_cross_term(graph, y, lo, hi), &y.gram(lo), &y.gram(hi), epsilon, eta_b)
        .unwrap_or_else(|| b.pair(lo, hi).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    #[test]
    fn lipschitz_examples() {
        let eye = DenseMatrix::identity(2);
        assert!((lipschitz_y(&eye, 5.0, false, 1e-9) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!((lipschitz_y(&eye, 5.0, true, 1e-9) - 2.0 * (2f64.sqrt() + 5.0)).abs() < 1e-14);
        assert_eq!(lipschitz_y(&DenseMatrix::zeros(2, 2), 5.0, false, 1e-9), 2e-9);
    }

    #[test]
    fn common_term_single_outer_product() {
        let mut gb = GraphBuilder::new(2);
        gb.add_vertex(0, "u").unwrap();
        gb.add_vertex(1, "v").unwrap();
        let g = gb.build().graph;
        let mut y = LabelMatrix::for_graph(&g, 2);
        y.row_mut(VertexRef::new(1, 0)).copy_from_slice(&[1.0, 0.0]);
        let b = PropagationSet::filled(2, 2, &DenseMatrix::identity(2));
        let a = compute_common_term(0, &y, &b);
        assert_eq!(a, DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]));
        let zero = LabelMatrix::for_graph(&g, 2);
        assert_eq!(compute_common_term(0, &zero, &b), DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn b_rules_fixed_at_exact_reconstruction() {
        // G = Y_a B Y_bᵀ exactly, with dense edges carrying those weights
        let ya = [[1.0, 0.5], [0.2, 1.0]];
        let yb = [[0.3, 1.0], [1.0, 0.1], [0.4, 0.4]];
        let bm = DenseMatrix::from_rows(&[vec![0.6, 0.1], vec![0.2, 0.7]]);
        let mut gb = GraphBuilder::new(2);
        let a: Vec<_> = (0..2).map(|i| gb.add_vertex(0, &format!("a{i}")).unwrap()).collect();
        let c: Vec<_> = (0..3).map(|i| gb.add_vertex(1, &format!("b{i}")).unwrap()).collect();
        for (i, &u) in a.iter().enumerate() {
            for (j, &v) in c.iter().enumerate() {
                let mut t = [0.0; 2];
                bm.mul_vec_into(&yb[j], &mut t);
                gb.add_edge(u, v, ya[i][0] * t[0] + ya[i][1] * t[1]).unwrap();
            }
        }
        let g = gb.build().graph;
        let mut y = LabelMatrix::for_graph(&g, 2);
        for (i, &u) in a.iter().enumerate() {
            y.row_mut(u).copy_from_slice(&ya[i]);
        }
        for (j, &v) in c.iter().enumerate() {
            y.row_mut(v).copy_from_slice(&yb[j]);
        }
        let set = PropagationSet::filled(2, 2, &bm);
        let m = update_b_multiplicative(&g, &y, &set, 0, 1, 1e-12);
        assert!(m.max_abs_diff(&bm) < 1e-9);
        let ad = update_b_additive(&g, &y, &set, 0, 1, 1e-12, None);
        assert!(ad.max_abs_diff(&bm) < 1e-12);
    }

    #[test]
    fn b_zero_entries_stay_zero_and_negative_candidates_clamp() {
        let b = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]);
        let cross = DenseMatrix::from_rows(&[vec![5.0, 0.0], vec![0.0, 0.0]]);
        let p = DenseMatrix::identity(2);
        let out = b_multiplicative_step(&b, &cross, &p, &p, 1e-9);
        assert_eq!(out.get(0, 0), 0.0);
        let add = b_additive_step(&b, &cross, &p, &p, 1e-9, Some(10.0)).unwrap();
        assert_eq!(add.get(1, 1), 1e-9);
        assert!(b_additive_step(&b, &cross, &DenseMatrix::zeros(2, 2), &p, 1e-9, None).is_none());
    }
}

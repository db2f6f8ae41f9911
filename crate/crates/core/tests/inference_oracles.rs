mod common;

use common::*;
use kprop::inference::objective::vertex_subobjective;
use kprop::inference::oracle::{dense_block, dense_objective, matrix_form_update_y};
use kprop::inference::rules::{
    compute_common_term, descent_direction, edge_cross_term, neighbor_signal, update_b_additive,
    update_b_multiplicative, update_vertex_additive, update_vertex_multiplicative,
};
use kprop::*;
use rand::seq::SliceRandom;
use rand::Rng;

const BETA: f64 = 5.0;
const EPS: f64 = 1e-9;

fn dense_common_term(t: usize, y: &LabelMatrix, b: &PropagationSet) -> DenseMatrix {
    let k = y.k();
    let mut a = DenseMatrix::zeros(k, k);
    for t2 in (0..y.type_count()).filter(|&x| x != t) {
        // rows of type t see Y(v) through B(t, t2)
        let bt = b.oriented(t, t2).to_matrix();
        let y2 = y.block_matrix(t2);
        let term = bt.matmul(&y2.transpose()).matmul(&y2).matmul(&bt.transpose());
        for i in 0..k {
            for j in 0..k {
                a.add_at(i, j, term.get(i, j));
            }
        }
    }
    a
}

fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn pair_error(g: &KPartiteGraph, y: &LabelMatrix, b: &DenseMatrix, lo: usize, hi: usize) -> f64 {
    let recon = y.block_matrix(lo).matmul(b).matmul(&y.block_matrix(hi).transpose());
    let gm = dense_block(g, lo, hi);
    gm.as_slice().iter().zip(recon.as_slice()).map(|(a, r)| (a - r) * (a - r)).sum()
}

fn dense_b_multiplicative(g: &KPartiteGraph, y: &LabelMatrix, b: &DenseMatrix, lo: usize, hi: usize) -> DenseMatrix {
    let (ylo, yhi) = (y.block_matrix(lo), y.block_matrix(hi));
    let num = ylo.transpose().matmul(&dense_block(g, lo, hi)).matmul(&yhi);
    let den = ylo.transpose().matmul(&ylo).matmul(b).matmul(&yhi.transpose()).matmul(&yhi);
    let mut out = b.clone();
    for i in 0..b.rows() {
        for j in 0..b.cols() {
            out.set(i, j, b.get(i, j) * (num.get(i, j) / (den.get(i, j) + EPS)).sqrt());
        }
    }
    out
}

#[test]
fn common_term_matches_dense_product() {
    // the 3-type, n = 9, k = 2 shape first, then assorted shapes
    let mut r = rng(1);
    let g = random_graph(&mut r, 3, 3, 0.5);
    let mut y = LabelMatrix::for_graph(&g, 2);
    y.as_mut_slice().iter_mut().for_each(|v| *v = r.gen_range(0.0..1.0));
    let mut b = PropagationSet::filled(3, 2, &DenseMatrix::identity(2));
    for m in b.matrices_mut() {
        m.as_mut_slice().iter_mut().for_each(|v| *v = r.gen_range(0.0..1.0));
    }
    for t in 0..3 {
        assert!(max_abs_diff(&compute_common_term(t, &y, &b), &dense_common_term(t, &y, &b)) < 1e-12);
    }
    for s in 0..40 {
        let inst = random_instance(200 + s, 9);
        for t in 0..inst.graph.type_count() {
            let fast = compute_common_term(t, &inst.y, &inst.b);
            assert!(max_abs_diff(&fast, &dense_common_term(t, &inst.y, &inst.b)) < 1e-12);
        }
    }
}

#[test]
fn hand_instance_row_update() {
    // a0 - b0 with unit weight, B = I, Y(a0) = (0.5, 0.5), Y(b0) = (1, 0):
    // signal (1, 0), A_0 = diag(1, 0), new row (0.5·√2, 0)
    let mut gb = GraphBuilder::new(2);
    let a = gb.add_vertex(0, "a0").unwrap();
    let b0 = gb.add_vertex(1, "b0").unwrap();
    gb.add_edge(a, b0, 1.0).unwrap();
    let g = gb.build().graph;
    let mut y = LabelMatrix::for_graph(&g, 2);
    y.row_mut(a).copy_from_slice(&[0.5, 0.5]);
    y.row_mut(b0).copy_from_slice(&[1.0, 0.0]);
    let b = PropagationSet::filled(2, 2, &DenseMatrix::identity(2));
    let a_t = compute_common_term(0, &y, &b);
    assert_eq!(a_t, DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]));
    let row = update_vertex_multiplicative(&g, &y, &b, &a_t, a, None, BETA, EPS);
    assert!((row[0] - 0.5 * 2f64.sqrt()).abs() < 1e-8);
    assert_eq!(row[1], 0.0);
    let dense = matrix_form_update_y(0, &g, &y, &b, &SeedSet::new(2), BETA, EPS);
    assert_eq!(dense.row(0), row.as_slice());
}

/// One engine iteration against the dense path: every B by the matrix
/// rule, then each type's block by the matrix-form update, in type order.
#[test]
fn engine_iteration_matches_matrix_form() {
    for s in 0..25 {
        let inst = random_instance(300 + s, 6);
        let g = &inst.graph;
        for mode in [BMode::Full, BMode::Identity] {
            let mut b = inst.b.clone();
            if mode == BMode::Identity {
                b = init_propagation(g, &inst.seeds, BMode::Identity);
            }
            let config = InferenceConfig { max_iter: 1, b_mode: mode, ..Default::default() };
            let out = run_inference_from(g, &inst.seeds, inst.y.clone(), b.clone(), &config, &[]).unwrap();

            let mut y = inst.y.clone();
            let mut bd = b.clone();
            if mode == BMode::Full {
                for lo in 0..g.type_count() {
                    for hi in lo + 1..g.type_count() {
                        bd.set_pair(lo, hi, dense_b_multiplicative(g, &y, b.pair(lo, hi), lo, hi));
                    }
                }
            }
            for t in 0..g.type_count() {
                let block = matrix_form_update_y(t, g, &y, &bd, &inst.seeds, BETA, EPS);
                y.block_mut(t).copy_from_slice(block.as_slice());
            }
            for (a, e) in out.labels.as_slice().iter().zip(y.as_slice()) {
                assert!((a - e).abs() < 1e-12, "instance {s} {mode}: {a} vs {e}");
            }
            for (m, e) in out.propagation.matrices().iter().zip(bd.matrices()) {
                assert!(max_abs_diff(m, e) < 1e-12);
            }
        }
    }
}

#[test]
fn additive_step_lowers_the_row_subobjective() {
    for s in 0..100 {
        let inst = random_instance(400 + s, 8);
        let mut r = rng(s);
        let u = *inst.graph.vertices().collect::<Vec<_>>().choose(&mut r).unwrap();
        let a_t = compute_common_term(u.ty, &inst.y, &inst.b);
        let seed = inst.seeds.get(u);
        let mut signal = vec![0.0; inst.y.k()];
        neighbor_signal(&inst.graph, &inst.y, &inst.b, u, &mut signal);
        let j = |y: &[f64]| vertex_subobjective(&a_t, &signal, seed, BETA, y);
        let before = j(inst.y.row(u));
        let add = update_vertex_additive(&inst.graph, &inst.y, &inst.b, &a_t, u, seed, BETA, EPS, None);
        assert!(j(&add) <= before + 1e-12 * before.abs().max(1.0), "additive instance {s}");
        let mult = update_vertex_multiplicative(&inst.graph, &inst.y, &inst.b, &a_t, u, seed, BETA, EPS);
        assert!(j(&mult) <= before + 1e-12 * before.abs().max(1.0), "multiplicative instance {s}");
    }
}

#[test]
fn b_updates_match_dense_rule_and_lower_pair_error() {
    for s in 0..40 {
        let inst = random_instance(500 + s, 5);
        let g = &inst.graph;
        for lo in 0..g.type_count() {
            for hi in lo + 1..g.type_count() {
                let mult = update_b_multiplicative(g, &inst.y, &inst.b, lo, hi, EPS);
                let dense = dense_b_multiplicative(g, &inst.y, inst.b.pair(lo, hi), lo, hi);
                assert!(max_abs_diff(&mult, &dense) < 1e-12);

                let before = pair_error(g, &inst.y, inst.b.pair(lo, hi), lo, hi);
                assert!(pair_error(g, &inst.y, &mult, lo, hi) <= before * (1.0 + 1e-12));
                let add = update_b_additive(g, &inst.y, &inst.b, lo, hi, EPS, None);
                assert!(pair_error(g, &inst.y, &add, lo, hi) <= before * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn sparse_objective_matches_dense_on_small_instances() {
    for s in 0..30 {
        let inst = random_instance(600 + s, 4);
        let fast = compute_objective(&inst.graph, &inst.y, &inst.b, &inst.seeds, BETA);
        let dense = dense_objective(&inst.graph, &inst.y, &inst.b, &inst.seeds, BETA);
        assert!((fast - dense).abs() <= 1e-10 * dense.abs());
    }
}

/// Central differences of the whole objective: the row gradient is `−2d`
/// and the gradient in `B(lo, hi)` is `2(PBQ − N)`.
#[test]
fn objective_gradients_match_finite_differences() {
    for s in 0..20 {
        let inst = random_instance(700 + s, 5);
        let g = &inst.graph;
        let f = |y: &LabelMatrix, b: &PropagationSet| compute_objective(g, y, b, &inst.seeds, BETA);
        let h = 1e-6;
        let mut r = rng(s);
        let u = *g.vertices().collect::<Vec<_>>().choose(&mut r).unwrap();
        let a_t = compute_common_term(u.ty, &inst.y, &inst.b);
        let d = descent_direction(g, &inst.y, &inst.b, &a_t, u, inst.seeds.get(u), BETA);
        for c in 0..inst.y.k() {
            let mut plus = inst.y.clone();
            let mut minus = inst.y.clone();
            plus.row_mut(u)[c] += h;
            minus.row_mut(u)[c] -= h;
            let fd = (f(&plus, &inst.b) - f(&minus, &inst.b)) / (2.0 * h);
            assert!((fd + 2.0 * d[c]).abs() <= 1e-5 * fd.abs().max(1.0), "row gradient, instance {s}");
        }
        let (lo, hi) = (0, 1);
        let p = inst.y.gram(lo);
        let q = inst.y.gram(hi);
        let pbq = p.matmul(inst.b.pair(lo, hi)).matmul(&q);
        let n = edge_cross_term(g, &inst.y, lo, hi);
        let k = inst.y.k();
        for i in 0..k {
            for j in 0..k {
                let mut plus = inst.b.clone();
                let mut minus = inst.b.clone();
                plus.pair_mut(lo, hi).add_at(i, j, h);
                minus.pair_mut(lo, hi).add_at(i, j, -h);
                let fd = (f(&inst.y, &plus) - f(&inst.y, &minus)) / (2.0 * h);
                let analytic = 2.0 * (pbq.get(i, j) - n.get(i, j));
                assert!((fd - analytic).abs() <= 1e-5 * fd.abs().max(1.0), "B gradient, instance {s}");
            }
        }
    }
}

#[test]
fn pinned_instance_converges_within_budget() {
    let p = pinned();
    let (seeds, _) = select_seeds(&p.graph, &p.truth, 0.05).unwrap();
    let out = run_inference(&p.graph, &seeds, &InferenceConfig::default(), &[]).unwrap();
    assert_eq!(out.trace.reason, StopReason::Converged);
    assert!(out.trace.iterations < 100);
}

#[test]
fn identity_mode_keeps_b_fixed_and_additive_stays_positive() {
    let p = pinned();
    let (seeds, _) = select_seeds(&p.graph, &p.truth, 0.05).unwrap();
    let config = InferenceConfig { b_mode: BMode::Identity, max_iter: 20, ..Default::default() };
    let out = run_inference(&p.graph, &seeds, &config, &[]).unwrap();
    let third =
        DenseMatrix::from_rows(&[vec![1.0 / 3.0, 0.0, 0.0], vec![0.0, 1.0 / 3.0, 0.0], vec![0.0, 0.0, 1.0 / 3.0]]);
    for m in out.propagation.matrices() {
        assert_eq!(m, &third);
    }
    let config = InferenceConfig { rule: UpdateRule::Additive, max_iter: 30, ..Default::default() };
    let out = run_inference(&p.graph, &seeds, &config, &[]).unwrap();
    assert!(out.labels.as_slice().iter().all(|v| *v >= EPS));
    let obj = out.trace.objectives();
    assert!(obj.last().unwrap() < &obj[0]);
}

#![allow(dead_code)]

use std::collections::BTreeSet;

use kprop::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small random state: graph, labels, propagation matrices and seeds.
pub struct Instance {
    pub graph: KPartiteGraph,
    pub y: LabelMatrix,
    pub b: PropagationSet,
    pub seeds: SeedSet,
}

pub fn random_graph(rng: &mut ChaCha8Rng, types: usize, max_n: usize, density: f64) -> KPartiteGraph {
    let mut gb = GraphBuilder::new(types);
    let mut ids = vec![Vec::new(); types];
    for (t, list) in ids.iter_mut().enumerate() {
        for i in 0..rng.gen_range(2..=max_n) {
            list.push(gb.add_vertex(t, &format!("t{t}v{i}")).unwrap());
        }
    }
    for t in 0..types {
        for t2 in t + 1..types {
            for &u in &ids[t] {
                for &v in &ids[t2] {
                    if rng.gen::<f64>() < density {
                        let w = if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(0.2..3.0) };
                        gb.add_edge(u, v, w).unwrap();
                    }
                }
            }
        }
    }
    gb.build().graph
}

pub fn random_instance(seed: u64, max_n: usize) -> Instance {
    let mut r = rng(seed);
    let types = r.gen_range(2..=4);
    let k = r.gen_range(2..=4);
    let graph = random_graph(&mut r, types, max_n, 0.35);
    let mut y = LabelMatrix::for_graph(&graph, k);
    for v in y.as_mut_slice() {
        *v = r.gen_range(0.01..1.0);
    }
    let mut b = PropagationSet::filled(types, k, &DenseMatrix::identity(k));
    for m in b.matrices_mut() {
        for v in m.as_mut_slice() {
            *v = r.gen_range(0.0..1.0);
        }
    }
    let mut seeds = SeedSet::new(k);
    for u in graph.vertices() {
        if r.gen_bool(0.3) {
            let mut row = vec![0.0; k];
            row[r.gen_range(0..k)] = 1.0;
            if r.gen_bool(0.2) {
                let extra = r.gen_range(0..k);
                row[extra] += 1.0;
            }
            let s: f64 = row.iter().sum();
            seeds.insert_row(u, row.iter().map(|x| x / s).collect()).unwrap();
        }
    }
    Instance { graph, y, b, seeds }
}

/// The pinned instance: three types of 300 vertices, k = 3, expected degree
/// 6, type pair (0, 1) a pure label permutation, the other pairs homophilic.
pub const PINNED_SEED: u64 = 1;

pub fn heterophily_spec(sizes: Vec<usize>, seed: u64) -> PlantedSpec {
    let mut spec = PlantedSpec::new(sizes, 3, 6.0, seed);
    let perm = DenseMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
    spec.set_pair(0, 1, perm).unwrap();
    spec
}

pub fn pinned() -> Planted {
    generate_planted(&heterophily_spec(vec![300, 300, 300], PINNED_SEED)).unwrap()
}

/// Truth rows of `full` carried over to `graph` by vertex id.
pub fn truth_on(graph: &KPartiteGraph, full: &KPartiteGraph, truth: &LabelTable) -> LabelTable {
    let mut out = LabelTable::new(truth.k());
    for u in graph.vertices() {
        let f = full.vertex(u.ty, graph.id(u)).expect("vertex missing from the full graph");
        out.insert_row(u, truth.get(f).unwrap().to_vec()).unwrap();
    }
    out
}

/// Splits `full` into an old graph without a random `fraction` of its
/// vertices and a delta that adds them back with all their edges.
pub fn holdout(full: &KPartiteGraph, fraction: f64, seed: u64) -> (KPartiteGraph, DeltaBatch) {
    let mut r = rng(seed);
    let mut all: Vec<VertexRef> = full.vertices().collect();
    all.shuffle(&mut r);
    let count = (full.n() as f64 * fraction).round() as usize;
    let held: BTreeSet<VertexRef> = all[..count].iter().copied().collect();
    let removal = held.iter().map(|&u| DeltaOp::RemoveVertex { ty: u.ty, id: full.id(u).to_string() }).collect();
    let old = apply_delta(full, &DeltaBatch::new(removal)).unwrap().graph;

    let mut ops: Vec<DeltaOp> =
        held.iter().map(|&u| DeltaOp::AddVertex { ty: u.ty, id: full.id(u).to_string() }).collect();
    let mut seen = BTreeSet::new();
    for &u in &held {
        for n in full.neighbors(u) {
            let key = if u < n.vertex { (u, n.vertex) } else { (n.vertex, u) };
            if seen.insert(key) {
                ops.push(DeltaOp::AddEdge {
                    a: (u.ty, full.id(u).to_string()),
                    b: (n.vertex.ty, full.id(n.vertex).to_string()),
                    weight: n.weight,
                });
            }
        }
    }
    (old, DeltaBatch::new(ops))
}

pub fn bits(y: &LabelMatrix) -> Vec<u64> {
    y.as_slice().iter().map(|v| v.to_bits()).collect()
}

pub fn b_bits(b: &PropagationSet) -> Vec<u64> {
    b.matrices().iter().flat_map(|m| m.as_slice().iter().map(|v| v.to_bits())).collect()
}

pub fn off_diagonal_share(m: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    let mut off = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            total += m.get(i, j);
            if i != j {
                off += m.get(i, j);
            }
        }
    }
    off / total
}

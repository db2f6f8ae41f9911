//! Ordered graph and label changes, and their application.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::graph::{KPartiteGraph, VertexRef};

#[derive(Clone, Debug, PartialEq)]
pub enum DeltaOp {
    AddVertex {
        ty: usize,
        id: String,
    },
    RemoveVertex {
        ty: usize,
        id: String,
    },
    AddEdge {
        a: (usize, String),
        b: (usize, String),
        weight: f64,
    },
    RemoveEdge {
        a: (usize, String),
        b: (usize, String),
    },
    /// Adds `prob` mass on `label`; repeated lines for one vertex build a
    /// multi-label row.
    SetLabel {
        ty: usize,
        id: String,
        label: usize,
        prob: f64,
    },
    UnsetLabel {
        ty: usize,
        id: String,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaBatch {
    pub ops: Vec<DeltaOp>,
}

impl DeltaBatch {
    pub fn new(ops: Vec<DeltaOp>) -> Self {
        Self { ops }
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Ground-truth change for one vertex: `Some(entries)` replaces its seed
/// row with the (unnormalized) `(label, mass)` entries, `None` removes it.
pub type LabelUpdate = Option<Vec<(usize, f64)>>;

#[derive(Clone, Debug)]
pub struct DeltaOutcome {
    pub graph: KPartiteGraph,
    /// Vertices touched by the batch, in new-graph references.
    pub changed: BTreeSet<VertexRef>,
    /// Old local index → new local index, per type.
    pub remap: Vec<Vec<Option<usize>>>,
    /// New local index → old local index (`None` for added vertices).
    pub origin: Vec<Vec<Option<usize>>>,
    pub labels: BTreeMap<VertexRef, LabelUpdate>,
}

impl DeltaOutcome {
    pub fn old_of(&self, u: VertexRef) -> Option<VertexRef> {
        self.origin[u.ty][u.index].map(|i| VertexRef::new(u.ty, i))
    }

    pub fn new_of(&self, u: VertexRef) -> Option<VertexRef> {
        self.remap.get(u.ty)?.get(u.index).copied().flatten().map(|i| VertexRef::new(u.ty, i))
    }
}

/// Applies `delta` in order and reports the changed vertex set.
///
/// The changed set holds added vertices, endpoints of added or removed
/// edges, label-change targets, and surviving neighbors of removed vertices.
/// Removed vertices themselves never appear in it.
pub fn apply_delta(graph: &KPartiteGraph, delta: &DeltaBatch) -> Result<DeltaOutcome> {
    let mut builder = graph.to_builder();
    let mut changed: BTreeSet<VertexRef> = BTreeSet::new();
    let mut removed: BTreeSet<VertexRef> = BTreeSet::new();
    let mut labels: BTreeMap<VertexRef, LabelUpdate> = BTreeMap::new();

    for op in &delta.ops {
        match op {
            DeltaOp::AddVertex { ty, id } => {
                let u = builder.add_vertex(*ty, id)?;
                changed.insert(u);
            }
            DeltaOp::RemoveVertex { ty, id } => {
                let u = builder.vertex(*ty, id)?;
                for v in builder.remove_vertex(u) {
                    changed.insert(v);
                }
                changed.remove(&u);
                labels.remove(&u);
                removed.insert(u);
            }
            DeltaOp::AddEdge { a, b, weight } => {
                let u = builder.vertex(a.0, &a.1)?;
                let v = builder.vertex(b.0, &b.1)?;
                builder.add_edge(u, v, *weight)?;
                changed.insert(u);
                changed.insert(v);
            }
            DeltaOp::RemoveEdge { a, b } => {
                let u = builder.vertex(a.0, &a.1)?;
                let v = builder.vertex(b.0, &b.1)?;
                builder.remove_edge(u, v)?;
                changed.insert(u);
                changed.insert(v);
            }
            DeltaOp::SetLabel { ty, id, label, prob } => {
                let u = builder.vertex(*ty, id)?;
                let entry = labels.entry(u).or_insert(None);
                entry.get_or_insert_with(Vec::new).push((*label, *prob));
                changed.insert(u);
            }
            DeltaOp::UnsetLabel { ty, id } => {
                let u = builder.vertex(*ty, id)?;
                labels.insert(u, None);
                changed.insert(u);
            }
        }
    }

    let old_counts = graph.counts();
    let built = builder.build();
    let to_new = |u: VertexRef| built.remap[u.ty][u.index].map(|i| VertexRef::new(u.ty, i));

    let remap: Vec<Vec<Option<usize>>> = built.remap.iter().zip(&old_counts).map(|(m, &n)| m[..n].to_vec()).collect();
    let mut origin: Vec<Vec<Option<usize>>> = built.graph.counts().into_iter().map(|n| vec![None; n]).collect();
    for (t, m) in remap.iter().enumerate() {
        for (old, new) in m.iter().enumerate() {
            if let Some(new) = new {
                origin[t][*new] = Some(old);
            }
        }
    }

    Ok(DeltaOutcome {
        changed: changed.into_iter().filter_map(to_new).collect(),
        labels: labels.into_iter().filter_map(|(u, l)| to_new(u).map(|v| (v, l))).collect(),
        remap,
        origin,
        graph: built.graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn s(t: usize, id: &str) -> (usize, String) {
        (t, id.to_string())
    }

    /// Tripartite toy graph with vertices 1..=8 spread over three types.
    fn toy() -> KPartiteGraph {
        let mut b = GraphBuilder::new(3);
        let types = [0, 0, 1, 1, 1, 2, 2, 2];
        let refs: Vec<VertexRef> =
            types.iter().enumerate().map(|(i, &t)| b.add_vertex(t, &(i + 1).to_string()).unwrap()).collect();
        for (x, y) in [(1, 3), (1, 4), (2, 4), (2, 5), (3, 6), (4, 7), (5, 8), (1, 7)] {
            b.add_edge(refs[x - 1], refs[y - 1], 1.0).unwrap();
        }
        b.build().graph
    }

    fn ids(out: &DeltaOutcome) -> Vec<String> {
        let mut v: Vec<String> = out.changed.iter().map(|&u| out.graph.id(u).to_string()).collect();
        v.sort_by_key(|x| x.parse::<usize>().unwrap());
        v
    }

    #[test]
    fn empty_delta_is_identity() {
        let g = toy();
        let out = apply_delta(&g, &DeltaBatch::default()).unwrap();
        assert_eq!(out.graph, g);
        assert!(out.changed.is_empty());
    }

    #[test]
    fn two_new_vertices_touch_their_neighbors() {
        let g = toy();
        let delta = DeltaBatch::new(vec![
            DeltaOp::AddVertex { ty: 0, id: "9".into() },
            DeltaOp::AddVertex { ty: 1, id: "10".into() },
            DeltaOp::AddEdge { a: s(0, "9"), b: s(1, "5"), weight: 1.0 },
            DeltaOp::AddEdge { a: s(0, "9"), b: s(2, "6"), weight: 1.0 },
            DeltaOp::AddEdge { a: s(1, "10"), b: s(2, "8"), weight: 1.0 },
        ]);
        let out = apply_delta(&g, &delta).unwrap();
        assert_eq!(ids(&out), ["5", "6", "8", "9", "10"]);
        assert_eq!(out.graph.n(), 10);
        assert_eq!(out.graph.m(), 11);
    }

    #[test]
    fn label_change_touches_only_target() {
        let g = toy();
        let delta = DeltaBatch::new(vec![DeltaOp::SetLabel { ty: 2, id: "7".into(), label: 1, prob: 1.0 }]);
        let out = apply_delta(&g, &delta).unwrap();
        assert_eq!(ids(&out), ["7"]);
        let u = out.graph.vertex(2, "7").unwrap();
        assert_eq!(out.labels[&u], Some(vec![(1, 1.0)]));
    }

    #[test]
    fn removed_vertex_excluded_but_neighbors_included() {
        let g = toy();
        let delta = DeltaBatch::new(vec![DeltaOp::RemoveVertex { ty: 0, id: "1".into() }]);
        let out = apply_delta(&g, &delta).unwrap();
        assert_eq!(ids(&out), ["3", "4", "7"]);
        assert!(out.graph.vertex(0, "1").is_none());
        assert_eq!(out.remap[0], vec![None, Some(0)]);
        assert_eq!(out.origin[0], vec![Some(1)]);
    }

    #[test]
    fn unknown_references_error() {
        let g = toy();
        let bad = DeltaBatch::new(vec![DeltaOp::RemoveEdge { a: s(0, "1"), b: s(1, "5") }]);
        assert!(apply_delta(&g, &bad).is_err());
        let bad = DeltaBatch::new(vec![DeltaOp::RemoveVertex { ty: 1, id: "nope".into() }]);
        assert!(apply_delta(&g, &bad).is_err());
    }

    #[test]
    fn inverse_operations_restore_graph() {
        let g = toy();
        let forward = DeltaBatch::new(vec![
            DeltaOp::AddVertex { ty: 2, id: "x".into() },
            DeltaOp::AddEdge { a: s(2, "x"), b: s(0, "2"), weight: 2.0 },
            DeltaOp::RemoveEdge { a: s(0, "1"), b: s(1, "3") },
        ]);
        let back = DeltaBatch::new(vec![
            DeltaOp::AddEdge { a: s(0, "1"), b: s(1, "3"), weight: 1.0 },
            DeltaOp::RemoveVertex { ty: 2, id: "x".into() },
        ]);
        let mid = apply_delta(&g, &forward).unwrap().graph;
        let restored = apply_delta(&mid, &back).unwrap().graph;
        assert_eq!(restored, g);
    }
}

//! Typed sparse K-partite graph storage.
//!
//! Vertices are addressed by [`VertexRef`] (type, local index). Local indices
//! are dense per type and follow insertion order. Edges always span two
//! distinct types and are stored once per unordered type pair, keyed with
//! the lower type first; the per-vertex adjacency index mirrors them in both
//! directions.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexRef {
    pub ty: usize,
    pub index: usize,
}

impl VertexRef {
    pub const fn new(ty: usize, index: usize) -> Self {
        Self { ty, index }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub vertex: VertexRef,
    pub weight: f64,
}

/// One edge of a type pair `(lo, hi)`: `u` is a local index of type `lo`,
/// `v` a local index of type `hi`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Position of the unordered pair `(lo, hi)`, `lo < hi`, in lexicographic
/// pair order.
#[inline]
pub fn pair_index(types: usize, lo: usize, hi: usize) -> usize {
    debug_assert!(lo < hi && hi < types);
    lo * types - lo * (lo + 1) / 2 + (hi - lo - 1)
}

/// All unordered type pairs `(lo, hi)` in lexicographic order.
pub fn type_pairs(types: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..types).flat_map(move |lo| (lo + 1..types).map(move |hi| (lo, hi)))
}

#[derive(Clone, Debug)]
pub struct KPartiteGraph {
    ids: Vec<Vec<String>>,
    lookup: Vec<HashMap<String, usize>>,
    offsets: Vec<usize>,
    pairs: Vec<Vec<Edge>>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl PartialEq for KPartiteGraph {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.pairs == other.pairs
    }
}

impl KPartiteGraph {
    pub fn type_count(&self) -> usize {
        self.ids.len()
    }

    pub fn count(&self, ty: usize) -> usize {
        self.ids[ty].len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.ids.iter().map(Vec::len).collect()
    }

    /// Total number of vertices.
    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    /// Total number of edges.
    pub fn m(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    /// Start of each type's block in global vertex order; has `K + 1` entries.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn global(&self, u: VertexRef) -> usize {
        self.offsets[u.ty] + u.index
    }

    pub fn vertex_at(&self, global: usize) -> VertexRef {
        let ty = self.offsets.partition_point(|&o| o <= global) - 1;
        VertexRef::new(ty, global - self.offsets[ty])
    }

    pub fn contains(&self, u: VertexRef) -> bool {
        u.ty < self.type_count() && u.index < self.count(u.ty)
    }

    pub fn id(&self, u: VertexRef) -> &str {
        &self.ids[u.ty][u.index]
    }

    pub fn vertex(&self, ty: usize, id: &str) -> Option<VertexRef> {
        self.lookup.get(ty)?.get(id).map(|&index| VertexRef::new(ty, index))
    }

    /// Vertices in `(type, index)` order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexRef> + '_ {
        (0..self.type_count()).flat_map(move |t| (0..self.count(t)).map(move |i| VertexRef::new(t, i)))
    }

    #[inline]
    pub fn neighbors(&self, u: VertexRef) -> &[Neighbor] {
        &self.adjacency[self.global(u)]
    }

    #[inline]
    pub fn degree(&self, u: VertexRef) -> usize {
        self.neighbors(u).len()
    }

    /// Edges of the pair `(lo, hi)`, `lo < hi`, sorted by `(u, v)`.
    pub fn pair_edges(&self, lo: usize, hi: usize) -> &[Edge] {
        &self.pairs[pair_index(self.type_count(), lo, hi)]
    }

    pub fn weight(&self, a: VertexRef, b: VertexRef) -> Option<f64> {
        let nbrs = self.neighbors(a);
        nbrs.binary_search_by(|n| n.vertex.cmp(&b)).ok().map(|i| nbrs[i].weight)
    }

    /// Keeps every vertex but only the edges accepted by `keep`.
    pub fn edge_subgraph(&self, mut keep: impl FnMut(VertexRef, VertexRef) -> bool) -> KPartiteGraph {
        let types = self.type_count();
        let mut out = self.clone();
        for (lo, hi) in type_pairs(types) {
            out.pairs[pair_index(types, lo, hi)].retain(|e| keep(VertexRef::new(lo, e.u), VertexRef::new(hi, e.v)));
        }
        out.rebuild_adjacency();
        out
    }

    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new(self.type_count());
        for t in 0..self.type_count() {
            for id in &self.ids[t] {
                b.add_vertex(t, id).expect("graph ids are unique");
            }
        }
        for (lo, hi) in type_pairs(self.type_count()) {
            for e in self.pair_edges(lo, hi) {
                b.add_edge(VertexRef::new(lo, e.u), VertexRef::new(hi, e.v), e.weight).expect("graph edges are valid");
            }
        }
        b
    }

    fn rebuild_adjacency(&mut self) {
        let types = self.type_count();
        let mut adjacency = vec![Vec::new(); self.n()];
        for (lo, hi) in type_pairs(types) {
            for e in &self.pairs[pair_index(types, lo, hi)] {
                let a = VertexRef::new(lo, e.u);
                let b = VertexRef::new(hi, e.v);
                adjacency[self.offsets[lo] + e.u].push(Neighbor { vertex: b, weight: e.weight });
                adjacency[self.offsets[hi] + e.v].push(Neighbor { vertex: a, weight: e.weight });
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|x| x.vertex);
        }
        self.adjacency = adjacency;
    }
}

/// Mutable staging area for graphs. Removed vertices leave a dead slot so
/// that references handed out earlier stay valid until [`GraphBuilder::build`]
/// compacts them.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    ids: Vec<Vec<String>>,
    alive: Vec<Vec<bool>>,
    lookup: Vec<HashMap<String, usize>>,
    edges: BTreeMap<(VertexRef, VertexRef), f64>,
    incident: HashMap<VertexRef, BTreeSet<VertexRef>>,
}

/// Output of [`GraphBuilder::build`]: the graph plus the slot → index map
/// (`None` for removed slots).
#[derive(Clone, Debug)]
pub struct Built {
    pub graph: KPartiteGraph,
    pub remap: Vec<Vec<Option<usize>>>,
}

impl GraphBuilder {
    pub fn new(types: usize) -> Self {
        Self {
            ids: vec![Vec::new(); types],
            alive: vec![Vec::new(); types],
            lookup: vec![HashMap::new(); types],
            edges: BTreeMap::new(),
            incident: HashMap::new(),
        }
    }

    pub fn type_count(&self) -> usize {
        self.ids.len()
    }

    fn check_type(&self, ty: usize) -> Result<()> {
        if ty >= self.type_count() {
            return Err(Error::TypeOutOfRange { ty, types: self.type_count() });
        }
        Ok(())
    }

    pub fn add_vertex(&mut self, ty: usize, id: &str) -> Result<VertexRef> {
        self.check_type(ty)?;
        if self.lookup[ty].contains_key(id) {
            return Err(Error::DuplicateVertex { ty, id: id.to_string() });
        }
        let index = self.ids[ty].len();
        self.ids[ty].push(id.to_string());
        self.alive[ty].push(true);
        self.lookup[ty].insert(id.to_string(), index);
        Ok(VertexRef::new(ty, index))
    }

    pub fn vertex(&self, ty: usize, id: &str) -> Result<VertexRef> {
        self.check_type(ty)?;
        self.lookup[ty]
            .get(id)
            .map(|&i| VertexRef::new(ty, i))
            .ok_or_else(|| Error::UnknownVertex { ty, id: id.to_string() })
    }

    pub fn id(&self, u: VertexRef) -> &str {
        &self.ids[u.ty][u.index]
    }

    fn key(&self, a: VertexRef, b: VertexRef) -> Result<(VertexRef, VertexRef)> {
        if a.ty == b.ty {
            return Err(Error::IntraTypeEdge { ty: a.ty, a: self.id(a).to_string(), b: self.id(b).to_string() });
        }
        Ok(if a < b { (a, b) } else { (b, a) })
    }

    /// Adds `weight` to the edge `a`–`b`, creating it if needed.
    pub fn add_edge(&mut self, a: VertexRef, b: VertexRef, weight: f64) -> Result<()> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::NegativeWeight(weight));
        }
        let key = self.key(a, b)?;
        *self.edges.entry(key).or_insert(0.0) += weight;
        self.incident.entry(a).or_default().insert(b);
        self.incident.entry(b).or_default().insert(a);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: VertexRef, b: VertexRef) -> Result<()> {
        let key = self.key(a, b)?;
        if self.edges.remove(&key).is_none() {
            return Err(Error::UnknownEdge {
                t1: a.ty,
                a: self.id(a).to_string(),
                t2: b.ty,
                b: self.id(b).to_string(),
            });
        }
        if let Some(s) = self.incident.get_mut(&a) {
            s.remove(&b);
        }
        if let Some(s) = self.incident.get_mut(&b) {
            s.remove(&a);
        }
        Ok(())
    }

    /// Removes a vertex and its incident edges; returns its former neighbors.
    pub fn remove_vertex(&mut self, u: VertexRef) -> Vec<VertexRef> {
        let nbrs: Vec<VertexRef> = self.incident.remove(&u).map(|s| s.into_iter().collect()).unwrap_or_default();
        for &v in &nbrs {
            let key = if u < v { (u, v) } else { (v, u) };
            self.edges.remove(&key);
            if let Some(s) = self.incident.get_mut(&v) {
                s.remove(&u);
            }
        }
        self.alive[u.ty][u.index] = false;
        let id = self.ids[u.ty][u.index].clone();
        self.lookup[u.ty].remove(&id);
        nbrs
    }

    pub fn build(self) -> Built {
        let types = self.type_count();
        let mut remap = Vec::with_capacity(types);
        let mut ids = Vec::with_capacity(types);
        for t in 0..types {
            let mut next = 0;
            let mut map = Vec::with_capacity(self.ids[t].len());
            let mut kept = Vec::new();
            for (slot, id) in self.ids[t].iter().enumerate() {
                if self.alive[t][slot] {
                    map.push(Some(next));
                    kept.push(id.clone());
                    next += 1;
                } else {
                    map.push(None);
                }
            }
            remap.push(map);
            ids.push(kept);
        }
        let lookup =
            ids.iter().map(|v: &Vec<String>| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect()).collect();
        let mut offsets = Vec::with_capacity(types + 1);
        offsets.push(0);
        for v in &ids {
            offsets.push(offsets.last().unwrap() + v.len());
        }
        let mut pairs = vec![Vec::new(); types * types.saturating_sub(1) / 2];
        for (&(a, b), &w) in &self.edges {
            let (Some(u), Some(v)) = (remap[a.ty][a.index], remap[b.ty][b.index]) else {
                continue;
            };
            pairs[pair_index(types, a.ty, b.ty)].push(Edge { u, v, weight: w });
        }
        let mut graph = KPartiteGraph { ids, lookup, offsets, pairs, adjacency: Vec::new() };
        graph.rebuild_adjacency();
        Built { graph, remap }
    }
}

/// Raw Adamic-Adar score: sum of `1 / ln d(w)` over common neighbors `w`.
pub fn adamic_adar(graph: &KPartiteGraph, u: VertexRef, v: VertexRef) -> f64 {
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j) = (0, 0);
    let mut score = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].vertex.cmp(&b[j].vertex) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let d = graph.degree(a[i].vertex);
                // a common neighbor of two distinct vertices has degree >= 2
                if d > 1 {
                    score += 1.0 / (d as f64).ln();
                }
                i += 1;
                j += 1;
            }
        }
    }
    score
}

/// Min-max rescaling into `[0, 1]`; a constant batch maps to all zeros.
pub fn normalize_scores(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("score batch"));
    }
    let (lo, hi) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let range = hi - lo;
    if range <= 0.0 {
        return Ok(vec![0.0; scores.len()]);
    }
    Ok(scores.iter().map(|s| (s - lo) / range).collect())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct SubgraphSize {
    pub vertices: usize,
    pub edges: usize,
}

impl SubgraphSize {
    pub fn total(&self) -> usize {
        self.vertices + self.edges
    }
}

/// Size of the subgraph induced by `changed`: its vertices plus every edge
/// with at least one endpoint among them.
pub fn induced_subgraph(graph: &KPartiteGraph, changed: &BTreeSet<VertexRef>) -> SubgraphSize {
    let mut edges = 0;
    for &u in changed {
        for n in graph.neighbors(u) {
            // count an edge with both endpoints changed once
            if !changed.contains(&n.vertex) || u < n.vertex {
                edges += 1;
            }
        }
    }
    SubgraphSize { vertices: changed.len(), edges }
}

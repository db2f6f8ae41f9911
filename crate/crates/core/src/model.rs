//! Label-assignment and propagation-matrix state, initialization, and seed
//! selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::delta::DeltaOutcome;
use crate::error::{Error, Result};
use crate::graph::{pair_index, type_pairs, KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;

/// Per-vertex label scores, stored row-major in global vertex order so each
/// type owns a contiguous block.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    k: usize,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl LabelMatrix {
    pub fn zeros(counts: &[usize], k: usize) -> Self {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        for c in counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let n = *offsets.last().unwrap();
        Self { k, offsets, data: vec![0.0; n * k] }
    }

    pub fn for_graph(graph: &KPartiteGraph, k: usize) -> Self {
        Self::zeros(&graph.counts(), k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn type_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    #[inline]
    pub fn row(&self, u: VertexRef) -> &[f64] {
        self.row_global(self.offsets[u.ty] + u.index)
    }

    #[inline]
    pub fn row_mut(&mut self, u: VertexRef) -> &mut [f64] {
        let g = self.offsets[u.ty] + u.index;
        &mut self.data[g * self.k..(g + 1) * self.k]
    }

    #[inline]
    pub fn row_global(&self, g: usize) -> &[f64] {
        &self.data[g * self.k..(g + 1) * self.k]
    }

    /// Rows of type `t`, row-major `n_t × k`.
    pub fn block(&self, t: usize) -> &[f64] {
        &self.data[self.offsets[t] * self.k..self.offsets[t + 1] * self.k]
    }

    pub fn block_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[self.offsets[t] * self.k..self.offsets[t + 1] * self.k]
    }

    pub fn block_matrix(&self, t: usize) -> DenseMatrix {
        let n_t = self.offsets[t + 1] - self.offsets[t];
        DenseMatrix::from_vec(n_t, self.k, self.block(t).to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `Y_tᵀ Y_t`, accumulated in row order.
    pub fn gram(&self, t: usize) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.k, self.k);
        for row in self.block(t).chunks_exact(self.k) {
            g.add_outer(row, row, 1.0);
        }
        g
    }

    pub fn check_shape(&self, graph: &KPartiteGraph) -> Result<()> {
        if self.counts() != graph.counts() {
            return Err(Error::ShapeMismatch(format!(
                "label matrix has type sizes {:?}, graph has {:?}",
                self.counts(),
                graph.counts()
            )));
        }
        Ok(())
    }
}

/// How propagation matrices are constrained. `Identity`, `Diagonal` and
/// `SingleShared` reproduce the GRF, MHV and BHP baselines respectively.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum BMode {
    #[default]
    Full,
    Diagonal,
    Identity,
    SingleShared,
}

impl fmt::Display for BMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BMode::Full => "full",
            BMode::Diagonal => "diag",
            BMode::Identity => "identity",
            BMode::SingleShared => "single",
        })
    }
}

impl FromStr for BMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(BMode::Full),
            "diag" | "diagonal" => Ok(BMode::Diagonal),
            "identity" => Ok(BMode::Identity),
            "single" | "single-shared" => Ok(BMode::SingleShared),
            other => Err(Error::InvalidConfig(format!("unknown B mode {other:?}"))),
        }
    }
}

/// One `k × k` matrix per unordered type pair; `B(t', t) = B(t, t')ᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationSet {
    k: usize,
    types: usize,
    mats: Vec<DenseMatrix>,
}

/// `B(t, t')` for an ordered pair, viewing the stored matrix transposed when
/// `t > t'`.
#[derive(Copy, Clone, Debug)]
pub struct Oriented<'a> {
    mat: &'a DenseMatrix,
    transposed: bool,
}

impl Oriented<'_> {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.transposed {
            self.mat.get(j, i)
        } else {
            self.mat.get(i, j)
        }
    }

    /// `out = B(t, t') · y`
    #[inline]
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        if self.transposed {
            self.mat.mul_t_vec_into(y, out)
        } else {
            self.mat.mul_vec_into(y, out)
        }
    }

    /// `out += scale · B(t, t') · y`
    #[inline]
    pub fn apply_add(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        let k = out.len();
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &yj) in y.iter().enumerate().take(k) {
                acc += self.get(i, j) * yj;
            }
            *o += scale * acc;
        }
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        if self.transposed {
            self.mat.transpose()
        } else {
            self.mat.clone()
        }
    }
}

impl PropagationSet {
    pub fn filled(types: usize, k: usize, m: &DenseMatrix) -> Self {
        assert_eq!((m.rows(), m.cols()), (k, k));
        Self { k, types, mats: vec![m.clone(); types * types.saturating_sub(1) / 2] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn type_count(&self) -> usize {
        self.types
    }

    /// Stored matrix of the unordered pair `(lo, hi)`, `lo < hi`.
    pub fn pair(&self, lo: usize, hi: usize) -> &DenseMatrix {
        &self.mats[pair_index(self.types, lo, hi)]
    }

    pub fn pair_mut(&mut self, lo: usize, hi: usize) -> &mut DenseMatrix {
        &mut self.mats[pair_index(self.types, lo, hi)]
    }

    pub fn set_pair(&mut self, lo: usize, hi: usize, m: DenseMatrix) {
        assert_eq!((m.rows(), m.cols()), (self.k, self.k));
        self.mats[pair_index(self.types, lo, hi)] = m;
    }

    #[inline]
    pub fn oriented(&self, t: usize, t2: usize) -> Oriented<'_> {
        debug_assert_ne!(t, t2);
        if t < t2 {
            Oriented { mat: self.pair(t, t2), transposed: false }
        } else {
            Oriented { mat: self.pair(t2, t), transposed: true }
        }
    }

    /// Stored matrices in pair order.
    pub fn matrices(&self) -> &[DenseMatrix] {
        &self.mats
    }

    pub fn matrices_mut(&mut self) -> &mut [DenseMatrix] {
        &mut self.mats
    }
}

/// Per-vertex ground-truth label rows. Every row sums to one: one-hot for a
/// single label, uniform over the label set for multi-label vertices.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LabelTable {
    k: usize,
    rows: BTreeMap<VertexRef, Vec<f64>>,
}

/// Seed vertices `V^L` with their ground-truth rows.
pub type SeedSet = LabelTable;

impl LabelTable {
    pub fn new(k: usize) -> Self {
        Self { k, rows: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, u: VertexRef) -> Option<&[f64]> {
        self.rows.get(&u).map(Vec::as_slice)
    }

    pub fn contains(&self, u: VertexRef) -> bool {
        self.rows.contains_key(&u)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexRef, &[f64])> {
        self.rows.iter().map(|(&u, r)| (u, r.as_slice()))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexRef> + '_ {
        self.rows.keys().copied()
    }

    /// Builds a row from `(label, mass)` entries, summing repeats and
    /// normalizing to unit mass.
    pub fn insert_entries(&mut self, u: VertexRef, entries: &[(usize, f64)]) -> Result<()> {
        let mut row = vec![0.0; self.k];
        for &(label, mass) in entries {
            if label >= self.k {
                return Err(Error::LabelOutOfRange { label, classes: self.k });
            }
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::InvalidConfig(format!("label mass must be positive, got {mass}")));
            }
            row[label] += mass;
        }
        let total: f64 = row.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyInput("label row"));
        }
        row.iter_mut().for_each(|v| *v /= total);
        self.rows.insert(u, row);
        Ok(())
    }

    pub fn insert_label(&mut self, u: VertexRef, label: usize) -> Result<()> {
        self.insert_entries(u, &[(label, 1.0)])
    }

    /// Inserts a row verbatim (it must already have unit mass).
    pub fn insert_row(&mut self, u: VertexRef, row: Vec<f64>) -> Result<()> {
        if row.len() != self.k {
            return Err(Error::ShapeMismatch(format!("label row of length {} for k = {}", row.len(), self.k)));
        }
        self.rows.insert(u, row);
        Ok(())
    }

    pub fn remove(&mut self, u: VertexRef) -> Option<Vec<f64>> {
        self.rows.remove(&u)
    }

    /// Labels carrying positive mass in `u`'s row.
    pub fn labels_of(&self, u: VertexRef) -> Option<Vec<usize>> {
        self.get(u).map(|r| r.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect())
    }

    /// Carries the table across a delta: rows follow their vertex to its new
    /// index, removed vertices drop out, and label operations apply on top.
    pub fn after_delta(&self, outcome: &DeltaOutcome) -> Result<Self> {
        let mut next = Self::new(self.k);
        for (&u, row) in &self.rows {
            if let Some(v) = outcome.new_of(u) {
                next.rows.insert(v, row.clone());
            }
        }
        for (&u, update) in &outcome.labels {
            match update {
                Some(entries) => next.insert_entries(u, entries)?,
                None => {
                    next.rows.remove(&u);
                }
            }
        }
        Ok(next)
    }
}

/// Picks the top `⌈fraction · n⌉` vertices by degree (ties by type, then
/// index) and keeps those that have ground truth. Returns the seeds and the
/// number of selected vertices skipped for lack of truth.
pub fn select_seeds(graph: &KPartiteGraph, truth: &LabelTable, fraction: f64) -> Result<(SeedSet, usize)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("seed fraction must lie in (0, 1], got {fraction}")));
    }
    let mut order: Vec<VertexRef> = graph.vertices().collect();
    // stable sort keeps (type, index) order among equal degrees
    order.sort_by_key(|&u| std::cmp::Reverse(graph.degree(u)));
    let take = ((fraction * graph.n() as f64).ceil() as usize).min(graph.n());
    let mut seeds = SeedSet::new(truth.k());
    let mut skipped = 0;
    for &u in &order[..take] {
        match truth.get(u) {
            Some(row) => {
                seeds.rows.insert(u, row.to_vec());
            }
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} selected seed vertices have no ground truth and were skipped");
    }
    Ok((seeds, skipped))
}

/// Weighted average of seed rows: `Σ sᵢ · Y*ᵢ / count`. Returns `None` when
/// every weight is zero (or there are no seeds), which callers treat as
/// "no information".
pub fn combine_seed_rows<'a>(
    k: usize,
    count: usize,
    weighted: impl IntoIterator<Item = (f64, &'a [f64])>,
) -> Option<Vec<f64>> {
    if count == 0 {
        return None;
    }
    let mut row = vec![0.0; k];
    let mut any = false;
    for (s, seed_row) in weighted {
        if s > 0.0 {
            any = true;
            for (r, &y) in row.iter_mut().zip(seed_row) {
                *r += s * y;
            }
        }
    }
    if !any {
        return None;
    }
    row.iter_mut().for_each(|v| *v /= count as f64);
    Some(row)
}

/// Raw Adamic-Adar scores of each vertex in `targets` against the seeds of
/// its own type, via two-hop walks out of every seed. Returned per target as
/// sparse `(seed, score)` lists in seed order.
fn seed_similarities(graph: &KPartiteGraph, seeds: &SeedSet, targets: &[VertexRef]) -> Vec<Vec<(VertexRef, f64)>> {
    let n = graph.n();
    let mut slot = vec![usize::MAX; n];
    for (i, &u) in targets.iter().enumerate() {
        slot[graph.global(u)] = i;
    }
    let mut out: Vec<Vec<(VertexRef, f64)>> = vec![Vec::new(); targets.len()];
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for s in seeds.vertices() {
        if !graph.contains(s) {
            continue;
        }
        acc.clear();
        for w in graph.neighbors(s) {
            let d = graph.degree(w.vertex);
            if d < 2 {
                continue;
            }
            let inv = 1.0 / (d as f64).ln();
            for x in graph.neighbors(w.vertex) {
                if x.vertex.ty != s.ty || x.vertex == s {
                    continue;
                }
                let i = slot[graph.global(x.vertex)];
                if i != usize::MAX {
                    *acc.entry(i).or_insert(0.0) += inv;
                }
            }
        }
        for (&i, &score) in &acc {
            out[i].push((s, score));
        }
    }
    out
}

/// Initial rows for `targets` from graph proximity to same-type seeds.
///
/// Scores for every (target, same-type seed) pair form one batch that is
/// min-max normalized together; each row is then the average over the
/// type's seeds of `sim · Y*`. Targets with no same-type seed or only zero
/// similarities get the uniform row `1/k`.
pub fn proximity_rows(graph: &KPartiteGraph, seeds: &SeedSet, targets: &[VertexRef]) -> Vec<Vec<f64>> {
    let k = seeds.k();
    let mut per_type = vec![0usize; graph.type_count()];
    for s in seeds.vertices().filter(|&s| graph.contains(s)) {
        per_type[s.ty] += 1;
    }
    let sims = seed_similarities(graph, seeds, targets);

    let total_pairs: usize = targets.iter().map(|u| per_type[u.ty]).sum();
    let nonzero: usize = sims.iter().map(Vec::len).sum();
    let mut lo = if nonzero < total_pairs { 0.0 } else { f64::INFINITY };
    let mut hi: f64 = 0.0;
    for &(_, s) in sims.iter().flatten() {
        lo = f64::min(lo, s);
        hi = hi.max(s);
    }
    let range = hi - lo;

    let uniform = vec![1.0 / k as f64; k];
    targets
        .iter()
        .zip(&sims)
        .map(|(u, list)| {
            if range <= 0.0 {
                return uniform.clone();
            }
            let weighted = list.iter().map(|&(s, raw)| ((raw - lo) / range, seeds.get(s).expect("seed row")));
            combine_seed_rows(k, per_type[u.ty], weighted).unwrap_or_else(|| uniform.clone())
        })
        .collect()
}

/// `Y⁰`: seeds take their ground truth, everything else comes from
/// [`proximity_rows`].
pub fn init_labels(graph: &KPartiteGraph, seeds: &SeedSet) -> LabelMatrix {
    let mut y = LabelMatrix::for_graph(graph, seeds.k());
    let unlabeled: Vec<VertexRef> = graph.vertices().filter(|&u| !seeds.contains(u)).collect();
    for (u, row) in unlabeled.iter().zip(proximity_rows(graph, seeds, &unlabeled)) {
        y.row_mut(*u).copy_from_slice(&row);
    }
    for (u, row) in seeds.iter() {
        if graph.contains(u) {
            y.row_mut(u).copy_from_slice(row);
        }
    }
    y
}

/// Label co-occurrence counts over seed–seed edges of one type pair:
/// `Σ Y*(u) Y*(v)ᵀ`, which adds one to `(l_i, l_j)` for single-label seeds.
fn seed_edge_counts(graph: &KPartiteGraph, seeds: &SeedSet, lo: usize, hi: usize) -> DenseMatrix {
    let k = seeds.k();
    let mut counts = DenseMatrix::zeros(k, k);
    for e in graph.pair_edges(lo, hi) {
        let (Some(a), Some(b)) = (seeds.get(VertexRef::new(lo, e.u)), seeds.get(VertexRef::new(hi, e.v))) else {
            continue;
        };
        counts.add_outer(a, b, 1.0);
    }
    counts
}

fn l1_normalized(mut m: DenseMatrix) -> DenseMatrix {
    let s = m.sum();
    if s > 0.0 {
        m.scale(1.0 / s);
    }
    m
}

fn zero_off_diagonal(m: &mut DenseMatrix) {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                m.set(i, j, 0.0);
            }
        }
    }
}

/// `B⁰`: identity plus seed–seed label co-occurrence counts, L1-normalized
/// over the whole matrix, with the mode's constraint applied.
pub fn init_propagation(graph: &KPartiteGraph, seeds: &SeedSet, mode: BMode) -> PropagationSet {
    let k = seeds.k();
    let types = graph.type_count();
    let eye = DenseMatrix::identity(k);
    match mode {
        BMode::Identity => {
            let mut m = eye;
            m.scale(1.0 / k as f64);
            PropagationSet::filled(types, k, &m)
        }
        BMode::SingleShared => {
            let mut pooled = eye;
            for (lo, hi) in type_pairs(types) {
                pooled.add_assign(&seed_edge_counts(graph, seeds, lo, hi));
            }
            PropagationSet::filled(types, k, &l1_normalized(pooled))
        }
        BMode::Full | BMode::Diagonal => {
            let mut set = PropagationSet::filled(types, k, &eye);
            for (lo, hi) in type_pairs(types) {
                let mut m = eye.clone();
                let mut counts = seed_edge_counts(graph, seeds, lo, hi);
                if mode == BMode::Diagonal {
                    zero_off_diagonal(&mut counts);
                }
                m.add_assign(&counts);
                set.set_pair(lo, hi, l1_normalized(m));
            }
            set
        }
    }
}

/// Enforces a mode's structural constraint on freshly updated matrices.
///
/// `Identity` resets every pair to `I/k`, `Diagonal` zeroes off-diagonal
/// entries, `SingleShared` replaces every pair by the elementwise mean, and
/// `Full` leaves the set untouched.
pub fn apply_b_mode(set: &mut PropagationSet, mode: BMode) {
    let k = set.k();
    match mode {
        BMode::Full => {}
        BMode::Identity => {
            let mut m = DenseMatrix::identity(k);
            m.scale(1.0 / k as f64);
            set.matrices_mut().iter_mut().for_each(|b| *b = m.clone());
        }
        BMode::Diagonal => set.matrices_mut().iter_mut().for_each(zero_off_diagonal),
        BMode::SingleShared => {
            let count = set.matrices().len();
            if count == 0 {
                return;
            }
            let mut mean = DenseMatrix::zeros(k, k);
            for b in set.matrices() {
                mean.add_assign(b);
            }
            mean.scale(1.0 / count as f64);
            set.matrices_mut().iter_mut().for_each(|b| *b = mean.clone());
        }
    }
}

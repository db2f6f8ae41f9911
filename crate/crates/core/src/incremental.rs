//! Lazy label updates after graph or label changes, and the
//! incremental-versus-recompute decision.
//!
//! Only rows in the candidate set are re-solved. The set starts as the
//! changed vertices and grows through neighbors whose edge effect
//! `Y(u)ᵀ B Y(v)` strays from its type pair's mean by at least
//! `sqrt(1/(1−θ))` standard deviations.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delta::{apply_delta, DeltaBatch, DeltaOutcome};
use crate::error::{Error, Result};
use crate::graph::{adamic_adar, induced_subgraph, pair_index, type_pairs, KPartiteGraph, VertexRef};
use crate::inference::rules::{self, RowScratch};
use crate::inference::{edge_effect, lipschitz_y, seed_lookup, update_propagation, InferenceConfig, UpdateRule};
use crate::io::{fmt_decimal, Snapshot};
use crate::linalg::DenseMatrix;
use crate::model::{proximity_rows, LabelMatrix, PropagationSet, SeedSet};

const GRAM_REFRESH_EVERY: usize = 64;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PairStats {
    pub mean: f64,
    pub std: f64,
    pub edges: usize,
}

/// Mean and population standard deviation of edge effects per type pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeStats {
    types: usize,
    pairs: Vec<Option<PairStats>>,
}

impl EdgeStats {
    pub fn get(&self, t: usize, t2: usize) -> Option<PairStats> {
        let (lo, hi) = if t < t2 { (t, t2) } else { (t2, t) };
        self.pairs[pair_index(self.types, lo, hi)]
    }
}

pub fn compute_edge_stats(graph: &KPartiteGraph, y: &LabelMatrix, b: &PropagationSet) -> EdgeStats {
    let types = graph.type_count();
    let pairs = type_pairs(types)
        .map(|(lo, hi)| {
            let edges = graph.pair_edges(lo, hi);
            if edges.is_empty() {
                return None;
            }
            let bm = b.pair(lo, hi);
            let values: Vec<f64> = edges
                .iter()
                .map(|e| edge_effect(bm, y.row(VertexRef::new(lo, e.u)), y.row(VertexRef::new(hi, e.v))))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
            Some(PairStats { mean, std: var.sqrt(), edges: values.len() })
        })
        .collect();
    EdgeStats { types, pairs }
}

/// `sqrt(1 / (1 − θ))`
pub fn chebyshev_threshold(theta: f64) -> f64 {
    (1.0 / (1.0 - theta)).sqrt()
}

/// Whether an edge effect deviates enough to pull its endpoint in. Pairs
/// without statistics never expand.
pub fn deviates(value: f64, stats: Option<PairStats>, theta: f64) -> bool {
    match stats {
        Some(s) => (value - s.mean).abs() >= chebyshev_threshold(theta) * s.std,
        None => false,
    }
}

/// Neighbors of `u` outside the candidate set whose edge effect deviates.
pub fn expand_candidates(
    graph: &KPartiteGraph,
    u: VertexRef,
    y: &LabelMatrix,
    b: &PropagationSet,
    stats: &EdgeStats,
    theta: f64,
    is_candidate: impl Fn(VertexRef) -> bool,
) -> Vec<VertexRef> {
    let yu = y.row(u);
    graph
        .neighbors(u)
        .iter()
        .filter(|n| !is_candidate(n.vertex))
        .filter(|n| {
            let value = edge_value(b, u, yu, n.vertex, y.row(n.vertex));
            deviates(value, stats.get(u.ty, n.vertex.ty), theta)
        })
        .map(|n| n.vertex)
        .collect()
}

/// `Y(u)ᵀ B(t(u), t(v)) Y(v)`, evaluated on the stored orientation.
fn edge_value(b: &PropagationSet, u: VertexRef, yu: &[f64], v: VertexRef, yv: &[f64]) -> f64 {
    if u.ty < v.ty {
        edge_effect(b.pair(u.ty, v.ty), yu, yv)
    } else {
        edge_effect(b.pair(v.ty, u.ty), yv, yu)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementalConfig {
    pub theta: f64,
    pub max_rounds: usize,
    /// Stop once no candidate row moves by more than this (max-abs entry).
    pub tol: f64,
    /// Run one `B` update pass before touching any rows.
    pub refresh_b: bool,
    /// Rule, `β`, `ε` and mode are taken from here.
    pub inference: InferenceConfig,
}

impl Default for IncrementalConfig {
    fn default() -> Self {
        Self { theta: 0.5, max_rounds: 100, tol: 1e-6, refresh_b: false, inference: InferenceConfig::default() }
    }
}

impl IncrementalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidConfig(format!("theta must lie in [0, 1), got {}", self.theta)));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        self.inference.validate()
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct RoundStats {
    pub updated: usize,
    /// Non-candidate neighbors tested for expansion.
    pub examined: usize,
    /// Of those, how many were admitted.
    pub admitted: usize,
    pub max_change: f64,
}

#[derive(Clone, Debug)]
pub struct IncrementalOutcome {
    pub labels: LabelMatrix,
    pub propagation: PropagationSet,
    /// Every vertex that entered the candidate set, in admission order.
    pub candidates: Vec<VertexRef>,
    pub rounds: Vec<RoundStats>,
    pub converged: bool,
}

impl IncrementalOutcome {
    pub fn touched(&self) -> usize {
        self.candidates.len()
    }
}

/// Common terms kept current under single-row changes. Each type's Gram
/// matrix is patched by rank-1 updates and rebuilt from scratch every
/// `GRAM_REFRESH_EVERY` changes to that type.
struct CommonTerms {
    grams: Vec<DenseMatrix>,
    terms: Vec<DenseMatrix>,
    dirty: Vec<bool>,
    since_refresh: Vec<usize>,
}

impl CommonTerms {
    fn new(y: &LabelMatrix, b: &PropagationSet) -> Self {
        let grams: Vec<DenseMatrix> = (0..y.type_count()).map(|t| y.gram(t)).collect();
        let terms = (0..y.type_count()).map(|t| rules::common_term_from_grams(t, &grams, b)).collect();
        Self { dirty: vec![false; grams.len()], since_refresh: vec![0; grams.len()], grams, terms }
    }

    fn term(&mut self, t: usize, b: &PropagationSet) -> &DenseMatrix {
        if self.dirty[t] {
            self.terms[t] = rules::common_term_from_grams(t, &self.grams, b);
            self.dirty[t] = false;
        }
        &self.terms[t]
    }

    fn row_changed(&mut self, t: usize, old: &[f64], new: &[f64], y: &LabelMatrix) {
        self.since_refresh[t] += 1;
        if self.since_refresh[t] >= GRAM_REFRESH_EVERY {
            self.grams[t] = y.gram(t);
            self.since_refresh[t] = 0;
        } else {
            self.grams[t].add_outer(old, old, -1.0);
            self.grams[t].add_outer(new, new, 1.0);
        }
        for (s, d) in self.dirty.iter_mut().enumerate() {
            if s != t {
                *d = true;
            }
        }
    }
}

/// Algorithm core: re-solves candidate rows in FIFO order until no row
/// moves by more than `tol`. `y` must already be aligned with `graph`.
/// Rows that never become candidates are returned untouched.
pub fn run_incremental(
    graph: &KPartiteGraph,
    mut y: LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    changed: &BTreeSet<VertexRef>,
    config: &IncrementalConfig,
) -> Result<IncrementalOutcome> {
    config.validate()?;
    y.check_shape(graph)?;
    if b.type_count() != graph.type_count() || b.k() != y.k() {
        return Err(Error::ShapeMismatch("propagation set does not match the labels".into()));
    }
    let mut b = b.clone();
    if changed.is_empty() {
        return Ok(IncrementalOutcome {
            labels: y,
            propagation: b,
            candidates: Vec::new(),
            rounds: Vec::new(),
            converged: true,
        });
    }
    if let Some(u) = changed.iter().find(|u| !graph.contains(**u)) {
        return Err(Error::ShapeMismatch(format!("changed vertex {}:{} is not in the graph", u.ty, u.index)));
    }
    let inf = &config.inference;
    if config.refresh_b {
        let grams: Vec<DenseMatrix> = (0..y.type_count()).map(|t| y.gram(t)).collect();
        update_propagation(graph, &y, &mut b, &grams, inf.rule, inf.b_mode, inf.epsilon);
    }

    let lookup = seed_lookup(graph, seeds);
    let stats = compute_edge_stats(graph, &y, &b);
    let k = y.k();
    let mut in_cand = vec![false; graph.n()];
    let mut cand: Vec<VertexRef> = Vec::new();
    for &u in changed {
        in_cand[graph.global(u)] = true;
        cand.push(u);
    }
    let mut terms = CommonTerms::new(&y, &b);
    let mut scratch = RowScratch::new(k);
    let mut next = vec![0.0; k];
    let mut old = vec![0.0; k];
    let mut rounds = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_rounds {
        let mut round = RoundStats::default();
        let mut queue: VecDeque<VertexRef> = cand.iter().copied().collect();
        while let Some(u) = queue.pop_front() {
            let seed = lookup[graph.global(u)];
            let a_t = terms.term(u.ty, &b);
            match inf.rule {
                UpdateRule::Multiplicative => rules::multiplicative_row_into(
                    graph,
                    &y,
                    &b,
                    a_t,
                    u,
                    seed,
                    inf.beta,
                    inf.epsilon,
                    &mut scratch,
                    &mut next,
                ),
                UpdateRule::Additive => {
                    let eta = 1.0 / lipschitz_y(a_t, inf.beta, seed.is_some(), inf.epsilon);
                    rules::additive_row_into(
                        graph,
                        &y,
                        &b,
                        a_t,
                        u,
                        seed,
                        inf.beta,
                        inf.epsilon,
                        eta,
                        &mut scratch,
                        &mut next,
                    )
                }
            }
            old.copy_from_slice(y.row(u));
            let change = old.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            round.max_change = round.max_change.max(change);
            round.updated += 1;
            if change > 0.0 {
                y.row_mut(u).copy_from_slice(&next);
                terms.row_changed(u.ty, &old, &next, &y);
            }

            let yu = y.row(u);
            for n in graph.neighbors(u) {
                let g = graph.global(n.vertex);
                if in_cand[g] {
                    continue;
                }
                round.examined += 1;
                let value = edge_value(&b, u, yu, n.vertex, y.row(n.vertex));
                if deviates(value, stats.get(u.ty, n.vertex.ty), config.theta) {
                    round.admitted += 1;
                    in_cand[g] = true;
                    cand.push(n.vertex);
                    queue.push_back(n.vertex);
                }
            }
        }
        log::debug!(
            "incremental round {}: {} rows, {} admitted of {} examined, max change {:.3e}",
            rounds.len() + 1,
            round.updated,
            round.admitted,
            round.examined,
            round.max_change
        );
        rounds.push(round);
        if round.max_change < config.tol {
            converged = true;
            break;
        }
    }
    Ok(IncrementalOutcome { labels: y, propagation: b, candidates: cand, rounds, converged })
}

/// Carries labels across a delta. Surviving rows keep their values; added
/// vertices take their seed row if they have one, otherwise a
/// proximity-based row.
pub fn align_labels(old: &LabelMatrix, outcome: &DeltaOutcome, seeds: &SeedSet) -> LabelMatrix {
    let graph = &outcome.graph;
    let mut y = LabelMatrix::for_graph(graph, old.k());
    let mut fresh = Vec::new();
    for u in graph.vertices() {
        match outcome.old_of(u) {
            Some(o) => y.row_mut(u).copy_from_slice(old.row(o)),
            None => match seeds.get(u) {
                Some(row) => y.row_mut(u).copy_from_slice(row),
                None => fresh.push(u),
            },
        }
    }
    for (u, row) in fresh.iter().zip(proximity_rows(graph, seeds, &fresh)) {
        y.row_mut(*u).copy_from_slice(&row);
    }
    y
}

/// Result of applying a delta to a snapshot incrementally.
#[derive(Clone, Debug)]
pub struct SnapshotUpdate {
    pub delta: DeltaOutcome,
    pub seeds: SeedSet,
    pub incremental: IncrementalOutcome,
}

impl SnapshotUpdate {
    pub fn snapshot(&self, template: &Snapshot) -> Snapshot {
        Snapshot {
            labels: self.incremental.labels.clone(),
            propagation: self.incremental.propagation.clone(),
            seeds: self.seeds.clone(),
            ..template.clone()
        }
    }
}

/// Applies `delta` to `graph` and re-solves the affected rows of `snapshot`.
pub fn update_snapshot(
    graph: &KPartiteGraph,
    snapshot: &Snapshot,
    delta: &DeltaBatch,
    config: &IncrementalConfig,
) -> Result<SnapshotUpdate> {
    snapshot.labels.check_shape(graph)?;
    let outcome = apply_delta(graph, delta)?;
    let seeds = snapshot.seeds.after_delta(&outcome)?;
    let y = align_labels(&snapshot.labels, &outcome, &seeds);
    let incremental = crate::inference::with_workers(config.inference.workers, || {
        run_incremental(&outcome.graph, y, &snapshot.propagation, &seeds, &outcome.changed, config)
    })??;
    Ok(SnapshotUpdate { delta: outcome, seeds, incremental })
}

/// `|G ∪ ΔG| / ((2 − θ)|ΔG|)` with sizes counted as vertices plus edges.
/// An empty change set yields `+∞`.
pub fn compute_gain(graph: &KPartiteGraph, changed: &BTreeSet<VertexRef>, theta: f64) -> f64 {
    if changed.is_empty() {
        return f64::INFINITY;
    }
    let whole = (graph.n() + graph.m()) as f64;
    let part = induced_subgraph(graph, changed).total() as f64;
    whole / ((2.0 - theta) * part)
}

pub const LOSS_SAMPLE_PAIRS: usize = 10_000;
pub const LOSS_SAMPLE_SEED: u64 = 0x6b70_726f_7000;

/// Pairs `(a, b)` with `a` from `left` and `b` from `right`, `a ≠ b`: all of
/// them when there are at most `cap`, otherwise `cap` uniform draws.
pub fn sample_pairs(left: &[VertexRef], right: &[VertexRef], cap: usize, seed: u64) -> Vec<(VertexRef, VertexRef)> {
    let total = left.len() * right.len();
    if total == 0 {
        return Vec::new();
    }
    if total <= cap {
        return left.iter().flat_map(|&a| right.iter().map(move |&b| (a, b))).filter(|(a, b)| a != b).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cap);
    let mut attempts = 0;
    while out.len() < cap && attempts < 4 * cap {
        attempts += 1;
        let a = left[rng.gen_range(0..left.len())];
        let b = right[rng.gen_range(0..right.len())];
        if a != b {
            out.push((a, b));
        }
    }
    out
}

/// `|avg sim on one graph − avg sim on another|` over the same pairs, with
/// raw scores from both graphs min-max normalized as one batch. `None` for
/// a pair side means the pair is absent from that graph (score 0).
fn similarity_drift(
    pairs: &[(VertexRef, VertexRef)],
    first: &KPartiteGraph,
    second: &KPartiteGraph,
    map_second: impl Fn(VertexRef) -> Option<VertexRef>,
) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let a: Vec<f64> = pairs.iter().map(|&(u, v)| adamic_adar(first, u, v)).collect();
    let b: Vec<f64> = pairs
        .iter()
        .map(|&(u, v)| match (map_second(u), map_second(v)) {
            (Some(x), Some(y)) => adamic_adar(second, x, y),
            _ => 0.0,
        })
        .collect();
    let (lo, hi) = a.iter().chain(&b).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let range = hi - lo;
    if range <= 0.0 {
        return 0.0;
    }
    let mean = |v: &[f64]| v.iter().map(|s| (s - lo) / range).sum::<f64>() / v.len() as f64;
    (mean(&a) - mean(&b)).abs()
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct LossEstimate {
    pub loss_new: f64,
    pub loss_fixed: f64,
}

impl LossEstimate {
    pub fn total(&self) -> f64 {
        self.loss_new + self.loss_fixed
    }
}

/// Estimates the information loss of updating only `v_plus`.
///
/// `v_plus` holds new-graph vertices that the incremental run re-solves;
/// the other unlabeled vertices form `V⁻`. The first term compares
/// `V⁻ × V⁺` similarities on the new graph against those on `ΔG` (the
/// edges touching a changed vertex); the second compares `V^L × V⁻` on the
/// new graph against the old graph.
pub fn estimate_loss(
    old_graph: &KPartiteGraph,
    delta: &DeltaOutcome,
    seeds: &SeedSet,
    v_plus: &BTreeSet<VertexRef>,
    cap: usize,
    seed: u64,
) -> LossEstimate {
    let g = &delta.graph;
    let plus: Vec<VertexRef> = v_plus.iter().copied().filter(|u| !seeds.contains(*u) && g.contains(*u)).collect();
    let minus: Vec<VertexRef> = g.vertices().filter(|u| !seeds.contains(*u) && !v_plus.contains(u)).collect();
    let labeled: Vec<VertexRef> = seeds.vertices().filter(|u| g.contains(*u)).collect();

    let changed = &delta.changed;
    let dg = g.edge_subgraph(|a, b| changed.contains(&a) || changed.contains(&b));
    let pairs = sample_pairs(&minus, &plus, cap, seed);
    let loss_new = similarity_drift(&pairs, g, &dg, Some);

    let pairs = sample_pairs(&labeled, &minus, cap, seed.wrapping_add(1));
    let loss_fixed = similarity_drift(&pairs, g, old_graph, |u| delta.old_of(u));
    LossEstimate { loss_new, loss_fixed }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Recommendation {
    Incremental,
    Recompute,
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recommendation::Incremental => "INCREMENTAL",
            Recommendation::Recompute => "RECOMPUTE",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct UtilityParams {
    pub u_s: f64,
    pub u_a: f64,
    pub threshold: f64,
}

impl Default for UtilityParams {
    fn default() -> Self {
        Self { u_s: 60.0, u_a: 100.0, threshold: 200.0 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct UtilityReport {
    pub gain: f64,
    pub loss_new: f64,
    pub loss_fixed: f64,
    pub utility: f64,
    pub recommendation: Recommendation,
}

impl UtilityReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "GAIN {}", fmt_decimal(self.gain)).unwrap();
        writeln!(s, "LOSS_NEW {}", fmt_decimal(self.loss_new)).unwrap();
        writeln!(s, "LOSS_FIXED {}", fmt_decimal(self.loss_fixed)).unwrap();
        writeln!(s, "UTILITY {}", fmt_decimal(self.utility)).unwrap();
        writeln!(s, "RECOMMEND {}", self.recommendation).unwrap();
        s
    }
}

/// `U = u_s·gain − u_a·(loss_new + loss_fixed)`; incremental iff `U`
/// exceeds the threshold. An infinite gain always recommends incremental.
pub fn utility(gain: f64, loss: LossEstimate, params: &UtilityParams) -> Result<UtilityReport> {
    if !(params.u_s >= 0.0 && params.u_a >= 0.0) {
        return Err(Error::InvalidConfig("utility weights must be nonnegative".into()));
    }
    let utility = if gain.is_infinite() && params.u_s == 0.0 {
        -params.u_a * loss.total()
    } else {
        params.u_s * gain - params.u_a * loss.total()
    };
    let recommendation = if gain.is_infinite() || utility > params.threshold {
        Recommendation::Incremental
    } else {
        Recommendation::Recompute
    };
    Ok(UtilityReport { gain, loss_new: loss.loss_new, loss_fixed: loss.loss_fixed, utility, recommendation })
}

/// Full decision for a delta against a snapshot: runs the incremental
/// update to find `V⁺`, then scores gain and loss.
pub fn decide(
    graph: &KPartiteGraph,
    snapshot: &Snapshot,
    delta: &DeltaBatch,
    config: &IncrementalConfig,
    params: &UtilityParams,
) -> Result<(UtilityReport, SnapshotUpdate)> {
    let update = update_snapshot(graph, snapshot, delta, config)?;
    let changed = &update.delta.changed;
    let gain = compute_gain(&update.delta.graph, changed, config.theta);
    let loss = if changed.is_empty() {
        LossEstimate { loss_new: 0.0, loss_fixed: 0.0 }
    } else {
        let v_plus: BTreeSet<VertexRef> = update.incremental.candidates.iter().copied().collect();
        estimate_loss(graph, &update.delta, &update.seeds, &v_plus, LOSS_SAMPLE_PAIRS, LOSS_SAMPLE_SEED)
    };
    Ok((utility(gain, loss, params)?, update))
}

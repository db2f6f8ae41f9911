//! Alternating `B` / `Y` updates until the objective settles.
//!
//! Each iteration first updates every propagation matrix from the current
//! labels, then sweeps the types in ascending order. A sweep recomputes the
//! type's common term and updates all of its rows from the pre-sweep block,
//! so rows within a type are independent and run in parallel.

pub mod objective;
pub mod oracle;
pub mod regularize;
pub mod rules;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{type_pairs, KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;
use crate::model::{apply_b_mode, init_labels, init_propagation, BMode, LabelMatrix, PropagationSet, SeedSet};

pub use objective::{compute_objective, edge_effect, objective_parts, vertex_subobjective, ObjectiveParts};
pub use oracle::{dense_objective, matrix_form_update_y};
pub use regularize::{regularize_proximal, AuxGraph};
pub use rules::{
    compute_common_term, descent_direction, lipschitz_b, lipschitz_y, neighbor_signal, update_b_additive,
    update_b_multiplicative, update_vertex_additive, update_vertex_multiplicative,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default)]
pub enum UpdateRule {
    #[default]
    Multiplicative,
    Additive,
}

impl fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateRule::Multiplicative => "mult",
            UpdateRule::Additive => "add",
        })
    }
}

impl FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mult" | "multiplicative" => Ok(UpdateRule::Multiplicative),
            "add" | "additive" => Ok(UpdateRule::Additive),
            other => Err(Error::InvalidConfig(format!("unknown update rule '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferenceConfig {
    pub rule: UpdateRule,
    pub beta: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub b_mode: BMode,
    pub deterministic_order: bool,
    /// Worker threads for row sweeps; 0 uses the global rayon pool.
    pub workers: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            rule: UpdateRule::Multiplicative,
            beta: 5.0,
            lambda: 0.0,
            epsilon: 1e-9,
            tol: 1e-6,
            max_iter: 100,
            b_mode: BMode::Full,
            deterministic_order: true,
            workers: 0,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::InvalidConfig(format!("{what} out of range: {v}"));
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(bad("beta", self.beta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", self.lambda));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(bad("epsilon", self.epsilon));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(bad("tol", self.tol));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Runs `f` inside a pool of `workers` threads, or on the global pool for 0.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub millis: f64,
}

/// Objective per iteration. Record 0 is the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub reason: StopReason,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// Mean wall time of the iterations actually run.
    pub fn mean_iteration_millis(&self) -> f64 {
        let run: Vec<f64> = self.records.iter().skip(1).map(|r| r.millis).collect();
        if run.is_empty() {
            0.0
        } else {
            run.iter().sum::<f64>() / run.len() as f64
        }
    }
}

#[derive(Clone, Debug)]
pub struct InferenceOutcome {
    pub labels: LabelMatrix,
    pub propagation: PropagationSet,
    pub trace: IterationTrace,
}

/// Seed rows indexed by global vertex position.
pub(crate) fn seed_lookup<'a>(graph: &KPartiteGraph, seeds: &'a SeedSet) -> Vec<Option<&'a [f64]>> {
    let mut out = vec![None; graph.n()];
    for (u, row) in seeds.iter() {
        if graph.contains(u) {
            out[graph.global(u)] = Some(row);
        }
    }
    out
}

/// Updates every propagation matrix from the current labels, then enforces
/// the mode constraint. `Identity` mode leaves the set frozen.
pub fn update_propagation(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &mut PropagationSet,
    grams: &[DenseMatrix],
    rule: UpdateRule,
    mode: BMode,
    epsilon: f64,
) {
    if mode == BMode::Identity {
        return;
    }
    for (lo, hi) in type_pairs(graph.type_count()) {
        let cross = rules::edge_cross_term(graph, y, lo, hi);
        let cur = b.pair(lo, hi);
        let next = match rule {
            UpdateRule::Multiplicative => {
                Some(rules::b_multiplicative_step(cur, &cross, &grams[lo], &grams[hi], epsilon))
            }
            UpdateRule::Additive => rules::b_additive_step(cur, &cross, &grams[lo], &grams[hi], epsilon, None),
        };
        if let Some(m) = next {
            b.set_pair(lo, hi, m);
        }
    }
    apply_b_mode(b, mode);
}

/// One Jacobi sweep over the rows of type `t`. `a_t` must be current.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep_type(
    graph: &KPartiteGraph,
    y: &mut LabelMatrix,
    b: &PropagationSet,
    a_t: &DenseMatrix,
    seeds: &[Option<&[f64]>],
    t: usize,
    config: &InferenceConfig,
) {
    let k = y.k();
    let offset = y.offsets()[t];
    let mut next = vec![0.0; y.block(t).len()];
    let (eta_plain, eta_seed) = (
        1.0 / lipschitz_y(a_t, config.beta, false, config.epsilon),
        1.0 / lipschitz_y(a_t, config.beta, true, config.epsilon),
    );
    {
        let snapshot: &LabelMatrix = y;
        next.par_chunks_mut(k).enumerate().for_each_init(
            || rules::RowScratch::new(k),
            |scratch, (i, out)| {
                let u = VertexRef::new(t, i);
                let seed = seeds[offset + i];
                match config.rule {
                    UpdateRule::Multiplicative => rules::multiplicative_row_into(
                        graph,
                        snapshot,
                        b,
                        a_t,
                        u,
                        seed,
                        config.beta,
                        config.epsilon,
                        scratch,
                        out,
                    ),
                    UpdateRule::Additive => {
                        let eta = if seed.is_some() { eta_seed } else { eta_plain };
                        rules::additive_row_into(
                            graph,
                            snapshot,
                            b,
                            a_t,
                            u,
                            seed,
                            config.beta,
                            config.epsilon,
                            eta,
                            scratch,
                            out,
                        )
                    }
                }
            },
        );
    }
    y.block_mut(t).copy_from_slice(&next);
}

fn refresh_grams(y: &LabelMatrix, grams: &mut [DenseMatrix]) {
    for (t, g) in grams.iter_mut().enumerate() {
        *g = y.gram(t);
    }
}

fn evaluate(
    graph: &KPartiteGraph,
    y: &LabelMatrix,
    b: &PropagationSet,
    seeds: &SeedSet,
    grams: &[DenseMatrix],
    config: &InferenceConfig,
    iteration: usize,
) -> Result<f64> {
    let value =
        objective::objective_parts_with_grams(graph, y, b, seeds, config.beta, grams, config.deterministic_order)
            .total();
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective { iteration, value });
    }
    Ok(value)
}

/// Full run: initializes `Y` and `B` from the seeds, then iterates.
pub fn run_inference(
    graph: &KPartiteGraph,
    seeds: &SeedSet,
    config: &InferenceConfig,
    aux: &[Option<AuxGraph>],
) -> Result<InferenceOutcome> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seed set"));
    }
    if seeds.k() < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 classes, got {}", seeds.k())));
    }
    let y = init_labels(graph, seeds);
    let b = init_propagation(graph, seeds, config.b_mode);
    run_inference_from(graph, seeds, y, b, config, aux)
}

/// Iterates from a given state (warm start).
pub fn run_inference_from(
    graph: &KPartiteGraph,
    seeds: &SeedSet,
    y: LabelMatrix,
    b: PropagationSet,
    config: &InferenceConfig,
    aux: &[Option<AuxGraph>],
) -> Result<InferenceOutcome> {
    config.validate()?;
    y.check_shape(graph)?;
    if b.type_count() != graph.type_count() || b.k() != y.k() {
        return Err(Error::ShapeMismatch(format!(
            "propagation set is {} types × k={}, labels are {} types × k={}",
            b.type_count(),
            b.k(),
            graph.type_count(),
            y.k()
        )));
    }
    if seeds.k() != y.k() {
        return Err(Error::ShapeMismatch(format!("seeds have k={}, labels k={}", seeds.k(), y.k())));
    }
    with_workers(config.workers, || iterate(graph, seeds, y, b, config, aux))?
}

fn iterate(
    graph: &KPartiteGraph,
    seeds: &SeedSet,
    mut y: LabelMatrix,
    mut b: PropagationSet,
    config: &InferenceConfig,
    aux: &[Option<AuxGraph>],
) -> Result<InferenceOutcome> {
    let lookup = seed_lookup(graph, seeds);
    let types = graph.type_count();
    let mut grams: Vec<DenseMatrix> = (0..types).map(|t| y.gram(t)).collect();

    let obj0 = evaluate(graph, &y, &b, seeds, &grams, config, 0)?;
    let mut records = vec![IterationRecord { iteration: 0, objective: obj0, millis: 0.0 }];
    let scale = obj0.max(config.epsilon);
    let mut prev = obj0;
    let mut reason = StopReason::MaxIterations;
    let mut iterations = 0;

    for r in 1..=config.max_iter {
        let start = Instant::now();
        update_propagation(graph, &y, &mut b, &grams, config.rule, config.b_mode, config.epsilon);
        for t in 0..types {
            let a_t = rules::common_term_from_grams(t, &grams, &b);
            sweep_type(graph, &mut y, &b, &a_t, &lookup, t, config);
            grams[t] = y.gram(t);
        }
        if config.lambda > 0.0 && aux.iter().any(Option::is_some) {
            y = regularize_proximal(&y, aux, config.lambda)?;
            refresh_grams(&y, &mut grams);
        }
        let obj = evaluate(graph, &y, &b, seeds, &grams, config, r)?;
        let millis = start.elapsed().as_secs_f64() * 1e3;
        records.push(IterationRecord { iteration: r, objective: obj, millis });
        iterations = r;
        let rel = (obj - prev).abs() / scale;
        log::debug!("iteration {r}: objective {obj:.6e} (relative change {rel:.3e})");
        prev = obj;
        if rel < config.tol {
            reason = StopReason::Converged;
            break;
        }
    }
    Ok(InferenceOutcome { labels: y, propagation: b, trace: IterationTrace { records, iterations, reason } })
}

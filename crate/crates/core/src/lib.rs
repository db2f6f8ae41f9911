//! Semi-supervised label inference on K-partite graphs.
//!
//! Every vertex type gets a block of label scores `Y_t`, and every pair of
//! types a learned `k × k` propagation matrix `B` that can encode homophily,
//! heterophily or anything in between. Labels are inferred from a few seed
//! vertices by alternating `B` and `Y` updates (multiplicative or projected
//! gradient), and later graph or label changes can be absorbed
//! incrementally.
//!
//! ```
//! use kprop::{generate_planted, run_inference, select_seeds, InferenceConfig, PlantedSpec};
//!
//! let planted = generate_planted(&PlantedSpec::new(vec![60, 60, 60], 3, 5.0, 7)).unwrap();
//! let (seeds, _) = select_seeds(&planted.graph, &planted.truth, 0.1).unwrap();
//! let out = run_inference(&planted.graph, &seeds, &InferenceConfig::default(), &[]).unwrap();
//! assert!(out.trace.iterations >= 1);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delta;
pub mod error;
pub mod eval;
pub mod graph;
pub mod incremental;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod planted;

pub use delta::{apply_delta, DeltaBatch, DeltaOp, DeltaOutcome};
pub use error::{Error, Result};
pub use eval::{accuracy, assign_labels, ber, contingency, evaluate, ContingencyMatrix, EvalReport};
pub use graph::{
    adamic_adar, induced_subgraph, normalize_scores, GraphBuilder, KPartiteGraph, SubgraphSize, VertexRef,
};
pub use incremental::{
    align_labels, compute_edge_stats, compute_gain, decide, estimate_loss, expand_candidates, run_incremental,
    update_snapshot, utility, EdgeStats, IncrementalConfig, IncrementalOutcome, LossEstimate, Recommendation,
    RoundStats, SnapshotUpdate, UtilityParams, UtilityReport, LOSS_SAMPLE_PAIRS, LOSS_SAMPLE_SEED,
};
pub use inference::{
    compute_common_term, compute_objective, run_inference, run_inference_from, AuxGraph, InferenceConfig,
    InferenceOutcome, IterationTrace, StopReason, UpdateRule,
};
pub use io::Snapshot;
pub use linalg::DenseMatrix;
pub use model::{
    apply_b_mode, init_labels, init_propagation, select_seeds, BMode, LabelMatrix, LabelTable, PropagationSet, SeedSet,
};
pub use planted::{generate_planted, Planted, PlantedSpec};

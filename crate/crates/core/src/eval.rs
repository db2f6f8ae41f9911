//! Label decisions, contingency counts, accuracy and balanced error rate.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{KPartiteGraph, VertexRef};
use crate::model::{LabelMatrix, LabelTable, SeedSet};

/// Labels whose normalized score strictly exceeds `1/k`. A zero row is
/// treated as uniform; if nothing qualifies the lowest-index argmax is used.
pub fn assign_labels(row: &[f64], k: usize) -> Vec<usize> {
    let total: f64 = row.iter().sum();
    let norm: Vec<f64> =
        if total > 0.0 { row.iter().map(|v| v / total).collect() } else { vec![1.0 / k as f64; row.len()] };
    let cut = 1.0 / k as f64;
    let picked: Vec<usize> = (0..norm.len()).filter(|&i| norm[i] > cut).collect();
    if !picked.is_empty() {
        return picked;
    }
    let mut best = 0;
    for i in 1..norm.len() {
        if norm[i] > norm[best] {
            best = i;
        }
    }
    vec![best]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ContingencyMatrix {
    pub fn new(k: usize) -> Self {
        Self { k, counts: vec![0; k * k] }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let k = rows.len();
        let mut m = Self::new(k);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), k, "contingency matrix must be square");
            m.counts[i * k..(i + 1) * k].copy_from_slice(r);
        }
        m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.k + pred]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.k..(truth + 1) * self.k]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts every (true, predicted) combination once.
    pub fn record(&mut self, truth: &[usize], pred: &[usize]) {
        for &i in truth {
            for &j in pred {
                self.counts[i * self.k + j] += 1;
            }
        }
    }
}

pub fn contingency(pred: &[Vec<usize>], truth: &[Vec<usize>], k: usize) -> Result<ContingencyMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions for {} ground-truth vertices",
            pred.len(),
            truth.len()
        )));
    }
    let mut m = ContingencyMatrix::new(k);
    for (p, t) in pred.iter().zip(truth) {
        if let Some(&bad) = p.iter().chain(t).find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label: bad, classes: k });
        }
        m.record(t, p);
    }
    Ok(m)
}

pub fn accuracy(a: &ContingencyMatrix) -> Result<f64> {
    let total = a.total();
    if total == 0 {
        return Err(Error::EmptyInput("contingency matrix"));
    }
    let diag: u64 = (0..a.k()).map(|i| a.get(i, i)).sum();
    Ok(diag as f64 / total as f64)
}

/// `1 − mean recall` over classes with ground-truth support.
pub fn ber(a: &ContingencyMatrix) -> Result<f64> {
    let mut recall = 0.0;
    let mut rows = 0;
    for i in 0..a.k() {
        let support: u64 = a.row(i).iter().sum();
        if support == 0 {
            continue;
        }
        recall += a.get(i, i) as f64 / support as f64;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyInput("contingency matrix"));
    }
    if rows < a.k() {
        log::warn!("{} classes have no ground-truth support and are left out of BER", a.k() - rows);
    }
    Ok(1.0 - recall / rows as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub ber: f64,
    pub contingency: ContingencyMatrix,
    pub evaluated: usize,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "ACC {:.16e}", self.accuracy).unwrap();
        writeln!(s, "BER {:.16e}", self.ber).unwrap();
        for i in 0..self.contingency.k() {
            let row: Vec<String> = self.contingency.row(i).iter().map(u64::to_string).collect();
            writeln!(s, "{}", row.join("\t")).unwrap();
        }
        s
    }
}

/// Scores `labels` against `truth` on every vertex with ground truth,
/// skipping seeds unless `include_seeds` is set.
pub fn evaluate(
    graph: &KPartiteGraph,
    labels: &LabelMatrix,
    truth: &LabelTable,
    seeds: &SeedSet,
    include_seeds: bool,
) -> Result<EvalReport> {
    labels.check_shape(graph)?;
    let k = labels.k();
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    for (u, _) in truth.iter() {
        if !graph.contains(u) || (!include_seeds && seeds.contains(u)) {
            continue;
        }
        pred.push(assign_labels(labels.row(u), k));
        gold.push(truth_labels(truth, u, k));
    }
    if gold.is_empty() {
        return Err(Error::EmptyInput("evaluation vertex set"));
    }
    let contingency = contingency(&pred, &gold, k)?;
    Ok(EvalReport { accuracy: accuracy(&contingency)?, ber: ber(&contingency)?, evaluated: gold.len(), contingency })
}

fn truth_labels(truth: &LabelTable, u: VertexRef, k: usize) -> Vec<usize> {
    assign_labels(truth.get(u).expect("truth row"), k)
}

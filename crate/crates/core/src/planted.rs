//! Synthetic K-partite graphs with planted labels and propagation matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{pair_index, type_pairs, GraphBuilder, KPartiteGraph, VertexRef};
use crate::linalg::DenseMatrix;
use crate::model::LabelTable;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedSpec {
    pub sizes: Vec<usize>,
    pub k: usize,
    /// One matrix per unordered type pair in pair order, each summing to 1.
    pub b_star: Vec<DenseMatrix>,
    /// Expected edges per vertex over the whole graph.
    pub epv: f64,
    /// Label distribution per type.
    pub label_dist: Vec<Vec<f64>>,
    pub seed: u64,
}

fn l1(mut m: DenseMatrix) -> Result<DenseMatrix> {
    if m.as_slice().iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidConfig("planted matrices must be finite and nonnegative".into()));
    }
    let s = m.sum();
    if s <= 0.0 {
        return Err(Error::InvalidConfig("planted matrix has no mass".into()));
    }
    m.scale(1.0 / s);
    Ok(m)
}

impl PlantedSpec {
    /// Homophilic default: every pair `I/k`, uniform labels.
    pub fn new(sizes: Vec<usize>, k: usize, epv: f64, seed: u64) -> Self {
        let types = sizes.len();
        let mut eye = DenseMatrix::identity(k);
        eye.scale(1.0 / k as f64);
        Self {
            b_star: vec![eye; types * types.saturating_sub(1) / 2],
            label_dist: vec![vec![1.0 / k as f64; k]; types],
            sizes,
            k,
            epv,
            seed,
        }
    }

    pub fn type_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn set_pair(&mut self, lo: usize, hi: usize, m: DenseMatrix) -> Result<()> {
        if (m.rows(), m.cols()) != (self.k, self.k) {
            return Err(Error::ShapeMismatch(format!("planted matrix must be {0}×{0}", self.k)));
        }
        let i = pair_index(self.type_count(), lo, hi);
        self.b_star[i] = l1(m)?;
        Ok(())
    }

    pub fn pair(&self, lo: usize, hi: usize) -> &DenseMatrix {
        &self.b_star[pair_index(self.type_count(), lo, hi)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 {
            return Err(Error::InvalidConfig("need at least two vertex types".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig("need at least two classes".into()));
        }
        if !(self.epv > 0.0 && self.epv.is_finite()) {
            return Err(Error::InvalidConfig(format!("epv must be positive, got {}", self.epv)));
        }
        if self.label_dist.len() != self.sizes.len() || self.label_dist.iter().any(|d| d.len() != self.k) {
            return Err(Error::ShapeMismatch("label distribution shape".into()));
        }
        for d in &self.label_dist {
            if d.iter().any(|p| !(*p >= 0.0)) || d.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidConfig("label distribution must be nonnegative with mass".into()));
            }
        }
        Ok(())
    }

    /// Parses the flat `key=value` format: `K`, `n`, `k`, `epv`, `seed`,
    /// `B.t.t'` (row-major) and `P.t` (label distribution). Unlisted pairs
    /// default to `I/k`, unlisted distributions to uniform.
    pub fn parse(text: &str) -> Result<Self> {
        let mut types = None;
        let mut sizes: Option<Vec<usize>> = None;
        let mut k = None;
        let mut epv = 6.0;
        let mut seed = 0u64;
        let mut pairs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        let mut dists: Vec<(usize, Vec<f64>)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |e: Error| e.at_line("spec", no + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Malformed(format!("expected key=value, got '{line}'"))))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |s: &str| -> Result<f64> {
                s.trim().parse::<f64>().map_err(|_| Error::Malformed(format!("bad number '{s}'")))
            };
            let int = |s: &str| -> Result<usize> {
                s.trim().parse::<usize>().map_err(|_| Error::Malformed(format!("bad integer '{s}'")))
            };
            let list = |s: &str| -> Result<Vec<f64>> { s.split(',').map(num).collect() };
            match key {
                "K" => types = Some(int(value).map_err(at)?),
                "n" => sizes = Some(value.split(',').map(int).collect::<Result<_>>().map_err(at)?),
                "k" => k = Some(int(value).map_err(at)?),
                "epv" => epv = num(value).map_err(at)?,
                "seed" => seed = value.parse().map_err(|_| at(Error::Malformed(format!("bad seed '{value}'"))))?,
                _ if key.starts_with("B.") => {
                    let parts: Vec<&str> = key.split('.').collect();
                    if parts.len() != 3 {
                        return Err(at(Error::Malformed(format!("bad key '{key}'"))));
                    }
                    let (a, b) = (int(parts[1]).map_err(at)?, int(parts[2]).map_err(at)?);
                    pairs.push((a, b, list(value).map_err(at)?));
                }
                _ if key.starts_with("P.") => {
                    let t = int(&key[2..]).map_err(at)?;
                    dists.push((t, list(value).map_err(at)?));
                }
                _ => return Err(at(Error::Malformed(format!("unknown key '{key}'")))),
            }
        }
        let sizes = sizes.ok_or_else(|| Error::InvalidConfig("spec is missing n".into()))?;
        let k = k.ok_or_else(|| Error::InvalidConfig("spec is missing k".into()))?;
        if let Some(t) = types {
            if t != sizes.len() {
                return Err(Error::InvalidConfig(format!("K={t} but {} sizes given", sizes.len())));
            }
        }
        let mut spec = Self::new(sizes, k, epv, seed);
        let count = spec.type_count();
        for (a, b, vals) in pairs {
            if a == b || a.max(b) >= count {
                return Err(Error::InvalidConfig(format!("bad type pair {a}.{b}")));
            }
            if vals.len() != k * k {
                return Err(Error::ShapeMismatch(format!("B.{a}.{b} needs {} values", k * k)));
            }
            let m = DenseMatrix::from_vec(k, k, vals);
            // B.t.t' with t > t' gives the transposed orientation
            if a < b {
                spec.set_pair(a, b, m)?;
            } else {
                spec.set_pair(b, a, m.transpose())?;
            }
        }
        for (t, d) in dists {
            if t >= count || d.len() != k {
                return Err(Error::InvalidConfig(format!("bad label distribution P.{t}")));
            }
            spec.label_dist[t] = d;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut s = format!(
            "K={}\nn={}\nk={}\nepv={}\nseed={}\n",
            self.type_count(),
            self.sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            self.k,
            self.epv,
            self.seed
        );
        for (lo, hi) in type_pairs(self.type_count()) {
            s += &format!("B.{lo}.{hi}={}\n", join(self.pair(lo, hi).as_slice()));
        }
        for (t, d) in self.label_dist.iter().enumerate() {
            s += &format!("P.{t}={}\n", join(d));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub graph: KPartiteGraph,
    pub truth: LabelTable,
    /// Planted label per vertex, by type then local index.
    pub labels: Vec<Vec<usize>>,
}

fn draw(rng: &mut ChaCha8Rng, dist: &[f64]) -> usize {
    let total: f64 = dist.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, p) in dist.iter().enumerate() {
        if x < *p {
            return i;
        }
        x -= p;
    }
    dist.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Samples the planted graph. Each pair `(t, t')` targets
/// `epv·n/2 · n_t n_t' / Σ n_a n_b` expected edges; a candidate edge between
/// labels `(a, b)` appears with probability `c · B*(a, b)`, with `c` fixed by
/// that target. Blocks are sampled by geometric skipping, so the cost is
/// linear in the number of edges.
pub fn generate_planted(spec: &PlantedSpec) -> Result<Planted> {
    spec.validate()?;
    let types = spec.type_count();
    let k = spec.k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let labels: Vec<Vec<usize>> =
        (0..types).map(|t| (0..spec.sizes[t]).map(|_| draw(&mut rng, &spec.label_dist[t])).collect()).collect();
    // members[t][l]: local indices of type t with label l
    let members: Vec<Vec<Vec<usize>>> = labels
        .iter()
        .map(|ls| {
            let mut m = vec![Vec::new(); k];
            for (i, &l) in ls.iter().enumerate() {
                m[l].push(i);
            }
            m
        })
        .collect();

    let mut builder = GraphBuilder::new(types);
    let mut truth = LabelTable::new(k);
    for (t, type_labels) in labels.iter().enumerate() {
        for (i, &l) in type_labels.iter().enumerate() {
            let u = builder.add_vertex(t, &format!("v{i}"))?;
            truth.insert_label(u, l)?;
        }
    }

    let n: usize = spec.sizes.iter().sum();
    let cross: f64 = type_pairs(types).map(|(a, b)| (spec.sizes[a] * spec.sizes[b]) as f64).sum();
    for (lo, hi) in type_pairs(types) {
        let bstar = spec.pair(lo, hi);
        let target = spec.epv * n as f64 / 2.0 * (spec.sizes[lo] * spec.sizes[hi]) as f64 / cross;
        let mut mass = 0.0;
        let mut peak: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let block = (members[lo][a].len() * members[hi][b].len()) as f64;
                mass += bstar.get(a, b) * block;
                if block > 0.0 {
                    peak = peak.max(bstar.get(a, b));
                }
            }
        }
        if mass <= 0.0 {
            continue;
        }
        let c = target / mass;
        if c * peak > 1.0 {
            return Err(Error::InfeasibleDensity(format!(
                "pair ({lo}, {hi}) needs edge probability {:.3} > 1",
                c * peak
            )));
        }
        for a in 0..k {
            for b in 0..k {
                let p = c * bstar.get(a, b);
                let (us, vs) = (&members[lo][a], &members[hi][b]);
                let size = us.len() * vs.len();
                if p <= 0.0 || size == 0 {
                    continue;
                }
                let log_q = (1.0 - p).ln();
                let mut pos: usize = 0;
                loop {
                    if p < 1.0 {
                        let r: f64 = 1.0 - rng.gen::<f64>();
                        let skip = (r.ln() / log_q).floor();
                        if skip >= (size - pos) as f64 {
                            break;
                        }
                        pos += skip as usize;
                    }
                    if pos >= size {
                        break;
                    }
                    let (i, j) = (us[pos / vs.len()], vs[pos % vs.len()]);
                    builder.add_edge(VertexRef::new(lo, i), VertexRef::new(hi, j), 1.0)?;
                    pos += 1;
                }
            }
        }
    }
    Ok(Planted { graph: builder.build().graph, truth, labels })
}

//! Text formats: vertex/edge files, label files, delta files, snapshots,
//! auxiliary graphs and iteration traces.
//!
//! Fields are tab-separated; lines without a tab are split on whitespace.
//! Blank lines and lines starting with `#` are ignored. Decimals are
//! written with 17 significant digits so they read back exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::delta::{DeltaBatch, DeltaOp};
use crate::error::{Error, Result};
use crate::graph::{type_pairs, GraphBuilder, KPartiteGraph, VertexRef};
use crate::inference::{AuxGraph, IterationTrace, UpdateRule};
use crate::linalg::DenseMatrix;
use crate::model::{BMode, LabelMatrix, LabelTable, PropagationSet, SeedSet};

pub const SNAPSHOT_MAGIC: &str = "KPROP-SNAPSHOT v1";

pub fn fmt_decimal(x: f64) -> String {
    format!("{x:.16e}")
}

fn fields(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, l))
        }
    })
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Malformed(format!("bad {what} '{s}'")))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Malformed(format!("bad {what} '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Malformed(format!("{what} must be finite, got '{s}'")));
    }
    Ok(v)
}

fn expect_tag(f: &[&str], tag: &str, min: usize, max: usize) -> Result<()> {
    if f[0] != tag {
        return Err(Error::Malformed(format!("expected '{tag}' record, got '{}'", f[0])));
    }
    if f.len() < min || f.len() > max {
        return Err(Error::Malformed(format!("'{tag}' record has {} fields", f.len())));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Builds a graph from vertex and edge file contents. `names` label the
/// two sources in error messages.
pub fn parse_graph(vertex_text: &str, edge_text: &str, names: (&str, &str)) -> Result<KPartiteGraph> {
    let mut vertices = Vec::new();
    let mut types = 0;
    for (no, line) in content_lines(vertex_text) {
        let parsed = (|| {
            let f = fields(line);
            expect_tag(&f, "V", 3, 3)?;
            Ok((parse_usize(f[1], "type")?, f[2].to_string()))
        })()
        .map_err(|e: Error| e.at_line(names.0, no))?;
        types = types.max(parsed.0 + 1);
        vertices.push((no, parsed));
    }
    let mut builder = GraphBuilder::new(types);
    for (no, (t, id)) in vertices {
        builder.add_vertex(t, &id).map_err(|e| e.at_line(names.0, no))?;
    }
    for (no, line) in content_lines(edge_text) {
        (|| {
            let f = fields(line);
            expect_tag(&f, "E", 5, 6)?;
            let (a, b) = edge_endpoints(&builder, &f)?;
            let w = match f.get(5) {
                Some(s) => parse_f64(s, "weight")?,
                None => 1.0,
            };
            builder.add_edge(a, b, w)
        })()
        .map_err(|e| e.at_line(names.1, no))?;
    }
    Ok(builder.build().graph)
}

fn edge_endpoints(builder: &GraphBuilder, f: &[&str]) -> Result<(VertexRef, VertexRef)> {
    let (t1, t2) = (parse_usize(f[1], "type")?, parse_usize(f[3], "type")?);
    Ok((builder.vertex(t1, f[2])?, builder.vertex(t2, f[4])?))
}

pub fn load_graph(vertex_path: &Path, edge_path: &Path) -> Result<KPartiteGraph> {
    parse_graph(
        &read(vertex_path)?,
        &read(edge_path)?,
        (&vertex_path.display().to_string(), &edge_path.display().to_string()),
    )
}

pub fn vertices_to_string(graph: &KPartiteGraph) -> String {
    let mut s = String::new();
    for u in graph.vertices() {
        s += &format!("V\t{}\t{}\n", u.ty, graph.id(u));
    }
    s
}

pub fn edges_to_string(graph: &KPartiteGraph) -> String {
    let mut s = String::new();
    for (lo, hi) in type_pairs(graph.type_count()) {
        for e in graph.pair_edges(lo, hi) {
            s += &format!(
                "E\t{lo}\t{}\t{hi}\t{}\t{}\n",
                graph.id(VertexRef::new(lo, e.u)),
                graph.id(VertexRef::new(hi, e.v)),
                fmt_decimal(e.weight)
            );
        }
    }
    s
}

pub fn save_graph(graph: &KPartiteGraph, vertex_path: &Path, edge_path: &Path) -> Result<()> {
    write_atomic(vertex_path, &vertices_to_string(graph))?;
    write_atomic(edge_path, &edges_to_string(graph))
}

/// Raw label entries `(vertex, label, mass)` in file order.
fn label_entries(graph: &KPartiteGraph, text: &str, name: &str) -> Result<Vec<(VertexRef, usize, f64)>> {
    let mut out = Vec::new();
    for (no, line) in content_lines(text) {
        let entry = (|| {
            let f = fields(line);
            expect_tag(&f, "L", 4, 5)?;
            let t = parse_usize(f[1], "type")?;
            let u = graph.vertex(t, f[2]).ok_or_else(|| Error::UnknownVertex { ty: t, id: f[2].to_string() })?;
            let label = parse_usize(f[3], "label")?;
            let mass = match f.get(4) {
                Some(s) => parse_f64(s, "probability")?,
                None => 1.0,
            };
            if mass <= 0.0 {
                return Err(Error::Malformed(format!("label probability must be positive, got {mass}")));
            }
            Ok((u, label, mass))
        })()
        .map_err(|e| e.at_line(name, no))?;
        out.push(entry);
    }
    Ok(out)
}

/// Parses a label file. `k` defaults to one more than the largest label
/// (at least 2).
pub fn parse_labels(graph: &KPartiteGraph, text: &str, name: &str, k: Option<usize>) -> Result<LabelTable> {
    let entries = label_entries(graph, text, name)?;
    let k = match k {
        Some(k) => k,
        None => entries.iter().map(|e| e.1 + 1).max().unwrap_or(2).max(2),
    };
    let mut grouped: std::collections::BTreeMap<VertexRef, Vec<(usize, f64)>> = Default::default();
    for (u, l, m) in entries {
        grouped.entry(u).or_default().push((l, m));
    }
    let mut table = LabelTable::new(k);
    for (u, list) in grouped {
        table.insert_entries(u, &list)?;
    }
    Ok(table)
}

pub fn load_labels(graph: &KPartiteGraph, path: &Path, k: Option<usize>) -> Result<LabelTable> {
    parse_labels(graph, &read(path)?, &path.display().to_string(), k)
}

/// Writes one line per positive entry, with the mass when it is not 1.
pub fn labels_to_string(graph: &KPartiteGraph, table: &LabelTable) -> String {
    let mut s = String::new();
    for (u, row) in table.iter() {
        for (l, &m) in row.iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            s += &format!("L\t{}\t{}\t{l}", u.ty, graph.id(u));
            if m != 1.0 {
                s += &format!("\t{}", fmt_decimal(m));
            }
            s.push('\n');
        }
    }
    s
}

pub fn parse_delta(text: &str, name: &str) -> Result<DeltaBatch> {
    let mut ops = Vec::new();
    for (no, line) in content_lines(text) {
        let op = (|| {
            let f = fields(line);
            let vertex =
                |i: usize| -> Result<(usize, String)> { Ok((parse_usize(f[i], "type")?, f[i + 1].to_string())) };
            let arity = |min: usize, max: usize| -> Result<()> {
                if f.len() < min || f.len() > max {
                    Err(Error::Malformed(format!("'{}' record has {} fields", f[0], f.len())))
                } else {
                    Ok(())
                }
            };
            Ok(match f[0] {
                "ADDV" | "DELV" | "UNSETL" => {
                    arity(3, 3)?;
                    let (ty, id) = vertex(1)?;
                    match f[0] {
                        "ADDV" => DeltaOp::AddVertex { ty, id },
                        "DELV" => DeltaOp::RemoveVertex { ty, id },
                        _ => DeltaOp::UnsetLabel { ty, id },
                    }
                }
                "ADDE" => {
                    arity(5, 6)?;
                    let weight = match f.get(5) {
                        Some(s) => parse_f64(s, "weight")?,
                        None => 1.0,
                    };
                    DeltaOp::AddEdge { a: vertex(1)?, b: vertex(3)?, weight }
                }
                "DELE" => {
                    arity(5, 5)?;
                    DeltaOp::RemoveEdge { a: vertex(1)?, b: vertex(3)? }
                }
                "SETL" => {
                    arity(4, 5)?;
                    let (ty, id) = vertex(1)?;
                    let prob = match f.get(4) {
                        Some(s) => parse_f64(s, "probability")?,
                        None => 1.0,
                    };
                    DeltaOp::SetLabel { ty, id, label: parse_usize(f[3], "label")?, prob }
                }
                other => return Err(Error::Malformed(format!("unknown delta operation '{other}'"))),
            })
        })()
        .map_err(|e| e.at_line(name, no))?;
        ops.push(op);
    }
    Ok(DeltaBatch::new(ops))
}

pub fn load_delta(path: &Path) -> Result<DeltaBatch> {
    parse_delta(&read(path)?, &path.display().to_string())
}

pub fn delta_to_string(delta: &DeltaBatch) -> String {
    let mut s = String::new();
    for op in &delta.ops {
        let line = match op {
            DeltaOp::AddVertex { ty, id } => format!("ADDV\t{ty}\t{id}"),
            DeltaOp::RemoveVertex { ty, id } => format!("DELV\t{ty}\t{id}"),
            DeltaOp::AddEdge { a, b, weight } => {
                format!("ADDE\t{}\t{}\t{}\t{}\t{}", a.0, a.1, b.0, b.1, fmt_decimal(*weight))
            }
            DeltaOp::RemoveEdge { a, b } => format!("DELE\t{}\t{}\t{}\t{}", a.0, a.1, b.0, b.1),
            DeltaOp::SetLabel { ty, id, label, prob } => format!("SETL\t{ty}\t{id}\t{label}\t{}", fmt_decimal(*prob)),
            DeltaOp::UnsetLabel { ty, id } => format!("UNSETL\t{ty}\t{id}"),
        };
        s += &line;
        s.push('\n');
    }
    s
}

/// Inference state persisted between runs. Seed rows travel with it so
/// that later updates and evaluations need no separate seed file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub labels: LabelMatrix,
    pub propagation: PropagationSet,
    pub seeds: SeedSet,
    pub b_mode: BMode,
    pub rule: UpdateRule,
    pub beta: f64,
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let y = &self.labels;
        let k = y.k();
        let join = |v: &[f64]| v.iter().map(|x| fmt_decimal(*x)).collect::<Vec<_>>().join("\t");
        let mut s = format!("{SNAPSHOT_MAGIC}\nK\t{}\nN", y.type_count());
        for c in y.counts() {
            s += &format!("\t{c}");
        }
        s += &format!("\nk\t{k}\nb_mode\t{}\nrule\t{}\nbeta\t{}\n", self.b_mode, self.rule, fmt_decimal(self.beta));
        for (t, &c) in y.counts().iter().enumerate() {
            for i in 0..c {
                s += &format!("Y\t{t}\t{i}\t{}\n", join(y.row(VertexRef::new(t, i))));
            }
        }
        for (lo, hi) in type_pairs(y.type_count()) {
            s += &format!("B\t{lo}\t{hi}\t{}\n", join(self.propagation.pair(lo, hi).as_slice()));
        }
        for (u, row) in self.seeds.iter() {
            s += &format!("S\t{}\t{}\t{}\n", u.ty, u.index, join(row));
        }
        s
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut lines = content_lines(text);
        let header = |lines: &mut dyn Iterator<Item = (usize, &str)>, tag: &str| -> Result<(usize, Vec<String>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Malformed(format!("snapshot ends before '{tag}'")))?;
            let f = fields(line);
            if f[0] != tag {
                return Err(Error::Malformed(format!("expected '{tag}', got '{}'", f[0])).at_line(name, no));
            }
            Ok((no, f[1..].iter().map(|s| s.to_string()).collect()))
        };
        match lines.next() {
            Some((_, l)) if l.trim() == SNAPSHOT_MAGIC => {}
            _ => return Err(Error::Malformed(format!("{name}: missing '{SNAPSHOT_MAGIC}' header"))),
        }
        let one = |(no, v): (usize, Vec<String>), what: &str| -> Result<String> {
            if v.len() != 1 {
                return Err(Error::Malformed(format!("'{what}' takes one value")).at_line(name, no));
            }
            Ok(v[0].clone())
        };
        let at = |no: usize| move |e: Error| e.at_line(name, no);

        let h = header(&mut lines, "K")?;
        let no = h.0;
        let types = parse_usize(&one(h, "K")?, "type count").map_err(at(no))?;
        let (no, ns) = header(&mut lines, "N")?;
        let counts: Vec<usize> = ns.iter().map(|s| parse_usize(s, "size")).collect::<Result<_>>().map_err(at(no))?;
        if counts.len() != types {
            return Err(Error::Malformed(format!("N lists {} sizes for K = {types}", counts.len())).at_line(name, no));
        }
        let h = header(&mut lines, "k")?;
        let no = h.0;
        let k = parse_usize(&one(h, "k")?, "class count").map_err(at(no))?;
        let h = header(&mut lines, "b_mode")?;
        let no = h.0;
        let b_mode: BMode = one(h, "b_mode")?.parse().map_err(at(no))?;

        let mut rule = UpdateRule::Multiplicative;
        let mut beta = 5.0;
        let mut y = LabelMatrix::zeros(&counts, k);
        let mut seen_y = vec![false; y.n()];
        let mut b = PropagationSet::filled(types, k, &DenseMatrix::zeros(k, k));
        let mut seen_b = vec![false; b.matrices().len()];
        let mut seeds = SeedSet::new(k);
        for (no, line) in lines {
            (|| {
                let f = fields(line);
                let values = |from: usize, count: usize| -> Result<Vec<f64>> {
                    if f.len() != from + count {
                        return Err(Error::Malformed(format!("'{}' record needs {count} values", f[0])));
                    }
                    let v: Vec<f64> = f[from..].iter().map(|s| parse_f64(s, "value")).collect::<Result<_>>()?;
                    if v.iter().any(|x| *x < 0.0) {
                        return Err(Error::Malformed("negative value".into()));
                    }
                    Ok(v)
                };
                let vertex = || -> Result<VertexRef> {
                    let t = parse_usize(f[1], "type")?;
                    let i = parse_usize(f[2], "index")?;
                    if t >= types || i >= counts[t] {
                        return Err(Error::Malformed(format!("row {t}:{i} outside the declared shape")));
                    }
                    Ok(VertexRef::new(t, i))
                };
                match f[0] {
                    "rule" if f.len() == 2 => rule = f[1].parse()?,
                    "beta" if f.len() == 2 => beta = parse_f64(f[1], "beta")?,
                    "Y" if f.len() >= 3 => {
                        let u = vertex()?;
                        let row = values(3, k)?;
                        y.row_mut(u).copy_from_slice(&row);
                        seen_y[y.offsets()[u.ty] + u.index] = true;
                    }
                    "B" if f.len() >= 3 => {
                        let (lo, hi) = (parse_usize(f[1], "type")?, parse_usize(f[2], "type")?);
                        if lo >= hi || hi >= types {
                            return Err(Error::Malformed(format!("bad type pair {lo}, {hi}")));
                        }
                        b.set_pair(lo, hi, DenseMatrix::from_vec(k, k, values(3, k * k)?));
                        seen_b[crate::graph::pair_index(types, lo, hi)] = true;
                    }
                    "S" if f.len() >= 3 => {
                        let u = vertex()?;
                        seeds.insert_row(u, values(3, k)?)?;
                    }
                    other => return Err(Error::Malformed(format!("unexpected snapshot record '{other}'"))),
                }
                Ok(())
            })()
            .map_err(at(no))?;
        }
        if let Some(g) = seen_y.iter().position(|s| !s) {
            return Err(Error::Malformed(format!("{name}: snapshot is missing label row {g}")));
        }
        if seen_b.iter().any(|s| !s) {
            return Err(Error::Malformed(format!("{name}: snapshot is missing a propagation matrix")));
        }
        Ok(Snapshot { labels: y, propagation: b, seeds, b_mode, rule, beta })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_text())
    }
}

/// Reads intra-type edges (`E t id1 t id2 [w]`) into one auxiliary graph
/// per type that has any.
pub fn parse_aux_graph(graph: &KPartiteGraph, text: &str, name: &str) -> Result<Vec<Option<AuxGraph>>> {
    let mut out: Vec<Option<AuxGraph>> = vec![None; graph.type_count()];
    for (no, line) in content_lines(text) {
        (|| {
            let f = fields(line);
            expect_tag(&f, "E", 5, 6)?;
            let (t1, t2) = (parse_usize(f[1], "type")?, parse_usize(f[3], "type")?);
            if t1 != t2 {
                return Err(Error::Malformed(format!("auxiliary edge joins types {t1} and {t2}")));
            }
            let find =
                |id: &str| graph.vertex(t1, id).ok_or_else(|| Error::UnknownVertex { ty: t1, id: id.to_string() });
            let (a, b) = (find(f[2])?, find(f[4])?);
            let w = match f.get(5) {
                Some(s) => parse_f64(s, "weight")?,
                None => 1.0,
            };
            if w < 0.0 {
                return Err(Error::NegativeWeight(w));
            }
            out[t1].get_or_insert_with(|| AuxGraph::new(graph.count(t1))).add_edge(a.index, b.index, w);
            Ok(())
        })()
        .map_err(|e: Error| e.at_line(name, no))?;
    }
    Ok(out)
}

pub fn load_aux_graph(graph: &KPartiteGraph, path: &Path) -> Result<Vec<Option<AuxGraph>>> {
    parse_aux_graph(graph, &read(path)?, &path.display().to_string())
}

pub fn trace_to_string(trace: &IterationTrace) -> String {
    let mut s = String::new();
    for r in &trace.records {
        s += &format!("{}\t{}\t{:.3}\n", r.iteration, fmt_decimal(r.objective), r.millis);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const V: &str = "# toy\nV\t0\ta0\nV\t1\tb0\nV\t0\ta1\n";
    const E: &str = "E\t0\ta0\t1\tb0\t1.0\nE\t1\tb0\t0\ta1\n";

    #[test]
    fn minimal_graph() {
        let g = parse_graph("V\t0\ta0\nV\t1\tb0\n", "E\t0\ta0\t1\tb0\t1.0\n", ("v", "e")).unwrap();
        assert_eq!((g.type_count(), g.n(), g.m()), (2, 2, 1));
    }

    #[test]
    fn graph_errors_carry_line_numbers() {
        let err = parse_graph(V, "E\t0\ta0\t1\tb9\n", ("v", "e")).unwrap_err();
        assert!(err.to_string().contains("unknown vertex"), "{err}");
        assert!(err.to_string().starts_with("e:1:"), "{err}");
        let err = parse_graph(V, "\nE\t0\ta0\t0\ta1\n", ("v", "e")).unwrap_err();
        assert!(err.to_string().contains("intra-type edge"), "{err}");
        assert!(err.to_string().starts_with("e:2:"), "{err}");
        let err = parse_graph(V, "E\t0\ta0\t1\tb0\t-1\n", ("v", "e")).unwrap_err();
        assert!(matches!(err.root(), Error::NegativeWeight(_)));
        assert!(parse_graph("V\t0\n", "", ("v", "e")).is_err());
    }

    #[test]
    fn duplicate_edges_sum() {
        let g = parse_graph(V, "E\t0\ta0\t1\tb0\t1.5\nE\t1\tb0\t0\ta0\t2\n", ("v", "e")).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.weight(VertexRef::new(0, 0), VertexRef::new(1, 0)), Some(3.5));
    }

    #[test]
    fn serialize_round_trip() {
        let g = parse_graph(V, E, ("v", "e")).unwrap();
        let again = parse_graph(&vertices_to_string(&g), &edges_to_string(&g), ("v", "e")).unwrap();
        assert_eq!(again, g);
        assert_eq!(edges_to_string(&again), edges_to_string(&g));
    }

    #[test]
    fn multi_label_lines_accumulate() {
        let g = parse_graph(V, E, ("v", "e")).unwrap();
        let t = parse_labels(&g, "L\t0\ta0\t0\nL\t0\ta0\t2\nL\t1\tb0\t1\t0.5\n", "l", None).unwrap();
        assert_eq!(t.k(), 3);
        assert_eq!(t.get(VertexRef::new(0, 0)).unwrap(), &[0.5, 0.0, 0.5]);
        assert_eq!(t.get(VertexRef::new(1, 0)).unwrap(), &[0.0, 1.0, 0.0]);
        let again = parse_labels(&g, &labels_to_string(&g, &t), "l", Some(3)).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn delta_grammar() {
        let text = "ADDV 0 x\nADDE 0 x 1 b0 2.5\nDELE\t0\ta0\t1\tb0\nSETL 0 x 1\nUNSETL 0 a1\nDELV 0 a1\n";
        let d = parse_delta(text, "d").unwrap();
        assert_eq!(d.ops.len(), 6);
        assert_eq!(d.ops[3], DeltaOp::SetLabel { ty: 0, id: "x".into(), label: 1, prob: 1.0 });
        assert_eq!(parse_delta(&delta_to_string(&d), "d").unwrap(), d);
        assert!(parse_delta("FOO 1 2\n", "d").is_err());
        assert!(parse_delta("ADDE 0 x 1\n", "d").is_err());
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let mut y = LabelMatrix::zeros(&[2, 1], 2);
        y.row_mut(VertexRef::new(0, 0)).copy_from_slice(&[0.1, 1.0 / 3.0]);
        y.row_mut(VertexRef::new(1, 0)).copy_from_slice(&[std::f64::consts::PI, 1e-300]);
        let b = PropagationSet::filled(2, 2, &DenseMatrix::from_rows(&[vec![0.7, 0.1], vec![0.2, 1.0 / 7.0]]));
        let mut seeds = SeedSet::new(2);
        seeds.insert_label(VertexRef::new(0, 1), 1).unwrap();
        let snap = Snapshot {
            labels: y,
            propagation: b,
            seeds,
            b_mode: BMode::Diagonal,
            rule: UpdateRule::Additive,
            beta: 2.5,
        };
        let text = snap.to_text();
        let back = Snapshot::parse(&text, "s").unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_text(), text);
        let broken = text.replace("Y\t0\t1", "Y\t0\t7");
        assert!(Snapshot::parse(&broken, "s").is_err());
    }

    #[test]
    fn aux_graph_requires_same_type() {
        let g = parse_graph(V, E, ("v", "e")).unwrap();
        let aux = parse_aux_graph(&g, "E\t0\ta0\t0\ta1\t2\n", "a").unwrap();
        assert_eq!(aux[0].as_ref().unwrap().degree(0), 2.0);
        assert!(aux[1].is_none());
        assert!(parse_aux_graph(&g, "E\t0\ta0\t1\tb0\n", "a").is_err());
    }
}

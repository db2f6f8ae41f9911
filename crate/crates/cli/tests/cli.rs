use std::path::Path;
use std::process::{Command, Output};

use kprop::io::load_graph;
use kprop::*;

const SPEC: &str = "K=3\nn=150,150,150\nk=3\nepv=6\nseed=8\nB.0.1=0,1,0,0,0,1,1,0,0\n";

fn kprop(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kprop")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = kprop(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn generated() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.txt"), SPEC).unwrap();
    ok(dir.path(), &["gen", "--spec", "spec.txt", "--out-prefix", "g"]);
    dir
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn gen_infer_eval_pipeline() {
    let dir = generated();
    let d = dir.path();
    ok(d, &["infer", "--graph", "g", "--labels", "g.labels", "--seed-fraction", "0.05", "--out", "m.snap"]);
    assert!(d.join("m.snap.trace").exists());
    let report = ok(d, &["eval", "--snapshot", "m.snap", "--graph", "g", "--truth", "g.labels"]);
    let acc: f64 = report.lines().find_map(|l| l.strip_prefix("ACC ")).unwrap().parse().unwrap();
    assert!(report.lines().any(|l| l.starts_with("BER ")));
    assert!(acc > 0.9, "{report}");
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = generated();
    let d = dir.path();
    ok(d, &["gen", "--spec", "spec.txt", "--out-prefix", "h"]);
    for ext in ["vertices", "edges", "labels"] {
        assert_eq!(read(d, &format!("g.{ext}")), read(d, &format!("h.{ext}")), "{ext}");
    }
}

#[test]
fn empty_delta_is_free_and_changes_nothing() {
    let dir = generated();
    let d = dir.path();
    ok(d, &["infer", "--graph", "g", "--labels", "g.labels", "--seed-fraction", "0.05", "--out", "m.snap"]);
    std::fs::write(d.join("none.delta"), "").unwrap();
    let decision =
        ok(d, &["decide", "--snapshot", "m.snap", "--graph", "g", "--delta", "none.delta", "--theta", "0.5"]);
    assert!(decision.lines().any(|l| l == "GAIN inf"), "{decision}");
    assert!(decision.lines().any(|l| l == "RECOMMEND INCREMENTAL"), "{decision}");
    ok(d, &["update", "--snapshot", "m.snap", "--graph", "g", "--delta", "none.delta", "--out", "m2.snap"]);
    assert_eq!(read(d, "m.snap"), read(d, "m2.snap"));
}

#[test]
fn update_with_holdout_delta_writes_consistent_outputs() {
    let dir = generated();
    let d = dir.path();
    // hold out the last ten vertices of type 0 and bring them back as a delta
    let g = load_graph(&d.join("g.vertices"), &d.join("g.edges")).unwrap();
    let held: Vec<VertexRef> = (140..150).map(|i| VertexRef::new(0, i)).collect();
    let mut vtext = String::new();
    let mut etext = String::new();
    let mut delta = String::new();
    for u in g.vertices() {
        if held.contains(&u) {
            delta += &format!("ADDV\t0\t{}\n", g.id(u));
        } else {
            vtext += &format!("V\t{}\t{}\n", u.ty, g.id(u));
        }
    }
    for u in g.vertices() {
        for n in g.neighbors(u).iter().filter(|n| u < n.vertex) {
            let line = format!("{}\t{}\t{}\t{}\t{}", u.ty, g.id(u), n.vertex.ty, g.id(n.vertex), n.weight);
            if held.contains(&u) || held.contains(&n.vertex) {
                delta += &format!("ADDE\t{line}\n");
            } else {
                etext += &format!("E\t{line}\n");
            }
        }
    }
    std::fs::write(d.join("old.vertices"), vtext).unwrap();
    std::fs::write(d.join("old.edges"), etext).unwrap();
    std::fs::write(d.join("back.delta"), delta).unwrap();
    let held_ids: Vec<String> = held.iter().map(|&u| format!("L\t0\t{}\t", g.id(u))).collect();
    let labels = std::fs::read_to_string(d.join("g.labels")).unwrap();
    let kept: String =
        labels.lines().filter(|l| !held_ids.iter().any(|h| l.starts_with(h))).map(|l| format!("{l}\n")).collect();
    std::fs::write(d.join("old.labels"), kept).unwrap();

    ok(d, &["infer", "--graph", "old", "--labels", "old.labels", "--seed-fraction", "0.05", "--out", "m.snap"]);
    let summary = ok(
        d,
        &[
            "update",
            "--snapshot",
            "m.snap",
            "--graph",
            "old",
            "--delta",
            "back.delta",
            "--theta",
            "0.5",
            "--out",
            "m2.snap",
            "--out-graph",
            "new",
        ],
    );
    let changed: usize = summary.lines().find_map(|l| l.strip_prefix("CHANGED ")).unwrap().parse().unwrap();
    assert!(changed > held.len(), "{summary}");
    let new = load_graph(&d.join("new.vertices"), &d.join("new.edges")).unwrap();
    assert_eq!((new.n(), new.m()), (g.n(), g.m()));
    let report = ok(d, &["eval", "--snapshot", "m2.snap", "--graph", "new", "--truth", "g.labels"]);
    let acc: f64 = report.lines().find_map(|l| l.strip_prefix("ACC ")).unwrap().parse().unwrap();
    assert!(acc > 0.9, "{report}");
}

/// Label propagation with every pair matrix frozen at I/k: each type's rows
/// are recomputed from the previous rows, types in ascending order.
fn frozen_identity_propagation(g: &KPartiteGraph, seeds: &SeedSet, iters: usize) -> LabelMatrix {
    let (k, beta, eps) = (seeds.k(), 5.0, 1e-9);
    let kf = k as f64;
    let mut y = init_labels(g, seeds);
    for _ in 0..iters {
        for t in 0..g.type_count() {
            let mut a = vec![0.0; k * k];
            for u in g.vertices().filter(|u| u.ty != t) {
                let r = y.row(u);
                for i in 0..k {
                    for j in 0..k {
                        a[i * k + j] += r[i] * r[j] / (kf * kf);
                    }
                }
            }
            let next: Vec<(VertexRef, Vec<f64>)> = g
                .vertices()
                .filter(|u| u.ty == t)
                .map(|u| {
                    let row = y.row(u);
                    let row_out = (0..k)
                        .map(|i| {
                            let signal: f64 = g.neighbors(u).iter().map(|n| n.weight * y.row(n.vertex)[i] / kf).sum();
                            let ay: f64 = (0..k).map(|j| a[i * k + j] * row[j]).sum();
                            let (mut num, mut den) = (signal, ay + eps);
                            if let Some(s) = seeds.get(u) {
                                num += beta * s[i];
                                den += beta * row[i];
                            }
                            row[i] * (num / den).sqrt()
                        })
                        .collect();
                    (u, row_out)
                })
                .collect();
            for (u, row) in next {
                y.row_mut(u).copy_from_slice(&row);
            }
        }
    }
    y
}

#[test]
fn identity_mode_matches_frozen_label_propagation() {
    let dir = generated();
    let d = dir.path();
    ok(
        d,
        &[
            "infer",
            "--graph",
            "g",
            "--labels",
            "g.labels",
            "--seed-fraction",
            "0.1",
            "--b-mode",
            "identity",
            "--tol",
            "1e-300",
            "--max-iter",
            "15",
            "--out",
            "m.snap",
        ],
    );
    let snap = Snapshot::load(&d.join("m.snap")).unwrap();

    let third = 1.0f64 / 3.0;
    for (lo, hi) in [(0, 1), (0, 2), (1, 2)] {
        let b = snap.propagation.pair(lo, hi);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b.get(i, j), if i == j { third } else { 0.0 });
            }
        }
    }

    let g = load_graph(&d.join("g.vertices"), &d.join("g.edges")).unwrap();
    let truth = kprop::io::load_labels(&g, &d.join("g.labels"), None).unwrap();
    let (seeds, _) = select_seeds(&g, &truth, 0.1).unwrap();
    let want = frozen_identity_propagation(&g, &seeds, 15);
    let mut worst = 0.0f64;
    for u in g.vertices() {
        for (x, w) in snap.labels.row(u).iter().zip(want.row(u)) {
            worst = worst.max((x - w).abs() / w.abs().max(1e-12));
        }
    }
    assert!(worst < 1e-9, "worst relative difference {worst:e}");
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    let dir = generated();
    let d = dir.path();
    assert_eq!(kprop(d, &["infer", "--graph", "g"]).status.code(), Some(1));
    assert_eq!(kprop(d, &["frobnicate"]).status.code(), Some(1));
    let bad_theta = kprop(d, &["decide", "--snapshot", "x", "--graph", "g", "--delta", "y", "--theta", "abc"]);
    assert_eq!(bad_theta.status.code(), Some(1));
    let bad_beta = kprop(d, &["infer", "--graph", "g", "--labels", "g.labels", "--beta=-1", "--out", "z"]);
    assert_eq!(bad_beta.status.code(), Some(1));

    assert_eq!(kprop(d, &["infer", "--graph", "missing", "--labels", "g.labels", "--out", "z"]).status.code(), Some(2));
    std::fs::write(d.join("bad.labels"), "garbage\n").unwrap();
    let bad = kprop(d, &["infer", "--graph", "g", "--labels", "bad.labels", "--out", "z"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.labels:1"));
    assert!(!d.join("z").exists());
}

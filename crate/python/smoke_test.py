"""Smoke test for the kprop extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`
or `pip install crates/python`.
"""

import math
import os
import tempfile

import kprop

SPEC = """K=3
n=120,120,120
k=3
epv=6
seed=3
B.0.1=0,1,0,0,0,1,1,0,0
"""


def main():
    graph, truth = kprop.generate(SPEC)
    assert (graph.type_count, graph.n) == (3, 360), graph
    seeds = truth.select_seeds(graph, 0.1)
    assert 0 < len(seeds) <= 36

    snap, objectives = kprop.infer(graph, seeds, max_iter=200)
    assert all(b <= a * (1 + 1e-9) for a, b in zip(objectives, objectives[1:])), objectives
    report = kprop.evaluate(graph, snap, truth)
    assert report["accuracy"] > 0.9, report
    b = snap.propagation(0, 1)
    off = sum(b[i][j] for i in range(3) for j in range(3) if i != j)
    assert off > sum(b[i][i] for i in range(3)), b

    decision = kprop.decide(graph, snap, kprop.Delta())
    assert math.isinf(decision["gain"]) and decision["recommendation"] == "INCREMENTAL", decision

    vid = graph.ids(0)[0]
    delta = kprop.Delta.parse(f"ADDV\t1\tnewcomer\nADDE\t0\t{vid}\t1\tnewcomer\t1\n")
    new_snap, new_graph, touched = kprop.update(graph, snap, delta, theta=0.5)
    assert new_graph.n == graph.n + 1 and new_graph.m == graph.m + 1
    assert touched >= 2
    assert len(new_snap.scores(new_graph, 1, "newcomer")) == 3

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.snapshot")
        new_snap.save(path)
        assert kprop.Snapshot.load(path).to_text() == new_snap.to_text()
        new_graph.save(os.path.join(d, "g"))
        assert kprop.Graph.load(os.path.join(d, "g")).m == new_graph.m

    try:
        kprop.infer(graph, seeds, beta=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative beta accepted")

    print(f"ok: accuracy {report['accuracy']:.4f}, {len(objectives) - 1} iterations, {touched} rows updated")


if __name__ == "__main__":
    main()

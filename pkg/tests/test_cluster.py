import csv

import numpy as np
import pytest

from farecast.cluster import (
    Dendrogram,
    cut_tree,
    half_height_cut,
    vectorize_rpp,
    ward_cluster,
    write_clusters_csv,
    write_dendrogram_csv,
)
from farecast.rpp import Rpp
from oracles import exhaustive_ward


def _partition(labels):
    groups = {}
    for station, lab in labels.items():
        groups.setdefault(lab, set()).add(station)
    return frozenset(frozenset(g) for g in groups.values())


def test_vectorize_is_row_major():
    probs = np.zeros((3, 48))
    probs[2, 17] = 0.4
    v = vectorize_rpp(Rpp("S", 3, 48, probs))
    assert v.shape == (144,)
    assert v[2 * 48 + 17] == 0.4
    assert v.sum() == pytest.approx(0.4)


def test_three_point_line_merge_heights():
    dend = ward_cluster(np.array([[0.0], [1.0], [10.0]]), ["A", "B", "C"])
    assert (dend.merges[0].a, dend.merges[0].b) == (0, 1)
    assert dend.merges[0].height == pytest.approx(0.5)
    assert dend.merges[0].size == 2
    # joining {0, 1} with {10}: SSE grows from 0.5 to the full scatter
    pts = np.array([0.0, 1.0, 10.0])
    full_sse = float(((pts - pts.mean()) ** 2).sum())
    assert dend.merges[1].height == pytest.approx(full_sse - 0.5)
    assert dend.merges[1].size == 3


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_matches_exhaustive_greedy_merging(n):
    for seed in (0, 1, 2):
        rng = np.random.default_rng(100 * n + seed)
        X = rng.normal(size=(n, 3))
        dend = ward_cluster(X)
        expect = exhaustive_ward(X)
        assert len(dend.merges) == len(expect) == n - 1
        for got, (a, b, delta) in zip(dend.merges, expect):
            assert (got.a, got.b) == (a, b)
            assert got.height == pytest.approx(delta, abs=1e-9)


def test_merge_heights_never_decrease():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(12, 5))
    heights = [m.height for m in ward_cluster(X).merges]
    assert all(h2 >= h1 - 1e-12 for h1, h2 in zip(heights, heights[1:]))


def test_cut_tree_by_count_and_by_height():
    dend = ward_cluster(np.array([[0.0], [1.0], [10.0]]), ["A", "B", "C"])
    assert cut_tree(dend, k=2) == {"A": 0, "B": 0, "C": 1}
    assert cut_tree(dend, k=1) == {"A": 0, "B": 0, "C": 0}
    assert cut_tree(dend, k=3) == {"A": 0, "B": 1, "C": 2}
    assert cut_tree(dend, height=0.5) == {"A": 0, "B": 0, "C": 1}
    assert cut_tree(dend, height=0.4) == {"A": 0, "B": 1, "C": 2}
    assert cut_tree(dend, height=1e9) == {"A": 0, "B": 0, "C": 0}


def test_cut_tree_argument_errors():
    dend = ward_cluster(np.array([[0.0], [1.0]]))
    with pytest.raises(ValueError):
        cut_tree(dend)
    with pytest.raises(ValueError):
        cut_tree(dend, k=1, height=0.5)
    with pytest.raises(ValueError):
        cut_tree(dend, k=0)
    with pytest.raises(ValueError):
        cut_tree(dend, k=3)


def test_half_height_cut_separates_well_spaced_groups():
    rng = np.random.default_rng(32)
    centers = {"a": (0.0, 0.0), "b": (10.0, 0.0), "c": (0.0, 10.0)}
    names, rows = [], []
    for key, c in centers.items():
        for i in range(3):
            names.append(f"{key}{i}")
            rows.append(np.asarray(c) + rng.normal(0.0, 0.1, size=2))
    labels = half_height_cut(ward_cluster(np.asarray(rows), names))
    assert _partition(labels) == frozenset(
        frozenset(f"{key}{i}" for i in range(3)) for key in centers
    )


def test_half_height_cut_degenerate_inputs():
    ident = ward_cluster(np.zeros((4, 2)), ["A", "B", "C", "D"])
    assert set(half_height_cut(ident).values()) == {0}
    single = ward_cluster(np.zeros((1, 2)), ["A"])
    assert half_height_cut(single) == {"A": 0}


def test_partition_is_invariant_to_input_order():
    rng = np.random.default_rng(33)
    X = rng.normal(size=(9, 4))
    names = [f"S{i}" for i in range(9)]
    base = cut_tree(ward_cluster(X, names), k=3)
    perm = rng.permutation(9)
    shuffled = cut_tree(ward_cluster(X[perm], [names[i] for i in perm]), k=3)
    assert _partition(base) == _partition(shuffled)


def test_ward_cluster_input_validation():
    with pytest.raises(ValueError):
        ward_cluster(np.zeros(5))
    with pytest.raises(ValueError):
        ward_cluster(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        ward_cluster(np.zeros((2, 3)), ["A"])
    with pytest.raises(ValueError):
        ward_cluster(np.zeros((2, 3)), ["A", "A"])


def test_csv_writers(tmp_path):
    dend = ward_cluster(np.array([[0.0], [1.0], [10.0]]), ["B", "A", "C"])
    labels = cut_tree(dend, k=2)
    cpath = tmp_path / "clusters.csv"
    write_clusters_csv(cpath, labels)
    with open(cpath, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["station", "cluster"]
    assert [r[0] for r in rows[1:]] == ["A", "B", "C"]  # sorted by station

    dpath = tmp_path / "dendrogram.csv"
    write_dendrogram_csv(dpath, dend)
    with open(dpath, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "cluster_a", "cluster_b", "height", "size"]
    assert len(rows) == 3
    assert rows[1][:3] == ["0", "0", "1"]
    assert float(rows[1][3]) == pytest.approx(0.5)

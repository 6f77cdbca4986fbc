"""Station clustering on vectorized return-probability tables.

Tables are flattened row-major into W*H vectors and merged bottom-up under
Ward's criterion: every merge is the pair of clusters whose union increases
the total within-cluster sum of squares the least.  Distances between merged
clusters are maintained with the Lance-Williams recurrence on squared
Euclidean distances, which reproduces exactly that objective, and ties are
broken deterministically by the lowest cluster-id pair.  Merge heights are
the sum-of-squares increases, so they are non-decreasing along the merge
sequence.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rpp import Rpp


def vectorize_rpp(rpp: Rpp) -> np.ndarray:
    """Row-major flattening of the W x H probability table."""
    return rpp.probs.ravel().copy()


@dataclass(frozen=True)
class Merge:
    a: int  # cluster ids: leaves are 0..n-1, merges create n, n+1, ...
    b: int
    height: float  # increase in within-cluster sum of squares
    size: int  # members in the merged cluster


@dataclass
class Dendrogram:
    """Full merge history over the input stations (leaf order preserved)."""

    stations: tuple[str, ...]
    merges: tuple[Merge, ...]

    @property
    def n_leaves(self) -> int:
        return len(self.stations)


def ward_cluster(vectors: np.ndarray, stations: list[str] | None = None) -> Dendrogram:
    """Agglomerate row vectors under the Ward sum-of-squares criterion.

    Quadratic memory and cubic time in the number of stations, which is fine
    for network-sized inputs (hundreds of stations).
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise ValueError("vectors must be a 2-D array (stations x features)")
    n = len(X)
    if n == 0:
        raise ValueError("nothing to cluster")
    if stations is None:
        stations = [str(i) for i in range(n)]
    if len(stations) != n:
        raise ValueError("station labels do not match the number of vectors")
    if len(set(stations)) != n:
        raise ValueError("station labels must be unique")

    # Lance-Williams state: D holds squared-Euclidean Ward distances, which
    # equal twice the SSE increase of merging the pair
    D: dict[tuple[int, int], float] = {}
    sizes: dict[int, int] = {i: 1 for i in range(n)}
    for i in range(n):
        diffs = X[i + 1 :] - X[i]
        for off, j in enumerate(range(i + 1, n)):
            D[(i, j)] = float(diffs[off] @ diffs[off])

    def dist(a: int, b: int) -> float:
        return D[(a, b) if a < b else (b, a)]

    merges: list[Merge] = []
    active = list(range(n))
    next_id = n
    while len(active) > 1:
        best: tuple[float, int, int] | None = None
        for ii, a in enumerate(active):
            for b in active[ii + 1 :]:
                d = dist(a, b)
                if best is None or d < best[0] - 1e-12:
                    best = (d, a, b)
        d_ab, a, b = best  # type: ignore[misc]
        n_a, n_b = sizes[a], sizes[b]
        merged = next_id
        next_id += 1
        for k in active:
            if k in (a, b):
                continue
            n_k = sizes[k]
            d_new = (
                (n_a + n_k) * dist(k, a) + (n_b + n_k) * dist(k, b) - n_k * d_ab
            ) / (n_a + n_b + n_k)
            D[(k, merged)] = d_new
        active = [k for k in active if k not in (a, b)]
        active.append(merged)
        sizes[merged] = n_a + n_b
        merges.append(Merge(a, b, d_ab / 2.0, n_a + n_b))
    return Dendrogram(tuple(stations), tuple(merges))


def cut_tree(
    dendrogram: Dendrogram, k: int | None = None, height: float | None = None
) -> dict[str, int]:
    """Cluster labels from undoing the merges above a cut.

    Exactly one of ``k`` (number of clusters) or ``height`` (keep merges with
    height <= the cut) must be given.  Labels are 0-based and ordered by the
    first station in each cluster, so they are stable across runs.
    """
    if (k is None) == (height is None):
        raise ValueError("specify exactly one of k or height")
    n = dendrogram.n_leaves
    if k is not None:
        if not 1 <= k <= n:
            raise ValueError(f"k must be in 1..{n}")
        applied = dendrogram.merges[: n - k]
    else:
        applied = tuple(m for m in dendrogram.merges if m.height <= height)

    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    next_id = n
    for m in applied:
        members[next_id] = members.pop(m.a) + members.pop(m.b)
        next_id += 1
    groups = sorted(members.values(), key=min)
    labels: dict[str, int] = {}
    for label, group in enumerate(groups):
        for leaf in group:
            labels[dendrogram.stations[leaf]] = label
    return labels


def half_height_cut(dendrogram: Dendrogram) -> dict[str, int]:
    """Cut at half the final merge height (single cluster when n == 1)."""
    if not dendrogram.merges:
        return {s: 0 for s in dendrogram.stations}
    return cut_tree(dendrogram, height=0.5 * dendrogram.merges[-1].height)


def write_clusters_csv(path: str | Path, labels: dict[str, int]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "cluster"))
        for station in sorted(labels):
            writer.writerow((station, labels[station]))


def write_dendrogram_csv(path: str | Path, dendrogram: Dendrogram) -> None:
    """Merge list with leaf ids 0..n-1 in input order; heights are SSE gains."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "cluster_a", "cluster_b", "height", "size"))
        for i, m in enumerate(dendrogram.merges):
            writer.writerow((i, m.a, m.b, f"{m.height:.10g}", m.size))

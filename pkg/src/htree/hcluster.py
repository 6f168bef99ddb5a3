"""Agglomerative hierarchical clustering with Ward linkage.

Built directly on the Lance-Williams recurrence so the merge order is
fully specified: ties on the minimum distance break toward the smallest
(id_a, id_b) cluster-id pair, with singleton clusters numbered 0..n-1 and
each merge minted id n + step. The dendrogram is cut to exactly k clusters
and labels are assigned by descending member count (0 = largest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class LinkageStep:
    """One merge: the two cluster ids joined, the Ward distance, and the merged size."""

    merged_a: int
    merged_b: int
    distance: float
    new_size: int

    def to_dict(self) -> dict:
        return {
            "merged_a": self.merged_a,
            "merged_b": self.merged_b,
            "distance": self.distance,
            "new_size": self.new_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkageStep":
        return cls(
            merged_a=int(d["merged_a"]),
            merged_b=int(d["merged_b"]),
            distance=float(d["distance"]),
            new_size=int(d["new_size"]),
        )


@dataclass(eq=False)
class ClusterModel:
    """Cut dendrogram: per-row labels, centroids in standardized space, merge trace."""

    n_main_clusters: int
    assignments: np.ndarray
    centroids: np.ndarray
    member_counts: tuple[int, ...]
    linkage: tuple[LinkageStep, ...]

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=int)
        self.centroids = np.asarray(self.centroids, dtype=float)
        self.member_counts = tuple(int(c) for c in self.member_counts)
        self.linkage = tuple(self.linkage)
        if self.centroids.ndim != 2 or self.centroids.shape[0] != self.n_main_clusters:
            raise DataError("centroid matrix must have one row per cluster")
        if len(self.member_counts) != self.n_main_clusters:
            raise DataError("member_counts length must equal n_main_clusters")
        if sum(self.member_counts) != self.assignments.shape[0]:
            raise DataError("member_counts must sum to the number of assigned rows")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClusterModel):
            return NotImplemented
        return (
            self.n_main_clusters == other.n_main_clusters
            and np.array_equal(self.assignments, other.assignments)
            and np.array_equal(self.centroids, other.centroids)
            and self.member_counts == other.member_counts
            and self.linkage == other.linkage
        )

    def to_dict(self) -> dict:
        return {
            "n_main_clusters": self.n_main_clusters,
            "assignments": self.assignments.tolist(),
            "centroids": self.centroids.tolist(),
            "member_counts": list(self.member_counts),
            "linkage": [s.to_dict() for s in self.linkage],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterModel":
        return cls(
            n_main_clusters=int(d["n_main_clusters"]),
            assignments=np.array(d["assignments"], dtype=int),
            centroids=np.array(d["centroids"], dtype=float),
            member_counts=tuple(d["member_counts"]),
            linkage=tuple(LinkageStep.from_dict(s) for s in d["linkage"]),
        )


def _squared_distances(X: np.ndarray) -> np.ndarray:
    sq = (X * X).sum(axis=1)
    D2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D2, 0.0, out=D2)
    return D2


def _full_linkage(X: np.ndarray) -> list[LinkageStep]:
    """Run Ward agglomeration to a single cluster, returning the merge trace.

    Works on squared distances; recorded distances are their square roots.
    Updated distances are clamped from below at the current merge distance:
    Ward's reducibility guarantees the exact value is never smaller, so the
    clamp only strips last-ulp float noise and keeps the trace monotone.

    A per-row minimum cache avoids rescanning the full matrix every merge;
    rows whose cached minimum pointed at a merged slot are recomputed
    eagerly, so the cache stays exact and tie handling is unaffected.
    """
    n = X.shape[0]
    D2 = _squared_distances(X)
    np.fill_diagonal(D2, np.inf)
    ids = np.arange(n)
    sizes = np.ones(n, dtype=float)
    active = np.ones(n, dtype=bool)
    row_min = D2.min(axis=1) if n > 1 else np.full(n, np.inf)
    row_arg = D2.argmin(axis=1) if n > 1 else np.zeros(n, dtype=int)
    steps: list[LinkageStep] = []

    for step in range(n - 1):
        masked = np.where(active, row_min, np.inf)
        dmin = masked.min()
        tie_rows = np.nonzero(masked == dmin)[0]
        best_pair = None
        best_slots = None
        for i in tie_rows:
            for j in np.nonzero(D2[i] == dmin)[0]:
                a, b = int(ids[i]), int(ids[j])
                pair = (a, b) if a < b else (b, a)
                if best_pair is None or pair < best_pair:
                    best_pair = pair
                    best_slots = (int(i), int(j))
        si, sj = best_slots

        merged_size = sizes[si] + sizes[sj]
        steps.append(
            LinkageStep(
                merged_a=best_pair[0],
                merged_b=best_pair[1],
                distance=float(np.sqrt(dmin)),
                new_size=int(merged_size),
            )
        )

        others = active.copy()
        others[si] = False
        others[sj] = False
        nv = sizes[others]
        total = nv + merged_size
        updated = (
            (nv + sizes[si]) * D2[si, others]
            + (nv + sizes[sj]) * D2[sj, others]
            - nv * dmin
        ) / total
        np.maximum(updated, dmin, out=updated)
        D2[si, others] = updated
        D2[others, si] = updated

        D2[sj, :] = np.inf
        D2[:, sj] = np.inf
        active[sj] = False
        sizes[si] = merged_size
        ids[si] = n + step

        if step == n - 2:
            break
        # restore cache exactness: rows that pointed at a merged slot are
        # recomputed; others only need the new value at slot si
        other_idx = np.nonzero(others)[0]
        stale = (row_arg == si) | (row_arg == sj)
        stale[si] = True
        stale &= active
        for v in np.nonzero(stale)[0]:
            row_min[v] = D2[v].min()
            row_arg[v] = int(D2[v].argmin())
        fresh = other_idx[~stale[other_idx]]
        better = D2[fresh, si] < row_min[fresh]
        row_min[fresh[better]] = D2[fresh[better], si]
        row_arg[fresh[better]] = si
        row_min[sj] = np.inf
    return steps


def cluster(standardized_rows: np.ndarray, k: int) -> ClusterModel:
    """Ward-cluster standardized rows and cut the dendrogram to k clusters.

    Labels are ordered by descending member count (ties: smaller lowest row
    index first); centroids are per-cluster means of the input rows.
    """
    X = np.asarray(standardized_rows, dtype=float)
    if X.ndim != 2:
        raise DataError("standardized rows must form a 2-d matrix")
    n = X.shape[0]
    if n == 0:
        raise DataError("cannot cluster an empty matrix")
    if not np.isfinite(X).all():
        raise DataError("standardized rows must be finite")
    if k <= 0:
        raise DataError(f"cluster count must be positive, got {k}")
    if k > n:
        raise DataError(f"cluster count {k} exceeds row count {n}")

    steps = _full_linkage(X) if n > 1 else []

    # replay the first n - k merges to recover the k-cluster partition
    components: dict[int, list[int]] = {i: [i] for i in range(n)}
    for idx in range(n - k):
        s = steps[idx]
        members = components.pop(s.merged_a) + components.pop(s.merged_b)
        components[n + idx] = members

    groups = sorted(components.values(), key=lambda mem: (-len(mem), min(mem)))
    assignments = np.empty(n, dtype=int)
    centroids = np.empty((k, X.shape[1]), dtype=float)
    counts = []
    for label, members in enumerate(groups):
        assignments[members] = label
        centroids[label] = X[members].mean(axis=0)
        counts.append(len(members))

    return ClusterModel(
        n_main_clusters=k,
        assignments=assignments,
        centroids=centroids,
        member_counts=tuple(counts),
        linkage=tuple(steps),
    )


def nearest_cluster(point: np.ndarray, model: ClusterModel) -> tuple[int, float]:
    """Return (label, Euclidean distance) of the centroid nearest to a standardized point.

    Distance ties resolve to the lowest label.
    """
    p = np.asarray(point, dtype=float).reshape(-1)
    if p.shape[0] != model.centroids.shape[1]:
        raise DataError(
            f"point width {p.shape[0]} does not match centroid width {model.centroids.shape[1]}"
        )
    dists = np.sqrt(((model.centroids - p) ** 2).sum(axis=1))
    label = int(np.argmin(dists))
    return label, float(dists[label])


def adjusted_rand_index(labels_a: np.ndarray, labels_b: np.ndarray) -> float:
    """Adjusted Rand index between two flat partitions of the same rows."""
    a = np.asarray(labels_a).reshape(-1)
    b = np.asarray(labels_b).reshape(-1)
    if a.shape != b.shape:
        raise DataError("partitions must label the same number of rows")
    n = a.shape[0]
    if n == 0:
        raise DataError("adjusted Rand index undefined for empty partitions")

    _, a_inv = np.unique(a, return_inverse=True)
    _, b_inv = np.unique(b, return_inverse=True)
    table = np.zeros((a_inv.max() + 1, b_inv.max() + 1), dtype=np.int64)
    np.add.at(table, (a_inv, b_inv), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_cells = comb2(table.astype(float)).sum()
    sum_rows = comb2(table.sum(axis=1).astype(float)).sum()
    sum_cols = comb2(table.sum(axis=0).astype(float)).sum()
    total = comb2(float(n))

    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))

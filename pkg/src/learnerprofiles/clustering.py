"""Hard and soft clustering of learner profiles: HAC, K-means and fuzzy C-means."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import comb


def euclidean_distance(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


# ---------------------------------------------------------------------------
# agglomerative hierarchy


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple[Merge, ...]
    linkage: str

    def cut(self, k: int) -> np.ndarray:
        """Flat labels after undoing the last ``k - 1`` merges.

        Labels are numbered in order of first appearance.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise ValueError(f"k must be in 1..{n}, got {k}")
        parent = list(range(2 * n - 1))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for step, m in enumerate(self.merges[: n - k]):
            new = n + step
            parent[find(m.left)] = new
            parent[find(m.right)] = new
        roots = [find(i) for i in range(n)]
        relabel: dict[int, int] = {}
        return np.array([relabel.setdefault(r, len(relabel)) for r in roots])

    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def to_linkage_matrix(self) -> np.ndarray:
        """SciPy-style ``(n - 1, 4)`` linkage matrix."""
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float)

    def to_dot(self, labels: Optional[Sequence[str]] = None) -> str:
        labels = list(labels) if labels is not None else [str(i) for i in range(self.n_leaves)]
        lines = ["graph dendrogram {"]
        for i, name in enumerate(labels):
            lines.append(f'  n{i} [label="{name}", shape=box];')
        for step, m in enumerate(self.merges):
            node = self.n_leaves + step
            lines.append(f'  n{node} [label="{m.height:.6g}", shape=ellipse];')
            lines.append(f"  n{node} -- n{m.left};")
            lines.append(f"  n{node} -- n{m.right};")
        lines.append("}")
        return "\n".join(lines) + "\n"


_LINKAGES = ("single", "complete", "average")


def hac(points: Optional[np.ndarray] = None, linkage: str = "average",
        distances: Optional[np.ndarray] = None) -> Dendrogram:
    """Agglomerative clustering by repeated nearest-pair merging.

    Pass either ``points`` (Euclidean distances are used) or a precomputed
    symmetric ``distances`` matrix.  Ties are broken on the lowest
    ``(min id, max id)`` pair of cluster ids, where merged clusters get ids
    ``n, n + 1, ...`` in merge order.
    """
    if linkage not in _LINKAGES:
        raise ValueError(f"linkage must be one of {_LINKAGES}")
    if distances is None:
        if points is None:
            raise ValueError("pass points or distances")
        distances = pairwise_distances(points)
    d = np.array(distances, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise ValueError("hac needs at least 2 points")
    active: dict[int, int] = {i: 1 for i in range(n)}     # cluster id -> size
    dist: dict[tuple[int, int], float] = {(i, j): d[i, j] for i in range(n) for j in range(i + 1, n)}
    merges = []
    for step in range(n - 1):
        (a, b), h = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        new = n + step
        sa, sb = active.pop(a), active.pop(b)
        del dist[(a, b)]
        for c in active:
            dac = dist.pop((min(a, c), max(a, c)))
            dbc = dist.pop((min(b, c), max(b, c)))
            if linkage == "single":
                val = min(dac, dbc)
            elif linkage == "complete":
                val = max(dac, dbc)
            else:
                val = (sa * dac + sb * dbc) / (sa + sb)
            dist[(c, new)] = val
        active[new] = sa + sb
        merges.append(Merge(a, b, float(h), sa + sb))
    return Dendrogram(n, tuple(merges), linkage)


# ---------------------------------------------------------------------------
# K-means


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    n_iter: int
    converged: bool
    objective: tuple[float, ...]     # sum of squared distances after each assignment


def _objective(points, centroids, labels) -> float:
    diff = points - centroids[labels]
    return float(np.sum(diff * diff))


def kmeans(points: np.ndarray, k: int, seed: int, max_iter: int = 100) -> KMeansResult:
    """Lloyd iterations from ``k`` distinct random points as initial centroids.

    Stops when no assignment changes.  An emptied cluster is reseeded with
    the point farthest from its current centroid.
    """
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    rng = np.random.default_rng(seed)
    centroids = x[rng.choice(n, size=k, replace=False)].copy()
    labels = None
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d2 = np.sum((x[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)
        new_labels = np.argmin(d2, axis=1)
        history.append(_objective(x, centroids, new_labels))
        if labels is not None and np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = x[members].mean(axis=0)
        for j in range(k):
            if not np.any(labels == j):
                own = np.sum((x - centroids[labels]) ** 2, axis=1)
                far = int(np.argmax(own))
                centroids[j] = x[far]
                labels[far] = j
    return KMeansResult(labels, centroids, it, converged, tuple(history))


# ---------------------------------------------------------------------------
# fuzzy C-means


@dataclass(frozen=True)
class FcmResult:
    memberships: np.ndarray   # (n, c), rows sum to 1
    centers: np.ndarray
    n_iter: int
    converged: bool

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.memberships, axis=1)


def fcm_memberships(x: np.ndarray, centers: np.ndarray, m: float) -> np.ndarray:
    """Membership of each point in each cluster from its distances to the centers.

    A point lying on one or more centers belongs to them alone, in equal parts.
    """
    d = np.sqrt(np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=-1))
    p = 2.0 / (m - 1.0)
    u = np.empty_like(d)
    zero = d == 0.0
    hit = zero.any(axis=1)
    if hit.any():
        u[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    rest = ~hit
    if rest.any():
        dr = d[rest]
        ratio = dr.min(axis=1, keepdims=True) / dr       # in (0, 1], avoids overflow
        w = ratio ** p
        u[rest] = w / w.sum(axis=1, keepdims=True)
    return u


def fcm(points: np.ndarray, c: int, m: float = 2.0, beta: float = 1e-5, max_iter: int = 100,
        seed: int = 0, callback: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None) -> FcmResult:
    """Fuzzy C-means from ``c`` distinct random points as initial centers.

    Alternates membership and center updates until the largest center
    coordinate change drops below ``beta`` or ``max_iter`` iterations ran.
    ``callback(iteration, memberships, centers)`` sees every iteration.
    """
    x = np.asarray(points, dtype=float)
    n = x.shape[0]
    if not 1 <= c <= n:
        raise ValueError(f"c must be in 1..{n}, got {c}")
    if not m > 1.0:
        raise ValueError(f"fuzziness m must exceed 1, got {m}")
    rng = np.random.default_rng(seed)
    centers = x[rng.choice(n, size=c, replace=False)].copy()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        u = fcm_memberships(x, centers, m)
        um = u ** m
        new_centers = (um.T @ x) / um.sum(axis=0)[:, None]
        if callback is not None:
            callback(it, u, new_centers)
        shift = float(np.max(np.abs(new_centers - centers)))
        centers = new_centers
        if shift < beta:
            converged = True
            break
    return FcmResult(fcm_memberships(x, centers, m), centers, it, converged)


# ---------------------------------------------------------------------------
# evaluation and export


def adjusted_rand_index(labels, reference) -> float:
    labels = np.asarray(labels)
    reference = np.asarray(reference)
    if labels.shape != reference.shape:
        raise ValueError("partitions have different sizes")
    n = labels.size
    _, a = np.unique(labels, return_inverse=True)
    _, b = np.unique(reference, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    sum_cells = comb(table, 2).sum()
    sum_rows = comb(table.sum(axis=1), 2).sum()
    sum_cols = comb(table.sum(axis=0), 2).sum()
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total if total else 0.0
    maximum = (sum_rows + sum_cols) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def write_hard_clusters(fh, learners: Sequence[str], labels, header_comment: str | None = None) -> None:
    if header_comment:
        fh.write(f"# {header_comment}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("learner", "cluster"))
    for name, lab in zip(learners, labels):
        writer.writerow([name, int(lab) + 1])


def write_fuzzy_clusters(fh, learners: Sequence[str], memberships: np.ndarray,
                         header_comment: str | None = None) -> None:
    if header_comment:
        fh.write(f"# {header_comment}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("learner",) + tuple(f"cluster{j + 1}" for j in range(memberships.shape[1])) + ("cluster",))
    for name, row in zip(learners, memberships):
        writer.writerow([name] + [repr(float(v)) for v in row] + [int(np.argmax(row)) + 1])


def read_clusters(path) -> dict[str, int]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        return {row["learner"]: int(row["cluster"]) for row in reader}

"""Learner-to-learner similarity over MTSLP eigenstructures: PCA factor and Eros."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .mtslp import EigenDecomposition, Mtslp, principal_components


class NotEnoughLearners(ValueError):
    pass


@dataclass(frozen=True)
class ErosWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"Eros weights must be nonnegative and sum to 1, got {w}")


def pcas(va: np.ndarray, vb: np.ndarray, k: int = 5, normalize: str = "k") -> float:
    """Sum of squared cosines between the first ``k`` components of each basis.

    ``normalize="k"`` divides by ``k`` so a basis compared with itself scores
    1 for every ``k``; ``normalize="n"`` divides by the full dimension.
    """
    n = va.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    cos = va[:, :k].T @ vb[:, :k]
    # sorted summation keeps pcas(a, b) == pcas(b, a) bit for bit
    total = float(np.sum(np.sort((cos * cos).ravel())))
    return total / (k if normalize == "k" else n)


def _normalized(values: np.ndarray) -> np.ndarray:
    values = np.clip(np.asarray(values, dtype=float), 0.0, None)
    s = values.sum()
    if s <= 0.0:
        return np.full(values.shape, 1.0 / values.size)
    return values / s


def eros_weights(eigenvalues: Sequence[np.ndarray], raw: bool = False) -> ErosWeights:
    """Aggregate per-learner eigenvalue vectors into one weight vector.

    By default each learner's (descending) eigenvalues are first normalized
    to sum 1 so no single high-variance learner dominates; ``raw=True``
    averages the eigenvalues as they are.
    """
    if len(eigenvalues) == 0:
        raise ValueError("no eigenvalue vectors to aggregate")
    stacked = np.vstack([np.clip(np.asarray(ev, dtype=float), 0.0, None) for ev in eigenvalues])
    if not raw:
        stacked = np.vstack([_normalized(row) for row in stacked])
    w = _normalized(stacked.mean(axis=0))
    # sum exactly 1 up to rounding of the final division
    w = w / w.sum()
    return ErosWeights(w)


def eros(va: np.ndarray, vb: np.ndarray, weights: ErosWeights | np.ndarray) -> float:
    w = weights.w if isinstance(weights, ErosWeights) else np.asarray(weights, dtype=float)
    cos = np.abs(np.einsum("ij,ij->j", va, vb))
    return float(np.dot(w, np.minimum(cos, 1.0)))


@dataclass(frozen=True)
class SimilarityMatrix:
    learners: tuple[str, ...]
    values: np.ndarray
    method: str
    excluded: Mapping[str, str] = field(default_factory=dict)
    weights: Optional[np.ndarray] = None

    def to_csv(self, fh, header_comment: str | None = None) -> None:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("learner",) + self.learners)
        for name, row in zip(self.learners, self.values):
            writer.writerow([name] + [repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path, method: str = "unknown") -> "SimilarityMatrix":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            header = next(reader)
            rows = [r for r in reader]
        learners = tuple(header[1:])
        if [r[0] for r in rows] != list(learners):
            raise ValueError(f"{path}: row labels do not match the header")
        values = np.array([[float(x) for x in r[1:]] for r in rows], dtype=float)
        return cls(learners, values, method)


def similarity_matrix(mtslps: Sequence[Mtslp], method: str = "eros", k: int = 5,
                      pcas_normalize: str = "k", raw_eigenvalue_weights: bool = False,
                      strict: bool = True, weights: ErosWeights | None = None) -> SimilarityMatrix:
    """Pairwise similarity of every eligible learner.

    Learners with fewer than 2 sessions are excluded.  With ``strict`` set,
    learners whose covariance is identically zero are excluded too; otherwise
    they keep the identity basis with zero eigenvalues.
    """
    if method not in ("eros", "pcas"):
        raise ValueError(f"unknown similarity method {method!r}")
    excluded: dict[str, str] = {}
    decomps: dict[str, EigenDecomposition] = {}
    for m in mtslps:
        if not m.sufficient:
            excluded[m.learner] = f"only {m.n_sessions} session(s)"
            continue
        dec = principal_components(m)
        if strict and not np.any(dec.eigenvalues > 0):
            excluded[m.learner] = "zero covariance (identical profile every session)"
            continue
        decomps[m.learner] = dec
    learners = tuple(decomps)
    if len(learners) < 2:
        raise NotEnoughLearners(f"need at least 2 eligible learners, got {len(learners)}; excluded: {excluded}")

    if method == "eros" and weights is None:
        weights = eros_weights([decomps[l].eigenvalues for l in learners], raw=raw_eigenvalue_weights)

    def score(a: EigenDecomposition, b: EigenDecomposition) -> float:
        if method == "eros":
            return eros(a.eigenvectors, b.eigenvectors, weights)
        return pcas(a.eigenvectors, b.eigenvectors, k, pcas_normalize)

    n = len(learners)
    values = np.zeros((n, n))
    for i in range(n):
        values[i, i] = score(decomps[learners[i]], decomps[learners[i]])
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = score(decomps[learners[i]], decomps[learners[j]])
    return SimilarityMatrix(learners, values, method, excluded,
                            None if weights is None else np.asarray(weights.w))

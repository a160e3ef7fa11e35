"""Per-learner multivariate time series of profile indices and their eigenstructure."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fuzzy import INDEX_NAMES, FuzzyProfileVector


class TooFewSessions(ValueError):
    pass


class NotSymmetric(ValueError):
    pass


@dataclass(frozen=True)
class Mtslp:
    learner: str
    sessions: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(INDEX_NAMES):
            raise ValueError(f"expected an (n, {len(INDEX_NAMES)}) matrix, got {self.matrix.shape}")
        if self.matrix.shape[0] != len(self.sessions):
            raise ValueError("one session id per row required")

    @property
    def n_sessions(self) -> int:
        return self.matrix.shape[0]

    @property
    def sufficient(self) -> bool:
        """At least two sessions, the minimum for a covariance."""
        return self.n_sessions >= 2


def build_mtslp(learner: str, vectors: Sequence[tuple[str, FuzzyProfileVector]]) -> Mtslp:
    """Stack ``(session_id, vector)`` pairs, in the given session order, into an MTSLP.

    Sessions a learner missed are simply absent from ``vectors``.
    """
    if not vectors:
        raise ValueError(f"no sessions for learner {learner!r}")
    sessions = tuple(sid for sid, _ in vectors)
    matrix = np.vstack([v.as_array() for _, v in vectors])
    return Mtslp(learner, sessions, matrix)


def covariance(m: Mtslp | np.ndarray) -> np.ndarray:
    x = m.matrix if isinstance(m, Mtslp) else np.asarray(m, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise TooFewSessions(f"covariance needs at least 2 sessions, got {n}")
    centered = x - x.mean(axis=0)
    c = centered.T @ centered / (n - 1)
    return (c + c.T) / 2.0


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray     # descending
    eigenvectors: np.ndarray    # columns aligned with eigenvalues
    sweeps: int = 0


def sym_eigendecompose(c: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100,
                       psd: bool = False) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Rotations are applied until the off-diagonal Frobenius norm drops below
    ``tol`` (relative to the Frobenius norm when that exceeds 1).  Eigenpairs
    are sorted by descending eigenvalue and each eigenvector is signed so its
    first nonzero component is positive.  With ``psd`` set, eigenvalues in
    ``[-1e-12, 0)`` are reported as 0.
    """
    a = np.array(c, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise NotSymmetric(f"not a square matrix: {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12:
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = cs * ap - sn * aq
                a[:, q] = sn * ap + cs * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = cs * ap - sn * aq
                a[q, :] = sn * ap + cs * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = cs * vp - sn * v[:, q]
                v[:, q] = sn * vp + cs * v[:, q]
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for j in range(n):
        nz = np.flatnonzero(np.abs(v[:, j]) > 1e-12)
        if nz.size and v[nz[0], j] < 0:
            v[:, j] = -v[:, j]
    if psd:
        w = np.where((w < 0) & (w >= -1e-12), 0.0, w)
    return EigenDecomposition(w, v, sweeps)


def principal_components(m: Mtslp) -> EigenDecomposition:
    """Covariance eigenstructure of one learner's MTSLP."""
    return sym_eigendecompose(covariance(m), psd=True)


def write_mtslp_csv(m: Mtslp, fh, header_comment: str | None = None) -> None:
    if header_comment:
        fh.write(f"# {header_comment}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("session",) + INDEX_NAMES)
    for sid, row in zip(m.sessions, m.matrix):
        writer.writerow([sid] + [repr(float(x)) for x in row])


def read_mtslp_csv(path, learner: str) -> Mtslp:
    sessions, rows = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if tuple(header[1:]) != INDEX_NAMES:
            raise ValueError(f"{path}: unexpected MTSLP header {header}")
        for row in reader:
            sessions.append(row[0])
            rows.append([float(x) for x in row[1:]])
    return Mtslp(learner, tuple(sessions), np.array(rows, dtype=float).reshape(-1, len(INDEX_NAMES)))

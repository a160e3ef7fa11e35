"""End-to-end glue: simulated cohorts, per-session profiling and per-learner features."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .acts import SessionLog
from .coefficients import ProfileCoefficients, session_coefficients
from .fsm import ARCHETYPES, generate_session
from .fuzzy import INDEX_NAMES, INDEX_OF, FisSpec, FuzzyProfileVector, evaluate_learner, load_fis_set
from .mtslp import Mtslp, build_mtslp


def provenance(config: Mapping) -> str:
    """One-line provenance comment: tool version plus a hash of the effective config."""
    blob = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return f"learnerprofiles {__version__} config={hashlib.sha256(blob).hexdigest()[:16]}"


# ---------------------------------------------------------------------------
# simulation


@dataclass(frozen=True)
class Cohort:
    logs: tuple[SessionLog, ...]
    archetypes: Mapping[str, str]
    groups: tuple[tuple[str, ...], ...]
    leaders: tuple[str, ...]

    def truth_manifest(self) -> dict:
        return {"archetypes": dict(self.archetypes),
                "groups": [{"members": list(g), "leader": l} for g, l in zip(self.groups, self.leaders)]}


def simulate_cohort(seed: int, n_learners: int = 24, group_size: int = 4, n_sessions: int = 8,
                    mix: Sequence[str] = ("organizer", "verifier", "independent"),
                    length_budget: int = 60, absence: float = 0.0,
                    groups: Optional[Sequence[Mapping]] = None, rotate_leader: bool = True) -> Cohort:
    """Simulate every session of a cohort of groups.

    Without explicit ``groups``, learners ``L01..`` get archetypes from
    ``mix`` in equal shares, are shuffled into groups of ``group_size`` and
    the first member of each group is its nominal leader.  With
    ``rotate_leader`` the chair passes round the group, session by session,
    starting from the nominal leader.  Explicit groups are mappings
    ``{"members": [...], "leader": ..., "archetypes": {member: archetype}}``.
    Each non-leader member misses a session with probability ``absence``.
    """
    rng = np.random.default_rng(seed)
    if groups is None:
        bad = [a for a in mix if a not in ARCHETYPES]
        if bad or not mix:
            raise ValueError(f"invalid archetype mix {list(mix)}")
        if n_learners < 1 or group_size < 1:
            raise ValueError("need at least one learner and a positive group size")
        width = len(str(n_learners))
        names = [f"L{i + 1:0{max(2, width)}d}" for i in range(n_learners)]
        archetypes = {name: mix[i % len(mix)] for i, name in enumerate(names)}
        order = rng.permutation(n_learners)
        shuffled = [names[i] for i in order]
        members = [tuple(shuffled[i:i + group_size]) for i in range(0, n_learners, group_size)]
        leaders = [g[0] for g in members]
    else:
        archetypes, members, leaders = {}, [], []
        for g in groups:
            members.append(tuple(g["members"]))
            leaders.append(g["leader"])
            archetypes.update(g["archetypes"])
    width = len(str(n_sessions))
    logs = []
    for gi, (roster, leader) in enumerate(zip(members, leaders)):
        for si in range(n_sessions):
            chair = roster[(roster.index(leader) + si) % len(roster)] if rotate_leader else leader
            present = tuple(m for m in roster if m == chair or rng.random() >= absence)
            session_seed = int(rng.integers(2**32))
            sid = f"g{gi + 1:02d}-s{si + 1:0{max(2, width)}d}"
            logs.append(generate_session(session_seed, present, chair, archetypes, length_budget, sid))
    return Cohort(tuple(logs), archetypes, tuple(members), tuple(leaders))


# ---------------------------------------------------------------------------
# profiling


@dataclass(frozen=True)
class SessionProfile:
    session_id: str
    learner: str
    coefficients: ProfileCoefficients
    vector: FuzzyProfileVector

    def as_row(self) -> dict:
        row = {"session": self.session_id, "learner": self.learner}
        row.update(self.coefficients.as_row())
        row.update(dict(zip(INDEX_NAMES, self.vector.as_array().tolist())))
        for fis, pct in self.vector.percentages.items():
            for label, v in pct.items():
                row[f"pct_{fis}_{label}"] = v
        return row


def profile_sessions(logs: Iterable[SessionLog],
                     fis_set: Optional[Mapping[str, FisSpec]] = None) -> list[SessionProfile]:
    if fis_set is None:
        fis_set = load_fis_set("paper-default")
    out = []
    for log in logs:
        for learner, coeffs in session_coefficients(log).items():
            out.append(SessionProfile(log.session_id, learner, coeffs, evaluate_learner(coeffs, fis_set)))
    return out


def learner_mtslps(profiles: Sequence[SessionProfile]) -> dict[str, Mtslp]:
    """One MTSLP per learner, rows in the order sessions first appear in ``profiles``."""
    per: dict[str, list[tuple[str, FuzzyProfileVector]]] = {}
    for p in profiles:
        per.setdefault(p.learner, []).append((p.session_id, p.vector))
    return {learner: build_mtslp(learner, rows) for learner, rows in sorted(per.items())}


def mean_features(mtslps: Mapping[str, Mtslp]) -> tuple[tuple[str, ...], np.ndarray]:
    learners = tuple(sorted(mtslps))
    return learners, np.vstack([mtslps[l].matrix.mean(axis=0) for l in learners])


def profile_columns() -> list[str]:
    cols = ["session", "learner", "ind_ort", "ind_dec"]
    cols += [f"coef_int_{p}" for p in ("organizer", "verifier", "seeker", "independent")]
    cols += [f"coef_reac_{p}" for p in ("organizer", "verifier", "seeker", "independent")]
    cols += ["ir", *INDEX_NAMES]
    return cols


def write_profiles_csv(profiles: Sequence[SessionProfile], fh, header_comment: str | None = None) -> None:
    if header_comment:
        fh.write(f"# {header_comment}\n")
    if not profiles:
        csv.writer(fh, lineterminator="\n").writerow(profile_columns())
        return
    first = profiles[0].as_row()
    columns = profile_columns() + [c for c in first if c.startswith("pct_")]
    writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for p in profiles:
        row = p.as_row()
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def read_profile_features(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Session-mean index vector per learner from a profiles CSV."""
    per: dict[str, list[list[float]]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            per.setdefault(row["learner"], []).append([float(row[c]) for c in INDEX_NAMES])
    learners = tuple(sorted(per))
    return learners, np.vstack([np.mean(per[l], axis=0) for l in learners])


__all__ = [
    "Cohort", "SessionProfile", "simulate_cohort", "profile_sessions", "learner_mtslps",
    "mean_features", "write_profiles_csv", "read_profile_features", "provenance", "INDEX_OF",
]

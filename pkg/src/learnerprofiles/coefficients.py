"""Heuristic profile coefficients computed from act tallies.

These are the crisp inputs of the fuzzy systems.  Every degenerate ratio is
given a value inside the fuzzy universes: [0, 2] for the orientation and
decision indices, [0, 1] for the intervention and reaction coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .acts import PROFILES, ActCounts, SessionLog, tally_acts

INDEX_MAX = 2.0


class ZeroGroupActivity(ValueError):
    pass


@dataclass(frozen=True)
class ProfileCoefficients:
    ind_ort: float
    ind_dec: float
    coef_int: Mapping[str, float]
    coef_reac: Mapping[str, float]
    ir: float

    def as_row(self) -> dict:
        row = {"ind_ort": self.ind_ort, "ind_dec": self.ind_dec}
        for p in PROFILES:
            row[f"coef_int_{p}"] = self.coef_int[p]
        for p in PROFILES:
            row[f"coef_reac_{p}"] = self.coef_reac[p]
        row["ir"] = self.ir
        return row


def _index(pos: int, neg: int) -> float:
    if neg == 0:
        return INDEX_MAX if pos > 0 else 1.0
    return min(pos / neg, INDEX_MAX)


def orientation_index(counts: ActCounts) -> float:
    return _index(counts.orientation_pos, counts.orientation_neg)


def decision_index(counts: ActCounts) -> float:
    return _index(counts.decision_pos, counts.decision_neg)


def intervention_coefficient(counts: ActCounts, profile: str) -> float:
    if counts.total == 0:
        return 0.0
    return counts.interventions[profile] / counts.total


def reaction_coefficient(counts: ActCounts, profile: str) -> float:
    """Peer reactions credited to ``profile`` per profile intervention, clamped to 1."""
    denom = counts.interventions[profile]
    if denom == 0:
        return 0.0
    return min(counts.reactions[profile] / denom, 1.0)


def intervention_ratio(counts: ActCounts, group_avg: float) -> float:
    if group_avg <= 0:
        raise ZeroGroupActivity("group average participation must be positive")
    return counts.total / group_avg


def profile_coefficients(counts: ActCounts, group_avg: float) -> ProfileCoefficients:
    return ProfileCoefficients(
        ind_ort=orientation_index(counts),
        ind_dec=decision_index(counts),
        coef_int={p: intervention_coefficient(counts, p) for p in PROFILES},
        coef_reac={p: reaction_coefficient(counts, p) for p in PROFILES},
        ir=intervention_ratio(counts, group_avg),
    )


def session_coefficients(log: SessionLog) -> dict[str, ProfileCoefficients]:
    """Coefficients for every learner present (on the roster) in ``log``."""
    tallies = {learner: tally_acts(log, learner) for learner in log.roster}
    group_avg = sum(c.total for c in tallies.values()) / len(tallies)
    return {learner: profile_coefficients(c, group_avg) for learner, c in tallies.items()}

"""Collaborative-session protocol: validation and synthetic session generation.

The protocol, as run by a structured chat tool:

* the leader opens the session by exposing the problem (a ``P`` intervention);
* round table: every other present member, in roster order, takes one turn
  of one or more acts (``S`` to pass).  Members may reply to acts of the
  current round.  A ``P`` here is an opinion and does not open a vote;
* the leader closes the round table by speaking, and concludes with a ``P``.
  Replying to a member's round-table ``P`` adopts that proposal, which makes
  its author the initiator; otherwise the leader is the initiator;
* evaluation: the other members, in roster order, answer the proposal with
  ``A`` (approve), ``D`` (disapprove, opens a new round table) or ``E``
  (ask the initiator for clarification);
* the initiator answers a clarification request with ``C`` (decline),
  ``E`` or ``M``, after which the requester resumes the evaluation;
* unanimous approval solves the problem.  Under time pressure the leader may
  adopt the pending proposal with a ``P`` record carrying the timeout marker.

All transition logic lives in :func:`fsm_step`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .acts import A, C, D, E, M, P, S, SessionLog, SpeechAct, SpeechActRecord

ARCHETYPES = ("organizer", "verifier", "seeker", "independent")


class Phase(str, Enum):
    EXPOSITION = "Exposition"
    ROUND_TABLE = "RoundTable"
    LEADER_CONCLUSION = "LeaderConclusion"
    EVALUATION = "Evaluation"
    CLARIFICATION_REQUESTED = "ClarificationRequested"
    CLARIFICATION_RESPONSE = "ClarificationResponse"
    SOLVED = "Solved"
    TIMEOUT_ADOPTED = "TimeoutAdopted"

    @property
    def terminal(self) -> bool:
        return self in (Phase.SOLVED, Phase.TIMEOUT_ADOPTED)


_PENDING_PHASES = (Phase.EVALUATION, Phase.CLARIFICATION_REQUESTED, Phase.CLARIFICATION_RESPONSE)


@dataclass(frozen=True)
class SessionState:
    state: Phase = Phase.EXPOSITION
    pending_proposal: Optional[int] = None
    turn: Optional[str] = None
    round_start: Optional[int] = None
    initiator: Optional[str] = None
    evaluators: tuple[str, ...] = ()
    request: Optional[int] = None

    def __post_init__(self):
        if (self.pending_proposal is not None) != (self.state in _PENDING_PHASES):
            raise ValueError(f"pending_proposal must be set exactly in evaluation phases, got {self}")


@dataclass(frozen=True)
class SessionContext:
    roster: tuple[str, ...]
    leader: str
    records: Mapping[int, SpeechActRecord]

    @classmethod
    def of(cls, log: SessionLog) -> "SessionContext":
        return cls(log.roster, log.leader, log.by_seq())

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(m for m in self.roster if m != self.leader)


class IllegalTransition(Exception):
    def __init__(self, state: SessionState, record: SpeechActRecord, reason: str):
        self.state = state
        self.record = record
        self.reason = reason
        super().__init__(
            f"seq {record.seq}: {record.actor} {record.act.value} illegal in {state.state.value}: {reason}")


@dataclass(frozen=True)
class Finding:
    seq: Optional[int]
    state: str
    act: Optional[str]
    actor: Optional[str]
    reason: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "state": self.state, "act": self.act,
                "actor": self.actor, "reason": self.reason}


@dataclass(frozen=True)
class ValidationReport:
    session_id: str
    final_state: Phase
    findings: tuple[Finding, ...]

    @property
    def conformant(self) -> bool:
        return not self.findings and self.final_state.terminal

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "final_state": self.final_state.value,
                "conformant": self.conformant, "findings": [f.to_dict() for f in self.findings]}


def _reply_target(rec: SpeechActRecord, ctx: SessionContext) -> Optional[SpeechActRecord]:
    if rec.reply_to is None:
        return None
    return ctx.records.get(rec.reply_to)


def _check_reply_in_round(state: SessionState, rec: SpeechActRecord, ctx: SessionContext):
    if rec.reply_to is None:
        return
    if rec.reply_to >= rec.seq or rec.reply_to not in ctx.records:
        raise IllegalTransition(state, rec, "reply_to does not reference an earlier record")
    if rec.reply_to < state.round_start:
        raise IllegalTransition(state, rec, "reply_to references a record outside the current round")


def _open_evaluation(state: SessionState, rec: SpeechActRecord, ctx: SessionContext) -> SessionState:
    target = _reply_target(rec, ctx)
    if rec.reply_to is None:
        initiator, pending = ctx.leader, rec.seq
    elif (target is not None and rec.reply_to < rec.seq and rec.reply_to >= state.round_start
          and target.act is P and target.actor != ctx.leader and target.reply_to is None):
        initiator, pending = target.actor, target.seq
    else:
        raise IllegalTransition(state, rec, "a conclusion may only adopt a member proposal of the current round")
    evaluators = tuple(m for m in ctx.roster if m != initiator)
    if not evaluators:
        return SessionState(Phase.SOLVED)
    return SessionState(Phase.EVALUATION, pending_proposal=pending, turn=evaluators[0],
                        round_start=state.round_start, initiator=initiator, evaluators=evaluators)


def _conclusion_step(state: SessionState, rec: SpeechActRecord, ctx: SessionContext) -> SessionState:
    if rec.actor != ctx.leader:
        raise IllegalTransition(state, rec, "only the leader concludes")
    if rec.timeout:
        raise IllegalTransition(state, rec, "timeout outside evaluation")
    if rec.act is P:
        return _open_evaluation(state, rec, ctx)
    if rec.act in (E, M):
        _check_reply_in_round(state, rec, ctx)
        return replace(state, state=Phase.LEADER_CONCLUSION, turn=ctx.leader)
    raise IllegalTransition(state, rec, "the leader concludes with notes (E, M) and a proposal (P)")


def _evaluation_step(state: SessionState, rec: SpeechActRecord, ctx: SessionContext) -> SessionState:
    if rec.timeout:
        if rec.actor == ctx.leader and rec.act is P and rec.reply_to == state.pending_proposal:
            return SessionState(Phase.TIMEOUT_ADOPTED)
        raise IllegalTransition(state, rec, "timeout must be a leader P adopting the pending proposal")
    if rec.actor != state.turn:
        raise IllegalTransition(state, rec, f"out of turn, expected {state.turn}")
    if rec.reply_to != state.pending_proposal:
        raise IllegalTransition(state, rec, "evaluation acts must reply to the pending proposal")
    if rec.act is A:
        idx = state.evaluators.index(rec.actor) + 1
        if idx == len(state.evaluators):
            return SessionState(Phase.SOLVED)
        return replace(state, state=Phase.EVALUATION, turn=state.evaluators[idx], request=None)
    if rec.act is D:
        return SessionState(Phase.ROUND_TABLE, round_start=rec.seq)
    if rec.act is E:
        return replace(state, state=Phase.CLARIFICATION_REQUESTED, turn=state.initiator, request=rec.seq)
    raise IllegalTransition(state, rec, "evaluators answer with A, D or E")


def _round_table_step(state: SessionState, rec: SpeechActRecord, ctx: SessionContext) -> SessionState:
    members = ctx.members
    if rec.timeout:
        raise IllegalTransition(state, rec, "timeout outside evaluation")
    if rec.actor == ctx.leader:
        if state.turn != (members[-1] if members else None):
            raise IllegalTransition(state, rec, "the leader spoke before every member had a turn")
        return _conclusion_step(replace(state, state=Phase.LEADER_CONCLUSION, turn=ctx.leader), rec, ctx)
    if rec.actor not in members:
        raise IllegalTransition(state, rec, "actor not in roster")
    pos = -1 if state.turn is None else members.index(state.turn)
    if rec.actor != state.turn and (pos + 1 >= len(members) or rec.actor != members[pos + 1]):
        raise IllegalTransition(state, rec, "out of turn")
    _check_reply_in_round(state, rec, ctx)
    return replace(state, turn=rec.actor)


def fsm_step(state: SessionState, record: SpeechActRecord, ctx: SessionContext) -> SessionState:
    """Advance the protocol by one record.  Raises :class:`IllegalTransition`."""
    if state.state.terminal:
        raise IllegalTransition(state, record, "session already terminated")
    if record.actor not in ctx.roster:
        raise IllegalTransition(state, record, "actor not in roster")

    if state.state is Phase.EXPOSITION:
        if record.actor != ctx.leader or record.act is not P or record.reply_to is not None or record.timeout:
            raise IllegalTransition(state, record, "the leader must open with a P intervention")
        if not ctx.members:
            return SessionState(Phase.LEADER_CONCLUSION, turn=ctx.leader, round_start=record.seq)
        return SessionState(Phase.ROUND_TABLE, round_start=record.seq)

    if state.state is Phase.ROUND_TABLE:
        return _round_table_step(state, record, ctx)

    if state.state is Phase.LEADER_CONCLUSION:
        return _conclusion_step(state, record, ctx)

    if state.state is Phase.EVALUATION:
        return _evaluation_step(state, record, ctx)

    if state.state is Phase.CLARIFICATION_REQUESTED:
        if record.timeout:
            raise IllegalTransition(state, record, "timeout while a clarification is requested")
        if record.actor != state.initiator:
            raise IllegalTransition(state, record, f"only the initiator {state.initiator} may answer")
        if record.reply_to != state.request:
            raise IllegalTransition(state, record, "the answer must reply to the clarification request")
        requester = ctx.records[state.request].actor
        if record.act is C:
            return replace(state, state=Phase.EVALUATION, turn=requester)
        if record.act in (E, M):
            return replace(state, state=Phase.CLARIFICATION_RESPONSE, turn=requester)
        raise IllegalTransition(state, record, "the initiator answers with C, E or M")

    if state.state is Phase.CLARIFICATION_RESPONSE:
        if (record.actor == state.initiator and not record.timeout and record.act in (E, M)
                and record.reply_to == state.request):
            return state
        return _evaluation_step(state, record, ctx)

    raise AssertionError(f"unhandled phase {state.state}")


def validate_session(log: SessionLog) -> ValidationReport:
    """Run the protocol over ``log``; illegal records are reported and skipped."""
    ctx = SessionContext.of(log)
    state = SessionState()
    findings = []
    prev_seq = None
    for rec in log.records:
        if prev_seq is not None and rec.seq <= prev_seq:
            findings.append(Finding(rec.seq, state.state.value, rec.act.value, rec.actor,
                                    "seq not strictly increasing"))
        prev_seq = rec.seq
        try:
            state = fsm_step(state, rec, ctx)
        except IllegalTransition as exc:
            findings.append(Finding(rec.seq, state.state.value, rec.act.value, rec.actor, exc.reason))
    if not state.state.terminal:
        findings.append(Finding(None, state.state.value, None, None, "session did not reach a terminal state"))
    return ValidationReport(log.session_id, state.state, tuple(findings))


def reports_to_json(reports: Sequence[ValidationReport]) -> str:
    return json.dumps({"conformant": all(r.conformant for r in reports),
                       "sessions": [r.to_dict() for r in reports]}, indent=2)


# ---------------------------------------------------------------------------
# generator


@dataclass(frozen=True)
class ArchetypeBehavior:
    turn_volume: tuple[int, int]            # inclusive range of own acts per round-table turn
    acts: Mapping[SpeechAct, float]         # round-table intervention distribution
    peer_reaction: float                    # chance a later speaker replies to one of its acts
    responsiveness: float                   # scales its own chance of replying to peers
    peer_acts: Mapping[SpeechAct, float]    # what peers reply with
    approve: float                          # chance its proposals are approved by an evaluator
    ask: float                              # chance it asks for clarification as an evaluator
    answer: Mapping[SpeechAct, float]       # how it answers clarification requests


BEHAVIORS = {
    "organizer": ArchetypeBehavior((2, 3), {P: 0.6, M: 0.2, A: 0.15, E: 0.05}, 0.7, 1.0, {A: 0.65, M: 0.35},
                                   0.85, 0.05, {M: 0.6, E: 0.4}),
    "verifier": ArchetypeBehavior((2, 3), {A: 0.35, M: 0.35, D: 0.2, E: 0.1}, 0.6, 0.6, {S: 0.5, C: 0.5},
                                  0.6, 0.1, {M: 0.7, E: 0.3}),
    "seeker": ArchetypeBehavior((1, 1), {E: 0.85, P: 0.05, A: 0.1}, 0.75, 0.8, {M: 1.0},
                                0.5, 0.6, {C: 0.5, E: 0.5}),
    "independent": ArchetypeBehavior((1, 2), {S: 0.9, A: 0.1}, 0.6, 0.15, {S: 0.5, C: 0.5},
                                     0.3, 0.02, {C: 0.8, E: 0.2}),
}


def _pick(rng: np.random.Generator, dist: Mapping[SpeechAct, float]) -> SpeechAct:
    acts = list(dist)
    probs = np.array([dist[a] for a in acts], dtype=float)
    return acts[int(rng.choice(len(acts), p=probs / probs.sum()))]


def generate_session(seed: int, roster: Sequence[str], leader: str, archetype_mix: Mapping[str, str],
                     length_budget: int = 60, session_id: str = "s1",
                     max_clarifications: int = 2) -> SessionLog:
    """Generate one protocol-conformant session with archetype-biased behavior.

    ``seed`` fixes all randomness.  Once ``length_budget`` records have been
    emitted the leader adopts the next pending proposal by timeout.
    """
    roster = tuple(roster)
    if not roster:
        raise ValueError("roster is empty")
    if leader not in roster:
        raise ValueError(f"leader {leader!r} not in roster")
    unknown = {a for a in archetype_mix.values() if a not in BEHAVIORS}
    if unknown:
        raise ValueError(f"unknown archetypes {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    beh = {m: BEHAVIORS[archetype_mix.get(m, "verifier")] for m in roster}
    members = tuple(m for m in roster if m != leader)
    records: list[SpeechActRecord] = []

    def emit(actor, act, reply_to=None, timeout=False) -> SpeechActRecord:
        rec = SpeechActRecord(session_id, len(records) + 1, actor, act, reply_to, timeout)
        records.append(rec)
        return rec

    emit(leader, P)
    while True:
        round_recs: list[SpeechActRecord] = []
        for m in members:
            # first react to earlier acts of this round, then intervene
            for target in list(round_recs):
                if target.actor == m or target.reply_to is not None:
                    continue
                tb = beh[target.actor]
                if target.act is S and archetype_mix.get(target.actor) != "independent":
                    continue
                if rng.random() < tb.peer_reaction * beh[m].responsiveness:
                    round_recs.append(emit(m, _pick(rng, tb.peer_acts), target.seq))
            lo, hi = beh[m].turn_volume
            n_own = int(rng.integers(lo, hi + 1))
            for _ in range(n_own):
                round_recs.append(emit(m, _pick(rng, beh[m].acts)))

        member_props = [r for r in round_recs if r.act is P and r.reply_to is None]
        if member_props and rng.random() < 0.8:
            weights = np.array([1.0 + 2.0 * (archetype_mix.get(r.actor) == "organizer") for r in member_props])
            chosen = member_props[int(rng.choice(len(member_props), p=weights / weights.sum()))]
            conclusion = emit(leader, P, chosen.seq)
            pending, initiator = chosen.seq, chosen.actor
        else:
            if rng.random() < 0.3:
                emit(leader, M)
            conclusion = emit(leader, P)
            pending, initiator = conclusion.seq, leader

        evaluators = [m for m in roster if m != initiator]
        if not evaluators:
            break
        if len(records) >= length_budget:
            emit(leader, P, pending, timeout=True)
            break
        ib = beh[initiator]
        disapproved = False
        for ev in evaluators:
            asked = 0
            while asked < max_clarifications and rng.random() < beh[ev].ask:
                req = emit(ev, E, pending)
                emit(initiator, _pick(rng, ib.answer), req.seq)
                asked += 1
            if rng.random() < ib.approve or len(records) >= length_budget:
                emit(ev, A, pending)
            else:
                emit(ev, D, pending)
                disapproved = True
                break
        if not disapproved:
            break
    return SessionLog(session_id, tuple(records), roster, leader)


def shuffle_records(log: SessionLog, rng: np.random.Generator, max_draws: int = 1000) -> SessionLog:
    """Permute the record order of ``log``.

    Seq numbers are reassigned by position and reply links follow the records
    they point at, so a reply may end up preceding its target.  Permutations
    that reproduce the original sequence (swapping interchangeable records)
    are redrawn, up to ``max_draws`` times.
    """
    n = len(log.records)
    original = [(r.actor, r.act, r.reply_to, r.timeout) for r in log.records]
    for _ in range(max_draws):
        perm = rng.permutation(n)
        old_to_new = {log.records[old].seq: new + 1 for new, old in enumerate(perm)}
        shuffled = []
        for new, old in enumerate(perm):
            r = log.records[old]
            reply = None if r.reply_to is None else old_to_new[r.reply_to]
            shuffled.append(SpeechActRecord(r.session_id, new + 1, r.actor, r.act, reply, r.timeout))
        if [(r.actor, r.act, r.reply_to, r.timeout) for r in shuffled] != original:
            break
    return SessionLog(log.session_id, tuple(shuffled), log.roster, log.leader)

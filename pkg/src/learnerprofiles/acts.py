"""Speech-act vocabulary, the hybrid interaction grid and session-log ingestion.

Session logs are flat tables with the columns ``session_id, seq, actor, act,
reply_to`` (plus an optional ``timeout`` marker).  Rosters and leaders come
from a sidecar manifest mapping each session id to
``{"roster": [...], "leader": ...}``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

PROFILES = ("organizer", "verifier", "seeker", "independent")

CSV_COLUMNS = ("session_id", "seq", "actor", "act", "reply_to")


class SpeechAct(str, Enum):
    PROPOSE = "P"
    APPROVE = "A"
    DISAPPROVE = "D"
    DECLINE = "C"
    ELUCIDATE = "E"
    STAND_MUTE = "S"
    DEMONSTRATE = "M"

    @classmethod
    def parse(cls, token: str) -> "SpeechAct":
        try:
            return cls(token.strip())
        except ValueError:
            raise UnknownActCode(f"unknown act code {token!r}") from None

    def __str__(self) -> str:
        return self.value


P, A, D, C, E, S, M = (SpeechAct.PROPOSE, SpeechAct.APPROVE, SpeechAct.DISAPPROVE,
                       SpeechAct.DECLINE, SpeechAct.ELUCIDATE, SpeechAct.STAND_MUTE,
                       SpeechAct.DEMONSTRATE)


class LogError(ValueError):
    """Base class for session-log ingestion failures."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MalformedRow(LogError):
    pass


class UnknownActCode(LogError):
    pass


class DuplicateSeq(LogError):
    pass


class DanglingReplyTo(LogError):
    pass


class ActorNotInRoster(LogError):
    pass


@dataclass(frozen=True)
class SpeechActRecord:
    session_id: str
    seq: int
    actor: str
    act: SpeechAct
    reply_to: Optional[int] = None
    timeout: bool = False

    @property
    def is_intervention(self) -> bool:
        return self.reply_to is None


@dataclass(frozen=True)
class SessionLog:
    session_id: str
    records: tuple[SpeechActRecord, ...]
    roster: tuple[str, ...]
    leader: str

    def __post_init__(self):
        if self.leader not in self.roster:
            raise ActorNotInRoster(f"leader {self.leader!r} not in roster of session {self.session_id!r}")

    def by_seq(self) -> dict[int, SpeechActRecord]:
        return {r.seq: r for r in self.records}


@dataclass(frozen=True)
class ProfileActs:
    intervention_pos: frozenset = frozenset()
    intervention_neg: frozenset = frozenset()
    reaction_pos: frozenset = frozenset()
    reaction_neg: frozenset = frozenset()

    @property
    def intervention(self) -> frozenset:
        return self.intervention_pos | self.intervention_neg

    @property
    def reaction(self) -> frozenset:
        return self.reaction_pos | self.reaction_neg


@dataclass(frozen=True)
class GridTable:
    profiles: Mapping[str, ProfileActs]
    orientation_pos: frozenset
    orientation_neg: frozenset
    decision_pos: frozenset
    decision_neg: frozenset


# Empty cells of the published grid are empty sets.
HYBRID_GRID = GridTable(
    profiles={
        "organizer": ProfileActs(frozenset({P}), frozenset({E}), frozenset({A, M}), frozenset()),
        "verifier": ProfileActs(frozenset({A, M}), frozenset({D, E}), frozenset(), frozenset({S, C})),
        "seeker": ProfileActs(frozenset(), frozenset({E}), frozenset({M}), frozenset()),
        "independent": ProfileActs(frozenset(), frozenset({S}), frozenset(), frozenset({S, C})),
    },
    orientation_pos=frozenset({P, M}),
    orientation_neg=frozenset({E, C}),
    decision_pos=frozenset({A}),
    decision_neg=frozenset({D, S}),
)


@dataclass
class ActCounts:
    orientation_pos: int = 0
    orientation_neg: int = 0
    decision_pos: int = 0
    decision_neg: int = 0
    interventions: dict = field(default_factory=lambda: dict.fromkeys(PROFILES, 0))
    reactions: dict = field(default_factory=lambda: dict.fromkeys(PROFILES, 0))
    total: int = 0

    def __add__(self, other: "ActCounts") -> "ActCounts":
        return ActCounts(
            self.orientation_pos + other.orientation_pos,
            self.orientation_neg + other.orientation_neg,
            self.decision_pos + other.decision_pos,
            self.decision_neg + other.decision_neg,
            {p: self.interventions[p] + other.interventions[p] for p in PROFILES},
            {p: self.reactions[p] + other.reactions[p] for p in PROFILES},
            self.total + other.total,
        )

    def scaled(self, factor: int) -> "ActCounts":
        return ActCounts(
            self.orientation_pos * factor, self.orientation_neg * factor,
            self.decision_pos * factor, self.decision_neg * factor,
            {p: v * factor for p, v in self.interventions.items()},
            {p: v * factor for p, v in self.reactions.items()},
            self.total * factor,
        )


def tally_acts(log: SessionLog, learner: str, grid: GridTable = HYBRID_GRID) -> ActCounts:
    """Count the acts relevant to ``learner`` in one session.

    Every act the learner emits (reply or not) feeds the orientation and
    decision tallies and the participation total.  Only non-reply acts count
    as profile interventions.  A peer's reply to one of the learner's records
    is credited to the learner's profile reaction counters.
    """
    if learner not in log.roster:
        raise ActorNotInRoster(f"{learner!r} is not in the roster of session {log.session_id!r}")
    counts = ActCounts()
    authors = {r.seq: r.actor for r in log.records}
    for rec in log.records:
        if rec.actor == learner:
            counts.total += 1
            counts.orientation_pos += rec.act in grid.orientation_pos
            counts.orientation_neg += rec.act in grid.orientation_neg
            counts.decision_pos += rec.act in grid.decision_pos
            counts.decision_neg += rec.act in grid.decision_neg
            if rec.is_intervention:
                for p, acts in grid.profiles.items():
                    counts.interventions[p] += rec.act in acts.intervention
        elif rec.reply_to is not None and authors.get(rec.reply_to) == learner:
            for p, acts in grid.profiles.items():
                counts.reactions[p] += rec.act in acts.reaction
    return counts


# ---------------------------------------------------------------------------
# ingestion


def _parse_int(value, row: int, name: str, optional: bool = False) -> Optional[int]:
    if value is None or (isinstance(value, str) and value.strip() == ""):
        if optional:
            return None
        raise MalformedRow(f"missing {name}", row)
    try:
        return int(value)
    except (TypeError, ValueError):
        raise MalformedRow(f"{name} is not an integer: {value!r}", row) from None


def _parse_flag(value) -> bool:
    if isinstance(value, bool):
        return value
    if value is None:
        return False
    return str(value).strip().lower() in {"1", "true", "yes", "timeout", "t"}


def _rows_from_csv(text: str) -> Iterable[tuple[int, dict]]:
    reader = csv.reader(io.StringIO(text))
    header = None
    for row in reader:
        lineno = reader.line_num
        if not row or (row[0].startswith("#")):
            continue
        if header is None:
            header = [h.strip() for h in row]
            missing = [c for c in CSV_COLUMNS if c not in header]
            if missing:
                raise MalformedRow(f"header lacks columns {missing}", lineno)
            continue
        if len(row) > len(header):
            raise MalformedRow(f"expected {len(header)} fields, got {len(row)}", lineno)
        row = row + [""] * (len(header) - len(row))
        yield lineno, dict(zip(header, row))
    if header is None:
        raise MalformedRow("missing header row", 1)


def _rows_from_jsonl(text: str) -> Iterable[tuple[int, dict]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRow(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise MalformedRow("expected a JSON object", lineno)
        yield lineno, obj


def parse_session_log(data, fmt: str = "csv", manifest: Optional[Mapping] = None) -> list[SessionLog]:
    """Parse a CSV or JSONL session log into validated :class:`SessionLog` objects.

    ``manifest`` maps session ids to ``{"roster": [...], "leader": ...}``.
    Without a manifest the roster is the actors in order of first appearance
    and the first actor leads.
    """
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    if fmt == "csv":
        rows = _rows_from_csv(text)
    elif fmt == "jsonl":
        rows = _rows_from_jsonl(text)
    else:
        raise ValueError(f"unsupported log format {fmt!r}")

    sessions: dict[str, list[tuple[int, SpeechActRecord]]] = {}
    for lineno, row in rows:
        sid = row.get("session_id")
        if sid is None or str(sid).strip() == "":
            raise MalformedRow("missing session_id", lineno)
        actor = row.get("actor")
        if actor is None or str(actor).strip() == "":
            raise MalformedRow("missing actor", lineno)
        try:
            act = SpeechAct.parse(str(row.get("act", "")))
        except UnknownActCode as exc:
            raise UnknownActCode(str(exc), lineno) from None
        rec = SpeechActRecord(
            session_id=str(sid).strip(),
            seq=_parse_int(row.get("seq"), lineno, "seq"),
            actor=str(actor).strip(),
            act=act,
            reply_to=_parse_int(row.get("reply_to"), lineno, "reply_to", optional=True),
            timeout=_parse_flag(row.get("timeout")),
        )
        sessions.setdefault(rec.session_id, []).append((lineno, rec))

    logs = []
    for sid, entries in sessions.items():
        entries.sort(key=lambda e: e[1].seq)
        seen: set[int] = set()
        for lineno, rec in entries:
            if rec.seq in seen:
                raise DuplicateSeq(f"duplicate seq {rec.seq} in session {sid!r}", lineno)
            if rec.reply_to is not None and (rec.reply_to not in seen or rec.reply_to >= rec.seq):
                raise DanglingReplyTo(
                    f"reply_to {rec.reply_to} does not reference an earlier record of session {sid!r}", lineno)
            seen.add(rec.seq)
        records = tuple(rec for _, rec in entries)
        if manifest is not None:
            if sid not in manifest:
                raise LogError(f"session {sid!r} missing from manifest")
            roster = tuple(manifest[sid]["roster"])
            leader = manifest[sid]["leader"]
        else:
            roster = tuple(dict.fromkeys(r.actor for r in records))
            leader = roster[0]
        for lineno, rec in entries:
            if rec.actor not in roster:
                raise ActorNotInRoster(f"actor {rec.actor!r} not in roster of session {sid!r}", lineno)
        logs.append(SessionLog(sid, records, roster, leader))
    return logs


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_session_csv(logs: Iterable[SessionLog], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + ("timeout",))
    for log in logs:
        for r in log.records:
            writer.writerow([r.session_id, r.seq, r.actor, r.act.value,
                             "" if r.reply_to is None else r.reply_to, "1" if r.timeout else ""])


def write_session_jsonl(logs: Iterable[SessionLog], fh) -> None:
    for log in logs:
        for r in log.records:
            obj = {"session_id": r.session_id, "seq": r.seq, "actor": r.actor,
                   "act": r.act.value, "reply_to": r.reply_to}
            if r.timeout:
                obj["timeout"] = True
            fh.write(json.dumps(obj) + "\n")


def manifest_for(logs: Iterable[SessionLog]) -> dict:
    return {log.session_id: {"roster": list(log.roster), "leader": log.leader} for log in logs}

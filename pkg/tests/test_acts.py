import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learnerprofiles.acts import (
    HYBRID_GRID, PROFILES, A, C, D, E, M, P, S, ActorNotInRoster, DanglingReplyTo, DuplicateSeq,
    MalformedRow, SessionLog, SpeechAct, SpeechActRecord, UnknownActCode, manifest_for, parse_session_log,
    tally_acts, write_session_csv, write_session_jsonl,
)

from conftest import make_log

HEADER = "session_id,seq,actor,act,reply_to\n"


def test_exactly_seven_codes():
    assert sorted(a.value for a in SpeechAct) == sorted("PADCESM")
    for bad in ("Q", "", "p", "PA", "x"):
        with pytest.raises(UnknownActCode):
            SpeechAct.parse(bad)


def test_grid_matches_published_table():
    g = HYBRID_GRID.profiles
    assert g["organizer"].intervention_pos == {P}
    assert g["organizer"].intervention_neg == {E}
    assert g["organizer"].reaction_pos == {A, M}
    assert g["organizer"].reaction_neg == set()
    assert g["verifier"].intervention_pos == {A, M}
    assert g["verifier"].intervention_neg == {D, E}
    assert g["verifier"].reaction_pos == set()
    assert g["verifier"].reaction_neg == {S, C}
    assert g["seeker"].intervention == {E}
    assert g["seeker"].reaction == {M}
    assert g["independent"].intervention == {S}
    assert g["independent"].reaction == {S, C}
    assert HYBRID_GRID.orientation_pos == {P, M}
    assert HYBRID_GRID.orientation_neg == {E, C}
    assert HYBRID_GRID.decision_pos == {A}
    assert HYBRID_GRID.decision_neg == {D, S}


# -- parsing ----------------------------------------------------------------

def test_parse_plain_row():
    (log,) = parse_session_log(HEADER + "s1,3,alice,P,\n")
    rec = log.records[0]
    assert (rec.seq, rec.actor, rec.act, rec.reply_to) == (3, "alice", P, None)


def test_unknown_code_reports_row():
    with pytest.raises(UnknownActCode) as err:
        parse_session_log(HEADER + "s1,1,alice,P,\ns1,2,bob,Q,\n")
    assert err.value.row == 3


def test_dangling_reply():
    text = HEADER + "".join(f"s1,{i},alice,P,\n" for i in range(1, 5)) + "s1,5,bob,A,9\n"
    with pytest.raises(DanglingReplyTo):
        parse_session_log(text)


def test_duplicate_seq():
    with pytest.raises(DuplicateSeq):
        parse_session_log(HEADER + "s1,1,alice,P,\ns1,1,bob,A,\n")


@pytest.mark.parametrize("text", [
    "",
    "a,b,c\n1,2,3\n",
    HEADER + "s1,one,alice,P,\n",
    HEADER + "s1,1,,P,\n",
    HEADER + "s1,1,alice,P,,,,\n",
])
def test_malformed(text):
    with pytest.raises(MalformedRow):
        parse_session_log(text)


def test_actor_not_in_manifest_roster():
    manifest = {"s1": {"roster": ["alice"], "leader": "alice"}}
    with pytest.raises(ActorNotInRoster):
        parse_session_log(HEADER + "s1,1,alice,P,\ns1,2,eve,A,1\n", manifest=manifest)


def test_records_grouped_and_sorted():
    text = HEADER + "s2,2,b,A,1\ns1,1,a,P,\ns2,1,a,P,\n"
    logs = {log.session_id: log for log in parse_session_log(text)}
    assert [r.seq for r in logs["s2"].records] == [1, 2]
    assert logs["s2"].roster == ("a", "b")


def test_comment_lines_are_skipped():
    (log,) = parse_session_log("# provenance\n" + HEADER + "s1,1,a,P,\n")
    assert len(log.records) == 1


def test_jsonl_matches_csv(legal_log):
    csv_buf, jsonl_buf = io.StringIO(), io.StringIO()
    write_session_csv([legal_log], csv_buf)
    write_session_jsonl([legal_log], jsonl_buf)
    manifest = manifest_for([legal_log])
    from_csv = parse_session_log(csv_buf.getvalue(), "csv", manifest)
    from_jsonl = parse_session_log(jsonl_buf.getvalue().encode(), "jsonl", manifest)
    assert from_csv == from_jsonl == [legal_log]


def test_timeout_round_trip():
    log = make_log([("a", "P", None), ("b", "P", None), ("a", "P", None), ("a", "P", 3, True)])
    buf = io.StringIO()
    write_session_csv([log], buf)
    assert parse_session_log(buf.getvalue())[0].records[-1].timeout


def test_bad_jsonl():
    with pytest.raises(MalformedRow):
        parse_session_log('{"session_id": "s1"\n', "jsonl")
    with pytest.raises(MalformedRow):
        parse_session_log(json.dumps([1, 2]) + "\n", "jsonl")


# -- tallies ----------------------------------------------------------------

def test_orientation_tally():
    log = make_log([("alice", "P", None), ("alice", "P", None), ("alice", "M", None), ("alice", "E", None)])
    c = tally_acts(log, "alice")
    assert (c.orientation_pos, c.orientation_neg) == (3, 1)


def test_empty_log_tally():
    log = SessionLog("s1", (), ("alice",), "alice")
    c = tally_acts(log, "alice")
    assert c.total == 0 and sum(c.interventions.values()) == 0 and c.orientation_pos == 0


def test_reply_attribution():
    log = make_log([("alice", "P", None), ("bob", "A", 1)])
    alice, bob = tally_acts(log, "alice"), tally_acts(log, "bob")
    assert alice.reactions["organizer"] == 1
    assert bob.decision_pos == 1
    # a reply is not an intervention of the reactor
    assert sum(bob.interventions.values()) == 0


def test_tally_rejects_outsider(legal_log):
    with pytest.raises(ActorNotInRoster):
        tally_acts(legal_log, "zed")


# -- properties ---------------------------------------------------------------

ACTORS = ("a", "b", "c")


@st.composite
def logs(draw, session_id="s1", offset=0):
    n = draw(st.integers(0, 25))
    records = []
    for i in range(n):
        seq = offset + i + 1
        reply = draw(st.one_of(st.none(), st.integers(offset + 1, seq - 1))) if i else None
        records.append(SpeechActRecord(session_id, seq, draw(st.sampled_from(ACTORS)),
                                       draw(st.sampled_from(list(SpeechAct))), reply))
    return SessionLog(session_id, tuple(records), ACTORS, "a")


def _as_tuple(c):
    return (c.orientation_pos, c.orientation_neg, c.decision_pos, c.decision_neg,
            tuple(c.interventions[p] for p in PROFILES), tuple(c.reactions[p] for p in PROFILES), c.total)


@settings(max_examples=200, deadline=None)
@given(logs(), st.data())
def test_tally_additive(first, data):
    second = data.draw(logs(offset=100))
    joined = SessionLog("s1", first.records + second.records, ACTORS, "a")
    for learner in ACTORS:
        assert _as_tuple(tally_acts(joined, learner)) == _as_tuple(
            tally_acts(first, learner) + tally_acts(second, learner))


@settings(max_examples=200, deadline=None)
@given(logs())
def test_totals_cover_every_record(log):
    assert sum(tally_acts(log, learner).total for learner in ACTORS) == len(log.records)


@settings(max_examples=200, deadline=None)
@given(logs(), st.permutations(ACTORS))
def test_label_equivariance(log, perm):
    rename = dict(zip(ACTORS, perm))
    renamed = SessionLog(log.session_id,
                         tuple(SpeechActRecord(r.session_id, r.seq, rename[r.actor], r.act, r.reply_to)
                               for r in log.records),
                         ACTORS, rename["a"])
    for learner in ACTORS:
        assert _as_tuple(tally_acts(log, learner)) == _as_tuple(tally_acts(renamed, rename[learner]))

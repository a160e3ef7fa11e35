import numpy as np
import pytest

from learnerprofiles.acts import SessionLog, SpeechAct, SpeechActRecord


def make_log(rows, roster=None, leader=None, session_id="s1"):
    """Build a log from ``(actor, act, reply_to)`` or ``(actor, act, reply_to, timeout)`` tuples."""
    records = []
    for seq, row in enumerate(rows, start=1):
        actor, act, reply = row[:3]
        timeout = row[3] if len(row) > 3 else False
        records.append(SpeechActRecord(session_id, seq, actor, SpeechAct.parse(act), reply, timeout))
    if roster is None:
        roster = tuple(dict.fromkeys(r.actor for r in records))
    return SessionLog(session_id, tuple(records), tuple(roster), leader or roster[0])


# A legal trace: lea exposes, bob and cat speak in turn, lea adopts bob's
# proposal, cat asks for a clarification, bob answers, lea and cat approve.
LEGAL_ROWS = [
    ("lea", "P", None),
    ("bob", "P", None),
    ("bob", "M", None),
    ("cat", "A", 2),
    ("cat", "E", None),
    ("lea", "P", 2),
    ("lea", "A", 2),
    ("cat", "E", 2),
    ("bob", "M", 8),
    ("cat", "A", 2),
]


@pytest.fixture
def legal_log():
    return make_log(LEGAL_ROWS, roster=("lea", "bob", "cat"), leader="lea")


def random_orthonormal(rng, n=5):
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def blobs(rng, centers, n_per, sigma):
    pts = np.vstack([rng.normal(c, sigma, size=(n_per, len(c))) for c in centers])
    truth = np.repeat(np.arange(len(centers)), n_per)
    return pts, truth


# -- acceptance summary ---------------------------------------------------------

_ACCEPTANCE: list[tuple[int, str, bool, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    number, label = marker.args
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    _ACCEPTANCE.append((number, label, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(_ACCEPTANCE):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {label}"
        terminalreporter.write_line(f"{line} ({detail})" if detail else line)

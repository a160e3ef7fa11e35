import csv
import io
import json
import shutil

import numpy as np
import pytest

from learnerprofiles import __version__
from learnerprofiles.acts import manifest_for, write_session_csv
from learnerprofiles.cli import main
from learnerprofiles.clustering import read_clusters
from learnerprofiles.fuzzy import INDEX_NAMES
from learnerprofiles.mtslp import read_mtslp_csv
from learnerprofiles.pipeline import (
    learner_mtslps, mean_features, profile_sessions, read_profile_features, simulate_cohort, write_profiles_csv,
)
from learnerprofiles.similarity import SimilarityMatrix, similarity_matrix

from conftest import LEGAL_ROWS, make_log


def write_logs(tmp_path, logs, name="logs.csv"):
    buf = io.StringIO()
    write_session_csv(logs, buf)
    (tmp_path / name).write_text(buf.getvalue(), encoding="utf-8")
    (tmp_path / "manifest.json").write_text(json.dumps(manifest_for(logs)), encoding="utf-8")
    return str(tmp_path / name), str(tmp_path / "manifest.json")


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["simulate", "--seed", "4", "--learners", "12", "--sessions", "4", "--out-dir", str(out)]) == 0
    assert main(["profile", str(out / "logs.csv"), "--manifest", str(out / "manifest.json"),
                 "--out-dir", str(out)]) == 0
    return out


def test_validate_exit_codes(tmp_path, capsys):
    legal = make_log(LEGAL_ROWS, roster=("lea", "bob", "cat"), leader="lea")
    logs, manifest = write_logs(tmp_path, [legal])
    assert main(["validate", logs, "--manifest", manifest]) == 0
    assert json.loads(capsys.readouterr().out)["conformant"] is True

    broken = make_log(LEGAL_ROWS[:2] + [("lea", "P", 2)], roster=("lea", "bob", "cat"), leader="lea")
    logs, manifest = write_logs(tmp_path, [broken], "broken.csv")
    report_path = tmp_path / "report.json"
    assert main(["validate", logs, "--manifest", manifest, "--report", str(report_path)]) == 1
    report = json.loads(report_path.read_text())
    assert 3 in [f["seq"] for f in report["sessions"][0]["findings"]]

    assert main(["validate", str(tmp_path / "missing.csv")]) == 2


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("session_id,seq,actor,act,reply_to\ns1,1,a,Q,\n", encoding="utf-8")
    assert main(["validate", str(bad)]) == 2


def test_jsonl_input(tmp_path):
    from learnerprofiles.acts import write_session_jsonl
    legal = make_log(LEGAL_ROWS, roster=("lea", "bob", "cat"), leader="lea")
    buf = io.StringIO()
    write_session_jsonl([legal], buf)
    path = tmp_path / "logs.jsonl"
    path.write_text(buf.getvalue(), encoding="utf-8")
    assert main(["validate", str(path)]) == 0


def test_simulated_logs_validate(run_dir):
    assert main(["validate", str(run_dir / "logs.csv"), "--manifest", str(run_dir / "manifest.json")]) == 0


def test_provenance_headers(run_dir):
    for name in ("logs.csv", "profiles.csv", "mtslp/L01.csv"):
        first = (run_dir / name).read_text(encoding="utf-8").splitlines()[0]
        assert first.startswith(f"# learnerprofiles {__version__} config=")
    assert json.loads((run_dir / "truth.json").read_text())["provenance"].startswith("learnerprofiles")


def test_profile_rows_and_library_agreement(run_dir):
    with open(run_dir / "profiles.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    per_learner = {}
    for r in rows:
        per_learner[r["learner"]] = per_learner.get(r["learner"], 0) + 1
    assert set(per_learner.values()) == {4}

    cohort = simulate_cohort(4, n_learners=12, n_sessions=4)
    profiles = profile_sessions(cohort.logs)
    learners, x = mean_features(learner_mtslps(profiles))
    file_learners, fx = read_profile_features(run_dir / "profiles.csv")
    assert file_learners == learners
    assert np.array_equal(fx, x)
    m = read_mtslp_csv(run_dir / "mtslp" / "L01.csv", "L01")
    assert np.array_equal(m.matrix, learner_mtslps(profiles)["L01"].matrix)


def test_profiles_csv_round_trip(tmp_path):
    profiles = profile_sessions(simulate_cohort(2, n_learners=6, n_sessions=2).logs)
    buf = io.StringIO()
    write_profiles_csv(profiles, buf)
    path = tmp_path / "p.csv"
    path.write_text(buf.getvalue(), encoding="utf-8")
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for p, row in zip(profiles, rows):
        for key, value in p.as_row().items():
            assert (float(row[key]) if isinstance(value, float) else row[key]) == value


def test_similarity_command(run_dir, tmp_path):
    out = tmp_path / "sim"
    assert main(["similarity", str(run_dir / "mtslp"), "--out-dir", str(out)]) == 0
    sm = SimilarityMatrix.from_csv(out / "similarity.csv")
    assert np.array_equal(sm.values, sm.values.T)
    mtslps = [read_mtslp_csv(p, p.stem) for p in sorted((run_dir / "mtslp").glob("*.csv"))]
    assert np.array_equal(similarity_matrix(mtslps).values, sm.values)
    assert "excluded" in json.loads((out / "exclusions.json").read_text())


def test_duplicate_learner_scores_one(run_dir, tmp_path):
    mdir = tmp_path / "m"
    mdir.mkdir()
    for name in ("L01", "L02"):
        shutil.copy(run_dir / "mtslp" / f"{name}.csv", mdir / f"{name}.csv")
    shutil.copy(run_dir / "mtslp" / "L01.csv", mdir / "twin.csv")
    assert main(["similarity", str(mdir), "--out-dir", str(tmp_path)]) == 0
    sm = SimilarityMatrix.from_csv(tmp_path / "similarity.csv")
    i, j = sm.learners.index("L01"), sm.learners.index("twin")
    assert sm.values[i, j] == pytest.approx(1.0, abs=1e-9)


def test_similarity_needs_two_learners(run_dir, tmp_path):
    mdir = tmp_path / "m"
    mdir.mkdir()
    shutil.copy(run_dir / "mtslp" / "L01.csv", mdir / "L01.csv")
    assert main(["similarity", str(mdir), "--out-dir", str(tmp_path)]) == 1


@pytest.mark.parametrize("method", ["hac", "kmeans", "fcm"])
def test_cluster_deterministic(run_dir, tmp_path, method):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["cluster", "--features", str(run_dir / "profiles.csv"), "--method", method, "--k", "3",
                     "--seed", "5", "--out-dir", str(out)]) == 0
        outputs.append((out / "clusters.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_cluster_k1_and_similarity_input(run_dir, tmp_path):
    assert main(["cluster", "--features", str(run_dir / "profiles.csv"), "--k", "1", "--out-dir", str(tmp_path)]) == 0
    assert set(read_clusters(tmp_path / "clusters.csv").values()) == {1}
    assert (tmp_path / "dendrogram.dot").read_text().startswith("// learnerprofiles")
    assert main(["similarity", str(run_dir / "mtslp"), "--out-dir", str(tmp_path)]) == 0
    assert main(["cluster", "--similarity", str(tmp_path / "similarity.csv"), "--out-dir", str(tmp_path)]) == 0


def test_cluster_blobs_recovered(tmp_path):
    rng = np.random.default_rng(0)
    names = [f"x{i:02d}" for i in range(20)]
    with open(tmp_path / "profiles.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["session", "learner", *INDEX_NAMES])
        for i, name in enumerate(names):
            center = 2.0 if i < 10 else 10.0
            w.writerow(["s1", name, *rng.normal(center, 0.2, 5)])
    (tmp_path / "truth.json").write_text(json.dumps({"archetypes": {n: int(i >= 10) for i, n in enumerate(names)}}))
    assert main(["cluster", "--features", str(tmp_path / "profiles.csv"), "--method", "kmeans", "--k", "2",
                 "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    assert main(["report", str(tmp_path / "clusters.csv"), "--truth", str(tmp_path / "truth.json"),
                 "--out-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "report.json").read_text())["ari"] == 1.0


def test_cluster_usage_errors(run_dir, tmp_path):
    feats = str(run_dir / "profiles.csv")
    assert main(["cluster", "--features", feats, "--method", "kmeans", "--out-dir", str(tmp_path)]) == 2
    assert main(["cluster", "--out-dir", str(tmp_path)]) == 2
    assert main(["cluster", "--features", feats, "--k", "99", "--out-dir", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--features", feats, "--method", "dbscan"])
    assert exc.value.code == 2


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LEARNERPROFILES_OUT", str(tmp_path / "envout"))
    assert main(["simulate", "--seed", "1", "--learners", "4", "--sessions", "1"]) == 0
    assert (tmp_path / "envout" / "logs.csv").exists()


def test_simulate_roster_spec(tmp_path):
    spec = [{"members": ["ann", "ben", "cid"], "leader": "ben",
             "archetypes": {"ann": "seeker", "ben": "organizer", "cid": "independent"}}]
    (tmp_path / "roster.json").write_text(json.dumps(spec))
    assert main(["simulate", "--seed", "2", "--sessions", "3", "--fixed-leader",
                 "--roster-spec", str(tmp_path / "roster.json"), "--out-dir", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {v["leader"] for k, v in manifest.items() if k != "provenance"} == {"ben"}
    spec[0]["archetypes"]["ann"] = "wizard"
    (tmp_path / "roster.json").write_text(json.dumps(spec))
    assert main(["simulate", "--seed", "2", "--roster-spec", str(tmp_path / "roster.json"),
                 "--out-dir", str(tmp_path)]) == 2


def test_absence_drops_rows():
    cohort = simulate_cohort(3, n_learners=8, n_sessions=6, absence=0.5)
    lengths = {m.n_sessions for m in learner_mtslps(profile_sessions(cohort.logs)).values()}
    assert min(lengths) < 6

"""Command-line front end: ``learnerprofiles <command> ...``.

Exit status is 0 on success, 1 when a command ran but reported findings or
could not produce its result, and 2 on IO, parse or usage errors.  Outputs go
to ``--out-dir``, which defaults to ``$LEARNERPROFILES_OUT`` or the current
directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .acts import LogError, load_manifest, manifest_for, parse_session_log, write_session_csv
from .clustering import (
    adjusted_rand_index, fcm, hac, kmeans, read_clusters, write_fuzzy_clusters, write_hard_clusters,
)
from .fsm import ARCHETYPES, reports_to_json, validate_session
from .fuzzy import load_fis_set
from .mtslp import read_mtslp_csv, write_mtslp_csv
from .pipeline import (
    learner_mtslps, profile_sessions, provenance, read_profile_features, simulate_cohort, write_profiles_csv,
)
from .similarity import NotEnoughLearners, SimilarityMatrix, similarity_matrix

OUT_ENV = "LEARNERPROFILES_OUT"

EXIT_OK, EXIT_FINDINGS, EXIT_IO = 0, 1, 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_IO):
        super().__init__(message)
        self.code = code


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _header(command: str, params: dict, inputs: Sequence[Path] = ()) -> str:
    # paths are left out of the hash so reruns elsewhere stay byte-identical
    config = {"command": command, **params, "inputs": [_file_digest(p) for p in inputs]}
    return provenance(config)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(f"no such file or directory: {path}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out_dir or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, writer) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer(fh)


def _read_logs(paths: Sequence[str], fmt: str, manifest_path: str | None):
    manifest = load_manifest(_existing(manifest_path)) if manifest_path else None
    logs, files = [], []
    for name in paths:
        p = _existing(name)
        files.append(p)
        f = fmt if fmt != "auto" else ("jsonl" if p.suffix in (".jsonl", ".ndjson") else "csv")
        logs.extend(parse_session_log(p.read_bytes(), f, manifest))
    if manifest_path:
        files.append(Path(manifest_path))
    return logs, files


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    logs, _ = _read_logs(args.logs, args.format, args.manifest)
    reports = [validate_session(log) for log in logs]
    text = reports_to_json(reports)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK if all(r.conformant for r in reports) else EXIT_FINDINGS


def _roster_groups(path: str) -> list[dict]:
    spec = json.loads(_existing(path).read_text(encoding="utf-8"))
    groups = spec["groups"] if isinstance(spec, dict) else spec
    for g in groups:
        if g["leader"] not in g["members"]:
            raise CliError(f"leader {g['leader']!r} is not a member of its group")
        bad = {a for a in g["archetypes"].values() if a not in ARCHETYPES}
        if bad:
            raise CliError(f"unknown archetypes {sorted(bad)}")
    return groups


def cmd_simulate(args) -> int:
    mix = tuple(a.strip() for a in args.mix.split(",") if a.strip())
    groups = _roster_groups(args.roster_spec) if args.roster_spec else None
    params = {"seed": args.seed, "learners": args.learners, "group_size": args.group_size,
              "sessions": args.sessions, "mix": list(mix), "length_budget": args.length_budget,
              "absence": args.absence, "groups": groups, "rotate_leader": not args.fixed_leader}
    try:
        cohort = simulate_cohort(args.seed, args.learners, args.group_size, args.sessions, mix,
                                 args.length_budget, args.absence, groups, not args.fixed_leader)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    out = _out_dir(args)
    header = _header("simulate", params)

    def logs_csv(fh):
        fh.write(f"# {header}\n")
        write_session_csv(cohort.logs, fh)

    _write(out / "logs.csv", logs_csv)
    for name, payload in (("manifest.json", manifest_for(cohort.logs)), ("truth.json", cohort.truth_manifest())):
        _write(out / name, lambda fh, p=payload: fh.write(
            json.dumps({"provenance": header, **p}, indent=2, sort_keys=True) + "\n"))
    print(f"wrote {len(cohort.logs)} sessions to {out}")
    return EXIT_OK


def cmd_profile(args) -> int:
    logs, files = _read_logs(args.logs, args.format, args.manifest)
    fis_path = None if args.fis == "paper-default" else _existing(args.fis)
    fis_set = load_fis_set(fis_path or "paper-default")
    if fis_path:
        files.append(fis_path)
    header = _header("profile", {"fis": "custom" if fis_path else "paper-default"}, files)
    profiles = profile_sessions(logs, fis_set)
    out = _out_dir(args)
    _write(out / "profiles.csv", lambda fh: write_profiles_csv(profiles, fh, header))
    mdir = out / "mtslp"
    mdir.mkdir(exist_ok=True)
    mtslps = learner_mtslps(profiles)
    for learner, m in mtslps.items():
        _write(mdir / f"{learner}.csv", lambda fh, m=m: write_mtslp_csv(m, fh, header))
    print(f"profiled {len(profiles)} learner-sessions, {len(mtslps)} learners")
    return EXIT_OK


def cmd_similarity(args) -> int:
    mdir = _existing(args.mtslp_dir)
    paths = sorted(mdir.glob("*.csv"))
    if not paths:
        raise CliError(f"no MTSLP CSV files in {mdir}")
    mtslps = [read_mtslp_csv(p, p.stem) for p in paths]
    params = {"method": args.method, "k": args.k, "pcas_normalize": args.pcas_normalize,
              "raw_eigenvalue_weights": args.raw_eigenvalue_weights, "strict": not args.lenient,
              "learners": [p.stem for p in paths]}
    try:
        sm = similarity_matrix(mtslps, args.method, args.k, args.pcas_normalize,
                               args.raw_eigenvalue_weights, strict=not args.lenient)
    except NotEnoughLearners as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FINDINGS
    except ValueError as exc:
        raise CliError(str(exc)) from None
    header = _header("similarity", params, paths)
    out = _out_dir(args)
    _write(out / "similarity.csv", lambda fh: sm.to_csv(fh, header))
    report = {"provenance": header, "excluded": dict(sorted(sm.excluded.items())),
              "weights": None if sm.weights is None else [float(w) for w in sm.weights]}
    _write(out / "exclusions.json", lambda fh: fh.write(json.dumps(report, indent=2) + "\n"))
    print(f"{args.method} similarity over {len(sm.learners)} learners, {len(sm.excluded)} excluded")
    return EXIT_OK


def cmd_cluster(args) -> int:
    if (args.features is None) == (args.similarity is None):
        raise CliError("pass exactly one of --features or --similarity")
    if args.method in ("kmeans", "fcm") and args.seed is None:
        raise CliError(f"--seed is required for {args.method}")
    if args.similarity and args.method != "hac":
        raise CliError("a similarity matrix can only be clustered with hac")
    source = _existing(args.features or args.similarity)
    params = {"method": args.method, "k": args.k, "seed": args.seed, "linkage": args.linkage,
              "m": args.m, "beta": args.beta, "max_iter": args.max_iter,
              "input": "features" if args.features else "similarity"}
    header = _header("cluster", params, [source])
    if args.features:
        learners, x = read_profile_features(source)
    else:
        sm = SimilarityMatrix.from_csv(source)
        learners, x = sm.learners, None
    out = _out_dir(args)
    try:
        if args.method == "hac":
            dendro = hac(x, args.linkage) if x is not None else hac(linkage=args.linkage,
                                                                     distances=1.0 - sm.values)
            labels = dendro.cut(args.k)
            _write(out / "dendrogram.dot", lambda fh: fh.write(f"// {header}\n" + dendro.to_dot(learners)))
            _write(out / "clusters.csv", lambda fh: write_hard_clusters(fh, learners, labels, header))
        elif args.method == "kmeans":
            res = kmeans(x, args.k, args.seed, args.max_iter)
            _write(out / "clusters.csv", lambda fh: write_hard_clusters(fh, learners, res.labels, header))
        else:
            res = fcm(x, args.k, args.m, args.beta, args.max_iter, args.seed)
            _write(out / "clusters.csv", lambda fh: write_fuzzy_clusters(fh, learners, res.memberships, header))
    except ValueError as exc:
        raise CliError(str(exc)) from None
    print(f"{args.method}: {len(learners)} learners in {args.k} clusters")
    return EXIT_OK


def cmd_report(args) -> int:
    clusters = read_clusters(_existing(args.clusters))
    sizes: dict[int, int] = {}
    for c in clusters.values():
        sizes[c] = sizes.get(c, 0) + 1
    report = {"learners": len(clusters), "cluster_sizes": {str(k): sizes[k] for k in sorted(sizes)}}
    if args.truth:
        truth = json.loads(_existing(args.truth).read_text(encoding="utf-8"))["archetypes"]
        common = sorted(set(clusters) & set(truth))
        report["ari"] = adjusted_rand_index([clusters[l] for l in common], [truth[l] for l in common])
        table: dict[str, dict[str, int]] = {}
        for l in common:
            row = table.setdefault(truth[l], {})
            row[str(clusters[l])] = row.get(str(clusters[l]), 0) + 1
        report["contingency"] = {a: dict(sorted(r.items())) for a, r in sorted(table.items())}
    text = json.dumps(report, indent=2)
    print(text)
    if args.out_dir or os.environ.get(OUT_ENV):
        _write(_out_dir(args) / "report.json", lambda fh: fh.write(text + "\n"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="learnerprofiles", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    out_parent = argparse.ArgumentParser(add_help=False)
    out_parent.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")
    log_parent = argparse.ArgumentParser(add_help=False)
    log_parent.add_argument("logs", nargs="+", help="session log files (CSV or JSONL)")
    log_parent.add_argument("--manifest", help="JSON sidecar mapping session ids to roster and leader")
    log_parent.add_argument("--format", choices=("auto", "csv", "jsonl"), default="auto")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[log_parent], help="check logs against the session protocol")
    p.add_argument("--report", help="also write the JSON report here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", parents=[out_parent], help="generate a synthetic cohort")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--learners", type=_positive, default=24)
    p.add_argument("--group-size", type=_positive, default=4)
    p.add_argument("--sessions", type=_positive, default=8)
    p.add_argument("--mix", default="organizer,verifier,independent",
                   help=f"comma-separated archetypes from {', '.join(ARCHETYPES)}")
    p.add_argument("--length-budget", type=_positive, default=60)
    p.add_argument("--absence", type=float, default=0.0)
    p.add_argument("--fixed-leader", action="store_true", help="the same member chairs every session")
    p.add_argument("--roster-spec", help="JSON list of groups {members, leader, archetypes}")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile", parents=[log_parent, out_parent], help="fuzzy profiles and MTSLPs")
    p.add_argument("--fis", default="paper-default", help="'paper-default' or a FIS JSON file")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("similarity", parents=[out_parent], help="learner-to-learner similarity")
    p.add_argument("mtslp_dir")
    p.add_argument("--method", choices=("eros", "pcas"), default="eros")
    p.add_argument("--k", type=int, default=5, help="PCAS components")
    p.add_argument("--pcas-normalize", choices=("k", "n"), default="k",
                   help="divide PCAS by k or by the full dimension")
    p.add_argument("--raw-eigenvalue-weights", action="store_true")
    p.add_argument("--lenient", action="store_true", help="keep zero-covariance learners")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("cluster", parents=[out_parent], help="cluster learners")
    p.add_argument("--features", help="profiles CSV; learners are clustered on session means")
    p.add_argument("--similarity", help="similarity CSV; hac on 1 - similarity")
    p.add_argument("--method", choices=("hac", "kmeans", "fcm"), default="hac")
    p.add_argument("--k", type=_positive, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--linkage", choices=("single", "complete", "average"), default="average")
    p.add_argument("--m", type=float, default=2.0, help="fcm fuzziness")
    p.add_argument("--beta", type=float, default=1e-5, help="fcm stopping threshold")
    p.add_argument("--max-iter", type=_positive, default=100)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("report", parents=[out_parent], help="summarize a clustering")
    p.add_argument("clusters")
    p.add_argument("--truth", help="truth.json from simulate")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (LogError, OSError, json.JSONDecodeError, KeyError, UnicodeDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Mamdani-style fuzzy systems for the four behavioral profiles and the collaborator.

Inference uses Zadeh's operators: a rule fires with the Min of its antecedent
degrees and each output label takes the Max over the rules concluding it.
Outputs are Gaussian sets on [0, 12]; the crisp index is the mean of maxima
of the aggregate (pointwise Max of the consequents clipped at their
strengths), computed analytically from the clipped plateaus.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np
from scipy.special import expit

from .coefficients import ProfileCoefficients

OUTPUT_UNIVERSE = (0.0, 12.0)
OUTPUT_WIDTH = 0.8

# fis name -> name of the crisp index it produces
INDEX_OF = {
    "collaborator": "collaboration",
    "organizer": "animation",
    "verifier": "check",
    "seeker": "quest",
    "independent": "independence",
}
INDEX_NAMES = ("collaboration", "animation", "check", "quest", "independence")


class AllZeroStrengths(UserWarning):
    """No rule fired; the defuzzified value defaults to 0."""


# ---------------------------------------------------------------------------
# membership functions


def _clip(x, domain):
    return np.clip(x, domain[0], domain[1])


def _scalar(x, y):
    return float(y) if np.ndim(x) == 0 else y


@dataclass(frozen=True)
class Sigmoid:
    """``1 / (1 + exp(-slope * (x - center)))``, mirrored when ``increasing`` is false."""

    slope: float
    center: float
    increasing: bool = True
    domain: tuple[float, float] = (0.0, 1.0)

    def __call__(self, x):
        a = self.slope if self.increasing else -self.slope
        return _scalar(x, expit(a * (_clip(x, self.domain) - self.center)))

    def to_dict(self) -> dict:
        return {"kind": "sigmoid", "slope": self.slope, "center": self.center,
                "increasing": self.increasing, "domain": list(self.domain)}


@dataclass(frozen=True)
class Gaussian:
    """``exp(-(x - center)**2 / width)``."""

    center: float
    width: float
    domain: tuple[float, float] = (0.0, 1.0)

    def __call__(self, x):
        xc = _clip(x, self.domain)
        return _scalar(x, np.exp(-((xc - self.center) ** 2) / self.width))

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "center": self.center, "width": self.width,
                "domain": list(self.domain)}


@dataclass(frozen=True)
class Piecewise:
    """First piece whose closed interval contains ``x`` wins; 0 outside every piece."""

    pieces: tuple[tuple[float, float, object], ...]
    domain: tuple[float, float] = (0.0, 1.0)

    def __call__(self, x):
        xc = np.asarray(_clip(x, self.domain), dtype=float)
        out = np.zeros_like(xc)
        done = np.zeros(xc.shape, dtype=bool)
        for lo, hi, mf in self.pieces:
            sel = (~done) & (xc >= lo) & (xc <= hi)
            out = np.where(sel, mf(xc), out)
            done |= sel
        return _scalar(x, out)

    def to_dict(self) -> dict:
        return {"kind": "piecewise", "domain": list(self.domain),
                "pieces": [{"interval": [lo, hi], "mf": mf.to_dict()} for lo, hi, mf in self.pieces]}


MembershipFunction = Union[Sigmoid, Gaussian, Piecewise]


def membership_eval(mf: MembershipFunction, x):
    return mf(x)


def mf_from_dict(d: Mapping) -> MembershipFunction:
    kind = d["kind"]
    domain = tuple(d["domain"])
    if kind == "sigmoid":
        return Sigmoid(d["slope"], d["center"], d["increasing"], domain)
    if kind == "gaussian":
        return Gaussian(d["center"], d["width"], domain)
    if kind == "piecewise":
        return Piecewise(tuple((p["interval"][0], p["interval"][1], mf_from_dict(p["mf"]))
                               for p in d["pieces"]), domain)
    raise ValueError(f"unknown membership function kind {kind!r}")


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class InputVariable:
    name: str
    terms: Mapping[str, MembershipFunction]


@dataclass(frozen=True)
class OutputVariable:
    name: str
    centers: Mapping[str, float]
    width: float = OUTPUT_WIDTH
    universe: tuple[float, float] = OUTPUT_UNIVERSE


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[str, ...]
    consequent: str


class InvalidFis(ValueError):
    pass


@dataclass(frozen=True)
class FisSpec:
    name: str
    inputs: tuple[InputVariable, ...]
    output: OutputVariable
    rules: tuple[Rule, ...]

    def __post_init__(self):
        combos = list(itertools.product(*(tuple(v.terms) for v in self.inputs)))
        seen = [r.antecedent for r in self.rules]
        if sorted(seen) != sorted(combos):
            missing = set(combos) - set(seen)
            extra = [a for a in seen if seen.count(a) > 1 or a not in combos]
            raise InvalidFis(f"{self.name}: rule base not total (missing {sorted(missing)}, "
                             f"duplicate or unknown {sorted(set(extra))})")
        bad = {r.consequent for r in self.rules} - set(self.output.centers)
        if bad:
            raise InvalidFis(f"{self.name}: unknown consequents {sorted(bad)}")

    @property
    def arity(self) -> int:
        return len(self.inputs)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inputs": [{"name": v.name, "terms": {k: mf.to_dict() for k, mf in v.terms.items()}}
                       for v in self.inputs],
            "output": {"name": self.output.name, "centers": dict(self.output.centers),
                       "width": self.output.width, "universe": list(self.output.universe)},
            "rules": [{"if": list(r.antecedent), "then": r.consequent} for r in self.rules],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FisSpec":
        inputs = tuple(InputVariable(v["name"], {k: mf_from_dict(m) for k, m in v["terms"].items()})
                       for v in d["inputs"])
        o = d["output"]
        output = OutputVariable(o["name"], dict(o["centers"]), o.get("width", OUTPUT_WIDTH),
                                tuple(o.get("universe", OUTPUT_UNIVERSE)))
        rules = tuple(Rule(tuple(r["if"]), r["then"]) for r in d["rules"])
        return cls(d["name"], inputs, output, rules)


class ArityMismatch(ValueError):
    pass


def fuzzify(fis: FisSpec, inputs: Sequence[float]) -> tuple[dict[str, float], ...]:
    if len(inputs) != fis.arity:
        raise ArityMismatch(f"{fis.name} expects {fis.arity} inputs, got {len(inputs)}")
    return tuple({label: float(mf(x)) for label, mf in var.terms.items()}
                 for var, x in zip(fis.inputs, inputs))


def infer_minmax(fis: FisSpec, degrees: Sequence[Mapping[str, float]]) -> dict[str, float]:
    strengths = dict.fromkeys(fis.output.centers, 0.0)
    for rule in fis.rules:
        s = min(deg[label] for deg, label in zip(degrees, rule.antecedent))
        if s > strengths[rule.consequent]:
            strengths[rule.consequent] = s
    return strengths


def defuzzify_mom(strengths: Mapping[str, float], centers: Mapping[str, float],
                  width: float = OUTPUT_WIDTH, universe=OUTPUT_UNIVERSE) -> float:
    """Mean of the maximizer set of the clipped-Gaussian aggregate.

    Each label with the top strength ``h`` contributes its plateau
    ``center +/- sqrt(-width * ln h)`` (a single point when ``h == 1``),
    restricted to ``universe``.  Overlapping plateaus are merged and the
    result is the mean of their union.
    """
    h = max(strengths.values(), default=0.0)
    if h <= 0.0:
        warnings.warn("no rule fired; defuzzified value set to 0", AllZeroStrengths, stacklevel=2)
        return 0.0
    tied = sorted(centers[label] for label, s in strengths.items() if s == h)
    lo_u, hi_u = universe
    if h >= 1.0:
        return float(np.mean([min(max(c, lo_u), hi_u) for c in tied]))
    half = math.sqrt(-width * math.log(h))
    intervals = []
    for c in tied:
        lo, hi = max(c - half, lo_u), min(c + half, hi_u)
        if intervals and lo <= intervals[-1][1]:
            intervals[-1][1] = max(intervals[-1][1], hi)
        else:
            intervals.append([lo, hi])
    total = sum(hi - lo for lo, hi in intervals)
    if total == 0.0:
        return float(np.mean([lo for lo, _ in intervals]))
    return float(sum((hi - lo) * (hi + lo) / 2.0 for lo, hi in intervals) / total)


@dataclass(frozen=True)
class FisResult:
    index: float
    strengths: Mapping[str, float]
    percentages: Mapping[str, float]
    fired: bool


def run_fis(fis: FisSpec, inputs: Sequence[float]) -> FisResult:
    strengths = infer_minmax(fis, fuzzify(fis, inputs))
    total = sum(strengths.values())
    fired = total > 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AllZeroStrengths)
        index = defuzzify_mom(strengths, fis.output.centers, fis.output.width, fis.output.universe)
    if not fired:
        warnings.warn(f"{fis.name}: no rule fired", AllZeroStrengths, stacklevel=2)
    pct = {k: (v / total if fired else 0.0) for k, v in strengths.items()}
    return FisResult(index, strengths, pct, fired)


# ---------------------------------------------------------------------------
# published configuration

# Output rank (0 = worst .. 4 = best) for each (input1 good?, input2 good?, input3 level)
# of the organizer rule list; reused for the other behavioral profiles.
_LATTICE = {
    (1, 1, "Important"): 4,
    (1, 1, "Average"): 3,
    (1, 0, "Important"): 3,
    (0, 1, "Important"): 3,
    (1, 1, "Low"): 2,
    (0, 1, "Average"): 2,
    (1, 0, "Average"): 2,
    (1, 0, "Low"): 1,
    (0, 1, "Low"): 1,
    (0, 0, "Important"): 1,
    (0, 0, "Average"): 1,
    (0, 0, "Low"): 0,
}

IR_DOMAIN = (0.0, 2.0)


def _input3() -> InputVariable:
    return InputVariable("ir", {
        "Low": Sigmoid(10.0, 0.5, increasing=False, domain=IR_DOMAIN),
        "Average": Gaussian(1.0, 0.2, domain=IR_DOMAIN),
        "Important": Sigmoid(10.0, 1.5, increasing=True, domain=IR_DOMAIN),
    })


def _sig(increasing: bool, slope: float = 14.0, center: float = 0.5) -> Sigmoid:
    return Sigmoid(slope, center, increasing, (0.0, 1.0))


def _behavioral(name: str, in1: tuple[str, str], in2: tuple[str, str], terms1, terms2,
                outputs: Sequence[str]) -> FisSpec:
    """``in1``/``in2`` are (bad, good) label pairs; ``outputs`` run worst to best."""
    centers = {label: 2.0 + 2.0 * rank for rank, label in enumerate(outputs)}
    rules = []
    for (g1, g2, level), rank in _LATTICE.items():
        rules.append(Rule((in1[g1], in2[g2], level), outputs[rank]))
    return FisSpec(
        name,
        (InputVariable("coef_int", terms1), InputVariable("coef_reac", terms2), _input3()),
        OutputVariable(INDEX_OF[name], centers),
        tuple(rules),
    )


def paper_default() -> dict[str, FisSpec]:
    organizer = _behavioral(
        "organizer", ("Passive", "Active"), ("Negative", "Positive"),
        {"Passive": _sig(False), "Active": _sig(True)},
        {"Negative": _sig(False), "Positive": _sig(True)},
        ("Weak_o", "Insufficient_o", "Medium_o", "Satisfactory_o", "Good_o"))
    verifier = _behavioral(
        "verifier", ("Indifferent", "Interested"), ("Little", "Enough"),
        {"Indifferent": _sig(False), "Interested": _sig(True)},
        {"Little": Gaussian(0.25, 0.02, (0.0, 1.0)), "Enough": _sig(True, 11.0, 0.625)},
        ("Weak_v", "Insufficient_v", "Medium_v", "Satisfactory_v", "Good_v"))
    seeker = _behavioral(
        "seeker", ("Incurious", "Curious"), ("Rejected", "Accepted"),
        {"Incurious": _sig(False), "Curious": _sig(True)},
        {"Rejected": _sig(False), "Accepted": _sig(True)},
        ("Weak_s", "Insufficient_s", "Medium_s", "Satisfactory_s", "Good_s"))
    # Present and Heard are the low poles of their inputs yet the favorable labels.
    independent = _behavioral(
        "independent", ("Absent", "Present"), ("Disregarded", "Heard"),
        {"Present": _sig(False), "Absent": _sig(True)},
        {"Heard": _sig(False), "Disregarded": _sig(True)},
        ("Isolated", "Less_accepted", "Accepted", "Upper_accepted", "Integrated"))
    cdom = (0.0, 2.0)
    collaborator = FisSpec(
        "collaborator",
        (InputVariable("ind_ort", {"Weak": Sigmoid(7.0, 1.0, False, cdom), "Good": Sigmoid(7.0, 1.0, True, cdom)}),
         InputVariable("ind_dec", {"Weak": Sigmoid(7.0, 1.0, False, cdom), "Good": Sigmoid(7.0, 1.0, True, cdom)})),
        OutputVariable("collaboration", {"Weak_c": 2.0, "Average_c": 6.0, "Good_c": 10.0}),
        (Rule(("Good", "Good"), "Good_c"),
         Rule(("Good", "Weak"), "Average_c"),
         Rule(("Weak", "Good"), "Average_c"),
         Rule(("Weak", "Weak"), "Weak_c")),
    )
    return {f.name: f for f in (collaborator, organizer, verifier, seeker, independent)}


def fis_set_to_json(fis_set: Mapping[str, FisSpec]) -> str:
    return json.dumps({"systems": [f.to_dict() for f in fis_set.values()]}, indent=2)


def load_fis_set(name_or_path: Union[str, Path] = "paper-default") -> dict[str, FisSpec]:
    """Load a FIS set by bundled name (``"paper-default"``) or from a JSON file."""
    if str(name_or_path) == "paper-default":
        text = resources.files("learnerprofiles").joinpath("data/paper_default.json").read_text("utf-8")
    else:
        text = Path(name_or_path).read_text(encoding="utf-8")
    systems = [FisSpec.from_dict(d) for d in json.loads(text)["systems"]]
    missing = set(INDEX_OF) - {f.name for f in systems}
    if missing:
        raise InvalidFis(f"FIS set lacks systems {sorted(missing)}")
    return {f.name: f for f in systems}


# ---------------------------------------------------------------------------
# learner evaluation


@dataclass(frozen=True)
class FuzzyProfileVector:
    collaboration: float
    animation: float
    check: float
    quest: float
    independence: float
    percentages: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    strengths: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    no_rule_fired: tuple[str, ...] = ()

    def as_array(self) -> np.ndarray:
        return np.array([self.collaboration, self.animation, self.check, self.quest, self.independence])


def fis_inputs(coeffs: ProfileCoefficients, name: str) -> tuple[float, ...]:
    if name == "collaborator":
        return (coeffs.ind_ort, coeffs.ind_dec)
    return (coeffs.coef_int[name], coeffs.coef_reac[name], coeffs.ir)


def evaluate_learner(coeffs: ProfileCoefficients, fis_set: Mapping[str, FisSpec] | None = None) -> FuzzyProfileVector:
    if fis_set is None:
        fis_set = _default_set()
    indices, pct, raw, silent = {}, {}, {}, []
    for name, index_name in INDEX_OF.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AllZeroStrengths)
            res = run_fis(fis_set[name], fis_inputs(coeffs, name))
        indices[index_name] = res.index
        pct[name] = dict(res.percentages)
        raw[name] = dict(res.strengths)
        if not res.fired:
            silent.append(name)
    if silent:
        warnings.warn(f"no rule fired for {silent}", AllZeroStrengths, stacklevel=2)
    return FuzzyProfileVector(**indices, percentages=pct, strengths=raw, no_rule_fired=tuple(silent))


_DEFAULT: dict[str, FisSpec] = {}


def _default_set() -> dict[str, FisSpec]:
    if not _DEFAULT:
        _DEFAULT.update(load_fis_set("paper-default"))
    return _DEFAULT

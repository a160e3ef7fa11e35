import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learnerprofiles.acts import PROFILES, ActCounts, tally_acts
from learnerprofiles.coefficients import (
    ZeroGroupActivity, decision_index, intervention_coefficient, intervention_ratio, orientation_index,
    profile_coefficients, reaction_coefficient, session_coefficients,
)
from learnerprofiles.fsm import ARCHETYPES, generate_session


def counts(**kw):
    c = ActCounts()
    for key, value in kw.items():
        if key.startswith("int_"):
            c.interventions[key[4:]] = value
        elif key.startswith("reac_"):
            c.reactions[key[5:]] = value
        else:
            setattr(c, key, value)
    return c


@pytest.mark.parametrize("pos, neg, expected", [(6, 3, 2.0), (0, 0, 1.0), (5, 0, 2.0), (1, 2, 0.5), (3, 2, 1.5)])
def test_orientation_index(pos, neg, expected):
    assert orientation_index(counts(orientation_pos=pos, orientation_neg=neg)) == expected


@pytest.mark.parametrize("pos, neg, expected", [(4, 2, 2.0), (0, 0, 1.0), (1, 4, 0.25), (0, 3, 0.0)])
def test_decision_index(pos, neg, expected):
    assert decision_index(counts(decision_pos=pos, decision_neg=neg)) == expected


def test_intervention_coefficient():
    assert intervention_coefficient(counts(int_organizer=6, total=12), "organizer") == 0.5
    assert intervention_coefficient(counts(), "organizer") == 0.0
    assert intervention_coefficient(counts(int_verifier=10, total=10), "verifier") == 1.0


def test_reaction_coefficient():
    assert reaction_coefficient(counts(int_seeker=6, reac_seeker=3), "seeker") == 0.5
    assert reaction_coefficient(counts(reac_seeker=3), "seeker") == 0.0
    assert reaction_coefficient(counts(int_seeker=6, reac_seeker=8), "seeker") == 1.0


def test_intervention_ratio():
    assert intervention_ratio(counts(total=12), 10.0) == pytest.approx(1.2, abs=1e-15)
    assert intervention_ratio(counts(total=7), 7.0) == 1.0
    assert intervention_ratio(counts(total=0), 3.0) == 0.0
    with pytest.raises(ZeroGroupActivity):
        intervention_ratio(counts(total=5), 0.0)


count_values = st.integers(0, 40)


@st.composite
def act_counts(draw):
    c = ActCounts(*(draw(count_values) for _ in range(4)))
    for p in PROFILES:
        c.interventions[p] = draw(count_values)
        c.reactions[p] = draw(count_values)
    c.total = max(c.interventions.values()) + draw(count_values)
    return c


@settings(max_examples=300, deadline=None)
@given(act_counts(), st.integers(1, 9), st.floats(0.5, 30.0))
def test_ratio_homogeneity(c, factor, avg):
    a = profile_coefficients(c, avg)
    b = profile_coefficients(c.scaled(factor), avg * factor)
    assert a.ind_ort == pytest.approx(b.ind_ort, rel=1e-12)
    assert a.ind_dec == pytest.approx(b.ind_dec, rel=1e-12)
    assert a.ir == pytest.approx(b.ir, rel=1e-12)
    for p in PROFILES:
        assert a.coef_int[p] == pytest.approx(b.coef_int[p], rel=1e-12)
        assert a.coef_reac[p] == pytest.approx(b.coef_reac[p], rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(act_counts(), st.floats(0.5, 30.0))
def test_coefficient_ranges(c, avg):
    k = profile_coefficients(c, avg)
    assert 0.0 <= k.ind_ort <= 2.0 and 0.0 <= k.ind_dec <= 2.0
    assert all(0.0 <= v <= 1.0 for v in k.coef_int.values())
    assert all(0.0 <= v <= 1.0 for v in k.coef_reac.values())
    assert math.isfinite(k.ir) and k.ir >= 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_mean_ir_is_one(seed, size):
    rng = np.random.default_rng(seed)
    roster = tuple(f"u{i}" for i in range(size))
    mix = {m: ARCHETYPES[int(rng.integers(4))] for m in roster}
    coeffs = session_coefficients(generate_session(seed, roster, roster[0], mix))
    assert np.mean([c.ir for c in coeffs.values()]) == pytest.approx(1.0, abs=1e-12)


def test_session_coefficients_match_hand_tally(legal_log):
    coeffs = session_coefficients(legal_log)
    # bob: P, M, M (one reply); cat approves and asks; lea exposes, adopts, approves
    bob = tally_acts(legal_log, "bob")
    assert bob.total == 3
    assert coeffs["bob"].ir == pytest.approx(3 / (10 / 3))
    # bob's P drew A (cat), P (lea), A (lea), E (cat), A (cat): organizer reactions A, A, A
    assert bob.reactions["organizer"] == 3
    assert coeffs["bob"].coef_reac["organizer"] == 1.0
    assert coeffs["bob"].coef_int["organizer"] == pytest.approx(1 / 3)

import json
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcs import catalog, verdict
from lcs.algebra import LieAlgebraSpec
from lcs.dynamics import Box, SystemSpec
from lcs.errors import DecompositionError, EvidenceMismatchError, NumericalError, ValidationError
from lcs.specfile import load_spec
from lcs.verdict import (CONTROLLABLE, NOT_CONTROLLABLE, NUMERICAL_EVIDENCE, UNKNOWN, ad_rank,
                         classify, decide, kalman_crosscheck, rank_condition)

from conftest import SPECS, double_integrator, heis_diagonal, heis_expanding, scalar_system, sl2_system


def exact_rank(M) -> int:
    """Gaussian elimination over the rationals."""
    rows = [[Fraction(int(x)) for x in r] for r in np.asarray(M)]
    rank, ncol = 0, len(rows[0]) if rows else 0
    for c in range(ncol):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c] != 0:
                f = rows[i][c] / rows[rank][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def exact_kalman(A, B) -> int:
    A = np.asarray(A, dtype=object)
    blocks, P = [], np.asarray(B, dtype=object)
    for _ in range(A.shape[0]):
        blocks.append(P)
        P = A.dot(P)
    return exact_rank(np.hstack(blocks))


def random_linear_instance(rng):
    d = int(rng.integers(1, 7))
    m = int(rng.integers(1, 4))
    kind = rng.integers(5)
    if kind == 0:
        A = np.zeros((d, d), int)
    elif kind == 1:
        A = np.diag(rng.integers(-2, 3, d))
    elif kind == 2:
        A = np.diag(np.ones(d - 1, int), 1)
    else:
        A = rng.integers(-2, 3, (d, d))
    B = rng.integers(-1, 2, (d, m))
    if rng.random() < 0.2:
        B[:, 1:] = B[:, :1]
    return A, B


def linear_system(A, B) -> SystemSpec:
    d, m = np.shape(B)
    return SystemSpec(catalog.abelian(d), np.asarray(A, float), np.asarray(B, float).T,
                      Box(-np.ones(m), np.ones(m)))


def test_kalman_matches_exact_rank():
    rng = np.random.default_rng(7)
    deficient = 0
    for _ in range(1000):
        A, B = random_linear_instance(rng)
        rep = kalman_crosscheck(linear_system(A, B))
        exact = exact_kalman(A, B) == A.shape[0]
        assert rep.agree
        assert rep.ad_rank.holds == exact
        deficient += not exact
    assert 50 < deficient < 950


def test_kalman_rejects_nonabelian():
    with pytest.raises(ValidationError):
        kalman_crosscheck(heis_diagonal())


def test_zero_drift_needs_full_controls():
    assert not ad_rank(linear_system(np.zeros((2, 2)), [[1], [0]])).holds
    assert ad_rank(linear_system(np.zeros((2, 2)), np.eye(2))).holds


def test_classify():
    aff = LieAlgebraSpec.from_basis(np.array([[[1.0, 0], [0, 0]], [[0, 1.0], [0, 0]]]), "aff1")
    assert classify(catalog.abelian(3)) == "abelian"
    assert classify(catalog.heis3()) == "nilpotent"
    assert classify(catalog.so3()) == "compact_type"
    assert classify(catalog.sl2()) == "semisimple_noncompact"
    assert classify(catalog.sl3()) == "semisimple_noncompact"
    assert classify(aff) == "other"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       st.lists(st.integers(-1, 1), min_size=6, max_size=6))
def test_ad_rank_implies_rank_condition(x, b):
    alg = catalog.sl2()
    D = alg.ad(x)
    B = np.reshape(np.asarray(b, float), (2, 3))
    if not np.any(B):
        B[0, 0] = 1.0
    sys = SystemSpec(alg, D, B, Box([-1, -1], [1, 1]))
    if ad_rank(sys).holds:
        assert rank_condition(sys).holds
    try:
        v = decide(sys)
    except DecompositionError:  # near-defective D is rejected by design
        return
    assert v.outcome != NOT_CONTROLLABLE


@pytest.mark.parametrize("make, trace", [
    (double_integrator, ["R1", "R3"]),
    (heis_expanding, ["R1", "R3"]),
    (lambda: scalar_system(0.0), ["R1", "R3"]),
    (lambda: scalar_system(-1.0), ["R1", "R6"]),
    (heis_diagonal, ["R6"]),
    (sl2_system, ["R1", "R6"]),
])
def test_algebraic_traces(make, trace):
    v = decide(make())
    assert v.trace == trace
    assert v.outcome == (CONTROLLABLE if trace[-1] in ("R2", "R3") else UNKNOWN)
    for r in v.rules_fired:
        assert "sampling" not in r["inputs"]
        assert r["anchor"] == verdict.ANCHORS[r["rule"]]


def test_compact_trace_from_spec():
    v = decide(load_spec(SPECS / "so3.json").system)
    assert v.trace == ["R1", "R2"] and v.outcome == CONTROLLABLE
    assert "evidence" not in v.parameters


def test_rank_deficient_stops_at_r0():
    v = decide(load_spec(SPECS / "heis3_rank_deficient.json").system)
    assert v.trace == ["R0"] and v.outcome == UNKNOWN


def test_sl2_notes_blocked_r4():
    v = decide(sl2_system(), finite_semisimple_center=True)
    assert any(n.startswith("R4 blocked") and "no semigroup evidence" in n for n in v.notes)
    assert "finite_semisimple_center (declared)" in v.assumptions


def test_inconsistent_ranks_raise(monkeypatch):
    monkeypatch.setattr(verdict, "rank_condition",
                        lambda sys, tol=None: verdict.RankResult(False, 0, sys.d))
    with pytest.raises(NumericalError):
        decide(scalar_system(1.0))


# -- rules that consume evidence, exercised with stub bundles ------------------

def stub_evidence(sys, fraction=0.5, interior=False, params=None):
    p = {"T": 5.0, "dt": 0.1, "delta": 0.01, "horizon": 2.0}
    report = lambda q: SimpleNamespace(params=dict(q))  # noqa: E731
    inside = SimpleNamespace(found=interior, params=dict(p),
                             to_dict=lambda: {"found": interior})
    return SimpleNamespace(
        estimate=SimpleNamespace(system=sys, params=dict(p), verdict_fraction=fraction),
        closure_estimate=report(p), closure=report(p), phi_invariance=report(params or p),
        interior=inside, g_minus=None, params=lambda: dict(p))


def test_r5_fires_on_high_acceptance():
    sys = scalar_system(-1.0)
    v = decide(sys, evidence=stub_evidence(sys, fraction=0.995))
    assert v.trace == ["R1", "R5"] and v.outcome == NUMERICAL_EVIDENCE
    assert v.rules_fired[-1]["inputs"]["sampling"]["delta"] == 0.01


def test_r5_not_met_falls_to_r6():
    sys = scalar_system(-1.0)
    v = decide(sys, evidence=stub_evidence(sys, fraction=0.3))
    assert v.trace == ["R1", "R6"] and v.outcome == UNKNOWN
    assert any(n.startswith("R5 not met") for n in v.notes)


def test_r4_needs_flag_and_interior():
    sys = sl2_system()
    ev = stub_evidence(sys, interior=True)
    assert decide(sys, evidence=ev, finite_semisimple_center=True).trace == ["R1", "R4"]
    blocked = decide(sys, evidence=ev)
    assert "R4" not in blocked.trace
    assert any("flag not set" in n for n in blocked.notes)
    no_int = decide(sys, evidence=stub_evidence(sys, interior=False), finite_semisimple_center=True)
    assert no_int.trace == ["R1", "R6"]


def test_evidence_mismatch():
    sys = scalar_system(-1.0)
    with pytest.raises(EvidenceMismatchError):
        decide(sys, evidence=stub_evidence(scalar_system(1.0)))
    bad = {"T": 5.0, "dt": 0.2, "delta": 0.01, "horizon": 2.0}
    with pytest.raises(EvidenceMismatchError):
        decide(sys, evidence=stub_evidence(sys, params=bad))


def test_verdict_is_deterministic_and_serializable():
    a = decide(sl2_system(), finite_semisimple_center=True).to_dict()
    b = decide(sl2_system(), finite_semisimple_center=True).to_dict()
    assert json.dumps(a, sort_keys=True, allow_nan=False) == json.dumps(b, sort_keys=True, allow_nan=False)
    assert a["version"]

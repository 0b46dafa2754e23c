"""Rule-based controllability decision with a full trace.

Rules are tried in order R0..R6 and the engine stops at the first conclusive
one. ``controllable`` comes only from the purely algebraic rules R2 and R3;
sampled evidence can at most yield ``controllable_numerical_evidence``.
``not_controllable`` is part of the outcome set but no rule emits it: none of
the available criteria certifies non-controllability.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lcs import __version__
from lcs.algebra import LieAlgebraSpec, generated_subalgebra, is_abelian, killing_form, nilpotency_class
from lcs.dynamics import SystemSpec
from lcs.errors import EvidenceMismatchError, NumericalError, ValidationError
from lcs.linalg import numerical_rank
from lcs.spectral import SignDecomposition, sign_decomposition
from lcs.tolerances import DEFAULT_TOL, Tolerances

CONTROLLABLE = "controllable"
NUMERICAL_EVIDENCE = "controllable_numerical_evidence"
NOT_CONTROLLABLE = "not_controllable"
UNKNOWN = "unknown"
OUTCOMES = (CONTROLLABLE, NUMERICAL_EVIDENCE, NOT_CONTROLLABLE, UNKNOWN)

CLASSES = ("abelian", "nilpotent", "compact_type", "semisimple_noncompact", "other")

ANCHORS = {
    "R0": "rank condition is a standing hypothesis of every criterion used here",
    "R1": "ad-rank condition puts e in the interior of each A_tau, so A is open",
    "R2": "for compact-type algebras an open reachable set is the whole group",
    "R3": "ad-rank together with a trivial stable subalgebra g- gives controllability",
    "R4": "semisimple noncompact, finite semisimple center: controllable iff S_Sigma has interior",
    "R5": "A = G exactly when A is invariant under the drift flow",
    "R6": "controllable iff G- is contained in S_Sigma (recommended follow-up)",
}

ACCEPTANCE_THRESHOLD = 0.99


@dataclass(frozen=True)
class RankResult:
    holds: bool
    dimension: int
    target: int

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {"holds": self.holds, "dimension": self.dimension, "target": self.target}


def _krylov(D: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Columns D^i b_j ordered by power then control: [B, DB, ..., D^{d-1} B]."""
    d = D.shape[0]
    blocks = [B]
    for _ in range(d - 1):
        blocks.append(D @ blocks[-1])
    return np.hstack(blocks)


def ad_rank(sys: SystemSpec, tol: Tolerances | None = None) -> RankResult:
    tol = sys.tol if tol is None else tol
    r = numerical_rank(_krylov(sys.drift, sys.controls.T), tol.eps_rank)
    return RankResult(r == sys.d, r, sys.d)


def rank_condition(sys: SystemSpec, tol: Tolerances | None = None) -> RankResult:
    tol = sys.tol if tol is None else tol
    # seeding with the Krylov vectors makes ad-rank => rank condition hold numerically too
    seeds = _krylov(sys.drift, sys.controls.T).T
    S = generated_subalgebra(sys.algebra, seeds, stabilizer=sys.drift, tol=tol)
    return RankResult(S.dim == sys.d, S.dim, sys.d)


def classify(obj: SystemSpec | LieAlgebraSpec, tol: Tolerances = DEFAULT_TOL) -> str:
    alg = obj.algebra if isinstance(obj, SystemSpec) else obj
    if is_abelian(alg, tol):
        return "abelian"
    if nilpotency_class(alg, tol=tol) is not None:
        return "nilpotent"
    ev = np.linalg.eigvalsh(killing_form(alg))
    thr = tol.eps_rank * max(1.0, float(np.abs(ev).max()))
    if np.all(ev < -thr):
        return "compact_type"
    if np.all(np.abs(ev) > thr):
        return "semisimple_noncompact"
    return "other"


@dataclass
class KalmanReport:
    ad_rank: RankResult
    kalman_rank: int
    d: int

    @property
    def agree(self) -> bool:
        return self.ad_rank.holds == (self.kalman_rank == self.d)

    def to_dict(self) -> dict:
        return {"agree": self.agree, "ad_rank": self.ad_rank.to_dict(),
                "kalman_rank": self.kalman_rank, "d": self.d}


def kalman_crosscheck(sys: SystemSpec, tol: Tolerances | None = None) -> KalmanReport:
    """ad-rank against rank[B, AB, ..., A^{d-1}B] for an abelian system x' = Ax + Bu."""
    tol = sys.tol if tol is None else tol
    if classify(sys, tol) != "abelian":
        raise ValidationError("Kalman cross-check applies to abelian systems only")
    A = sys.drift
    B = sys.controls.T
    d = A.shape[0]
    C = np.hstack([np.linalg.matrix_power(A, i) @ B for i in range(d)])
    return KalmanReport(ad_rank(sys, tol), numerical_rank(C, tol.eps_rank), d)


@dataclass
class Verdict:
    outcome: str
    rules_fired: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    attachments: dict = field(default_factory=dict)

    @property
    def trace(self) -> list[str]:
        return [r["rule"] for r in self.rules_fired]

    def to_dict(self) -> dict:
        return {"outcome": self.outcome, "trace": self.trace, "rules_fired": self.rules_fired,
                "assumptions": self.assumptions, "notes": self.notes,
                "parameters": self.parameters, "attachments": self.attachments,
                "version": __version__}


def _fire(v: Verdict, rule: str, **inputs) -> None:
    v.rules_fired.append({"rule": rule, "anchor": ANCHORS[rule], "inputs": inputs})


def _evidence_params(evidence) -> dict:
    """Shared sampling parameters of every report in the bundle; mismatches raise."""
    keys = ("T", "dt", "delta", "horizon")
    reports = {"estimate": evidence.estimate.params, "closure_estimate": evidence.closure_estimate.params,
               "closure": evidence.closure.params, "phi_invariance": evidence.phi_invariance.params,
               "interior": evidence.interior.params}
    if evidence.g_minus is not None:
        reports["g_minus"] = evidence.g_minus.params
    ref = {k: reports["estimate"][k] for k in keys}
    for name, p in reports.items():
        got = {k: p.get(k) for k in keys}
        if got != ref:
            raise EvidenceMismatchError(f"{name} report was computed with {got}, estimate with {ref}")
    return ref


def _same_system(a: SystemSpec, b: SystemSpec) -> bool:
    return (a.algebra is b.algebra or np.array_equal(a.algebra.structure_constants,
                                                     b.algebra.structure_constants)) \
        and np.array_equal(a.drift, b.drift) and np.array_equal(a.controls, b.controls)


def decide(sys: SystemSpec, dec: SignDecomposition | None = None, evidence=None,
           finite_semisimple_center: bool = False, tol: Tolerances | None = None) -> Verdict:
    """Apply R0..R6 in order; ``evidence`` is an optional semigroup analysis bundle."""
    tol = sys.tol if tol is None else tol
    params = {"tolerances": tol.to_dict()}
    ev_params = None
    if evidence is not None:
        if not _same_system(evidence.estimate.system, sys):
            raise EvidenceMismatchError("evidence was computed for a different system")
        ev_params = _evidence_params(evidence)
        params["evidence"] = dict(evidence.params())
    v = Verdict(UNKNOWN, parameters=params)
    if finite_semisimple_center:
        v.assumptions.append("finite_semisimple_center (declared)")

    rc = rank_condition(sys, tol)
    ar = ad_rank(sys, tol)
    if ar.holds and not rc.holds:
        raise NumericalError("ad-rank holds but the rank condition fails; rank tolerances are inconsistent")
    if not rc.holds:
        _fire(v, "R0", rank_condition=rc.to_dict())
        v.notes.append("rank condition fails; no criterion applies")
        return v

    dec = sign_decomposition(sys.algebra, sys.drift, tol) if dec is None else dec
    cls = classify(sys, tol)
    if ar.holds:
        _fire(v, "R1", ad_rank=ar.to_dict())
        v.assumptions.append("A open with e in int A_tau (from ad-rank)")
        if cls == "compact_type":
            _fire(v, "R2", structure_class=cls)
            v.outcome = CONTROLLABLE
            return v
        if dec.minus.dim == 0:
            _fire(v, "R3", dims=list(dec.dims))
            v.outcome = CONTROLLABLE
            return v
        if cls == "semisimple_noncompact":
            missing = []
            if not finite_semisimple_center:
                missing.append("finite_semisimple_center flag not set")
            if evidence is None:
                missing.append("no semigroup evidence supplied")
            elif not evidence.interior.found:
                missing.append("no interior evidence at the sampled resolution")
            if not missing:
                _fire(v, "R4", structure_class=cls, interior=evidence.interior.to_dict(),
                      sampling=ev_params)
                v.assumptions.append("interior evidence is numerical, not a certificate")
                v.outcome = NUMERICAL_EVIDENCE
                return v
            v.notes.append("R4 blocked: " + "; ".join(missing))
    else:
        v.notes.append(f"ad-rank fails (dimension {ar.dimension} of {ar.target}); R1-R4 do not apply")

    if evidence is not None:
        frac = evidence.estimate.verdict_fraction
        if frac >= ACCEPTANCE_THRESHOLD:
            _fire(v, "R5", acceptance_fraction=frac, threshold=ACCEPTANCE_THRESHOLD, sampling=ev_params)
            v.outcome = NUMERICAL_EVIDENCE
            return v
        v.notes.append(f"R5 not met: acceptance fraction {frac:.4g} < {ACCEPTANCE_THRESHOLD}")

    _fire(v, "R6", structure_class=cls, dims=list(dec.dims))
    if evidence is not None and evidence.g_minus is not None:
        v.attachments["g_minus"] = evidence.g_minus.to_dict()
    else:
        v.notes.append("run the G- criterion with semigroup evidence as the follow-up")
    return v

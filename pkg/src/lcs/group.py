"""Matrix realizations of the connected group G.

Three realization classes are supported:

``abelian`` and ``nilpotent_simply_connected``
    unipotent matrix groups; exp and log are exact finite series and the
    automorphism flow is ``exp . e^{tD} . log``.
``matrix_inner``
    the drift derivation is inner, ``D = ad(X_D)``, and the flow is
    conjugation by ``exp(t X_D)``.

Group elements are plain ``(n, n)`` arrays; every function also accepts a
batch ``(..., n, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from lcs.algebra import (LieAlgebraSpec, Subspace, is_abelian, nilpotency_class,
                         inner_element_for)
from lcs.errors import LogDomainError, ValidationError
from lcs.tolerances import DEFAULT_TOL, Tolerances

KINDS = ("abelian", "nilpotent_simply_connected", "matrix_inner")
UNIPOTENT = ("abelian", "nilpotent_simply_connected")


def _unipotent_basis(alg: LieAlgebraSpec, tol: Tolerances) -> bool:
    """True if every element of the realized algebra is a nilpotent matrix."""
    n = alg.ambient_size
    rng = np.random.default_rng(12345)
    for _ in range(4):
        A = alg.matrix(rng.normal(size=alg.dim))
        P = np.linalg.matrix_power(A, n)
        if np.abs(P).max() > tol.eps_alg * max(1.0, np.abs(A).max() ** n):
            return False
    return True


@dataclass(frozen=True, eq=False)
class GroupRealization:
    kind: str
    algebra: LieAlgebraSpec
    inner_element: np.ndarray | None = None
    nilpotency_class: int | None = None
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        alg = self.algebra
        if self.kind not in KINDS:
            raise ValidationError(f"unknown realization class {self.kind!r}")
        if alg.basis is None:
            raise ValidationError(f"algebra {alg.name!r} has no matrix basis; "
                                  "group-level simulation needs one")
        if self.kind == "abelian" and not is_abelian(alg, self.tol):
            raise ValidationError("abelian realization requires zero structure constants")
        if self.kind in UNIPOTENT:
            k = nilpotency_class(alg, tol=self.tol)
            if k is None:
                raise ValidationError("nilpotent realization requires a nilpotent algebra")
            if not _unipotent_basis(alg, self.tol):
                raise ValidationError("unipotent realization requires nilpotent basis matrices")
            object.__setattr__(self, "nilpotency_class", k)
        if self.kind == "matrix_inner":
            if self.inner_element is None:
                raise ValidationError("matrix_inner realization requires an inner element X_D")
            x = np.array(self.inner_element, dtype=float)
            if x.shape != (alg.dim,):
                raise ValidationError("inner element has the wrong length")
            x.setflags(write=False)
            object.__setattr__(self, "inner_element", x)

    @property
    def ambient_size(self) -> int:
        return self.algebra.ambient_size

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.ambient_size)

    @property
    def unipotent(self) -> bool:
        return self.kind in UNIPOTENT

    @property
    def inner_matrix(self) -> np.ndarray:
        return self.algebra.matrix(self.inner_element)

    def check_drift(self, D) -> None:
        """Raise unless ``D`` is compatible with this realization."""
        if self.kind == "matrix_inner":
            r = float(np.abs(self.algebra.ad(self.inner_element) - np.asarray(D)).max())
            if r > self.tol.eps_alg:
                raise ValidationError(f"D differs from ad(X_D) by {r:.3g}")

    def to_dict(self) -> dict:
        return {"class": self.kind, "ambient_size": self.ambient_size,
                "algebra": self.algebra.name,
                "inner_element": None if self.inner_element is None else self.inner_element.tolist(),
                "nilpotency_class": self.nilpotency_class}


def realize(alg: LieAlgebraSpec, kind: str | None = None, drift=None,
            inner_element=None, tol: Tolerances = DEFAULT_TOL) -> GroupRealization:
    """Pick (or check) a realization class for ``alg``.

    Without ``kind``: abelian if the bracket vanishes, nilpotent if the
    algebra is nilpotent, otherwise ``matrix_inner`` with ``X_D`` solved from
    ``drift`` when not given.
    """
    if kind is None:
        if is_abelian(alg, tol):
            kind = "abelian"
        elif nilpotency_class(alg, tol=tol) is not None:
            kind = "nilpotent_simply_connected"
        else:
            kind = "matrix_inner"
    if kind == "matrix_inner" and inner_element is None:
        if drift is None:
            raise ValidationError("matrix_inner realization needs an inner element or a drift")
        inner_element = inner_element_for(alg, drift, tol)
    return GroupRealization(kind, alg, inner_element, tol=tol)


# -- exponential and logarithm ------------------------------------------------

def _series_exp(A: np.ndarray, order: int) -> np.ndarray:
    n = A.shape[-1]
    out = np.broadcast_to(np.eye(n), A.shape).copy()
    term = out.copy()
    for k in range(1, order):
        term = term @ A / k
        out += term
    return out


def _series_log_unipotent(g: np.ndarray, order: int) -> np.ndarray:
    n = g.shape[-1]
    Y = g - np.eye(n)
    out = np.zeros_like(Y)
    P = np.broadcast_to(np.eye(n), Y.shape).copy()
    for k in range(1, order):
        P = P @ Y
        out += ((-1) ** (k + 1) / k) * P
    return out


def exp_matrix(G: GroupRealization, A: np.ndarray) -> np.ndarray:
    """Exponential of realized algebra matrices (batched)."""
    if G.unipotent:
        return _series_exp(A, G.ambient_size)
    return scipy.linalg.expm(A)


def exp(G: GroupRealization, x) -> np.ndarray:
    return exp_matrix(G, G.algebra.matrix(np.asarray(x, dtype=float)))


def _log_matrix_inner(g: np.ndarray) -> np.ndarray:
    n = g.shape[-1]
    if np.linalg.norm(g - np.eye(n)) >= 1.0:
        raise LogDomainError("matrix logarithm requested outside ||g - I|| < 1")
    L = scipy.linalg.logm(g)
    return np.real(L)


def log_matrix(G: GroupRealization, g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if G.unipotent:
        return _series_log_unipotent(g, G.ambient_size)
    if g.ndim == 2:
        return _log_matrix_inner(g)
    flat = g.reshape(-1, *g.shape[-2:])
    return np.array([_log_matrix_inner(m) for m in flat]).reshape(g.shape)


def log(G: GroupRealization, g) -> np.ndarray:
    """Algebra coordinates of the logarithm (batched)."""
    return G.algebra.coordinates(log_matrix(G, g))


def log_residual(G: GroupRealization, g) -> np.ndarray:
    """Frobenius distance between log(g) and the span of the basis matrices."""
    L = log_matrix(G, g)
    back = G.algebra.matrix(G.algebra.coordinates(L))
    return np.linalg.norm(L - back, axis=(-2, -1))


def group_residual(G: GroupRealization, g) -> np.ndarray:
    """How far ``g`` has drifted off the group (0 on exact group elements)."""
    g = np.asarray(g, dtype=float)
    n = G.ambient_size
    if G.unipotent:
        Y = g - np.eye(n)
        nil = np.linalg.norm(np.linalg.matrix_power(Y, n), axis=(-2, -1))
        return nil + log_residual(G, g)
    B = G.algebra.basis
    res = np.zeros(g.shape[:-2])
    if np.abs(np.trace(B, axis1=1, axis2=2)).max() < G.tol.eps_alg:
        res = res + np.abs(np.linalg.det(g) - 1.0)
    if np.abs(B + B.transpose(0, 2, 1)).max() < G.tol.eps_alg:
        gtg = np.swapaxes(g, -1, -2) @ g
        res = res + np.linalg.norm(gtg - np.eye(n), axis=(-2, -1))
    return res


# -- automorphism flow --------------------------------------------------------

def flow(G: GroupRealization, D, t: float, g) -> np.ndarray:
    """phi_t(g) for the flow with differential e^{tD} at the identity."""
    D = np.asarray(D, dtype=float)
    G.check_drift(D)
    g = np.asarray(g, dtype=float)
    if G.unipotent:
        v = log(G, g)
        return exp(G, v @ scipy.linalg.expm(t * D).T)
    X = G.inner_matrix
    C = scipy.linalg.expm(t * X)
    Ci = scipy.linalg.expm(-t * X)
    return C @ g @ Ci


def flow_via_log(G: GroupRealization, D, t: float, g) -> np.ndarray:
    """phi_t computed as exp(e^{tD} log g); cross-check route for matrix_inner near e."""
    v = log(G, g)
    return exp(G, v @ scipy.linalg.expm(t * np.asarray(D, float)).T)


def _dexp_left(alg: LieAlgebraSpec, v: np.ndarray, w: np.ndarray, order: int) -> np.ndarray:
    """Coordinates of exp(-A) dexp_A(W): sum_k (-1)^k / (k+1)! ad_v^k w, truncated."""
    if order < 2:
        return w
    d = alg.dim
    ad_v = (v @ alg.structure_constants.reshape(d, d * d)).reshape(*v.shape[:-1], d, d)
    out = w.copy()
    term = w[..., None, :]
    fact = 1.0
    for k in range(1, order):
        fact *= k + 1
        term = term @ ad_v
        out = out + ((-1) ** k / fact) * term[..., 0, :]
    return out


def drift_field(G: GroupRealization, D, g) -> np.ndarray:
    """Linear vector field ``d/ds phi_s(g)`` at s = 0 in ambient matrix space."""
    g = np.asarray(g, dtype=float)
    if G.unipotent:
        alg = G.algebra
        v = log(G, g)
        w = _dexp_left(alg, v, v @ np.asarray(D, float).T, G.nilpotency_class)
        return g @ alg.matrix(w)
    X = G.inner_matrix
    return X @ g - g @ X


# -- subgroups ----------------------------------------------------------------

def _ball(rng: np.random.Generator, count: int, k: int, radius: float) -> np.ndarray:
    if k == 0:
        return np.zeros((count, 0))
    y = rng.normal(size=(count, k))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / k)
    return y * r[:, None]


def subgroup_sample(G: GroupRealization, S: Subspace, count: int, radius: float,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """``count`` elements exp(v), v uniform in the radius-ball of S."""
    rng = np.random.default_rng(0) if rng is None else rng
    v = _ball(rng, count, S.dim, radius) @ S.basis.T
    if S.dim == 0:
        v = np.zeros((count, G.algebra.dim))
    return exp(G, v)


@dataclass
class FlowInvarianceReport:
    max_residual: float
    tested: int
    skipped: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_residual": self.max_residual, "tested": self.tested,
                "skipped_out_of_log_domain": self.skipped, "tolerance": self.tolerance}


def check_flow_invariance(G: GroupRealization, D, S: Subspace, t_grid, count: int = 20,
                          radius: float = 0.5, rng: np.random.Generator | None = None,
                          tol: Tolerances | None = None) -> FlowInvarianceReport:
    """Check ``log(phi_t(g))`` stays in S for sampled g in exp(S).

    Samples whose image leaves the log domain (matrix_inner only) are counted
    as skipped rather than failed.
    """
    tol = G.tol if tol is None else tol
    gs = subgroup_sample(G, S, count, radius, rng)
    worst, tested, skipped = 0.0, 0, 0
    for t in t_grid:
        imgs = flow(G, D, float(t), gs)
        for h in imgs:
            try:
                v = log(G, h)
            except LogDomainError:
                skipped += 1
                continue
            tested += 1
            worst = max(worst, float(S.residual(v)[0]))
    return FlowInvarianceReport(worst, tested, skipped, tol.eps_grade)

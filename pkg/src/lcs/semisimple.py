"""Iwasawa data and Jordan triples for sl(n, R).

Only realizations whose basis spans the traceless n x n matrices are
accepted. Other semisimple inputs are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lcs import catalog
from lcs.algebra import LieAlgebraSpec, Subspace
from lcs.errors import DecompositionError, ValidationError
from lcs.linalg import null_space
from lcs.spectral import eigen_clusters
from lcs.tolerances import DEFAULT_TOL, Tolerances


def _require_sl(alg: LieAlgebraSpec, tol: Tolerances = DEFAULT_TOL) -> int:
    if alg.basis is None:
        raise ValidationError("semisimple tools need a matrix realization")
    n = alg.ambient_size
    traces = np.abs(np.trace(alg.basis, axis1=1, axis2=2)).max()
    if alg.dim != n * n - 1 or traces > tol.eps_alg:
        raise ValidationError(f"only sl(n, R) realizations are supported (got dim {alg.dim} in "
                              f"{n}x{n} matrices); other semisimple algebras are out of scope")
    return n


@dataclass(frozen=True)
class Root:
    i: int
    j: int

    @property
    def sign(self) -> str:
        return "+" if self.i < self.j else "-"

    def __call__(self, diag) -> float:
        diag = np.asarray(diag, float)
        return float(diag[self.i] - diag[self.j])

    def to_dict(self) -> dict:
        return {"pair": [self.i, self.j], "sign": self.sign}


@dataclass(frozen=True, eq=False)
class IwasawaFrame:
    algebra: LieAlgebraSpec
    k: Subspace
    a: Subspace
    n_plus: Subspace
    n_minus: Subspace
    s: Subspace
    cartan_involution: np.ndarray
    roots: tuple[Root, ...]

    @property
    def n(self) -> int:
        return self.algebra.ambient_size

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.k.dim, self.a.dim, self.n_plus.dim

    def chamber_point(self) -> np.ndarray:
        """An interior point of the positive chamber d_1 > ... > d_n (diagonal entries)."""
        n = self.n
        return np.arange(n - 1, -n, -2, dtype=float)

    def in_chamber(self, diag, strict: bool = True) -> bool:
        dd = np.diff(np.asarray(diag, float))
        return bool(np.all(dd < 0) if strict else np.all(dd <= 0))

    def positive_roots(self) -> list[Root]:
        return [r for r in self.roots if r.sign == "+"]

    def to_dict(self) -> dict:
        return {"n": self.n, "dims": {"k": self.k.dim, "a": self.a.dim, "n_plus": self.n_plus.dim,
                                      "n_minus": self.n_minus.dim, "s": self.s.dim},
                "k": self.k.to_list(), "a": self.a.to_list(), "n_plus": self.n_plus.to_list(),
                "n_minus": self.n_minus.to_list(), "s": self.s.to_list(),
                "cartan_involution": self.cartan_involution.tolist(),
                "weyl_chamber": "diagonal entries strictly decreasing",
                "roots": [r.to_dict() for r in self.roots]}


def iwasawa_frame(n: int, alg: LieAlgebraSpec | None = None,
                  tol: Tolerances = DEFAULT_TOL) -> IwasawaFrame:
    """Standard frame: k antisymmetric, a traceless diagonal, n+/n- strictly upper/lower."""
    if n < 2:
        raise ValidationError("sl(n) needs n >= 2")
    alg = catalog.sl(n) if alg is None else alg
    if _require_sl(alg, tol) != n:
        raise ValidationError("algebra size does not match n")
    d = alg.dim
    B = alg.basis
    Z = alg.coordinates(-np.swapaxes(B, 1, 2)).T

    def unit(i, j):
        m = np.zeros((n, n))
        m[i, j] = 1.0
        return m

    co = alg.coordinates
    k = Subspace.span(co(np.array([unit(i, j) - unit(j, i) for i in range(n) for j in range(i + 1, n)])), d)
    s = Subspace.span(co(np.array([unit(i, j) + unit(j, i) for i in range(n) for j in range(i + 1, n)]
                                  + [unit(i, i) - unit(i + 1, i + 1) for i in range(n - 1)])), d)
    a = Subspace.span(co(np.array([unit(i, i) - unit(i + 1, i + 1) for i in range(n - 1)])), d)
    npl = Subspace.span(co(np.array([unit(i, j) for i in range(n) for j in range(i + 1, n)])), d)
    nmi = Subspace.span(co(np.array([unit(j, i) for i in range(n) for j in range(i + 1, n)])), d)
    roots = tuple(Root(i, j) for i in range(n) for j in range(n) if i != j)
    for name, parts in (("n+", npl), ("n-", nmi)):
        stacked = np.hstack([k.basis, a.basis, parts.basis])
        if np.linalg.matrix_rank(stacked) != d:
            raise DecompositionError(f"k + a + {name} is not a direct sum")
    return IwasawaFrame(alg, k, a, npl, nmi, s, Z, roots)


@dataclass
class JordanTriple:
    elliptic: np.ndarray
    hyperbolic: np.ndarray
    nilpotent: np.ndarray
    conjugator: np.ndarray

    def to_dict(self) -> dict:
        return {"elliptic": self.elliptic.tolist(), "hyperbolic": self.hyperbolic.tolist(),
                "nilpotent": self.nilpotent.tolist(), "conjugator": self.conjugator.tolist()}


def _generalized_basis(Xm: np.ndarray, lam: complex, m: int, tol: Tolerances) -> np.ndarray:
    n = Xm.shape[0]
    P = np.linalg.matrix_power(Xm - lam * np.eye(n), m)
    V, k, _ = null_space(P, tol.eps_rank)
    if k != m:
        raise DecompositionError(f"generalized eigenspace at {lam:.6g} has dimension {k}, expected {m}")
    return V


def _is_nilpotent(Xm: np.ndarray) -> bool:
    """tr(Y^k) = 0 for k = 1..n, at rounding level for Y = X / max|X|."""
    scale = np.abs(Xm).max()
    if scale == 0.0:
        return True
    n = Xm.shape[0]
    Y = Xm / scale
    P = np.eye(n)
    thr = 64 * n ** n * np.finfo(float).eps
    for _ in range(n):
        P = P @ Y
        if abs(np.trace(P)) > thr:
            return False
    return True


def jordan_triple(alg: LieAlgebraSpec, X, tol: Tolerances = DEFAULT_TOL) -> JordanTriple:
    """Commuting elliptic, hyperbolic and nilpotent parts with E + H + N = X.

    The semisimple part comes from spectral projectors over clustered
    eigenvalues and splits by real and imaginary eigenvalue parts. The
    conjugator P satisfies ``P H P^-1 = diag`` with descending entries.
    """
    n = _require_sl(alg, tol)
    X = np.asarray(X, float)
    Xm = alg.matrix(X)
    if abs(np.trace(Xm)) > tol.eps_alg:
        raise ValidationError("input is not traceless")
    d = alg.dim
    zero = np.zeros(d)
    if _is_nilpotent(Xm):
        # eigenvalue clustering would be defeated by the eps^(1/n) spread
        return JordanTriple(zero.copy(), zero.copy(), X.copy(), np.eye(n))

    cols, lams = [], []
    real_cols, real_keys = [], []
    for c in eigen_clusters(Xm, tol):
        lam = complex(c.value)
        V = _generalized_basis(Xm, lam, c.multiplicity, tol)
        if c.conjugate_pair:
            cols += [V, V.conj()]
            lams += [lam] * c.multiplicity + [lam.conjugate()] * c.multiplicity
            real_cols += [V.real, V.imag]
            real_keys += [lam.real] * (2 * c.multiplicity)
        else:
            cols.append(V.real)
            lams += [lam.real] * c.multiplicity
            real_cols.append(V.real)
            real_keys += [lam.real] * c.multiplicity
    V = np.hstack(cols)
    lam = np.array(lams)
    Vi = np.linalg.inv(V)
    H = np.real(V @ np.diag(lam.real) @ Vi)
    E = np.real(V @ np.diag(1j * lam.imag) @ Vi)
    Nm = Xm - H - E
    W = np.hstack(real_cols)
    order = np.argsort(-np.array(real_keys), kind="stable")
    P = np.linalg.inv(W[:, order])
    triple = JordanTriple(alg.coordinates(E), alg.coordinates(H), alg.coordinates(Nm), P)
    # nearly parallel eigenvectors (cond V ~ |X| / gap) can wreck the projectors
    if not (check_triple(alg, X, triple, tol).passed and spectrum_link(alg, X, triple, tol).passed):
        raise DecompositionError(f"eigenbasis too ill-conditioned for a reliable split "
                                 f"(cond {np.linalg.cond(V):.3g})")
    return triple


@dataclass
class TripleReport:
    reconstruction: float
    brackets: dict
    elliptic_real: float
    hyperbolic_imag: float
    nilpotent_power: float
    conjugator_offdiag: float
    conjugator_ascending: bool
    tol: Tolerances

    @property
    def passed(self) -> bool:
        t = self.tol
        return (self.reconstruction < t.eps_alg and max(self.brackets.values()) < t.eps_alg
                and self.elliptic_real < t.eps_sign and self.hyperbolic_imag < t.eps_sign
                and self.nilpotent_power < t.eps_alg)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "reconstruction": self.reconstruction,
                "brackets": self.brackets, "elliptic_max_abs_real": self.elliptic_real,
                "hyperbolic_max_abs_imag": self.hyperbolic_imag,
                "nilpotent_ad_power": self.nilpotent_power,
                "conjugator_offdiag": self.conjugator_offdiag,
                "conjugator_ascending": self.conjugator_ascending}


def check_triple(alg: LieAlgebraSpec, X, tr: JordanTriple, tol: Tolerances = DEFAULT_TOL) -> TripleReport:
    X = np.asarray(X, float)
    E, H, N = tr.elliptic, tr.hyperbolic, tr.nilpotent
    Em, Hm, Nm = alg.matrix(E), alg.matrix(H), alg.matrix(N)

    def br(A, B):
        return float(np.linalg.norm(A @ B - B @ A))

    brackets = {"EH": br(Em, Hm), "EN": br(Em, Nm), "HN": br(Hm, Nm)}
    adE = np.linalg.eigvals(alg.ad(E))
    adH = np.linalg.eigvals(alg.ad(H))
    adN = alg.ad(N)
    d = alg.dim
    diag = tr.conjugator @ Hm @ np.linalg.inv(tr.conjugator)
    off = float(np.abs(diag - np.diag(np.diag(diag))).max())
    return TripleReport(
        reconstruction=float(np.linalg.norm(E + H + N - X)),
        brackets=brackets,
        elliptic_real=float(np.abs(adE.real).max()),
        hyperbolic_imag=float(np.abs(adH.imag).max()),
        nilpotent_power=float(np.abs(np.linalg.matrix_power(adN, d)).max()),
        conjugator_offdiag=off,
        conjugator_ascending=bool(np.any(np.diff(np.diag(diag)) > tol.eps_eig)),
        tol=tol)


@dataclass
class SpectrumLinkReport:
    re_spec_ad_x: list
    spec_ad_h: list
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def to_dict(self) -> dict:
        return {"passed": self.passed, "re_spec_ad_x": self.re_spec_ad_x,
                "spec_ad_h": self.spec_ad_h, "max_deviation": self.max_deviation,
                "tolerance": self.tolerance}


def spectrum_link(alg: LieAlgebraSpec, X, triple: JordanTriple,
                  tol: Tolerances = DEFAULT_TOL) -> SpectrumLinkReport:
    """Compare the sorted multisets Re spec(ad X) and spec(ad H)."""
    rx = np.sort(np.linalg.eigvals(alg.ad(np.asarray(X, float))).real)
    sh = np.linalg.eigvals(alg.ad(triple.hyperbolic))
    dev = float(max(np.abs(rx - np.sort(sh.real)).max(), np.abs(sh.imag).max()))
    return SpectrumLinkReport(rx.tolist(), np.sort(sh.real).tolist(), dev, tol.eps_eig)

"""Generalized eigenspaces of a derivation and the sign decomposition.

Eigenvalues of ``D`` are clustered, conjugate pairs are merged into a single
real subspace, and clusters are grouped by the sign of their real part into
``g+``, ``g0``, ``g-``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from lcs.algebra import (LieAlgebraSpec, Subspace, _pair_brackets, closure_residual,
                         is_derivation, is_nilpotent_subalgebra)
from lcs.errors import DecompositionError, NotDerivationError, NotSubalgebraError, ValidationError
from lcs.linalg import null_space, orthonormal_columns
from lcs.tolerances import DEFAULT_TOL, Tolerances

SIGNS = ("+", "0", "-")


@dataclass(frozen=True)
class EigenCluster:
    value: complex
    multiplicity: int
    conjugate_pair: bool
    real_part_sign: str

    @property
    def real_dim(self) -> int:
        """Dimension of the real generalized eigenspace (2x for conjugate pairs)."""
        return 2 * self.multiplicity if self.conjugate_pair else self.multiplicity

    def members(self) -> tuple[complex, ...]:
        v = complex(self.value)
        return (v, v.conjugate()) if self.conjugate_pair else (v,)

    def matches(self, z: complex, eps: float) -> bool:
        return any(abs(z - v) < eps for v in self.members())

    def to_dict(self) -> dict:
        v = complex(self.value)
        return {"value": [v.real, v.imag], "multiplicity": self.multiplicity,
                "conjugate_pair": self.conjugate_pair, "real_part_sign": self.real_part_sign}


def _sign(re: float, eps_sign: float) -> str:
    if re > eps_sign:
        return "+"
    if re < -eps_sign:
        return "-"
    return "0"


def eigen_clusters(D, tol: Tolerances = DEFAULT_TOL) -> list[EigenCluster]:
    """Cluster the spectrum of ``D`` by single linkage at ``eps_eig``.

    Raises ``DecompositionError`` if a cluster is wider than ``eps_eig`` or two
    clusters are closer than ``2 eps_eig``; either makes the multiplicity
    bookkeeping ambiguous.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError("D must be square")
    ev = np.linalg.eigvals(D)
    n = ev.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(n), 2):
        if abs(ev[i] - ev[j]) < tol.eps_eig:
            parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    raw = []
    for idx in groups.values():
        pts = ev[idx]
        diam = max((abs(a - b) for a, b in itertools.combinations(pts, 2)), default=0.0)
        if diam >= tol.eps_eig:
            raise DecompositionError(f"eigenvalue cluster near {pts.mean():.6g} has diameter {diam:.3g}")
        raw.append((complex(pts.mean()), len(idx)))
    for (a, _), (b, _) in itertools.combinations(raw, 2):
        if abs(a - b) <= 2 * tol.eps_eig:
            raise DecompositionError(f"eigenvalues {a:.6g} and {b:.6g} are not separated")

    clusters = []
    used = set()
    for k, (z, m) in enumerate(raw):
        if k in used:
            continue
        if abs(z.imag) < tol.eps_eig:
            clusters.append(EigenCluster(complex(z.real, 0.0), m, False, _sign(z.real, tol.eps_sign)))
            used.add(k)
            continue
        partner = [j for j, (w, _) in enumerate(raw)
                   if j != k and j not in used and abs(w - z.conjugate()) < tol.eps_eig]
        if len(partner) != 1 or raw[partner[0]][1] != m:
            raise DecompositionError(f"no conjugate partner for eigenvalue {z:.6g}")
        j = partner[0]
        used.update((k, j))
        w = raw[j][0]
        top = complex(0.5 * (z.real + w.real), 0.5 * (abs(z.imag) + abs(w.imag)))
        clusters.append(EigenCluster(top, m, True, _sign(top.real, tol.eps_sign)))
    clusters.sort(key=lambda c: (-c.value.real, -c.value.imag))
    return clusters


def _cluster_polynomial(D: np.ndarray, cluster: EigenCluster) -> np.ndarray:
    d = D.shape[0]
    a = complex(cluster.value)
    if cluster.conjugate_pair:
        return D @ D - 2 * a.real * D + abs(a) ** 2 * np.eye(d)
    return D - a.real * np.eye(d)


def generalized_eigenspace(alg: LieAlgebraSpec, D, cluster: EigenCluster,
                           tol: Tolerances = DEFAULT_TOL, check: bool = True) -> Subspace:
    """Real generalized eigenspace as the kernel of ``p(D)^m``.

    ``p`` is the real polynomial of the cluster (degree 1, or 2 for a
    conjugate pair) and ``m`` its multiplicity, which bounds the index.
    """
    D = np.asarray(D, dtype=float)
    if check:
        ok, r = is_derivation(alg, D, tol)
        if not ok:
            raise NotDerivationError(f"D is not a derivation (residual {r:.3g})")
        ev = np.linalg.eigvals(D)
        if not any(cluster.matches(z, tol.eps_eig) for z in ev):
            raise ValidationError(f"cluster {cluster.value} is not in the spectrum of D")
    P = np.linalg.matrix_power(_cluster_polynomial(D, cluster), cluster.multiplicity)
    basis, k, _ = null_space(P, tol.eps_rank)
    if k != cluster.real_dim:
        raise DecompositionError(
            f"generalized eigenspace for {cluster.value:.6g} has dimension {k}, "
            f"expected {cluster.real_dim}")
    return Subspace(alg.dim, np.real_if_close(basis).real)


@dataclass(frozen=True, eq=False)
class SignDecomposition:
    clusters: tuple[EigenCluster, ...]
    per_cluster: tuple[Subspace, ...]
    plus: Subspace
    zero: Subspace
    minus: Subspace
    plus_zero: Subspace
    minus_zero: Subspace
    sensitive: tuple[dict, ...] = field(default=())

    @property
    def dims(self) -> tuple[int, int, int]:
        """(dim g+, dim g0, dim g-)."""
        return self.plus.dim, self.zero.dim, self.minus.dim

    def part(self, name: str) -> Subspace:
        return {"plus": self.plus, "zero": self.zero, "minus": self.minus,
                "plus_zero": self.plus_zero, "minus_zero": self.minus_zero}[name]

    def subspace_for(self, cluster: EigenCluster) -> Subspace:
        return self.per_cluster[self.clusters.index(cluster)]

    def to_dict(self) -> dict:
        return {
            "dims": {"plus": self.plus.dim, "zero": self.zero.dim, "minus": self.minus.dim},
            "clusters": [dict(c.to_dict(), basis=s.to_list())
                         for c, s in zip(self.clusters, self.per_cluster)],
            "bases": {k: self.part(k).to_list()
                      for k in ("plus", "zero", "minus", "plus_zero", "minus_zero")},
            "sensitive": list(self.sensitive),
        }


def sign_decomposition(alg: LieAlgebraSpec, D, tol: Tolerances = DEFAULT_TOL) -> SignDecomposition:
    D = np.asarray(D, dtype=float)
    ok, r = is_derivation(alg, D, tol)
    if not ok:
        raise NotDerivationError(f"D is not a derivation (residual {r:.3g})")
    d = alg.dim
    clusters = eigen_clusters(D, tol)
    subs = [generalized_eigenspace(alg, D, c, tol, check=False) for c in clusters]
    stacked = np.hstack([s.basis for s in subs])
    smin = np.linalg.svd(stacked, compute_uv=False).min()
    if stacked.shape[1] != d or smin <= tol.eps_rank:
        raise DecompositionError(f"generalized eigenspaces do not form a direct sum (s_min={smin:.3g})")

    def group(signs):
        cols = [s.basis for c, s in zip(clusters, subs) if c.real_part_sign in signs]
        if not cols:
            return Subspace.zero(d)
        return Subspace(d, orthonormal_columns(np.hstack(cols).T, d, tol.eps_rank))

    sensitive = []
    for c in clusters:
        re = abs(c.value.real)
        if tol.eps_sign < re < 10 * tol.eps_sign:
            sensitive.append({"cluster": c.to_dict(), "real_part": c.value.real,
                              "alternative_sign": "0", "shift": c.real_dim})
    return SignDecomposition(tuple(clusters), tuple(subs), group("+"), group("0"), group("-"),
                             group("+0"), group("-0"), tuple(sensitive))


@dataclass
class GradingReport:
    rows: list[dict]
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max((r["residual"] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_residual": self.max_residual,
                "tolerance": self.tolerance, "pairs": self.rows}


def check_grading(alg: LieAlgebraSpec, D, dec: SignDecomposition,
                  tol: Tolerances = DEFAULT_TOL) -> GradingReport:
    """Check ``[g_a, g_b]`` lies in the sum of the clusters at ``a + b``.

    For merged conjugate clusters all four sums of members are candidates.
    A sum that misses the spectrum by more than ``eps_eig`` contributes the
    zero subspace.
    """
    d = alg.dim
    rows = []
    n = len(dec.clusters)
    for i in range(n):
        for j in range(i, n):
            ca, cb = dec.clusters[i], dec.clusters[j]
            sa, sb = dec.per_cluster[i], dec.per_cluster[j]
            sums = {complex(round(z.real, 12), round(z.imag, 12))
                    for z in (a + b for a in ca.members() for b in cb.members())}
            targets = [k for k, c in enumerate(dec.clusters)
                       if any(c.matches(z, tol.eps_eig) for z in sums)]
            if targets:
                T = orthonormal_columns(np.hstack([dec.per_cluster[k].basis for k in targets]).T,
                                        d, tol.eps_rank)
            else:
                T = np.zeros((d, 0))
            br = _pair_brackets(alg, sa.basis, sb.basis)
            res = float(Subspace(d, T).residual(br).max()) if br.shape[1] else 0.0
            rows.append({
                "alpha": [ca.value.real, ca.value.imag],
                "beta": [cb.value.real, cb.value.imag],
                "targets": [[dec.clusters[k].value.real, dec.clusters[k].value.imag] for k in targets],
                "residual": res,
            })
    return GradingReport(rows, tol.eps_grade)


@dataclass
class StructureReport:
    subalgebra_residuals: dict
    ideal_residuals: dict
    nilpotent: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        worst = max(list(self.subalgebra_residuals.values()) + list(self.ideal_residuals.values()))
        return worst < self.tolerance and all(self.nilpotent.values())

    def to_dict(self) -> dict:
        return {"passed": self.passed, "subalgebra_residuals": self.subalgebra_residuals,
                "ideal_residuals": self.ideal_residuals, "nilpotent": self.nilpotent,
                "tolerance": self.tolerance}


def check_sign_structure(alg: LieAlgebraSpec, dec: SignDecomposition,
                         tol: Tolerances = DEFAULT_TOL) -> StructureReport:
    sub = {name: closure_residual(alg, dec.part(name))
           for name in ("plus", "zero", "minus", "plus_zero", "minus_zero")}
    ideal = {
        "plus_in_plus_zero": closure_residual(alg, dec.plus_zero, dec.plus, dec.plus),
        "minus_in_minus_zero": closure_residual(alg, dec.minus_zero, dec.minus, dec.minus),
    }
    nil = {}
    # computed subspaces are judged at eps_grade throughout, including the closure gate
    gate = tol.replace(eps_alg=max(tol.eps_alg, tol.eps_grade))
    for name in ("plus", "minus"):
        try:
            nil[name] = is_nilpotent_subalgebra(alg, dec.part(name), gate)
        except NotSubalgebraError:
            nil[name] = False
    return StructureReport(sub, ideal, nil, tol.eps_grade)

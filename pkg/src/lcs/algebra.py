"""Finite-dimensional real Lie algebras in coordinates.

Elements are coordinate vectors in a fixed basis ``e_1..e_d``; the bracket
is given by structure constants ``c[i, j, k]`` with
``[e_i, e_j] = sum_k c[i, j, k] e_k``. A matrix realization (one ``n x n``
matrix per basis element) can be attached; it is optional for everything in
this module.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lcs.errors import DimensionError, NotSubalgebraError, ValidationError
from lcs.linalg import off_span_residual, orthonormal_columns
from lcs.tolerances import DEFAULT_TOL, Tolerances


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LieAlgebraSpec:
    structure_constants: np.ndarray
    basis: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        c = _frozen(self.structure_constants)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] == 0:
            raise DimensionError(f"structure constants must have shape (d, d, d), got {c.shape}")
        object.__setattr__(self, "structure_constants", c)
        if self.basis is not None:
            b = _frozen(self.basis)
            if b.ndim != 3 or b.shape[0] != c.shape[0] or b.shape[1] != b.shape[2]:
                raise DimensionError(f"basis must have shape ({c.shape[0]}, n, n), got {b.shape}")
            object.__setattr__(self, "basis", b)

    @classmethod
    def from_basis(cls, basis, name: str = "", tol: Tolerances = DEFAULT_TOL) -> "LieAlgebraSpec":
        """Build structure constants from matrix commutators.

        Raises ``ValidationError`` if the matrices are dependent or their
        commutators leave the span.
        """
        B = np.asarray(basis, dtype=float)
        d = B.shape[0]
        flat = B.reshape(d, -1)
        if np.linalg.matrix_rank(flat, tol=tol.eps_rank) < d:
            raise ValidationError("basis matrices are linearly dependent")
        comm = np.einsum("iab,jbc->ijac", B, B) - np.einsum("jab,ibc->ijac", B, B)
        rhs = comm.reshape(d * d, -1).T
        coef, *_ = np.linalg.lstsq(flat.T, rhs, rcond=None)
        resid = np.abs(flat.T @ coef - rhs).max() if rhs.size else 0.0
        if resid > tol.eps_alg:
            raise ValidationError(f"basis is not closed under the commutator (residual {resid:.3g})")
        c = coef.T.reshape(d, d, d)
        c[np.abs(c) < 1e-15] = 0.0
        return cls(c, B, name)

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    @property
    def ambient_size(self) -> int | None:
        return None if self.basis is None else self.basis.shape[1]

    def ad(self, x) -> np.ndarray:
        """Matrix of ``y -> [x, y]`` acting on coordinate columns."""
        x = self._vec(x)
        return np.einsum("i,ijk->kj", x, self.structure_constants)

    def matrix(self, x) -> np.ndarray:
        """Realized matrix(es) ``sum_i x_i B_i``; ``x`` may be batched."""
        if self.basis is None:
            raise ValidationError(f"algebra {self.name!r} has no matrix realization")
        x = np.asarray(x, dtype=float)
        n = self.ambient_size
        return (x @ self.basis.reshape(self.dim, n * n)).reshape(*x.shape[:-1], n, n)

    def coordinates(self, M) -> np.ndarray:
        """Least-squares coordinates of realized matrices (batched)."""
        M = np.asarray(M)
        n2 = self.ambient_size ** 2
        flat = M.reshape(-1, n2)
        coef = flat @ self._pinv.T
        if np.iscomplexobj(coef):
            coef = coef.real
        return coef.reshape(M.shape[:-2] + (self.dim,))

    @property
    def _pinv(self):
        p = self.__dict__.get("_pinv_cache")
        if p is None:
            p = np.linalg.pinv(self.basis.reshape(self.dim, -1).T)
            object.__setattr__(self, "_pinv_cache", p)
        return p

    def _vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x

    def __repr__(self):
        return f"LieAlgebraSpec(name={self.name!r}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of the algebra stored by an orthonormal column basis."""

    ambient_dim: int
    basis: np.ndarray = field(default=None)

    def __post_init__(self):
        b = np.zeros((self.ambient_dim, 0)) if self.basis is None else np.asarray(self.basis, float)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise DimensionError(f"basis must have shape ({self.ambient_dim}, k)")
        object.__setattr__(self, "basis", _frozen(b))

    @classmethod
    def span(cls, vectors, ambient_dim: int, tol: Tolerances = DEFAULT_TOL) -> "Subspace":
        return cls(ambient_dim, orthonormal_columns(vectors, ambient_dim, tol.eps_rank))

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(d)

    @classmethod
    def full(cls, d: int) -> "Subspace":
        return cls(d, np.eye(d))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def basis_vectors(self) -> list[np.ndarray]:
        return [self.basis[:, i] for i in range(self.dim)]

    def residual(self, v) -> np.ndarray:
        return off_span_residual(self.basis, v)

    def project(self, v) -> np.ndarray:
        return self.basis @ (self.basis.T @ np.asarray(v, float))

    def same_span(self, other: "Subspace", tol: Tolerances = DEFAULT_TOL) -> bool:
        if self.dim != other.dim:
            return False
        if self.dim == 0:
            return True
        return bool(self.residual(other.basis).max() < tol.eps_rank * 10
                    and other.residual(self.basis).max() < tol.eps_rank * 10)

    def to_list(self) -> list[list[float]]:
        return self.basis.T.tolist()


@dataclass(frozen=True)
class ValidationReport:
    jacobi_residual: float
    antisymmetry_residual: float
    basis_mismatch: float | None
    tolerance: float

    @property
    def passed(self) -> bool:
        worst = max(self.jacobi_residual, self.antisymmetry_residual, self.basis_mismatch or 0.0)
        return worst < self.tolerance

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "jacobi_residual": self.jacobi_residual,
            "antisymmetry_residual": self.antisymmetry_residual,
            "basis_mismatch": self.basis_mismatch,
            "tolerance": self.tolerance,
        }


def bracket(alg: LieAlgebraSpec, x, y) -> np.ndarray:
    x, y = alg._vec(x), alg._vec(y)
    return np.einsum("i,j,ijk->k", x, y, alg.structure_constants)


def validate(alg: LieAlgebraSpec, tol: Tolerances = DEFAULT_TOL) -> ValidationReport:
    c = alg.structure_constants
    anti = float(np.abs(c + c.transpose(1, 0, 2)).max())
    # J[i,j,k,:] = [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]]
    jac = (
        np.einsum("jkl,ilm->ijkm", c, c)
        + np.einsum("kil,jlm->ijkm", c, c)
        + np.einsum("ijl,klm->ijkm", c, c)
    )
    jacobi = float(np.abs(jac).max())
    mismatch = None
    if alg.basis is not None:
        B = alg.basis
        comm = np.einsum("iab,jbc->ijac", B, B) - np.einsum("jab,ibc->ijac", B, B)
        recon = np.einsum("ijk,kab->ijab", c, B)
        mismatch = float(np.abs(comm - recon).max())
    return ValidationReport(jacobi, anti, mismatch, tol.eps_alg)


def derivation_residual(alg: LieAlgebraSpec, D) -> float:
    D = np.asarray(D, dtype=float)
    d = alg.dim
    if D.shape != (d, d):
        raise DimensionError(f"derivation must be {d}x{d}, got {D.shape}")
    c = alg.structure_constants
    lhs = np.einsum("ijk,lk->ijl", c, D)
    rhs = np.einsum("ai,ajl->ijl", D, c) + np.einsum("bj,ibl->ijl", D, c)
    return float(np.abs(lhs - rhs).max())


def is_derivation(alg: LieAlgebraSpec, D, tol: Tolerances = DEFAULT_TOL) -> tuple[bool, float]:
    """Leibniz test ``D[x,y] = [Dx,y] + [x,Dy]`` on all basis pairs."""
    r = derivation_residual(alg, D)
    return r < tol.eps_alg, r


def _pair_brackets(alg: LieAlgebraSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """All brackets of columns of A with columns of B, as columns."""
    if A.shape[1] == 0 or B.shape[1] == 0:
        return np.zeros((alg.dim, 0))
    br = np.einsum("ia,jb,ijk->kab", A, B, alg.structure_constants)
    return br.reshape(alg.dim, -1)


def generated_subalgebra(alg: LieAlgebraSpec, seeds, stabilizer=None,
                         tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Smallest subalgebra containing ``seeds`` (and invariant under ``stabilizer``)."""
    d = alg.dim
    seeds = np.asarray(seeds, dtype=float).reshape(-1, d)
    if seeds.shape[0] == 0:
        raise ValidationError("generated_subalgebra needs at least one seed")
    S = np.asarray(stabilizer, float) if stabilizer is not None else None
    if S is not None and S.shape != (d, d):
        raise DimensionError(f"stabilizer must be {d}x{d}")
    Q = orthonormal_columns(seeds, d, tol.eps_rank)
    while True:
        parts = [Q, _pair_brackets(alg, Q, Q)]
        if S is not None:
            parts.append(S @ Q)
        Qn = orthonormal_columns(np.hstack(parts).T, d, tol.eps_rank)
        if Qn.shape[1] == Q.shape[1]:
            return Subspace(d, Qn)
        Q = Qn


def closure_residual(alg: LieAlgebraSpec, S: Subspace, T: Subspace | None = None,
                     target: Subspace | None = None) -> float:
    """Max off-``target`` norm of [s, t] over basis vectors (defaults: T = target = S)."""
    T = S if T is None else T
    target = S if target is None else target
    br = _pair_brackets(alg, S.basis, T.basis)
    if br.shape[1] == 0:
        return 0.0
    return float(target.residual(br).max())


def lower_central_series(alg: LieAlgebraSpec, S: Subspace,
                         tol: Tolerances = DEFAULT_TOL) -> list[int]:
    """Dimensions of C^1 = S, C^{k+1} = [S, C^k] until zero or stagnation."""
    if closure_residual(alg, S) > tol.eps_alg:
        raise NotSubalgebraError("subspace is not closed under the bracket")
    dims = [S.dim]
    C = S.basis
    while C.shape[1] > 0:
        Cn = orthonormal_columns(_pair_brackets(alg, S.basis, C).T, alg.dim, tol.eps_rank)
        if Cn.shape[1] >= C.shape[1]:
            break
        dims.append(Cn.shape[1])
        C = Cn
    return dims


def is_nilpotent_subalgebra(alg: LieAlgebraSpec, S: Subspace,
                            tol: Tolerances = DEFAULT_TOL) -> bool:
    return lower_central_series(alg, S, tol)[-1] == 0


def nilpotency_class(alg: LieAlgebraSpec, S: Subspace | None = None,
                     tol: Tolerances = DEFAULT_TOL) -> int | None:
    """Number of nonzero terms in the lower central series, or None if not nilpotent."""
    S = Subspace.full(alg.dim) if S is None else S
    dims = lower_central_series(alg, S, tol)
    if dims[-1] != 0:
        return None
    return len(dims) - 1


def killing_form(alg: LieAlgebraSpec) -> np.ndarray:
    """``K[i, j] = trace(ad(e_i) ad(e_j))``."""
    c = alg.structure_constants
    K = np.einsum("iml,jlm->ij", c, c)
    return 0.5 * (K + K.T)


def is_abelian(alg: LieAlgebraSpec, tol: Tolerances = DEFAULT_TOL) -> bool:
    return float(np.abs(alg.structure_constants).max()) < tol.eps_alg


def inner_element_for(alg: LieAlgebraSpec, D, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Solve ``ad(x) = D`` in the least-squares sense; raise if no exact solution exists."""
    D = np.asarray(D, dtype=float)
    d = alg.dim
    # ad(x)[k, j] = sum_i x_i c[i, j, k]
    A = alg.structure_constants.transpose(2, 1, 0).reshape(d * d, d)
    x, *_ = np.linalg.lstsq(A, D.reshape(-1), rcond=None)
    r = float(np.abs(A @ x - D.reshape(-1)).max())
    if r > tol.eps_alg:
        raise ValidationError(f"derivation is not inner (residual {r:.3g})")
    return x

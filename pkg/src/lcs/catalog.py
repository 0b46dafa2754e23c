"""Bundled algebras addressable by name: heis3, sl2, sl3, so3, abelian(d), sl<n>."""
from __future__ import annotations

import re

import numpy as np

from lcs.algebra import LieAlgebraSpec
from lcs.errors import ValidationError


def _unit(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


def heis3() -> LieAlgebraSpec:
    """Heisenberg algebra, strictly upper triangular 3x3: e1=E12, e2=E23, e3=E13."""
    return LieAlgebraSpec.from_basis([_unit(3, 0, 1), _unit(3, 1, 2), _unit(3, 0, 2)], "heis3")


def sl_basis(n: int) -> np.ndarray:
    """Basis of sl(n): H_1..H_{n-1}, then E_ij (i<j), then E_ij (i>j).

    H_k = E_kk - E_{k+1,k+1}. For n = 2 this is the ordered triple (H, E, F).
    """
    if n < 2:
        raise ValidationError("sl(n) needs n >= 2")
    mats = [_unit(n, k, k) - _unit(n, k + 1, k + 1) for k in range(n - 1)]
    mats += [_unit(n, i, j) for i in range(n) for j in range(n) if i < j]
    mats += [_unit(n, i, j) for i in range(n) for j in range(n) if i > j]
    return np.array(mats)


def sl(n: int) -> LieAlgebraSpec:
    return LieAlgebraSpec.from_basis(sl_basis(n), f"sl{n}")


def sl2() -> LieAlgebraSpec:
    return sl(2)


def sl3() -> LieAlgebraSpec:
    return sl(3)


def so3() -> LieAlgebraSpec:
    """Rotation generators with [e1, e2] = e3 (cyclic)."""
    L1 = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], float)
    L2 = np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], float)
    L3 = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], float)
    return LieAlgebraSpec.from_basis([L1, L2, L3], "so3")


def abelian(d: int) -> LieAlgebraSpec:
    """R^d realized as translations: e_i acts as E_{i, d} in (d+1)x(d+1) matrices."""
    if d < 1:
        raise ValidationError("abelian(d) needs d >= 1")
    return LieAlgebraSpec(np.zeros((d, d, d)), np.array([_unit(d + 1, i, d) for i in range(d)]),
                          f"abelian({d})")


_FIXED = {"heis3": heis3, "sl2": sl2, "sl3": sl3, "so3": so3}

NAMES = ("heis3", "sl2", "sl3", "so3", "abelian(d)", "sl<n>")


def get(name: str) -> LieAlgebraSpec:
    key = name.strip().lower()
    if key in _FIXED:
        return _FIXED[key]()
    m = re.fullmatch(r"abelian\((\d+)\)", key)
    if m:
        return abelian(int(m.group(1)))
    m = re.fullmatch(r"sl\(?(\d+)\)?", key)
    if m:
        return sl(int(m.group(1)))
    raise ValidationError(f"unknown catalog algebra {name!r}; known: {', '.join(NAMES)}")

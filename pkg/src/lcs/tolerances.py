from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by every module.

    eps_alg   absolute residual bound for algebraic identities
    eps_rank  singular-value threshold for rank and span decisions
    eps_eig   eigenvalue clustering diameter
    eps_sign  dead band around the imaginary axis
    eps_grade residual bound for grading / subalgebra checks
    eps_grp   group-level round-trip bound
    """

    eps_alg: float = 1e-9
    eps_rank: float = 1e-8
    eps_eig: float = 1e-7
    eps_sign: float = 1e-8
    eps_grade: float = 1e-8
    eps_grp: float = 1e-8

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tolerance {f.name} must be positive")

    def replace(self, **kw) -> "Tolerances":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT_TOL = Tolerances()

"""Loading ``lcs-spec/1`` JSON system files."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from lcs import catalog
from lcs.algebra import LieAlgebraSpec, validate
from lcs.dynamics import Box, Polytope, SystemSpec
from lcs.errors import DimensionError, ValidationError
from lcs.group import realize
from lcs.tolerances import DEFAULT_TOL, Tolerances

FORMAT = "lcs-spec/1"

RUN_DEFAULTS = {
    "tau": 1.0,
    "T_max": 2.0,
    "n_samples": 4000,
    "n_segments": 3,
    "T": 5.0,
    "dt": 0.1,
    "density": 16,
    "n_pairs": 200,
}


def schema() -> dict:
    text = resources.files("lcs").joinpath("schemas/lcs-spec-1.schema.json").read_text()
    return json.loads(text)


@dataclass(eq=False)
class LoadedSpec:
    system: SystemSpec
    run: dict
    flags: dict
    raw: dict = field(repr=False)

    @property
    def seed(self) -> int:
        return self.run["seed"]

    def snapshot(self) -> dict:
        """Canonical record of everything the run depends on."""
        raw = dict(self.raw)
        raw["run"] = self.run
        raw["flags"] = self.flags
        return raw


def _algebra(block: dict, tol: Tolerances) -> LieAlgebraSpec:
    if "catalog" in block:
        return catalog.get(block["catalog"])
    name = block.get("name", "")
    if "basis" in block:
        basis = np.asarray(block["basis"], float)
        if basis.ndim != 3 or basis.shape[1] != basis.shape[2]:
            raise DimensionError("basis must be a list of square matrices")
        alg = LieAlgebraSpec.from_basis(basis, name, tol)
        if "structure_constants" in block:
            c = np.asarray(block["structure_constants"], float)
            if c.shape != alg.structure_constants.shape:
                raise DimensionError("structure constants do not match the basis size")
            r = float(np.abs(c - alg.structure_constants).max())
            if r > tol.eps_alg:
                raise ValidationError(f"structure constants disagree with the basis brackets by {r:.3g}")
        return alg
    c = np.asarray(block["structure_constants"], float)
    if c.ndim != 3 or len(set(c.shape)) != 1:
        raise DimensionError("structure constants must have shape (d, d, d)")
    alg = LieAlgebraSpec(c, None, name)
    rep = validate(alg, tol)
    if not rep.passed:
        raise ValidationError(f"structure constants fail antisymmetry/Jacobi "
                              f"(residuals {rep.antisymmetry_residual:.3g}, {rep.jacobi_residual:.3g})")
    return alg


def _omega(block: dict):
    if "box" in block:
        return Box(block["box"]["lo"], block["box"]["hi"])
    return Polytope(block["vertices"])


def parse_spec(raw: dict, seed: int | None = None) -> LoadedSpec:
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"spec invalid at {where}: {exc.message}") from None
    run = dict(RUN_DEFAULTS, **raw.get("run", {}))
    if seed is not None:
        run["seed"] = int(seed)
    if "seed" not in run:
        raise ValidationError("a seed is required (run.seed in the input file or --seed)")
    tol = DEFAULT_TOL.replace(**run.get("tolerances", {}))
    run["tolerances"] = tol.to_dict()
    flags = {"finite_semisimple_center": False, **raw.get("flags", {})}

    alg = _algebra(raw["algebra"], tol)
    inner = None
    if "matrix" in raw["drift"]:
        D = np.asarray(raw["drift"]["matrix"], float)
    else:
        inner = np.asarray(raw["drift"]["inner"], float)
        if inner.shape != (alg.dim,):
            raise DimensionError(f"inner drift coefficients must have length {alg.dim}")
        D = alg.ad(inner)
    if D.shape != (alg.dim, alg.dim):
        raise DimensionError(f"drift must be {alg.dim}x{alg.dim}")

    kind = raw.get("group_class")
    group = None
    if kind != "none" and alg.basis is not None:
        try:
            group = realize(alg, kind, drift=D, inner_element=inner, tol=tol)
        except ValidationError:
            if kind is not None:
                raise
    omega = _omega(raw["omega"])
    sys = SystemSpec(alg, D, raw["controls"], omega, group, raw.get("label", ""), tol)
    return LoadedSpec(sys, run, flags, raw)


def load_spec(path: str | Path, seed: int | None = None) -> LoadedSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read spec: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"spec is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValidationError("spec must be a JSON object")
    return parse_spec(raw, seed)

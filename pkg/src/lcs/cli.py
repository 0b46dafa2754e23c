"""Command line entry point: ``lcs decompose|reach|semigroup|verdict <spec.json>``.

Exit codes: 0 success, 2 input or validation failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import zlib
from pathlib import Path

import numpy as np

from lcs import __version__
from lcs.dynamics import sample_reachable
from lcs.errors import NumericalError, ValidationError
from lcs.semigroup import analyze, semigroup_clouds
from lcs.spectral import check_grading, check_sign_structure, sign_decomposition
from lcs.specfile import LoadedSpec, load_spec
from lcs.verdict import classify, decide

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def substream_seed(seed: int, name: str) -> int:
    return int(substream(seed, name).integers(2 ** 63))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _envelope(command: str, spec: LoadedSpec, result: dict) -> dict:
    return {"tool": "lcs", "version": __version__, "command": command,
            "spec": spec.snapshot(), "result": result}


def cmd_decompose(spec: LoadedSpec, args) -> dict:
    s = spec.system
    dec = sign_decomposition(s.algebra, s.drift, s.tol)
    out = dec.to_dict()
    out["grading"] = check_grading(s.algebra, s.drift, dec, s.tol).to_dict()
    out["structure"] = check_sign_structure(s.algebra, dec, s.tol).to_dict()
    return out


def cmd_reach(spec: LoadedSpec, args) -> dict:
    s = spec.system
    r = spec.run
    cloud = sample_reachable(s, None, r["tau"], r["n_samples"], r["n_segments"],
                             substream(spec.seed, "reach"), h=r.get("step"))
    out_dir = Path(args.out or ".")
    write_atomic(out_dir / "reach.csv", cloud.to_csv())
    return {"csv": "reach.csv", "cloud": cloud.to_dict()}


def _semigroup(spec: LoadedSpec, dec):
    s = spec.system
    r = spec.run
    clouds = semigroup_clouds(s, r["T_max"], r["n_samples"], r["n_segments"],
                              substream_seed(spec.seed, "semigroup"), r["density"])
    return analyze(s, clouds, dec, r["T"], r["dt"], r.get("delta"), r["n_pairs"])


def cmd_semigroup(spec: LoadedSpec, args) -> dict:
    s = spec.system
    dec = sign_decomposition(s.algebra, s.drift, s.tol)
    return _semigroup(spec, dec).to_dict()


def cmd_verdict(spec: LoadedSpec, args) -> dict:
    s = spec.system
    dec = sign_decomposition(s.algebra, s.drift, s.tol)
    evidence = _semigroup(spec, dec) if args.evidence else None
    v = decide(s, dec, evidence, spec.flags["finite_semisimple_center"], s.tol)
    print(f"trace: {' '.join(v.trace)} -> {v.outcome}", file=sys.stderr)
    out = v.to_dict()
    out["structure_class"] = classify(s, s.tol)
    out["evidence_requested"] = bool(args.evidence)
    return out


COMMANDS = {"decompose": cmd_decompose, "reach": cmd_reach,
            "semigroup": cmd_semigroup, "verdict": cmd_verdict}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lcs", description="Analyse linear control systems on Lie groups.")
    p.add_argument("--version", action="version", version=f"lcs {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("spec", help="path to an lcs-spec/1 JSON file")
    p.add_argument("--out", help="directory for report files (reach writes reach.csv there)")
    p.add_argument("--evidence", action="store_true", help="verdict: also run sampling evidence")
    p.add_argument("--seed", type=int, help="override run.seed")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = load_spec(args.spec, args.seed)
        result = COMMANDS[args.command](spec, args)
        text = _dumps(_envelope(args.command, spec, result))
        if args.out:
            write_atomic(Path(args.out) / f"{args.command}.json", text)
        sys.stdout.write(text)
    except ValidationError as exc:
        print(f"lcs: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"lcs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

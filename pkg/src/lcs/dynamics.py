"""Controlled dynamics, reachable-set clouds and the reachable-set identities.

The state equation is integrated in ambient matrix space,

    g' = X(g) + sum_j u_j X_j g,

where ``X(g)`` is the linear drift field of the realization and the control
directions act as right-invariant fields (left multiplication by the
realized matrix). Controls are piecewise constant.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.spatial import ConvexHull, cKDTree
from scipy.stats import qmc

from lcs.algebra import LieAlgebraSpec, is_derivation
from lcs.errors import DimensionError, IntegrationError, NotDerivationError, ValidationError
from lcs.group import GroupRealization, drift_field, exp, flow, group_residual
from lcs.tolerances import DEFAULT_TOL, Tolerances

DRIFT_OFF_LIMIT = 1e-6
DEFAULT_H_REL = 1e-3
DEFAULT_DELTA = 1e-2


# -- constraint sets ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, float))
        hi = np.atleast_1d(np.asarray(self.hi, float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("box bounds must be equal-length vectors")
        if not np.all(lo < hi):
            raise ValidationError("box needs lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def m(self) -> int:
        return self.lo.size

    @property
    def unit_dim(self) -> int:
        return self.m

    def interior_margin(self) -> float:
        return float(min((-self.lo).min(), self.hi.min()))

    def vertices(self) -> np.ndarray:
        m = self.m
        corners = ((np.arange(2 ** m)[:, None] >> np.arange(m)) & 1).astype(bool)
        return np.where(corners, self.hi, self.lo)

    def from_unit(self, U: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * U

    def contains(self, u, slack: float = 0.0) -> bool:
        u = np.asarray(u, float)
        return bool(np.all(u >= self.lo - slack) and np.all(u <= self.hi + slack))

    def to_dict(self) -> dict:
        return {"box": {"lo": self.lo.tolist(), "hi": self.hi.tolist()}}


@dataclass(frozen=True, eq=False)
class Polytope:
    vertex_list: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertex_list, float)
        if V.ndim == 1:
            V = V[:, None]
        if V.ndim != 2 or V.shape[0] < V.shape[1] + 1:
            raise ValidationError("polytope needs at least m+1 vertices in R^m")
        object.__setattr__(self, "vertex_list", V)
        if V.shape[1] == 1:
            object.__setattr__(self, "_ineq", np.array([[-1.0, V.min()], [1.0, -V.max()]]))
        else:
            try:
                hull = ConvexHull(V)
            except Exception as exc:  # qhull raises its own error type
                raise ValidationError(f"degenerate polytope: {exc}") from exc
            object.__setattr__(self, "_ineq", hull.equations)

    @property
    def m(self) -> int:
        return self.vertex_list.shape[1]

    @property
    def unit_dim(self) -> int:
        return self.vertex_list.shape[0]

    def interior_margin(self) -> float:
        # facet rows are (normal, offset) with normal . x + offset <= 0 inside
        E = self._ineq
        return float((-E[:, -1] / np.linalg.norm(E[:, :-1], axis=1)).min())

    def vertices(self) -> np.ndarray:
        return self.vertex_list

    def from_unit(self, U: np.ndarray) -> np.ndarray:
        # flat Dirichlet weights from uniforms via exponential spacings
        w = -np.log1p(-np.clip(U, 0.0, 1 - 1e-16))
        w /= w.sum(axis=-1, keepdims=True)
        return w @ self.vertex_list

    def contains(self, u, slack: float = 0.0) -> bool:
        u = np.asarray(u, float).reshape(-1)
        E = self._ineq
        return bool(np.all(E[:, :-1] @ u + E[:, -1] <= slack))

    def to_dict(self) -> dict:
        return {"vertices": self.vertex_list.tolist()}


# -- system -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemSpec:
    algebra: LieAlgebraSpec
    drift: np.ndarray
    controls: np.ndarray
    omega: Box | Polytope
    group: GroupRealization | None = None
    label: str = ""
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        d = self.algebra.dim
        D = np.array(self.drift, dtype=float)
        X = np.array(self.controls, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if D.shape != (d, d):
            raise DimensionError(f"drift must be {d}x{d}")
        if X.ndim != 2 or X.shape[1] != d or X.shape[0] < 1:
            raise DimensionError(f"controls must be a nonempty list of length-{d} vectors")
        if X.shape[0] != self.omega.m:
            raise DimensionError(f"{X.shape[0]} control directions but omega lives in R^{self.omega.m}")
        ok, r = is_derivation(self.algebra, D, self.tol)
        if not ok:
            raise NotDerivationError(f"drift is not a derivation (residual {r:.3g})")
        if not self.omega.interior_margin() > 0:
            raise ValidationError("0 must lie in the interior of omega")
        if self.group is not None:
            if self.group.algebra is not self.algebra:
                raise ValidationError("group realization must be built on the system's algebra")
            self.group.check_drift(D)
        D.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "drift", D)
        object.__setattr__(self, "controls", X)

    @property
    def m(self) -> int:
        return self.controls.shape[0]

    @property
    def d(self) -> int:
        return self.algebra.dim

    def require_group(self) -> GroupRealization:
        if self.group is None:
            raise ValidationError("this operation needs a matrix group realization")
        return self.group

    @cached_property
    def control_matrices(self) -> np.ndarray:
        return self.algebra.matrix(self.controls)

    def phi(self, t: float, g) -> np.ndarray:
        return flow(self.require_group(), self.drift, t, g)

    def to_dict(self) -> dict:
        return {"label": self.label, "algebra": self.algebra.name, "drift": self.drift.tolist(),
                "controls": self.controls.tolist(), "omega": self.omega.to_dict(),
                "group": None if self.group is None else self.group.to_dict()}


@dataclass(frozen=True, eq=False)
class PiecewiseControl:
    switch_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.switch_times, float)
        v = np.asarray(self.values, float)
        if v.ndim == 1:
            v = v[:, None]
        if t.ndim != 1 or t.size != v.shape[0] + 1:
            raise DimensionError("need len(switch_times) == len(values) + 1")
        if t[0] != 0.0 or not np.all(np.diff(t) > 0):
            raise ValidationError("switch times must start at 0 and strictly increase")
        object.__setattr__(self, "switch_times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value, tau: float) -> "PiecewiseControl":
        return cls(np.array([0.0, tau]), np.atleast_2d(np.asarray(value, float)))

    @classmethod
    def uniform_pieces(cls, values, tau: float) -> "PiecewiseControl":
        values = np.atleast_2d(np.asarray(values, float))
        return cls(np.linspace(0.0, tau, values.shape[0] + 1), values)

    @property
    def horizon(self) -> float:
        return float(self.switch_times[-1])

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.switch_times)

    def then(self, other: "PiecewiseControl") -> "PiecewiseControl":
        """This control followed by ``other`` (shifted by this horizon)."""
        t = np.concatenate([self.switch_times, self.horizon + other.switch_times[1:]])
        return PiecewiseControl(t, np.vstack([self.values, other.values]))

    def check_admissible(self, omega) -> None:
        for v in self.values:
            if not omega.contains(v):
                raise ValidationError(f"control value {v.tolist()} leaves omega")

    def to_dict(self) -> dict:
        return {"switch_times": self.switch_times.tolist(), "values": self.values.tolist()}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]


# -- integration ----------------------------------------------------------------

def _steps_for(durations, h: float) -> list[int]:
    out = []
    for L in durations:
        s = int(math.ceil(L / h - 1e-9))
        out.append(max(1, s))
    return out


def _integrate_batch(sys: SystemSpec, g0: np.ndarray, values: np.ndarray, durations,
                     steps, record: bool = False):
    """RK4 for a batch sharing piece durations; values has shape (N, k, m)."""
    G = sys.require_group()
    D = sys.drift
    Xm = sys.control_matrices
    g = np.array(g0, dtype=float, copy=True)
    states = [g.copy()] if record else None
    times = [0.0] if record else None
    t = 0.0
    for piece, (L, s) in enumerate(zip(durations, steps)):
        h = L / s
        if not h > 1e-12 * max(1.0, L):
            raise IntegrationError(f"step size underflow (h={h:.3g})")
        U = np.einsum("nm,mij->nij", values[:, piece, :], Xm)

        def F(x):
            return drift_field(G, D, x) + U @ x

        for _ in range(s):
            k1 = F(g)
            k2 = F(g + 0.5 * h * k1)
            k3 = F(g + 0.5 * h * k2)
            k4 = F(g + h * k3)
            g = g + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if record:
                t += h
                states.append(g.copy())
                times.append(t)
        if not np.all(np.isfinite(g)):
            bad = int(np.flatnonzero(~np.isfinite(g).all(axis=(1, 2)))[0])
            raise IntegrationError("non-finite state", control=values[bad])
    if record:
        return g, np.array(times), np.array(states)
    return g


def default_step(tau: float, n_pieces: int) -> float:
    return DEFAULT_H_REL * tau / n_pieces


def integrate(sys: SystemSpec, g0, u: PiecewiseControl, h: float | None = None) -> Trajectory:
    """Integrate from ``g0`` under ``u``; returns every step state.

    The default step is 1e-3 of the mean piece length; each constant piece
    is integrated with its own uniform step no larger than ``h``.
    """
    u.check_admissible(sys.omega)
    if u.values.shape[1] != sys.m:
        raise DimensionError("control has the wrong number of components")
    h = default_step(u.horizon, len(u.durations)) if h is None else h
    steps = _steps_for(u.durations, h)
    g0 = np.asarray(g0, dtype=float)[None]
    try:
        _, times, states = _integrate_batch(sys, g0, u.values[None], u.durations, steps, record=True)
    except IntegrationError as exc:
        exc.control = u
        raise
    return Trajectory(times, states[:, 0])


def endpoints(sys: SystemSpec, g0, values: np.ndarray, durations, h: float | None = None,
              chunk: int = 4096) -> np.ndarray:
    """Batch endpoints for controls sharing piece durations (values: (N, k, m))."""
    values = np.asarray(values, float)
    durations = np.asarray(durations, float)
    h = default_step(float(durations.sum()), len(durations)) if h is None else h
    steps = _steps_for(durations, h)
    G = sys.require_group()
    g0 = np.broadcast_to(np.asarray(g0, float), (values.shape[0], G.ambient_size, G.ambient_size))
    out = np.empty(g0.shape)
    for a in range(0, values.shape[0], chunk):
        out[a:a + chunk] = _integrate_batch(sys, g0[a:a + chunk], values[a:a + chunk], durations, steps)
    return out


def step_halving_ratio(sys: SystemSpec, g0, u: PiecewiseControl, h: float) -> float:
    """``|x_h - x_{h/2}| / |x_{h/2} - x_{h/4}|``; about 16 for a fourth-order scheme."""
    x = [integrate(sys, g0, u, h / 2 ** k).endpoint for k in range(3)]
    return float(np.linalg.norm(x[0] - x[1]) / np.linalg.norm(x[1] - x[2]))


# -- reachable clouds ------------------------------------------------------------

class CloudIndex:
    """Exact nearest-point queries for ``dist(p, x) = |log(p^-1 x)|``.

    For matrix_inner realizations the log branch is used while
    ``|p^-1 x - I|_F < 1`` and the Frobenius distance ``|p - x|_F`` otherwise.
    A k-d tree over flattened matrices prunes candidates with the bound
    ``|log(p^-1 x)| >= log(1 + |x - p|_F / |p|_2) / sigma_B``.
    """

    def __init__(self, group: GroupRealization, points: np.ndarray):
        self.G = group
        self.points = np.asarray(points, float)
        N, n, _ = self.points.shape
        self.n = n
        self.flat = self.points.reshape(N, -1)
        self.tree = cKDTree(self.flat)
        self.inv = np.linalg.inv(self.points)
        self.pmax = float(np.linalg.norm(self.points, ord=2, axis=(1, 2)).max())
        self.sigma = float(np.linalg.norm(group.algebra.basis.reshape(group.algebra.dim, -1).T, 2))

    def __len__(self):
        return self.points.shape[0]

    def search_radius(self, dist):
        dist = np.asarray(dist, float)
        return np.maximum(dist, self.pmax * np.expm1(self.sigma * dist)) * (1 + 1e-9) + 1e-300

    def pair_distances(self, xs: np.ndarray, idx: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, float)
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return np.zeros(0)
        Y = self.inv[idx] @ xs - np.eye(self.n)
        G = self.G
        if G.unipotent:
            L = np.zeros_like(Y)
            P = np.broadcast_to(np.eye(self.n), Y.shape).copy()
            for k in range(1, self.n):
                P = P @ Y
                L += ((-1) ** (k + 1) / k) * P
            return np.linalg.norm(G.algebra.coordinates(L), axis=-1)
        r = np.linalg.norm(Y, axis=(1, 2))
        out = np.linalg.norm(self.points[idx] - xs, axis=(1, 2))
        near = r <= 0.5
        if near.any():
            Yn = Y[near]
            L = np.zeros_like(Yn)
            P = np.broadcast_to(np.eye(self.n), Yn.shape).copy()
            for k in range(1, 48):
                P = P @ Yn
                L += ((-1) ** (k + 1) / k) * P
            out[near] = np.linalg.norm(G.algebra.coordinates(L), axis=-1)
        for i in np.flatnonzero((r > 0.5) & (r < 1.0)):
            L = np.real(scipy.linalg.logm(Y[i] + np.eye(self.n)))
            out[i] = np.linalg.norm(G.algebra.coordinates(L))
        return out

    def _candidates(self, xs, radii):
        lists = self.tree.query_ball_point(xs.reshape(len(xs), -1), r=radii)
        q = np.repeat(np.arange(len(xs)), [len(c) for c in lists])
        p = np.fromiter((j for c in lists for j in c), dtype=int, count=q.size)
        return q, p

    def contains(self, xs, delta: float, chunk: int = 2048) -> np.ndarray:
        xs = np.asarray(xs, float).reshape(-1, self.n, self.n)
        out = np.zeros(len(xs), dtype=bool)
        R = float(self.search_radius(delta))
        for a in range(0, len(xs), chunk):
            blk = xs[a:a + chunk]
            # the Frobenius-nearest point settles most queries
            _, nn = self.tree.query(blk.reshape(len(blk), -1), k=1)
            quick = self.pair_distances(blk, nn) < delta
            out[a + np.flatnonzero(quick)] = True
            rest = np.flatnonzero(~quick)
            if rest.size == 0:
                continue
            q, p = self._candidates(blk[rest], R)
            q = rest[q]
            if q.size == 0:
                continue
            dist = self.pair_distances(blk[q], p)
            hit = q[dist < delta]
            out[a + np.unique(hit)] = True
        return out

    def nearest_distance(self, xs, exclude: np.ndarray | None = None, k: int = 8,
                         chunk: int = 2048) -> np.ndarray:
        """Exact distance from each query to the cloud (optionally skipping one index each)."""
        xs = np.asarray(xs, float).reshape(-1, self.n, self.n)
        M = len(xs)
        out = np.full(M, np.inf)
        k = min(k + (exclude is not None), len(self))
        for a in range(0, M, chunk):
            blk = xs[a:a + chunk]
            ex = None if exclude is None else np.asarray(exclude)[a:a + chunk]
            _, nn = self.tree.query(blk.reshape(len(blk), -1), k=k)
            nn = np.atleast_2d(nn).reshape(len(blk), -1)
            q = np.repeat(np.arange(len(blk)), nn.shape[1])
            p = nn.reshape(-1)
            keep = p < len(self)
            if ex is not None:
                keep &= p != ex[q]
            q, p = q[keep], p[keep]
            ub = np.full(len(blk), np.inf)
            np.minimum.at(ub, q, self.pair_distances(blk[q], p))
            finite = np.isfinite(ub)
            radii = np.where(finite, self.search_radius(np.where(finite, ub, 0.0)), np.inf)
            radii = np.where(np.isinf(radii), np.sqrt(np.finfo(float).max), radii)
            q2, p2 = self._candidates(blk, radii)
            if ex is not None:
                keep = p2 != ex[q2]
                q2, p2 = q2[keep], p2[keep]
            best = np.full(len(blk), np.inf)
            if q2.size:
                np.minimum.at(best, q2, self.pair_distances(blk[q2], p2))
            out[a:a + chunk] = best
        return out


@dataclass(eq=False)
class ReachCloud:
    """Finite sample of a reachable set; every point is replayable from its control."""

    group: GroupRealization
    points: np.ndarray
    times: np.ndarray
    values: np.ndarray
    horizon: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]

    @cached_property
    def index(self) -> CloudIndex:
        return CloudIndex(self.group, self.points)

    def control(self, i: int) -> PiecewiseControl:
        return PiecewiseControl.uniform_pieces(self.values[i], float(self.times[i]))

    def subset(self, idx) -> "ReachCloud":
        idx = np.asarray(idx, dtype=int)
        return ReachCloud(self.group, self.points[idx], self.times[idx], self.values[idx],
                          self.horizon, dict(self.meta))

    def median_nn_distance(self) -> float:
        if len(self) < 2:
            return 0.0
        d = self.index.nearest_distance(self.points, exclude=np.arange(len(self)))
        return float(np.median(d))

    def to_csv(self) -> str:
        n = self.group.ambient_size
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "control_id"] + [f"m{i}{j}" for i in range(n) for j in range(n)])
        for i in range(len(self)):
            w.writerow([repr(float(self.times[i])), i]
                       + [repr(float(x)) for x in self.points[i].reshape(-1)])
        return buf.getvalue()

    def to_dict(self, include_points: bool = False) -> dict:
        out = {
            "horizon": self.horizon,
            "n_points": len(self),
            "meta": self.meta,
            "controls": [{"control_id": i, "horizon": float(self.times[i]),
                          "values": self.values[i].tolist()} for i in range(len(self))],
        }
        if include_points:
            out["points"] = self.points.tolist()
        return out


def _forced_controls(sys: SystemSpec, n_segments: int) -> np.ndarray:
    V = sys.omega.vertices()
    rows = [np.zeros((n_segments, sys.m))]
    rows += [np.tile(v, (n_segments, 1)) for v in V]
    return np.array(rows)


def sample_controls(sys: SystemSpec, n_samples: int, n_segments: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Control values (n_samples, n_segments, m).

    Row 0 is u = 0, then the constant vertex controls, then scrambled-Sobol
    uniform draws over omega (Dirichlet vertex weights for polytopes).
    """
    forced = _forced_controls(sys, n_segments)[:n_samples]
    n_rand = n_samples - len(forced)
    if n_rand <= 0:
        return forced
    k = sys.omega.unit_dim
    sob = qmc.Sobol(d=n_segments * k, scramble=True, seed=rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        U = sob.random(n_rand)
    vals = sys.omega.from_unit(U.reshape(n_rand, n_segments, k))
    return np.concatenate([forced, vals])


def sample_reachable(sys: SystemSpec, g0, tau: float, n_samples: int, n_segments: int,
                     seed: int | np.random.Generator = 0, h: float | None = None) -> ReachCloud:
    """Endpoints at time ``tau`` of ``n_samples`` piecewise-constant controls; ``g0=None`` means e."""
    if not tau > 0:
        raise ValidationError("tau must be positive")
    if n_segments < 1 or n_samples < 1:
        raise ValidationError("n_samples and n_segments must be >= 1")
    G = sys.require_group()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g0 = G.identity if g0 is None else np.asarray(g0, float)
    values = sample_controls(sys, n_samples, n_segments, rng)
    durations = np.full(n_segments, tau / n_segments)
    h = default_step(tau, n_segments) if h is None else h
    pts = endpoints(sys, g0, values, durations, h)
    drift_off = float(group_residual(G, pts).max())
    if drift_off > DRIFT_OFF_LIMIT:
        bad = int(np.argmax(group_residual(G, pts)))
        raise IntegrationError(f"integrated points left the group (residual {drift_off:.3g})",
                               control=PiecewiseControl.uniform_pieces(values[bad], tau))
    meta = {"tau": tau, "n_samples": n_samples, "n_segments": n_segments, "step": h,
            "drift_off": drift_off, "g0": np.asarray(g0).tolist()}
    return ReachCloud(G, pts, np.full(n_samples, float(tau)), values, float(tau), meta)


def membership(cloud: ReachCloud, x, delta: float = DEFAULT_DELTA) -> bool:
    """True iff some cloud point lies within ``delta`` of ``x``."""
    if not delta > 0:
        raise ValidationError("delta must be positive")
    return bool(cloud.index.contains(np.asarray(x, float)[None], delta)[0])


# -- reachable-set identities -----------------------------------------------------

@dataclass
class ReachIdentityReport:
    concatenation_residual: float
    translation_residual: float
    monotonicity_hit_rate: float
    n_trials: int
    tolerance: float
    params: dict

    @property
    def passed(self) -> bool:
        return max(self.concatenation_residual, self.translation_residual) < self.tolerance

    def to_dict(self) -> dict:
        return {"passed": self.passed, "concatenation_residual": self.concatenation_residual,
                "translation_residual": self.translation_residual,
                "monotonicity_hit_rate": self.monotonicity_hit_rate,
                "n_trials": self.n_trials, "tolerance": self.tolerance, "params": self.params}


def check_reachable_identities(sys: SystemSpec, tau1: float, tau2: float, n_trials: int = 100,
                               seed: int = 0, n_segments: int = 3, h: float = 1e-3,
                               tolerance: float = 1e-6, n_cloud: int = 64,
                               delta: float | None = None) -> ReachIdentityReport:
    """Concatenation, translation and monotonicity of reachable sets.

    (i)   end(u2 then u1) = end(u1) . phi_tau1(end(u2))
    (ii)  end_g(u) = end_e(u) . phi_tau(g)
    (iii) A_tau1 endpoints are matched in a denser A_tau2 cloud (hit rate).
    """
    if not 0 < tau1 <= tau2:
        raise ValidationError("need 0 < tau1 <= tau2")
    G = sys.require_group()
    rng = np.random.default_rng(seed)
    k = n_segments
    d1 = np.full(k, tau1 / k)
    d2 = np.full(k, tau2 / k)
    u1 = sys.omega.from_unit(rng.random((n_trials, k, sys.omega.unit_dim)))
    u2 = sys.omega.from_unit(rng.random((n_trials, k, sys.omega.unit_dim)))
    e = G.identity
    y = endpoints(sys, e, u2, d2, h)
    x1 = endpoints(sys, e, u1, d1, h)
    both = endpoints(sys, e, np.concatenate([u2, u1], axis=1), np.concatenate([d2, d1]), h)
    rhs = x1 @ flow(G, sys.drift, tau1, y)
    conc = float(np.linalg.norm(both - rhs, axis=(1, 2)).max())

    v = rng.normal(size=(n_trials, sys.d))
    v /= np.maximum(1.0, np.linalg.norm(v, axis=1, keepdims=True))
    g = exp(G, v)
    from_g = endpoints(sys, g, u1, d1, h)
    trans = float(np.linalg.norm(from_g - x1 @ flow(G, sys.drift, tau1, g), axis=(1, 2)).max())

    small = sample_reachable(sys, None, tau1, n_cloud, k, rng)
    big = sample_reachable(sys, None, tau2, 10 * n_cloud, k, rng)
    if delta is None:
        delta = max(2.0 * big.median_nn_distance(), 1e-9)
    hits = big.index.contains(small.points, delta)
    params = {"tau1": tau1, "tau2": tau2, "h": h, "n_segments": k, "seed": seed,
              "n_cloud": n_cloud, "delta": delta}
    return ReachIdentityReport(conc, trans, float(hits.mean()), n_trials, tolerance, params)

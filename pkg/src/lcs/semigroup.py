"""Finite-sample estimates of the system semigroup.

A point ``x`` of the reachable set is judged a member when every image
``phi_t(x)`` on the negative grid ``{0, -dt, ..., -T}`` is matched in an
A-cloud at resolution ``delta``. Every set-level conclusion is three-valued.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lcs.dynamics import DEFAULT_DELTA, ReachCloud, SystemSpec
from lcs.errors import ValidationError
from lcs.group import exp, flow, subgroup_sample
from lcs.spectral import SignDecomposition

EVIDENCE_FOR = "evidence-for"
EVIDENCE_AGAINST = "evidence-against"
INCONCLUSIVE = "inconclusive"
OUTCOMES = (EVIDENCE_FOR, EVIDENCE_AGAINST, INCONCLUSIVE)

DEFAULT_T = 5.0
DEFAULT_DT = 0.1
CLOSURE_THRESHOLD = 0.95
DEFAULT_T_MAX = 2.0
DEFAULT_DENSITY = 16


def negative_grid(T: float, dt: float) -> np.ndarray:
    if not (T > 0 and dt > 0):
        raise ValidationError("T and dt must be positive")
    k = T / dt
    if abs(k - round(k)) > 1e-9 * max(1.0, k):
        raise ValidationError("T must be an integer multiple of dt")
    return -dt * np.arange(int(round(k)) + 1)


def default_delta(acloud: ReachCloud, candidates: ReachCloud | None = None,
                  density: int | None = None) -> float:
    """Twice the median nearest-neighbour distance of the tested cloud.

    The tested cloud is ``candidates`` when given, otherwise every
    ``density``-th point of the A-cloud; matching a cloud against itself at
    its own median spacing would leave most query balls empty.
    ``DEFAULT_DELTA`` is used for degenerate clouds.
    """
    if candidates is None:
        density = DEFAULT_DENSITY if density is None else density
        candidates = acloud.subset(np.arange(0, len(acloud), density))
    m = candidates.median_nn_distance()
    return 2.0 * m if m > 0 else DEFAULT_DELTA


def _member_batch(sys: SystemSpec, xs: np.ndarray, acloud: ReachCloud, grid: np.ndarray,
                  delta: float) -> tuple[np.ndarray, np.ndarray]:
    """Membership flags and first failing time (nan when accepted)."""
    G = sys.require_group()
    xs = np.asarray(xs, float).reshape(-1, G.ambient_size, G.ambient_size)
    alive = np.ones(len(xs), dtype=bool)
    witness = np.full(len(xs), np.nan)
    for t in grid:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        imgs = xs[idx] if t == 0 else flow(G, sys.drift, float(t), xs[idx])
        hit = acloud.index.contains(imgs, delta)
        miss = idx[~hit]
        witness[miss] = t
        alive[miss] = False
    return alive, witness


@dataclass
class MemberResult:
    member: bool
    witness: float | None

    def __bool__(self):
        return self.member


def s_sigma_member(sys: SystemSpec, x, acloud: ReachCloud, T: float = DEFAULT_T,
                   dt: float = DEFAULT_DT, delta: float | None = None) -> MemberResult:
    """Negative-time orbit test; ``witness`` is the first failing grid time."""
    delta = default_delta(acloud) if delta is None else delta
    if not delta > 0:
        raise ValidationError("delta must be positive")
    ok, w = _member_batch(sys, np.asarray(x, float)[None], acloud, negative_grid(T, dt), delta)
    return MemberResult(bool(ok[0]), None if ok[0] else float(w[0]))


@dataclass(eq=False)
class SemigroupEstimate:
    member_points: ReachCloud
    test_grid: np.ndarray
    params: dict
    verdict_fraction: float
    n_tested: int
    witnesses: np.ndarray = field(repr=False, default=None)
    system: SystemSpec = field(repr=False, default=None)
    acloud: ReachCloud = field(repr=False, default=None)

    @property
    def delta(self) -> float:
        return self.params["delta"]

    def __len__(self):
        return len(self.member_points)

    def to_dict(self) -> dict:
        return {"params": self.params, "acceptance_fraction": self.verdict_fraction,
                "n_tested": self.n_tested, "n_members": len(self),
                "test_grid": {"T": self.params["T"], "dt": self.params["dt"],
                              "n_times": int(self.test_grid.size)}}


def estimate_s_sigma(sys: SystemSpec, acloud: ReachCloud, T: float = DEFAULT_T,
                     dt: float = DEFAULT_DT, delta: float | None = None,
                     candidates: ReachCloud | None = None) -> SemigroupEstimate:
    """Filter ``candidates`` (default: the A-cloud itself) through the member test.

    The default ``delta`` is twice the median nearest-neighbour distance of
    the candidate cloud, so a candidate set sparser than the A-cloud is
    matched at a resolution the A-cloud actually covers.
    """
    G = sys.require_group()
    cand = acloud if candidates is None else candidates
    delta = default_delta(acloud, candidates) if delta is None else float(delta)
    grid = negative_grid(T, dt)
    ok, w = _member_batch(sys, cand.points, acloud, grid, delta)
    members = cand.subset(np.flatnonzero(ok))
    e_in = len(members) and np.any(np.all(members.points == G.identity, axis=(1, 2)))
    if not e_in:
        raise ValidationError("identity missing from the estimate; candidates must include u = 0 from e")
    params = {"T": float(T), "dt": float(dt), "delta": delta, "horizon": acloud.horizon,
              "n_cloud": len(acloud), "candidate_horizon": cand.horizon,
              "n_candidates": len(cand)}
    return SemigroupEstimate(members, grid, params, float(ok.mean()), len(cand), w, sys, acloud)


def _outcome(fraction: float, threshold: float) -> str:
    return EVIDENCE_FOR if fraction >= threshold else INCONCLUSIVE


@dataclass
class FractionReport:
    name: str
    fraction: float
    n: int
    outcome: str
    params: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "fraction": self.fraction, "n": self.n,
                "outcome": self.outcome, "params": self.params, "details": self.details}


def check_closure(est: SemigroupEstimate, acloud: ReachCloud | None = None, n_pairs: int = 200,
                  delta: float | None = None, threshold: float = CLOSURE_THRESHOLD,
                  seed: int | np.random.Generator = 0) -> FractionReport:
    """Product-closure pass fraction over random member pairs (the pair (e, e) is always included)."""
    if len(est) == 0:
        raise ValidationError("empty semigroup estimate")
    acloud = est.acloud if acloud is None else acloud
    delta = est.delta if delta is None else delta
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    P = est.member_points.points
    i = np.concatenate([[0], rng.integers(0, len(P), n_pairs - 1)]) if n_pairs > 1 else np.zeros(1, int)
    j = np.concatenate([[0], rng.integers(0, len(P), n_pairs - 1)]) if n_pairs > 1 else np.zeros(1, int)
    G = est.system.require_group()
    e_idx = int(np.flatnonzero(np.all(P == G.identity, axis=(1, 2)))[0])
    i[0] = j[0] = e_idx
    ok, _ = _member_batch(est.system, P[i] @ P[j], acloud, est.test_grid, delta)
    frac = float(ok.mean())
    params = dict(est.params, delta=delta, n_pairs=int(n_pairs), threshold=threshold)
    return FractionReport("closure", frac, int(n_pairs), _outcome(frac, threshold), params,
                          {"identity_product_member": bool(ok[0])})


def check_phi_invariance(est: SemigroupEstimate, t_grid=(-1.0, -0.5, 0.5, 1.0),
                         delta: float | None = None, threshold: float = CLOSURE_THRESHOLD,
                         max_points: int = 200) -> FractionReport:
    """Re-test ``phi_t(x)`` for members x and both signs of t."""
    if len(est) == 0:
        raise ValidationError("empty semigroup estimate")
    delta = est.delta if delta is None else delta
    sys = est.system
    G = sys.require_group()
    P = est.member_points.points[:max_points]
    per_t = {}
    total = 0
    for t in t_grid:
        ok, _ = _member_batch(sys, flow(G, sys.drift, float(t), P), est.acloud, est.test_grid, delta)
        per_t[repr(float(t))] = float(ok.mean())
        total += int(ok.sum())
    frac = total / (len(P) * len(t_grid))
    params = dict(est.params, delta=delta, t_grid=[float(t) for t in t_grid], threshold=threshold)
    return FractionReport("phi_invariance", frac, len(P) * len(t_grid), _outcome(frac, threshold),
                          params, {"per_t": per_t})


@dataclass
class GMinusReport:
    vacuous: bool
    radii: list
    minus_fractions: list
    plus_zero_fractions: list
    outcome: str
    params: dict

    def to_dict(self) -> dict:
        return {"vacuous": self.vacuous, "radii": self.radii,
                "minus_fractions": self.minus_fractions,
                "plus_zero_fractions": self.plus_zero_fractions,
                "outcome": self.outcome, "params": self.params}


def g_minus_criterion(sys: SystemSpec, dec: SignDecomposition, acloud: ReachCloud,
                      T: float = DEFAULT_T, dt: float = DEFAULT_DT, delta: float | None = None,
                      radii=(0.1, 0.25, 0.5, 1.0), count: int = 32,
                      seed: int | np.random.Generator = 0,
                      threshold: float = CLOSURE_THRESHOLD) -> GMinusReport:
    """Acceptance of G- and G+0 samples per radius.

    All radii at or above ``threshold`` is evidence for controllability; a
    zero fraction at the smallest radius is evidence against; anything else is
    inconclusive.
    """
    G = sys.require_group()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    delta = default_delta(acloud) if delta is None else float(delta)
    grid = negative_grid(T, dt)
    vacuous = dec.minus.dim == 0
    minus_f, pz_f = [], []
    for r in radii:
        pz = subgroup_sample(G, dec.plus_zero, count, r, rng)
        pz_f.append(float(_member_batch(sys, pz, acloud, grid, delta)[0].mean()))
        if vacuous:
            minus_f.append(1.0)
            continue
        gm = subgroup_sample(G, dec.minus, count, r, rng)
        minus_f.append(float(_member_batch(sys, gm, acloud, grid, delta)[0].mean()))
    if vacuous or min(minus_f) >= threshold:
        outcome = EVIDENCE_FOR
    elif minus_f[0] == 0.0:
        outcome = EVIDENCE_AGAINST
    else:
        outcome = INCONCLUSIVE
    params = {"T": float(T), "dt": float(dt), "delta": delta, "horizon": acloud.horizon,
              "n_cloud": len(acloud), "count": int(count), "threshold": threshold}
    return GMinusReport(vacuous, [float(r) for r in radii], minus_f, pz_f, outcome, params)


@dataclass
class InteriorEvidence:
    found: bool
    point_index: int | None
    n_probes: int
    radius: float
    params: dict

    @property
    def outcome(self) -> str:
        return EVIDENCE_FOR if self.found else INCONCLUSIVE

    def to_dict(self) -> dict:
        return {"found": self.found, "point_index": self.point_index, "n_probes": self.n_probes,
                "probe_radius": self.radius, "outcome": self.outcome, "params": self.params}


def interior_evidence(est: SemigroupEstimate, delta: float | None = None,
                      max_points: int = 50) -> InteriorEvidence:
    """First member x whose probes ``x exp(+-(delta/2) e_i)`` are all members.

    This is a resolution-level proxy for an interior point, never a proof.
    """
    sys = est.system
    G = sys.require_group()
    delta = est.delta if delta is None else delta
    d = sys.d
    steps = 0.5 * delta * np.vstack([np.eye(d), -np.eye(d)])
    probes = exp(G, steps)
    P = est.member_points.points
    for k in range(min(len(P), max_points)):
        ok, _ = _member_batch(sys, P[k] @ probes, est.acloud, est.test_grid, est.delta)
        if ok.all():
            return InteriorEvidence(True, k, len(probes), 0.5 * delta, dict(est.params))
    return InteriorEvidence(False, None, len(probes), 0.5 * delta, dict(est.params))


# -- standard setup -------------------------------------------------------------


@dataclass(eq=False)
class SemigroupClouds:
    """A dense A-cloud at ``T_max`` plus two sparser candidate clouds.

    ``candidates`` shares the horizon and fixes the default delta;
    ``half`` (horizon ``T_max / 2``) supplies factors for the closure test so
    products stay inside the sampled horizon.
    """

    acloud: ReachCloud
    candidates: ReachCloud
    half: ReachCloud
    seed: int
    density: int

    def params(self) -> dict:
        return {"T_max": self.acloud.horizon, "n_cloud": len(self.acloud),
                "n_candidates": len(self.candidates), "density": self.density,
                "n_segments": self.acloud.meta["n_segments"], "seed": self.seed}


def semigroup_clouds(sys: SystemSpec, T_max: float = DEFAULT_T_MAX, n_samples: int = 4000,
                     n_segments: int = 3, seed: int = 0,
                     density: int = DEFAULT_DENSITY) -> SemigroupClouds:
    from lcs.dynamics import sample_reachable
    n_c = max(2, n_samples // density)
    streams = [np.random.default_rng([seed, k]) for k in range(3)]
    A = sample_reachable(sys, None, T_max, n_samples, n_segments, streams[0])
    C = sample_reachable(sys, None, T_max, n_c, n_segments, streams[1])
    H = sample_reachable(sys, None, 0.5 * T_max, n_c, n_segments, streams[2])
    return SemigroupClouds(A, C, H, seed, density)


@dataclass(eq=False)
class SemigroupAnalysis:
    estimate: SemigroupEstimate
    closure_estimate: SemigroupEstimate
    closure: FractionReport
    phi_invariance: FractionReport
    interior: InteriorEvidence
    g_minus: GMinusReport | None
    clouds: SemigroupClouds

    def params(self) -> dict:
        return dict(self.clouds.params(), T=self.estimate.params["T"],
                    dt=self.estimate.params["dt"], delta=self.estimate.delta)

    def to_dict(self) -> dict:
        return {"params": self.params(), "estimate": self.estimate.to_dict(),
                "closure_estimate": self.closure_estimate.to_dict(),
                "closure": self.closure.to_dict(), "phi_invariance": self.phi_invariance.to_dict(),
                "interior_evidence": self.interior.to_dict(),
                "g_minus": None if self.g_minus is None else self.g_minus.to_dict()}


def analyze(sys: SystemSpec, clouds: SemigroupClouds, dec: SignDecomposition | None = None,
            T: float = DEFAULT_T, dt: float = DEFAULT_DT, delta: float | None = None,
            n_pairs: int = 200) -> SemigroupAnalysis:
    """Estimate, closure, phi-invariance, interior evidence and (with ``dec``) the G- report."""
    est = estimate_s_sigma(sys, clouds.acloud, T, dt, delta, clouds.candidates)
    half = estimate_s_sigma(sys, clouds.acloud, T, dt, est.delta, clouds.half)
    closure = check_closure(half, n_pairs=n_pairs, seed=np.random.default_rng([clouds.seed, 3]))
    phi = check_phi_invariance(est)
    interior = interior_evidence(est)
    gm = None
    if dec is not None:
        gm = g_minus_criterion(sys, dec, clouds.acloud, T, dt, est.delta,
                               seed=np.random.default_rng([clouds.seed, 4]))
    return SemigroupAnalysis(est, half, closure, phi, interior, gm, clouds)

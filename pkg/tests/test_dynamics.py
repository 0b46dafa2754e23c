import io
import csv

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lcs import catalog
from lcs.dynamics import (Box, PiecewiseControl, Polytope, SystemSpec, check_reachable_identities,
                          endpoints, integrate, membership, sample_reachable, step_halving_ratio)
from lcs.errors import DimensionError, NotDerivationError, ValidationError
from lcs.group import exp, flow, log, realize

from conftest import double_integrator, heis_diagonal, scalar_system


def test_zero_control_from_identity_is_equilibrium():
    s = heis_diagonal()
    tr = integrate(s, np.eye(3), PiecewiseControl.constant([0, 0], 1.0))
    assert np.abs(tr.states - np.eye(3)).max() == 0.0


def test_double_integrator_closed_form():
    s = double_integrator()
    end = integrate(s, np.eye(3), PiecewiseControl.constant([1.0], 1.0)).endpoint
    assert np.allclose(log(s.group, end), [0.5, 1.0], atol=1e-12)


def test_heis_drift_matches_flow():
    s = heis_diagonal()
    g0 = exp(s.group, [1.0, 0, 0])
    end = integrate(s, g0, PiecewiseControl.constant([0, 0], 1.5)).endpoint
    assert np.abs(end - flow(s.group, s.drift, 1.5, g0)).max() < 1e-10


def _heis_coordinate_oracle(D, u, tau, x0):
    # matrix-entry ODE for g = [[1,a,c],[0,1,b],[0,0,1]] with drift from the exact flow field
    G = realize(catalog.heis3())

    def rhs(t, y):
        g = np.array([[1, y[0], y[2]], [0, 1, y[1]], [0, 0, 1.0]])
        k = min(np.searchsorted(u.switch_times, t, side="right") - 1, len(u.values) - 1)
        U = G.algebra.matrix(np.r_[u.values[k], 0.0])
        h = 1e-6
        drift = (flow(G, D, h, g) - flow(G, D, -h, g)) / (2 * h)
        dg = drift + U @ g
        return [dg[0, 1], dg[1, 2], dg[0, 2]]

    g0 = exp(G, x0)
    sol = solve_ivp(rhs, (0, tau), [g0[0, 1], g0[1, 2], g0[0, 2]], rtol=1e-11, atol=1e-12,
                    t_eval=[tau], max_step=0.01)
    a, b, c = sol.y[:, -1]
    return np.array([[1, a, c], [0, 1, b], [0, 0, 1.0]])


def test_integrate_against_solve_ivp():
    s = heis_diagonal()
    u = PiecewiseControl([0, 0.4, 1.0], [[0.5, -1.0], [-0.3, 0.8]])
    x0 = np.array([0.2, -0.1, 0.3])
    end = integrate(s, exp(s.group, x0), u).endpoint
    assert np.abs(end - _heis_coordinate_oracle(s.drift, u, 1.0, x0)).max() < 1e-7


def test_heisenberg_area_formula():
    # zero drift: c-entry equals int u1 b dt; this loop gives -1
    alg = catalog.heis3()
    s = SystemSpec(alg, np.zeros((3, 3)), np.eye(3)[:2], Box([-1, -1], [1, 1]), realize(alg))
    u = PiecewiseControl([0, 1, 2, 3, 4], [[1, 0], [0, 1], [-1, 0], [0, -1]])
    end = integrate(s, np.eye(3), u).endpoint
    assert np.allclose(end, [[1, 0, -1], [0, 1, 0], [0, 0, 1]], atol=1e-12)
    assert abs(log(s.group, end)[2]) > 0.5


def test_piecewise_validation():
    with pytest.raises(ValidationError):
        PiecewiseControl([0, 1, 1], [[0], [0]])
    with pytest.raises(DimensionError):
        PiecewiseControl([0, 1], [[0], [0]])
    s = scalar_system(0.0)
    with pytest.raises(ValidationError):
        integrate(s, np.eye(2), PiecewiseControl.constant([2.0], 1.0))


def test_system_validation():
    alg = catalog.heis3()
    with pytest.raises(NotDerivationError):
        SystemSpec(alg, np.eye(3), [[1, 0, 0]], Box([-1], [1]))
    with pytest.raises(ValidationError):
        SystemSpec(alg, np.zeros((3, 3)), [[1, 0, 0]], Box([0.0], [1.0]))
    with pytest.raises(DimensionError):
        SystemSpec(alg, np.zeros((3, 3)), [[1, 0, 0]], Box([-1, -1], [1, 1]))


def test_polytope_sampling_inside_and_vertices():
    alg = catalog.abelian(2)
    tri = Polytope([[-1, -1], [2, -1], [-1, 2]])
    s = SystemSpec(alg, np.zeros((2, 2)), np.eye(2), tri, realize(alg))
    cl = sample_reachable(s, None, 1.0, 64, 2, seed=3)
    assert all(tri.contains(v, 1e-12) for v in cl.values.reshape(-1, 2))
    assert np.allclose(cl.values[1:4, 0], tri.vertices())


def test_scalar_cloud_bounds_and_extremes():
    s = scalar_system(0.0)
    cl = sample_reachable(s, None, 1.0, 200, 3, seed=0)
    x = log(s.group, cl.points)[:, 0]
    assert np.abs(x).max() <= 1 + 1e-12
    assert np.isclose(x.max(), 1.0) and np.isclose(x.min(), -1.0)
    assert not membership(cl, exp(s.group, [2.0]), 0.1)
    assert membership(cl, cl.points[17], 1e-12)


def test_single_sample_is_drift_endpoint():
    s = heis_diagonal()
    g0 = exp(s.group, [0.5, 0.5, 0])
    cl = sample_reachable(s, g0, 1.0, 1, 2, seed=0)
    assert len(cl) == 1
    phi = flow(s.group, s.drift, 1.0, g0)
    assert np.abs(cl.points[0] - phi).max() < 1e-10
    assert membership(cl, phi, 1e-9)


def test_sampling_deterministic_and_replayable():
    s = heis_diagonal()
    a = sample_reachable(s, None, 1.0, 50, 3, seed=9)
    b = sample_reachable(s, None, 1.0, 50, 3, seed=9)
    assert np.array_equal(a.points, b.points) and a.to_csv() == b.to_csv()
    i = 23
    replay = integrate(s, np.eye(3), a.control(i)).endpoint
    assert np.abs(replay - a.points[i]).max() < 1e-12


def test_switching_creates_e3_component():
    alg = catalog.heis3()
    s = SystemSpec(alg, np.zeros((3, 3)), np.eye(3)[:2], Box([-1, -1], [1, 1]), realize(alg))
    cl = sample_reachable(s, None, 1.0, 100, 3, seed=0)
    z = log(s.group, cl.points[5:])[:, 2]
    assert np.abs(z).max() > 0.05


def test_csv_format():
    s = scalar_system(1.0)
    cl = sample_reachable(s, None, 1.0, 5, 2, seed=0)
    rows = list(csv.reader(io.StringIO(cl.to_csv())))
    assert rows[0] == ["time", "control_id", "m00", "m01", "m10", "m11"]
    assert len(rows) == 6
    # row order: u = 0, then vertex lo, then vertex hi
    assert float(rows[1][3]) == 0.0
    assert np.isclose(float(rows[2][3]), -(np.e - 1)) and np.isclose(float(rows[3][3]), np.e - 1)


def test_index_exact_against_brute_force(rng):
    s = heis_diagonal()
    cl = sample_reachable(s, None, 1.0, 300, 3, seed=1)
    q = exp(s.group, rng.normal(scale=0.8, size=(60, 3)))
    brute = np.array([min(np.linalg.norm(log(s.group, np.linalg.inv(p) @ x)) for p in cl.points)
                      for x in q])
    assert np.allclose(cl.index.nearest_distance(q), brute)
    for delta in (0.05, 0.2, 0.6):
        assert np.array_equal(cl.index.contains(q, delta), brute < delta)


def test_index_matrix_inner_against_brute_force(rng):
    from conftest import sl2_system
    s = sl2_system()
    cl = sample_reachable(s, None, 0.5, 200, 2, seed=2)
    G = s.group
    q = exp(G, rng.normal(scale=0.4, size=(40, 3)))

    def dist(p, x):
        Y = np.linalg.inv(p) @ x - np.eye(2)
        if np.linalg.norm(Y) < 1:
            return np.linalg.norm(log(G, np.linalg.inv(p) @ x))
        return np.linalg.norm(p - x)

    brute = np.array([min(dist(p, x) for p in cl.points) for x in q])
    assert np.allclose(cl.index.nearest_distance(q), brute)
    assert np.array_equal(cl.index.contains(q, 0.3), brute < 0.3)


def test_identities_double_integrator_exact():
    rep = check_reachable_identities(double_integrator(), 0.5, 1.0, n_trials=20, seed=0, n_cloud=16)
    assert rep.concatenation_residual < 1e-12 and rep.translation_residual < 1e-12


def test_identities_zero_controls_cocycle():
    s = heis_diagonal()
    G = s.group
    g0 = exp(G, [0.3, -0.2, 0.1])
    vals = np.zeros((1, 4, 2))
    end = endpoints(s, g0, vals, [0.5, 0.5, 0.75, 0.75])
    assert np.abs(end[0] - flow(G, s.drift, 2.5, g0)).max() < 1e-10


def test_richardson_order():
    s = heis_diagonal()
    ratio = step_halving_ratio(s, np.eye(3), PiecewiseControl([0, 0.5, 1.0], [[0.3, -0.2], [1.0, 0.5]]), 0.1)
    assert abs(ratio - 16) < 0.3 * 16

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from admmnet.errors import DimensionMismatchError, MissingCurvatureMetadataError
from admmnet.graph import generate_graph, laplacian
from admmnet.objectives import (
    CustomSmooth,
    L1Quadratic,
    NetworkProblem,
    Quadratic,
    aggregate,
    central_solve,
    estimation_objectives,
    require_curvature,
    soft_threshold,
)


def quad(a, w=1.0):
    return Quadratic(target=np.atleast_1d(np.asarray(a, dtype=float)), weight=w)


def l1quad(a, w=1.0, tau=0.5):
    return L1Quadratic(target=np.atleast_1d(np.asarray(a, dtype=float)), weight=w, tau=tau)


def prox_residual(f, v, rho, p):
    """First-order optimality violation of a candidate prox point."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    smooth = f.smooth_gradient(p) + rho * (p - v)
    tau = f.l1_weight
    if tau == 0.0:
        return float(np.linalg.norm(smooth))
    worst = 0.0
    for j in range(p.shape[0]):
        if p[j] != 0.0:
            worst = max(worst, abs(smooth[j] + tau * np.sign(p[j])))
        else:
            worst = max(worst, max(0.0, abs(smooth[j]) - tau))
    return worst


def test_quadratic_values():
    f = quad(2.0)
    assert f.value(0.0) == 2.0
    assert f.gradient(0.0) == pytest.approx(-2.0)
    assert f.value(2.0) == 0.0
    assert f.gradient(2.0) == pytest.approx(0.0)


def test_l1_quadratic_values():
    f = l1quad(0.0, w=1.0, tau=0.5)
    assert f.value(1.0) == pytest.approx(1.0)  # 0.5 + 0.5
    assert f.gradient(1.0) == pytest.approx(1.5)


def test_prox_quadratic_closed_form():
    f = quad(2.0)
    assert f.prox(0.0, 6.0) == pytest.approx(2.0 / 7.0)


def test_prox_soft_threshold():
    f = l1quad(0.0, w=0.0, tau=0.5)
    assert f.prox(1.0, 1.0) == pytest.approx(0.5)
    assert f.prox(0.2, 1.0) == pytest.approx(0.0)


def test_prox_large_rho_returns_center():
    for f in (quad(2.0), l1quad(1.0), l1quad(-3.0, w=2.0, tau=1.0)):
        v = np.array([0.7])
        assert np.linalg.norm(f.prox(v, 1e8) - v) <= 1e-6


def test_prox_l1_matches_grid_search():
    f = l1quad(1.3, w=2.0, tau=0.7)
    rho = 3.0
    v = np.array([0.4])
    p = f.prox(v, rho)
    grid = np.linspace(-3, 3, 240_001)
    vals = 0.5 * f.weight * (grid - 1.3) ** 2 + f.tau * np.abs(grid) + 0.5 * rho * (grid - 0.4) ** 2
    assert abs(p[0] - grid[np.argmin(vals)]) <= 5e-5


@pytest.mark.parametrize("seed", range(5))
def test_prox_first_order_optimality(seed):
    rng = np.random.default_rng(seed)
    fs = [
        quad(rng.normal(size=3), w=float(rng.uniform(0.1, 4))),
        l1quad(rng.normal(size=3), w=float(rng.uniform(0.1, 4)), tau=float(rng.uniform(0, 2))),
    ]
    for f in fs:
        v = rng.normal(size=3)
        rho = float(rng.uniform(0.05, 20))
        p = f.prox(v, rho)
        assert prox_residual(f, v, rho, p) <= 1e-10 * rho * (1 + np.linalg.norm(v))


def test_custom_smooth_prox_matches_linear_solve():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    b = np.array([0.3, -1.1])
    eigs = np.linalg.eigvalsh(H)
    f = CustomSmooth(
        value_fn=lambda x: 0.5 * x @ H @ x - b @ x,
        grad_fn=lambda x: H @ x - b,
        dim=2,
        nu=float(eigs[0]),
        lipschitz=float(eigs[-1]),
    )
    v = np.array([0.2, 0.9])
    rho = 1.7
    expected = np.linalg.solve(H + rho * np.eye(2), b + rho * v)
    assert np.linalg.norm(f.prox(v, rho) - expected) <= 1e-9


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        quad([1.0, 2.0]).value(1.0)


def test_aggregate_weights(k3):
    objs = (quad(1.0, 1.0), quad(2.0, 2.0), quad(3.0, 4.0))
    prob = NetworkProblem(graph=k3, comm=laplacian(k3), objectives=objs)
    info = aggregate(prob)
    assert info.strong_convexity == 1.0
    assert info.lipschitz == 4.0
    assert info.condition_number == 4.0


def test_aggregate_subgrad_bound(k3_problem, k3_optimal):
    info = aggregate(k3_problem, k3_optimal)
    assert info.subgrad_bound == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert np.allclose(k3_optimal.subgrad[:, 0], [1.0, 0.0, -1.0], atol=1e-12)


def test_require_curvature_missing(p3):
    objs = (l1quad(1.0), l1quad(2.0), l1quad(3.0))
    prob = NetworkProblem(graph=p3, comm=laplacian(p3), objectives=objs)
    with pytest.raises(MissingCurvatureMetadataError):
        require_curvature(prob)


def test_central_solve_k3(k3_problem, k3_optimal):
    assert np.allclose(k3_optimal.x_star, 2.0, atol=1e-14)
    assert k3_optimal.f_star == pytest.approx(1.0, abs=1e-14)
    assert np.max(np.abs(k3_optimal.x_star - k3_optimal.x_star[0])) == 0.0


def test_central_solve_weighted():
    g = generate_graph("path", 2)
    prob = NetworkProblem(graph=g, comm=laplacian(g), objectives=(quad(0.0, 1.0), quad(4.0, 3.0)))
    opt = central_solve(prob)
    assert opt.x_star[0, 0] == pytest.approx(3.0, abs=1e-14)
    assert opt.f_star == pytest.approx(6.0, abs=1e-14)


def test_central_solve_consensus_trivial(k3):
    objs = tuple(quad(5.0) for _ in range(3))
    prob = NetworkProblem(graph=k3, comm=laplacian(k3), objectives=objs)
    opt = central_solve(prob)
    assert np.allclose(opt.x_star, 5.0)
    assert opt.f_star == 0.0
    assert np.allclose(opt.subgrad, 0.0)


def test_central_solve_l1_hand_case(p3):
    # stationarity of 3 quadratics around (-1, 0, 2) with total l1 weight
    # 1.5: the unpenalized mean 1/3 gives |sum of gradients| = 1 <= 1.5, so
    # the optimum is pinned at 0 with shared sign value 2/3
    objs = (l1quad(-1.0), l1quad(0.0), l1quad(2.0))
    prob = NetworkProblem(graph=p3, comm=laplacian(p3), objectives=objs)
    opt = central_solve(prob)
    assert abs(opt.x_star[0, 0]) <= 1e-13
    assert opt.residual <= 1e-12
    expected = np.array([1.0 + 1.0 / 3.0, 1.0 / 3.0, -2.0 + 1.0 / 3.0])
    assert np.allclose(opt.subgrad[:, 0], expected, atol=1e-10)


def test_central_solve_iterative_matches_closed_form(k3):
    # an l1 objective with tau=0 forces the proximal-gradient path, which
    # must land on the pure-quadratic weighted mean
    objs = (quad(1.0, 2.0), quad(5.0, 1.0), l1quad(-2.0, w=3.0, tau=0.0))
    prob = NetworkProblem(graph=k3, comm=laplacian(k3), objectives=objs)
    opt = central_solve(prob)
    expected = (2.0 * 1.0 + 1.0 * 5.0 + 3.0 * -2.0) / 6.0
    assert opt.x_star[0, 0] == pytest.approx(expected, abs=1e-10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    f = quad(rng.normal(size=4), w=1.7)
    for _ in range(20):
        x = rng.normal(size=4)
        g = f.gradient(x)
        fd = np.empty(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = 1e-6
            fd[j] = (f.value(x + e) - f.value(x - e)) / 2e-6
        assert np.linalg.norm(fd - g) <= 1e-5 * (1 + np.linalg.norm(g))


def test_convexity_inequalities_randomized():
    rng = np.random.default_rng(3)
    f = quad(rng.normal(size=2), w=2.5)
    for _ in range(200):
        x, y = rng.normal(size=2), rng.normal(size=2)
        gx, gy = f.gradient(x), f.gradient(y)
        inner = float((gx - gy) @ (x - y))
        assert inner >= 2.5 * float((x - y) @ (x - y)) - 1e-10
        assert inner >= float((gx - gy) @ (gx - gy)) / 2.5 - 1e-10
        # subgradient inequality on the nonsmooth kind
    h = l1quad(0.3, w=1.0, tau=0.8)
    for _ in range(200):
        x, y = rng.normal(size=1), rng.normal(size=1)
        assert float(h.gradient(x) @ (x - y)) >= h.value(x) - h.value(y) - 1e-10


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0.1, 5),
    st.floats(0, 2),
    st.floats(0.05, 10),
)
def test_prox_nonexpansive(v1, v2, w, tau, rho):
    f = l1quad(0.7, w=w, tau=tau)
    p1, p2 = f.prox(np.array([v1]), rho), f.prox(np.array([v2]), rho)
    assert np.linalg.norm(p1 - p2) <= abs(v1 - v2) + 1e-12


def test_soft_threshold_basics():
    assert np.array_equal(soft_threshold(np.array([1.0, -1.0, 0.2]), 0.5), np.array([0.5, -0.5, 0.0]))


def test_estimation_objectives_targets():
    objs = estimation_objectives(3)
    assert [o.target[0] for o in objs] == [1.0, 2.0, 3.0]
    assert all(o.weight == 1.0 for o in objs)

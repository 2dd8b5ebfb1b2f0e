import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import minimize

from innersocp.socp import (ConicProblem, ConicSolution, NonNeg, SecondOrder, Status,
                            check_kkt, cone_violation, rotated_to_standard, solve_conic)
from innersocp.errors import ValidationError


def lp_corner():
    return ConicProblem([1.0, 0.0], [[1.0, 1.0]], [1.0], (NonNeg(2),))


def norm_epigraph(d=(3.0, 4.0)):
    # min u  s.t.  z = d,  (u, z) in SOC(3)
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    return ConicProblem([1.0, 0.0, 0.0], A, d, (SecondOrder(3),))


def random_socp(seed, n=12, m=4):
    """Feasible and bounded: b from an interior x0, c from an interior dual slack."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x0 = np.r_[1.0 + np.abs(rng.standard_normal()) * 3, rng.standard_normal(n - 1)]
    x0[0] += np.linalg.norm(x0[1:])
    s0 = np.r_[1.0, 0.5 * rng.standard_normal(n - 1) / np.sqrt(n)]
    s0[0] += np.linalg.norm(s0[1:])
    c = A.T @ rng.standard_normal(m) + s0
    return ConicProblem(c, A, A @ x0, (SecondOrder(n),)), x0


def sqp_oracle(p, x0):
    """Independent minimizer: SLSQP on the smooth form x0^2 >= ||x1||^2, x0 >= 0."""
    cons = [
        {"type": "eq", "fun": lambda x: p.A @ x - p.b, "jac": lambda x: p.A},
        {"type": "ineq", "fun": lambda x: x[0] ** 2 - x[1:] @ x[1:],
         "jac": lambda x: np.r_[2 * x[0], -2 * x[1:]]},
        {"type": "ineq", "fun": lambda x: x[0], "jac": lambda x: np.eye(x.size)[0]},
    ]
    res = minimize(lambda x: p.c @ x, x0, jac=lambda x: p.c, constraints=cons,
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 2000})
    return res.fun


def test_lp_corner():
    sol = solve_conic(lp_corner())
    assert sol.status is Status.OPTIMAL
    assert np.allclose(sol.x, [0.0, 1.0], atol=1e-9)
    assert abs(lp_corner().c @ sol.x) <= 1e-9


def test_norm_epigraph():
    sol = solve_conic(norm_epigraph())
    assert sol.status is Status.OPTIMAL
    assert sol.x[0] == pytest.approx(5.0, abs=1e-9)


def test_random_socp_matches_independent_minimizer():
    p, x0 = random_socp(3)
    sol = solve_conic(p)
    assert sol.status is Status.OPTIMAL
    assert p.c @ sol.x == pytest.approx(sqp_oracle(p, x0), abs=1e-6)


def test_kkt_residuals_of_solver_output():
    p, _ = random_socp(3)
    sol = solve_conic(p)
    assert max(check_kkt(p, sol)) <= 1e-9
    assert cone_violation(p.cones, sol.x) <= 1e-9
    assert cone_violation(p.cones, sol.s) <= 1e-9


def test_kkt_exact_lp_pair():
    p = lp_corner()
    sol = ConicSolution(np.array([0.0, 1.0]), np.array([0.0]), np.array([1.0, 0.0]),
                        Status.OPTIMAL, 0, 0, 0)
    assert max(check_kkt(p, sol)) <= 1e-15


def test_kkt_perturbation_shows_in_primal_residual():
    p = lp_corner()
    x = np.array([1e-3, 1.0])  # still in the cone, violates Ax = b by 1e-3
    sol = ConicSolution(x, np.array([0.0]), np.array([1.0, 0.0]), Status.OPTIMAL, 0, 0, 0)
    pres, _, _ = check_kkt(p, sol)
    assert pres == pytest.approx(1e-3 / 2)


def test_kkt_dimension_mismatch():
    sol = ConicSolution(np.zeros(3), np.zeros(1), np.zeros(3), Status.OPTIMAL, 0, 0, 0)
    with pytest.raises(ValidationError):
        check_kkt(lp_corner(), sol)


def test_primal_infeasible_certificate():
    # x1 + x2 = -1 with x >= 0
    p = ConicProblem([1.0, 1.0], [[1.0, 1.0]], [-1.0], (NonNeg(2),))
    sol = solve_conic(p)
    assert sol.status is Status.PRIMAL_INFEASIBLE
    assert p.b @ sol.y > 0
    assert cone_violation(p.cones, -p.A.T @ sol.y) <= 1e-8


def test_dual_infeasible_certificate():
    # min -x1 s.t. x1 - x2 = 0, x >= 0 is unbounded
    p = ConicProblem([-1.0, 0.0], [[1.0, -1.0]], [0.0], (NonNeg(2),))
    sol = solve_conic(p)
    assert sol.status is Status.DUAL_INFEASIBLE
    assert p.c @ sol.x < 0
    assert cone_violation(p.cones, sol.x) <= 1e-8


def test_rank_deficient_is_degenerate():
    p = ConicProblem([1.0, 1.0], [[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], (NonNeg(2),))
    assert solve_conic(p).status is Status.DEGENERATE


def test_max_iter_returns_best_iterate():
    p, _ = random_socp(5)
    sol = solve_conic(p, max_iter=2)
    assert sol.status is Status.MAX_ITER
    assert np.all(np.isfinite(sol.x))


def test_determinism():
    p, _ = random_socp(11)
    a, b = solve_conic(p), solve_conic(p)
    assert a.status == b.status
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_bad_cone_specs():
    with pytest.raises(ValidationError):
        SecondOrder(1)
    with pytest.raises(ValidationError):
        ConicProblem([1.0], [[1.0, 1.0]], [1.0], (NonNeg(2),))


def test_json_round_trip():
    p = norm_epigraph()
    q = ConicProblem.from_json(p.to_json())
    assert np.array_equal(p.A, q.A) and q.cones == p.cones


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 14), st.integers(1, 5))
def test_weak_duality_on_feasible_iterates(seed, n, m):
    m = min(m, n - 1)
    p, _ = random_socp(seed, n, m)
    tol = 1e-9
    sol = solve_conic(p, tol=tol)
    assert sol.status is Status.OPTIMAL
    cn, bn = 1 + np.linalg.norm(p.c), 1 + np.linalg.norm(p.b)
    for h in sol.history:
        if h["pres"] <= tol and h["dres"] <= tol:
            # c'x - b'y = x's + x'(c - A'y - s) + y'(Ax - b), and x's >= 0
            slack = h["xnorm"] * cn * h["dres"] + h["ynorm"] * bn * h["pres"]
            assert h["pobj"] - h["dobj"] >= -tol - slack
    assert p.c @ sol.x - p.b @ sol.y >= -tol * (1 + abs(p.c @ sol.x))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12))
def test_random_instances_satisfy_kkt(seed, n):
    p, _ = random_socp(seed, n, max(1, n // 3))
    sol = solve_conic(p)
    assert sol.status is Status.OPTIMAL
    assert max(check_kkt(p, sol)) <= 1e-9


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10),
       st.lists(st.floats(-10, 10), min_size=1, max_size=4))
def test_rotated_cone_reduction_pointwise(u, v, z):
    z = np.array(z)
    lhs = 2 * u * v - z @ z
    assume(abs(lhs) > 1e-9 * (1 + 2 * u * v))  # stay off the boundary
    p = rotated_to_standard(u, v, z)
    in_standard = p[0] >= np.linalg.norm(p[1:])
    assert in_standard == (lhs >= 0)

"""Worst-case robust beamforming for general-rank signal models.

Two equivalent problems are handled. The ratio form

    maximize  ||Q w|| - eta ||w||   s.t.  w^H (R + gamma I) w <= 1        (P13)

and the power form

    minimize  w^H R w + gamma ||w||^2   s.t.  ||Q w|| - eta ||w|| >= 1    (P14)

are related by ``w13 = w14 / sqrt(v14)`` and ``val13 = 1 / sqrt(v14)``.

The nonconvex constraint of P14 is restricted around the current iterate
``w_k`` by replacing ``||Q w||`` with its linear minorant
``Re(w_k^H Q^H Q w) / ||Q w_k||``. Each restricted problem is an SOCP whose
solution stays feasible for P14, so the objective sequence is monotone.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (DegenerateLinearizationError, InfeasibleProblemError,
                     SubproblemFailure, ValidationError)
from .linalg import (as_hermitian, as_vector, eig_hermitian, embed_matrix, embed_vector,
                     unembed_vector)
from .socp import ConicProblem, NonNeg, SecondOrder, Status, solve_conic

XI_DEFAULT = 1e-8
MAX_OUTER_DEFAULT = 500
INIT_MARGIN = 1e-3
RANK_RTOL = 1e-10
LINEARIZATION_FLOOR = 1e-14
SUBPROBLEM_TOL = 1e-9


@dataclass(frozen=True)
class RobustParams:
    gamma: float
    eta: float
    xi: float = XI_DEFAULT
    max_outer: int = MAX_OUTER_DEFAULT

    def __post_init__(self):
        if not (self.gamma >= 0 and self.eta >= 0):
            raise ValidationError("gamma and eta must be nonnegative")
        if not self.xi > 0:
            raise ValidationError("xi must be positive")
        if self.max_outer < 1:
            raise ValidationError("max_outer must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    k: int
    v: float
    t: float
    gap: float
    status: str
    ms: float
    primal_res: float = 0.0
    dual_res: float = 0.0
    solver_iters: int = 0
    norm_qw: float = float("nan")
    margin: float = float("nan")  # ||Q w_k|| - eta ||w_k||

    def to_dict(self):
        return {"k": self.k, "v": self.v, "t": self.t, "gap": self.gap,
                "status": self.status, "ms": self.ms}


@dataclass
class IterationTrace:
    """Outer-iteration history; record 0 is the initial point."""

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def values(self):
        return np.array([r.v for r in self.records])

    @property
    def outer_iterations(self):
        return max(len(self.records) - 1, 0)

    def to_list(self):
        return [r.to_dict() for r in self.records]


@dataclass
class BeamformerResult:
    w14: np.ndarray
    v14: float
    w13: np.ndarray
    val13: float
    trace: IterationTrace
    converged: bool
    method: str = "inner_socp"

    @property
    def outer_iterations(self):
        return self.trace.outer_iterations

    def to_dict(self):
        return {
            "method": self.method,
            "w14": {"re": self.w14.real.tolist(), "im": self.w14.imag.tolist()},
            "v14": self.v14,
            "w13": {"re": self.w13.real.tolist(), "im": self.w13.imag.tolist()},
            "val13": self.val13,
            "converged": self.converged,
            "trace": self.trace.to_list(),
        }


# -- parameters, factor, evaluators ----------------------------------------

def derive_params(Rhat, Rs_presumed, xi=XI_DEFAULT, max_outer=MAX_OUTER_DEFAULT):
    """Default loading and uncertainty levels.

    ``gamma = 0.1 ||Rhat||_F`` and ``eta = 0.5 sqrt(tr Rs_presumed)``.
    """
    R = as_hermitian(Rhat, "Rhat")
    Rs = as_hermitian(Rs_presumed, "Rs_presumed")
    gamma = 0.1 * np.linalg.norm(R)
    eta = 0.5 * np.sqrt(max(np.trace(Rs).real, 0.0))
    return RobustParams(float(gamma), float(eta), xi, max_outer)


def factorize_presumed(Rs_presumed, rank_tol=None):
    """Spectral factor Q (M x N) with ``Q^H Q = Rs_presumed``.

    Eigenvalues at or below ``rank_tol`` (default ``1e-10 * lambda_max``) are
    dropped, so M is the numerical rank.
    """
    lam, U = eig_hermitian(Rs_presumed)
    if lam[0] <= 0:
        raise ValidationError("presumed signal covariance is zero: no signal subspace")
    tol = RANK_RTOL * lam[0] if rank_tol is None else rank_tol
    keep = lam > tol
    return np.sqrt(lam[keep])[:, None] * U[:, keep].conj().T


def _loaded(Rhat, gamma):
    R = as_hermitian(Rhat, "Rhat")
    return R + gamma * np.eye(R.shape[0])


def _quad(w, B):
    return float(np.real(w.conj() @ B @ w))


def worst_case_denominator(w, Rhat, gamma):
    """``w^H (Rhat + gamma I) w``, the largest output power over ``||D|| <= gamma``."""
    w = as_vector(w, "w")
    return _quad(w, _loaded(Rhat, gamma))


def worst_case_signal_power(w, Q, eta):
    """``max(||Q w|| - eta ||w||, 0)^2``, the smallest ``||(Q + D) w||^2`` over ``||D||_F <= eta``."""
    w = as_vector(w, "w")
    Q = np.asarray(Q, dtype=complex)
    return max(np.linalg.norm(Q @ w) - eta * np.linalg.norm(w), 0.0) ** 2


def worst_case_objective_13(w, Q, eta, Rhat, gamma):
    """Signed ratio ``(||Q w|| - eta ||w||) / sqrt(w^H (Rhat + gamma I) w)``."""
    w = as_vector(w, "w")
    if not np.any(w):
        raise ValidationError("w must be nonzero")
    Q = np.asarray(Q, dtype=complex)
    num = np.linalg.norm(Q @ w) - eta * np.linalg.norm(w)
    return float(num / np.sqrt(_quad(w, _loaded(Rhat, gamma))))


def objective_14(w, Rhat, gamma):
    """``w^H Rhat w + gamma ||w||^2``."""
    return worst_case_denominator(w, Rhat, gamma)


def rescale_14_to_13(w14, v14):
    if not v14 > 0:
        raise ValidationError("v14 must be positive")
    r = np.sqrt(v14)
    return as_vector(w14, "w14") / r, 1.0 / r


def rescale_13_to_14(w13, val13):
    if not val13 > 0:
        raise ValidationError("val13 must be positive")
    return as_vector(w13, "w13") / val13, 1.0 / val13 ** 2


def initial_point(Q, eta, margin=INIT_MARGIN):
    """Feasible start for P14 along the principal right singular vector of Q.

    The phase is fixed so that the first nonzero entry is real and positive;
    the scale gives ``||Q w0|| - eta ||w0|| = 1 + margin``.
    """
    Q = np.asarray(Q, dtype=complex)
    _, sv, Vh = np.linalg.svd(Q)
    smax = sv[0]
    if smax <= eta:
        raise InfeasibleProblemError(
            f"sigma_max(Q) = {smax:.6g} does not exceed eta = {eta:.6g}; "
            "no beamformer satisfies ||Q w|| - eta ||w|| >= 1"
        )
    v = Vh[0].conj()
    lead = v[np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())[0]]
    v = v * (abs(lead) / lead)
    return (1.0 + margin) / (smax - eta) * v


# -- conic subproblems ------------------------------------------------------

class _Restriction:
    """Cached real data for the restricted SOCPs of one problem instance.

    ``B = embed(Rhat + gamma I) = F^T F`` with F upper triangular. The
    beamformer x is eliminated through ``p2 = sqrt(2) F x`` so that every
    conic variable sits inside a cone.
    """

    def __init__(self, Rhat, gamma, Q, eta):
        self.B = _loaded(Rhat, gamma)
        self.Q = np.asarray(Q, dtype=complex)
        self.eta = float(eta)
        n = self.B.shape[0]
        if self.Q.ndim != 2 or self.Q.shape[1] != n:
            raise ValidationError(f"Q has shape {self.Q.shape}, expected (M, {n})")
        Br = embed_matrix(self.B)
        Br = 0.5 * (Br + Br.T)
        try:
            self.F = scipy.linalg.cholesky(Br, lower=False)
        except np.linalg.LinAlgError as exc:
            raise ValidationError("Rhat + gamma I is not positive definite") from exc
        self.Finv = scipy.linalg.solve_triangular(self.F, np.eye(2 * n), lower=False)
        self.n = n

    def cut(self, w_k):
        qw = self.Q @ w_k
        nq = np.linalg.norm(qw)
        if nq <= LINEARIZATION_FLOOR:
            raise DegenerateLinearizationError(
                f"||Q w_k|| = {nq:.3e} is too small to linearize")
        return embed_vector(self.Q.conj().T @ qw / nq)

    def power_problem(self, w_k):
        """Restricted P14 around ``w_k``.

        Layout: p = (r + 1/2, r - 1/2, sqrt(2) F x) in SOC(2 + 2N),
        q = (t - 1, eta x) in SOC(1 + 2N), sigma = a^T x - t in R_+.
        """
        a = self.cut(w_k)
        d = 2 * self.n
        npv, nq = 2 + d, 1 + d
        nv = npv + nq + 1
        G = self.Finv / np.sqrt(2.0)  # x = G @ p2
        A = np.zeros((2 + d, nv))
        b = np.zeros(2 + d)
        A[0, 0], A[0, 1], b[0] = 1.0, -1.0, 1.0
        A[1:1 + d, npv + 1:npv + nq] = np.eye(d)
        A[1:1 + d, 2:npv] = -self.eta * G
        A[1 + d, -1] = 1.0
        A[1 + d, 2:npv] = -(a @ G)
        A[1 + d, npv] = 1.0
        b[1 + d] = -1.0
        c = np.zeros(nv)
        c[0] = c[1] = 0.5
        cones = (SecondOrder(npv), SecondOrder(nq), NonNeg(1))
        return ConicProblem(c, A, b, cones), a

    def power_extract(self, sol):
        d = 2 * self.n
        x = self.Finv @ sol.x[2:2 + d] / np.sqrt(2.0)
        t = sol.x[2 + d] + 1.0
        return x, t

    def ratio_problem(self, w_k):
        """Restricted P13 around ``w_k``.

        Layout: p = (1, F x) in SOC(1 + 2N), q = (h, eta x) in SOC(1 + 2N);
        minimize ``h - a^T x``.
        """
        a = self.cut(w_k)
        d = 2 * self.n
        nv = 2 * (1 + d)
        G = self.Finv
        A = np.zeros((1 + d, nv))
        b = np.zeros(1 + d)
        A[0, 0], b[0] = 1.0, 1.0
        A[1:, 1 + d + 1:] = np.eye(d)
        A[1:, 1:1 + d] = -self.eta * G
        c = np.zeros(nv)
        c[1:1 + d] = -(a @ G)
        c[1 + d] = 1.0
        cones = (SecondOrder(1 + d), SecondOrder(1 + d))
        return ConicProblem(c, A, b, cones), a

    def ratio_extract(self, sol):
        d = 2 * self.n
        return self.Finv @ sol.x[1:1 + d]

    def margin(self, w):
        return np.linalg.norm(self.Q @ w) - self.eta * np.linalg.norm(w)


def build_subproblem(w_k, Rhat, gamma, Q, eta):
    """Restricted P14 around ``w_k`` as a standard-form :class:`ConicProblem`.

    Variables are ``p = (r + 1/2, r - 1/2, sqrt(2) F x)``,
    ``q = (t - 1, eta x)`` and a slack ``sigma = a^T x - t``, where
    ``x = [Re w; Im w]``, ``F^T F`` embeds ``Rhat + gamma I`` and
    ``a = embed(Q^H Q w_k / ||Q w_k||)``. The objective is ``r``. Use
    :func:`extract_subproblem_solution` to map a solution back to ``(w, t)``.
    """
    rs = _Restriction(Rhat, gamma, Q, eta)
    return rs.power_problem(as_vector(w_k, "w_k"))[0]


def extract_subproblem_solution(x_conic, Rhat, gamma, Q, eta):
    """Recover complex ``w`` and ``t`` from a solution of :func:`build_subproblem`."""
    rs = _Restriction(Rhat, gamma, Q, eta)

    class _S:
        x = np.asarray(x_conic, dtype=float)

    x, t = rs.power_extract(_S)
    return unembed_vector(x), float(t)


def _solve_checked(problem, tol, trace, k):
    t0 = time.perf_counter()
    sol = solve_conic(problem, tol=tol)
    ms = 1e3 * (time.perf_counter() - t0)
    if sol.status is not Status.OPTIMAL:
        raise SubproblemFailure(
            f"outer iteration {k}: subproblem ended with status {sol.status.value}",
            trace=trace, status=sol.status)
    return sol, ms


def solve_inner_socp(Rhat, Q, params, w0=None, tol=SUBPROBLEM_TOL):
    """Successive SOCP restriction for P14.

    Iterates until ``v_{k-1} - v_k <= xi`` or ``params.max_outer`` subproblems
    have been solved. Each subproblem solution is rescaled onto
    ``a_k^T x - eta ||x|| = 1``, the boundary of its own feasible set, which
    removes the solver's residual infeasibility without raising the objective
    beyond solver tolerance. A step that would raise v (possible only through
    round-off, since ``w_k`` is feasible for its own restriction) is
    rejected and ends the loop.

    Raises
    ------
    SubproblemFailure
        A subproblem did not reach Optimal status; ``exc.trace`` holds the
        iterations completed so far.
    """
    rs = _Restriction(Rhat, params.gamma, Q, params.eta)
    w = initial_point(rs.Q, params.eta) if w0 is None else as_vector(w0, "w0")
    if rs.margin(w) < 1.0 - 1e-7:
        raise ValidationError("w0 is not feasible: ||Q w0|| - eta ||w0|| < 1")
    v = _quad(w, rs.B)
    trace = IterationTrace([TraceRecord(0, v, float("nan"), 0.0, "Initial", 0.0,
                                        norm_qw=float(np.linalg.norm(rs.Q @ w)),
                                        margin=float(rs.margin(w)))])
    converged = False
    for k in range(1, params.max_outer + 1):
        problem, a = rs.power_problem(w)
        sol, ms = _solve_checked(problem, tol, trace, k)
        x, _ = rs.power_extract(sol)
        lin = a @ x - params.eta * np.linalg.norm(x)
        if lin <= 0:
            raise SubproblemFailure(f"outer iteration {k}: degenerate subproblem solution",
                                    trace=trace, status=sol.status)
        x = x / lin
        w_new = unembed_vector(x)
        v_new = _quad(w_new, rs.B)
        status = sol.status.value
        if v_new > v:
            # w_k is itself feasible for the restriction, so a higher value
            # is solver round-off; keep w_k, which also ends the loop
            w_new, v_new, x, status = w, v, embed_vector(w), "Stalled"
        trace.records.append(TraceRecord(
            k, v_new, float(a @ x), sol.gap, status, ms,
            sol.primal_res, sol.dual_res, sol.iterations,
            float(np.linalg.norm(rs.Q @ w_new)), float(rs.margin(w_new))))
        done = v - v_new <= params.xi
        w, v = w_new, v_new
        if done:
            converged = True
            break
    w13, val13 = rescale_14_to_13(w, v)
    return BeamformerResult(w, v, w13, val13, trace, converged, "inner_socp")


def solve_direct_form(Rhat, Q, params, w0=None, tol=SUBPROBLEM_TOL):
    """Successive SOCP restriction applied to P13 directly.

    Each step maximizes ``s`` subject to ``t - eta ||w|| >= s``,
    ``Re(w_k^H Q^H Q w) / ||Q w_k|| >= t`` and ``w^H (Rhat + gamma I) w <= 1``.
    The trace stores ``v = 1 / s^2`` so that it reads on the P14 scale; the
    loop stops when that value decreases by at most ``xi``.
    """
    rs = _Restriction(Rhat, params.gamma, Q, params.eta)
    w = initial_point(rs.Q, params.eta) if w0 is None else as_vector(w0, "w0")
    if np.linalg.norm(rs.Q @ w) <= LINEARIZATION_FLOOR:
        raise DegenerateLinearizationError("||Q w0|| is zero")
    w = w / np.sqrt(_quad(w, rs.B))
    s = rs.margin(w)
    v = 1.0 / s ** 2 if s > 0 else float("inf")
    trace = IterationTrace([TraceRecord(0, v, float("nan"), 0.0, "Initial", 0.0,
                                        norm_qw=float(np.linalg.norm(rs.Q @ w)),
                                        margin=float(s))])
    converged = False
    for k in range(1, params.max_outer + 1):
        problem, a = rs.ratio_problem(w)
        sol, ms = _solve_checked(problem, tol, trace, k)
        x = rs.ratio_extract(sol)
        x = x / np.linalg.norm(rs.F @ x)  # unit-ball constraint is active
        s_new = a @ x - params.eta * np.linalg.norm(x)
        if s_new <= 0:
            raise InfeasibleProblemError(
                f"outer iteration {k}: restricted ratio problem has value {s_new:.3e} <= 0")
        w_new = unembed_vector(x)
        v_new = 1.0 / s_new ** 2
        status = sol.status.value
        if s_new < s:
            w_new, v_new, s_new, x, status = w, v, s, embed_vector(w), "Stalled"
        trace.records.append(TraceRecord(
            k, v_new, float(a @ x), sol.gap, status, ms,
            sol.primal_res, sol.dual_res, sol.iterations,
            float(np.linalg.norm(rs.Q @ w_new)), float(rs.margin(w_new))))
        done = v - v_new <= params.xi
        w, v, s = w_new, v_new, s_new
        if done:
            converged = True
            break
    w14, v14 = rescale_13_to_14(w, s)
    return BeamformerResult(w14, v14, w, float(s), trace, converged, "direct_form")


def fixed_point_gap(result, Rhat, Q, params, tol=SUBPROBLEM_TOL):
    """Decrease of v from one more restricted step at ``result.w14``."""
    rs = _Restriction(Rhat, params.gamma, Q, params.eta)
    problem, a = rs.power_problem(result.w14)
    sol = solve_conic(problem, tol=tol)
    x, _ = rs.power_extract(sol)
    x = x / (a @ x - params.eta * np.linalg.norm(x))
    return result.v14 - _quad(unembed_vector(x), rs.B)


def closed_form_eta0(Rhat, Q, gamma):
    """Optimal P13 value at eta = 0: ``sqrt(lambda_max(B^{-1/2} Q^H Q B^{-1/2}))``."""
    B = _loaded(Rhat, gamma)
    Q = np.asarray(Q, dtype=complex)
    lam = scipy.linalg.eigh(Q.conj().T @ Q, B, eigvals_only=True)
    return float(np.sqrt(lam[-1]))

"""Dense primal-dual interior-point solver for standard-form SOCPs.

Solves the pair

    minimize    c^T x                maximize    b^T y
    subject to  A x = b              subject to  A^T y + s = c
                x in K                           s in K

where K is a product of nonnegative orthants and second-order cones
``{(u, z) : u >= ||z||}``. The method is a homogeneous self-dual embedding
with Nesterov-Todd scaling and Mehrotra predictor-corrector steps, so
infeasible problems terminate with a Farkas-type certificate instead of
diverging. Everything is dense; the intended problem sizes are a few dozen
variables.

Steps are computed in NT-scaled coordinates. The scaling matrix is carried
from one iteration to the next as a product ``W <- W @ W_step`` rather than
being rebuilt from x and s, which near the optimum sit within rounding
distance of the cone boundary.
"""

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ValidationError

STEP_FRACTION = 0.99
COND_LIMIT = 1e14


@dataclass(frozen=True)
class NonNeg:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("NonNeg block needs dim >= 1")


@dataclass(frozen=True)
class SecondOrder:
    """``{(u, z) in R x R^(dim-1) : u >= ||z||}``."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValidationError("SecondOrder block needs dim >= 2")


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITER = "MaxIter"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ConicProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    cones: tuple

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        b = np.array(self.b, dtype=float).ravel()
        A = np.array(self.A, dtype=float).reshape(b.size, -1) if b.size else \
            np.zeros((0, c.size))
        cones = tuple(self.cones)
        n = sum(k.dim for k in cones)
        if c.size != n:
            raise ValidationError(f"c has length {c.size}, cones cover {n}")
        if A.shape != (b.size, n):
            raise ValidationError(f"A has shape {A.shape}, expected ({b.size}, {n})")
        for arr in (c, A, b):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "cones", cones)

    @property
    def n(self):
        return self.c.size

    @property
    def m(self):
        return self.b.size

    def to_json(self):
        """Debug dump; the layout is not a stability contract."""
        cones = [
            {"type": "nonneg" if isinstance(k, NonNeg) else "soc", "dim": k.dim}
            for k in self.cones
        ]
        return json.dumps(
            {"c": self.c.tolist(), "A": self.A.tolist(), "b": self.b.tolist(),
             "cones": cones}
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        kinds = {"nonneg": NonNeg, "soc": SecondOrder}
        cones = tuple(kinds[k["type"]](k["dim"]) for k in d["cones"])
        return cls(d["c"], d["A"], d["b"], cones)


@dataclass
class ConicSolution:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: Status
    gap: float
    primal_res: float
    dual_res: float
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)


def rotated_to_standard(u, v, z):
    """Map a rotated-cone point to a standard SOC point.

    ``{(u, v, z) : 2 u v >= ||z||^2, u, v >= 0}`` is the preimage of the
    standard cone under ``(u, v, z) -> (u + v, u - v, sqrt(2) z)``.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    return np.concatenate([[u + v, u - v], np.sqrt(2.0) * z])


def _norm(u):
    return math.sqrt(u @ u)


def _amax(u):
    return float(np.abs(u).max()) if u.size else 0.0


def _jnorm(u):
    r = _norm(u[1:])
    return math.sqrt(max((u[0] - r) * (u[0] + r), 1e-300))


class _Cone:
    """Index bookkeeping and Jordan-algebra operations for a cone product."""

    def __init__(self, cones):
        lin, self.soc = [], []
        start = 0
        for k in cones:
            sl = slice(start, start + k.dim)
            (lin if isinstance(k, NonNeg) else self.soc).append(sl)
            start += k.dim
        self.n = start
        self.lin_idx = (np.concatenate([np.arange(s.start, s.stop) for s in lin])
                        if lin else np.zeros(0, dtype=int))
        self.degree = self.lin_idx.size + len(self.soc)
        e = np.zeros(start)
        e[self.lin_idx] = 1.0
        for s in self.soc:
            e[s.start] = 1.0
        self.e = e

    def min_eig(self, u):
        vals = [np.inf]
        if self.lin_idx.size:
            vals.append(u[self.lin_idx].min())
        for s in self.soc:
            vals.append(u[s.start] - _norm(u[s.start + 1:s.stop]))
        return min(vals)

    def prod(self, u, v):
        out = np.empty_like(u)
        li = self.lin_idx
        out[li] = u[li] * v[li]
        for s in self.soc:
            out[s.start] = u[s] @ v[s]
            out[s.start + 1:s.stop] = u[s.start] * v[s.start + 1:s.stop] + \
                v[s.start] * u[s.start + 1:s.stop]
        return out

    def div(self, lam, d):
        """Solve ``lam o z = d`` for z; lam must be interior."""
        out = np.empty_like(d)
        li = self.lin_idx
        out[li] = d[li] / lam[li]
        for s in self.soc:
            l0, l1 = lam[s.start], lam[s.start + 1:s.stop]
            d0, d1 = d[s.start], d[s.start + 1:s.stop]
            r = _norm(l1)
            z0 = (l0 * d0 - l1 @ d1) / ((l0 - r) * (l0 + r))
            out[s.start] = z0
            out[s.start + 1:s.stop] = (d1 - z0 * l1) / l0
        return out

    def max_step(self, u, du):
        """Largest alpha with u + alpha*du in the closed cone (inf if unbounded)."""
        alpha = np.inf
        li = self.lin_idx
        if li.size:
            dl = du[li]
            neg = dl < 0
            if neg.any():
                alpha = float(np.min(-u[li][neg] / dl[neg]))
        for s in self.soc:
            u0, u1 = u[s.start], u[s.start + 1:s.stop]
            d0, d1 = du[s.start], du[s.start + 1:s.stop]
            uu, dd, ud = u1 @ u1, d1 @ d1, u1 @ d1
            det = (u0 - math.sqrt(uu)) * (u0 + math.sqrt(uu))
            lk = math.sqrt(max(det, 1e-300))
            # rho = J-reflected step expressed in the frame where u is e
            rho0 = (u0 * d0 - ud) / (lk * lk)
            kap = (rho0 + d0 / lk) / (u0 / lk + 1.0)
            r2 = (dd - 2.0 * kap * ud + kap * kap * uu) / (lk * lk)
            denom = math.sqrt(max(r2, 0.0)) - rho0
            if denom > 0:
                alpha = min(alpha, 1.0 / denom)
        return alpha

    def nt_scaling(self, x, s, inverse=True):
        """Nesterov-Todd scaling of an interior pair.

        Returns ``(W, Winv, lam)`` with W symmetric, block diagonal and
        ``W^{-1} x = W s = lam``. ``Winv`` is None when ``inverse`` is False.
        """
        n = self.n
        W = np.zeros((n, n))
        Winv = np.zeros((n, n)) if inverse else None
        lam = np.empty(n)
        li = self.lin_idx
        if li.size:
            d = np.sqrt(x[li] / s[li])
            W[li, li] = d
            if inverse:
                Winv[li, li] = 1.0 / d
            lam[li] = np.sqrt(x[li] * s[li])
        for sl in self.soc:
            xs, ss = x[sl], s[sl]
            a = _jnorm(xs)
            b = _jnorm(ss)
            xb, sb = xs / a, ss / b
            gam = np.sqrt(0.5 * (1.0 + xb @ sb))
            w0 = (xb[0] + sb[0]) / (2.0 * gam)
            w1 = (xb[1:] - sb[1:]) / (2.0 * gam)
            beta = np.sqrt(a / b)
            k = sl.stop - sl.start
            blk = np.empty((k, k))
            blk[0, 0] = w0
            blk[0, 1:] = w1
            blk[1:, 0] = w1
            blk[1:, 1:] = np.eye(k - 1) + np.outer(w1, w1) / (1.0 + w0)
            W[sl, sl] = beta * blk
            if inverse:
                blk[0, 1:] = -w1
                blk[1:, 0] = -w1
                Winv[sl, sl] = blk / beta
            lk = np.sqrt(a * b)
            lam[sl.start] = lk * gam
            lam[sl.start + 1:sl.stop] = lk * (
                (gam + sb[0]) * xb[1:] + (gam + xb[0]) * sb[1:]
            ) / (xb[0] + sb[0] + 2.0 * gam)
        return W, Winv, lam


class _Newton:
    """Linearized embedding system in NT-scaled coordinates.

    With ``G = A W`` and scaled steps ``dxs = W^-1 dx``, ``dss = W^T ds``
    the unknowns (dxs, dy, dss, dtau, dkap) satisfy

        G dxs - b dtau                 = r1
        G^T dy + dss - W^T c dtau      = r2s
        (W^T c)^T dxs - b^T dy + dkap  = r3
        dxs + dss                      = rc
        tau dkap + kappa dtau          = rk

    The normal matrix ``G G^T`` is Cholesky factored; if its reciprocal
    condition estimate falls below 1/COND_LIMIT the augmented system is
    factored instead, and its solutions get a few steps of iterative
    refinement.
    """

    REFINE_STEPS = 2
    REFINE_RTOL = 1e-14

    def __init__(self, A, b, c, W, tau, kappa):
        self.b, self.tau, self.kappa = b, tau, kappa
        self.G = G = A @ W
        self.cs = W.T @ c
        self.chol = None
        if G.shape[0]:
            M = G @ G.T
            M = 0.5 * (M + M.T)
            chol, info = lapack.dpotrf(M, lower=False)
            if info == 0:
                anorm = np.abs(M).sum(axis=0).max()
                rcond, info2 = lapack.dpocon(chol, anorm)
                if info2 == 0 and rcond > 1.0 / COND_LIMIT:
                    self.chol = chol
            if self.chol is None:
                n, m = G.shape[1], G.shape[0]
                K = np.zeros((n + m, n + m))
                K[:n, :n] = -np.eye(n)
                K[:n, n:] = G.T
                K[n:, :n] = G
                self.aug = scipy.linalg.lu_factor(K)
        self.y2, self.u2 = self._core(b, self.cs)
        self.denom = self.cs @ self.u2 - b @ self.y2 - kappa / tau

    def _core(self, p1, h):
        """Solve ``-u + G^T y = h``, ``G u = p1``."""
        G = self.G
        if G.shape[0] == 0:
            return np.zeros(0), -h
        if self.chol is not None:
            y, _ = lapack.dpotrs(self.chol, p1 + G @ h, lower=False)
            return y, G.T @ y - h
        n = G.shape[1]
        sol = scipy.linalg.lu_solve(self.aug, np.concatenate([h, p1]))
        return sol[n:], sol[:n]

    def _raw(self, r1, r2s, r3, rc, rk):
        y1, u1 = self._core(r1, r2s - rc)
        dtau = (r3 - rk / self.tau - self.cs @ u1 + self.b @ y1) / self.denom
        dxs = u1 + dtau * self.u2
        dy = y1 + dtau * self.y2
        dss = rc - dxs
        dkap = (rk - self.kappa * dtau) / self.tau
        return dxs, dy, dss, dtau, dkap

    def solve(self, r1, r2s, r3, rc, rk):
        G, b, cs = self.G, self.b, self.cs
        d = self._raw(r1, r2s, r3, rc, rk)
        if self.chol is not None:
            return d
        scale = max(_amax(r1), _amax(r2s), abs(r3), _amax(rc), abs(rk), 1e-300)
        for _ in range(self.REFINE_STEPS):
            dxs, dy, dss, dtau, dkap = d
            e = (r1 - (G @ dxs - b * dtau),
                 r2s - (G.T @ dy + dss - cs * dtau),
                 r3 - (cs @ dxs - b @ dy + dkap),
                 rc - (dxs + dss),
                 rk - (self.tau * dkap + self.kappa * dtau))
            if max(_amax(e[0]), _amax(e[1]), abs(e[2]), _amax(e[3]), abs(e[4])) \
                    <= self.REFINE_RTOL * scale:
                break
            corr = self._raw(*e)
            d = tuple(u + v for u, v in zip(d, corr))
        return d


def check_kkt(p, sol):
    """Scaled residuals ``(primal_res, dual_res, gap)`` of a candidate solution.

    primal_res = ||Ax - b|| / (1 + ||b||), dual_res = ||A^T y + s - c|| / (1 + ||c||),
    gap = |x^T s| / (1 + |c^T x|).
    """
    x = np.asarray(sol.x, dtype=float)
    y = np.asarray(sol.y, dtype=float)
    s = np.asarray(sol.s, dtype=float)
    if x.size != p.n or s.size != p.n or y.size != p.m:
        raise ValidationError("solution dimensions do not match the problem")
    pres = np.linalg.norm(p.A @ x - p.b) / (1.0 + np.linalg.norm(p.b))
    dres = np.linalg.norm(p.A.T @ y + s - p.c) / (1.0 + np.linalg.norm(p.c))
    gap = abs(x @ s) / (1.0 + abs(p.c @ x))
    return float(pres), float(dres), float(gap)


def cone_violation(cones, u):
    """Largest amount by which u sits outside the cone product (0 if inside)."""
    return max(0.0, -_Cone(cones).min_eig(np.asarray(u, dtype=float)))


def solve_conic(p, tol=1e-9, max_iter=200):
    """Solve a :class:`ConicProblem` to scaled KKT tolerance ``tol``.

    Returns a :class:`ConicSolution`. On ``PrimalInfeasible`` the returned
    ``y`` satisfies ``b^T y = 1`` with ``s = -A^T y`` (approximately) in the
    dual cone; on ``DualInfeasible`` ``x`` is a cone ray with ``Ax ~ 0`` and
    ``c^T x = -1``. ``MaxIter`` returns the best iterate seen.
    """
    if tol <= 0 or max_iter < 1:
        raise ValidationError("tol must be positive and max_iter >= 1")
    A, b, c = p.A, p.b, p.c
    m, n = A.shape
    cone = _Cone(p.cones)

    if m and np.linalg.matrix_rank(A) < m:
        z = np.zeros(n)
        return ConicSolution(z, np.zeros(m), z.copy(), Status.DEGENERATE,
                             np.inf, np.inf, np.inf)

    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(c)

    # least-norm x and least-squares s, shifted onto the cone interior
    if m:
        AAt = A @ A.T
        x = A.T @ np.linalg.solve(AAt, b)
        y = np.linalg.solve(AAt, A @ c)
    else:
        x = np.zeros(n)
        y = np.zeros(0)
    s = c - A.T @ y
    for v in (x, s):
        shift = -cone.min_eig(v)
        if shift >= 0:
            v += (1.0 + shift) * cone.e
    tau = kappa = 1.0
    nu1 = cone.degree + 1
    W, _, lam = cone.nt_scaling(x, s, inverse=False)

    best = None
    history = []
    status = Status.MAX_ITER
    it = 0
    for it in range(max_iter + 1):
        rp = A @ x - b * tau
        rd = A.T @ y + s - c * tau
        rg = c @ x - b @ y + kappa
        mu = (lam @ lam + tau * kappa) / nu1

        pres = np.linalg.norm(rp) / tau / bnorm
        dres = np.linalg.norm(rd) / tau / cnorm
        gap = abs(x @ s) / (tau * tau) / (1.0 + abs(c @ x) / tau)
        history.append({"iter": it, "pres": float(pres), "dres": float(dres),
                        "gap": float(gap), "mu": float(mu),
                        "pobj": float(c @ x / tau), "dobj": float(b @ y / tau),
                        "xnorm": _norm(x) / tau, "ynorm": _norm(y) / tau})
        merit = max(pres, dres, gap)
        if best is None or merit < best[0]:
            best = (merit, x / tau, y / tau, s / tau, pres, dres, gap)
        if pres <= tol and dres <= tol and gap <= tol:
            status = Status.OPTIMAL
            break
        by = b @ y
        if by > 0 and np.linalg.norm(A.T @ y + s) / by <= tol:
            return ConicSolution(x / by, y / by, s / by, Status.PRIMAL_INFEASIBLE,
                                 gap, pres, dres, it, history)
        cx = c @ x
        if cx < 0 and np.linalg.norm(A @ x) / -cx <= tol:
            return ConicSolution(x / -cx, y / -cx, s / -cx, Status.DUAL_INFEASIBLE,
                                 gap, pres, dres, it, history)
        if it == max_iter:
            break

        try:
            newton = _Newton(A, b, c, W, tau, kappa)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
            break
        r2s = W.T @ rd

        def direction(sigma, dcomp, dk):
            f = 1.0 - sigma
            return newton.solve(-f * rp, -f * r2s, -f * rg, cone.div(lam, dcomp), dk)

        def step_to_boundary(dxs, dss, dtau, dkap):
            a = min(cone.max_step(lam, dxs), cone.max_step(lam, dss))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        lamlam = cone.prod(lam, lam)
        dxa, _, dsa, dta, dka = direction(0.0, -lamlam, -tau * kappa)
        alpha_aff = min(1.0, step_to_boundary(dxa, dsa, dta, dka))
        sigma = (1.0 - alpha_aff) ** 3

        dcomp = -lamlam + sigma * mu * cone.e - cone.prod(dxa, dsa)
        dk = -tau * kappa + sigma * mu - dta * dka
        dxs, dy, dss, dt, dkap = direction(sigma, dcomp, dk)
        alpha = min(1.0, STEP_FRACTION * step_to_boundary(dxs, dss, dt, dkap))

        x = x + alpha * (W @ dxs)
        s = s + alpha * (-(1.0 - sigma) * rd - A.T @ dy + c * dt)
        y = y + alpha * dy
        tau = tau + alpha * dt
        kappa = kappa + alpha * dkap
        Wt, _, lam = cone.nt_scaling(lam + alpha * dxs, lam + alpha * dss, inverse=False)
        W = W @ Wt

    if status is Status.OPTIMAL:
        return ConicSolution(x / tau, y / tau, s / tau, status, gap, pres, dres, it, history)
    _, xb, yb, sb, pb, db, gb = best
    return ConicSolution(xb, yb, sb, Status.MAX_ITER, gb, pb, db, it, history)

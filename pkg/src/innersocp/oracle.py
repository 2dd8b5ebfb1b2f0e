"""Brute-force checks that do not share machinery with the SOCP route.

The power form ``min w^H B w  s.t.  ||Q w|| - eta ||w|| >= 1`` is homogeneous,
so its optimal value equals the minimum over directions u of the ratio

    f(u) = u^H B u / (||Q u|| - eta ||u||)^2,      B = Rhat + gamma I,

which is minimized here by multi-start projected gradient descent on the
unit sphere with finite-difference gradients.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleProblemError, ValidationError
from .linalg import as_hermitian, as_vector
from .scenario import complex_normal

FD_STEP = 1e-6
REL_DECREASE_TOL = 1e-10
CLUSTER_RTOL = 1e-6
ARMIJO = 1e-4
STALL_PATIENCE = 3


@dataclass
class OracleReport:
    best_value: float
    best_w: np.ndarray
    n_starts: int
    n_converged: int
    value_histogram: list = field(default_factory=list)  # [{"value", "count"}], ascending
    iterations: int = 0

    def to_dict(self):
        return {
            "best_value": self.best_value,
            "best_w": {"re": self.best_w.real.tolist(), "im": self.best_w.imag.tolist()},
            "n_starts": self.n_starts,
            "n_converged": self.n_converged,
            "value_histogram": self.value_histogram,
        }


class _Ratio:
    """Vectorized ratio objective on real-embedded directions (rows of X)."""

    def __init__(self, Rhat, gamma, Q, eta):
        R = as_hermitian(Rhat, "Rhat")
        self.n = R.shape[0]
        self.Bt = (R + gamma * np.eye(self.n)).T
        self.Qt = np.asarray(Q, dtype=complex).T
        if self.Qt.shape[0] != self.n:
            raise ValidationError("Q and Rhat dimensions differ")
        self.eta = float(eta)

    def complex(self, X):
        return X[..., :self.n] + 1j * X[..., self.n:]

    def margin(self, W):
        return np.linalg.norm(W @ self.Qt, axis=-1) - self.eta * np.linalg.norm(W, axis=-1)

    def __call__(self, X):
        W = self.complex(X)
        quad = np.einsum("...i,...i->...", W.conj(), W @ self.Bt).real
        m = self.margin(W)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = quad / m ** 2
        return np.where(m > 0, f, np.inf)

    def gradient(self, X, h=FD_STEP):
        """Central differences, one coordinate at a time, for every row of X."""
        S, d = X.shape
        E = h * np.eye(d)
        fp = self(X[:, None, :] + E[None])
        fm = self(X[:, None, :] - E[None])
        return (fp - fm) / (2.0 * h)


def ratio_objective(u, Rhat, gamma, Q, eta):
    """``u^H (Rhat + gamma I) u / (||Q u|| - eta ||u||)^2``; ``inf`` if the
    denominator base is not positive."""
    u = as_vector(u, "u")
    r = _Ratio(Rhat, gamma, Q, eta)
    return float(r(np.concatenate([u.real, u.imag])[None])[0])


def _restore_feasibility(ratio, W, QhQ, max_steps=200):
    """Power-iterate infeasible rows toward the principal subspace of Q^H Q
    until ``||Q u|| > eta ||u||``; feasible rows are left untouched."""
    W = W.copy()
    for _ in range(max_steps):
        bad = ratio.margin(W) <= 0
        if not bad.any():
            break
        V = W[bad] @ QhQ.T
        W[bad] = V / np.linalg.norm(V, axis=1, keepdims=True)
    return W


def _cluster(values, rtol=CLUSTER_RTOL):
    hist = []
    for v in np.sort(values):
        if hist and abs(v - hist[-1]["value"]) <= rtol * abs(hist[-1]["value"]):
            hist[-1]["count"] += 1
        else:
            hist.append({"value": float(v), "count": 1})
    return hist


def multistart_minimize(Rhat, gamma, Q, eta, n_starts=200, seed=0, max_iter=3000):
    """Multi-start local minimization of the ratio objective.

    Starts are seeded complex Gaussian directions; those outside the region
    ``||Q u|| > eta ||u||`` are first pulled into it by power iteration with
    ``Q^H Q``. Each start then runs Barzilai-Borwein projected gradient steps
    on the unit sphere with Armijo backtracking, and stops once the relative
    decrease stays below 1e-10 for a few consecutive iterations.
    """
    if n_starts < 1:
        raise ValidationError("n_starts must be >= 1")
    ratio = _Ratio(Rhat, gamma, Q, eta)
    Qm = np.asarray(Q, dtype=complex)
    if np.linalg.norm(Qm, 2) <= eta:
        raise InfeasibleProblemError("sigma_max(Q) does not exceed eta; ratio is +inf everywhere")
    n = ratio.n
    rng = np.random.default_rng(seed)
    W = complex_normal(rng, (n_starts, n))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    W = _restore_feasibility(ratio, W, Qm.conj().T @ Qm)
    X = np.concatenate([W.real, W.imag], axis=1)
    f = ratio(X)
    alive = np.isfinite(f)
    if not alive.any():
        raise InfeasibleProblemError("no start reached the feasible region")

    step = np.full(n_starts, 1e-2)
    stall = np.zeros(n_starts, dtype=int)
    done = ~alive
    converged = np.zeros(n_starts, dtype=bool)
    G = np.zeros_like(X)
    G[alive] = ratio.gradient(X[alive])
    it = 0
    for it in range(1, max_iter + 1):
        act = np.flatnonzero(~done)
        if act.size == 0:
            break
        x, g, fx, a = X[act], G[act], f[act], step[act].copy()
        g = g - np.sum(g * x, axis=1, keepdims=True) * x  # tangent component
        gg = np.sum(g * g, axis=1)
        x_new = np.empty_like(x)
        f_new = np.full(act.size, np.inf)
        todo = np.ones(act.size, dtype=bool)
        for _ in range(60):
            if not todo.any():
                break
            cand = x[todo] - a[todo, None] * g[todo]
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            fc = ratio(cand)
            ok = fc <= fx[todo] - ARMIJO * a[todo] * gg[todo]
            idx = np.flatnonzero(todo)
            x_new[idx[ok]] = cand[ok]
            f_new[idx[ok]] = fc[ok]
            todo[idx[ok]] = False
            a[todo] *= 0.5
        # no acceptable step: the descent direction is lost in round-off
        x_new[todo] = x[todo]
        f_new[todo] = fx[todo]

        g_new = ratio.gradient(x_new)
        s = x_new - x
        y = g_new - g
        sy = np.abs(np.sum(s * y, axis=1))
        ss = np.sum(s * s, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(sy > 0, ss / sy, a * 2.0)
        step[act] = np.clip(bb, 1e-12, 1e6)

        rel = (fx - f_new) / np.abs(fx)
        small = (rel <= REL_DECREASE_TOL) | todo
        stall[act] = np.where(small, stall[act] + 1, 0)
        X[act], f[act], G[act] = x_new, f_new, g_new
        fin = stall[act] >= STALL_PATIENCE
        converged[act[fin]] = True
        done[act[fin]] = True

    pool = converged if converged.any() else alive
    idx = np.flatnonzero(pool)
    best = idx[np.argmin(f[idx])]
    u = ratio.complex(X[best])
    # scale so that the power-form constraint is active
    u = u / ratio.margin(u[None])[0]
    return OracleReport(float(f[best]), u, n_starts, int(converged.sum()),
                        _cluster(f[idx]), it)


def sampled_worst_case(w, Q, eta, n_samples=10_000, seed=0, chunk=2000):
    """Smallest ``||(Q + D) w||^2`` over sampled ``||D||_F <= eta``.

    D has a uniformly random direction on the Frobenius sphere and a radius
    uniform in [0, eta]. The analytic minimizer
    ``-rho Q w w^H / (||Q w|| ||w||)`` with ``rho = min(eta, ||Q w|| / ||w||)``
    is always included as one candidate.
    """
    w = as_vector(w, "w")
    Q = np.asarray(Q, dtype=complex)
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    qw = Q @ w
    best = float(np.vdot(qw, qw).real)
    nq, nw = np.linalg.norm(qw), np.linalg.norm(w)
    if eta > 0 and nq > 0 and nw > 0:
        rho = min(eta, nq / nw)
        D = -rho * np.outer(qw, w.conj()) / (nq * nw)
        best = min(best, float(np.linalg.norm(qw + D @ w) ** 2))
    rng = np.random.default_rng(seed)
    M, N = Q.shape
    left = n_samples
    while left > 0:
        k = min(chunk, left)
        left -= k
        D = complex_normal(rng, (k, M, N))
        D *= (eta * rng.uniform(size=k) / np.linalg.norm(D, axis=(1, 2)))[:, None, None]
        vals = np.linalg.norm(qw[None] + D @ w, axis=1) ** 2
        best = min(best, float(vals.min()))
    return best

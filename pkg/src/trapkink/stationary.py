"""Newton-Raphson solutions of the stationary equation ``u_xx = dV/du``.

Every stationary state built here has a definite parity (ground state and
kink-antikink are even, the kink is odd), so Newton iterates on the
``x >= 0`` half of the grid with the other half fixed by reflection.  This
keeps the profiles exactly symmetric and removes the (near-)zero
translation mode of the untrapped kink from the Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .grid import Grid, StencilOperator, apply_d2, quadrature
from .model import SimParams, potential_d2u, potential_du, tf_profile


class NewtonConvergenceError(RuntimeError):
    def __init__(self, message, residual_norm):
        super().__init__(f"{message} (last residual {residual_norm:.3e})")
        self.residual_norm = residual_norm


class BracketError(RuntimeError):
    pass


@dataclass
class StationaryProfile:
    grid: Grid
    u: np.ndarray
    residual_norm: float
    kind: str
    omega: float
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes


def stationary_residual(u, grid: Grid, op: StencilOperator, omega: float) -> np.ndarray:
    return apply_d2(op, u) - potential_du(u, grid.nodes, omega)


def _parity_extension(m: int, parity: str | None) -> sp.csr_matrix:
    """Sparse map from half-grid unknowns to the full field."""
    n = 2 * m + 1
    if parity is None:
        return sp.identity(n, format="csr")
    if parity == "even":
        j = np.arange(m + 1)
        rows = np.concatenate([m + j, m - j[1:]])
        cols = np.concatenate([j, j[1:]])
        vals = np.ones(rows.size)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, m + 1))
    if parity == "odd":
        j = np.arange(1, m + 1)
        rows = np.concatenate([m + j, m - j])
        cols = np.concatenate([j - 1, j - 1])
        vals = np.concatenate([np.ones(m), -np.ones(m)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))
    raise ValueError(f"unknown parity {parity!r}")


def _half_rows(m: int, parity: str | None) -> slice:
    if parity is None:
        return slice(0, 2 * m + 1)
    return slice(m, None) if parity == "even" else slice(m + 1, None)


def symmetrize(u: np.ndarray, parity: str | None) -> np.ndarray:
    if parity is None:
        return u.copy()
    s = 1.0 if parity == "even" else -1.0
    out = 0.5 * (u + s * u[::-1])
    if parity == "odd":
        out[len(u) // 2] = 0.0
    return out


def newton_solve(seed, grid: Grid, omega: float, tol: float = 1e-10,
                 max_iter: int = 50, parity: str | None = None,
                 op: StencilOperator | None = None):
    """Solve ``D2 u - dV/du = 0`` from ``seed``.

    Returns ``(u, residual_norm, iterations)``.  Steps are halved while they
    increase the residual.
    """
    op = op or StencilOperator(grid)
    x = grid.nodes
    P = _parity_extension(grid.m, parity)
    rows = _half_rows(grid.m, parity)
    u = symmetrize(np.asarray(seed, dtype=float), parity)
    r = stationary_residual(u, grid, op, omega)
    rnorm = float(np.max(np.abs(r)))
    it = 0
    while rnorm > tol:
        if it >= max_iter:
            raise NewtonConvergenceError(f"Newton did not converge in {max_iter} iterations", rnorm)
        jac = op.matrix - sp.diags(potential_d2u(u, x, omega))
        jred = (jac[rows] @ P).tocsc()
        step = P @ spsolve(jred, r[rows])
        lam = 1.0
        for _ in range(12):
            trial = u - lam * step
            r_new = stationary_residual(trial, grid, op, omega)
            n_new = float(np.max(np.abs(r_new)))
            if np.isfinite(n_new) and n_new < rnorm:
                break
            lam *= 0.5
        else:
            raise NewtonConvergenceError("Newton line search failed", rnorm)
        u, r, rnorm = trial, r_new, n_new
        it += 1
    return u, rnorm, it


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=16)
def solve_ground_state(params: SimParams) -> StationaryProfile:
    """Ground state ``u_Omega`` from the Thomas-Fermi seed (cached per params)."""
    if params.omega <= 0:
        raise ValueError("the ground state solve needs omega > 0")
    grid = Grid.from_params(params)
    seed = np.clip(tf_profile(grid.nodes, params.omega), 0.0, None)
    u, res, it = newton_solve(seed, grid, params.omega, params.newton_tol,
                              params.newton_max_iter, parity="even")
    return StationaryProfile(grid, _readonly(u), res, "ground", params.omega, it)


def background(params: SimParams) -> np.ndarray:
    """``u_Omega`` on the grid; identically one when the trap is off."""
    if params.omega == 0:
        return np.ones(params.n)
    return solve_ground_state(params).u


def solve_kink(params: SimParams, sign: int = 1) -> StationaryProfile:
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    grid = Grid.from_params(params)
    seed = sign * background(params) * np.tanh(grid.nodes)
    u, res, it = newton_solve(seed, grid, params.omega, params.newton_tol,
                              params.newton_max_iter, parity="odd")
    kind = "kink" if sign > 0 else "antikink"
    return StationaryProfile(grid, u, res, kind, params.omega, it)


def kak_profile(params: SimParams, x0: float) -> np.ndarray:
    """Kink at ``-x0``, antikink at ``+x0`` on the trapped background."""
    if x0 <= 0:
        raise ValueError("half-separation must be positive")
    x = Grid.from_params(params).nodes
    return background(params) * (np.tanh(x + x0) - np.tanh(x - x0) - 1.0)


def projected_residual(params: SimParams, x0: float) -> float:
    """Stationary residual of the pair ansatz projected on its separation mode."""
    grid = Grid.from_params(params)
    x = grid.nodes
    ub = background(params)
    u = ub * (np.tanh(x + x0) - np.tanh(x - x0) - 1.0)
    du_dx0 = ub * (np.cosh(x + x0) ** -2 + np.cosh(x - x0) ** -2)
    r = stationary_residual(u, grid, StencilOperator(grid), params.omega)
    return quadrature(r * du_dx0, grid)


@dataclass
class KAKEquilibrium:
    """Stationary kink-antikink state.

    ``x_cr`` is the antikink zero of the refined state; ``seed_x0`` is the
    ansatz half-separation whose projected residual vanishes (the Newton
    seed) and ``ansatz_residual_norm`` that seed's residual.
    """

    x_cr: float
    profile: StationaryProfile
    seed_x0: float
    ansatz_residual_norm: float


def positive_zero(u: np.ndarray, x: np.ndarray) -> float:
    """First sign change of ``u`` for ``x >= 0``, linearly interpolated."""
    idx = np.nonzero((x[:-1] >= 0) & (np.sign(u[:-1]) != np.sign(u[1:])))[0]
    if idx.size == 0:
        return float("nan")
    i = idx[0]
    return float(x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i]))


def find_equilibrium_separation(params: SimParams, xtol: float = 1e-4) -> float:
    return stationary_kak(params, xtol).x_cr


@lru_cache(maxsize=16)
def stationary_kak(params: SimParams, xtol: float = 1e-4) -> KAKEquilibrium:
    """Newton-refined stationary kink-antikink pair and its separation ``x_cr``.

    The seed half-separation is the root of :func:`projected_residual` on
    ``(0.5, x_s)``.
    """
    if params.omega <= 0:
        raise ValueError("a stationary kink-antikink pair needs omega > 0")
    lo, hi = 0.5, params.x_s
    g_lo, g_hi = projected_residual(params, lo), projected_residual(params, hi)
    if np.sign(g_lo) == np.sign(g_hi):
        raise BracketError(f"projected residual has no sign change on ({lo}, {hi})")
    x_seed = brentq(lambda s: projected_residual(params, s), lo, hi, xtol=xtol)
    grid = Grid.from_params(params)
    seed = kak_profile(params, x_seed)
    r0 = stationary_residual(seed, grid, StencilOperator(grid), params.omega)
    u, res, it = newton_solve(seed, grid, params.omega, params.newton_tol,
                              params.newton_max_iter, parity="even")
    zeros = np.count_nonzero(np.signbit(u[:-1]) != np.signbit(u[1:]))
    if zeros != 2:
        raise NewtonConvergenceError(f"refined pair has {zeros} zeros instead of 2", res)
    x_cr = positive_zero(u, grid.nodes)
    prof = StationaryProfile(grid, _readonly(u), res, "kink_antikink", params.omega, it,
                             meta={"x_cr": x_cr, "seed_x0": x_seed})
    return KAKEquilibrium(x_cr, prof, x_seed, float(np.max(np.abs(r0))))

"""Collective-coordinate reductions of the trapped field.

Single kink: ``u = u_Omega(x) tanh(x - X)`` gives ``L = a0(X) X'^2 - a1(X)``.

Kink-antikink: ``u = u_Omega (tanh(x+X) - tanh(x-X) - 1) + A (chi(x+X) - chi(x-X))``
gives

    L = I X'^2 - U + 2 F A + K A^2 + Q A'^2 + 2 C A' X'.

Coefficients are tabulated against ``X`` by quadrature over the field grid.
Between samples they are cubic Hermite interpolants built from the sampled
values and their centered-difference slopes, so the ODE right-hand sides
are the exact Euler-Lagrange equations of the interpolated Lagrangian and
the reduced energy is conserved up to the integrator tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from .dynamics import ClassifierConfig, Outcome, PairClassifier, turning_points
from .grid import D1_EDGE0, D1_EDGE1, first_derivative, quadrature
from .model import potential_d2u, potential_du, potential_v
from .spectra import extract_chi1, kink_spectrum
from .stationary import StationaryProfile, solve_ground_state

SINGLE_NAMES = ("a0", "a1")
PAIR_NAMES = ("I", "U", "F", "K", "Q", "C")


class TableRangeError(ValueError):
    pass


class SingularMassMatrix(RuntimeError):
    """The pair mass matrix ``[[C, Q], [2I, 2C]]`` lost rank."""

    def __init__(self, t, state, det):
        super().__init__(f"singular mass matrix at t = {t:.6g}, X = {state[0]:.6g} (det {det:.3e})")
        self.t = t
        self.state = np.array(state, dtype=float)
        self.det = det


def centered_derivative(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order derivative along axis 0, one-sided in the two edge rows.

    Interior differences are grouped as ``8 (f[+1] - f[-1]) - (f[+2] - f[-2])``
    so mirror-symmetric samples give a bitwise odd result.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[0] < 5:
        raise ValueError("need at least 5 samples")
    d = np.empty_like(f)
    d[2:-2] = 8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])
    d[0] = np.tensordot(D1_EDGE0 * 12.0, f[:5], axes=1)
    d[1] = np.tensordot(D1_EDGE1 * 12.0, f[:5], axes=1)
    d[-1] = -np.tensordot(D1_EDGE0 * 12.0, f[-1:-6:-1], axes=1)
    d[-2] = -np.tensordot(D1_EDGE1 * 12.0, f[-1:-6:-1], axes=1)
    return d / (12.0 * h)


@dataclass
class CCTables:
    """Sampled coefficients ``values[name]`` and slopes ``derivs[name]`` on ``X``."""

    X: np.ndarray
    values: dict
    derivs: dict
    omega: float
    model: str
    order: int = 3
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = SINGLE_NAMES if self.model == "single" else PAIR_NAMES
        y = np.column_stack([self.values[k] for k in self.names])
        dy = np.column_stack([self.derivs[k] for k in self.names])
        self._spline = CubicHermiteSpline(self.X, y, dy)
        self._dspline = self._spline.derivative()

    @property
    def step(self) -> float:
        return float(self.X[1] - self.X[0])

    @property
    def X_lo(self) -> float:
        return float(self.X[0])

    @property
    def X_hi(self) -> float:
        return float(self.X[-1])

    def contains(self, X) -> bool:
        return bool(self.X_lo <= X <= self.X_hi)

    def evaluate(self, X):
        """All coefficients and their slopes at ``X`` (arrays in ``names`` order)."""
        return self._spline(X), self._dspline(X)

    def value(self, name: str, X):
        return self._spline(X)[..., self.names.index(name)]

    def derivative(self, name: str, X):
        return self._dspline(X)[..., self.names.index(name)]

    def columns(self) -> tuple[list, np.ndarray]:
        header = ["X"] + list(self.names) + [k + "_prime" for k in self.names]
        data = np.column_stack([self.X] + [self.values[k] for k in self.names]
                               + [self.derivs[k] for k in self.names])
        return header, data


# --- single kink -------------------------------------------------------------

def _table_grid(X_max: float, X_step: float, X_min: float | None = None) -> np.ndarray:
    k_hi = int(round(X_max / X_step))
    k_lo = -k_hi if X_min is None else int(round(X_min / X_step))
    return np.arange(k_lo, k_hi + 1) * X_step


def _check_range(ground: StationaryProfile, X_lo: float, X_hi: float, margin: float = 5.0):
    lim = ground.grid.x_max - margin
    if X_hi > lim or X_lo < -lim:
        raise TableRangeError(
            f"X range [{X_lo:.4g}, {X_hi:.4g}] needs |X| <= {lim:.4g} on this grid")


def single_coefficients(ground: StationaryProfile, X: float) -> tuple[float, float]:
    """``(a0(X), a1(X))`` by quadrature over the field grid."""
    grid = ground.grid
    x = grid.nodes
    u = ground.u
    du = first_derivative(u, grid)
    t = np.tanh(x - X)
    s2 = np.cosh(x - X) ** -2
    i1 = du * du * t * t
    i2 = 2.0 * du * u * t * s2
    i3 = u * u * s2 * s2
    i4 = (u * u * t * t - 1.0) ** 2 - 1.0
    i5 = 0.5 * ground.omega**2 * x * x * u * u * t * t
    a0 = 0.5 * quadrature(i3, grid)
    a1 = 0.5 * quadrature(i1 + i2 + i3 + i4 + i5, grid)
    return a0, a1


def build_single_tables(ground: StationaryProfile, X_max: float | None = None,
                        X_step: float = 0.05) -> CCTables:
    """Tabulate ``a0``, ``a1`` on ``[-X_max, X_max]`` (default ``0.9 x_s``).

    Samples are computed for ``X >= 0`` and mirrored, since both
    coefficients are even for an even background.
    """
    if X_max is None:
        X_max = 0.9 * 2.0 / ground.omega if ground.omega > 0 else 0.9 * ground.grid.x_max - 5.0
    _check_range(ground, -X_max, X_max)
    Xg = _table_grid(X_max, X_step)
    m = (Xg.size - 1) // 2
    half = np.array([single_coefficients(ground, X) for X in Xg[m:]])
    full = np.concatenate([half[:0:-1], half])
    d = centered_derivative(full, X_step)
    values = {"a0": full[:, 0], "a1": full[:, 1]}
    derivs = {"a0": d[:, 0], "a1": d[:, 1]}
    return CCTables(Xg, values, derivs, ground.omega, "single", meta={"X_step": X_step})


def saddle_growth_rate(tables: CCTables) -> float:
    """``sqrt(-a1''(0) / (2 a0(0)))`` from a five-point second difference."""
    if tables.model != "single":
        raise ValueError("needs single-kink tables")
    k = int(np.argmin(np.abs(tables.X)))
    if abs(tables.X[k]) > 1e-12 or k < 2 or k > tables.X.size - 3:
        raise ValueError("table does not straddle X = 0")
    a = tables.values["a1"][k - 2:k + 3]
    h = tables.step
    d2 = (-(a[0] + a[4]) + 16.0 * (a[1] + a[3]) - 30.0 * a[2]) / (12.0 * h * h)
    return math.sqrt(max(-d2, 0.0) / (2.0 * tables.values["a0"][k]))


# --- kink-antikink pair ------------------------------------------------------

def shifted_mode(chi: np.ndarray, chi_x: np.ndarray):
    """Spline of ``chi`` and its derivative, zero outside the sampled interval."""
    cs = CubicSpline(chi_x, chi)
    lo, hi = chi_x[0], chi_x[-1]

    def val(z, nu=0):
        out = cs(z, nu)
        out[(z < lo) | (z > hi)] = 0.0
        return out

    return val


def pair_coefficients(ground: StationaryProfile, mode, X: float) -> np.ndarray:
    """``(I, U, F, K, Q, C)`` at ``X``; ``mode(z, nu)`` evaluates ``chi`` or ``chi'``."""
    grid = ground.grid
    x = grid.nodes
    u = ground.u
    du = first_derivative(u, grid)
    om = ground.omega
    ip, im = x + X, x - X
    phi_p, phi_m = np.tanh(ip), -np.tanh(im)
    dphi_p, dphi_m = np.cosh(ip) ** -2, -np.cosh(im) ** -2
    chi_s = mode(ip) - mode(im)             # chi_+ + chi_-
    dchi_s = mode(ip, 1) - mode(im, 1)      # chi_+' + chi_-'
    ua = u * (phi_p + phi_m - 1.0)
    g = u * (dphi_p + dphi_m) + du * (phi_p + phi_m - 1.0)
    mov = u * (dphi_p - dphi_m)
    I = 0.5 * quadrature(mov * mov, grid)
    Q = 0.5 * quadrature(chi_s * chi_s, grid)
    C = 0.5 * quadrature(mov * chi_s, grid)
    U = quadrature(0.5 * g * g + potential_v(ua, x, om), grid)
    F = -0.5 * quadrature(g * dchi_s + potential_du(ua, x, om) * chi_s, grid)
    K = -0.5 * quadrature(dchi_s * dchi_s + potential_d2u(ua, x, om) * chi_s * chi_s, grid)
    return np.array([I, U, F, K, Q, C])


def build_pair_tables(ground: StationaryProfile, chi1: np.ndarray, chi_x: np.ndarray | None = None,
                      X_max: float | None = None, X_step: float = 0.05,
                      X_min: float | None = None) -> CCTables:
    """Tabulate ``I, U, F, K, Q, C`` on ``[X_min, X_max]``.

    ``X_max`` defaults to ``0.9 x_s`` and ``X_min`` to ``-X_max``.  Negative
    ``X`` is sampled directly: only ``I`` and ``Q`` are even (``C`` is odd),
    so a mirrored half table would be wrong for the rest.  ``chi_x`` holds the
    nodes ``chi1`` is sampled on (default: the ground-state grid).
    """
    if chi_x is None:
        chi_x = ground.grid.nodes
    if len(chi_x) != len(chi1):
        raise ValueError("chi1 and chi_x lengths differ")
    if X_max is None:
        X_max = 0.9 * 2.0 / ground.omega
    if X_min is None:
        X_min = -X_max
    _check_range(ground, X_min, X_max)
    Xg = _table_grid(X_max, X_step, X_min)
    mode = shifted_mode(np.asarray(chi1, float), np.asarray(chi_x, float))
    vals = np.array([pair_coefficients(ground, mode, X) for X in Xg])
    d = centered_derivative(vals, X_step)
    values = {k: vals[:, i] for i, k in enumerate(PAIR_NAMES)}
    derivs = {k: d[:, i] for i, k in enumerate(PAIR_NAMES)}
    return CCTables(Xg, values, derivs, ground.omega, "pair", meta={"X_step": X_step})


def pair_barrier(tables: CCTables, X_lo: float = 0.5) -> float:
    """Position of the maximum of ``U`` on ``X > X_lo`` (slope zero, interpolated)."""
    X = tables.X
    dU = tables.derivs["U"]
    idx = np.nonzero((X[:-1] >= X_lo) & (dU[:-1] > 0) & (dU[1:] <= 0))[0]
    if idx.size == 0:
        raise ValueError("U has no interior maximum")
    i = idx[0]
    return float(brentq(lambda s: tables.derivative("U", s), X[i], X[i + 1]))


# --- integration -------------------------------------------------------------

@dataclass
class CCTrajectory:
    """Sampled CC solution.  ``state`` columns: ``(X, X')`` or ``(X, X', A, A')``."""

    t: np.ndarray
    state: np.ndarray
    energy: np.ndarray
    model: str
    exit: str  # "t_max", "left_range", "singular"
    solution: OdeSolution | None = None
    outcome: Outcome | None = None
    error: Exception | None = None
    meta: dict = field(default_factory=dict)

    @property
    def X(self) -> np.ndarray:
        return self.state[:, 0]

    @property
    def Xdot(self) -> np.ndarray:
        return self.state[:, 1]

    @property
    def A(self) -> np.ndarray:
        return self.state[:, 2]

    @property
    def Adot(self) -> np.ndarray:
        return self.state[:, 3]

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def energy_drift(self) -> float:
        """``max |E - E(0)| / |E(0)|``."""
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / (abs(e0) if e0 != 0 else 1.0))

    @property
    def turning_points(self) -> list:
        return turning_points(self.t, self.X)

    def at(self, times) -> np.ndarray:
        """State at arbitrary ``times`` inside ``[0, t_final]`` from the dense output."""
        times = np.asarray(times, dtype=float)
        if self.solution is None:
            return np.column_stack([np.interp(times, self.t, c) for c in self.state.T])
        return np.atleast_2d(self.solution(times)).T


def _single_rhs(tables: CCTables):
    spl, dspl = tables._spline, tables._dspline

    def rhs(t, y):
        X, Y = y
        a0, a1 = spl(X)
        d0, d1 = dspl(X)
        return np.array([Y, -0.5 * (d0 * Y * Y + d1) / a0])

    return rhs


def single_energy(tables: CCTables, X, Y):
    v = tables._spline(np.asarray(X))
    return v[..., 0] * np.asarray(Y) ** 2 + v[..., 1]


def _pair_rhs(tables: CCTables, det_tol: float):
    spl, dspl = tables._spline, tables._dspline

    def rhs(t, y):
        X, Xd, A, Ad = y
        I, U, F, K, Q, C = spl(X)
        dI, dU, dF, dK, dQ, dC = dspl(X)
        det = 2.0 * C * C - 2.0 * I * Q
        if abs(det) < det_tol * (abs(I * Q) + C * C):
            raise SingularMassMatrix(t, y, det)
        r1 = -dQ * Xd * Ad - dC * Xd * Xd + F + K * A
        r2 = -dI * Xd * Xd - dU + 2.0 * dF * A + dK * A * A + dQ * Ad * Ad
        # [[C, Q], [2I, 2C]] (Xdd, Add) = (r1, r2)
        xdd = (2.0 * C * r1 - Q * r2) / det
        add = (C * r2 - 2.0 * I * r1) / det
        return np.array([Xd, xdd, Ad, add])

    return rhs


def pair_energy(tables: CCTables, state) -> np.ndarray:
    s = np.atleast_2d(state)
    X, Xd, A, Ad = s.T
    I, U, F, K, Q, C = tables._spline(X).T
    return I * Xd**2 + Q * Ad**2 + 2.0 * C * Ad * Xd + U - 2.0 * F * A - K * A**2


def _integrate(rhs, y0, t_max, X_lo, X_hi, dt_out, rtol, atol):
    """Dormand-Prince stepping with exit detection on the dense output.

    Returns ``(t_samples, y_samples, exit, solution, error)``; a raised
    :class:`SingularMassMatrix` truncates the trajectory at the last
    accepted step.
    """
    try:
        solver = RK45(rhs, 0.0, np.asarray(y0, float), t_max, rtol=rtol, atol=atol)
    except SingularMassMatrix as exc:
        return np.array([0.0]), np.atleast_2d(y0).astype(float), "singular", None, exc
    ts, interps = [0.0], []
    exit_kind, error = "t_max", None
    t_end = t_max
    while solver.status == "running":
        t_old = solver.t
        try:
            msg = solver.step()
        except SingularMassMatrix as exc:
            exit_kind, error, t_end = "singular", exc, t_old
            break
        if solver.status == "failed":
            raise RuntimeError(f"CC integration failed: {msg}")
        dense = solver.dense_output()
        X = solver.y[0]
        if X > X_hi or X < X_lo:
            bound = X_hi if X > X_hi else X_lo
            t_end = brentq(lambda s: dense(s)[0] - bound, t_old, solver.t, xtol=1e-13)
            ts.append(t_end)
            interps.append(dense)
            exit_kind = "left_range"
            break
        ts.append(solver.t)
        interps.append(dense)
        t_end = solver.t
    if not interps:
        sol = None
        return np.array([0.0]), np.atleast_2d(y0).astype(float), exit_kind, sol, error
    sol = OdeSolution(np.array(ts), interps)
    n = int(math.floor(t_end / dt_out + 1e-9))
    grid = np.arange(n + 1) * dt_out
    if grid[-1] < t_end - 1e-12:
        grid = np.append(grid, t_end)
    y = np.atleast_2d(sol(grid)).T
    y[0] = y0
    return grid, y, exit_kind, sol, error


def integrate_cc_single(tables: CCTables, x0: float, v_in: float, t_max: float,
                        dt_out: float = 0.01, rtol: float = 1e-9,
                        atol: float = 1e-11) -> CCTrajectory:
    """Integrate ``X' = Y``, ``Y' = -(a0' Y^2 + a1') / (2 a0)`` from ``(x0, v_in)``.

    ``v_in`` is the signed initial velocity.  The run stops at ``t_max`` or
    when ``|X|`` leaves the table.
    """
    if tables.model != "single":
        raise ValueError("needs single-kink tables")
    if not tables.contains(x0):
        raise TableRangeError(f"x0 = {x0} outside the table range")
    t, y, exit_kind, sol, err = _integrate(_single_rhs(tables), [x0, v_in], t_max,
                                           tables.X_lo, tables.X_hi, dt_out, rtol, atol)
    e = single_energy(tables, y[:, 0], y[:, 1])
    return CCTrajectory(t, y, e, "single", exit_kind, sol, error=err,
                        meta={"x0": x0, "v_in": v_in})


def integrate_cc_pair(tables: CCTables, x0: float, v_in: float, t_max: float,
                      speed_offset: float = 0.0, dt_out: float = 0.01,
                      rtol: float = 1e-9, atol: float = 1e-11, det_tol: float = 1e-10,
                      cfg: ClassifierConfig | None = None, strict: bool = False) -> CCTrajectory:
    """Integrate the coupled ``(X, A)`` system from ``X = x0``, ``X' = -(v_in + speed_offset)``.

    ``v_in`` is the inward speed of each kink, as for the PDE pair runs, and
    ``A = A' = 0`` initially.  A degenerate mass matrix truncates the run
    (``exit == "singular"``, snapshot in ``error``) or raises when ``strict``.
    The bounce count uses the same classifier as the PDE pair runs.
    """
    if tables.model != "pair":
        raise ValueError("needs pair tables")
    if not tables.contains(x0):
        raise TableRangeError(f"x0 = {x0} outside the table range")
    v = v_in + speed_offset
    t, y, exit_kind, sol, err = _integrate(_pair_rhs(tables, det_tol), [x0, -v, 0.0, 0.0],
                                           t_max, tables.X_lo, tables.X_hi, dt_out, rtol, atol)
    if strict and err is not None:
        raise err
    e = pair_energy(tables, y)
    cfg = cfg or ClassifierConfig()
    clf = PairClassifier(2.0 / tables.omega, x0, cfg)
    outcome = None
    for ti, Xi in zip(t, y[:, 0]):
        outcome = clf.update(ti, Xi)
        if outcome is not None:
            break
    if outcome is None:
        outcome = clf.finish()
    return CCTrajectory(t, y, e, "pair", exit_kind, sol, outcome, err,
                        meta={"x0": x0, "v_in": v_in, "speed_offset": speed_offset})


def single_tables_for(params, X_step: float = 0.05) -> CCTables:
    return build_single_tables(solve_ground_state(params), X_step=X_step)


def pair_tables_for(params, X_step: float = 0.05, spectral_dx: float = 0.04,
                    mode_index: int = 0, parity: str | None = "odd") -> CCTables:
    """Pair tables with ``chi_1`` taken from the single-kink spectrum."""
    spec = kink_spectrum(params, spectral_dx)
    chi = extract_chi1(spec, parity=parity, mode_index=mode_index)
    return build_pair_tables(solve_ground_state(params), chi, spec.grid.nodes, X_step=X_step)

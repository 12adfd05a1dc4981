"""Full PDE evolution: boosted initial data, energy, kink tracking, outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, first_derivative, quadrature
from .kernels import WEIGHTS, make_work, rk4_advance
from .model import SimParams, lorentz_gamma
from .stationary import background


class NumericalBlowUp(RuntimeError):
    def __init__(self, t_last):
        super().__init__(f"non-finite field after t = {t_last:.4f}")
        self.t_last = t_last


class EnergyDriftError(RuntimeError):
    pass


@dataclass
class FieldState:
    t: float
    u: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.w.shape:
            raise ValueError("u and w must share the grid length")

    def copy(self) -> "FieldState":
        return FieldState(self.t, self.u.copy(), self.w.copy())


@dataclass(frozen=True)
class Outcome:
    kind: str
    n: int = 0

    KINDS = ("expelled_left", "expelled_right", "reflected_no_collision",
             "transmitted", "n_bounce", "bion", "held_at_saddle", "timeout")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown outcome {self.kind!r}")
        if self.kind == "n_bounce" and self.n < 1:
            raise ValueError("n_bounce needs at least one collision")

    def __str__(self):
        return f"n_bounce({self.n})" if self.kind == "n_bounce" else self.kind

    @property
    def bounces(self) -> int:
        """Collision count used for window tables (0 when not an n-bounce)."""
        return self.n if self.kind == "n_bounce" else 0


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for bounce counting and escape detection.

    ``x_esc=None`` resolves to ``min(0.8 x_s, x0 + 3)`` for pairs and
    ``0.8 x_s`` for single kinks.
    """

    x_col: float = 0.5
    x_esc: float | None = None
    n_max: int = 6
    saddle_radius: float = 0.1
    saddle_fraction: float = 0.8
    sample_every: int = 10
    track_fraction: float = 0.9


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    positions: np.ndarray
    energies: np.ndarray
    turning_points: list
    outcome: Outcome
    n_bounces: int
    pair: bool
    final_state: FieldState | None = None
    dwell_time: float | None = None
    field_times: np.ndarray | None = None
    space_time: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def separation(self) -> np.ndarray:
        """Half-separation (pairs) or kink position (single), NaN if untracked."""
        return _coordinate(self.positions, self.pair)

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energies - self.energies.mean())))

    @property
    def energy_ok(self) -> bool:
        e = self.energies.mean()
        return self.energy_drift <= 1e-4 * max(1.0, abs(e))

    @property
    def t_final(self) -> float:
        return float(self.times[-1])


# --- initial data -------------------------------------------------------------

def boost_kink(params: SimParams, x0: float, v: float) -> FieldState:
    """Lorentz-boosted kink on the trapped background; ``v`` is signed."""
    g = lorentz_gamma(v)
    x = Grid.from_params(params).nodes
    ub = background(params)
    s = g * (x - x0)
    return FieldState(0.0, ub * np.tanh(s), -v * g * ub / np.cosh(s) ** 2)


def boost_kak(params: SimParams, x0: float, v: float) -> FieldState:
    """Kink at ``-x0`` and antikink at ``+x0``, each moving inward at speed ``v``."""
    if x0 <= 0:
        raise ValueError("half-separation must be positive")
    g = lorentz_gamma(v)
    x = Grid.from_params(params).nodes
    ub = background(params)
    a, b = g * (x + x0), g * (x - x0)
    u = ub * (np.tanh(a) - np.tanh(b) - 1.0)
    w = -v * g * ub * (np.cosh(a) ** -2 + np.cosh(b) ** -2)
    return FieldState(0.0, u, w)


# --- diagnostics --------------------------------------------------------------

def discrete_energy(state: FieldState, params: SimParams, grid: Grid | None = None) -> float:
    grid = grid or Grid.from_params(params)
    x = grid.nodes
    u, w = state.u, state.w
    ux = first_derivative(u, grid)
    dens = w * w + ux * ux + (u * u - 1.0) ** 2 + 0.5 * params.omega**2 * x * x * u * u
    return 0.5 * quadrature(dens, grid)


def _crossings(u, x, lo, hi):
    sel = np.nonzero((x[:-1] > lo) & (x[1:] < hi) & (np.signbit(u[:-1]) != np.signbit(u[1:])))[0]
    if sel.size == 0:
        return np.empty(0)
    u0, u1 = u[sel], u[sel + 1]
    x0, x1 = x[sel], x[sel + 1]
    return x0 - u0 * (x1 - x0) / (u1 - u0)


def track_positions(state_or_u, params: SimParams, pair: bool = False,
                    previous: float | None = None, track_fraction: float = 0.9):
    """Zero crossings of ``u`` inside ``|x| < track_fraction * x_s``.

    Single kink: the crossing closest to ``previous`` (or to the origin),
    ``None`` without crossings.  Pair: ``(kink, antikink)`` taken as the
    outermost crossings on each side, ``None`` entries where a side has none.
    """
    u = state_or_u.u if isinstance(state_or_u, FieldState) else np.asarray(state_or_u)
    x = Grid.from_params(params).nodes
    lim = track_fraction * params.x_s
    if not pair:
        z = _crossings(u, x, -lim, lim)
        if z.size == 0:
            return None
        ref = 0.0 if previous is None or not np.isfinite(previous) else previous
        return float(z[np.argmin(np.abs(z - ref))])
    zl = _crossings(u, x, -lim, 0.0)
    zr = _crossings(u, x, 0.0, lim)
    # a crossing exactly at a node pair straddling 0 goes to whichever side it lies on
    zc = _crossings(u, x, -2 * params.dx, 2 * params.dx)
    zl = np.concatenate([zl, zc[zc < 0]])
    zr = np.concatenate([zr, zc[zc >= 0]])
    kink = float(zl.min()) if zl.size else None
    anti = float(zr.max()) if zr.size else None
    return kink, anti


def _coordinate(positions, pair):
    if not pair:
        return positions[:, 0]
    k, a = positions[:, 0], positions[:, 1]
    both = np.isfinite(k) & np.isfinite(a)
    out = np.where(both, 0.5 * (a - k), np.where(np.isfinite(a), a, -k))
    return np.where(np.isfinite(out), out, 0.0)


def turning_points(times, coord, eps: float = 1e-8):
    """Extrema of a sampled coordinate, refined by a parabola through three samples."""
    pts = []
    c = np.asarray(coord)
    ok = np.isfinite(c)
    d = np.diff(c)
    last_sign = 0
    for i, di in enumerate(d):
        if not (ok[i] and ok[i + 1]) or abs(di) < eps:
            continue
        s = 1 if di > 0 else -1
        if last_sign and s != last_sign:
            j = i  # extremum sample
            if 0 < j < len(c) - 1:
                y0, y1, y2 = c[j - 1], c[j], c[j + 1]
                den = y0 - 2 * y1 + y2
                shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
                shift = max(-1.0, min(1.0, shift))
                pts.append(float(y1 - 0.25 * (y0 - y2) * shift))
            else:
                pts.append(float(c[j]))
        last_sign = s
    return pts


# --- outcome classification ---------------------------------------------------

class PairClassifier:
    """Streaming bounce counter on the half-separation ``X(t)``."""

    def __init__(self, x_s: float, x0: float, cfg: ClassifierConfig):
        self.cfg = cfg
        self.x_esc = cfg.x_esc if cfg.x_esc is not None else min(0.8 * x_s, x0 + 3.0)
        self.count = 0
        self.inside = False
        self.hist = []

    def update(self, t, X) -> Outcome | None:
        cfg = self.cfg
        inside = X <= cfg.x_col
        if inside and not self.inside:
            self.count += 1
            if self.count > cfg.n_max:
                return Outcome("bion")
        self.inside = inside
        self.hist.append(X)
        if len(self.hist) >= 3:
            x2, x1, x0 = self.hist[-3:]
            if x0 >= self.x_esc and x0 > x1 > x2:
                if self.count == 0:
                    return Outcome("reflected_no_collision")
                return Outcome("n_bounce", self.count)
        return None

    def finish(self) -> Outcome:
        return Outcome("bion") if self.count > 0 else Outcome("timeout")


class KinkClassifier:
    """Escape-side detection for a single kink."""

    def __init__(self, x_s: float, t_max: float, x0: float, v: float, cfg: ClassifierConfig):
        self.cfg = cfg
        self.t_max = t_max
        self.x_esc = cfg.x_esc if cfg.x_esc is not None else 0.8 * x_s
        self.inward = x0 * v < 0
        self.start_side = np.sign(x0)
        self.hist = []
        self.dwell_time = None
        self.last_seen = x0

    def update(self, t, X) -> Outcome | None:
        if X is None or not np.isfinite(X):
            # left the tracking window: expelled on the side last seen
            if abs(self.last_seen) >= 0.5 * self.x_esc:
                return self._exit(np.sign(self.last_seen))
            return None
        self.last_seen = X
        if self.dwell_time is None and abs(X) >= self.cfg.saddle_radius:
            self.dwell_time = t
        self.hist.append(X)
        if len(self.hist) >= 3:
            a, b, c = self.hist[-3:]
            if abs(c) >= self.x_esc and abs(c) > abs(b) > abs(a):
                return self._exit(np.sign(c))
        return None

    def _exit(self, side) -> Outcome:
        if self.inward:
            return Outcome("reflected_no_collision" if side == self.start_side else "transmitted")
        return Outcome("expelled_left" if side < 0 else "expelled_right")

    def finish(self) -> Outcome:
        dwell = self.dwell_time if self.dwell_time is not None else math.inf
        if dwell >= self.cfg.saddle_fraction * self.t_max:
            return Outcome("held_at_saddle")
        return Outcome("timeout")


def classify_outcome(record: TrajectoryRecord, params: SimParams, x0: float,
                     v: float = 0.0, cfg: ClassifierConfig | None = None) -> Outcome:
    """Replay a recorded trajectory through the streaming classifier."""
    cfg = cfg or ClassifierConfig()
    coord = record.separation
    if record.pair:
        clf = PairClassifier(params.x_s, x0, cfg)
    else:
        clf = KinkClassifier(params.x_s, params.t_max, x0, v, cfg)
    for t, X in zip(record.times, coord):
        out = clf.update(t, None if not record.pair and not np.isfinite(X) else X)
        if out is not None:
            return out
    return clf.finish()


# --- evolution ----------------------------------------------------------------

def evolve(state: FieldState, params: SimParams, sample_every: int | None = None, *,
           pair: bool = False, x0: float | None = None, v: float = 0.0,
           cfg: ClassifierConfig | None = None, stop_when_resolved: bool = True,
           field_stride: int | None = None, check_energy: bool = True) -> TrajectoryRecord:
    """Integrate the PDE with RK4 and classify the run.

    ``x0`` and ``v`` are those used to build ``state`` (for the classifier);
    ``x0`` defaults to the initially tracked position.  ``field_stride``
    keeps every ``field_stride``-th sampled field for space-time output.
    """
    cfg = cfg or ClassifierConfig()
    every = sample_every or cfg.sample_every
    grid = Grid.from_params(params)
    x = grid.nodes
    trap = 0.5 * params.omega**2 * x * x
    inv_dx2 = 1.0 / (params.dx * params.dx)
    u, w = state.u.astype(float).copy(), state.w.astype(float).copy()
    work = make_work(grid.n)
    h = params.dt
    nsteps_total = int(round((params.t_max - state.t) / h))

    pos0 = track_positions(u, params, pair, track_fraction=cfg.track_fraction)
    if x0 is None:
        if pair:
            x0 = abs(pos0[1]) if pos0[1] is not None else 1.0
        else:
            x0 = pos0 if pos0 is not None else 0.0
    if pair:
        clf = PairClassifier(params.x_s, x0, cfg)
    else:
        clf = KinkClassifier(params.x_s, params.t_max, x0, v, cfg)

    times, positions, energies = [], [], []
    fields, field_times = [], []
    prev = x0
    step = 0
    outcome = None
    scratch = FieldState(state.t, u, w)

    def sample(t):
        nonlocal prev, outcome
        p = track_positions(u, params, pair, previous=prev, track_fraction=cfg.track_fraction)
        if pair:
            k, a = p
            positions.append((np.nan if k is None else k, np.nan if a is None else a))
            row = np.array([positions[-1]])
            X = float(_coordinate(row, True)[0])
        else:
            positions.append((np.nan if p is None else p, np.nan))
            X = p
            if p is not None:
                prev = p
        times.append(t)
        scratch.t = t
        energies.append(discrete_energy(scratch, params, grid))
        if field_stride and (len(times) - 1) % field_stride == 0:
            fields.append(u.copy())
            field_times.append(t)
        res = clf.update(t, X)
        if res is not None and outcome is None:
            outcome = res

    sample(state.t)
    while step < nsteps_total:
        k = min(every, nsteps_total - step)
        rk4_advance(u, w, k, h, trap, inv_dx2, WEIGHTS, work)
        step += k
        t = state.t + step * h
        if not (np.isfinite(u).all() and np.isfinite(w).all()):
            raise NumericalBlowUp(times[-1])
        sample(t)
        if outcome is not None and stop_when_resolved:
            break
    if outcome is None:
        outcome = clf.finish()

    rec = TrajectoryRecord(
        times=np.array(times),
        positions=np.array(positions, dtype=float),
        energies=np.array(energies),
        turning_points=[],
        outcome=outcome,
        n_bounces=outcome.bounces if pair else 0,
        pair=pair,
        final_state=FieldState(times[-1], u, w),
        dwell_time=None if pair else clf.dwell_time,
        field_times=np.array(field_times) if fields else None,
        space_time=np.array(fields).T if fields else None,
        meta={"x0": x0, "v": v},
    )
    rec.turning_points = turning_points(rec.times, rec.separation)
    if check_energy and rec.energy_drift > 1e-3:
        raise EnergyDriftError(
            f"energy drift {rec.energy_drift:.3e} exceeds 1e-3 (mean {rec.energies.mean():.6f})")
    return rec


def run_kink(params: SimParams, x0: float, v: float, **kw) -> TrajectoryRecord:
    return evolve(boost_kink(params, x0, v), params, pair=False, x0=x0, v=v, **kw)


def run_kak(params: SimParams, x0: float, v: float, **kw) -> TrajectoryRecord:
    return evolve(boost_kak(params, x0, v), params, pair=True, x0=x0, v=v, **kw)


def turning_point_map(params: SimParams, x0: float, v_grid, cfg: ClassifierConfig | None = None):
    """``(x1, v^2/2)`` for kinks launched from ``x0`` toward the origin.

    Runs that transmit are reported separately.  Returns ``(pairs, excluded)``
    with ``pairs`` sorted by ``x1``.
    """
    pairs, excluded = [], []
    toward = -math.copysign(1.0, x0)
    for speed in v_grid:
        speed = abs(float(speed))
        if speed == 0.0:
            pairs.append((float(x0), 0.0))
            continue
        rec = run_kink(params, x0, toward * speed, cfg=cfg)
        if rec.outcome.kind == "transmitted":
            excluded.append(speed)
            continue
        c = rec.separation
        c = c[np.isfinite(c)]
        x1 = float(np.min(np.abs(c))) if c.size else float("nan")
        tp = [p for p in rec.turning_points if abs(p) <= abs(x0)]
        if tp:
            x1 = min(x1, min(abs(p) for p in tp)) if np.isfinite(x1) else min(abs(p) for p in tp)
        pairs.append((math.copysign(x1, x0), 0.5 * speed * speed))
    pairs.sort(key=lambda p: abs(p[0]))
    return pairs, excluded

"""Velocity sweeps of kink-antikink collisions and bounce-window tables."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import (ClassifierConfig, EnergyDriftError, NumericalBlowUp, Outcome,
                       run_kak, run_kink)
from .model import SimParams
from .stationary import background

KEY_DIGITS = 12


def vkey(v: float) -> float:
    """Canonical velocity key; results are merged by this, never by arrival."""
    return round(float(v), KEY_DIGITS)


@dataclass(frozen=True)
class SweepPoint:
    v: float
    outcome: Outcome | None
    t_resolve: float
    error: str | None = None
    energy_drift: float = float("nan")  # max |E - mean| / max(1, |mean|)

    @property
    def label(self) -> str:
        return "error" if self.outcome is None else str(self.outcome)

    @property
    def n_bounces(self) -> int:
        return 0 if self.outcome is None else self.outcome.bounces


class BracketError(ValueError):
    pass


def classify_velocity(params: SimParams, x0: float, v: float,
                      cfg: ClassifierConfig | None = None) -> SweepPoint:
    """One pair collision at inward speed ``v``; failures become flagged points."""
    try:
        rec = run_kak(params, x0, v, cfg=cfg)
    except (NumericalBlowUp, EnergyDriftError) as exc:
        return SweepPoint(vkey(v), None, float("nan"), f"{type(exc).__name__}: {exc}")
    drift = rec.energy_drift / max(1.0, abs(float(rec.energies.mean())))
    return SweepPoint(vkey(v), rec.outcome, rec.t_final, energy_drift=drift)


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def _run_many(params, x0, velocities, cfg, threads) -> dict:
    keys = sorted({vkey(v) for v in velocities})
    # warm shared caches (ground state) before workers start
    background(params)
    threads = threads or default_threads()
    if threads <= 1 or len(keys) <= 1:
        return {k: classify_velocity(params, x0, k, cfg) for k in keys}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pts = pool.map(lambda k: classify_velocity(params, x0, k, cfg), keys)
        return {p.v: p for p in pts}


def velocity_grid(v_lo: float, v_hi: float, step: float) -> np.ndarray:
    if not v_lo < v_hi < 1.0:
        raise ValueError("need v_lo < v_hi < 1")
    if step <= 0:
        raise ValueError("step must be positive")
    n = int(math.floor((v_hi - v_lo) / step + 1e-9))
    return np.array([vkey(v_lo + k * step) for k in range(n + 1)])


def sweep_velocities(params: SimParams, x0: float, v_lo: float, v_hi: float,
                     coarse_step: float = 2e-4, cfg: ClassifierConfig | None = None,
                     threads: int | None = None) -> list[SweepPoint]:
    """Classify every velocity ``v_lo + k * coarse_step <= v_hi``, sorted by velocity."""
    res = _run_many(params, x0, velocity_grid(v_lo, v_hi, coarse_step), cfg, threads)
    return [res[k] for k in sorted(res)]


# --- window tables ------------------------------------------------------------

@dataclass(frozen=True)
class WindowRow:
    n: int
    v1: float
    v2: float
    open_lower: bool = False
    open_upper: bool = False
    uncertain: bool = False

    @property
    def dv(self) -> float:
        return self.v2 - self.v1

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.v1 + self.v2)


@dataclass
class WindowTable:
    rows: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: r.v1)

    def check(self) -> None:
        """Sorted, disjoint, positive-width rows."""
        for a, b in zip(self.rows, self.rows[1:]):
            if not a.v1 <= b.v1:
                raise AssertionError("rows not sorted")
            if a.v2 > b.v1:
                raise AssertionError(f"rows overlap: {a} {b}")
        for r in self.rows:
            if not r.dv > 0:
                raise AssertionError(f"non-positive width: {r}")

    def bounce_sequence(self, min_width: float = 0.0) -> list[int]:
        return [r.n for r in self.rows if r.dv > min_width]

    def dominant(self, n: int) -> WindowRow:
        rows = [r for r in self.rows if r.n == n and not (r.open_lower or r.open_upper)]
        if not rows:
            raise LookupError(f"no closed {n}-bounce window")
        return max(rows, key=lambda r: r.dv)

    def to_text(self) -> str:
        m = self.meta
        head = (f"omega = {m.get('omega')}  x0 = {m.get('x0')}  "
                f"sweep [{m.get('v_lo')}, {m.get('v_hi')}] step {m.get('coarse_step')}  "
                f"edge tol {m.get('edge_tol')}")
        lines = [head, f"{'n':>3} {'v1':>10} {'v2':>10} {'dv':>10}  flags"]
        for r in self.rows:
            flags = ",".join(f for f, on in (("open_lower", r.open_lower),
                                             ("open_upper", r.open_upper),
                                             ("uncertain", r.uncertain)) if on)
            lines.append(f"{r.n:>3d} {r.v1:10.5f} {r.v2:10.5f} {r.dv:10.5f}  {flags}")
        return "\n".join(lines) + "\n"

    def csv_rows(self):
        return [(r.n, r.v1, r.v2, r.dv, r.open_lower, r.open_upper, r.uncertain) for r in self.rows]

    CSV_COLUMNS = ("n", "v1", "v2", "dv", "open_lower", "open_upper", "uncertain")


def _needs_edge(pa: SweepPoint, pb: SweepPoint) -> bool:
    if pa.label == pb.label:
        return False
    return any(p.outcome is not None and p.outcome.kind == "n_bounce" for p in (pa, pb))


def _refine(points: dict, params, x0, edge_tol, cfg, threads, max_depth):
    """Bisect every window edge in ``points`` to width ``<= edge_tol``.

    Adds runs to ``points`` in place.  A midpoint whose outcome matches
    neither end splits the bracket in two (a sub-window); the split count
    along a chain is capped at ``max_depth``.  Returns the left keys of
    brackets abandoned at the cap.
    """
    uncertain = set()
    depth = {}
    while True:
        keys = sorted(points)
        todo = []
        for a, b in zip(keys, keys[1:]):
            if not _needs_edge(points[a], points[b]) or b - a <= edge_tol * (1 + 1e-9):
                continue
            if depth.get(a, 0) >= max_depth:
                uncertain.add(a)
                continue
            todo.append((a, b))
        if not todo:
            return uncertain
        mids = [vkey(0.5 * (a + b)) for a, b in todo]
        new = _run_many(params, x0, mids, cfg, threads)
        for (a, b), m in zip(todo, mids):
            d = depth.get(a, 0)
            if new[m].label not in (points[a].label, points[b].label):
                d += 1
            depth[a] = depth[m] = d
        points.update(new)


def refine_window_edges(sweep: list[SweepPoint], params: SimParams, x0: float,
                        edge_tol: float = 1e-5, cfg: ClassifierConfig | None = None,
                        threads: int | None = None, max_depth: int = 12) -> WindowTable:
    """Refine the sweep's outcome changes and collect n-bounce windows.

    Each window edge is the midpoint of a bracket no wider than ``edge_tol``.
    Brackets that keep revealing new outcomes are split recursively; after
    ``max_depth`` nested splits the window is flagged ``uncertain``.
    """
    if len(sweep) < 2:
        raise ValueError("sweep needs at least two points")
    points = {p.v: p for p in sweep}
    if len({p.label for p in sweep}) < 2:
        raise ValueError("sweep contains no outcome transition")
    uncertain = _refine(points, params, x0, edge_tol, cfg, threads, max_depth)
    keys = sorted(points)
    rows = []
    i = 0
    while i < len(keys):
        p = points[keys[i]]
        j = i
        while j + 1 < len(keys) and points[keys[j + 1]].label == p.label:
            j += 1
        if p.outcome is not None and p.outcome.kind == "n_bounce":
            lo = 0.5 * (keys[i - 1] + keys[i]) if i > 0 else keys[i]
            hi = 0.5 * (keys[j] + keys[j + 1]) if j + 1 < len(keys) else keys[j]
            unc = (i > 0 and keys[i - 1] in uncertain) or (keys[j] in uncertain)
            rows.append(WindowRow(p.outcome.n, vkey(lo), vkey(hi), open_lower=i == 0,
                                  open_upper=j + 1 == len(keys), uncertain=unc))
        i = j + 1
    meta = {"omega": params.omega, "x0": x0, "v_lo": keys[0], "v_hi": keys[-1],
            "coarse_step": _coarse_step(sweep), "edge_tol": edge_tol,
            "n_runs": len(points)}
    table = WindowTable(rows, meta)
    table.points = [points[k] for k in keys]
    return table


def _coarse_step(sweep) -> float:
    v = sorted(p.v for p in sweep)
    return float(np.min(np.diff(v))) if len(v) > 1 else float("nan")


def scan_windows(params: SimParams, x0: float, v_lo: float, v_hi: float,
                 coarse_step: float = 2e-4, edge_tol: float = 1e-5,
                 cfg: ClassifierConfig | None = None, threads: int | None = None,
                 fine_ranges=(), fine_step: float = 1e-5) -> WindowTable:
    """Coarse sweep, optional fine passes over ``fine_ranges``, then edge refinement."""
    sweep = sweep_velocities(params, x0, v_lo, v_hi, coarse_step, cfg, threads)
    extra = []
    for lo, hi in fine_ranges:
        extra += sweep_velocities(params, x0, lo, hi, fine_step, cfg, threads)
    merged = {p.v: p for p in sweep + extra}
    table = refine_window_edges([merged[k] for k in sorted(merged)], params, x0,
                                edge_tol, cfg, threads)
    table.meta["coarse_step"] = coarse_step
    if fine_ranges:
        table.meta["fine_ranges"] = [list(r) for r in fine_ranges]
    return table


def verify_midpoints(table: WindowTable, params: SimParams, x0: float,
                     cfg: ClassifierConfig | None = None, threads: int | None = None) -> list:
    """Rows whose midpoint does not reproduce ``n`` on an independent run."""
    mids = [r.midpoint for r in table.rows]
    res = _run_many(params, x0, mids, cfg, threads)
    return [r for r in table.rows if res[vkey(r.midpoint)].n_bounces != r.n]


# --- critical velocities ------------------------------------------------------

def _crosses(params, x0, speed, pair, cfg, log=None) -> bool:
    """Transmission (single kink aimed at the origin) or any collision (pair)."""
    if pair:
        # n_max = 0 ends the run at the first collision
        rec = run_kak(params, x0, speed, cfg=replace(cfg, n_max=0))
        crossed = rec.outcome.kind not in ("reflected_no_collision", "timeout")
    else:
        toward = -math.copysign(1.0, x0) if x0 != 0 else 1.0
        rec = run_kink(params, x0, toward * speed, cfg=cfg)
        crossed = rec.outcome.kind == "transmitted"
    if log is not None:
        log.append((speed, rec))
    return crossed


def find_critical_velocity(params: SimParams, x0: float, v_lo: float, v_hi: float,
                           pair: bool = False, tol: float = 1e-4,
                           cfg: ClassifierConfig | None = None, log: list | None = None) -> float:
    """Bisect the speed separating reflection from transmission or collision.

    Speeds are measured toward the origin (single kink) or inward (pair).
    ``log``, if given, collects ``(speed, TrajectoryRecord)`` for every run.
    """
    cfg = cfg or ClassifierConfig()
    lo_c = _crosses(params, x0, v_lo, pair, cfg, log)
    hi_c = _crosses(params, x0, v_hi, pair, cfg, log)
    if lo_c == hi_c:
        raise BracketError(f"same outcome at v = {v_lo} and v = {v_hi}")
    a, b = v_lo, v_hi
    while b - a > tol:
        m = 0.5 * (a + b)
        if _crosses(params, x0, m, pair, cfg, log) == lo_c:
            a = m
        else:
            b = m
    return 0.5 * (a + b)

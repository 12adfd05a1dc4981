"""Acceptance criteria 1-14, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
The long sweeps (criteria 9 and 10) are marked ``slow`` but run by default.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE
from trapkink.collective import (integrate_cc_pair, integrate_cc_single, pair_tables_for,
                                 single_tables_for)
from trapkink.dynamics import run_kak, run_kink
from trapkink.model import SimParams, tf_support_radius
from trapkink.scan import find_critical_velocity, scan_windows
from trapkink.spectra import kink_spectrum, linearization_spectrum, stationary_kak_spectrum
from trapkink.stationary import solve_ground_state, solve_kink, stationary_kak

P = SimParams(omega=0.15)

# published windows at omega = 0.15, x0 = 1.4: (n, v1, v2)
REFERENCE_015 = [
    (3, 0.23729, 0.23827), (3, 0.23973, 0.23996), (3, 0.24023, 0.24035),
    (2, 0.24038, 0.24744), (3, 0.24786, 0.24801), (3, 0.25396, 0.25450),
    (2, 0.25453, 0.25601), (2, 0.25754, 0.25787), (2, 0.25824, 0.25831),
    (2, 0.25840, 0.25841),
]
ONE_BOUNCE_015 = 0.25845
WIDE = 5e-4


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, f"criterion {k}: {detail}"


def params_for(omega):
    # the trap support must fit inside the domain with a margin
    return SimParams(omega=omega, x_max=50.0 if omega < 0.07 else 30.0)


# --- shared runs ----------------------------------------------------------------

@pytest.fixture(scope="module")
def single_cv():
    log = []
    refl = run_kink(P, 5.0, -0.577)
    trans = run_kink(P, 5.0, -0.578)
    v = find_critical_velocity(P, 5.0, 0.577, 0.578, tol=1e-4, log=log)
    return {"reflect": refl, "transmit": trans, "v_cr": v, "log": log}


@pytest.fixture(scope="module")
def saddle_pair_runs():
    return {1.69: run_kak(P, 1.69, 0.0), 1.70: run_kak(P, 1.70, 0.0)}


@pytest.fixture(scope="module")
def table_015():
    return scan_windows(P, 1.4, 0.235, 0.261, coarse_step=2e-4, edge_tol=1e-5)


@pytest.fixture(scope="module")
def table_020():
    return scan_windows(SimParams(omega=0.2), 2.0, 0.264, 0.290, coarse_step=2e-4, edge_tol=1e-5)


@pytest.fixture(scope="module")
def table_030():
    return scan_windows(SimParams(omega=0.3), 2.0, 0.359, 0.364, coarse_step=2e-4, edge_tol=1e-5)


@pytest.fixture(scope="module")
def single_tables():
    return single_tables_for(P)


@pytest.fixture(scope="module")
def pair_tables():
    return pair_tables_for(P)


@pytest.fixture(scope="module")
def cc_single_runs(single_tables):
    return {
        -3.0: (integrate_cc_single(single_tables, -3.0, 0.0, 10.0),
               run_kink(P.with_(t_max=10.0), -3.0, 0.0, stop_when_resolved=False)),
        3.0: (integrate_cc_single(single_tables, 3.0, 0.0, 10.0),
              run_kink(P.with_(t_max=10.0), 3.0, 0.0, stop_when_resolved=False)),
        5.0: (integrate_cc_single(single_tables, 5.0, -0.5, 60.0), run_kink(P, 5.0, -0.5)),
    }


@pytest.fixture(scope="module")
def cc_pair_runs(pair_tables):
    runs = {}
    for x0, v in ((2.0, 0.7), (1.4, 0.245)):
        runs[(x0, v)] = (integrate_cc_pair(pair_tables, x0, v, 300.0), run_kak(P, x0, v))
    return runs


# --- criteria -------------------------------------------------------------------

def test_criterion_01_tf_support():
    xs = tf_support_radius(0.15)
    record(1, abs(xs - 40 / 3) <= 1e-12, f"x_s = {xs!r}")


def test_criterion_02_ground_state_stable():
    s = linearization_spectrum(solve_ground_state(P), 0.04)
    ok = s.n_unstable == 0 and s.max_real_lambda < 1e-4
    record(2, ok, f"n_unstable = {s.n_unstable}, max Re lambda = {s.max_real_lambda:.2e}")


def test_criterion_03_kink_instability():
    s = kink_spectrum(P, 0.04)
    rates = s.unstable_rates()
    ok = rates.size == 1 and abs(rates[0] - 0.13) <= 0.01
    record(3, ok, f"real pairs {rates.size}, |lambda| = {np.array2string(rates, precision=5)}")


def test_criterion_04_homogeneous_oracle():
    s = linearization_spectrum(solve_kink(SimParams(omega=0.0, x_max=20.0)), 0.04)
    mu0, mu1 = s.mu[0], s.mu[1]
    ok = abs(mu0) < 1e-3 and abs(mu1 + 3.0) <= 0.01
    record(4, ok, f"mu0 = {mu0:.2e}, mu1 = {mu1:.6f}")


def test_criterion_05_equilibrium_separations():
    targets = {0.05: (2.173, 0.01), 0.1: (1.8669, 0.005), 0.15: (1.6907, 0.005), 0.2: (1.5661, 0.005)}
    parts, ok = [], True
    for om, (ref, tol) in targets.items():
        p = params_for(om)
        x_cr = stationary_kak(p).x_cr
        n = stationary_kak_spectrum(p).n_unstable
        good = abs(x_cr - ref) <= tol and n == 2
        ok &= good
        parts.append(f"{om}: {x_cr:.4f} (ref {ref} +- {tol}, {n} pairs){'' if good else ' FAIL'}")
    record(5, ok, "; ".join(parts))


def test_criterion_06_single_kink_critical_velocity(single_cv):
    r, t, v = single_cv["reflect"].outcome, single_cv["transmit"].outcome, single_cv["v_cr"]
    ok = r.kind == "reflected_no_collision" and t.kind == "transmitted" and 0.577 < v < 0.578
    record(6, ok, f"v=0.577 -> {r}, v=0.578 -> {t}, v_cr = {v:.5f}")


def test_criterion_07_saddle_dichotomy(saddle_pair_runs):
    a, b = saddle_pair_runs[1.69].outcome, saddle_pair_runs[1.70].outcome
    ok = a.kind in ("bion", "n_bounce") and b.kind == "reflected_no_collision"
    record(7, ok, f"x0=1.69 -> {a}, x0=1.70 -> {b}")


@pytest.mark.slow
def test_criterion_09_window_table(table_015):
    t = table_015
    t.check()
    dom = t.dominant(2)
    one = [r for r in t.rows if r.n == 1 and r.open_upper]
    thr = one[0].v1 if one else math.nan
    edges_ok = abs(dom.v1 - 0.24038) <= 0.002 and abs(dom.v2 - 0.24744) <= 0.002
    thr_ok = abs(thr - ONE_BOUNCE_015) <= 0.002

    def overlaps(a, b):
        return a.n == b[0] and a.v1 < b[2] and b[1] < a.v2

    closed = [r for r in t.rows if not (r.open_lower or r.open_upper)]
    # every published window wider than WIDE has a same-n window at its place, in order
    wide_ref = [w for w in REFERENCE_015 if w[2] - w[1] > WIDE]
    idx = [next((i for i, r in enumerate(closed) if overlaps(r, w)), None) for w in wide_ref]
    order_ok = None not in idx and idx == sorted(idx)
    # and every window of ours wider than WIDE is a published one
    extra = [r for r in closed if r.dv > WIDE and not any(overlaps(r, w) for w in REFERENCE_015)]
    found = sum(any(overlaps(r, w) for r in closed) for w in REFERENCE_015)
    ok = edges_ok and thr_ok and order_ok and not extra
    record(9, ok, f"2-bounce {dom.v1:.5f}-{dom.v2:.5f}, one-bounce > {thr:.5f}, "
                  f"wide rows matched {sum(i is not None for i in idx)}/{len(wide_ref)} in order={order_ok}, "
                  f"unmatched wide rows {len(extra)}, all rows located {found}/{len(REFERENCE_015)}")


@pytest.mark.slow
def test_criterion_10_window_shrinkage(table_020, table_030):
    w2 = table_020.dominant(2).dv
    w3 = table_030.dominant(2).dv
    ratio = w3 / w2
    ok = (abs(w2 - 0.00861) <= 0.3 * 0.00861 and abs(w3 - 0.00098) <= 0.5 * 0.00098
          and 0.05 <= ratio <= 0.2)
    record(10, ok, f"dv(0.2) = {w2:.5f}, dv(0.3) = {w3:.5f}, ratio = {ratio:.3f}")


@pytest.mark.slow
def test_criterion_08_energy_conservation(single_cv, saddle_pair_runs, table_015, table_020, table_030):
    recs = [single_cv["reflect"], single_cv["transmit"]] + [r for _, r in single_cv["log"]]
    recs += list(saddle_pair_runs.values())
    worst = max(r.energy_drift / max(1.0, abs(r.energies.mean())) for r in recs)
    points = table_015.points + table_020.points + table_030.points
    errors = sum(p.error is not None for p in points)
    worst = max([worst] + [p.energy_drift for p in points if p.error is None])
    ok = worst <= 1e-4 and errors == 0
    record(8, ok, f"{len(recs) + len(points)} runs, worst relative drift {worst:.2e}, failed runs {errors}")


def test_criterion_11_cc_single_fidelity(cc_single_runs):
    gaps = {}
    for x0 in (-3.0, 3.0):
        cc, pde = cc_single_runs[x0]
        t = pde.times[pde.times <= min(10.0, cc.t_final)]
        X = pde.separation[: t.size]
        gaps[x0] = float(np.max(np.abs(cc.at(t)[:, 0] - X)))
    cc, pde = cc_single_runs[5.0]
    tp_cc = min(cc.turning_points, default=math.nan)
    c = pde.separation
    tp_pde = float(np.nanmin(c))
    both_reflect = pde.outcome.kind == "reflected_no_collision" and cc.X[-1] > tp_cc > 0
    ok = all(g < 0.5 for g in gaps.values()) and both_reflect and abs(tp_cc - tp_pde) <= 0.3
    record(11, ok, f"max|dX| t<=10: x0=-3 {gaps[-3.0]:.3f}, x0=3 {gaps[3.0]:.3f}; "
                   f"(5, 0.5) turning points CC {tp_cc:.3f} PDE {tp_pde:.3f}, "
                   f"gap {abs(tp_cc - tp_pde):.3f}, both reflect {both_reflect}")


def test_criterion_13_cc_pair_qualitative(cc_pair_runs):
    want = {(2.0, 0.7): 1, (1.4, 0.245): 2}
    parts, ok = [], True
    for key, n in want.items():
        cc, pde = cc_pair_runs[key]
        good = cc.outcome.bounces == n and pde.outcome.bounces == n
        ok &= good
        parts.append(f"{key}: CC {cc.outcome}, PDE {pde.outcome}")
    record(13, ok, "; ".join(parts))


def test_criterion_12_cc_energy(cc_single_runs, cc_pair_runs):
    ds = max(cc.energy_drift for cc, _ in cc_single_runs.values())
    dp = max(cc.energy_drift for cc, _ in cc_pair_runs.values())
    record(12, ds <= 1e-6 and dp <= 1e-5, f"single drift {ds:.2e}, pair drift {dp:.2e}")


def test_criterion_14_saddle_dwell():
    rec = run_kink(P, 0.0, 0.0)
    X = rec.separation
    early = rec.times <= 150.0
    held = bool(np.all(np.abs(X[early]) < 0.1))
    escaped = rec.outcome.kind in ("expelled_left", "expelled_right")
    ok = held and escaped and rec.dwell_time >= 150.0
    record(14, ok, f"dwell {rec.dwell_time:.1f}, outcome {rec.outcome} at t = {rec.t_final:.1f}")

"""Compute the reference values used by the test suite and freeze them to JSON.

Nothing here imports ``trapkink``: every number comes from an independent
route (closed forms, mpmath quadrature, collocation BVP solves, or a
brute-force second-order finite-difference eigensolve), so the tests compare two implementations.

    python scripts/compute_oracles.py            # rewrite tests/data/oracles.json
    python scripts/compute_oracles.py --check    # recompute and diff only
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import mpmath as mp
import numpy as np
from scipy.integrate import quad, solve_bvp
from scipy.linalg import eigh_tridiagonal

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"
mp.mp.dps = 30


def boosted_kink_energy(v: float, L: float = 30.0) -> float:
    """Energy of ``tanh(gamma (x - 0))`` moving at ``v`` on ``[-L, L]`` without a trap."""
    g = 1 / mp.sqrt(1 - mp.mpf(v) ** 2)

    def dens(x):
        s = mp.sech(g * x) ** 2
        u = mp.tanh(g * x)
        return 0.5 * ((v * g * s) ** 2 + (g * s) ** 2 + (u * u - 1) ** 2)

    return float(mp.quad(dens, [-L, -5, 0, 5, L]))


def kink_mass_closed_form(v: float) -> float:
    return float(mp.mpf(4) / 3 / mp.sqrt(1 - mp.mpf(v) ** 2))


def poschl_teller_fd(dx: float, L: float = 20.0, k: int = 3) -> np.ndarray:
    """Top ``k`` values of ``mu`` for ``chi'' - (4 - 6 sech^2 x) chi = mu chi``.

    Dense-free brute force: second-order three-point Laplacian with
    Dirichlet ends, solved as a tridiagonal symmetric problem.
    """
    x = np.arange(-L + dx, L - dx / 2, dx)
    diag = -2.0 / dx**2 - (4.0 - 6.0 / np.cosh(x) ** 2)
    off = np.full(x.size - 1, 1.0 / dx**2)
    w = eigh_tridiagonal(diag, off, eigvals_only=True, select="i",
                         select_range=(x.size - k, x.size - 1))
    return np.sort(w)[::-1]


def poschl_teller_extrapolated() -> list[float]:
    """Richardson extrapolation of two second-order solves."""
    a = poschl_teller_fd(0.02)
    b = poschl_teller_fd(0.01)
    return list((4 * b - a) / 3)


def ground_state_bvp(omega: float, L: float = 30.0):
    """Trapped ground state by collocation on ``[0, L]`` with ``u'(0) = u'(L) = 0``."""
    x = np.linspace(0.0, L, 3001)
    u0 = np.sqrt(np.clip(1 - (omega * x / 2) ** 2, 0.02, None))
    y0 = np.vstack([u0, np.gradient(u0, x)])

    def f(x, y):
        return np.vstack([y[1], 2 * y[0] * (y[0] ** 2 - 1) + 0.5 * omega**2 * x**2 * y[0]])

    def bc(ya, yb):
        return np.array([ya[1], yb[1]])

    sol = solve_bvp(f, bc, x, y0, tol=1e-10, max_nodes=200000)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol


def ground_state_oracle(omega: float) -> dict:
    sol = ground_state_bvp(omega)
    u = lambda x: sol.sol(abs(x))[0]
    a0 = quad(lambda x: u(x) ** 2 / np.cosh(x) ** 4, 0, 20, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    xs = np.linspace(0, 30, 30001)
    tf = np.sqrt(np.clip(1 - (omega * xs / 2) ** 2, 0, None))
    k = int(np.argmax(np.abs(sol.sol(xs)[0] - tf)))
    return {"u0": float(u(0.0)), "a0_at_0": float(a0), "argmax_dev_tf": float(xs[k]),
            "u_at_10": float(u(10.0))}


def compute() -> dict:
    return {
        "boosted_kink_energy": {str(v): boosted_kink_energy(v) for v in (0.0, 0.3, 0.5)},
        "kink_mass_closed_form": {str(v): kink_mass_closed_form(v) for v in (0.0, 0.3, 0.5)},
        "poschl_teller_mu": poschl_teller_extrapolated(),
        "vacuum_zero_field_energy": 30.0,
        "ground_state_bvp": {"0.15": ground_state_oracle(0.15), "0.2": ground_state_oracle(0.2)},
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true")
    args = ap.parse_args()
    data = compute()
    if args.check:
        old = json.loads(OUT.read_text())
        print(json.dumps({"frozen": old, "recomputed": data}, indent=2))
        return
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()

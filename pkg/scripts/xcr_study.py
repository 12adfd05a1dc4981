"""Equilibrium half-separation of the stationary pair versus omega.

Prints the refined antikink zero, the ansatz seed and the number of real
eigenvalue pairs of the linearization for each trap frequency.

    python scripts/xcr_study.py --omegas 0.05 0.1 0.15 0.2 0.25 0.3
"""

import argparse
from pathlib import Path

from trapkink import io
from trapkink.model import SimParams
from trapkink.spectra import stationary_kak_spectrum
from trapkink.stationary import stationary_kak


def params_for(omega, dx):
    # keep the trap support plus a margin inside the box
    x_max = max(30.0, 5.0 * round((2.0 / omega + 10.0) / 5.0))
    return SimParams(omega=omega, dx=dx, x_max=x_max)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omegas", type=float, nargs="+", default=[0.05, 0.1, 0.15, 0.2, 0.25, 0.3])
    ap.add_argument("--dx", type=float, nargs="+", default=[0.02],
                    help="several values give a grid-refinement table")
    ap.add_argument("--no-spectrum", action="store_true")
    ap.add_argument("--out", type=Path, default=Path("out/xcr.csv"))
    a = ap.parse_args(argv)

    rows = []
    print(f"{'omega':>6} {'dx':>6} {'x_cr':>9} {'seed':>9} {'pairs':>5}")
    for om in a.omegas:
        for dx in a.dx:
            p = params_for(om, dx)
            eq = stationary_kak(p)
            n = -1 if a.no_spectrum else stationary_kak_spectrum(p, max(0.04, dx)).n_unstable
            rows.append((om, dx, eq.x_cr, eq.seed_x0, n))
            print(f"{om:6.3f} {dx:6.3f} {eq.x_cr:9.5f} {eq.seed_x0:9.5f} {n:5d}")
    a.out.parent.mkdir(parents=True, exist_ok=True)
    io.write_csv(a.out, ["omega", "dx", "x_cr", "seed_x0", "n_unstable"], rows)


if __name__ == "__main__":
    main()

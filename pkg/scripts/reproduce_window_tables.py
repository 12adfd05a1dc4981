"""Bounce-window tables for the kink-antikink pair.

    python scripts/reproduce_window_tables.py                 # omega 0.15, x0 1.4
    python scripts/reproduce_window_tables.py --set shrink    # omega 0.2 and 0.3, x0 2
    python scripts/reproduce_window_tables.py --omega 0.25 --x0 2 --vmin 0.3 --vmax 0.33

Each table is printed and written as text and CSV under ``--out``.
"""

import argparse
import time
from pathlib import Path

from trapkink import io
from trapkink.model import SimParams
from trapkink.scan import WindowTable, scan_windows, verify_midpoints

PRESETS = {
    "main": [(0.15, 1.4, 0.235, 0.261)],
    "shrink": [(0.2, 2.0, 0.264, 0.290), (0.3, 2.0, 0.359, 0.364)],
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--set", choices=sorted(PRESETS), default="main")
    ap.add_argument("--omega", type=float)
    ap.add_argument("--x0", type=float, default=2.0)
    ap.add_argument("--vmin", type=float)
    ap.add_argument("--vmax", type=float)
    ap.add_argument("--step", type=float, default=2e-4)
    ap.add_argument("--edge-tol", type=float, default=1e-5)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--verify", action="store_true", help="rerun every window midpoint")
    ap.add_argument("--out", type=Path, default=Path("out/windows"))
    a = ap.parse_args(argv)

    if a.omega is not None:
        if a.vmin is None or a.vmax is None:
            ap.error("--omega needs --vmin and --vmax")
        jobs = [(a.omega, a.x0, a.vmin, a.vmax)]
    else:
        jobs = PRESETS[a.set]
    a.out.mkdir(parents=True, exist_ok=True)
    for omega, x0, lo, hi in jobs:
        p = SimParams(omega=omega)
        t0 = time.perf_counter()
        table = scan_windows(p, x0, lo, hi, a.step, a.edge_tol, threads=a.threads)
        table.check()
        stem = a.out / f"windows_om{omega:g}_x{x0:g}"
        stem.with_suffix(".txt").write_text(table.to_text())
        io.write_csv(stem.with_suffix(".csv"), WindowTable.CSV_COLUMNS, table.csv_rows())
        print(table.to_text(), end="")
        print(f"{len(table.points)} runs in {time.perf_counter() - t0:.0f} s")
        if a.verify:
            bad = verify_midpoints(table, p, x0, threads=a.threads)
            print("midpoints reproduce" if not bad else f"midpoint mismatch: {bad}")
        print()


if __name__ == "__main__":
    main()

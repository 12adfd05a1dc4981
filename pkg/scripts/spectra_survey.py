"""Linear stability of the ground state, the trapped kink and the stationary pair.

    python scripts/spectra_survey.py --omegas 0.1 0.15 0.2 0.3
"""

import argparse

from trapkink.model import SimParams
from trapkink.spectra import (chi1_frequency, kink_spectrum, linearization_spectrum,
                              stationary_kak_spectrum)
from trapkink.stationary import solve_ground_state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omegas", type=float, nargs="+", default=[0.1, 0.15, 0.2, 0.3])
    ap.add_argument("--spectral-dx", type=float, default=0.04)
    a = ap.parse_args(argv)

    print(f"{'omega':>6} {'ground max Re':>14} {'kink rates':>22} {'chi1 freq':>10} {'pair rates':>26}")
    for om in a.omegas:
        p = SimParams(omega=om, x_max=max(30.0, 5.0 * round((2.0 / om + 10.0) / 5.0)))
        g = linearization_spectrum(solve_ground_state(p), a.spectral_dx)
        k = kink_spectrum(p, a.spectral_dx)
        s = stationary_kak_spectrum(p, a.spectral_dx)
        kr = " ".join(f"{r:.5f}" for r in k.unstable_rates())
        sr = " ".join(f"{r:.5f}" for r in s.unstable_rates())
        print(f"{om:6.3f} {g.max_real_lambda:14.2e} {kr:>22} {chi1_frequency(k):10.5f} {sr:>26}")


if __name__ == "__main__":
    main()

"""Trapped phi^4 model: potential, its field derivatives, Thomas-Fermi background.

The field obeys ``u_tt = u_xx - dV/du`` with

    V(u, x) = 1/2 (u^2 - 1)^2 - 1/2 + 1/4 omega^2 x^2 u^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


class ParameterError(ValueError):
    """Raised for inconsistent simulation parameters."""


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical controls shared by every solver.

    ``dt`` defaults to ``dx / 2`` so that refining the grid keeps the
    RK4 Courant ratio fixed.
    """

    omega: float = 0.15
    dx: float = 0.02
    x_max: float = 30.0
    dt: float | None = None
    t_max: float = 400.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    n: int = field(init=False)

    def __post_init__(self):
        if self.dx <= 0 or self.x_max <= 0:
            raise ParameterError("dx and x_max must be positive")
        if self.omega < 0:
            raise ParameterError("omega must be non-negative")
        if self.dt is None:
            object.__setattr__(self, "dt", 0.5 * self.dx)
        if self.dt <= 0:
            raise ParameterError("dt must be positive")
        half = self.x_max / self.dx
        m = round(half)
        if abs(half - m) > 1e-8 * max(1.0, half):
            raise ParameterError(
                f"x_max/dx = {half} is not an integer; the grid would not be symmetric"
            )
        n = 2 * m + 1
        if n < 5:
            raise ParameterError("grid needs at least 5 points")
        object.__setattr__(self, "n", n)
        if self.omega > 0 and self.x_max < 2.0 / self.omega + 5.0:
            raise ParameterError(
                f"x_max={self.x_max} does not cover the TF support 2/omega="
                f"{2.0 / self.omega:.4g} plus a margin of 5"
            )

    @property
    def x_s(self) -> float:
        """TF support radius, or the domain half-width when untrapped."""
        return tf_support_radius(self.omega) if self.omega > 0 else self.x_max

    def with_(self, **changes) -> "SimParams":
        changes.setdefault("dt", None if "dx" in changes else self.dt)
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "dx": self.dx,
            "x_max": self.x_max,
            "dt": self.dt,
            "t_max": self.t_max,
            "newton_tol": self.newton_tol,
            "newton_max_iter": self.newton_max_iter,
        }


def potential_v(u, x, omega):
    return 0.5 * (u * u - 1.0) ** 2 - 0.5 + 0.25 * omega**2 * x * x * u * u


def potential_du(u, x, omega):
    return 2.0 * u * (u * u - 1.0) + 0.5 * omega**2 * x * x * u


def potential_d2u(u, x, omega):
    return 6.0 * u * u - 2.0 + 0.5 * omega**2 * x * x


def tf_support_radius(omega: float) -> float:
    if omega <= 0:
        raise ParameterError("the Thomas-Fermi support needs omega > 0")
    return 2.0 / omega


def tf_profile(x, omega: float):
    """Thomas-Fermi background ``max(0, sqrt(1 - omega^2 x^2 / 4))``."""
    if omega <= 0:
        raise ParameterError("the Thomas-Fermi profile needs omega > 0")
    arg = 1.0 - 0.25 * omega**2 * np.asarray(x, dtype=float) ** 2
    out = np.sqrt(np.clip(arg, 0.0, None))
    return float(out) if np.ndim(out) == 0 else out


def lorentz_gamma(v: float) -> float:
    if not abs(v) < 1.0:
        raise ParameterError(f"|v| must be below 1, got {v}")
    return 1.0 / math.sqrt(1.0 - v * v)
